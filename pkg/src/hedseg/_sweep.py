"""Asynchronous best-response sweep over CSR arrays.

Written in the numba-compatible subset so the same source serves as the
pure-Python fallback and, when numba is importable, the compiled path.
"""

import numpy as np

FRESH = -2


def sweep(indptr, indices, weights, labels, sizes, free_ids, n_free, gamma, tol,
          acc, stamp, touched, moves):
    """One pass over nodes 0..n-1, moving each node to its best community.

    ``labels`` and ``sizes`` are updated in place. ``free_ids[:n_free]`` is
    a stack of unused community ids. Each move is appended to ``moves`` as
    (node, old, new). Returns (move count, new n_free).
    """
    n = labels.shape[0]
    n_moves = 0
    for v in range(n):
        cur = labels[v]
        nt = 0
        for j in range(indptr[v], indptr[v + 1]):
            c = labels[indices[j]]
            if stamp[c] != v + 1:
                stamp[c] = v + 1
                acc[c] = 0.0
                touched[nt] = c
                nt += 1
            acc[c] += weights[j]

        d_cur = acc[cur] if stamp[cur] == v + 1 else 0.0
        stay = d_cur - gamma * (sizes[cur] - 1)

        best = -np.inf
        best_c = -1
        for t in range(nt):
            c = touched[t]
            if c == cur:
                continue
            p = acc[c] - gamma * sizes[c]
            if p > best or (p == best and c < best_c):
                best = p
                best_c = c
        # a fresh singleton loses every tie against an existing community
        if sizes[cur] > 1 and 0.0 > best:
            best = 0.0
            best_c = FRESH

        if best_c == -1 or not best > stay + tol:
            continue

        if best_c == FRESH:
            n_free -= 1
            best_c = free_ids[n_free]
        sizes[cur] -= 1
        if sizes[cur] == 0:
            free_ids[n_free] = cur
            n_free += 1
        sizes[best_c] += 1
        labels[v] = best_c
        moves[n_moves, 0] = v
        moves[n_moves, 1] = cur
        moves[n_moves, 2] = best_c
        n_moves += 1
    return n_moves, n_free


try:
    import numba

    sweep_jit = numba.njit(cache=True, nogil=True)(sweep)
except ImportError:  # pragma: no cover - numba is optional
    sweep_jit = None

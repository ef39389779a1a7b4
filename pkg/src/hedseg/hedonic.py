"""Hedonic coalition formation on a weighted graph.

A node ``v`` considering community ``C`` (evaluated as if ``v`` belonged
to it) receives

    potential = (1 - gamma) * d(v, C) - gamma * dbar(v, C) = d(v, C) - gamma * (|C| - 1)

with ``d`` the total edge weight from ``v`` into ``C`` and
``dbar = (|C| - 1) - d``. Nodes move asynchronously to a strictly better
community (an existing neighbouring one or a fresh singleton) until a full
sweep makes no move. Every accepted move raises the CPM quality
``sum_C [W_int(C) - gamma * |C|(|C|-1)/2]`` by exactly the node's gain.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np
from scipy import sparse

from hedseg import _sweep
from hedseg.pixelgraph import WeightedGraph, graph_density

log = logging.getLogger(__name__)

STRICT_TOL = 1e-9
DEFAULT_MAX_SWEEPS = 10_000

SINGLETON = "singleton"
ONE_COALITION = "one_coalition"


class PartitionError(ValueError):
    pass


@dataclass(frozen=True)
class Resolution:
    gamma: float
    b: int | None = None
    kappa: int | None = None

    def __post_init__(self):
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma must lie in [0, 1], got {self.gamma}")
        if (self.b is None) != (self.kappa is None):
            raise ValueError("b and kappa must be given together")
        if self.kappa is not None:
            if self.kappa <= 0 or self.b < 0 or self.b > self.kappa:
                raise ValueError("need 0 <= b <= kappa and kappa > 0")
            if self.gamma != self.b / self.kappa:
                raise ValueError("gamma disagrees with b / kappa")

    @classmethod
    def rational(cls, b: int, kappa: int) -> Resolution:
        return cls(b / kappa, b, kappa)

    @classmethod
    def coerce(cls, res) -> Resolution:
        if isinstance(res, Resolution):
            return res
        if isinstance(res, Fraction):
            return cls.rational(res.numerator, res.denominator)
        return cls(float(res))


@dataclass(frozen=True)
class Partition:
    """Community id per node. Ids are arbitrary non-negative integers."""

    labels: np.ndarray

    def __post_init__(self):
        labels = np.ascontiguousarray(self.labels, dtype=np.int64).ravel()
        if labels.size and labels.min() < 0:
            raise PartitionError("community ids must be non-negative")
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)

    @classmethod
    def singletons(cls, n: int) -> Partition:
        return cls(np.arange(n))

    @classmethod
    def one_coalition(cls, n: int) -> Partition:
        return cls(np.zeros(n, dtype=np.int64))

    @property
    def node_count(self) -> int:
        return self.labels.size

    @property
    def communities(self) -> dict[int, int]:
        """Registry of community id -> member count."""
        ids, counts = np.unique(self.labels, return_counts=True)
        return dict(zip(ids.tolist(), counts.tolist()))

    @property
    def K(self) -> int:
        return int(np.unique(self.labels).size)

    @property
    def next_fresh_id(self) -> int:
        return int(self.labels.max()) + 1 if self.labels.size else 0

    def members(self, c: int) -> np.ndarray:
        return np.flatnonzero(self.labels == c)

    def renumbered(self) -> Partition:
        """Ids relabelled 0..K-1 in order of first appearance."""
        _, first, inv = np.unique(self.labels, return_index=True, return_inverse=True)
        rank = np.empty(first.size, dtype=np.int64)
        rank[np.argsort(first, kind="stable")] = np.arange(first.size)
        return Partition(rank[inv])

    def same_grouping(self, other: Partition) -> bool:
        return np.array_equal(self.renumbered().labels, other.renumbered().labels)


@dataclass
class CommunityView:
    """What node ``v`` sees of a community it would belong to."""

    d: float
    size: int  # |C| counting v

    @property
    def dbar(self) -> float:
        return (self.size - 1) - self.d


@dataclass
class EquilibriumResult:
    partition: Partition
    sweeps: int
    converged: bool
    moves: int
    move_log: list[tuple[int, int, int]] | None = field(default=None, repr=False)


def potential(view: CommunityView, res) -> float:
    gamma = Resolution.coerce(res).gamma
    return (1.0 - gamma) * view.d - gamma * view.dbar


def potential_compact(view: CommunityView, res) -> float:
    gamma = Resolution.coerce(res).gamma
    return view.d - gamma * (view.size - 1)


def _check(part: Partition, g: WeightedGraph) -> None:
    if part.node_count != g.node_count:
        raise PartitionError(
            f"partition covers {part.node_count} nodes, graph has {g.node_count}"
        )


def candidate_views(v: int, part: Partition, g: WeightedGraph) -> dict[int, CommunityView]:
    """Views of v's own community and of every community holding a neighbour.

    Sizes are taken as if ``v`` joined (or stayed in) the community.
    """
    labels = part.labels
    cur = int(labels[v])
    nbrs, wts = g.neighbors(v)
    d: dict[int, float] = {cur: 0.0}
    for u, w in zip(nbrs.tolist(), wts.tolist()):
        c = int(labels[u])
        d[c] = d.get(c, 0.0) + w
    sizes = part.communities
    return {c: CommunityView(dc, sizes[c] + (c != cur)) for c, dc in d.items()}


def best_move(v: int, part: Partition, g: WeightedGraph, res) -> int | None:
    """Community id node ``v`` should move to, or None to stay.

    A fresh singleton is reported as ``part.next_fresh_id``.
    """
    _check(part, g)
    res = Resolution.coerce(res)
    views = candidate_views(v, part, g)
    cur = int(part.labels[v])
    stay = potential(views[cur], res)
    best, best_c = -np.inf, None
    for c in sorted(views):
        if c == cur:
            continue
        p = potential(views[c], res)
        if p > best:
            best, best_c = p, c
    if views[cur].size > 1 and 0.0 > best:
        best, best_c = 0.0, part.next_fresh_id
    if best_c is not None and best > stay + STRICT_TOL:
        return best_c
    return None


def _initial_labels(init, n: int) -> np.ndarray:
    if isinstance(init, Partition):
        if init.node_count != n:
            raise PartitionError(f"initial partition has {init.node_count} nodes, need {n}")
        return init.renumbered().labels.copy()
    if init in (SINGLETON, "singletons"):
        return np.arange(n, dtype=np.int64)
    if init in (ONE_COALITION, "one"):
        return np.zeros(n, dtype=np.int64)
    raise ValueError(f"unknown init {init!r}")


def run_to_equilibrium(
    g: WeightedGraph,
    res,
    init=SINGLETON,
    max_sweeps: int = DEFAULT_MAX_SWEEPS,
    record_moves: bool = False,
    use_jit: bool = True,
) -> EquilibriumResult:
    """Best-response dynamics in ascending node order until no node moves."""
    if max_sweeps < 1:
        raise ValueError("max_sweeps must be positive")
    n = g.node_count
    if n == 0:
        raise ValueError("graph has no nodes")
    res = Resolution.coerce(res)

    labels = _initial_labels(init, n)
    sizes = np.bincount(labels, minlength=n).astype(np.int64)
    free = np.flatnonzero(sizes == 0)[::-1].astype(np.int64)
    free_ids = np.zeros(n, dtype=np.int64)
    free_ids[: free.size] = free
    n_free = free.size

    acc = np.zeros(n, dtype=np.float64)
    stamp = np.zeros(n, dtype=np.int64)
    touched = np.zeros(n, dtype=np.int64)
    moves = np.zeros((n, 3), dtype=np.int64)
    indptr = np.ascontiguousarray(g.indptr, dtype=np.int64)
    indices = np.ascontiguousarray(g.indices, dtype=np.int64)
    weights = np.ascontiguousarray(g.weights, dtype=np.float64)

    kernel = _sweep.sweep_jit if (use_jit and _sweep.sweep_jit is not None) else _sweep.sweep
    move_log = [] if record_moves else None
    total = 0
    converged = False
    sweeps = 0
    while sweeps < max_sweeps:
        sweeps += 1
        stamp.fill(0)
        n_moves, n_free = kernel(
            indptr, indices, weights, labels, sizes, free_ids, n_free,
            res.gamma, STRICT_TOL, acc, stamp, touched, moves,
        )
        n_moves = int(n_moves)
        total += n_moves
        if move_log is not None:
            move_log.extend(map(tuple, moves[:n_moves].tolist()))
        if n_moves == 0:
            converged = True
            break
    if not converged:
        log.warning("no equilibrium after %d sweeps (gamma=%g)", max_sweeps, res.gamma)
    return EquilibriumResult(Partition(labels), sweeps, converged, total, move_log)


def _membership_degrees(part: Partition, g: WeightedGraph):
    """Sparse (node x community) matrix of d(v, C), excluding v itself."""
    src = np.repeat(np.arange(g.node_count), np.diff(g.indptr))
    ncomm = int(part.labels.max()) + 1
    return sparse.csr_matrix(
        (g.weights, (src, part.labels[g.indices])), shape=(g.node_count, ncomm)
    )


def node_gains(part: Partition, g: WeightedGraph, res) -> np.ndarray:
    """Best available gain over staying, per node (vectorised).

    Candidates are every community with a neighbour of ``v`` plus a fresh
    singleton.
    """
    _check(part, g)
    gamma = Resolution.coerce(res).gamma
    labels = part.labels
    n = g.node_count
    sizes = np.bincount(labels)
    D = _membership_degrees(part, g).tocoo()
    d_cur = np.zeros(n)
    own = D.col == labels[D.row]
    d_cur[D.row[own]] = D.data[own]
    stay = d_cur - gamma * (sizes[labels] - 1)

    best = np.zeros(n)  # fresh singleton
    other = ~own
    pot = D.data[other] - gamma * sizes[D.col[other]]
    np.maximum.at(best, D.row[other], pot)
    return best - stay


def verify_equilibrium(part: Partition, g: WeightedGraph, res) -> list[int]:
    """Nodes that could strictly improve by moving; empty iff stable."""
    gains = node_gains(part, g, res)
    return np.flatnonzero(gains > STRICT_TOL).tolist()


def cpm_quality(part: Partition, g: WeightedGraph, res) -> float:
    _check(part, g)
    gamma = Resolution.coerce(res).gamma
    u, v, w = g.edge_list()
    internal = float(w[part.labels[u] == part.labels[v]].sum())
    sizes = np.bincount(part.labels).astype(np.float64)
    return internal - gamma * float((sizes * (sizes - 1) / 2.0).sum())


def resolution_from_density(g: WeightedGraph, c) -> Resolution:
    if not c > 0:
        raise ValueError("c must be positive")
    n, m = g.node_count, g.edge_count
    gamma = graph_density(g) / c
    if gamma > 1.0:
        raise ValueError(f"density/c = {gamma} exceeds 1")
    if float(c).is_integer():
        b, kappa = 2 * m, int(c) * n * (n - 1)
        return Resolution(b / kappa, b, kappa)
    return Resolution(gamma)


def write_partition(part: Partition, path) -> None:
    """``node_id community_id`` per line, ids renumbered by first appearance."""
    labels = part.renumbered().labels
    Path(path).write_text("".join(f"{i} {c}\n" for i, c in enumerate(labels.tolist())))


def read_partition(path) -> Partition:
    pairs = [line.split() for line in Path(path).read_text().splitlines() if line.strip()]
    nodes = np.array([int(p[0]) for p in pairs], dtype=np.int64)
    comms = np.array([int(p[1]) for p in pairs], dtype=np.int64)
    if not np.array_equal(np.sort(nodes), np.arange(nodes.size)):
        raise PartitionError(f"{path}: node ids must cover 0..n-1 exactly once")
    labels = np.empty(nodes.size, dtype=np.int64)
    labels[nodes] = comms
    return Partition(labels)

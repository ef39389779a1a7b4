"""Built-in verification suite run by ``hedseg selftest``."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from hedseg.hedonic import (
    ONE_COALITION,
    SINGLETON,
    run_to_equilibrium,
    verify_equilibrium,
)
from hedseg.pixelgraph import WeightedGraph
from hedseg.projection import (
    f1_single,
    f1_union_greedy,
    pathological_instance,
    union_oracle,
)

ORACLE_AGREEMENT_MIN = 0.95


@dataclass
class Check:
    name: str
    ok: bool
    detail: str = ""

    def line(self) -> str:
        return f"{'PASS' if self.ok else 'FAIL'}  {self.name}" + (f"  ({self.detail})" if self.detail else "")


def random_graph(n: int, p: float, rng, weighted: bool = True, connected: bool = False):
    """Erdos-Renyi graph; weights uniform on (0, 1] or all ones.

    With ``connected`` a random spanning path is added first.
    """
    iu, ju = np.triu_indices(n, 1)
    keep = rng.random(iu.size) < p
    pairs = set(zip(iu[keep].tolist(), ju[keep].tolist()))
    if connected:
        perm = rng.permutation(n)
        for a, b in zip(perm[:-1].tolist(), perm[1:].tolist()):
            pairs.add((min(a, b), max(a, b)))
    pairs = sorted(pairs)
    u = np.array([a for a, _ in pairs], dtype=np.int64)
    v = np.array([b for _, b in pairs], dtype=np.int64)
    if weighted:
        w = 1.0 - rng.random(len(pairs))  # (0, 1]
    else:
        w = np.ones(len(pairs))
    return WeightedGraph.from_edges(n, u, v, w)


def random_labelling(rng, k_max: int = 12, size: int = 20 * 20):
    """Random blob-like labelling plus a random GT mask over a square grid."""
    side = int(round(size ** 0.5))
    k = int(rng.integers(1, k_max + 1))
    seeds = rng.integers(0, side, size=(k, 2))
    yy, xx = np.mgrid[0:side, 0:side]
    dist = (yy[..., None] - seeds[:, 0]) ** 2 + (xx[..., None] - seeds[:, 1]) ** 2
    labels = np.argmin(dist + rng.random(dist.shape) * side, axis=2)
    cy, cx = rng.integers(0, side, size=2)
    r = rng.integers(2, side // 2 + 1)
    gt = (yy - cy) ** 2 + (xx - cx) ** 2 <= r * r
    return labels, gt


TOY_SIZES = (40, 35, 50)
TOY_TP = (30, 25, 10)
TOY_GT = 100


def toy_instance():
    """Communities of size 40, 35, 50 overlapping a 100-pixel foreground by
    30, 25 and 10 pixels.

    The other 35 foreground pixels sit in a mostly-background community
    (label 3, 35 + 1000 pixels) that no sensible union would take.
    """
    labels, gt = [], []
    for k, (s, t) in enumerate(zip(TOY_SIZES, TOY_TP)):
        labels += [k] * s
        gt += [True] * t + [False] * (s - t)
    rest = TOY_GT - sum(TOY_TP)
    labels += [3] * (rest + 1000)
    gt += [True] * rest + [False] * 1000
    return np.array(labels), np.array(gt)


def check_toy() -> Check:
    labels, gt = toy_instance()
    lab, rep = f1_single(labels, gt)
    union = f1_union_greedy(labels, gt)
    ok = (
        lab == 0
        and abs(rep.f1 - 60 / 140) < 1e-12
        and abs(union.score - 110 / 175) < 1e-12
        and union.labels == (0, 1)
    )
    return Check("toy example F1 single/union", ok,
                 f"single={rep.f1:.4f} union={union.score:.4f} S={union.labels}")


def check_prop1(ms=(1, 3, 9, 99)) -> Check:
    bad = []
    for m in ms:
        labels, gt = pathological_instance(m, m * 4)
        _, rep = f1_single(labels, gt)
        union = f1_union_greedy(labels, gt)
        if abs(rep.f1 - 2 / (m + 1)) > 1e-12 or union.score != 1.0:
            bad.append(m)
    return Check(f"pathological instances m in {list(ms)}", not bad, f"failing m={bad}" if bad else "")


def check_extreme_gamma(n_graphs: int = 20, seed: int = 7) -> Check:
    rng = np.random.default_rng(seed)
    bad = 0
    for _ in range(n_graphs):
        g = random_graph(30, 0.15, rng, connected=True)
        if run_to_equilibrium(g, 0.0, init=ONE_COALITION).partition.K != 1:
            bad += 1
        if run_to_equilibrium(g, 1.0, init=SINGLETON).partition.K != g.node_count:
            bad += 1
    return Check("extreme gamma (0 -> grand coalition, 1 -> singletons)", bad == 0,
                 f"{bad} failures" if bad else "")


def check_equilibria(n_graphs: int = 50, seed: int = 11) -> Check:
    rng = np.random.default_rng(seed)
    bad = 0
    runs = 0
    for _ in range(n_graphs):
        g = random_graph(30, 0.3, rng)
        for gamma in (0.05, 0.2, 0.5):
            for init in (SINGLETON, ONE_COALITION):
                r = run_to_equilibrium(g, gamma, init=init)
                runs += 1
                if not r.converged or verify_equilibrium(r.partition, g, gamma):
                    bad += 1
    return Check("equilibrium verification on random graphs", bad == 0, f"{bad}/{runs} unstable")


def check_greedy_vs_oracle(n_cases: int = 200, seed: int = 3) -> Check:
    rng = np.random.default_rng(seed)
    equal = dominated = above_oracle = 0
    for _ in range(n_cases):
        labels, gt = random_labelling(rng)
        g = f1_union_greedy(labels, gt).score
        o = union_oracle(labels, gt).score
        s = f1_single(labels, gt)[1].f1
        equal += g >= o
        above_oracle += g > o
        dominated += g >= s
    rate = equal / n_cases
    ok = above_oracle == 0 and dominated == n_cases and rate >= ORACLE_AGREEMENT_MIN
    return Check("greedy union vs exhaustive oracle", ok,
                 f"agreement {rate:.3f}, dominance {dominated}/{n_cases}")


def run_all() -> list[Check]:
    return [
        check_toy(),
        check_prop1(),
        check_extreme_gamma(),
        check_equilibria(),
        check_greedy_vs_oracle(),
    ]


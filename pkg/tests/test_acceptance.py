"""Acceptance suite. Prints one PASS/FAIL/SKIP line per criterion.

Run with ``pytest tests/test_acceptance.py`` (lines appear in the terminal
summary) or ``python tests/test_acceptance.py``.

Criterion 7 needs the full single-object archive: set HEDSEG_WEIZMANN_ROOT
to its root. Criteria 8 to 10 run on the bundled 10-image fixture.
"""

from __future__ import annotations

import os
import statistics
import time
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np
import pytest
from scipy.stats import spearmanr

from hedseg.fixtures import FIXTURE_DIR
from hedseg.harness import (
    DEFAULT_C,
    DEFAULT_C_GRID,
    EvalSettings,
    aggregate,
    load_dataset,
    mean_by_gamma_index,
    run_dataset,
)
from hedseg.hedonic import (
    ONE_COALITION,
    SINGLETON,
    Partition,
    Resolution,
    cpm_quality,
    run_to_equilibrium,
    verify_equilibrium,
)
from hedseg.projection import (
    f1,
    f1_single,
    f1_union_greedy,
    pathological_instance,
    union_oracle,
)
from hedseg.selftest import random_graph, random_labelling, toy_instance

DATASET_ENV = "HEDSEG_WEIZMANN_ROOT"

RESULTS: list[str] = []


@dataclass
class Outcome:
    number: int
    title: str
    ok: bool | None  # None = skipped
    detail: str
    seconds: float
    limit: float | None = None

    @property
    def passed(self) -> bool:
        return bool(self.ok) and (self.limit is None or self.seconds < self.limit)

    def line(self) -> str:
        if self.ok is None:
            status = "SKIP"
        else:
            status = "PASS" if self.passed else "FAIL"
        budget = f" / {self.limit:g}s" if self.limit else ""
        return f"[{status}] {self.number:>2}. {self.title}: {self.detail} ({self.seconds:.2f}s{budget})"


def timed(number, title, limit=None):
    def wrap(fn):
        def run() -> Outcome:
            t0 = time.perf_counter()
            ok, detail = fn()
            return Outcome(number, title, ok, detail, time.perf_counter() - t0, limit)
        run.__name__ = fn.__name__
        return run
    return wrap


@timed(1, "toy example exactness", limit=1.0)
def criterion_1():
    labels, gt = toy_instance()
    want = [Fraction(60, 140), Fraction(50, 135), Fraction(20, 150)]
    per = [f1(labels == k, gt).f1 for k in range(3)]
    lab, single = f1_single(labels, gt)
    union = f1_union_greedy(labels, gt)
    ok = (
        all(abs(p - float(w)) <= 1e-12 for p, w in zip(per, want))
        and lab == 0 and abs(single.f1 - 60 / 140) <= 1e-12
        and abs(union.score - 110 / 175) <= 1e-12
        and round(union.score, 2) == 0.63 and round(single.f1, 2) == 0.43
    )
    return ok, (f"per-community {[round(p, 4) for p in per]}, single {single.f1:.4f}, "
                f"union {union.score:.4f} over {union.labels}")


@timed(2, "pathological instances m=1..64", limit=5.0)
def criterion_2():
    worst, bad = 0.0, []
    for m in range(1, 65):
        labels, gt = pathological_instance(m, 2 * m)
        err = abs(f1_single(labels, gt)[1].f1 - 2 / (m + 1))
        worst = max(worst, err)
        if err > 1e-12 or f1_union_greedy(labels, gt).score != 1.0:
            bad.append(m)
    return not bad, f"max |single - 2/(m+1)| = {worst:.1e}, failing m = {bad or 'none'}"


@timed(3, "equilibrium soundness", limit=30.0)
def criterion_3():
    rng = np.random.default_rng(2024)
    runs = unstable = nonmono = 0
    moves = 0
    for _ in range(50):
        g = random_graph(30, 0.3, rng)
        for gamma in (0.05, 0.2, 0.5):
            for init in (SINGLETON, ONE_COALITION):
                r = run_to_equilibrium(g, gamma, init=init, record_moves=True)
                runs += 1
                if r.converged and verify_equilibrium(r.partition, g, gamma):
                    unstable += 1
                labels = (np.arange(30) if init == SINGLETON else np.zeros(30, dtype=np.int64)).copy()
                prev = cpm_quality(Partition(labels), g, gamma)
                for v, _, new in r.move_log:
                    labels[v] = new
                    q = cpm_quality(Partition(labels), g, gamma)
                    nonmono += not q > prev
                    prev = q
                moves += len(r.move_log)
    ok = unstable == 0 and nonmono == 0
    return ok, f"{runs} runs, {unstable} unstable, {moves} moves, {nonmono} non-increasing"


@timed(4, "extreme gamma", limit=5.0)
def criterion_4():
    rng = np.random.default_rng(4)
    low = high = 0
    for _ in range(20):
        g = random_graph(40, 0.1, rng, connected=True)
        low += run_to_equilibrium(g, 0.0, init=ONE_COALITION).partition.K == 1
        high += run_to_equilibrium(g, 1.0, init=SINGLETON).partition.K == g.node_count
    return low == high == 20, f"gamma=0 -> K=1 on {low}/20, gamma=1 -> K=|V| on {high}/20"


@timed(5, "greedy union vs oracle", limit=60.0)
def criterion_5():
    rng = np.random.default_rng(5)
    n = 200
    le = ge = dom = 0
    for _ in range(n):
        labels, gt = random_labelling(rng, k_max=12)
        g = f1_union_greedy(labels, gt).score
        o = union_oracle(labels, gt).score
        s = f1_single(labels, gt)[1].f1
        le += g <= o
        ge += g >= o
        dom += g >= s
    ok = le == n and ge >= 0.95 * n and dom == n
    return ok, f"greedy <= oracle {le}/{n}, equal {ge}/{n} ({ge / n:.1%}), >= single {dom}/{n}"


@timed(6, "convergence bound", limit=30.0)
def criterion_6():
    rng = np.random.default_rng(6)
    worst = 0.0
    bad = 0
    for _ in range(20):
        n = int(rng.integers(10, 40))
        g = random_graph(n, 0.25, rng, weighted=False)
        kappa = int(rng.integers(1, 101))
        b = int(rng.integers(0, kappa + 1))
        r = run_to_equilibrium(g, Resolution.rational(b, kappa))
        bound = 2 * kappa * n * n
        worst = max(worst, r.moves / bound)
        bad += (not r.converged) or r.moves > bound
    return bad == 0, f"{bad} violations, max moves/bound = {worst:.4f}"


@timed(7, "dataset-scale soft reproduction (c=900)")
def criterion_7():
    root = os.environ.get(DATASET_ENV)
    if not root:
        return None, f"${DATASET_ENV} not set; desk-scale fallback is criteria 8-9 on the fixture"
    index = load_dataset(root)
    recs = run_dataset(index, EvalSettings(), c_values=(DEFAULT_C,))
    s = aggregate(recs)
    ok = (
        s.errors == 0
        and 0.73 <= s.mean_f1_union <= 0.93
        and 0.38 <= s.mean_f1_single <= 0.59
        and 0.24 <= s.mean_gap <= 0.44
    )
    return ok, (f"{s.count} images, {s.errors} errors, mean union {s.mean_f1_union:.3f}, "
                f"mean single {s.mean_f1_single:.3f}, mean gap {s.mean_gap:.3f}")


@lru_cache(maxsize=None)
def fixture_sweep():
    index = load_dataset(FIXTURE_DIR)
    return tuple(run_dataset(index, EvalSettings(), c_values=DEFAULT_C_GRID, inits=(SINGLETON,)))


@lru_cache(maxsize=None)
def fixture_inits():
    index = load_dataset(FIXTURE_DIR)
    return tuple(run_dataset(index, EvalSettings(), c_values=(DEFAULT_C,),
                             inits=(SINGLETON, ONE_COALITION)))


@timed(8, "regime transition along the gamma sweep")
def criterion_8():
    rows = mean_by_gamma_index(fixture_sweep())
    gaps = [fu - fs for _, _, fs, fu in rows]
    ok = gaps[0] < 0.1 and max(gaps) > 0.2
    return ok, f"mean gap at smallest gamma {gaps[0]:.3f} (need < 0.1), max {max(gaps):.3f} (need > 0.2)"


@timed(9, "fragmentation trend")
def criterion_9():
    recs = [r for r in fixture_sweep() if r.ok]
    rho = float(spearmanr([r.gamma for r in recs], [r.K for r in recs]).statistic)
    med_all = statistics.median(r.K for r in recs)
    high = [r.K for r in recs if r.f1_single > 0.8]
    med_high = statistics.median(high) if high else None
    ok = rho > 0.5 and med_high is not None and med_high < med_all
    shown = "n/a (no record)" if med_high is None else f"{med_high:g}"
    return ok, (f"Spearman(gamma, K) = {rho:.3f} (need > 0.5), median K for F1single > 0.8: "
                f"{shown} vs {med_all:g} overall")


@timed(10, "initialisation robustness (c=900)")
def criterion_10():
    by: dict[str, dict[str, float]] = {}
    for r in fixture_inits():
        by.setdefault(r.image_id, {})[r.init] = r.f1_union
    deltas = [abs(v[SINGLETON] - v[ONE_COALITION]) for v in by.values()]
    mean = statistics.fmean(deltas)
    return mean <= 0.05, f"mean |dF1union| = {mean:.3f} over {len(deltas)} images (need <= 0.05)"


CRITERIA = [
    criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
    criterion_6, criterion_7, criterion_8, criterion_9, criterion_10,
]


@pytest.mark.parametrize("criterion", CRITERIA, ids=[f"criterion_{i}" for i in range(1, 11)])
def test_acceptance(criterion):
    outcome = criterion()
    RESULTS.append(outcome.line())
    print(outcome.line())
    if outcome.ok is None:
        pytest.skip(outcome.detail)
    assert outcome.passed, outcome.line()


if __name__ == "__main__":
    for c in CRITERIA:
        print(c().line(), flush=True)

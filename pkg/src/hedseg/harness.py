"""Dataset-level protocol: per-image evaluation, gamma sweeps, aggregation."""

from __future__ import annotations

import csv
import logging
import os
import statistics
import time
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from hedseg.hedonic import (
    DEFAULT_MAX_SWEEPS,
    SINGLETON,
    Partition,
    Resolution,
    resolution_from_density,
    run_to_equilibrium,
)
from hedseg.pixelgraph import GraphParams, WeightedGraph, image_to_graph, load_image
from hedseg.projection import f1_single, f1_union_greedy, load_mask

log = logging.getLogger(__name__)

DEFAULT_C = 900.0
DEFAULT_C_GRID = (9e4, 3e4, 9e3, 3e3, 900.0, 300.0, 90.0, 30.0, 9.0)

CSV_HEADER = (
    "image_id", "gt_id", "gamma", "c", "init", "K", "f1_single", "f1_union",
    "gap", "labels", "sweeps", "converged", "ms",
)

COHESIVE = "cohesive"
FRAGMENTED = "fragmented_recoverable"
FAILURE = "intrinsic_failure"


class DatasetError(ValueError):
    pass


@dataclass(frozen=True)
class Entry:
    image_id: str
    image_path: Path
    gt_paths: tuple[Path, ...]


@dataclass
class DatasetIndex:
    entries: list[Entry]
    warnings: list[str] = field(default_factory=list)

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)


@dataclass
class EvalRecord:
    image_id: str
    gt_id: int = -1
    gamma: float = float("nan")
    c: float | None = None
    init: str = SINGLETON
    K: int = 0
    f1_single: float = 0.0
    f1_union: float = 0.0
    labels: tuple[int, ...] = ()
    sweeps: int = 0
    converged: bool = False
    ms: int = 0
    error: str | None = None
    per_gt: list[tuple[float, float]] = field(default_factory=list, repr=False)

    @property
    def gap(self) -> float:
        return self.f1_union - self.f1_single

    @property
    def ok(self) -> bool:
        return self.error is None

    def csv_fields(self) -> list[str]:
        if not self.ok:
            return [self.image_id, "", "", _fmt_c(self.c), self.init, "", "", "", "",
                    f"error: {self.error}", "", "0", ""]
        return [
            self.image_id,
            str(self.gt_id),
            f"{self.gamma:.6e}",
            _fmt_c(self.c),
            self.init,
            str(self.K),
            f"{self.f1_single:.6f}",
            f"{self.f1_union:.6f}",
            f"{self.gap:.6f}",
            ";".join(map(str, self.labels)),
            str(self.sweeps),
            str(int(self.converged)),
            str(self.ms),
        ]


def _fmt_c(c) -> str:
    return "" if c is None else f"{c:.6f}"


@dataclass(frozen=True)
class RegimeThresholds:
    cohesive_single: float = 0.7
    cohesive_gap: float = 0.2
    failure_union: float = 0.5


def classify_regime(record: EvalRecord, th: RegimeThresholds = RegimeThresholds()) -> str:
    if record.f1_union < th.failure_union:
        return FAILURE
    if record.f1_single >= th.cohesive_single and record.gap < th.cohesive_gap:
        return COHESIVE
    return FRAGMENTED


# -- dataset ingestion ------------------------------------------------------

def _image_size(path: Path) -> tuple[int, int]:
    with Image.open(path) as im:
        return im.height, im.width


def load_dataset(
    root,
    image_glob: str = "src_color/*.png",
    gt_glob: str = "human_seg/*.png",
    mask_mode: str = "nonzero",
) -> DatasetIndex:
    """Index ``root/<id>/`` folders holding one image and its GT masks.

    Unreadable or mis-sized masks are dropped with a warning; folders left
    without any GT are skipped.
    """
    root = Path(root)
    if not root.is_dir():
        raise DatasetError(f"dataset root {root} is not a directory")
    entries, warnings = [], []
    for folder in sorted(p for p in root.iterdir() if p.is_dir()):
        images = sorted(folder.glob(image_glob))
        if not images:
            continue
        img_path = images[0]
        try:
            shape = _image_size(img_path)
        except OSError as exc:
            warnings.append(f"{folder.name}: unreadable image {img_path.name} ({exc})")
            continue
        gts = []
        for gp in sorted(folder.glob(gt_glob)):
            try:
                load_mask(gp, shape=shape, mode=mask_mode)
            except (OSError, ValueError) as exc:
                warnings.append(f"{folder.name}: dropped GT {gp.name} ({exc})")
                continue
            gts.append(gp)
        if not gts:
            warnings.append(f"{folder.name}: no usable ground truth, skipped")
            continue
        entries.append(Entry(folder.name, img_path, tuple(gts)))
    for w in warnings:
        log.warning(w)
    if not entries:
        raise DatasetError(f"no usable entries under {root}")
    return DatasetIndex(entries, warnings)


# -- per-image evaluation ---------------------------------------------------

@dataclass(frozen=True)
class EvalSettings:
    params: GraphParams = GraphParams()
    l_max: int | None = None
    max_sweeps: int = DEFAULT_MAX_SWEEPS
    mask_mode: str = "nonzero"
    record_timing: bool = False


def evaluate_labels(
    image_id: str,
    labels,
    gts,
    gamma: float = float("nan"),
    c: float | None = None,
    init: str = "injected",
    l_max: int | None = None,
    sweeps: int = 0,
    converged: bool = True,
) -> EvalRecord:
    """Score a given labelling against each GT, bypassing optimisation."""
    labels = Partition(np.asarray(labels)).renumbered().labels
    best = None
    per_gt = []
    for gi, gt in enumerate(gts):
        _, single = f1_single(labels, gt)
        union = f1_union_greedy(labels, gt, l_max=l_max)
        per_gt.append((single.f1, union.score))
        if best is None or union.score > best[2]:
            best = (gi, single.f1, union.score, union.labels)
    gi, fs, fu, sel = best
    return EvalRecord(
        image_id=image_id, gt_id=gi, gamma=gamma, c=c, init=init,
        K=int(np.unique(labels).size), f1_single=fs, f1_union=fu,
        labels=tuple(sorted(sel)), sweeps=sweeps, converged=converged, per_gt=per_gt,
    )


def _load_gts(entry: Entry, shape, mask_mode: str) -> list[np.ndarray]:
    return [load_mask(p, shape=shape, mode=mask_mode) for p in entry.gt_paths]


def _resolve(g: WeightedGraph, c, gamma) -> tuple[Resolution, float | None]:
    if gamma is not None:
        return Resolution.coerce(gamma), None
    return resolution_from_density(g, c), c


def _evaluate_on_graph(entry, g, gts, settings, c, gamma, init) -> EvalRecord:
    t0 = time.perf_counter()
    try:
        res, c_used = _resolve(g, c, gamma)
        eq = run_to_equilibrium(g, res, init=init, max_sweeps=settings.max_sweeps)
        rec = evaluate_labels(
            entry.image_id, eq.partition.labels, gts, gamma=res.gamma, c=c_used,
            init=init, l_max=settings.l_max, sweeps=eq.sweeps, converged=eq.converged,
        )
    except Exception as exc:  # a failed image must not abort the run
        log.exception("evaluation failed for %s", entry.image_id)
        rec = EvalRecord(entry.image_id, c=c, init=init, error=str(exc) or type(exc).__name__)
    if settings.record_timing:
        rec.ms = int(round((time.perf_counter() - t0) * 1000))
    return rec


def evaluate_image(
    entry: Entry,
    settings: EvalSettings = EvalSettings(),
    c: float | None = DEFAULT_C,
    init: str = SINGLETON,
    gamma: float | None = None,
) -> EvalRecord:
    """Graph -> equilibrium -> best-GT record. Failures become error records."""
    try:
        img = load_image(entry.image_path)
        gts = _load_gts(entry, img.shape, settings.mask_mode)
        g = image_to_graph(img, settings.params)
    except Exception as exc:
        log.exception("could not prepare %s", entry.image_id)
        return EvalRecord(entry.image_id, c=c, init=init, error=str(exc) or type(exc).__name__)
    return _evaluate_on_graph(entry, g, gts, settings, c, gamma, init)


def sweep_gamma(
    entry: Entry,
    settings: EvalSettings = EvalSettings(),
    c_values=None,
    gamma_values=None,
    inits=(SINGLETON,),
) -> list[EvalRecord]:
    """One record per (resolution, init), sharing a single graph build.

    Give either ``c_values`` (gamma = density / c) or absolute
    ``gamma_values``. Records come back in ascending gamma.
    """
    if (c_values is None) == (gamma_values is None):
        raise ValueError("give exactly one of c_values or gamma_values")
    if isinstance(inits, str):
        inits = (inits,)
    try:
        img = load_image(entry.image_path)
        gts = _load_gts(entry, img.shape, settings.mask_mode)
        g = image_to_graph(img, settings.params)
    except Exception as exc:
        log.exception("could not prepare %s", entry.image_id)
        return [EvalRecord(entry.image_id, init=i, error=str(exc) or type(exc).__name__)
                for i in inits]
    if c_values is not None:
        points = [(c, None) for c in sorted(c_values, reverse=True)]
    else:
        points = [(None, gm) for gm in sorted(gamma_values)]
    return [
        _evaluate_on_graph(entry, g, gts, settings, c, gm, init)
        for c, gm in points
        for init in inits
    ]


# -- dataset runs -----------------------------------------------------------

def _sweep_job(args):
    entry, settings, c_values, gamma_values, inits = args
    return sweep_gamma(entry, settings, c_values=c_values, gamma_values=gamma_values, inits=inits)


def record_sort_key(r: EvalRecord):
    gm = r.gamma if r.gamma == r.gamma else -1.0
    return (r.image_id, gm, r.init)


def run_dataset(
    index,
    settings: EvalSettings = EvalSettings(),
    c_values=(DEFAULT_C,),
    gamma_values=None,
    inits=(SINGLETON,),
    jobs: int | None = None,
) -> list[EvalRecord]:
    """Sweep every entry; output order is independent of scheduling."""
    if gamma_values is not None:
        c_values = None
    if isinstance(inits, str):
        inits = (inits,)
    tasks = [(e, settings, c_values, gamma_values, tuple(inits)) for e in index]
    jobs = jobs or os.cpu_count() or 1
    if jobs <= 1 or len(tasks) <= 1:
        chunks = [_sweep_job(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as pool:
            chunks = list(pool.map(_sweep_job, tasks))
    records = [r for chunk in chunks for r in chunk]
    return sorted(records, key=record_sort_key)


# -- aggregation & output ---------------------------------------------------

@dataclass
class Summary:
    count: int
    errors: int
    mean_f1_single: float
    median_f1_single: float
    mean_f1_union: float
    median_f1_union: float
    mean_gap: float
    k_histogram: dict[int, int]
    regimes: dict[str, int]

    def text(self) -> str:
        lines = [
            f"records            {self.count}",
            f"errors             {self.errors}",
            f"mean F1 single     {self.mean_f1_single:.6f}",
            f"median F1 single   {self.median_f1_single:.6f}",
            f"mean F1 union      {self.mean_f1_union:.6f}",
            f"median F1 union    {self.median_f1_union:.6f}",
            f"mean gap           {self.mean_gap:.6f}",
            "regimes            " + ", ".join(f"{k}={v}" for k, v in self.regimes.items()),
            "K histogram        " + ", ".join(f"{k}:{v}" for k, v in sorted(self.k_histogram.items())),
        ]
        return "\n".join(lines) + "\n"


def aggregate(records, thresholds: RegimeThresholds = RegimeThresholds()) -> Summary:
    records = list(records)
    if not records:
        raise ValueError("no records to aggregate")
    good = [r for r in records if r.ok]
    if not good:
        raise ValueError("every record is an error record")
    fs = [r.f1_single for r in good]
    fu = [r.f1_union for r in good]
    regimes = {COHESIVE: 0, FRAGMENTED: 0, FAILURE: 0}
    for r in good:
        regimes[classify_regime(r, thresholds)] += 1
    return Summary(
        count=len(good),
        errors=len(records) - len(good),
        mean_f1_single=statistics.fmean(fs),
        median_f1_single=statistics.median(fs),
        mean_f1_union=statistics.fmean(fu),
        median_f1_union=statistics.median(fu),
        mean_gap=statistics.fmean(r.gap for r in good),
        k_histogram=dict(sorted(Counter(r.K for r in good).items())),
        regimes=regimes,
    )


def mean_by_gamma_index(records) -> list[tuple[float, float, float, float]]:
    """Per sweep grid point: (mean gamma, mean K, mean F1 single, mean F1 union).

    Grid points are matched by rank within each image's sweep, since
    density-normalised gammas differ between images.
    """
    per_image: dict[tuple[str, str], list[EvalRecord]] = {}
    for r in records:
        if r.ok:
            per_image.setdefault((r.image_id, r.init), []).append(r)
    buckets: dict[int, list[EvalRecord]] = {}
    for recs in per_image.values():
        for i, r in enumerate(sorted(recs, key=lambda r: r.gamma)):
            buckets.setdefault(i, []).append(r)
    return [
        (
            statistics.fmean(r.gamma for r in rs),
            statistics.fmean(r.K for r in rs),
            statistics.fmean(r.f1_single for r in rs),
            statistics.fmean(r.f1_union for r in rs),
        )
        for _, rs in sorted(buckets.items())
    ]


def write_report_csv(records, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in records:
            w.writerow(r.csv_fields())


def read_report_csv(path) -> list[EvalRecord]:
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            if row["labels"].startswith("error:"):
                out.append(EvalRecord(row["image_id"], init=row["init"],
                                      error=row["labels"][len("error:"):].strip()))
                continue
            out.append(EvalRecord(
                image_id=row["image_id"],
                gt_id=int(row["gt_id"]),
                gamma=float(row["gamma"]),
                c=float(row["c"]) if row["c"] else None,
                init=row["init"],
                K=int(row["K"]),
                f1_single=float(row["f1_single"]),
                f1_union=float(row["f1_union"]),
                labels=tuple(int(x) for x in row["labels"].split(";") if x),
                sweeps=int(row["sweeps"]),
                converged=row["converged"] == "1",
                ms=int(row["ms"]),
            ))
    return out

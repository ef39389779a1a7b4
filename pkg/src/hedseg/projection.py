"""Binary projections of a multi-community labelling and their F1 scores.

All scores are computed from exact integer tallies: for a predicted pixel
set ``B`` and ground truth ``Y``, ``F1 = 2|B & Y| / (|B| + |Y|)``.
Comparisons between candidate unions are done by cross-multiplication so
greedy decisions never depend on float rounding.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from PIL import Image

ORACLE_MAX_K = 20


@dataclass(frozen=True)
class F1Report:
    tp: int
    fp: int
    fn: int

    @property
    def precision(self) -> float:
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else 0.0

    @property
    def recall(self) -> float:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else 0.0

    @property
    def f1(self) -> float:
        denom = 2 * self.tp + self.fp + self.fn
        return 2 * self.tp / denom if denom else 0.0


@dataclass(frozen=True)
class UnionSelection:
    labels: tuple[int, ...]
    score: float
    capped: bool = False
    report: F1Report | None = None

    def csv_row(self) -> str:
        return f"{';'.join(map(str, self.labels))},{self.score:.6f},{int(self.capped)}"


def _labels_of(part) -> np.ndarray:
    return np.asarray(getattr(part, "labels", part)).ravel()


def _gt_of(gt) -> np.ndarray:
    return np.asarray(gt, dtype=bool).ravel()


def _report(tp: int, size: int, ysize: int) -> F1Report:
    return F1Report(tp=int(tp), fp=int(size - tp), fn=int(ysize - tp))


def f1(pred, gt) -> F1Report:
    pred = np.asarray(pred, dtype=bool)
    gt = np.asarray(gt, dtype=bool)
    if pred.shape != gt.shape:
        raise ValueError(f"mask shapes differ: {pred.shape} vs {gt.shape}")
    tp = int(np.count_nonzero(pred & gt))
    return _report(tp, np.count_nonzero(pred), np.count_nonzero(gt))


class Tallies:
    """Per-community (size, foreground overlap) counts of a labelling."""

    def __init__(self, part, gt):
        labels = _labels_of(part)
        gt = _gt_of(gt)
        if labels.size != gt.size:
            raise ValueError(f"partition covers {labels.size} pixels, mask has {gt.size}")
        if labels.size == 0:
            raise ValueError("empty partition")
        ids, inv = np.unique(labels, return_inverse=True)
        self.ids = ids
        self.sizes = np.bincount(inv).astype(np.int64)
        self.tp = np.bincount(inv, weights=gt).astype(np.int64)
        self.ysize = int(np.count_nonzero(gt))

    def scores(self) -> np.ndarray:
        return 2.0 * self.tp / (self.sizes + self.ysize)

    def order(self) -> np.ndarray:
        """Indices sorted by decreasing individual F1, ties by smallest id.

        Uses exact rational keys so equal fractions compare equal.
        """
        keys = [Fraction(int(2 * t), int(s + self.ysize)) for t, s in zip(self.tp, self.sizes)]
        return np.array(sorted(range(len(keys)), key=lambda i: (-keys[i], self.ids[i])))


def f1_single(part, gt) -> tuple[int, F1Report]:
    """Community whose own mask best matches ``gt`` (smallest id on ties)."""
    t = Tallies(part, gt)
    i = int(t.order()[0])
    return int(t.ids[i]), _report(t.tp[i], t.sizes[i], t.ysize)


def _better(tp_a: int, u_a: int, tp_b: int, u_b: int, ysize: int) -> bool:
    """F1 of union a strictly exceeds F1 of union b."""
    return tp_a * (u_b + ysize) > tp_b * (u_a + ysize)


def f1_union_greedy(part, gt, l_max: int | None = None) -> UnionSelection:
    """Forward selection seeded with the best single community.

    Remaining labels are scanned once in decreasing individual F1 and kept
    only when they strictly raise the union's F1. With ``l_max`` the scan
    stops as soon as ``l_max`` labels are selected.
    """
    if l_max is not None and l_max < 1:
        raise ValueError("l_max must be positive")
    t = Tallies(part, gt)
    order = t.order()
    first = int(order[0])
    chosen = [first]
    tp, size = int(t.tp[first]), int(t.sizes[first])
    capped = False
    for i in order[1:]:
        if l_max is not None and len(chosen) == l_max:
            capped = True
            break
        tp_new, size_new = tp + int(t.tp[i]), size + int(t.sizes[i])
        if _better(tp_new, size_new, tp, size, t.ysize):
            chosen.append(int(i))
            tp, size = tp_new, size_new
    rep = _report(tp, size, t.ysize)
    return UnionSelection(tuple(int(t.ids[i]) for i in chosen), rep.f1, capped, rep)


def f1_union_threshold(part, gt, tau: float = 0.1) -> UnionSelection:
    """Union of every community whose individual F1 exceeds ``tau``."""
    t = Tallies(part, gt)
    keep = np.flatnonzero(t.scores() > tau)
    if keep.size == 0:
        return UnionSelection((), 0.0, False, _report(0, 0, t.ysize))
    rep = _report(t.tp[keep].sum(), t.sizes[keep].sum(), t.ysize)
    return UnionSelection(tuple(int(x) for x in t.ids[keep]), rep.f1, False, rep)


def union_oracle(part, gt) -> UnionSelection:
    """Exact best union over all non-empty label subsets (K <= 20)."""
    t = Tallies(part, gt)
    k = t.ids.size
    if k > ORACLE_MAX_K:
        raise ValueError(f"oracle limited to K <= {ORACLE_MAX_K}, got {k}")
    # subset sums indexed by bitmask, bit i <-> t.ids[i]
    tp = np.zeros(1, dtype=np.int64)
    sz = np.zeros(1, dtype=np.int64)
    for i in range(k):
        tp = np.concatenate([tp, tp + t.tp[i]])
        sz = np.concatenate([sz, sz + t.sizes[i]])
    score = 2.0 * tp / np.maximum(sz + t.ysize, 1)
    score[0] = -1.0
    mask = int(np.argmax(score))
    labels = tuple(int(t.ids[i]) for i in range(k) if mask >> i & 1)
    rep = _report(tp[mask], sz[mask], t.ysize)
    return UnionSelection(labels, rep.f1, False, rep)


def union_mask(part, labels, shape=None) -> np.ndarray:
    lab = np.asarray(getattr(part, "labels", part))
    out = np.isin(lab, np.asarray(labels, dtype=lab.dtype))
    return out.reshape(shape) if shape is not None else out


def pathological_instance(m: int, foreground: int) -> tuple[np.ndarray, np.ndarray]:
    """Object split evenly over ``m`` pure-foreground communities.

    Grid is ``(m + 1) x (foreground // m)``: row ``k < m`` is community
    ``k`` (all foreground), the last row is background community ``m``.
    Returns (label image, ground-truth mask).
    """
    if m < 1 or foreground < 1:
        raise ValueError("m and foreground must be positive")
    if foreground % m:
        raise ValueError(f"foreground {foreground} not divisible by m={m}")
    width = foreground // m
    labels = np.repeat(np.arange(m + 1, dtype=np.int64), width).reshape(m + 1, width)
    gt = labels < m
    return labels, gt


def load_mask(path, shape: tuple[int, int] | None = None, mode: str = "nonzero") -> np.ndarray:
    """Read a ground-truth PNG as a boolean mask.

    ``mode="nonzero"`` marks any nonzero pixel (in any channel) as
    foreground; ``mode="red"`` marks only pure red (255, 0, 0) pixels, for
    archives that paint the object over the photograph.
    """
    with Image.open(path) as im:
        im.load()
        arr = np.asarray(im.convert("RGB") if mode == "red" else im)
    if mode == "red":
        mask = (arr[:, :, 0] == 255) & (arr[:, :, 1] == 0) & (arr[:, :, 2] == 0)
    elif mode == "nonzero":
        if arr.ndim == 3:
            if arr.shape[2] in (2, 4):  # drop alpha
                arr = arr[:, :, :-1]
            arr = arr.any(axis=2)
        mask = arr != 0
    else:
        raise ValueError(f"unknown mask mode {mode!r}")
    if mask.size == 0:
        raise ValueError(f"empty mask: {path}")
    if shape is not None and mask.shape != tuple(shape):
        raise ValueError(f"mask {path} has shape {mask.shape}, expected {tuple(shape)}")
    return mask


def save_mask(mask, path) -> None:
    Image.fromarray(np.asarray(mask, dtype=np.uint8) * 255).save(path)

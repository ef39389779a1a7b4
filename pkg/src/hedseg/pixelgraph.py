"""Image to weighted pixel graph.

Nodes are pixels indexed row-major (``v = y * width + x``). Candidate
edges join 8-neighbours; each gets the affinity

    w = exp(-|I(u) - I(v)|^2 / sigma_color^2) * exp(-max(B(u), B(v)) / sigma_edge^2)

where ``B`` is the normalised Canny map. Pairs with ``w <= eps_discard``
are dropped. Adjacency is stored CSR-style, symmetric, with each
neighbour list sorted by node id.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from hedseg.edges import canny, luminance

# forward half of the 8-neighbourhood: right, down-left, down, down-right
_HALF_OFFSETS = ((0, 1), (1, -1), (1, 0), (1, 1))


class ImageError(ValueError):
    """Raised for unreadable, unsupported or empty rasters."""


@dataclass(frozen=True)
class RgbImage:
    width: int
    height: int
    pixels: np.ndarray  # (height, width, 3) uint8

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ImageError("zero-sized image")
        if self.pixels.shape != (self.height, self.width, 3):
            raise ImageError(
                f"pixel array shape {self.pixels.shape} does not match "
                f"{self.height}x{self.width}x3"
            )

    @classmethod
    def from_array(cls, arr) -> RgbImage:
        arr = np.asarray(arr)
        if arr.ndim == 2:
            arr = np.repeat(arr[:, :, None], 3, axis=2)
        if arr.ndim != 3 or arr.shape[2] not in (3, 4):
            raise ImageError(f"expected HxW or HxWx3 array, got shape {arr.shape}")
        arr = np.ascontiguousarray(arr[:, :, :3], dtype=np.uint8)
        return cls(width=arr.shape[1], height=arr.shape[0], pixels=arr)

    @property
    def shape(self) -> tuple[int, int]:
        return self.height, self.width


@dataclass(frozen=True)
class EdgeMap:
    width: int
    height: int
    values: np.ndarray  # (height, width) float64 in [0, 1]


@dataclass(frozen=True)
class GraphParams:
    sigma_color: float = 32.0 * math.sqrt(3.0)
    sigma_edge: float = math.sqrt(0.5)
    eps_discard: float = 1e-4
    canny_low: float = 50.0
    canny_high: float = 150.0
    gauss_size: int = 5
    gauss_sigma: float = 1.4

    def __post_init__(self):
        if not self.sigma_color > 0 or not self.sigma_edge > 0:
            raise ValueError("sigma_color and sigma_edge must be positive")
        if not 0 <= self.eps_discard < 1:
            raise ValueError("eps_discard must lie in [0, 1)")
        if not 0 <= self.canny_low < self.canny_high:
            raise ValueError("need 0 <= canny_low < canny_high")


@dataclass(frozen=True)
class WeightedGraph:
    """Undirected graph in compressed adjacency form.

    Every undirected edge appears twice in ``indices``/``weights`` (once
    per endpoint); ``edge_count`` counts it once.
    """

    node_count: int
    indptr: np.ndarray
    indices: np.ndarray
    weights: np.ndarray
    width: int | None = None
    height: int | None = None
    _edge_count: int = field(init=False, repr=False, default=0)

    def __post_init__(self):
        object.__setattr__(self, "_edge_count", len(self.indices) // 2)

    @property
    def edge_count(self) -> int:
        return self._edge_count

    def neighbors(self, v: int) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = self.indptr[v], self.indptr[v + 1]
        return self.indices[lo:hi], self.weights[lo:hi]

    def degree(self) -> np.ndarray:
        """Weighted degree of every node."""
        src = np.repeat(np.arange(self.node_count), np.diff(self.indptr))
        return np.bincount(src, weights=self.weights, minlength=self.node_count)

    def edge_list(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Edges with ``u < v`` as parallel arrays, sorted by (u, v)."""
        src = np.repeat(np.arange(self.node_count), np.diff(self.indptr))
        upper = src < self.indices
        return src[upper], self.indices[upper], self.weights[upper]

    @classmethod
    def from_edges(cls, node_count: int, u, v, w, width=None, height=None) -> WeightedGraph:
        """Symmetrise an undirected edge list into CSR arrays.

        Self-loops and duplicate pairs are rejected.
        """
        u = np.asarray(u, dtype=np.int64)
        v = np.asarray(v, dtype=np.int64)
        w = np.asarray(w, dtype=np.float64)
        if not (len(u) == len(v) == len(w)):
            raise ValueError("edge arrays must have equal length")
        if len(u) and (min(u.min(), v.min()) < 0 or max(u.max(), v.max()) >= node_count):
            raise ValueError("edge endpoint out of range")
        if np.any(u == v):
            raise ValueError("self-loops are not allowed")
        src = np.concatenate([u, v])
        dst = np.concatenate([v, u])
        wts = np.concatenate([w, w])
        order = np.lexsort((dst, src))
        src, dst, wts = src[order], dst[order], wts[order]
        if len(src) > 1 and np.any((src[1:] == src[:-1]) & (dst[1:] == dst[:-1])):
            raise ValueError("duplicate edges")
        indptr = np.zeros(node_count + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=node_count), out=indptr[1:])
        return cls(node_count, indptr, dst, wts, width=width, height=height)


def load_image(path) -> RgbImage:
    path = Path(path)
    if not path.is_file():
        raise ImageError(f"no such file: {path}")
    try:
        with Image.open(path) as im:
            if im.format not in ("PNG", "JPEG"):
                raise ImageError(f"unsupported format {im.format!r}: {path}")
            im.load()
            if im.mode in ("L", "I", "I;16", "1", "F"):
                arr = np.asarray(im.convert("L"))
            else:
                arr = np.asarray(im.convert("RGB"))
    except (UnidentifiedImageError, OSError, SyntaxError) as exc:
        raise ImageError(f"cannot decode {path}: {exc}") from exc
    if arr.size == 0:
        raise ImageError(f"zero-sized image: {path}")
    return RgbImage.from_array(arr)


def compute_edge_map(img: RgbImage, params: GraphParams = GraphParams()) -> EdgeMap:
    """Canny response on luminance, scaled into [0, 1] by its maximum."""
    edges = canny(
        luminance(img.pixels),
        params.canny_low,
        params.canny_high,
        kernel_size=params.gauss_size,
        sigma=params.gauss_sigma,
    ).astype(np.float64)
    peak = edges.max() if edges.size else 0.0
    if peak > 0:
        edges /= peak
    return EdgeMap(img.width, img.height, edges)


def build_graph(
    img: RgbImage, edges: EdgeMap, params: GraphParams = GraphParams()
) -> WeightedGraph:
    if (edges.height, edges.width) != (img.height, img.width):
        raise ValueError(
            f"edge map {edges.height}x{edges.width} does not match image "
            f"{img.height}x{img.width}"
        )
    h, w = img.height, img.width
    rgb = img.pixels.astype(np.float64)
    b = edges.values
    ids = np.arange(h * w, dtype=np.int64).reshape(h, w)
    inv_c = 1.0 / params.sigma_color**2
    inv_e = 1.0 / params.sigma_edge**2

    us, vs, ws = [], [], []
    for dy, dx in _HALF_OFFSETS:
        y0, y1 = 0, h - dy
        x0, x1 = max(0, -dx), w - max(0, dx)
        if y1 <= y0 or x1 <= x0:
            continue
        a = (slice(y0, y1), slice(x0, x1))
        c = (slice(y0 + dy, y1 + dy), slice(x0 + dx, x1 + dx))
        diff = rgb[a] - rgb[c]
        dist2 = np.einsum("...k,...k->...", diff, diff)
        wt = np.exp(-dist2 * inv_c) * np.exp(-np.maximum(b[a], b[c]) * inv_e)
        keep = wt > params.eps_discard
        us.append(ids[a][keep])
        vs.append(ids[c][keep])
        ws.append(wt[keep])

    u = np.concatenate(us) if us else np.empty(0, np.int64)
    v = np.concatenate(vs) if vs else np.empty(0, np.int64)
    wt = np.concatenate(ws) if ws else np.empty(0)
    return WeightedGraph.from_edges(h * w, u, v, wt, width=w, height=h)


def image_to_graph(img: RgbImage, params: GraphParams = GraphParams()) -> WeightedGraph:
    return build_graph(img, compute_edge_map(img, params), params)


def max_grid_edges(height: int, width: int) -> int:
    """Undirected 8-neighbour pairs on an H x W grid."""
    if height * width <= 1:
        return 0
    return 4 * height * width - 3 * height - 3 * width + 2


def graph_density(g: WeightedGraph) -> float:
    n = g.node_count
    if n < 2:
        raise ValueError("density needs at least two nodes")
    return 2.0 * g.edge_count / (n * (n - 1))


def write_edge_list(g: WeightedGraph, path) -> None:
    """Write ``u v w`` lines (u < v, sorted) preceded by a ``# nodes N`` header."""
    u, v, w = g.edge_list()
    with open(path, "w") as fh:
        fh.write(f"# nodes {g.node_count}\n")
        for a, c, x in zip(u.tolist(), v.tolist(), w.tolist()):
            fh.write(f"{a} {c} {x:.9f}\n")


def read_edge_list(path, node_count: int | None = None) -> WeightedGraph:
    """Parse an ``u v w`` edge list.

    The node count comes from the argument, else a ``# nodes N`` header,
    else the largest endpoint + 1.
    """
    us, vs, ws = [], [], []
    header_n = None
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                parts = line[1:].split()
                if len(parts) == 2 and parts[0] == "nodes":
                    header_n = int(parts[1])
                continue
            parts = line.split()
            if len(parts) != 3:
                raise ValueError(f"{path}:{lineno}: expected 'u v w', got {line!r}")
            us.append(int(parts[0]))
            vs.append(int(parts[1]))
            ws.append(float(parts[2]))
    if node_count is None:
        node_count = header_n
    if node_count is None:
        node_count = max(max(us, default=-1), max(vs, default=-1)) + 1
    return WeightedGraph.from_edges(node_count, us, vs, ws)

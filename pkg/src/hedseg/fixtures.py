"""Deterministic synthetic single-object images with three GT masks each.

Laid out like the benchmark archive (``<id>/src_color/<id>.png`` and
``<id>/human_seg/<id>_<n>.png``) so the harness reads both the same way.
The three masks per image mimic annotator disagreement: the exact object,
a one-pixel erosion and a one-pixel dilation.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image
from scipy import ndimage

HEIGHT, WIDTH = 56, 72
FIXTURE_DIR = Path(__file__).parent / "data" / "fixture"


def _grid():
    return np.mgrid[0:HEIGHT, 0:WIDTH].astype(np.float64)


def _ellipse(cy, cx, ry, rx, angle=0.0):
    y, x = _grid()
    y, x = y - cy, x - cx
    ca, sa = np.cos(angle), np.sin(angle)
    u, v = ca * x + sa * y, -sa * x + ca * y
    return (u / rx) ** 2 + (v / ry) ** 2 <= 1.0


def _rect(y0, x0, y1, x1):
    y, x = _grid()
    return (y >= y0) & (y < y1) & (x >= x0) & (x < x1)


def _vgradient(top, bottom):
    t = np.linspace(0.0, 1.0, HEIGHT)[:, None, None]
    img = (1 - t) * np.asarray(top, float) + t * np.asarray(bottom, float)
    return np.broadcast_to(img, (HEIGHT, WIDTH, 3)).copy()


def _flat(color):
    return np.broadcast_to(np.asarray(color, float), (HEIGHT, WIDTH, 3)).copy()


def _paint(img, mask, color):
    img[mask] = color
    return img


def _scenes(rng):
    """Yield (name, float image, object mask)."""
    # 1. plain disc on flat background
    m = _ellipse(28, 36, 14, 14)
    yield "disc", _paint(_flat((70, 110, 160)), m, (220, 200, 60)), m

    # 2. two-tone ellipse: object made of two coloured halves
    m = _ellipse(28, 34, 16, 24)
    img = _vgradient((40, 90, 40), (60, 130, 60))
    img = _paint(img, m & (_grid()[1] < 34), (200, 60, 50))
    img = _paint(img, m & (_grid()[1] >= 34), (230, 120, 40))
    yield "twotone", img, m

    # 3. small square, large background
    m = _rect(22, 30, 34, 44)
    yield "square", _paint(_vgradient((150, 150, 170), (110, 110, 130)), m, (30, 30, 40)), m

    # 4. large object covering most of the frame
    m = _ellipse(28, 36, 24, 32)
    yield "large", _paint(_flat((20, 20, 20)), m, (180, 170, 150)), m

    # 5. striped object
    m = _rect(12, 16, 44, 56)
    y, _ = _grid()
    stripes = (y.astype(int) // 4) % 2 == 0
    img = _flat((90, 140, 200))
    img = _paint(img, m & stripes, (240, 240, 240))
    img = _paint(img, m & ~stripes, (200, 40, 40))
    yield "stripes", img, m

    # 6. low-contrast blob
    m = _ellipse(30, 40, 12, 18, angle=0.4)
    yield "lowcontrast", _paint(_flat((120, 120, 120)), m, (150, 140, 130)), m

    # 7. object touching the border
    m = _ellipse(40, 10, 18, 20)
    yield "border", _paint(_vgradient((200, 220, 240), (140, 170, 210)), m, (60, 40, 30)), m

    # 8. ring-shaped object with background showing through
    m = _ellipse(28, 36, 18, 18) & ~_ellipse(28, 36, 8, 8)
    yield "ring", _paint(_flat((30, 60, 30)), m, (240, 180, 200)), m

    # 9. object with a distracting second region of similar colour
    m = _ellipse(28, 22, 12, 14)
    img = _flat((50, 50, 90))
    img = _paint(img, m, (210, 210, 90))
    img = _paint(img, _rect(10, 50, 46, 64), (200, 200, 110))
    yield "distractor", img, m

    # 10. textured object on textured background
    m = _ellipse(28, 36, 15, 20)
    img = _flat((100, 80, 60)) + rng.normal(0, 18, (HEIGHT, WIDTH, 3))
    obj = _flat((60, 120, 200)) + rng.normal(0, 18, (HEIGHT, WIDTH, 3))
    img[m] = obj[m]
    yield "textured", img, m


def generate(noise: float = 6.0, seed: int = 2024):
    """List of (image_id, uint8 RGB array, [mask, mask, mask])."""
    rng = np.random.default_rng(seed)
    out = []
    for i, (name, img, mask) in enumerate(_scenes(rng), start=1):
        img = img + rng.normal(0.0, noise, img.shape)
        img = np.clip(np.rint(img), 0, 255).astype(np.uint8)
        eroded = ndimage.binary_erosion(mask)
        dilated = ndimage.binary_dilation(mask)
        out.append((f"{i:02d}_{name}", img, [mask, eroded, dilated]))
    return out


def write_fixture(root) -> Path:
    root = Path(root)
    for image_id, img, masks in generate():
        src = root / image_id / "src_color"
        seg = root / image_id / "human_seg"
        src.mkdir(parents=True, exist_ok=True)
        seg.mkdir(parents=True, exist_ok=True)
        Image.fromarray(img).save(src / f"{image_id}.png")
        for n, m in enumerate(masks, start=1):
            Image.fromarray(m.astype(np.uint8) * 255).save(seg / f"{image_id}_{n}.png")
    return root


if __name__ == "__main__":
    print(write_fixture(FIXTURE_DIR))

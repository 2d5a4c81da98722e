# cyclereward/services/data/scenes.py
"""
Scene descriptions and their exact rasterisation.

A scene holds one to three shapes of distinct classes:
  rectangle = class 1, circle = class 2, triangle = class 3.
Intensity is class-coded (plus a small jitter) and depth follows intensity,
brighter being nearer, so painting far-to-near gives an image, a class map
and a depth map that agree pixel for pixel.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from cyclereward.core.errors import DatasetError

BACKGROUND = -1.0
JITTER = 0.03


class ShapeKind(str, Enum):
    RECTANGLE = "rectangle"
    CIRCLE = "circle"
    TRIANGLE = "triangle"


CLASS_OF = {ShapeKind.RECTANGLE: 1, ShapeKind.CIRCLE: 2, ShapeKind.TRIANGLE: 3}
BASE_INTENSITY = {1: -0.35, 2: 0.3, 3: 0.95}


@dataclass(frozen=True)
class Shape:
    kind: ShapeKind
    class_id: int
    depth_rank: int           # 0 is farthest
    intensity: float
    geometry: tuple[float, ...]
    # rectangle: (y0, x0, y1, x1) half-open; circle: (cy, cx, r);
    # triangle: (ay, ax, by, bx, cy, cx)

    def mask(self, height: int, width: int) -> np.ndarray:
        yy, xx = np.mgrid[0:height, 0:width]
        g = self.geometry
        if self.kind == ShapeKind.RECTANGLE:
            y0, x0, y1, x1 = g
            return (yy >= y0) & (yy < y1) & (xx >= x0) & (xx < x1)
        if self.kind == ShapeKind.CIRCLE:
            cy, cx, r = g
            return (yy - cy) ** 2 + (xx - cx) ** 2 <= r * r
        ay, ax, by, bx, cy, cx = g

        def side(py, px, qy, qx):
            return (xx - px) * (qy - py) - (yy - py) * (qx - px)

        d1, d2, d3 = side(ay, ax, by, bx), side(by, bx, cy, cx), side(cy, cx, ay, ax)
        neg = (d1 < 0) | (d2 < 0) | (d3 < 0)
        pos = (d1 > 0) | (d2 > 0) | (d3 > 0)
        return ~(neg & pos)

    def bounds(self) -> tuple[float, float, float, float]:
        g = self.geometry
        if self.kind == ShapeKind.RECTANGLE:
            return g[0], g[1], g[2] - 1, g[3] - 1
        if self.kind == ShapeKind.CIRCLE:
            cy, cx, r = g
            return cy - r, cx - r, cy + r, cx + r
        ys, xs = g[0::2], g[1::2]
        return min(ys), min(xs), max(ys), max(xs)


@dataclass(frozen=True)
class SceneSpec:
    height: int
    width: int
    shapes: tuple[Shape, ...]

    def __post_init__(self):
        ranks = [s.depth_rank for s in self.shapes]
        if len(set(ranks)) != len(ranks):
            raise DatasetError(f"depth ranks must be unique, got {ranks}")
        for s in self.shapes:
            y0, x0, y1, x1 = s.bounds()
            if y0 < 0 or x0 < 0 or y1 > self.height - 1 or x1 > self.width - 1:
                raise DatasetError(f"{s.kind.value} exceeds the {self.height}x{self.width} canvas")

    @property
    def caption_id(self) -> int:
        """Bitmask of the shape classes present (class c sets bit c-1)."""
        return sum(1 << (s.class_id - 1) for s in self.shapes)

    @property
    def class_ids(self) -> set[int]:
        return {s.class_id for s in self.shapes}


@dataclass(frozen=True)
class Raster:
    image: np.ndarray       # H x W in [-1, 1]
    classes: np.ndarray     # H x W uint8
    depth: np.ndarray       # H x W in [0, 1]


def rasterize(scene: SceneSpec) -> Raster:
    """Painter's algorithm, far to near."""
    image = np.full((scene.height, scene.width), BACKGROUND)
    classes = np.zeros((scene.height, scene.width), dtype=np.uint8)
    for shape in sorted(scene.shapes, key=lambda s: s.depth_rank):
        m = shape.mask(scene.height, scene.width)
        image[m] = shape.intensity
        classes[m] = shape.class_id
    return Raster(image=image, classes=classes, depth=(image + 1.0) * 0.5)


def _geometry(kind: ShapeKind, rng: np.random.Generator, h: int, w: int) -> tuple[float, ...]:
    if kind == ShapeKind.RECTANGLE:
        sh = int(rng.integers(8, min(18, h) + 1))
        sw = int(rng.integers(8, min(18, w) + 1))
        y0 = int(rng.integers(0, h - sh + 1))
        x0 = int(rng.integers(0, w - sw + 1))
        return (y0, x0, y0 + sh, x0 + sw)
    if kind == ShapeKind.CIRCLE:
        r = int(rng.integers(4, min(9, (min(h, w) - 1) // 2) + 1))
        cy = int(rng.integers(r, h - r))
        cx = int(rng.integers(r, w - r))
        return (cy, cx, r)
    size = int(rng.integers(10, min(22, h, w) + 1))
    y0 = int(rng.integers(0, h - size + 1))
    x0 = int(rng.integers(0, w - size + 1))
    apex = x0 + (size - 1) / 2.0
    return (y0, apex, y0 + size - 1, x0, y0 + size - 1, x0 + size - 1)


def random_scene(rng: np.random.Generator, height: int, width: int) -> SceneSpec:
    count = int(rng.integers(1, 4))
    kinds = [list(ShapeKind)[i] for i in sorted(rng.choice(3, size=count, replace=False))]
    drafts = []
    for kind in kinds:
        cls = CLASS_OF[kind]
        intensity = BASE_INTENSITY[cls] + float(rng.uniform(-JITTER, JITTER))
        drafts.append((kind, cls, intensity, _geometry(kind, rng, height, width)))
    order = sorted(range(len(drafts)), key=lambda i: drafts[i][2])
    shapes = tuple(
        Shape(kind=kind, class_id=cls, depth_rank=order.index(i), intensity=intensity, geometry=geom)
        for i, (kind, cls, intensity, geom) in enumerate(drafts)
    )
    return SceneSpec(height=height, width=width, shapes=shapes)

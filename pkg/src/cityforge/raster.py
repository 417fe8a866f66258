"""Raster ingest: semantic class grids, satellite quantization, height fields.

Semantic maps are 8-bit RGB PNGs whose colors must match the active palette
exactly; satellite images are quantized to the nearest palette color.
Region vectorization traces 4-connected components to pixel-edge rings
(holes included) and simplifies them with Douglas-Peucker at half a cell.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, field

import numpy as np
from PIL import Image
from scipy import ndimage

from .geometry import Polygon

DEFAULT_PALETTE_ENTRIES = [
    ((200, 0, 0), "building"),
    ((128, 128, 128), "road"),
    ((0, 0, 255), "water"),
    ((0, 160, 0), "green"),
    ((240, 230, 200), "ground"),
]

DEFAULT_HEIGHT_SCALE = 0.1  # meters per 16-bit unit


class RasterError(ValueError):
    pass


class BadImage(RasterError):
    pass


class UnknownColor(RasterError):
    def __init__(self, x: int, y: int, rgb: tuple[int, int, int]):
        super().__init__(f"pixel ({x}, {y}) has off-palette color {rgb}")
        self.x = x
        self.y = y
        self.rgb = rgb


class OutOfExtent(RasterError):
    pass


@dataclass(frozen=True)
class Palette:
    entries: tuple[tuple[tuple[int, int, int], str], ...]

    def __post_init__(self):
        colors = [c for c, _ in self.entries]
        labels = [l for _, l in self.entries]
        if len(set(colors)) != len(colors):
            raise RasterError("palette colors must be unique")
        if len(set(labels)) != len(labels):
            raise RasterError("palette labels must be unique")

    @property
    def labels(self) -> list[str]:
        return [l for _, l in self.entries]

    def color_of(self, label: str) -> tuple[int, int, int]:
        for c, l in self.entries:
            if l == label:
                return c
        raise KeyError(label)

    def index_of(self, label: str) -> int:
        return self.labels.index(label)

    @staticmethod
    def default() -> "Palette":
        return Palette(tuple((tuple(c), l) for c, l in DEFAULT_PALETTE_ENTRIES))

    @staticmethod
    def from_json(text: str | bytes) -> "Palette":
        data = json.loads(text)
        return Palette(tuple((tuple(int(v) for v in e["color"]), e["label"]) for e in data))

    def to_json(self) -> str:
        return json.dumps([{"color": list(c), "label": l} for c, l in self.entries], indent=2)


@dataclass
class ClassGrid:
    """Row-major grid of palette class indices."""

    classes: np.ndarray  # (height, width) int16 indices into palette
    cell_size: float
    palette: Palette

    def __post_init__(self):
        self.classes = np.asarray(self.classes, dtype=np.int16)
        if self.classes.ndim != 2:
            raise RasterError("class grid must be 2-D")
        k = len(self.palette.entries)
        if self.classes.size and (self.classes.min() < 0 or self.classes.max() >= k):
            raise RasterError("class index outside palette")

    @property
    def width(self) -> int:
        return self.classes.shape[1]

    @property
    def height(self) -> int:
        return self.classes.shape[0]

    def label_at(self, row: int, col: int) -> str:
        return self.palette.labels[int(self.classes[row, col])]

    def mask(self, label: str) -> np.ndarray:
        return self.classes == self.palette.index_of(label)


@dataclass
class SemanticPointCloud:
    """A semantic map viewed as a labeled point cloud (one point per pixel
    center). This is the Point-format value an imported semantic map
    contributes to a session."""

    grid: ClassGrid

    @property
    def points(self) -> np.ndarray:
        h, w = self.grid.classes.shape
        cs = self.grid.cell_size
        cols, rows = np.meshgrid(np.arange(w), np.arange(h))
        return np.column_stack([(cols.ravel() + 0.5) * cs, (rows.ravel() + 0.5) * cs])

    @property
    def labels(self) -> list[str]:
        pal = self.grid.palette.labels
        return [pal[int(i)] for i in self.grid.classes.ravel()]


@dataclass
class HeightGrid:
    elevation: np.ndarray  # (height, width) float64 meters
    cell_size: float

    def __post_init__(self):
        self.elevation = np.asarray(self.elevation, dtype=np.float64)
        if self.elevation.ndim != 2:
            raise RasterError("height grid must be 2-D")
        if not np.all(np.isfinite(self.elevation)):
            raise RasterError("height grid has non-finite values")

    @property
    def width(self) -> int:
        return self.elevation.shape[1]

    @property
    def height(self) -> int:
        return self.elevation.shape[0]


# ---------------------------------------------------------------------------
# loading


def _decode_rgb(image_bytes: bytes) -> np.ndarray:
    try:
        img = Image.open(io.BytesIO(image_bytes))
        img = img.convert("RGB")
    except Exception as e:
        raise BadImage(f"cannot decode image: {e}") from e
    return np.asarray(img, dtype=np.uint8)


def load_semantic_map(image_bytes: bytes, palette: Palette, cell_size: float = 1.0) -> ClassGrid:
    """Exact per-pixel palette lookup; off-palette pixels are an error."""
    arr = _decode_rgb(image_bytes)
    h, w, _ = arr.shape
    packed = (
        arr[:, :, 0].astype(np.int32) << 16
    ) | (arr[:, :, 1].astype(np.int32) << 8) | arr[:, :, 2].astype(np.int32)
    lut = {(c[0] << 16) | (c[1] << 8) | c[2]: i for i, (c, _) in enumerate(palette.entries)}
    classes = np.full((h, w), -1, dtype=np.int16)
    for key, idx in lut.items():
        classes[packed == key] = idx
    if (classes < 0).any():
        ys, xs = np.nonzero(classes < 0)
        y, x = int(ys[0]), int(xs[0])
        raise UnknownColor(x, y, tuple(int(v) for v in arr[y, x]))
    return ClassGrid(classes, cell_size, palette)


def quantize_satellite(image_bytes: bytes, palette: Palette, cell_size: float = 1.0) -> ClassGrid:
    """Nearest-palette quantization (squared RGB distance, ties by order)."""
    arr = _decode_rgb(image_bytes).astype(np.int32)
    colors = np.array([c for c, _ in palette.entries], dtype=np.int32)
    d = ((arr[:, :, None, :] - colors[None, None, :, :]) ** 2).sum(axis=3)
    classes = np.argmin(d, axis=2).astype(np.int16)  # argmin takes first on ties
    return ClassGrid(classes, cell_size, palette)


def grid_to_image(grid: ClassGrid) -> bytes:
    """Render a class grid back to an RGB PNG using its palette."""
    colors = np.array([c for c, _ in grid.palette.entries], dtype=np.uint8)
    rgb = colors[grid.classes]
    img = Image.fromarray(rgb, mode="RGB")
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()


def load_height_map(
    image_bytes: bytes, cell_size: float = 1.0, scale: float = DEFAULT_HEIGHT_SCALE
) -> HeightGrid:
    """16-bit grayscale PNG to meters (value x scale)."""
    try:
        img = Image.open(io.BytesIO(image_bytes))
    except Exception as e:
        raise BadImage(f"cannot decode image: {e}") from e
    arr = np.asarray(img)
    if arr.ndim != 2:
        raise BadImage("height field must be single-channel")
    return HeightGrid(arr.astype(np.float64) * scale, cell_size)


# ---------------------------------------------------------------------------
# vectorization


def _boundary_loops(mask: np.ndarray) -> list[np.ndarray]:
    """Pixel-edge loops of a binary mask, interior kept on the left.

    Corners are (x=col, y=row) lattice points. Outer loops come out with
    positive area, hole loops negative.
    """
    h, w = mask.shape
    padded = np.zeros((h + 2, w + 2), dtype=bool)
    padded[1:-1, 1:-1] = mask
    cells = np.argwhere(mask)
    edges: dict[tuple[int, int], list[tuple[int, int]]] = {}

    def add(a, b):
        edges.setdefault(a, []).append(b)

    for r, c in cells:
        if not padded[r, c + 1]:  # neighbour above (smaller y)
            add((c, r), (c + 1, r))
        if not padded[r + 2, c + 1]:  # below
            add((c + 1, r + 1), (c, r + 1))
        if not padded[r + 1, c]:  # left
            add((c, r + 1), (c, r))
        if not padded[r + 1, c + 2]:  # right
            add((c + 1, r), (c + 1, r + 1))

    loops = []
    # deterministic start order: sorted corner, then target
    starts = sorted(edges.keys())
    used: set[tuple[tuple[int, int], tuple[int, int]]] = set()
    for start in starts:
        for first in sorted(edges[start]):
            if (start, first) in used:
                continue
            loop = [start]
            prev, cur = start, first
            used.add((start, first))
            while cur != start:
                loop.append(cur)
                outs = [t for t in edges.get(cur, ()) if (cur, t) not in used]
                if not outs:
                    break
                if len(outs) == 1:
                    nxt = outs[0]
                else:
                    # diagonal corner: turn left relative to incoming direction
                    din = (cur[0] - prev[0], cur[1] - prev[1])
                    left = (-din[1], din[0])
                    nxt = next((t for t in outs if (t[0] - cur[0], t[1] - cur[1]) == left), None)
                    if nxt is None:
                        nxt = sorted(outs)[0]
                used.add((cur, nxt))
                prev, cur = cur, nxt
            if cur == start and len(loop) >= 4:
                loops.append(_merge_collinear(np.array(loop, dtype=np.float64)))
    return loops


def _merge_collinear(ring: np.ndarray) -> np.ndarray:
    keep = []
    n = len(ring)
    for i in range(n):
        a, b, c = ring[i - 1], ring[i], ring[(i + 1) % n]
        if abs((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])) > 1e-12:
            keep.append(i)
    return ring[keep] if keep else ring


def _dp_simplify_open(pts: np.ndarray, eps: float) -> np.ndarray:
    """Douglas-Peucker on an open chain, endpoints fixed."""
    if len(pts) <= 2:
        return pts
    a, b = pts[0], pts[-1]
    ab = b - a
    L = np.hypot(*ab)
    if L < 1e-12:
        d = np.linalg.norm(pts - a, axis=1)
    else:
        rel = pts - a
        d = np.abs(ab[0] * rel[:, 1] - ab[1] * rel[:, 0]) / L
    k = int(np.argmax(d))
    if d[k] <= eps:
        return np.array([a, b])
    left = _dp_simplify_open(pts[: k + 1], eps)
    right = _dp_simplify_open(pts[k:], eps)
    return np.vstack([left[:-1], right])


def simplify_ring(ring: np.ndarray, eps: float) -> np.ndarray:
    """Closed-ring Douglas-Peucker: anchor at the two most distant points."""
    if len(ring) <= 4 or eps <= 0:
        return ring
    d0 = np.linalg.norm(ring - ring[0], axis=1)
    j = int(np.argmax(d0))
    first = np.vstack([ring[: j + 1]])
    second = np.vstack([ring[j:], ring[:1]])
    s1 = _dp_simplify_open(first, eps)
    s2 = _dp_simplify_open(second, eps)
    out = np.vstack([s1[:-1], s2[:-1]])
    return out if len(out) >= 3 else ring


def vectorize_regions(
    grid: ClassGrid, simplify: bool = True
) -> list[tuple[Polygon, str]]:
    """Trace each 4-connected same-class component to polygons.

    Output is ordered by palette class then component scan order. Polygon
    coordinates are corner lattice points scaled by cell_size; holes are
    preserved so the regions of one class partition its pixel set. A
    component pinched at a corner yields one polygon per lobe.
    """
    four = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]])
    cs = grid.cell_size
    eps = 0.5 * cs
    out: list[tuple[Polygon, str]] = []
    for idx, label in enumerate(grid.palette.labels):
        mask = grid.classes == idx
        if not mask.any():
            continue
        labeled, n = ndimage.label(mask, structure=four)
        for comp in range(1, n + 1):
            loops = _boundary_loops(labeled == comp)
            outers = [l for l in loops if _loop_area(l) > 0]
            holes = [l for l in loops if _loop_area(l) < 0]
            outers.sort(key=lambda l: (l[:, 1].min(), l[:, 0].min()))
            for outer in outers:
                mine = [h for h in holes if _loop_inside(h, outer, outers)]
                outer_s = outer * cs
                holes_s = [h * cs for h in mine]
                if simplify:
                    outer_s = simplify_ring(outer_s, eps)
                    holes_s = [simplify_ring(h, eps) for h in holes_s]
                    holes_s = [h for h in holes_s if len(h) >= 3]
                try:
                    out.append((Polygon(outer_s, holes_s), label))
                except ValueError:
                    continue
    return out


def _loop_inside(hole: np.ndarray, outer: np.ndarray, all_outers) -> bool:
    """Assign a hole to the smallest positive loop containing it."""
    from .geometry import point_in_ring

    probe = (hole[0] + hole[1]) / 2.0
    containing = [o for o in all_outers if point_in_ring(probe, o)]
    if not containing:
        return False
    smallest = min(containing, key=_loop_area)
    return smallest is outer


def _loop_area(loop: np.ndarray) -> float:
    x, y = loop[:, 0], loop[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


# ---------------------------------------------------------------------------
# rasterization


def polygon_mask(shape: tuple[int, int], cell_size: float, poly: Polygon) -> np.ndarray:
    """Even-odd scanline fill of a polygon (with holes) at pixel centers."""
    h, w = shape
    mask = np.zeros(shape, dtype=bool)
    rings = [poly.outer] + list(poly.holes)
    ys = np.concatenate([r[:, 1] for r in rings])
    r0 = max(0, int(np.floor(ys.min() / cell_size - 0.5)))
    r1 = min(h - 1, int(np.ceil(ys.max() / cell_size - 0.5)))
    for r in range(r0, r1 + 1):
        y = (r + 0.5) * cell_size
        xs = []
        for ring in rings:
            n = len(ring)
            for i in range(n):
                x0, y0 = ring[i]
                x1, y1 = ring[(i + 1) % n]
                if (y0 > y) != (y1 > y):
                    xs.append(x0 + (y - y0) * (x1 - x0) / (y1 - y0))
        xs.sort()
        for a, b in zip(xs[::2], xs[1::2]):
            c0 = max(0, int(np.ceil(a / cell_size - 0.5)))
            c1 = min(w - 1, int(np.floor(b / cell_size - 0.5)))
            if c1 >= c0:
                mask[r, c0 : c1 + 1] = True
    return mask


# ---------------------------------------------------------------------------
# height sampling


def sample_height(grid: HeightGrid, x: float, y: float) -> float:
    """Bilinear interpolation between the four surrounding cell centers."""
    cs = grid.cell_size
    if not (0.0 <= x <= grid.width * cs and 0.0 <= y <= grid.height * cs):
        raise OutOfExtent(f"({x}, {y}) outside grid extent")
    u = x / cs - 0.5
    v = y / cs - 0.5
    u = min(max(u, 0.0), grid.width - 1.0)
    v = min(max(v, 0.0), grid.height - 1.0)
    c0, r0 = int(np.floor(u)), int(np.floor(v))
    c1, r1 = min(c0 + 1, grid.width - 1), min(r0 + 1, grid.height - 1)
    fu, fv = u - c0, v - r0
    e = grid.elevation
    top = e[r0, c0] * (1 - fu) + e[r0, c1] * fu
    bot = e[r1, c0] * (1 - fu) + e[r1, c1] * fu
    return float(top * (1 - fv) + bot * fv)

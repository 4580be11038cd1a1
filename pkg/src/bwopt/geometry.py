"""Grid, genotype and layout geometry for breakwater planning.

Coordinate convention used throughout the package: positions are continuous
and measured in cell units, x runs along columns, y along rows. Integer
coordinates are cell centers, so cell (i, j) covers the half-open square
[i - 0.5, i + 0.5) x [j - 0.5, j + 0.5). Angles are degrees, counterclockwise
from the +x axis.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

LAND = -1.0  # depth sentinel marking land cells

_CORNER_EPS = 1e-12


class Material(str, Enum):
    SOLID_WALL = "solid_wall"
    TETRAPOD = "tetrapod"


class Encoding(str, Enum):
    CARTESIAN = "cartesian"
    ANGULAR = "angular"


def normalize_angle(angle):
    """Map an angle in degrees to [-180, 180); in-range values pass through bitwise.

    Works on scalars and arrays. The pass-through matters: re-normalizing an
    already normalized genotype must not perturb genes at all.
    """
    if isinstance(angle, np.ndarray):
        wrapped = (angle + 180.0) % 360.0 - 180.0
        return np.where((angle >= -180.0) & (angle < 180.0), angle, wrapped)
    if -180.0 <= angle < 180.0:
        return float(angle)
    return float((angle + 180.0) % 360.0 - 180.0)


@dataclass(frozen=True)
class ScenarioGrid:
    """Regular bathymetry grid; land cells carry the LAND sentinel depth."""

    n_cols: int
    n_rows: int
    cell_size: float
    depth: np.ndarray      # (n_rows, n_cols), meters; LAND on land
    land_mask: np.ndarray  # (n_rows, n_cols), bool

    def __post_init__(self) -> None:
        if self.n_cols < 2 or self.n_rows < 2:
            raise ValueError("grid must be at least 2x2")
        if not self.cell_size > 0:
            raise ValueError("cell_size must be positive")
        if self.depth.shape != (self.n_rows, self.n_cols):
            raise ValueError("depth shape does not match grid dimensions")
        if not np.array_equal(self.land_mask, self.depth == LAND):
            raise ValueError("land_mask must mark exactly the LAND-sentinel cells")

    @classmethod
    def from_depth(cls, depth: np.ndarray, cell_size: float = 25.0) -> "ScenarioGrid":
        depth = np.asarray(depth, dtype=float)
        return cls(
            n_cols=depth.shape[1],
            n_rows=depth.shape[0],
            cell_size=float(cell_size),
            depth=depth,
            land_mask=depth == LAND,
        )

    def cell_of(self, x: float, y: float) -> tuple[int, int]:
        """Cell (col, row) containing the continuous point (x, y)."""
        return int(math.floor(x + 0.5)), int(math.floor(y + 0.5))

    def in_bounds(self, x: float, y: float) -> bool:
        col, row = self.cell_of(x, y)
        return 0 <= col < self.n_cols and 0 <= row < self.n_rows

    def is_water(self, x: float, y: float) -> bool:
        col, row = self.cell_of(x, y)
        return self.in_bounds(x, y) and not self.land_mask[row, col]


@dataclass(frozen=True)
class AttachmentPoint:
    """Fixed coastal anchor a new breakwater starts from."""

    x: float
    y: float
    base_angle: float  # reference heading for the first angular segment


@dataclass(frozen=True)
class Attachment:
    point: AttachmentPoint
    n_segments: int
    material: Material = Material.SOLID_WALL


@dataclass
class Genotype:
    """Flat gene vector, two genes per segment block.

    Cartesian blocks are absolute endpoint coordinates (cells) chained from
    the attachment point. Angular blocks are (length in cells, angle in
    degrees relative to the previous segment heading, base_angle for the
    first). Angular lengths must be non-negative; angles are normalized to
    [-180, 180) on construction.
    """

    encoding: Encoding
    genes: np.ndarray

    def __post_init__(self) -> None:
        self.genes = np.array(self.genes, dtype=float).ravel()
        if self.genes.size % 2 != 0:
            raise ValueError("gene vector length must be even (two genes per block)")
        if self.encoding is Encoding.ANGULAR:
            if np.any(self.genes[0::2] < 0):
                raise ValueError("angular lengths must be non-negative")
            self.genes[1::2] = normalize_angle(self.genes[1::2])

    @property
    def n_blocks(self) -> int:
        return self.genes.size // 2

    @property
    def blocks(self) -> np.ndarray:
        return self.genes.reshape(-1, 2)

    def copy(self) -> "Genotype":
        return Genotype(self.encoding, self.genes.copy())


@dataclass
class Layout:
    """Decoded breakwater polylines, one per attachment, in cell coordinates."""

    breakwaters: list[np.ndarray]  # each (k_i + 1, 2), first vertex = attachment
    materials: list[Material]

    def segments(self):
        """Yield non-degenerate (p, q) vertex pairs over all breakwaters."""
        for verts in self.breakwaters:
            for p, q in zip(verts[:-1], verts[1:]):
                if p[0] != q[0] or p[1] != q[1]:
                    yield p, q

    def total_length(self) -> float:
        """Total polyline length in cell units."""
        return float(sum(math.hypot(q[0] - p[0], q[1] - p[1]) for p, q in self.segments()))


def total_blocks(attachments: list[Attachment]) -> int:
    return sum(a.n_segments for a in attachments)


def decode(genotype: Genotype, attachments: list[Attachment]) -> Layout:
    """Decode a genotype into breakwater polylines.

    Blocks are consumed attachment-major: the first attachment's segments
    first. Angular headings accumulate relative angles block by block
    (zero-length blocks still turn the heading); zero-length segments leave
    the vertex where it was.
    """
    blocks = genotype.blocks
    if len(blocks) != total_blocks(attachments):
        raise ValueError(
            f"genotype has {len(blocks)} blocks, attachments require {total_blocks(attachments)}"
        )
    breakwaters: list[np.ndarray] = []
    materials: list[Material] = []
    k = 0
    for att in attachments:
        own = blocks[k : k + att.n_segments]
        k += att.n_segments
        verts = np.empty((att.n_segments + 1, 2), dtype=float)
        verts[0] = (att.point.x, att.point.y)
        if genotype.encoding is Encoding.CARTESIAN:
            verts[1:] = own
        else:
            heading = att.point.base_angle
            x, y = att.point.x, att.point.y
            for i, (length, rel_angle) in enumerate(own):
                heading += rel_angle
                x += length * math.cos(math.radians(heading))
                y += length * math.sin(math.radians(heading))
                verts[i + 1] = (x, y)
        breakwaters.append(verts)
        materials.append(att.material)
    return Layout(breakwaters, materials)


def convert(genotype: Genotype, attachments: list[Attachment], target: Encoding) -> Genotype:
    """Re-express a genotype in the target encoding, preserving decoded vertices.

    Zero-length segments convert to relative angle 0 (their original heading
    is not recoverable), so the round trip is exact on vertices, not genes.
    """
    if target is genotype.encoding:
        return genotype.copy()
    layout = decode(genotype, attachments)
    genes: list[float] = []
    if target is Encoding.CARTESIAN:
        for verts in layout.breakwaters:
            genes.extend(verts[1:].ravel())
    else:
        for att, verts in zip(attachments, layout.breakwaters):
            heading = att.point.base_angle
            for p, q in zip(verts[:-1], verts[1:]):
                dx, dy = q[0] - p[0], q[1] - p[1]
                length = math.hypot(dx, dy)
                if length == 0.0:
                    rel = 0.0
                else:
                    rel = normalize_angle(math.degrees(math.atan2(dy, dx)) - heading)
                    heading += rel
                genes.extend((length, rel))
    return Genotype(target, np.array(genes))


# ----- intersection predicates -------------------------------------------

def _orient(o, a, b) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def segments_cross(p1, p2, q1, q2) -> bool:
    """True iff the open segments cross transversally.

    Touching configurations (shared endpoints, T-junctions, collinear
    overlap) do not count as crossings.
    """
    d1 = _orient(q1, q2, p1)
    d2 = _orient(q1, q2, p2)
    d3 = _orient(p1, p2, q1)
    d4 = _orient(p1, p2, q2)
    return d1 * d2 < 0 and d3 * d4 < 0


def count_self_intersections(layout: Layout, existing: list[np.ndarray] | None = None) -> int:
    """Transversal crossings among new segments and against existing structures.

    Segments of one chain share vertices with their neighbours; those shared
    endpoints are touches, not crossings, and are not counted.
    """
    new_segments = list(layout.segments())
    count = 0
    for i in range(len(new_segments)):
        for j in range(i + 1, len(new_segments)):
            if segments_cross(*new_segments[i], *new_segments[j]):
                count += 1
    for verts in existing or []:
        for a, b in zip(verts[:-1], verts[1:]):
            for p, q in new_segments:
                if segments_cross(p, q, a, b):
                    count += 1
    return count


def count_fairway_intersections(layout: Layout, fairway: np.ndarray) -> int:
    """Transversal crossings between new segments and the fairway polyline."""
    count = 0
    for a, b in zip(fairway[:-1], fairway[1:]):
        for p, q in layout.segments():
            if segments_cross(p, q, a, b):
                count += 1
    return count


# ----- rasterization ------------------------------------------------------

def supercover_line(p0, p1) -> list[tuple[int, int]]:
    """Cells touched by the segment p0-p1, ordered along the segment.

    Supercover traversal: steps move one cell in x or y at a time, and an
    exact pass through a cell corner adds both side cells, so the result is
    4-connected and thin diagonal chains leave no gap a transversal ray could
    slip through.
    """
    # shift by +0.5 so cell boundaries sit at integers
    x0, y0 = float(p0[0]) + 0.5, float(p0[1]) + 0.5
    x1, y1 = float(p1[0]) + 0.5, float(p1[1]) + 0.5
    ix, iy = int(math.floor(x0)), int(math.floor(y0))
    cells = [(ix, iy)]
    dx, dy = x1 - x0, y1 - y0
    step_x = 1 if dx > 0 else -1
    step_y = 1 if dy > 0 else -1
    if dx != 0.0:
        t_dx = abs(1.0 / dx)
        t_max_x = ((ix + (1 if dx > 0 else 0)) - x0) / dx
    else:
        t_dx = t_max_x = math.inf
    if dy != 0.0:
        t_dy = abs(1.0 / dy)
        t_max_y = ((iy + (1 if dy > 0 else 0)) - y0) / dy
    else:
        t_dy = t_max_y = math.inf
    while min(t_max_x, t_max_y) <= 1.0 + _CORNER_EPS:
        if abs(t_max_x - t_max_y) <= _CORNER_EPS:
            cells.append((ix + step_x, iy))
            cells.append((ix, iy + step_y))
            ix += step_x
            iy += step_y
            t_max_x += t_dx
            t_max_y += t_dy
        elif t_max_x < t_max_y:
            ix += step_x
            t_max_x += t_dx
        else:
            iy += step_y
            t_max_y += t_dy
        cells.append((ix, iy))
    return cells


def layout_cells(layout: Layout, grid: ScenarioGrid) -> list[tuple[int, int]]:
    """Distinct in-grid cells covered by the layout, in traversal order."""
    seen: dict[tuple[int, int], None] = {}
    for p, q in layout.segments():
        for col, row in supercover_line(p, q):
            if 0 <= col < grid.n_cols and 0 <= row < grid.n_rows:
                seen.setdefault((col, row), None)
    return list(seen)


def rasterize(
    layout: Layout,
    grid: ScenarioGrid,
    transmission: dict[Material, float],
) -> list[tuple[tuple[int, int], float]]:
    """Obstacle cells for the wave model: ((col, row), transmission coefficient).

    Cells covered by more than one structure keep the smallest (most
    blocking) coefficient. Cells outside the grid are dropped.
    """
    out: dict[tuple[int, int], float] = {}
    for verts, mat in zip(layout.breakwaters, layout.materials):
        coeff = float(transmission[mat])
        for p, q in zip(verts[:-1], verts[1:]):
            if p[0] == q[0] and p[1] == q[1]:
                continue
            for col, row in supercover_line(p, q):
                if 0 <= col < grid.n_cols and 0 <= row < grid.n_rows:
                    prev = out.get((col, row))
                    out[(col, row)] = coeff if prev is None else min(prev, coeff)
    return list(out.items())


def count_land_coverage(layout: Layout, grid: ScenarioGrid) -> int:
    """Number of distinct rasterized layout cells that fall on land."""
    return sum(1 for col, row in layout_cells(layout, grid) if grid.land_mask[row, col])


# ----- distances ----------------------------------------------------------

def sample_polyline(verts: np.ndarray, step: float) -> np.ndarray:
    """Points along a polyline at spacing <= step, endpoints included."""
    verts = np.asarray(verts, dtype=float)
    points = [verts[0]]
    for p, q in zip(verts[:-1], verts[1:]):
        length = math.hypot(q[0] - p[0], q[1] - p[1])
        if length == 0.0:
            continue
        n = max(1, math.ceil(length / step))
        ts = np.arange(1, n + 1) / n
        points.extend(p + ts[:, None] * (q - p))
    return np.asarray(points)


def min_polyline_distance(
    polylines_a: list[np.ndarray],
    polylines_b: list[np.ndarray],
    step: float,
) -> float:
    """Smallest distance between two polyline families, by dense sampling."""
    a = np.concatenate([sample_polyline(v, step) for v in polylines_a])
    b = np.concatenate([sample_polyline(v, step) for v in polylines_b])
    d2 = np.sum((a[:, None, :] - b[None, :, :]) ** 2, axis=-1)
    return float(math.sqrt(d2.min()))


def min_distance_to_fairway(
    layout: Layout,
    fairway: np.ndarray,
    cell_size: float,
    sampling_step: float = 0.25,
) -> float:
    """Navigational clearance in meters between new structures and the fairway.

    A fully degenerate layout still has its attachment vertices, so the
    distance falls back to the attachment points.
    """
    return (
        min_polyline_distance(list(layout.breakwaters), [np.asarray(fairway, dtype=float)], sampling_step)
        * cell_size
    )


def point_segment_distance(p, a, b) -> float:
    """Distance from point p to segment ab."""
    px, py = p[0] - a[0], p[1] - a[1]
    sx, sy = b[0] - a[0], b[1] - a[1]
    denom = sx * sx + sy * sy
    t = 0.0 if denom == 0.0 else min(1.0, max(0.0, (px * sx + py * sy) / denom))
    return math.hypot(px - t * sx, py - t * sy)


def point_polyline_distance(p, verts: np.ndarray) -> float:
    return min(point_segment_distance(p, a, b) for a, b in zip(verts[:-1], verts[1:]))

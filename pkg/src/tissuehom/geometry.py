"""Honeycomb tissue geometry.

Convention: hexagonal cells have two vertical walls of length l1 and four
oblique walls of length l2 inclined at theta degrees from the horizontal
(theta = 30 with l1 = l2 gives the regular hexagon).  The periodicity box of
the lattice is [0, 2 l2 cos(theta)] x [0, 2 (l1 + l2 sin(theta))]; it holds
one hexagon centered in the box and a second one wrapped across the four
corners.

Cell voids are the cell hexagons scaled about their centers by the factor
(1 - w / l2), so the relative wall thickness w/l2 runs from 0 (no walls) to
1 (solid material, voids vanish).  Between adjacent cells this produces
mitred wall bands whose thickness is uniform for theta = 30 degrees and
proportional to w for any angle.  The exact wall area fraction is
1 - (1 - w/l2)^2.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Boundary tags
OUTER_BOTTOM = 1
OUTER_OTHER = 2
CELL_INTERFACE = 3

_EDGE_ON_SIDE_TOL = 1e-12


@dataclass(frozen=True)
class CellGeometry:
    """Honeycomb cell parameters: wall lengths l1, l2, angle (deg), thickness w."""

    l1: float = 1.0
    l2: float = 1.0
    theta_deg: float = 30.0
    w: float = 0.05

    def __post_init__(self):
        if self.l1 <= 0 or self.l2 <= 0:
            raise ValueError("wall lengths must be positive")
        if not 0.0 < self.theta_deg < 90.0:
            raise ValueError("wall angle must lie strictly between 0 and 90 degrees")
        if self.w <= 0:
            raise ValueError("wall thickness must be positive")
        if self.w >= self.l2:
            raise ValueError(
                f"infeasible geometry: w/l2 = {self.w / self.l2:.3f} >= 1, cell void is empty"
            )

    @property
    def theta(self) -> float:
        return np.deg2rad(self.theta_deg)

    @property
    def half_width(self) -> float:
        """Half the hexagon width, l2 cos(theta)."""
        return self.l2 * np.cos(self.theta)

    @property
    def row_pitch(self) -> float:
        """Vertical spacing of cell rows, l1 + l2 sin(theta)."""
        return self.l1 + self.l2 * np.sin(self.theta)

    @property
    def box(self) -> tuple[float, float]:
        """Periodicity box dimensions (ax, ay)."""
        return 2.0 * self.half_width, 2.0 * self.row_pitch

    @property
    def void_scale(self) -> float:
        return 1.0 - self.w / self.l2

    @property
    def wall_fraction(self) -> float:
        """|Y_w| / |Y|, exact for the scaled-void construction."""
        return 1.0 - self.void_scale**2

    def hex_vertices(self) -> np.ndarray:
        """Cell hexagon centered at the origin, CCW starting bottom-right."""
        hw = self.half_width
        hh = 0.5 * self.l1
        cap = self.l2 * np.sin(self.theta)
        return np.array(
            [
                [hw, -hh],
                [hw, hh],
                [0.0, hh + cap],
                [-hw, hh],
                [-hw, -hh],
                [0.0, -hh - cap],
            ]
        )

    def void_vertices(self) -> np.ndarray:
        """Cell void hexagon centered at the origin, CCW."""
        return self.void_scale * self.hex_vertices()


@dataclass(frozen=True)
class TissueLayout:
    """Rectangular tissue: Nx cells per row, Nx/2 cell layers, fixed width.

    Cells scale with delta = 1/Nx so the bounding box is identical for every
    Nx at fixed physical width.  Bottom and top cell layers are cut
    horizontally at their mid-height, which keeps the tissue an exact
    rectangle of Nx * (Nx/2) cell equivalents.
    """

    Nx: int = 16
    geometry: CellGeometry = field(default_factory=CellGeometry)
    width: float = 7.0

    def __post_init__(self):
        if self.Nx < 2 or self.Nx % 2 != 0:
            raise ValueError("Nx must be an even integer >= 2")
        if self.width <= 0:
            raise ValueError("tissue width must be positive")

    @property
    def delta(self) -> float:
        return 1.0 / self.Nx

    @property
    def scale(self) -> float:
        """Physical length of one lattice unit."""
        ax, _ = self.geometry.box
        return self.width / (self.Nx * ax)

    @property
    def height(self) -> float:
        return (self.Nx // 2) * self.geometry.row_pitch * self.scale

    @property
    def box_width(self) -> float:
        """Physical width of one periodicity box (= width / Nx)."""
        return self.geometry.box[0] * self.scale

    @property
    def n_rows(self) -> int:
        """Number of cell-row positions (rows 0 and Nx/2 are half rows)."""
        return self.Nx // 2 + 1


# ---------------------------------------------------------------------------
# polygon utilities
# ---------------------------------------------------------------------------


def polygon_area(poly: np.ndarray) -> float:
    """Signed shoelace area (positive for CCW)."""
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def clip_polygon_rect(poly: np.ndarray, W: float, H: float) -> np.ndarray:
    """Sutherland-Hodgman clip of a convex CCW polygon to [0,W] x [0,H]."""

    def clip_half(pts, inside, intersect):
        out = []
        n = len(pts)
        for i in range(n):
            a, b = pts[i], pts[(i + 1) % n]
            ina, inb = inside(a), inside(b)
            if ina:
                out.append(a)
                if not inb:
                    out.append(intersect(a, b))
            elif inb:
                out.append(intersect(a, b))
        return out

    def x_cut(level, keep_ge):
        def inside(p):
            return (p[0] >= level) if keep_ge else (p[0] <= level)

        def intersect(a, b):
            t = (level - a[0]) / (b[0] - a[0])
            return np.array([level, a[1] + t * (b[1] - a[1])])

        return inside, intersect

    def y_cut(level, keep_ge):
        def inside(p):
            return (p[1] >= level) if keep_ge else (p[1] <= level)

        def intersect(a, b):
            t = (level - a[1]) / (b[1] - a[1])
            return np.array([a[0] + t * (b[0] - a[0]), level])

        return inside, intersect

    pts = [np.asarray(p, dtype=float) for p in poly]
    for inside, intersect in (
        x_cut(0.0, True),
        x_cut(W, False),
        y_cut(0.0, True),
        y_cut(H, False),
    ):
        pts = clip_half(pts, inside, intersect)
        if not pts:
            return np.zeros((0, 2))
    # drop duplicate consecutive vertices produced by touching corners
    cleaned = [pts[0]]
    for p in pts[1:]:
        if np.linalg.norm(p - cleaned[-1]) > 1e-14 * max(W, H):
            cleaned.append(p)
    if len(cleaned) > 1 and np.linalg.norm(cleaned[0] - cleaned[-1]) <= 1e-14 * max(W, H):
        cleaned.pop()
    return np.array(cleaned)


def points_in_convex(points: np.ndarray, poly: np.ndarray, strict: bool = True) -> np.ndarray:
    """Vectorized containment test against a convex CCW polygon."""
    if len(poly) < 3:
        return np.zeros(len(points), dtype=bool)
    inside = np.ones(len(points), dtype=bool)
    n = len(poly)
    for i in range(n):
        a = poly[i]
        d = poly[(i + 1) % n] - a
        cross = d[0] * (points[:, 1] - a[1]) - d[1] * (points[:, 0] - a[0])
        inside &= (cross > 0) if strict else (cross >= 0)
    return inside


def distance_to_polygon(points: np.ndarray, poly: np.ndarray) -> np.ndarray:
    """Distance from points to the boundary of a polygon (vectorized)."""
    best = np.full(len(points), np.inf)
    n = len(poly)
    for i in range(n):
        a = poly[i]
        b = poly[(i + 1) % n]
        ab = b - a
        L2 = float(ab @ ab)
        t = np.clip(((points - a) @ ab) / L2, 0.0, 1.0)
        proj = a + t[:, None] * ab
        d = np.linalg.norm(points - proj, axis=1)
        best = np.minimum(best, d)
    return best


# ---------------------------------------------------------------------------
# planar regions (meshing input)
# ---------------------------------------------------------------------------


@dataclass
class ClippedVoid:
    """A cell void polygon after clipping to the domain rectangle."""

    poly: np.ndarray  # CCW vertices
    center: np.ndarray
    cell_id: int

    @property
    def area(self) -> float:
        return polygon_area(self.poly)


@dataclass
class PlanarRegion:
    """Rectangle [0,W] x [0,H] minus a set of convex void polygons."""

    W: float
    H: float
    voids: list[ClippedVoid]
    periodic: bool = False
    # per-void feature radius used to pick containment candidates
    candidate_radius: float = 0.0

    def __post_init__(self):
        if self.voids:
            self.candidate_radius = 1.001 * max(
                np.max(np.linalg.norm(v.poly - v.center, axis=1), initial=0.0)
                for v in self.voids
            )
        self._centers = (
            np.array([v.center for v in self.voids]) if self.voids else np.zeros((0, 2))
        )

    @property
    def diameter(self) -> float:
        return float(np.hypot(self.W, self.H))

    def material_area(self) -> float:
        return self.W * self.H - sum(v.area for v in self.voids)

    def contains(self, points: np.ndarray) -> np.ndarray:
        """True for points in the wall material (inside box, outside voids)."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        tol = 1e-12 * self.diameter
        ok = (
            (points[:, 0] >= -tol)
            & (points[:, 0] <= self.W + tol)
            & (points[:, 1] >= -tol)
            & (points[:, 1] <= self.H + tol)
        )
        if not self.voids:
            return ok
        from scipy.spatial import cKDTree

        tree = cKDTree(self._centers)
        groups = tree.query_ball_point(points, self.candidate_radius)
        for k, idxs in enumerate(groups):
            if not ok[k]:
                continue
            for i in idxs:
                if points_in_convex(points[k : k + 1], self.voids[i].poly)[0]:
                    ok[k] = False
                    break
        return ok

    def nearest_void(self, points: np.ndarray) -> np.ndarray:
        """Index of the void whose boundary is closest to each point."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if not self.voids:
            return np.zeros(len(points), dtype=int)
        from scipy.spatial import cKDTree

        tree = cKDTree(self._centers)
        k = min(6, len(self.voids))
        _, cand = tree.query(points, k=k)
        cand = np.atleast_2d(cand)
        best = np.full(len(points), np.inf)
        owner = np.zeros(len(points), dtype=int)
        for col in range(cand.shape[1]):
            ids = cand[:, col]
            for vid in np.unique(ids):
                sel = ids == vid
                d = distance_to_polygon(points[sel], self.voids[vid].poly)
                upd = d < best[sel]
                tmp_owner = owner[sel]
                tmp_best = best[sel]
                tmp_owner[upd] = vid
                tmp_best[upd] = d[upd]
                owner[sel] = tmp_owner
                best[sel] = tmp_best
        return owner

    def side_material_intervals(self, side: str) -> list[tuple[float, float]]:
        """Material sub-intervals of one box side after removing void mouths."""
        # run = coordinate index along the side, fix = the held coordinate
        run = 0 if side in ("bottom", "top") else 1
        fix = 1 - run
        length = self.W if run == 0 else self.H
        level = {"bottom": 0.0, "top": self.H, "left": 0.0, "right": self.W}[side]
        tol = _EDGE_ON_SIDE_TOL * max(self.W, self.H, 1.0)
        mouths = []
        for v in self.voids:
            poly = v.poly
            n = len(poly)
            for i in range(n):
                a, b = poly[i], poly[(i + 1) % n]
                if abs(a[fix] - level) <= tol and abs(b[fix] - level) <= tol:
                    lo, hi = sorted((a[run], b[run]))
                    if hi - lo > tol:
                        mouths.append((lo, hi))
        mouths.sort()
        intervals = []
        pos = 0.0
        for lo, hi in mouths:
            if lo - pos > tol:
                intervals.append((pos, lo))
            pos = max(pos, hi)
        if length - pos > tol:
            intervals.append((pos, length))
        return intervals

    def membrane_segments(self, void: ClippedVoid) -> list[tuple[np.ndarray, np.ndarray]]:
        """Void boundary edges that are wall-void interfaces (not box mouths).

        Returned oriented clockwise around the void so that wall material is
        on the left of each (a, b) segment.
        """
        tol = _EDGE_ON_SIDE_TOL * max(self.W, self.H, 1.0)
        segs = []
        poly = void.poly[::-1]  # CW
        n = len(poly)
        for i in range(n):
            a, b = poly[i], poly[(i + 1) % n]
            on_side = False
            for axis, level in ((1, 0.0), (1, self.H), (0, 0.0), (0, self.W)):
                if abs(a[axis] - level) <= tol and abs(b[axis] - level) <= tol:
                    on_side = True
                    break
            if not on_side:
                segs.append((a.copy(), b.copy()))
        return segs


# ---------------------------------------------------------------------------
# unit cell and tissue construction
# ---------------------------------------------------------------------------


def build_unit_cell(geom: CellGeometry) -> PlanarRegion:
    """Periodicity box with the two cell voids of the honeycomb pattern.

    Void 0 is the centered hexagon (strictly inside the box); void 1 is the
    hexagon wrapped across the corners, represented by its four clipped
    corner pieces which share cell_id 1.
    """
    ax, ay = geom.box
    vh = geom.void_vertices()
    voids = []
    center = np.array([0.5 * ax, 0.5 * ay])
    voids.append(ClippedVoid(vh + center, center, 0))
    for corner in (
        np.array([0.0, 0.0]),
        np.array([ax, 0.0]),
        np.array([0.0, ay]),
        np.array([ax, ay]),
    ):
        piece = clip_polygon_rect(vh + corner, ax, ay)
        if len(piece) >= 3 and abs(polygon_area(piece)) > 1e-14 * ax * ay:
            voids.append(ClippedVoid(piece, corner, 1))
    region = PlanarRegion(ax, ay, voids, periodic=True)
    if region.material_area() <= 0:
        raise ValueError("infeasible geometry: wall material has no area")
    return region


@dataclass
class TissueCell:
    """One biological cell of the tissue (possibly cut by the boundary)."""

    cell_id: int
    row: int
    col: int
    center: np.ndarray
    box_col: int  # periodicity-box column, anchors the piecewise pressure


@dataclass
class TissueRegion(PlanarRegion):
    layout: TissueLayout | None = None
    cells: list[TissueCell] = field(default_factory=list)


def build_tissue(layout: TissueLayout) -> TissueRegion:
    """Rectangular tissue of Nx * (Nx/2) hexagonal cell equivalents.

    Rows k = 0 .. Nx/2 sit at height k * row_pitch; even rows have cell
    centers on box seams (cells at the lateral boundaries are halved), odd
    rows are offset by half a box.  Rows 0 and Nx/2 are halved by the bottom
    and top boundaries.
    """
    geom = layout.geometry
    s = layout.scale
    ax, _ = geom.box
    pitch = geom.row_pitch * s
    W, H = layout.width, layout.height
    vh = geom.void_vertices() * s
    box_w = layout.box_width

    voids: list[ClippedVoid] = []
    cells: list[TissueCell] = []
    cid = 0
    for k in range(layout.n_rows):
        y = k * pitch
        if k % 2 == 0:
            xs = [m * box_w for m in range(layout.Nx + 1)]
        else:
            xs = [(m + 0.5) * box_w for m in range(layout.Nx)]
        for m, x in enumerate(xs):
            center = np.array([x, y])
            piece = clip_polygon_rect(vh + center, W, H)
            if len(piece) < 3 or abs(polygon_area(piece)) < 1e-14 * W * H:
                continue
            box_col = int(np.floor(x / box_w + 1e-9))
            box_col = min(box_col, layout.Nx - 1)
            voids.append(ClippedVoid(piece, center, cid))
            cells.append(TissueCell(cid, k, m, center, box_col))
            cid += 1
    region = TissueRegion(W, H, voids, periodic=False, layout=layout, cells=cells)
    return region


def membrane_first_moment(region: PlanarRegion) -> np.ndarray:
    """(1/|Y|) integral over the wall-void interface of y1 * N, exact.

    N is the outward normal of the wall domain (pointing into the voids).
    Scale-invariant; multiplied by -dP1/dx1 it gives the pressure-corrector
    vector of the homogenized problem.
    """
    total = np.zeros(2)
    for v in region.voids:
        for a, b in region.membrane_segments(v):
            d = b - a
            length = float(np.linalg.norm(d))
            if length == 0.0:
                continue
            normal = np.array([d[1], -d[0]]) / length
            y1_mid = 0.5 * (a[0] + b[0])
            total += y1_mid * normal * length
    return total / (region.W * region.H)

"""Conforming triangulation of wall-band and rectangle domains.

One code path covers the periodic unit cell, the cellular tissue and plain
rectangles: boundary polylines are subdivided at the requested density,
interior points come from a hexagonal grid with a clearance band along the
boundary, and scipy's Delaunay triangulation is filtered to the material
region.  Every boundary subdivision segment must appear as a mesh edge; if
one is lost to the Delaunay step it is split (together with its periodic
twin) and the triangulation is rebuilt.

Opposite sides of a periodic box are subdivided by literal translation of
the same points, which makes periodic node matching exact up to round-off.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import Delaunay, cKDTree

from .geometry import (
    CELL_INTERFACE,
    OUTER_BOTTOM,
    OUTER_OTHER,
    PlanarRegion,
    points_in_convex,
)

GEOM_TOL_REL = 1e-9  # x domain diameter
AREA_EPS_REL = 1e-12  # x domain area


class MeshingError(RuntimeError):
    pass


@dataclass
class Mesh2D:
    """Triangulated planar domain with region and boundary tags."""

    nodes: np.ndarray  # (n, 2)
    triangles: np.ndarray  # (m, 3) CCW
    region: np.ndarray  # (m,) int
    bedge_nodes: np.ndarray  # (k, 2) oriented with material on the left
    bedge_tag: np.ndarray  # (k,) int
    bedge_cell: np.ndarray  # (k,) int, -1 when not a membrane
    periodic_master: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    periodic_slave: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    periodic_shift: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))
    rect_info: tuple[int, int] | None = None  # (nx, ny) for structured meshes

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def tri_areas(self) -> np.ndarray:
        p = self.nodes[self.triangles]
        return 0.5 * (
            (p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
            - (p[:, 2, 0] - p[:, 0, 0]) * (p[:, 1, 1] - p[:, 0, 1])
        )

    def centroids(self) -> np.ndarray:
        return self.nodes[self.triangles].mean(axis=1)

    def diameter(self) -> float:
        lo = self.nodes.min(axis=0)
        hi = self.nodes.max(axis=0)
        return float(np.hypot(*(hi - lo)))

    def audit(self) -> None:
        """Raise on any violated mesh invariant."""
        areas = self.tri_areas()
        area_eps = AREA_EPS_REL * float(np.sum(np.abs(areas)))
        if np.any(areas <= area_eps):
            bad = int(np.argmin(areas))
            raise MeshingError(
                f"degenerate triangle {bad}: area {areas[bad]:.3e} <= {area_eps:.3e}"
            )
        if len(self.region) != self.n_triangles:
            raise MeshingError("region tags do not partition the triangles")
        geom_tol = GEOM_TOL_REL * self.diameter()
        if len(self.periodic_master):
            gap = (
                self.nodes[self.periodic_slave]
                - self.nodes[self.periodic_master]
                - self.periodic_shift
            )
            worst = float(np.abs(gap).max())
            if worst > geom_tol:
                raise MeshingError(
                    f"periodic pair coordinate mismatch {worst:.3e} > {geom_tol:.3e}"
                )
            if set(self.periodic_master) & set(self.periodic_slave):
                raise MeshingError("periodic master and slave sets overlap")
        # every boundary edge bounds exactly one triangle, oriented CCW in it
        edge_count: dict[tuple[int, int], int] = {}
        oriented = set()
        for tri in self.triangles:
            for a, b in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
                edge_count[(min(a, b), max(a, b))] = (
                    edge_count.get((min(a, b), max(a, b)), 0) + 1
                )
                oriented.add((int(a), int(b)))
        for (a, b) in self.bedge_nodes:
            key = (min(a, b), max(a, b))
            if edge_count.get(key, 0) != 1:
                raise MeshingError(f"boundary edge {a}-{b} is not a mesh boundary edge")
            if (int(a), int(b)) not in oriented:
                raise MeshingError(f"boundary edge {a}-{b} has wrong orientation")

    # -- text format -------------------------------------------------------

    def save_text(self, path) -> None:
        with open(path, "w") as f:
            f.write("mesh2d v1\n")
            f.write(f"nodes {self.n_nodes}\n")
            for x, y in self.nodes:
                f.write(f"{x:.17g} {y:.17g}\n")
            f.write(f"triangles {self.n_triangles}\n")
            for (i, j, k), r in zip(self.triangles, self.region):
                f.write(f"{i} {j} {k} {r}\n")
            f.write(f"bedges {len(self.bedge_nodes)}\n")
            for (i, j), t in zip(self.bedge_nodes, self.bedge_tag):
                f.write(f"{i} {j} {t}\n")
            f.write(f"periodic {len(self.periodic_master)}\n")
            for m, s, (sx, sy) in zip(
                self.periodic_master, self.periodic_slave, self.periodic_shift
            ):
                f.write(f"{m} {s} {sx:.17g} {sy:.17g}\n")

    @classmethod
    def load_text(cls, path) -> "Mesh2D":
        with open(path) as f:
            header = f.readline().strip()
            if header != "mesh2d v1":
                raise MeshingError(f"unsupported mesh file header: {header!r}")

            def read_block(keyword, ncols, dtype):
                line = f.readline().split()
                if line[0] != keyword:
                    raise MeshingError(f"expected {keyword!r} block, got {line!r}")
                n = int(line[1])
                rows = [f.readline().split() for _ in range(n)]
                if n == 0:
                    return np.zeros((0, ncols), dtype=dtype)
                return np.array(rows, dtype=dtype)

            raw_nodes = read_block("nodes", 2, float)
            raw_tris = read_block("triangles", 4, int)
            raw_bed = read_block("bedges", 3, int)
            raw_per = read_block("periodic", 4, float)
        mesh = cls(
            nodes=raw_nodes,
            triangles=raw_tris[:, :3] if len(raw_tris) else np.zeros((0, 3), dtype=int),
            region=raw_tris[:, 3] if len(raw_tris) else np.zeros(0, dtype=int),
            bedge_nodes=raw_bed[:, :2] if len(raw_bed) else np.zeros((0, 2), dtype=int),
            bedge_tag=raw_bed[:, 2] if len(raw_bed) else np.zeros(0, dtype=int),
            bedge_cell=np.full(len(raw_bed), -1, dtype=int),
            periodic_master=raw_per[:, 0].astype(int) if len(raw_per) else np.zeros(0, dtype=int),
            periodic_slave=raw_per[:, 1].astype(int) if len(raw_per) else np.zeros(0, dtype=int),
            periodic_shift=raw_per[:, 2:4] if len(raw_per) else np.zeros((0, 2)),
        )
        mesh._recover_membrane_owners()
        return mesh

    def _recover_membrane_owners(self) -> None:
        """Membrane edges inherit the region of their adjacent triangle."""
        owner_of_edge = {}
        for t, tri in enumerate(self.triangles):
            for a, b in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
                owner_of_edge[(int(a), int(b))] = int(self.region[t])
        for k, (a, b) in enumerate(self.bedge_nodes):
            if self.bedge_tag[k] == CELL_INTERFACE:
                self.bedge_cell[k] = owner_of_edge.get((int(a), int(b)), -1)


# ---------------------------------------------------------------------------
# triangulation pipeline
# ---------------------------------------------------------------------------


@dataclass
class _Segment:
    a: np.ndarray
    b: np.ndarray
    tag: int
    cell: int
    count: int  # subdivision count
    twin: int = -1  # index of the periodic twin segment, -1 if none
    mirror_of: int = -1  # subdivide as translate of this segment

    @property
    def length(self) -> float:
        return float(np.linalg.norm(self.b - self.a))


def _collect_segments(region: PlanarRegion, h: float) -> list[_Segment]:
    segs: list[_Segment] = []

    def side_tag(side):
        return OUTER_BOTTOM if side == "bottom" else OUTER_OTHER

    def add(a, b, tag, cell=-1):
        segs.append(
            _Segment(np.asarray(a, float), np.asarray(b, float), tag, cell, 0)
        )
        return len(segs) - 1

    if region.periodic:
        # left/bottom computed, right/top literal translates
        for lo, hi in region.side_material_intervals("left"):
            i = add((0.0, lo), (0.0, hi), side_tag("left"))
            j = add((region.W, lo), (region.W, hi), side_tag("right"))
            segs[j].mirror_of = i
            segs[i].twin, segs[j].twin = j, i
        for lo, hi in region.side_material_intervals("bottom"):
            i = add((lo, 0.0), (hi, 0.0), side_tag("bottom"))
            j = add((lo, region.H), (hi, region.H), side_tag("top"))
            segs[j].mirror_of = i
            segs[i].twin, segs[j].twin = j, i
    else:
        for side, a_of, b_of in (
            ("bottom", lambda t: (t, 0.0), None),
            ("top", lambda t: (t, region.H), None),
            ("left", lambda t: (0.0, t), None),
            ("right", lambda t: (region.W, t), None),
        ):
            for lo, hi in region.side_material_intervals(side):
                add(a_of(lo), a_of(hi), side_tag(side))
    for v in region.voids:
        for a, b in region.membrane_segments(v):
            add(a, b, CELL_INTERFACE, v.cell_id)
    for s in segs:
        s.count = max(1, math.ceil(s.length / h - 1e-9))
    # mirrored segments reuse the twin's count so subdivision points translate
    for s in segs:
        if s.mirror_of >= 0:
            s.count = segs[s.mirror_of].count
    return segs


def _subdivide(segs: list[_Segment], snap: float):
    """Subdivision points and constraint edges with node dedup by snapping."""
    coords: list[np.ndarray] = []
    ids: dict[tuple[int, int], int] = {}

    def node(p):
        key = (int(round(p[0] / snap)), int(round(p[1] / snap)))
        if key not in ids:
            ids[key] = len(coords)
            coords.append(np.asarray(p, float))
        return ids[key]

    # points per segment; mirrored segments copy their source points + offset
    seg_pts: list[np.ndarray] = [None] * len(segs)
    for i, s in enumerate(segs):
        if s.mirror_of >= 0:
            continue
        t = np.linspace(0.0, 1.0, s.count + 1)[:, None]
        seg_pts[i] = s.a + t * (s.b - s.a)
    for i, s in enumerate(segs):
        if s.mirror_of >= 0:
            src = segs[s.mirror_of]
            offset = s.a - src.a
            seg_pts[i] = seg_pts[s.mirror_of] + offset

    constraint = []  # (i, j, tag, cell, seg_index)
    for i, s in enumerate(segs):
        pts = seg_pts[i]
        idx = [node(p) for p in pts]
        for a, b in zip(idx[:-1], idx[1:]):
            if a != b:
                constraint.append((a, b, s.tag, s.cell, i))
    return np.array(coords), constraint


def _interior_points(region: PlanarRegion, h: float, boundary_pts: np.ndarray) -> np.ndarray:
    dy = h * math.sqrt(3.0) / 2.0
    ys = np.arange(0.6 * dy, region.H - 0.3 * dy, dy)
    pts = []
    for r, y in enumerate(ys):
        x0 = 0.5 * h if r % 2 == 0 else h
        xs = np.arange(x0, region.W - 0.25 * h, h)
        pts.append(np.column_stack([xs, np.full(len(xs), y)]))
    if not pts:
        return np.zeros((0, 2))
    pts = np.vstack(pts)
    keep = region.contains(pts)
    pts = pts[keep]
    if len(pts) == 0 or len(boundary_pts) == 0:
        return pts
    tree = cKDTree(boundary_pts)
    d, _ = tree.query(pts, k=1)
    return pts[d >= 0.7 * h]


def triangulate(region: PlanarRegion, edges_per_unit: float, max_recovery: int = 4) -> Mesh2D:
    """Mesh the material part of a planar region at the requested density.

    edges_per_unit is the number of triangle edges imposed per unit length of
    domain boundary.
    """
    if edges_per_unit <= 0:
        raise ValueError("edges_per_unit must be positive")
    h = 1.0 / edges_per_unit
    snap = GEOM_TOL_REL * region.diameter
    segs = _collect_segments(region, h)

    last_missing = None
    for _attempt in range(max_recovery + 1):
        boundary_pts, constraint = _subdivide(segs, snap)
        interior = _interior_points(region, h, boundary_pts)
        all_pts = np.vstack([boundary_pts, interior]) if len(interior) else boundary_pts
        if len(all_pts) < 3:
            raise MeshingError("not enough points to triangulate")
        tri = Delaunay(all_pts)
        cents = all_pts[tri.simplices].mean(axis=1)
        keep = region.contains(cents)
        # guard against degenerate slivers produced by qhull on co-linear input
        p = all_pts[tri.simplices]
        areas2 = (p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1]) - (
            p[:, 2, 0] - p[:, 0, 0]
        ) * (p[:, 1, 1] - p[:, 0, 1])
        keep &= np.abs(areas2) > 2.0 * AREA_EPS_REL * region.W * region.H
        kept = tri.simplices[keep]

        edge_set = set()
        for t in kept:
            a, b, c = int(t[0]), int(t[1]), int(t[2])
            edge_set.add((min(a, b), max(a, b)))
            edge_set.add((min(b, c), max(b, c)))
            edge_set.add((min(a, c), max(a, c)))
        missing = [
            (i, j, seg)
            for (i, j, _tag, _cell, seg) in constraint
            if (min(i, j), max(i, j)) not in edge_set
        ]
        if not missing:
            return _finalize(region, all_pts, kept, constraint, snap)
        last_missing = missing
        bump = {seg for (_i, _j, seg) in missing}
        for seg in list(bump):
            if segs[seg].twin >= 0:
                bump.add(segs[seg].twin)
        for seg in bump:
            segs[seg].count *= 2
    raise MeshingError(
        f"failed to recover {len(last_missing)} boundary edges after "
        f"{max_recovery} refinements; offending segment(s): "
        + ", ".join(
            f"{segs[seg].a}->{segs[seg].b}" for (_i, _j, seg) in last_missing[:3]
        )
    )


def _finalize(region, all_pts, kept, constraint, snap) -> Mesh2D:
    used = np.unique(kept)
    remap = -np.ones(len(all_pts), dtype=int)
    remap[used] = np.arange(len(used))
    nodes = all_pts[used]
    tris = remap[kept]

    # enforce CCW orientation
    p = nodes[tris]
    areas2 = (p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1]) - (
        p[:, 2, 0] - p[:, 0, 0]
    ) * (p[:, 1, 1] - p[:, 0, 1])
    flip = areas2 < 0
    tris[flip] = tris[flip][:, [0, 2, 1]]

    # boundary edges: orient as they appear in their unique adjacent triangle
    oriented = set()
    count: dict[tuple[int, int], int] = {}
    for t in tris:
        for a, b in ((t[0], t[1]), (t[1], t[2]), (t[2], t[0])):
            oriented.add((int(a), int(b)))
            key = (min(a, b), max(a, b))
            count[key] = count.get(key, 0) + 1

    bedges, btags, bcells = [], [], []
    for (i, j, tag, cell, _seg) in constraint:
        a, b = int(remap[i]), int(remap[j])
        if a < 0 or b < 0:
            raise MeshingError("constraint node lost during triangulation")
        key = (min(a, b), max(a, b))
        if count.get(key, 0) != 1:
            raise MeshingError(f"constraint edge {a}-{b} is interior to the mesh")
        if (a, b) in oriented:
            bedges.append((a, b))
        else:
            bedges.append((b, a))
        btags.append(tag)
        bcells.append(cell)

    # any non-constraint boundary edge means the filtered mesh has a hole
    constraint_keys = {(min(a, b), max(a, b)) for (a, b) in bedges}
    for key, c in count.items():
        if c == 1 and key not in constraint_keys:
            raise MeshingError(
                f"unexpected mesh boundary edge {key}; region filtering left a hole"
            )

    mesh = Mesh2D(
        nodes=nodes,
        triangles=tris,
        region=np.zeros(len(tris), dtype=int),
        bedge_nodes=np.array(bedges, dtype=int).reshape(-1, 2),
        bedge_tag=np.array(btags, dtype=int),
        bedge_cell=np.array(bcells, dtype=int),
    )
    if region.voids:
        mesh.region = region.nearest_void(mesh.centroids()).astype(int)
        # map void piece index to cell_id
        piece_cell = np.array([v.cell_id for v in region.voids])
        mesh.region = piece_cell[mesh.region]
    if region.periodic:
        m, s, sh = match_periodic_nodes(mesh, region.W, region.H)
        mesh.periodic_master, mesh.periodic_slave, mesh.periodic_shift = m, s, sh
    mesh.audit()
    return mesh


def match_periodic_nodes(mesh: Mesh2D, W: float, H: float, tol: float | None = None):
    """Pair nodes on opposite sides of the period box [0,W] x [0,H].

    Returns (master, slave, shift) arrays; raises MeshingError on any
    unmatched boundary node.
    """
    if tol is None:
        tol = GEOM_TOL_REL * float(np.hypot(W, H))
    x, y = mesh.nodes[:, 0], mesh.nodes[:, 1]
    on_l = np.abs(x) <= tol
    on_r = np.abs(x - W) <= tol
    on_b = np.abs(y) <= tol
    on_t = np.abs(y - H) <= tol

    def corner(mask_a, mask_b):
        idx = np.nonzero(mask_a & mask_b)[0]
        return int(idx[0]) if len(idx) else -1

    c00 = corner(on_l, on_b)
    cW0 = corner(on_r, on_b)
    c0H = corner(on_l, on_t)
    cWH = corner(on_r, on_t)
    corners = {c for c in (c00, cW0, c0H, cWH) if c >= 0}
    if len(corners) not in (0, 4):
        raise MeshingError("period box corners are not all present in the mesh")

    masters, slaves, shifts = [], [], []

    def match_side(mask_m, mask_s, axis, shift):
        mi = [i for i in np.nonzero(mask_m)[0] if i not in corners]
        si = [i for i in np.nonzero(mask_s)[0] if i not in corners]
        mi.sort(key=lambda i: mesh.nodes[i, axis])
        si.sort(key=lambda i: mesh.nodes[i, axis])
        if len(mi) != len(si):
            raise MeshingError(
                f"periodic side mismatch: {len(mi)} master vs {len(si)} slave nodes"
            )
        for a, b in zip(mi, si):
            if abs(mesh.nodes[a, axis] - mesh.nodes[b, axis]) > tol:
                raise MeshingError(
                    f"unmatched periodic node: {mesh.nodes[a]} vs {mesh.nodes[b]}"
                )
            masters.append(a)
            slaves.append(b)
            shifts.append(shift)

    match_side(on_l, on_r, 1, (W, 0.0))
    match_side(on_b, on_t, 0, (0.0, H))
    if corners:
        for c, shift in ((cW0, (W, 0.0)), (c0H, (0.0, H)), (cWH, (W, H))):
            masters.append(c00)
            slaves.append(c)
            shifts.append(shift)
    return (
        np.array(masters, dtype=int),
        np.array(slaves, dtype=int),
        np.array(shifts, dtype=float),
    )


def build_rect_mesh(
    width: float, height: float, target_edge_len: float, periodic: bool = False
) -> Mesh2D:
    """Structured triangulation of [0,width] x [0,height].

    The bottom edge is tagged OUTER_BOTTOM, all other sides OUTER_OTHER.
    """
    if width <= 0 or height <= 0 or target_edge_len <= 0:
        raise ValueError("rectangle dimensions and edge length must be positive")
    nx = max(1, round(width / target_edge_len))
    ny = max(1, round(height / target_edge_len))
    xs = np.linspace(0.0, width, nx + 1)
    ys = np.linspace(0.0, height, ny + 1)
    X, Y = np.meshgrid(xs, ys, indexing="xy")
    nodes = np.column_stack([X.ravel(), Y.ravel()])

    def nid(i, j):
        return j * (nx + 1) + i

    tris = []
    for j in range(ny):
        for i in range(nx):
            n00, n10 = nid(i, j), nid(i + 1, j)
            n01, n11 = nid(i, j + 1), nid(i + 1, j + 1)
            tris.append((n00, n10, n11))
            tris.append((n00, n11, n01))
    tris = np.array(tris, dtype=int)

    bedges, btags = [], []
    for i in range(nx):  # bottom, material above: orient +x
        bedges.append((nid(i, 0), nid(i + 1, 0)))
        btags.append(OUTER_BOTTOM)
    for j in range(ny):  # right, orient +y
        bedges.append((nid(nx, j), nid(nx, j + 1)))
        btags.append(OUTER_OTHER)
    for i in range(nx):  # top, orient -x
        bedges.append((nid(i + 1, ny), nid(i, ny)))
        btags.append(OUTER_OTHER)
    for j in range(ny):  # left, orient -y
        bedges.append((nid(0, j + 1), nid(0, j)))
        btags.append(OUTER_OTHER)

    mesh = Mesh2D(
        nodes=nodes,
        triangles=tris,
        region=np.zeros(len(tris), dtype=int),
        bedge_nodes=np.array(bedges, dtype=int),
        bedge_tag=np.array(btags, dtype=int),
        bedge_cell=np.full(len(bedges), -1, dtype=int),
        rect_info=(nx, ny),
    )
    if periodic:
        m, s, sh = match_periodic_nodes(mesh, width, height)
        mesh.periodic_master, mesh.periodic_slave, mesh.periodic_shift = m, s, sh
    mesh.audit()
    return mesh


def locate_points(mesh: Mesh2D, pts: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Index of the triangle containing each point (boundary ties arbitrary).

    Raises MeshingError for points outside the mesh beyond tol * diameter.
    """
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    cents = mesh.centroids()
    tree = cKDTree(cents)
    k = min(24, mesh.n_triangles)
    _, cand = tree.query(pts, k=k)
    cand = np.atleast_2d(cand)
    out = -np.ones(len(pts), dtype=int)
    p = mesh.nodes[mesh.triangles]
    abs_tol = tol * mesh.diameter()
    for col in range(cand.shape[1]):
        undone = out < 0
        if not np.any(undone):
            break
        tri_idx = cand[undone, col]
        a, b, c = p[tri_idx, 0], p[tri_idx, 1], p[tri_idx, 2]
        q = pts[undone]
        det = (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (c[:, 0] - a[:, 0]) * (
            b[:, 1] - a[:, 1]
        )
        l1 = ((q[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (c[:, 0] - a[:, 0]) * (q[:, 1] - a[:, 1])) / det
        l2 = ((b[:, 0] - a[:, 0]) * (q[:, 1] - a[:, 1]) - (q[:, 0] - a[:, 0]) * (b[:, 1] - a[:, 1])) / det
        l0 = 1.0 - l1 - l2
        inside = (l0 >= -abs_tol) & (l1 >= -abs_tol) & (l2 >= -abs_tol)
        sel = np.nonzero(undone)[0][inside]
        out[sel] = tri_idx[inside]
    if np.any(out < 0):
        bad = pts[out < 0][0]
        raise MeshingError(f"point {bad} lies outside the mesh")
    return out

"""Deterministic simplicial meshes of the square (-4,4)^2.

Meshes come from a seeded jittered grid triangulated by Delaunay; boundary
vertices are uniformly spaced and never jittered, so opposite sides always
carry congruent traces and periodic identification is exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.spatial import Delaunay, cKDTree

DOMAIN_HALF = 4.0
DOMAIN_AREA = 64.0
MIN_ANGLE_DEG = 15.0
_TOL = 1e-9

SIDE_TAGS = ("left", "right", "bottom", "top")


class MeshError(ValueError):
    pass


@dataclass
class Mesh:
    vertices: np.ndarray                 # (N, 2)
    triangles: np.ndarray                # (M, 3) counterclockwise
    boundary_edges: np.ndarray           # (B, 2) vertex pairs
    boundary_tags: list                  # (B,) side tag per boundary edge
    periodic_pairs: Optional[np.ndarray] = None   # (P, 2) (vertex, match)
    h_max: float = 0.0
    _walk_cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_triangles(self):
        return len(self.triangles)


@dataclass
class ValidationReport:
    violations: list

    @property
    def ok(self):
        return not self.violations


def _signed_areas(vertices, triangles):
    v = vertices[triangles]
    return 0.5 * ((v[:, 1, 0] - v[:, 0, 0]) * (v[:, 2, 1] - v[:, 0, 1])
                  - (v[:, 2, 0] - v[:, 0, 0]) * (v[:, 1, 1] - v[:, 0, 1]))


def _edge_lengths(vertices, triangles):
    v = vertices[triangles]
    e = np.stack([v[:, 1] - v[:, 0], v[:, 2] - v[:, 1], v[:, 0] - v[:, 2]], axis=1)
    return np.linalg.norm(e, axis=2)


def _min_angles_deg(vertices, triangles):
    L = _edge_lengths(vertices, triangles)
    a, b, c = L[:, 0], L[:, 1], L[:, 2]
    angles = []
    for opp, x, y in ((b, c, a), (c, a, b), (a, b, c)):
        cosv = np.clip((x**2 + y**2 - opp**2) / (2 * x * y), -1.0, 1.0)
        angles.append(np.degrees(np.arccos(cosv)))
    return np.min(np.stack(angles, axis=1), axis=1)


def _edge_census(triangles):
    counts = {}
    for t, tri in enumerate(triangles):
        for e in range(3):
            key = tuple(sorted((int(tri[e]), int(tri[(e + 1) % 3]))))
            counts.setdefault(key, []).append(t)
    return counts


def _side_of_edge(p, q):
    mx, my = 0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])
    if abs(mx + DOMAIN_HALF) < _TOL:
        return "left"
    if abs(mx - DOMAIN_HALF) < _TOL:
        return "right"
    if abs(my + DOMAIN_HALF) < _TOL:
        return "bottom"
    if abs(my - DOMAIN_HALF) < _TOL:
        return "top"
    return "untagged"


def make_mesh(vertices, triangles, periodic_pairs=None) -> Mesh:
    """Assemble a Mesh from raw arrays; orientation fixed, boundary derived."""
    vertices = np.asarray(vertices, dtype=float)
    triangles = np.asarray(triangles, dtype=np.int64).copy()
    areas = _signed_areas(vertices, triangles)
    flip = areas < 0
    triangles[flip] = triangles[flip][:, [0, 2, 1]]
    census = _edge_census(triangles)
    bedges, btags = [], []
    for key, owners in sorted(census.items()):
        if len(owners) == 1:
            bedges.append(key)
            btags.append(_side_of_edge(vertices[key[0]], vertices[key[1]]))
    return Mesh(
        vertices=vertices,
        triangles=triangles,
        boundary_edges=np.array(bedges, dtype=np.int64).reshape(-1, 2),
        boundary_tags=btags,
        periodic_pairs=periodic_pairs,
        h_max=float(_edge_lengths(vertices, triangles).max()),
    )


def _ring_points(n):
    pitch = 2 * DOMAIN_HALF / n
    pts = []
    for i in range(n):        # bottom, left -> right
        pts.append((-DOMAIN_HALF + i * pitch, -DOMAIN_HALF))
    for i in range(n):        # right, bottom -> top
        pts.append((DOMAIN_HALF, -DOMAIN_HALF + i * pitch))
    for i in range(n):        # top, right -> left
        pts.append((DOMAIN_HALF - i * pitch, DOMAIN_HALF))
    for i in range(n):        # left, top -> bottom
        pts.append((-DOMAIN_HALF, DOMAIN_HALF - i * pitch))
    return np.array(pts)


def generate_square_mesh(h: float, seed: int = 0, periodic_matching: bool = False) -> Mesh:
    """Deterministic Delaunay mesh of (-4,4)^2 from a seeded jittered grid.

    Boundary vertices sit exactly at multiples of 8/n along each side
    (n = ceil(8/h)); interior grid points carry a jitter of magnitude
    <= 0.3 h.  Guarantees h_max <= 1.5 h and minimum angle >= 15 degrees
    (jitter is reduced deterministically if a draw violates either).
    """
    if not (0 < h <= 4.0) or not math.isfinite(h):
        raise MeshError(f"mesh size h={h} outside (0, 4]")
    n = max(2, int(math.ceil(2 * DOMAIN_HALF / h - 1e-12)))
    pitch = 2 * DOMAIN_HALF / n
    ring = _ring_points(n)

    for jitter in (0.15, 0.075, 0.0):
        rng = np.random.default_rng(seed)
        ii, jj = np.meshgrid(np.arange(1, n), np.arange(1, n), indexing="ij")
        interior = np.column_stack([
            -DOMAIN_HALF + ii.ravel() * pitch,
            -DOMAIN_HALF + jj.ravel() * pitch,
        ])
        interior = interior + rng.uniform(-jitter, jitter, interior.shape) * pitch
        points = np.vstack([ring, interior])
        tri = Delaunay(points)
        mesh = make_mesh(points, tri.simplices)
        if periodic_matching:
            mesh.periodic_pairs = _periodic_pairs_of(mesh)
        if mesh.h_max <= 1.5 * h and _min_angles_deg(points, mesh.triangles).min() >= MIN_ANGLE_DEG:
            return mesh
    return mesh  # jitter 0: structured grid, bounds hold by construction


def _periodic_pairs_of(mesh):
    v = mesh.vertices
    lookup = {}
    onb = (np.abs(np.abs(v[:, 0]) - DOMAIN_HALF) < _TOL) | (
        np.abs(np.abs(v[:, 1]) - DOMAIN_HALF) < _TOL)
    for i in np.nonzero(onb)[0]:
        lookup[(round(v[i, 0], 9), round(v[i, 1], 9))] = int(i)
    pairs = []
    for i in np.nonzero(onb)[0]:
        x, y = v[i]
        if abs(x - DOMAIN_HALF) < _TOL:
            j = lookup.get((round(x - 8.0, 9), round(y, 9)))
            if j is None:
                raise MeshError("periodic matching failed on the right side")
            pairs.append((int(i), j))
        if abs(y - DOMAIN_HALF) < _TOL:
            j = lookup.get((round(x, 9), round(y - 8.0, 9)))
            if j is None:
                raise MeshError("periodic matching failed on the top side")
            pairs.append((int(i), j))
    return np.array(pairs, dtype=np.int64).reshape(-1, 2)


def barycentric_refine(m: Mesh) -> Mesh:
    """Split every triangle into 3 at its centroid (Alfeld split)."""
    nv = m.n_vertices
    centroids = m.vertices[m.triangles].mean(axis=1)
    vertices = np.vstack([m.vertices, centroids])
    tris = []
    for t, (a, b, c) in enumerate(m.triangles):
        mid = nv + t
        tris.extend([(a, b, mid), (b, c, mid), (c, a, mid)])
    return Mesh(
        vertices=vertices,
        triangles=np.array(tris, dtype=np.int64),
        boundary_edges=m.boundary_edges.copy(),
        boundary_tags=list(m.boundary_tags),
        periodic_pairs=None if m.periodic_pairs is None else m.periodic_pairs.copy(),
        h_max=float(_edge_lengths(vertices, np.array(tris)).max()),
    )


# ---------------------------------------------------------------------------
# point location
# ---------------------------------------------------------------------------

def _build_walk_data(m: Mesh):
    if "neighbors" in m._walk_cache:
        return
    census = _edge_census(m.triangles)
    nbr = -np.ones((m.n_triangles, 3), dtype=np.int64)
    for t, tri in enumerate(m.triangles):
        for e in range(3):
            key = tuple(sorted((int(tri[e]), int(tri[(e + 1) % 3]))))
            owners = census[key]
            if len(owners) == 2:
                nbr[t, e] = owners[0] if owners[1] == t else owners[1]
    centroids = m.vertices[m.triangles].mean(axis=1)
    m._walk_cache["neighbors"] = nbr
    m._walk_cache["tree"] = cKDTree(centroids)
    # inverse affine maps for barycentric evaluation
    v = m.vertices[m.triangles]
    J = np.stack([v[:, 1] - v[:, 0], v[:, 2] - v[:, 0]], axis=2)
    det = J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0]
    inv = np.empty_like(J)
    inv[:, 0, 0] = J[:, 1, 1] / det
    inv[:, 0, 1] = -J[:, 0, 1] / det
    inv[:, 1, 0] = -J[:, 1, 0] / det
    inv[:, 1, 1] = J[:, 0, 0] / det
    m._walk_cache["v0"] = v[:, 0]
    m._walk_cache["invJ"] = inv


def _bary_in(m, t, p):
    c = m._walk_cache
    xi = c["invJ"][t] @ (p - c["v0"][t])
    return np.array([1.0 - xi[0] - xi[1], xi[0], xi[1]])


def locate_point(m: Mesh, p, start: Optional[int] = None):
    """Find the triangle containing p; returns (index, barycentric coords).

    Straight walk from a KD-tree seed with an exhaustive-scan fallback for
    robustness at edges and vertices.
    """
    p = np.asarray(p, dtype=float)
    if np.max(np.abs(p)) > DOMAIN_HALF + 1e-9:
        raise MeshError(f"point {tuple(p)} outside the domain")
    p = np.clip(p, -DOMAIN_HALF, DOMAIN_HALF)
    _build_walk_data(m)
    nbr = m._walk_cache["neighbors"]
    t = start if start is not None else int(m._walk_cache["tree"].query(p)[1])
    # bary order vs edges: local edge e connects vertices (e, e+1), the
    # opposite vertex is e+2, i.e. bary index (e+2)%3 governs edge e
    for _ in range(m.n_triangles + 8):
        lam = _bary_in(m, t, p)
        worst = int(np.argmin(lam))
        if lam[worst] >= -1e-10:
            return t, lam
        nxt = nbr[t, (worst + 1) % 3]
        if nxt < 0:
            break
        t = nxt
    # vectorized exhaustive scan
    c = m._walk_cache
    xi = np.einsum("tij,tj->ti", c["invJ"], p[None, :] - c["v0"])
    lam = np.column_stack([1.0 - xi[:, 0] - xi[:, 1], xi])
    best = int(np.argmax(lam.min(axis=1)))
    lam_best = lam[best]
    if lam_best.min() < -1e-10:
        raise MeshError(f"point {tuple(p)} not located in any triangle")
    return best, lam_best


def locate_points(m: Mesh, pts):
    """Locate many points, reusing each hit as the next walk seed.

    Returns (triangle indices, barycentric coordinates (n, 3))."""
    pts = np.asarray(pts, dtype=float)
    tris = np.empty(len(pts), dtype=np.int64)
    bary = np.empty((len(pts), 3))
    prev = None
    for i, p in enumerate(pts):
        t, lam = locate_point(m, p, start=prev)
        tris[i] = t
        bary[i] = lam
        prev = t
    return tris, bary


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------

def validate(m: Mesh) -> ValidationReport:
    """Report violated mesh invariants (empty report means valid)."""
    violations = []
    if not np.all(np.isfinite(m.vertices)):
        violations.append("non-finite vertex coordinates")
    areas = _signed_areas(m.vertices, m.triangles)
    if np.any(areas <= 0):
        violations.append(f"orientation: {int(np.sum(areas <= 0))} triangles "
                          "with non-positive signed area")
    total = float(np.abs(areas).sum())
    if abs(total - DOMAIN_AREA) > 1e-12 * DOMAIN_AREA:
        violations.append(f"area sum {total!r} != {DOMAIN_AREA}")
    census = _edge_census(m.triangles)
    declared = {tuple(sorted(map(int, e))) for e in m.boundary_edges}
    for key, owners in census.items():
        if len(owners) == 1 and key not in declared:
            violations.append(f"conformity: boundary edge {key} not declared")
        elif len(owners) > 2:
            violations.append(f"conformity: edge {key} shared by {len(owners)} triangles")
    for key in declared:
        if len(census.get(key, ())) != 1:
            violations.append(f"conformity: declared boundary edge {key} is not "
                              "a boundary edge")
    if np.any(_min_angles_deg(m.vertices, m.triangles) < MIN_ANGLE_DEG):
        violations.append("shape regularity: triangle angle below "
                          f"{MIN_ANGLE_DEG} degrees")
    if m.periodic_pairs is not None:
        v = m.vertices
        for i, j in m.periodic_pairs:
            d = v[i] - v[j]
            if not (abs(abs(d[0]) - 8.0) < 1e-12 and abs(d[1]) < 1e-12) and not (
                    abs(abs(d[1]) - 8.0) < 1e-12 and abs(d[0]) < 1e-12):
                violations.append(f"periodic pair ({i},{j}) not an (8,0)/(0,8) translate")
    return ValidationReport(violations)


# ---------------------------------------------------------------------------
# plain-text import/export
# ---------------------------------------------------------------------------

def write_mesh(m: Mesh, path):
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"vertices {m.n_vertices} triangles {m.n_triangles}\n")
        for x, y in m.vertices:
            f.write(f"{x:.17g} {y:.17g}\n")
        for a, b, c in m.triangles:
            f.write(f"{a} {b} {c}\n")
        for (a, b), tag in zip(m.boundary_edges, m.boundary_tags):
            f.write(f"{a} {b} {tag}\n")


def read_mesh(path) -> Mesh:
    with open(path, encoding="utf-8") as f:
        header = f.readline().split()
        if len(header) != 4 or header[0] != "vertices" or header[2] != "triangles":
            raise MeshError(f"bad mesh header in {path}")
        nv, nt = int(header[1]), int(header[3])
        verts = np.array([[float(v) for v in f.readline().split()] for _ in range(nv)])
        tris = np.array([[int(v) for v in f.readline().split()] for _ in range(nt)],
                        dtype=np.int64)
        bedges, btags = [], []
        for line in f:
            parts = line.split()
            if len(parts) != 3:
                continue
            bedges.append((int(parts[0]), int(parts[1])))
            btags.append(parts[2])
    return Mesh(
        vertices=verts,
        triangles=tris,
        boundary_edges=np.array(bedges, dtype=np.int64).reshape(-1, 2),
        boundary_tags=btags,
        h_max=float(_edge_lengths(verts, tris).max()),
    )

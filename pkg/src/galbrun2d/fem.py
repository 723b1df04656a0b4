"""Reference-element machinery: quadrature, Lagrange bases, DOF maps.

The reference triangle is T = {(x, y): x >= 0, y >= 0, x + y <= 1}.
Physical elements are affine images of T; all bases are nodal Lagrange
bases on the uniform lattice of T.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

VECTOR_PK = "vector_Pk_continuous"
SCALAR_DISC = "scalar_Pkm1_discontinuous_zeromean"
SCALAR_CONT = "scalar_Pkm1_continuous_zeromean"
FAMILIES = (VECTOR_PK, SCALAR_DISC, SCALAR_CONT)

BC_MODES = ("none", "periodic", "nitsche", "strong_normal", "full_dirichlet")

_COORD_TOL = 1e-9


class FemError(ValueError):
    pass


# ---------------------------------------------------------------------------
# quadrature
# ---------------------------------------------------------------------------

@dataclass
class QuadRule:
    """Quadrature rule; `points` are reference coordinates, weights include
    the reference measure (triangle rules sum to 1/2, edge rules to 1)."""
    points: np.ndarray
    weights: np.ndarray
    exact_degree: int


# positive-weight symmetric rules; (barycentric orbits, weight per point),
# weights normalized to sum 1 and scaled by the reference area below
_SYMMETRIC = {
    1: [((Fraction(1, 3), Fraction(1, 3), Fraction(1, 3)), 1.0)],
    2: [((Fraction(2, 3), Fraction(1, 6), Fraction(1, 6)), 1.0 / 3.0)],
    4: [
        ((0.108103018168070, 0.445948490915965, 0.445948490915965), 0.223381589678011),
        ((0.816847572980459, 0.091576213509771, 0.091576213509771), 0.109951743655322),
    ],
    5: [
        ((Fraction(1, 3), Fraction(1, 3), Fraction(1, 3)), 0.225),
        ((0.059715871789770, 0.470142064105115, 0.470142064105115), 0.132394152788506),
        ((0.797426985353087, 0.101286507323456, 0.101286507323456), 0.125939180544827),
    ],
}


def _orbit_points(bary):
    """All distinct cyclic permutations of a barycentric triple."""
    l1, l2, l3 = bary
    perms = {(l1, l2, l3), (l2, l3, l1), (l3, l1, l2)}
    return sorted(perms, key=lambda t: (float(t[0]), float(t[1])))


def _symmetric_rule(deg):
    pts, wts = [], []
    for bary, w in _SYMMETRIC[deg]:
        for (l1, l2, l3) in _orbit_points(bary):
            # reference vertices (0,0), (1,0), (0,1): x = l2, y = l3
            pts.append((float(l2), float(l3)))
            wts.append(0.5 * w)
    return QuadRule(np.array(pts), np.array(wts), deg)


def _gauss01(n):
    t, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (t + 1.0), 0.5 * w


def _duffy_rule(deg):
    n = (deg + 3) // 2  # 2n-1 >= deg+1
    x, wx = _gauss01(n)
    xi = np.repeat(x, n)
    eta = np.tile(x, n)
    w = np.repeat(wx, n) * np.tile(wx, n) * (1.0 - xi)
    pts = np.column_stack([xi, eta * (1.0 - xi)])
    return QuadRule(pts, w, 2 * n - 2)


def triangle_quadrature(degree: int) -> QuadRule:
    """Rule on the reference triangle exact for polynomials of total
    degree >= `degree`; all weights positive."""
    if not (0 <= degree <= 20):
        raise FemError(f"unsupported quadrature degree {degree} (need 0..20)")
    if degree <= 1:
        return _symmetric_rule(1)
    if degree == 2:
        return _symmetric_rule(2)
    if degree <= 4:
        return _symmetric_rule(4)
    if degree == 5:
        return _symmetric_rule(5)
    return _duffy_rule(degree)


def edge_quadrature(degree: int) -> QuadRule:
    """Gauss rule on the reference edge [0, 1]."""
    if not (0 <= degree <= 40):
        raise FemError(f"unsupported edge quadrature degree {degree}")
    n = degree // 2 + 1
    x, w = _gauss01(n)
    return QuadRule(x, w, 2 * n - 1)


# ---------------------------------------------------------------------------
# Lagrange bases
# ---------------------------------------------------------------------------

def _monomial_exponents(k):
    return [(a, b) for tot in range(k + 1) for a in range(tot, -1, -1) for b in [tot - a]]


def _lattice_nodes(k):
    """Uniform lattice nodes ordered: vertices, edge nodes, interior nodes.

    Returns (nodes, classes); classes are ('v', i), ('e', edge, pos) with pos
    counted 1..k-1 from the edge's first local vertex, or ('i', idx).
    """
    if k == 0:
        return [(Fraction(1, 3), Fraction(1, 3))], [("i", 0)]
    nodes = [(Fraction(0), Fraction(0)), (Fraction(1), Fraction(0)), (Fraction(0), Fraction(1))]
    classes = [("v", 0), ("v", 1), ("v", 2)]
    # edges: 0: v0->v1, 1: v1->v2, 2: v2->v0
    for s in range(1, k):
        nodes.append((Fraction(s, k), Fraction(0)))
        classes.append(("e", 0, s))
    for s in range(1, k):
        nodes.append((Fraction(k - s, k), Fraction(s, k)))
        classes.append(("e", 1, s))
    for s in range(1, k):
        nodes.append((Fraction(0), Fraction(k - s, k)))
        classes.append(("e", 2, s))
    idx = 0
    for i in range(1, k):
        for j in range(1, k - i):
            nodes.append((Fraction(i, k), Fraction(j, k)))
            classes.append(("i", idx))
            idx += 1
    return nodes, classes


def _invert_fraction_matrix(M):
    n = len(M)
    A = [row[:] + [Fraction(1) if i == j else Fraction(0) for j in range(n)]
         for i, row in enumerate(M)]
    for col in range(n):
        piv = next(r for r in range(col, n) if A[r][col] != 0)
        A[col], A[piv] = A[piv], A[col]
        inv = Fraction(1) / A[col][col]
        A[col] = [v * inv for v in A[col]]
        for r in range(n):
            if r != col and A[r][col] != 0:
                f = A[r][col]
                A[r] = [vr - f * vc for vr, vc in zip(A[r], A[col])]
    return [row[n:] for row in A]


@dataclass
class ReferenceBasis:
    """Nodal Lagrange basis on the reference triangle."""
    degree: int
    nodes: np.ndarray
    node_classes: list
    exponents: list
    coeffs: np.ndarray  # coeffs[i, j]: coefficient of monomial j in basis i

    @property
    def n_basis(self):
        return len(self.nodes)

    def _mono(self, pts, dx=0, dy=0):
        x, y = pts[..., 0], pts[..., 1]
        cols = []
        for a, b in self.exponents:
            if a < dx or b < dy:
                cols.append(np.zeros_like(x))
                continue
            c = 1.0
            for m in range(dx):
                c *= a - m
            for m in range(dy):
                c *= b - m
            cols.append(c * x ** (a - dx) * y ** (b - dy))
        return np.stack(cols, axis=-1)

    def eval(self, pts):
        """Basis values, shape pts.shape[:-1] + (n_basis,)."""
        pts = np.asarray(pts, dtype=float)
        return self._mono(pts) @ self.coeffs.T

    def grad(self, pts):
        """Reference gradients, shape (..., n_basis, 2)."""
        pts = np.asarray(pts, dtype=float)
        gx = self._mono(pts, dx=1) @ self.coeffs.T
        gy = self._mono(pts, dy=1) @ self.coeffs.T
        return np.stack([gx, gy], axis=-1)

    def hess(self, pts):
        """Reference second derivatives, shape (..., n_basis, 2, 2)."""
        pts = np.asarray(pts, dtype=float)
        hxx = self._mono(pts, dx=2) @ self.coeffs.T
        hxy = self._mono(pts, dx=1, dy=1) @ self.coeffs.T
        hyy = self._mono(pts, dy=2) @ self.coeffs.T
        h = np.stack([hxx, hxy, hxy, hyy], axis=-1)
        return h.reshape(h.shape[:-1] + (2, 2))


_BASIS_CACHE: dict = {}


def _basis_for_degree(k):
    if k in _BASIS_CACHE:
        return _BASIS_CACHE[k]
    nodes, classes = _lattice_nodes(k)
    exps = _monomial_exponents(k)
    V = [[Fraction(x) ** a * Fraction(y) ** b for a, b in exps] for x, y in nodes]
    Vinv = _invert_fraction_matrix(V)
    # phi_i = sum_j C[i, j] m_j with C = (V^-1)^T
    C = np.array([[float(Vinv[j][i]) for j in range(len(exps))] for i in range(len(nodes))])
    basis = ReferenceBasis(
        degree=k,
        nodes=np.array([[float(x), float(y)] for x, y in nodes]),
        node_classes=classes,
        exponents=exps,
        coeffs=C,
    )
    _BASIS_CACHE[k] = basis
    return basis


def lagrange_basis(k: int) -> ReferenceBasis:
    """Nodal P_k basis, 1 <= k <= 5, with value/gradient/second-derivative
    evaluation at arbitrary reference points."""
    if not (1 <= k <= 5):
        raise FemError(f"unsupported Lagrange degree {k} (need 1..5)")
    return _basis_for_degree(k)


# ---------------------------------------------------------------------------
# finite element spaces
# ---------------------------------------------------------------------------

@dataclass
class FESpace:
    mesh: object
    family: str
    degree: int
    bc_mode: str
    basis: ReferenceBasis
    elem_dofs: np.ndarray          # (n_elems, n_local) scalar node indices
    node_coords: np.ndarray        # (n_nodes, 2)
    n_nodes: int
    is_vector: bool
    zero_mean: bool
    constrained_dofs: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    @property
    def ndof(self):
        return 2 * self.n_nodes if self.is_vector else self.n_nodes

    @property
    def free_dofs(self):
        mask = np.ones(self.ndof, dtype=bool)
        mask[self.constrained_dofs] = False
        return np.nonzero(mask)[0]

    @property
    def quad_degree(self):
        """Default volume/edge quadrature degree (absorbs the trigonometric
        coefficients on top of the polynomial integrands)."""
        return 2 * self.degree + 4

    def elem_vector_dofs(self, tris=None):
        """Vector DOF indices per element, interleaved (2*node, 2*node+1)."""
        ed = self.elem_dofs if tris is None else self.elem_dofs[tris]
        out = np.empty(ed.shape + (2,), dtype=ed.dtype)
        out[..., 0] = 2 * ed
        out[..., 1] = 2 * ed + 1
        return out.reshape(ed.shape[0], -1)


class _UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, i):
        while self.parent[i] != i:
            self.parent[i] = self.parent[self.parent[i]]
            i = self.parent[i]
        return i

    def union(self, i, j):
        ri, rj = self.find(i), self.find(j)
        if ri != rj:
            self.parent[max(ri, rj)] = min(ri, rj)


def _coord_key(x, y):
    return (round(float(x), 9), round(float(y), 9))


def _scalar_node_layout(mesh, k, continuous):
    """Global scalar node numbering and per-element DOF table."""
    basis = _basis_for_degree(k)
    tris = mesh.triangles
    nelem = len(tris)
    nloc = basis.n_basis
    verts = mesh.vertices

    if not continuous:
        elem_dofs = np.arange(nelem * nloc, dtype=np.int64).reshape(nelem, nloc)
        coords = np.empty((nelem * nloc, 2))
        for t in range(nelem):
            v = verts[tris[t]]
            ref = basis.nodes
            coords[t * nloc:(t + 1) * nloc] = (
                v[0] + np.outer(ref[:, 0], v[1] - v[0]) + np.outer(ref[:, 1], v[2] - v[0])
            )
        return elem_dofs, coords

    nv = len(verts)
    edge_index = {}
    for t in range(nelem):
        for e in range(3):
            a, b = tris[t][e], tris[t][(e + 1) % 3]
            key = (min(a, b), max(a, b))
            if key not in edge_index:
                edge_index[key] = len(edge_index)
    ne = len(edge_index)
    n_int = max(0, (k - 1) * (k - 2) // 2)

    elem_dofs = np.empty((nelem, nloc), dtype=np.int64)
    coords = np.zeros((nv + ne * max(0, k - 1) + nelem * n_int, 2))
    coords[:nv] = verts
    for t in range(nelem):
        tv = tris[t]
        v = verts[tv]
        for loc, cls in enumerate(basis.node_classes):
            kind = cls[0]
            if kind == "v":
                g = tv[cls[1]]
            elif kind == "e":
                e, s = cls[1], cls[2]
                a, b = tv[e], tv[(e + 1) % 3]
                key = (min(a, b), max(a, b))
                # canonical direction: lexicographic by coordinates, so shared
                # and periodic-mirrored edges agree bit-for-bit
                pa, pb = verts[a], verts[b]
                if (pa[0], pa[1]) <= (pb[0], pb[1]):
                    ca, cb, pos = a, b, s
                else:
                    ca, cb, pos = b, a, k - s
                g = nv + edge_index[key] * (k - 1) + (pos - 1)
                coords[g] = verts[ca] + (pos / k) * (verts[cb] - verts[ca])
            else:
                g = nv + ne * (k - 1) + t * n_int + cls[1]
                ref = basis.nodes[loc]
                coords[g] = v[0] + ref[0] * (v[1] - v[0]) + ref[1] * (v[2] - v[0])
            elem_dofs[t, loc] = g
    return elem_dofs, coords


def _merge_periodic(elem_dofs, coords):
    """Identify nodes on the right/top boundary with their left/bottom images."""
    n = len(coords)
    lookup = {}
    onb = (np.abs(np.abs(coords[:, 0]) - 4.0) < _COORD_TOL) | (
        np.abs(np.abs(coords[:, 1]) - 4.0) < _COORD_TOL)
    for i in np.nonzero(onb)[0]:
        lookup[_coord_key(*coords[i])] = i
    uf = _UnionFind(n)
    for i in np.nonzero(onb)[0]:
        x, y = coords[i]
        if abs(x - 4.0) < _COORD_TOL:
            j = lookup.get(_coord_key(x - 8.0, y))
            if j is None:
                raise FemError("periodic identification failed: unmatched boundary node")
            uf.union(i, j)
        if abs(y - 4.0) < _COORD_TOL:
            j = lookup.get(_coord_key(x, y - 8.0))
            if j is None:
                raise FemError("periodic identification failed: unmatched boundary node")
            uf.union(i, j)
    roots = np.array([uf.find(i) for i in range(n)])
    uniq, newid = np.unique(roots, return_inverse=True)
    return newid[elem_dofs], coords[uniq], len(uniq)


def build_space(mesh, family: str, degree: int, bc_mode: str = "none") -> FESpace:
    """Construct a DOF-mapped FE space on `mesh`.

    `degree` is the polynomial degree of the space itself (pass k for the
    velocity, k-1 for a pressure family).
    """
    if family not in FAMILIES:
        raise FemError(f"unknown family {family!r}")
    if bc_mode not in BC_MODES:
        raise FemError(f"unknown bc_mode {bc_mode!r}")
    if family == VECTOR_PK:
        if not (1 <= degree <= 5):
            raise FemError("velocity space needs degree 1..5")
    elif family == SCALAR_DISC:
        if not (0 <= degree <= 4):
            raise FemError("discontinuous pressure space needs degree 0..4")
    else:
        if not (1 <= degree <= 4):
            raise FemError("continuous pressure space needs degree 1..4 "
                           "(k=1 velocity has no continuous pressure partner)")
    if family != VECTOR_PK and bc_mode in ("strong_normal", "full_dirichlet", "nitsche"):
        raise FemError(f"bc_mode {bc_mode!r} applies to the vector space only")
    if family == SCALAR_DISC and bc_mode == "periodic":
        bc_mode = "none"  # element-local DOFs need no identification

    continuous = family != SCALAR_DISC
    elem_dofs, coords = _scalar_node_layout(mesh, degree, continuous)
    n_nodes = len(coords)

    if bc_mode == "periodic":
        if mesh.periodic_pairs is None:
            raise FemError("periodic bc_mode requires a mesh generated with "
                           "periodic_matching")
        elem_dofs, coords, n_nodes = _merge_periodic(elem_dofs, coords)

    sp = FESpace(
        mesh=mesh,
        family=family,
        degree=degree,
        bc_mode=bc_mode,
        basis=_basis_for_degree(degree),
        elem_dofs=elem_dofs,
        node_coords=coords,
        n_nodes=n_nodes,
        is_vector=family == VECTOR_PK,
        zero_mean=family != VECTOR_PK,
    )

    if bc_mode in ("strong_normal", "full_dirichlet"):
        x, y = coords[:, 0], coords[:, 1]
        on_lr = np.abs(np.abs(x) - 4.0) < _COORD_TOL
        on_tb = np.abs(np.abs(y) - 4.0) < _COORD_TOL
        constrained = []
        if bc_mode == "strong_normal":
            constrained.append(2 * np.nonzero(on_lr)[0])      # x-component
            constrained.append(2 * np.nonzero(on_tb)[0] + 1)  # y-component
        else:
            onb = np.nonzero(on_lr | on_tb)[0]
            constrained.append(2 * onb)
            constrained.append(2 * onb + 1)
        sp.constrained_dofs = np.unique(np.concatenate(constrained)).astype(np.int64)
    return sp


# ---------------------------------------------------------------------------
# FE function evaluation
# ---------------------------------------------------------------------------

def element_map(mesh, tri):
    """Affine map data of one element: (v0, J, invJT, detJ)."""
    v = mesh.vertices[mesh.triangles[tri]]
    J = np.column_stack([v[1] - v[0], v[2] - v[0]])
    detJ = J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0]
    invJ = np.array([[J[1, 1], -J[0, 1]], [-J[1, 0], J[0, 0]]]) / detJ
    return v[0], J, invJ.T, detJ


def eval_fe(space: FESpace, coeffs: np.ndarray, tri: int, ref_points):
    """Evaluate an FE function on element `tri` at reference points.

    Returns (values, grads, hessians) with shapes (npts, ncomp),
    (npts, ncomp, 2) and (npts, ncomp, 2, 2); second derivatives are
    element-wise (broken) quantities.
    """
    coeffs = np.asarray(coeffs)
    if coeffs.shape[0] != space.ndof:
        raise FemError(f"coefficient vector length {coeffs.shape[0]} != ndof {space.ndof}")
    ref_points = np.atleast_2d(np.asarray(ref_points, dtype=float))
    basis = space.basis
    _, _, invJT, _ = element_map(space.mesh, tri)

    N = basis.eval(ref_points)                      # (np, nb)
    G = basis.grad(ref_points) @ invJT.T            # (np, nb, 2) physical
    H = basis.hess(ref_points)                      # (np, nb, 2, 2)
    H = np.einsum("ia,pnab,jb->pnij", invJT, H, invJT)

    nodes = space.elem_dofs[tri]
    if space.is_vector:
        c = coeffs[2 * np.repeat(nodes, 2) + np.tile([0, 1], len(nodes))]
        c = c.reshape(len(nodes), 2)                # (nb, 2)
        vals = np.einsum("pn,nc->pc", N, c)
        grads = np.einsum("pni,nc->pci", G, c)
        hess = np.einsum("pnij,nc->pcij", H, c)
    else:
        c = coeffs[nodes]
        vals = (N @ c)[:, None]
        grads = np.einsum("pni,n->pi", G, c)[:, None, :]
        hess = np.einsum("pnij,n->pij", H, c)[:, None, :, :]
    return vals, grads, hess

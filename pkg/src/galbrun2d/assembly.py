"""Element-wise assembly of the Galbrun sesquilinear form and companions.

Conventions: matrices are laid out A[i, j] = a(phi_j, phi_i) (rows test,
columns trial) with complex conjugation on the test argument, so the
quadratic form reads test^H A trial.  Vector DOFs interleave components,
dof = 2*node + component.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .fem import SCALAR_CONT, FESpace, edge_quadrature, triangle_quadrature

_CHUNK = 2048

_NORMALS = {"left": (-1.0, 0.0), "right": (1.0, 0.0),
            "bottom": (0.0, -1.0), "top": (0.0, 1.0)}

GALBRUN_TERMS = ("divdiv", "convection", "gradp_cross", "hess", "damping")


class AssemblyError(ValueError):
    pass


def _geometry(mesh, tris):
    v = mesh.vertices[mesh.triangles[tris]]
    J = np.stack([v[:, 1] - v[:, 0], v[:, 2] - v[:, 0]], axis=2)
    detJ = J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0]
    invJ = np.empty_like(J)
    invJ[:, 0, 0] = J[:, 1, 1] / detJ
    invJ[:, 0, 1] = -J[:, 0, 1] / detJ
    invJ[:, 1, 0] = -J[:, 1, 0] / detJ
    invJ[:, 1, 1] = J[:, 0, 0] / detJ
    return v[:, 0], J, invJ, detJ


def _chunks(n, size=_CHUNK):
    for lo in range(0, n, size):
        yield np.arange(lo, min(lo + size, n))


def _scatter(rows_dofs, cols_dofs, local, shape, dtype):
    nr, nc = rows_dofs.shape[1], cols_dofs.shape[1]
    rows = np.repeat(rows_dofs, nc, axis=1).ravel()
    cols = np.tile(cols_dofs, (1, nr)).ravel()
    return sp.coo_matrix((local.reshape(-1).astype(dtype), (rows, cols)),
                         shape=shape).tocsr()


def _sum_csr(mats, shape, dtype):
    if not mats:
        return sp.csr_matrix(shape, dtype=dtype)
    total = mats[0]
    for m in mats[1:]:
        total = total + m
    return total


def _require_vector(X):
    if not X.is_vector:
        raise AssemblyError("a vector-valued space is required")


def _check_quad(X, quad_degree):
    if quad_degree is None:
        return X.quad_degree
    if quad_degree < 2 * X.degree + 2:
        raise AssemblyError(f"quadrature degree {quad_degree} below 2k+2")
    return quad_degree


# ---------------------------------------------------------------------------
# volume assembly
# ---------------------------------------------------------------------------

def _volume_blocks(X, cset, quad_degree, terms):
    """Yield (vec_dofs, local complex matrix) per element chunk."""
    rule = triangle_quadrature(quad_degree)
    basis = X.basis
    qp, qw = rule.points, rule.weights
    N = basis.eval(qp)                      # (nq, nb)
    Gr = basis.grad(qp)                     # (nq, nb, 2)
    nb = basis.n_basis
    om, Om = cset.omega, cset.Omega

    for idx in _chunks(X.mesh.n_triangles):
        v0, J, invJ, detJ = _geometry(X.mesh, idx)
        Xp = v0[:, None, :] + np.einsum("eij,qj->eqi", J, qp)
        x, y = Xp[..., 0], Xp[..., 1]
        w = qw[None, :] * detJ[:, None]
        G = np.einsum("qbj,eji->eqbi", Gr, invJ)

        rho = cset.rho.value(x, y)
        L = np.zeros((len(idx), 2 * nb, 2 * nb), dtype=complex)

        def add(ct, cr, block):
            L[:, ct::2, cr::2] += block

        if "divdiv" in terms:
            wc = w * cset.cs2.value(x, y) * rho
            for ct in range(2):
                for cr in range(2):
                    add(ct, cr, np.einsum("eq,eqi,eqj->eij", wc,
                                          G[..., ct], G[..., cr], optimize=True))

        if "convection" in terms:
            bv = cset.b.value(x, y)
            Db = bv[..., 0, None] * G[..., 0] + bv[..., 1, None] * G[..., 1]
            P = om * N[None] + 1j * Db           # D(phi e_c) component along e_c
            Pc = np.conj(P)
            wr = w * rho
            PP = np.einsum("eq,eqi,eqj->eij", wr, Pc, P, optimize=True)
            add(0, 0, -PP)
            add(1, 1, -PP)
            if Om != 0.0:
                NN = np.einsum("eq,qi,qj->eij", wr, N, N, optimize=True)
                NP = np.einsum("eq,qi,eqj->eij", wr, N, P, optimize=True)
                PcN = np.einsum("eq,eqi,qj->eij", wr, Pc, N, optimize=True)
                add(0, 0, -Om**2 * NN)
                add(1, 1, -Om**2 * NN)
                # test comp 0, trial comp 1: -rho<A1, conj(A0)> etc.
                add(0, 1, -(-1j * Om) * (NP + PcN))
                add(1, 0, -(1j * Om) * (NP + PcN))

        if "gradp_cross" in terms:
            gp = cset.p.grad(x, y)
            for ct in range(2):
                for cr in range(2):
                    # <div u, grad p . u'> : trial div, test gradp.u
                    add(ct, cr, np.einsum("eq,qi,eqj->eij", w * gp[..., ct],
                                          N, G[..., cr], optimize=True))
                    # <grad p . u, div u'>
                    add(ct, cr, np.einsum("eq,eqi,qj->eij", w * gp[..., cr],
                                          G[..., ct], N, optimize=True))

        if "hess" in terms:
            H = cset.p.hess(x, y) - rho[..., None, None] * cset.phi.hess(x, y)
            for ct in range(2):
                for cr in range(2):
                    add(ct, cr, np.einsum("eq,qi,qj->eij", w * H[..., ct, cr],
                                          N, N, optimize=True))

        if "damping" in terms:
            wg = w * cset.gamma.value(x, y) * rho
            NN = np.einsum("eq,qi,qj->eij", wg, N, N, optimize=True)
            add(0, 0, -1j * om * NN)
            add(1, 1, -1j * om * NN)

        yield X.elem_vector_dofs(idx), L


def assemble_galbrun(X: FESpace, cset, quad_degree=None,
                     terms=GALBRUN_TERMS) -> sp.csr_matrix:
    """Volume part of the Galbrun form:

    <cs2 rho div u, div u'> - <rho (om + i db + i Om x) u, (om + i db + i Om x) u'>
    + <div u, grad p . u'> + <grad p . u, div u'>
    + <(Hess p - rho Hess phi) u, u'> - i om <gamma rho u, u'>.
    """
    _require_vector(X)
    quad_degree = _check_quad(X, quad_degree)
    n = X.ndof
    parts = [_scatter(vd, vd, L, (n, n), complex)
             for vd, L in _volume_blocks(X, cset, quad_degree, set(terms))]
    return _sum_csr(parts, (n, n), complex)


def assemble_rhs(X: FESpace, source, quad_degree=None) -> np.ndarray:
    """Load vector b_i = <s, phi_i>; the sharply peaked sources warrant the
    raised default quadrature degree 2k+6."""
    _require_vector(X)
    if quad_degree is None:
        quad_degree = 2 * X.degree + 6
    value = getattr(source, "value", source)
    rule = triangle_quadrature(quad_degree)
    qp, qw = rule.points, rule.weights
    N = X.basis.eval(qp)
    b = np.zeros(X.ndof, dtype=complex)
    for idx in _chunks(X.mesh.n_triangles):
        v0, J, _, detJ = _geometry(X.mesh, idx)
        Xp = v0[:, None, :] + np.einsum("eij,qj->eqi", J, qp)
        w = qw[None, :] * detJ[:, None]
        sv = np.asarray(value(Xp[..., 0], Xp[..., 1]), dtype=complex)
        vd = X.elem_vector_dofs(idx)
        for c in range(2):
            loc = np.einsum("eq,qi->ei", w * sv[..., c], N, optimize=True)
            np.add.at(b, vd[:, c::2], loc)
    return b


# ---------------------------------------------------------------------------
# boundary (Nitsche) assembly
# ---------------------------------------------------------------------------

def _boundary_facets(mesh):
    """Owner triangle, local edge index, endpoints and tag per boundary edge."""
    owners = {}
    tris = mesh.triangles
    for t in range(len(tris)):
        for e in range(3):
            key = tuple(sorted((int(tris[t][e]), int(tris[t][(e + 1) % 3]))))
            owners.setdefault(key, []).append((t, e))
    facets = []
    for (a, b), tag in zip(mesh.boundary_edges, mesh.boundary_tags):
        key = tuple(sorted((int(a), int(b))))
        own = owners.get(key, [])
        if len(own) != 1:
            raise AssemblyError(f"boundary edge {key} is not a boundary facet")
        if tag not in _NORMALS:
            raise AssemblyError(f"boundary edge {key} has no usable side tag")
        facets.append((own[0][0], own[0][1], int(a), int(b), tag))
    return facets


def _facet_eval(X, t, e, a, b, srule):
    """Basis values/physical gradients at facet quadrature points."""
    mesh = X.mesh
    tris = mesh.triangles
    s = srule.points
    if tris[t][e] == a:
        sloc = s
    else:
        sloc = 1.0 - s
    ref_corners = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    r0, r1 = ref_corners[e], ref_corners[(e + 1) % 3]
    ref_pts = r0[None, :] + sloc[:, None] * (r1 - r0)[None, :]
    v0, J, invJ, _ = _geometry(mesh, np.array([t]))
    N = X.basis.eval(ref_pts)
    G = np.einsum("qbj,ji->qbi", X.basis.grad(ref_pts), invJ[0])
    pa, pb = mesh.vertices[a], mesh.vertices[b]
    hf = float(np.hypot(*(pb - pa)))
    pts = pa[None, :] + s[:, None] * (pb - pa)[None, :]
    return N, G, pts, hf


def assemble_nitsche(X: FESpace, cset, lam: float, quad_degree=None) -> sp.csr_matrix:
    """Boundary terms weakly imposing u.nu = 0:

    -<cs2 rho u.nu, div u'> - <cs2 rho div u, u'.nu>
    + (lam k^2 / h) <cs2 rho u.nu, u'.nu>,  h = local facet length.
    """
    _require_vector(X)
    if X.bc_mode != "nitsche":
        raise AssemblyError("assemble_nitsche requires a space built with "
                            "bc_mode='nitsche'")
    if lam <= 0:
        raise AssemblyError("Nitsche penalty lambda must be positive")
    quad_degree = _check_quad(X, quad_degree)
    srule = edge_quadrature(quad_degree)
    k2 = float(X.degree) ** 2
    nb = X.basis.n_basis
    n = X.ndof
    parts = []
    for (t, e, a, b, tag) in _boundary_facets(X.mesh):
        N, G, pts, hf = _facet_eval(X, t, e, a, b, srule)
        nu = _NORMALS[tag]
        w = srule.weights * hf * cset.cs2.value(pts[:, 0], pts[:, 1]) \
            * cset.rho.value(pts[:, 0], pts[:, 1])
        L = np.zeros((2 * nb, 2 * nb))
        for ct in range(2):
            for cr in range(2):
                un_t = nu[ct] * N        # test u'.nu factor
                un_r = nu[cr] * N        # trial u.nu factor
                blk = -np.einsum("q,qi,qj->ij", w, G[..., ct], un_r)
                blk -= np.einsum("q,qi,qj->ij", w, un_t, G[..., cr])
                blk += (lam * k2 / hf) * np.einsum("q,qi,qj->ij", w, un_t, un_r)
                L[ct::2, cr::2] += blk
        vd = X.elem_vector_dofs(np.array([t]))
        parts.append(_scatter(vd, vd, L[None], (n, n), complex))
    return _sum_csr(parts, (n, n), complex)


# ---------------------------------------------------------------------------
# Gram matrices and couplings
# ---------------------------------------------------------------------------

def assemble_gram(space: FESpace, norm: str = "L2", cset=None,
                  quad_degree=None) -> sp.csr_matrix:
    """Gram matrix of the L2, H1-seminorm, or X-norm inner product.

    Xnorm: <div u, div u'> + <b.grad u, b.grad u'> + <u, u'> (vector spaces,
    needs the coefficient set for b)."""
    if norm not in ("L2", "H1semi", "Xnorm"):
        raise AssemblyError(f"unknown norm {norm!r}")
    if norm == "Xnorm":
        _require_vector(space)
        if cset is None:
            raise AssemblyError("Xnorm Gram needs the coefficient set (flow b)")
    quad_degree = quad_degree or space.quad_degree
    rule = triangle_quadrature(quad_degree)
    qp, qw = rule.points, rule.weights
    basis = space.basis
    N = basis.eval(qp)
    Gr = basis.grad(qp)
    nb = basis.n_basis
    n = space.ndof
    ncomp = 2 if space.is_vector else 1
    parts = []
    for idx in _chunks(space.mesh.n_triangles):
        v0, J, invJ, detJ = _geometry(space.mesh, idx)
        w = qw[None, :] * detJ[:, None]
        G = np.einsum("qbj,eji->eqbi", Gr, invJ)
        L = np.zeros((len(idx), ncomp * nb, ncomp * nb))
        if norm == "L2":
            NN = np.einsum("eq,qi,qj->eij", w, N, N, optimize=True)
            for c in range(ncomp):
                L[:, c::ncomp, c::ncomp] += NN
        elif norm == "H1semi":
            GG = np.einsum("eq,eqid,eqjd->eij", w, G, G, optimize=True)
            for c in range(ncomp):
                L[:, c::ncomp, c::ncomp] += GG
        else:
            Xp = v0[:, None, :] + np.einsum("eij,qj->eqi", J, qp)
            bv = cset.b.value(Xp[..., 0], Xp[..., 1])
            Db = bv[..., 0, None] * G[..., 0] + bv[..., 1, None] * G[..., 1]
            NN = np.einsum("eq,qi,qj->eij", w, N, N, optimize=True)
            DD = np.einsum("eq,eqi,eqj->eij", w, Db, Db, optimize=True)
            for c in range(2):
                L[:, c::2, c::2] += NN + DD
                for cr in range(2):
                    L[:, c::2, cr::2] += np.einsum(
                        "eq,eqi,eqj->eij", w, G[..., c], G[..., cr], optimize=True)
        vd = space.elem_vector_dofs(idx) if space.is_vector else space.elem_dofs[idx]
        parts.append(_scatter(vd, vd, L, (n, n), float))
    return _sum_csr(parts, (n, n), float)


def assemble_div_coupling(X: FESpace, Q: FESpace, quad_degree=None) -> sp.csr_matrix:
    """B[q, u] = <div u, q> over the velocity/pressure pair."""
    _require_vector(X)
    if X.mesh is not Q.mesh:
        raise AssemblyError("velocity and pressure spaces must share a mesh")
    quad_degree = quad_degree or max(X.quad_degree, X.degree - 1 + Q.degree)
    rule = triangle_quadrature(quad_degree)
    qp, qw = rule.points, rule.weights
    NQ = Q.basis.eval(qp)
    GrX = X.basis.grad(qp)
    shape = (Q.ndof, X.ndof)
    parts = []
    for idx in _chunks(X.mesh.n_triangles):
        _, _, invJ, detJ = _geometry(X.mesh, idx)
        w = qw[None, :] * detJ[:, None]
        G = np.einsum("qbj,eji->eqbi", GrX, invJ)
        nbQ, nbX = NQ.shape[1], G.shape[2]
        L = np.zeros((len(idx), nbQ, 2 * nbX))
        for c in range(2):
            L[:, :, c::2] = np.einsum("eq,qi,eqj->eij", w, NQ, G[..., c],
                                      optimize=True)
        parts.append(_scatter(Q.elem_dofs[idx], X.elem_vector_dofs(idx),
                              L, shape, float))
    return _sum_csr(parts, shape, float)


def assemble_mean_vector(Q: FESpace) -> np.ndarray:
    """Integrals of the scalar basis functions (zero-mean constraint row)."""
    rule = triangle_quadrature(max(2, Q.degree))
    qp, qw = rule.points, rule.weights
    NQ = Q.basis.eval(qp)
    out = np.zeros(Q.ndof)
    for idx in _chunks(Q.mesh.n_triangles):
        _, _, _, detJ = _geometry(Q.mesh, idx)
        w = qw[None, :] * detJ[:, None]
        np.add.at(out, Q.elem_dofs[idx], np.einsum("eq,qi->ei", w, NQ))
    return out


def assemble_convection(X: FESpace, cset, quad_degree=None) -> sp.csr_matrix:
    """C[i, j] = <rho b.grad phi_j, phi_i> (real part of the transport term)."""
    _require_vector(X)
    quad_degree = _check_quad(X, quad_degree)
    rule = triangle_quadrature(quad_degree)
    qp, qw = rule.points, rule.weights
    N = X.basis.eval(qp)
    Gr = X.basis.grad(qp)
    n = X.ndof
    parts = []
    for idx in _chunks(X.mesh.n_triangles):
        v0, J, invJ, detJ = _geometry(X.mesh, idx)
        Xp = v0[:, None, :] + np.einsum("eij,qj->eqi", J, qp)
        w = qw[None, :] * detJ[:, None] * cset.rho.value(Xp[..., 0], Xp[..., 1])
        G = np.einsum("qbj,eji->eqbi", Gr, invJ)
        bv = cset.b.value(Xp[..., 0], Xp[..., 1])
        Db = bv[..., 0, None] * G[..., 0] + bv[..., 1, None] * G[..., 1]
        blk = np.einsum("eq,qi,eqj->eij", w, N, Db, optimize=True)
        nb = N.shape[1]
        L = np.zeros((len(idx), 2 * nb, 2 * nb))
        for c in range(2):
            L[:, c::2, c::2] += blk
        parts.append(_scatter(X.elem_vector_dofs(idx), X.elem_vector_dofs(idx),
                              L, (n, n), float))
    return _sum_csr(parts, (n, n), float)


# ---------------------------------------------------------------------------
# Taylor-Hood block system
# ---------------------------------------------------------------------------

def _th_couplings(X, Q, cset, quad_degree):
    """C1[q,u] = <cs2 rho div u + grad p . u, q>, C2[q,u] = <grad p . u, q>,
    Mw[q,q'] = <cs2 rho q, q'> (cs2 rho (qvec . u) equals grad p . u)."""
    rule = triangle_quadrature(quad_degree)
    qp, qw = rule.points, rule.weights
    NQ = Q.basis.eval(qp)
    NX = X.basis.eval(qp)
    GrX = X.basis.grad(qp)
    c1_parts, c2_parts, mw_parts = [], [], []
    for idx in _chunks(X.mesh.n_triangles):
        v0, J, invJ, detJ = _geometry(X.mesh, idx)
        Xp = v0[:, None, :] + np.einsum("eij,qj->eqi", J, qp)
        x, y = Xp[..., 0], Xp[..., 1]
        w = qw[None, :] * detJ[:, None]
        wcr = w * cset.cs2.value(x, y) * cset.rho.value(x, y)
        gp = cset.p.grad(x, y)
        G = np.einsum("qbj,eji->eqbi", GrX, invJ)
        nbQ, nbX = NQ.shape[1], NX.shape[1]
        L1 = np.zeros((len(idx), nbQ, 2 * nbX))
        L2 = np.zeros((len(idx), nbQ, 2 * nbX))
        for c in range(2):
            L1[:, :, c::2] = np.einsum("eq,qi,eqj->eij", wcr, NQ, G[..., c],
                                       optimize=True)
            pcomp = np.einsum("eq,qi,qj->eij", w * gp[..., c], NQ, NX,
                              optimize=True)
            L1[:, :, c::2] += pcomp
            L2[:, :, c::2] = pcomp
        Lm = np.einsum("eq,qi,qj->eij", wcr, NQ, NQ, optimize=True)
        qd, xd = Q.elem_dofs[idx], X.elem_vector_dofs(idx)
        c1_parts.append(_scatter(qd, xd, L1, (Q.ndof, X.ndof), float))
        c2_parts.append(_scatter(qd, xd, L2, (Q.ndof, X.ndof), float))
        mw_parts.append(_scatter(qd, qd, Lm, (Q.ndof, Q.ndof), float))
    return (_sum_csr(c1_parts, (Q.ndof, X.ndof), float),
            _sum_csr(c2_parts, (Q.ndof, X.ndof), float),
            _sum_csr(mw_parts, (Q.ndof, Q.ndof), float))


def _th_nitsche(X, Q, cset, lam, quad_degree):
    """Nitsche blocks for the pseudo-pressure variant: the facet consistency
    pairs couple u.nu with the pseudo-pressure in place of div u."""
    srule = edge_quadrature(quad_degree)
    k2 = float(X.degree) ** 2
    nbX, nbQ = X.basis.n_basis, Q.basis.n_basis
    pen_parts, bn_parts = [], []
    for (t, e, a, b, tag) in _boundary_facets(X.mesh):
        N, _, pts, hf = _facet_eval(X, t, e, a, b, srule)
        # pressure basis at the same facet points
        sloc = srule.points if X.mesh.triangles[t][e] == a else 1.0 - srule.points
        ref_corners = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        r0, r1 = ref_corners[e], ref_corners[(e + 1) % 3]
        ref_pts = r0[None, :] + sloc[:, None] * (r1 - r0)[None, :]
        NQ = Q.basis.eval(ref_pts)
        nu = _NORMALS[tag]
        w = srule.weights * hf * cset.cs2.value(pts[:, 0], pts[:, 1]) \
            * cset.rho.value(pts[:, 0], pts[:, 1])
        Lp = np.zeros((2 * nbX, 2 * nbX))
        Lb = np.zeros((nbQ, 2 * nbX))
        for ct in range(2):
            for cr in range(2):
                Lp[ct::2, cr::2] += (lam * k2 / hf) * nu[ct] * nu[cr] * \
                    np.einsum("q,qi,qj->ij", w, N, N)
            Lb[:, ct::2] += nu[ct] * np.einsum("q,qi,qj->ij", w, NQ, N)
        vd = X.elem_vector_dofs(np.array([t]))
        qd = Q.elem_dofs[np.array([t])]
        pen_parts.append(_scatter(vd, vd, Lp[None], (X.ndof, X.ndof), complex))
        bn_parts.append(_scatter(qd, vd, Lb[None], (Q.ndof, X.ndof), float))
    return (_sum_csr(pen_parts, (X.ndof, X.ndof), complex),
            _sum_csr(bn_parts, (Q.ndof, X.ndof), float))


def assemble_taylor_hood(X: FESpace, Q: FESpace, cset, nitsche_lambda=None,
                         quad_degree=None):
    """Block system over (u, q1, q2) realizing the projected-divergence
    variant: eliminating q1 reproduces <cs2 rho P(div u + q.u), P(div u' + q.u')>
    and eliminating q2 the -<cs2 rho P(q.u), P(q.u')> correction, with P the
    cs2*rho-weighted projection onto the continuous pressure space
    (q := cs2^-1 rho^-1 grad p).

    Returns (K, layout) with layout = (ndof_u, ndof_q); block order [u, q1, q2].
    Zero-mean constraints on q1, q2 are left to the solve (bordered rows).
    """
    _require_vector(X)
    if Q.family != SCALAR_CONT:
        raise AssemblyError("the pseudo-pressure space must be the continuous "
                            "scalar family")
    if X.degree < 2 or Q.degree != X.degree - 1:
        raise AssemblyError(f"degree mismatch: velocity k={X.degree} needs "
                            f"continuous pressure degree k-1, got {Q.degree}")
    quad_degree = _check_quad(X, quad_degree)
    A_uu = assemble_galbrun(X, cset, quad_degree,
                            terms=("convection", "hess", "damping"))
    C1, C2, Mw = _th_couplings(X, Q, cset, quad_degree)
    if nitsche_lambda is not None:
        pen, bn = _th_nitsche(X, Q, cset, nitsche_lambda, quad_degree)
        A_uu = A_uu + pen
        C1 = C1 - bn
    K = sp.bmat([
        [A_uu, C1.T, -C2.T],
        [C1, -Mw, None],
        [-C2, None, Mw],
    ], format="csr").astype(complex)
    return K, (X.ndof, Q.ndof)


# ---------------------------------------------------------------------------
# debugging export
# ---------------------------------------------------------------------------

def write_matrix_coo(A, path):
    """Plain-text (row, col, re, im) dump; not a stability-bearing format."""
    coo = sp.coo_matrix(A)
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"matrix {coo.shape[0]} {coo.shape[1]} nnz {coo.nnz}\n")
        for r, c, v in zip(coo.row, coo.col, coo.data):
            v = complex(v)
            f.write(f"{r} {c} {v.real:.17g} {v.imag:.17g}\n")

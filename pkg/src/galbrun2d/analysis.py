"""Solver diagnostics: X-norm errors, consistency error, EOC, inf-sup
constants, Mach admissibility, discrete Helmholtz decomposition."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import assembly, linalg
from .fem import SCALAR_CONT, SCALAR_DISC, VECTOR_PK, build_space, triangle_quadrature
from .mesh import locate_points
from .solver import Solution, galbrun_residual_parts

EXCLUSION_RADIUS = 1.5


class AnalysisError(ValueError):
    pass


@dataclass
class ConvergenceRecord:
    order: int
    h: float
    error: float
    conserror: float = float("nan")
    variant: str = ""
    bc: str = ""


@dataclass
class MachReport:
    mach_sq: float
    C_M: float
    theta: float
    bound_homogeneous: float
    bound_heterogeneous: float
    admissible: bool


# ---------------------------------------------------------------------------
# FE field sampling
# ---------------------------------------------------------------------------

def _fields_on_elements(space, vec, idx, qp, hessian=False):
    """Values/Jacobians (optionally Hessians) of a vector FE function at the
    reference points qp on elements idx; also returns physical points and
    quadrature scale detJ."""
    basis = space.basis
    N = basis.eval(qp)
    Gr = basis.grad(qp)
    v0, J, invJ, detJ = assembly._geometry(space.mesh, idx)
    X = v0[:, None, :] + np.einsum("eij,qj->eqi", J, qp)
    G = np.einsum("qbj,eji->eqbi", Gr, invJ)
    nodes = space.elem_dofs[idx]
    cpair = np.stack([vec[2 * nodes], vec[2 * nodes + 1]], axis=-1)  # (E, nb, 2)
    U = np.einsum("qb,ebc->eqc", N, cpair)
    Ju = np.einsum("eqbj,ebc->eqcj", G, cpair)
    out = [X, detJ, U, Ju]
    if hessian:
        Hr = basis.hess(qp)
        H = np.einsum("eai,qbad,edj->eqbij", invJ, Hr, invJ, optimize=True)
        Hu = np.einsum("eqbij,ebc->eqcij", H, cpair, optimize=True)
        out.append(Hu)
    return out


def x_norm_error(coarse: Solution, reference: Solution) -> float:
    """X-norm of (coarse - reference), quadrature on the coarse mesh with the
    reference transferred by point location."""
    if coarse.coefficients is None or reference.coefficients is None:
        raise AnalysisError("both solutions must carry their coefficient set")
    ca, cb = coarse.coefficients, reference.coefficients
    if ca.label != cb.label or ca.omega != cb.omega:
        raise AnalysisError("solutions do not share a coefficient set")
    space = coarse.space
    rspace = reference.space
    rule = triangle_quadrature(space.quad_degree)
    qp, qw = rule.points, rule.weights
    bcoef = ca.b
    total = 0.0
    for idx in assembly._chunks(space.mesh.n_triangles, 512):
        X, detJ, U, Ju = _fields_on_elements(space, coarse.velocity, idx, qp)
        flat = X.reshape(-1, 2)
        tris, bary = locate_points(rspace.mesh, flat)
        ref_pts = bary[:, 1:]
        Ur = np.empty((len(flat), 2), dtype=complex)
        Jr = np.empty((len(flat), 2, 2), dtype=complex)
        for t in np.unique(tris):
            mask = tris == t
            rp = ref_pts[mask]
            N = rspace.basis.eval(rp)
            _, _, invJ, _ = assembly._geometry(rspace.mesh, np.array([t]))
            G = np.einsum("qbj,ji->qbi", rspace.basis.grad(rp), invJ[0])
            nodes = rspace.elem_dofs[t]
            cpair = np.stack([reference.velocity[2 * nodes],
                              reference.velocity[2 * nodes + 1]], axis=-1)
            Ur[mask] = np.einsum("qb,bc->qc", N, cpair)
            Jr[mask] = np.einsum("qbj,bc->qcj", G, cpair)
        E = U - Ur.reshape(U.shape)
        Je = Ju - Jr.reshape(Ju.shape)
        b = bcoef.value(X[..., 0], X[..., 1])
        dive = Je[..., 0, 0] + Je[..., 1, 1]
        dbe = np.einsum("eqcj,eqj->eqc", Je, b)
        dens = (np.abs(dive) ** 2 + np.sum(np.abs(dbe) ** 2, axis=-1)
                + np.sum(np.abs(E) ** 2, axis=-1))
        total += float(np.sum(qw[None, :] * detJ[:, None] * dens))
    return math.sqrt(total)


def x_norm_error_exact(sol: Solution, value, jacobian) -> float:
    """X-norm of (sol - analytic field) given the field's value/Jacobian."""
    space = sol.space
    cset = sol.coefficients
    rule = triangle_quadrature(space.quad_degree)
    qp, qw = rule.points, rule.weights
    total = 0.0
    for idx in assembly._chunks(space.mesh.n_triangles):
        X, detJ, U, Ju = _fields_on_elements(space, sol.velocity, idx, qp)
        E = U - value(X[..., 0], X[..., 1])
        Je = Ju - jacobian(X[..., 0], X[..., 1])
        b = cset.b.value(X[..., 0], X[..., 1])
        dive = Je[..., 0, 0] + Je[..., 1, 1]
        dbe = np.einsum("eqcj,eqj->eqc", Je, b)
        dens = (np.abs(dive) ** 2 + np.sum(np.abs(dbe) ** 2, axis=-1)
                + np.sum(np.abs(E) ** 2, axis=-1))
        total += float(np.sum(qw[None, :] * detJ[:, None] * dens))
    return math.sqrt(total)


def x_norm(sol: Solution) -> float:
    """X-norm of a solution (via the Gram matrix of its space)."""
    G = assembly.assemble_gram(sol.space, "Xnorm", sol.coefficients)
    v = sol.velocity
    return math.sqrt(max(float(np.real(np.vdot(v, G @ v))), 0.0))


# ---------------------------------------------------------------------------
# consistency error
# ---------------------------------------------------------------------------

def consistency_error(sol: Solution, cset=None) -> float:
    """Relative strong-form residual away from the source region:

    || S1 - S2 ||_{L2} / || S1 ||_{L2} over the domain minus the disk of
    radius 1.5 at the origin (elements with a vertex inside are dropped
    whole); broken second derivatives element by element."""
    cset = cset or sol.coefficients
    space = sol.space
    if space.degree < 2:
        raise AnalysisError("consistency error needs k >= 2 "
                            "(element-wise second derivatives)")
    mesh = space.mesh
    vin = np.linalg.norm(mesh.vertices, axis=1) < EXCLUSION_RADIUS
    keep = ~np.any(vin[mesh.triangles], axis=1)
    rule = triangle_quadrature(space.quad_degree)
    qp, qw = rule.points, rule.weights
    num = 0.0
    den = 0.0
    elems = np.nonzero(keep)[0]
    for lo in range(0, len(elems), 512):
        idx = elems[lo:lo + 512]
        X, detJ, U, Ju, Hu = _fields_on_elements(space, sol.velocity, idx, qp,
                                                 hessian=True)
        S1, S2 = galbrun_residual_parts(cset, X[..., 0], X[..., 1], U, Ju, Hu)
        w = qw[None, :] * detJ[:, None]
        num += float(np.sum(w * np.sum(np.abs(S1 - S2) ** 2, axis=-1)))
        den += float(np.sum(w * np.sum(np.abs(S1) ** 2, axis=-1)))
    if den == 0.0:
        raise AnalysisError("consistency error undefined for a zero field")
    return math.sqrt(num / den)


# ---------------------------------------------------------------------------
# EOC
# ---------------------------------------------------------------------------

def eoc(records) -> list:
    """Empirical orders log(e_i/e_{i+1}) / log(h_i/h_{i+1}) for records of one
    polynomial order, sorted by decreasing h."""
    recs = sorted(records, key=lambda r: -r.h)
    if len(recs) < 2:
        raise AnalysisError("EOC needs at least two records")
    if len({r.order for r in recs}) != 1:
        raise AnalysisError("EOC records must share the polynomial order")
    if len({r.h for r in recs}) != len(recs):
        raise AnalysisError("EOC needs distinct mesh sizes")
    out = []
    for a, b in zip(recs, recs[1:]):
        out.append(math.log(a.error / b.error) / math.log(a.h / b.h))
    return out


# ---------------------------------------------------------------------------
# inf-sup constant
# ---------------------------------------------------------------------------

def inf_sup_constant(mesh, k: int, velocity_bc: str = "strong_normal",
                     pressure_family: str = "discontinuous",
                     dense_limit: int = 1600, tol: float = 1e-9) -> float:
    """Discrete inf-sup constant of the divergence coupling:

    beta_h^2 = smallest eigenvalue of (B A^-1 B^T) q = lambda M_Q q over
    zero-mean pressures, A the H1-seminorm Gram on the constrained velocity
    space and B[q, u] = <div u, q>."""
    if velocity_bc not in ("strong_normal", "full_dirichlet"):
        raise AnalysisError("velocity_bc must be strong_normal or full_dirichlet")
    fam = {"discontinuous": SCALAR_DISC, "continuous": SCALAR_CONT,
           SCALAR_DISC: SCALAR_DISC, SCALAR_CONT: SCALAR_CONT}[pressure_family]
    X = build_space(mesh, VECTOR_PK, k, velocity_bc)
    Q = build_space(mesh, fam, k - 1, "none")
    free = X.free_dofs
    A = assembly.assemble_gram(X, "H1semi")[free][:, free].tocsc()
    B = assembly.assemble_div_coupling(X, Q)[:, free].tocsr()
    M = assembly.assemble_gram(Q, "L2").tocsc()
    ones = np.ones((Q.ndof, 1))
    if Q.ndof <= dense_limit:
        Z = spla.splu(A).solve(B.toarray().T)
        S = B @ Z
        lam = linalg.smallest_generalized_eigenvalue(S, M.toarray(), deflate=ones)
    else:
        lu = spla.splu(A)
        S_op = spla.LinearOperator((Q.ndof, Q.ndof),
                                   matvec=lambda q: B @ lu.solve(B.T @ q),
                                   dtype=float)
        lam = linalg.smallest_generalized_eigenvalue(S_op, M, tol=tol,
                                                     deflate=ones)
    return math.sqrt(max(lam, 0.0))


# ---------------------------------------------------------------------------
# Mach admissibility
# ---------------------------------------------------------------------------

def mach_report(cset, beta_h: float, resolution: int = 512) -> MachReport:
    """Subsonic admissibility report: flow Mach measure against the bound
    beta_h^2 (cs2min rhomin)/(cs2max rhomax) / (1 + tan^2 theta) with
    theta = arctan(C_M / |omega|)."""
    if not (0 < beta_h <= 1):
        raise AnalysisError("beta_h must lie in (0, 1]")
    from .coefficients import mach_number_sq
    msq = mach_number_sq(cset, resolution)
    xs = np.linspace(-4.0, 4.0, resolution + 1)
    X, Y = np.meshgrid(xs, xs, indexing="ij")
    rho = cset.rho.value(X, Y)
    m = (-cset.p.hess(X, Y) / rho[..., None, None] + cset.phi.hess(X, Y))
    tr = m[..., 0, 0] + m[..., 1, 1]
    disc = np.sqrt((m[..., 0, 0] - m[..., 1, 1]) ** 2 + 4 * m[..., 0, 1] ** 2)
    lam_minus = 0.5 * (tr - disc)
    gam = cset.gamma.value(X, Y)
    C_M = max(0.0, float((-lam_minus / gam).max()))
    theta = math.atan(C_M / abs(cset.omega))
    cs2 = cset.cs2.value(X, Y)
    bound_hom = beta_h ** 2 * (cs2.min() * rho.min()) / (cs2.max() * rho.max())
    bound_het = bound_hom / (1.0 + math.tan(theta) ** 2)
    return MachReport(
        mach_sq=msq, C_M=C_M, theta=theta,
        bound_homogeneous=float(bound_hom), bound_heterogeneous=float(bound_het),
        admissible=bool(msq < bound_het),
    )


# ---------------------------------------------------------------------------
# discrete Helmholtz decomposition
# ---------------------------------------------------------------------------

def _dirichlet_twin(X):
    if X.bc_mode == "full_dirichlet":
        return X
    return build_space(X.mesh, VECTOR_PK, X.degree, "full_dirichlet")


def helmholtz_project(X, Q, u):
    """Split u = v + w: v is the minimum-H1-seminorm field in the Dirichlet
    subspace matching the projected divergence of u, w the remainder.

    Optimality system is the Stokes-type saddle problem; requires an inf-sup
    stable (X, Q) pair."""
    u = np.asarray(u, dtype=complex)
    if u.shape[0] != X.ndof:
        raise AnalysisError("coefficient vector does not match the space")
    XD = _dirichlet_twin(X)
    free = XD.free_dofs
    A = assembly.assemble_gram(XD, "H1semi")[free][:, free]
    B_full = assembly.assemble_div_coupling(XD, Q)
    B = B_full[:, free]
    c = assembly.assemble_mean_vector(Q)
    nf, nq = len(free), Q.ndof
    K = sp.bmat([
        [A, B.T, None],
        [B, None, sp.csc_matrix(c.reshape(-1, 1))],
        [None, sp.csc_matrix(c.reshape(1, -1)), None],
    ], format="csc").astype(complex)
    rhs = np.zeros(nf + nq + 1, dtype=complex)
    rhs[nf:nf + nq] = B_full @ u
    try:
        x, _ = linalg.sparse_solve(K, rhs, 1e-8)
    except (linalg.SingularMatrixError, linalg.NonConvergenceError) as exc:
        raise AnalysisError(f"Helmholtz projection failed; the velocity/"
                            f"pressure pair is not inf-sup stable ({exc})") from exc
    v = np.zeros(X.ndof, dtype=complex)
    v[free] = x[:nf]
    return v, u - v


def apply_Tn(X, Q, u):
    """Sign-flip operator of the discrete decomposition: v - w; involutive."""
    v, w = helmholtz_project(X, Q, u)
    return v - w


# ---------------------------------------------------------------------------
# discrete stability constant
# ---------------------------------------------------------------------------

def stability_constant(A, G, dense_limit: int = 4000) -> float:
    """Estimate of the inverse-operator norm in the G-metric:
    1/sigma_min with sigma_min^2 the smallest eigenvalue of
    (A^H G^-1 A) x = sigma^2 G x."""
    n = A.shape[0]
    if n <= dense_limit:
        Ad = A.toarray() if sp.issparse(A) else np.asarray(A)
        Gd = G.toarray() if sp.issparse(G) else np.asarray(G)
        S = Ad.conj().T @ np.linalg.solve(Gd, Ad)
        lam = linalg.smallest_generalized_eigenvalue(S, Gd)
    else:
        lu_g = spla.splu(sp.csc_matrix(G).astype(complex))
        Ac = sp.csr_matrix(A)

        def mv(x):
            return Ac.conj().T @ lu_g.solve(Ac @ x)

        S_op = spla.LinearOperator((n, n), matvec=mv, dtype=complex)
        lam = linalg.smallest_generalized_eigenvalue(S_op, sp.csc_matrix(G).astype(complex))
    if lam <= 0:
        raise AnalysisError("operator numerically singular in the G-metric")
    return 1.0 / math.sqrt(lam)

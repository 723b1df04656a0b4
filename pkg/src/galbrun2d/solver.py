"""Single-solve orchestration: spaces, variants, boundary modes, solve."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp

from . import assembly, linalg
from .coefficients import (DEFAULT_GAMMA, DEFAULT_OMEGA, CoefficientSet,
                           gaussian_profile, gaussian_source, paper_coefficients)
from .fem import SCALAR_CONT, VECTOR_PK, build_space
from .mesh import barycentric_refine, generate_square_mesh

MESH_FAMILIES = ("unstructured", "barycentric")
VARIANTS = ("scott_vogelius", "taylor_hood")
BCS = ("periodic", "nitsche", "strong_normal")
RHS_KINDS = ("gaussian_source", "manufactured", "custom")


class ConfigError(ValueError):
    pass


@dataclass
class ProblemConfig:
    h: float
    k: int
    seed: int = 0
    mesh_family: str = "unstructured"
    variant: str = "scott_vogelius"
    bc: str = "periodic"
    nitsche_lambda: float = float(2 ** 15)
    alpha: float = 0.2
    flow: str = "periodic_flow"
    omega: float = DEFAULT_OMEGA
    gamma: float = DEFAULT_GAMMA
    tol: float = 1e-8

    def validate(self):
        if not (0 < self.h <= 4):
            raise ConfigError(f"h={self.h} outside (0, 4]")
        if not (1 <= self.k <= 5):
            raise ConfigError(f"k={self.k} outside 1..5")
        if self.mesh_family not in MESH_FAMILIES:
            raise ConfigError(f"mesh_family {self.mesh_family!r} not in {MESH_FAMILIES}")
        if self.variant not in VARIANTS:
            raise ConfigError(f"variant {self.variant!r} not in {VARIANTS}")
        if self.bc not in BCS:
            raise ConfigError(f"bc {self.bc!r} not in {BCS}")
        if self.variant == "taylor_hood" and self.k < 2:
            raise ConfigError("taylor_hood needs k >= 2")
        if self.bc == "nitsche" and self.nitsche_lambda <= 0:
            raise ConfigError("nitsche_lambda must be positive")
        if self.omega == 0:
            raise ConfigError("omega must be nonzero")
        if self.alpha < 0:
            raise ConfigError("alpha must be >= 0")
        if self.flow not in ("periodic_flow", "normal_flow"):
            raise ConfigError(f"unknown flow {self.flow!r}")
        if not (0 < self.tol <= 1e-2):
            raise ConfigError("tol must lie in (0, 1e-2]")
        return self

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ProblemConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        missing = {"h", "k"} - set(d)
        if missing:
            raise ConfigError(f"missing config keys: {sorted(missing)}")
        return cls(**d).validate()


@dataclass
class Solution:
    space: object
    velocity: np.ndarray                       # full velocity DOF vector
    pseudo: Optional[tuple] = None             # (q1, q2) for taylor_hood
    config: Optional[ProblemConfig] = None
    report: Optional[linalg.SolveReport] = None
    coefficients: Optional[CoefficientSet] = None


# ---------------------------------------------------------------------------
# strong operator and manufactured solution
# ---------------------------------------------------------------------------

def galbrun_residual_parts(cset: CoefficientSet, x, y, u, Ju, Hu):
    """Pointwise strong-form pieces of the operator applied to a field:

    S1 = -rho (om + i db + i Om x)^2 u - i om gamma rho u
    S2 = grad(rho cs2 div u) - (div u) grad p + grad(grad p . u) - Hess(p) u

    u: (..., 2) complex, Ju[..., i, j] = d_j u_i, Hu[..., i, j, l] = d_j d_l u_i.
    """
    om, Om = cset.omega, cset.Omega
    rho = cset.rho.value(x, y)
    bv = cset.b.value(x, y)
    Jb = cset.b.jacobian(x, y)

    def rot(v):
        return np.stack([-v[..., 1], v[..., 0]], axis=-1)

    def db(v, Jv):
        del v
        return np.einsum("...ij,...j->...i", Jv, bv)

    Du = om * u + 1j * db(u, Ju) + 1j * Om * rot(u)
    # b.grad of Du needs the Jacobian of (Ju b):
    #   d_l (sum_m d_m u_i b_m) = sum_m Hu[i,m,l] b_m + Ju[i,m] Jb[m,l]
    J_Jub = np.einsum("...iml,...m->...il", Hu, bv) + np.einsum(
        "...im,...ml->...il", Ju, Jb)
    J_Du = om * Ju + 1j * J_Jub + 1j * Om * np.stack([-Ju[..., 1, :], Ju[..., 0, :]], axis=-2)
    D2u = om * Du + 1j * np.einsum("...ij,...j->...i", J_Du, bv) + 1j * Om * rot(Du)
    gam = cset.gamma.value(x, y)
    S1 = -rho[..., None] * D2u - 1j * om * (gam * rho)[..., None] * u

    cs2 = cset.cs2.value(x, y)
    gradrc = (cs2[..., None] * cset.rho.grad(x, y)
              + rho[..., None] * cset.cs2.grad(x, y))
    divu = Ju[..., 0, 0] + Ju[..., 1, 1]
    grad_divu = Hu[..., 0, 0, :] + Hu[..., 1, 1, :]
    gp = cset.p.grad(x, y)
    hp = cset.p.hess(x, y)
    # grad(grad p . u)_j = sum_i hp[i,j] u_i + gp[i] Ju[i,j]
    grad_gpu = np.einsum("...ij,...i->...j", hp, u) + np.einsum(
        "...i,...ij->...j", gp, Ju)
    S2 = (divu[..., None] * gradrc + (rho * cs2)[..., None] * grad_divu
          - divu[..., None] * gp + grad_gpu
          - np.einsum("...ij,...j->...i", hp, u))
    return S1, S2


def strong_operator(cset: CoefficientSet, value, jacobian, hessians) -> Callable:
    """Strong Galbrun operator applied to an analytic field; returns a
    vectorized source callable (x, y) -> (..., 2) complex."""
    def apply(x, y):
        u = value(x, y)
        Ju = jacobian(x, y)
        Hu = hessians(x, y)
        S1, S2 = galbrun_residual_parts(cset, x, y, u, Ju, Hu)
        rho = cset.rho.value(x, y)
        hphi = cset.phi.hess(x, y)
        return S1 - S2 - rho[..., None] * np.einsum("...ij,...j->...i", hphi, u)
    return apply


@dataclass
class ManufacturedSolution:
    value: Callable        # (..., 2) complex
    jacobian: Callable     # (..., 2, 2)
    hessians: Callable     # (..., 2, 2, 2)
    source: Callable       # strong operator applied analytically


def manufactured_solution(cset: CoefficientSet) -> ManufacturedSolution:
    """Exact field rho^{-1} ((1+i) g, -(1+i) g) and its analytic source."""
    g = gaussian_profile()
    pol = np.array([1.0, -1.0])

    def f_parts(x, y):
        gv = g.value(x, y)
        gg = g.grad(x, y)
        gh = g.hess(x, y)
        r = cset.rho.value(x, y)
        rg = cset.rho.grad(x, y)
        rh = cset.rho.hess(x, y)
        f = np.asarray((1 + 1j) * gv / r)
        inv = np.asarray(1.0 / r)
        gradf = (1 + 1j) * (gg * inv[..., None] - (gv * inv**2)[..., None] * rg)
        outer_gr = gg[..., :, None] * rg[..., None, :]
        hessf = (1 + 1j) * (
            gh * inv[..., None, None]
            - (outer_gr + np.swapaxes(outer_gr, -1, -2)) * (inv**2)[..., None, None]
            - (gv * inv**2)[..., None, None] * rh
            + 2 * (gv * inv**3)[..., None, None] * (rg[..., :, None] * rg[..., None, :])
        )
        return f, gradf, hessf

    def value(x, y):
        f, _, _ = f_parts(x, y)
        return f[..., None] * pol

    def jacobian(x, y):
        _, gradf, _ = f_parts(x, y)
        return pol[:, None] * gradf[..., None, :]

    def hessians(x, y):
        _, _, hessf = f_parts(x, y)
        return pol[:, None, None] * hessf[..., None, :, :]

    return ManufacturedSolution(
        value=value, jacobian=jacobian, hessians=hessians,
        source=strong_operator(cset, value, jacobian, hessians),
    )


# ---------------------------------------------------------------------------
# the solve pipeline
# ---------------------------------------------------------------------------

def build_mesh(cfg: ProblemConfig):
    m = generate_square_mesh(cfg.h, cfg.seed,
                             periodic_matching=(cfg.bc == "periodic"))
    if cfg.mesh_family == "barycentric":
        m = barycentric_refine(m)
    return m


def build_coefficients(cfg: ProblemConfig) -> CoefficientSet:
    return paper_coefficients(cfg.alpha, cfg.flow, omega=cfg.omega,
                              gamma=cfg.gamma)


def _bordered(K, border_cols):
    """Append zero-mean constraint columns/rows to a square system."""
    if not border_cols:
        return K
    B = sp.hstack([sp.csc_matrix(c.reshape(-1, 1)) for c in border_cols])
    nb = B.shape[1]
    return sp.bmat([[K, B], [B.T, sp.csr_matrix((nb, nb))]], format="csc")


def solve_galbrun(cfg: ProblemConfig, rhs: str = "gaussian_source",
                  custom_source=None, mesh=None, cset=None) -> Solution:
    """Assemble and solve one Galbrun problem.

    rhs: "gaussian_source" (moving Gaussian forcing), "manufactured"
    (analytic source whose exact solution is the Gaussian bump field), or
    "custom" (callable (x, y) -> (..., 2) complex, or None for zero).
    """
    cfg.validate()
    if rhs not in RHS_KINDS:
        raise ConfigError(f"rhs {rhs!r} not in {RHS_KINDS}")
    if mesh is None:
        mesh = build_mesh(cfg)
    if cset is None:
        cset = build_coefficients(cfg)
    X = build_space(mesh, VECTOR_PK, cfg.k, bc_mode=cfg.bc)

    if rhs == "gaussian_source":
        source = gaussian_source(cset).value
    elif rhs == "manufactured":
        source = manufactured_solution(cset).source
    else:
        source = custom_source
    b_u = (assembly.assemble_rhs(X, source) if source is not None
           else np.zeros(X.ndof, dtype=complex))

    if cfg.variant == "scott_vogelius":
        A = assembly.assemble_galbrun(X, cset)
        if cfg.bc == "nitsche":
            A = A + assembly.assemble_nitsche(X, cset, cfg.nitsche_lambda)
        free = X.free_dofs
        A_red = A[free][:, free].tocsc()
        coords = np.repeat(X.node_coords, 2, axis=0)[free]
        order = (linalg.nested_dissection_order(A_red, coords)
                 if A_red.shape[0] > 5000 else None)
        x_red, report = linalg.sparse_solve(A_red, b_u[free], cfg.tol, order=order)
        velocity = np.zeros(X.ndof, dtype=complex)
        velocity[free] = x_red
        return Solution(space=X, velocity=velocity, config=cfg, report=report,
                        coefficients=cset)

    Q = build_space(mesh, SCALAR_CONT, cfg.k - 1,
                    bc_mode="periodic" if cfg.bc == "periodic" else "none")
    lam = cfg.nitsche_lambda if cfg.bc == "nitsche" else None
    K, (nu, nq) = assembly.assemble_taylor_hood(X, Q, cset, nitsche_lambda=lam)
    mean = assembly.assemble_mean_vector(Q)
    c1 = np.zeros(nu + 2 * nq)
    c1[nu:nu + nq] = mean
    c2 = np.zeros(nu + 2 * nq)
    c2[nu + nq:] = mean
    free_u = X.free_dofs
    keep = np.concatenate([free_u, np.arange(nu, nu + 2 * nq)])
    K_core = K[keep][:, keep]
    K_ext = _bordered(K_core, [c1[keep], c2[keep]])
    rhs_vec = np.zeros(K_ext.shape[0], dtype=complex)
    rhs_vec[:len(free_u)] = b_u[free_u]
    order = None
    if K_core.shape[0] > 5000:
        coords = np.vstack([np.repeat(X.node_coords, 2, axis=0)[free_u],
                            Q.node_coords, Q.node_coords])
        core_order = linalg.nested_dissection_order(K_core, coords)
        # the two dense zero-mean border rows go last
        order = np.concatenate([core_order,
                                [K_core.shape[0], K_core.shape[0] + 1]])
    x_ext, report = linalg.sparse_solve(K_ext, rhs_vec, cfg.tol, order=order)
    velocity = np.zeros(X.ndof, dtype=complex)
    velocity[free_u] = x_ext[:len(free_u)]
    q1 = x_ext[len(free_u):len(free_u) + nq]
    q2 = x_ext[len(free_u) + nq:len(free_u) + 2 * nq]
    return Solution(space=X, velocity=velocity, pseudo=(q1, q2), config=cfg,
                    report=report, coefficients=cset)

"""Analytic coefficient fields with exact derivatives.

All field callables are vectorized: they accept broadcasting arrays x, y and
return arrays of shape x.shape (+ trailing component axes for gradients,
Hessians and vector fields).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

GAUSS_DECAY = math.log(1e6)          # Gaussian reaches 1e-6 on the unit circle
DEFAULT_OMEGA = 0.78 * 2 * math.pi
DEFAULT_GAMMA = 0.1

FLOWS = ("periodic_flow", "normal_flow")


class CoefficientError(ValueError):
    pass


@dataclass
class ScalarCoefficient:
    value: Callable
    grad: Callable       # (..., 2)
    hess: Callable       # (..., 2, 2)


@dataclass
class VectorCoefficient:
    value: Callable      # (..., 2)
    jacobian: Callable   # (..., 2, 2), J[i, j] = d b_i / d x_j


@dataclass
class CoefficientSet:
    rho: ScalarCoefficient
    cs2: ScalarCoefficient
    p: ScalarCoefficient
    phi: ScalarCoefficient
    gamma: ScalarCoefficient
    b: VectorCoefficient
    omega: float
    Omega: float = 0.0   # 2D rotation rate; Omega x u := Omega * (-u2, u1)
    label: str = "custom"

    def __post_init__(self):
        if self.omega == 0:
            raise CoefficientError("omega must be nonzero")


@dataclass
class SourceField:
    value: Callable      # (..., 2) complex


def _stack2(a, b):
    return np.stack(np.broadcast_arrays(a, b), axis=-1)


def _stack22(a11, a12, a21, a22):
    r = np.stack(np.broadcast_arrays(a11, a12, a21, a22), axis=-1)
    return r.reshape(r.shape[:-1] + (2, 2))


def constant_scalar(c):
    c = float(c)
    return ScalarCoefficient(
        value=lambda x, y: np.broadcast_arrays(np.full_like(np.asarray(x, dtype=float), c), y)[0],
        grad=lambda x, y: _stack2(np.zeros_like(np.asarray(x, dtype=float)), np.zeros_like(np.asarray(y, dtype=float))),
        hess=lambda x, y: _stack22(*(np.zeros_like(np.asarray(x, dtype=float)),) * 4),
    )


def constant_vector(b1, b2):
    b1, b2 = float(b1), float(b2)
    return VectorCoefficient(
        value=lambda x, y: _stack2(np.full_like(np.asarray(x, dtype=float), b1),
                                   np.full_like(np.asarray(x, dtype=float), b2)),
        jacobian=lambda x, y: _stack22(*(np.zeros_like(np.asarray(x, dtype=float)),) * 4),
    )


# ---------------------------------------------------------------------------
# the experiment coefficient set
# ---------------------------------------------------------------------------

def _rho_value(x, y):
    return 1.5 + 0.2 * np.cos(np.pi * np.asarray(x) / 4) * np.sin(np.pi * np.asarray(y) / 2)


def _rho_grad(x, y):
    X, Y = np.pi * np.asarray(x) / 4, np.pi * np.asarray(y) / 2
    return _stack2(-0.05 * np.pi * np.sin(X) * np.sin(Y),
                   0.1 * np.pi * np.cos(X) * np.cos(Y))


def _rho_hess(x, y):
    X, Y = np.pi * np.asarray(x) / 4, np.pi * np.asarray(y) / 2
    hxx = -0.0125 * np.pi**2 * np.cos(X) * np.sin(Y)
    hxy = -0.025 * np.pi**2 * np.sin(X) * np.cos(Y)
    hyy = -0.05 * np.pi**2 * np.cos(X) * np.sin(Y)
    return _stack22(hxx, hxy, hxy, hyy)


def _outer2(g):
    return g[..., :, None] * g[..., None, :]


def paper_coefficients(alpha: float, flow: str = "periodic_flow",
                       omega: float = DEFAULT_OMEGA, gamma: float = DEFAULT_GAMMA,
                       Omega: float = 0.0) -> CoefficientSet:
    """Heterogeneous coefficient set of the square-domain experiments.

    rho = 1.5 + 0.2 cos(pi x/4) sin(pi y/2), cs2 = 1.44 + 0.16 rho,
    p = 1.44 rho + 0.08 rho^2 (so grad p = cs2 grad rho), phi = 0.
    `flow` selects the background velocity: "periodic_flow" is divergence-free
    in rho*b but has nonzero normal trace; "normal_flow" additionally
    satisfies b.nu = 0 on the boundary.  Both are scaled by alpha / rho.
    """
    if alpha < 0:
        raise CoefficientError("alpha must be >= 0")
    if flow not in FLOWS:
        raise CoefficientError(f"unknown flow {flow!r}")

    rho = ScalarCoefficient(_rho_value, _rho_grad, _rho_hess)
    cs2 = ScalarCoefficient(
        value=lambda x, y: 1.44 + 0.16 * _rho_value(x, y),
        grad=lambda x, y: 0.16 * _rho_grad(x, y),
        hess=lambda x, y: 0.16 * _rho_hess(x, y),
    )

    def p_value(x, y):
        r = _rho_value(x, y)
        return 1.44 * r + 0.08 * r * r

    def p_grad(x, y):
        return (1.44 + 0.16 * _rho_value(x, y))[..., None] * _rho_grad(x, y)

    def p_hess(x, y):
        c = 1.44 + 0.16 * _rho_value(x, y)
        return c[..., None, None] * _rho_hess(x, y) + 0.16 * _outer2(_rho_grad(x, y))

    p = ScalarCoefficient(p_value, p_grad, p_hess)

    if flow == "periodic_flow":
        def w_value(x, y):
            return (0.3 + 0.1 * np.cos(np.pi * np.asarray(y) / 4),
                    0.2 + 0.08 * np.sin(np.pi * np.asarray(x) / 4))

        def w_jac(x, y):
            z = np.zeros_like(np.asarray(x, dtype=float))
            return (z, -0.025 * np.pi * np.sin(np.pi * np.asarray(y) / 4),
                    0.02 * np.pi * np.cos(np.pi * np.asarray(x) / 4), z)
    else:
        def w_value(x, y):
            X, Y = np.pi * np.asarray(x), np.pi * np.asarray(y)
            return (np.sin(X) * np.cos(Y), -np.cos(X) * np.sin(Y))

        def w_jac(x, y):
            X, Y = np.pi * np.asarray(x), np.pi * np.asarray(y)
            return (np.pi * np.cos(X) * np.cos(Y), -np.pi * np.sin(X) * np.sin(Y),
                    np.pi * np.sin(X) * np.sin(Y), -np.pi * np.cos(X) * np.cos(Y))

    def b_value(x, y):
        w1, w2 = w_value(x, y)
        r = _rho_value(x, y)
        return _stack2(alpha * w1 / r, alpha * w2 / r)

    def b_jacobian(x, y):
        w1, w2 = w_value(x, y)
        j11, j12, j21, j22 = w_jac(x, y)
        r = _rho_value(x, y)
        gr = _rho_grad(x, y)
        gx, gy = gr[..., 0], gr[..., 1]
        r2 = r * r
        return _stack22(alpha * (j11 * r - w1 * gx) / r2,
                        alpha * (j12 * r - w1 * gy) / r2,
                        alpha * (j21 * r - w2 * gx) / r2,
                        alpha * (j22 * r - w2 * gy) / r2)

    return CoefficientSet(
        rho=rho, cs2=cs2, p=p, phi=constant_scalar(0.0),
        gamma=constant_scalar(gamma),
        b=VectorCoefficient(b_value, b_jacobian),
        omega=float(omega), Omega=float(Omega),
        label=f"paper[{flow},alpha={alpha}]",
    )


def constant_coefficients(rho=1.0, cs2=1.0, gamma=0.0, omega=1.0, Omega=0.0,
                          b=(0.0, 0.0), p=0.0, phi=0.0) -> CoefficientSet:
    """Spatially constant coefficient set (tests and sanity checks)."""
    return CoefficientSet(
        rho=constant_scalar(rho), cs2=constant_scalar(cs2),
        p=constant_scalar(p), phi=constant_scalar(phi),
        gamma=constant_scalar(gamma), b=constant_vector(*b),
        omega=float(omega), Omega=float(Omega), label="constant",
    )


_PRESETS = {
    "paper_periodic": lambda kw: paper_coefficients(flow="periodic_flow", **kw),
    "paper_normal": lambda kw: paper_coefficients(flow="normal_flow", **kw),
    "constant": lambda kw: constant_coefficients(**kw),
}


def coefficients_from_config(cfg: dict) -> CoefficientSet:
    """Named-preset loader for config files; no expression parsing."""
    cfg = dict(cfg)
    name = cfg.pop("preset", None)
    if name not in _PRESETS:
        raise CoefficientError(f"unknown coefficient preset {name!r}; "
                               f"choose from {sorted(_PRESETS)}")
    return _PRESETS[name](cfg)


# ---------------------------------------------------------------------------
# Gaussian source
# ---------------------------------------------------------------------------

def gaussian_profile() -> ScalarCoefficient:
    """g = sqrt(a/pi) exp(-a (x^2+y^2)) with a = ln 1e6."""
    a = GAUSS_DECAY
    amp = math.sqrt(a / math.pi)

    def value(x, y):
        x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
        return amp * np.exp(-a * (x * x + y * y))

    def grad(x, y):
        g = value(x, y)
        return _stack2(-2 * a * np.asarray(x) * g, -2 * a * np.asarray(y) * g)

    def hess(x, y):
        x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
        g = value(x, y)
        return _stack22((4 * a * a * x * x - 2 * a) * g,
                        4 * a * a * x * y * g,
                        4 * a * a * x * y * g,
                        (4 * a * a * y * y - 2 * a) * g)

    return ScalarCoefficient(value, grad, hess)


def gaussian_source(cset: CoefficientSet) -> SourceField:
    """s = (-i omega + b.grad)(g, 0): first component -i*omega*g + b.grad g."""
    g = gaussian_profile()
    om = cset.omega

    def value(x, y):
        gv = g.value(x, y)
        gg = g.grad(x, y)
        bv = cset.b.value(x, y)
        s1 = -1j * om * gv + bv[..., 0] * gg[..., 0] + bv[..., 1] * gg[..., 1]
        return _stack2(s1, np.zeros_like(gv) * 1j)

    return SourceField(value)


# ---------------------------------------------------------------------------
# diagnostics
# ---------------------------------------------------------------------------

def _sample_grid(resolution):
    xs = np.linspace(-4.0, 4.0, resolution + 1)
    return np.meshgrid(xs, xs, indexing="ij")


def mach_number_sq(cset: CoefficientSet, resolution: int = 512) -> float:
    """||c_s^{-1} b||_{Linf}^2 realized as the componentwise sup on a uniform
    sample grid (this componentwise reading reproduces the reported flow
    Mach values; the Euclidean sup runs ~30% hot)."""
    if resolution < 64:
        raise CoefficientError("resolution must be >= 64 per axis")
    X, Y = _sample_grid(resolution)
    b = cset.b.value(X, Y)
    c = cset.cs2.value(X, Y)
    return float((np.max(b * b, axis=-1) / c).max())


def check_derivatives(cset: CoefficientSet, samples: int = 100, seed: int = 0,
                      step: float = 1e-5) -> float:
    """Max relative mismatch of analytic derivatives against central finite
    differences (gradients from values, Hessians from gradients)."""
    if samples < 1:
        raise CoefficientError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    x = rng.uniform(-4 + 2 * step, 4 - 2 * step, samples)
    y = rng.uniform(-4 + 2 * step, 4 - 2 * step, samples)
    h = step
    worst = 0.0

    def rel(err, scale):
        return err / max(1.0, scale)

    for sc in (cset.rho, cset.cs2, cset.p, cset.phi, cset.gamma):
        g = sc.grad(x, y)
        fd = np.stack([(sc.value(x + h, y) - sc.value(x - h, y)) / (2 * h),
                       (sc.value(x, y + h) - sc.value(x, y - h)) / (2 * h)], axis=-1)
        worst = max(worst, rel(np.abs(g - fd).max(), np.abs(g).max()))
        hs = sc.hess(x, y)
        fdh = np.stack([(sc.grad(x + h, y) - sc.grad(x - h, y)) / (2 * h),
                        (sc.grad(x, y + h) - sc.grad(x, y - h)) / (2 * h)], axis=-2)
        # fdh[..., j, i] = d/dx_j grad_i; hess[..., i, j] symmetric
        fdh = 0.5 * (fdh + np.swapaxes(fdh, -1, -2))
        worst = max(worst, rel(np.abs(hs - fdh).max(), np.abs(hs).max()))

    jb = cset.b.jacobian(x, y)
    fdj = np.stack([(cset.b.value(x + h, y) - cset.b.value(x - h, y)) / (2 * h),
                    (cset.b.value(x, y + h) - cset.b.value(x, y - h)) / (2 * h)], axis=-1)
    worst = max(worst, rel(np.abs(jb - fdj).max(), np.abs(jb).max()))
    return float(worst)

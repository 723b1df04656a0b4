import math

import numpy as np
import pytest

from galbrun2d.coefficients import (CoefficientError, GAUSS_DECAY,
                                    check_derivatives, coefficients_from_config,
                                    constant_coefficients, gaussian_profile,
                                    gaussian_source, mach_number_sq,
                                    paper_coefficients)


@pytest.fixture(scope="module")
def cset():
    return paper_coefficients(0.2, "periodic_flow")


def test_point_values(cset):
    assert cset.rho.value(0.0, 0.0) == pytest.approx(1.5, abs=1e-15)
    assert cset.cs2.value(0.0, 0.0) == pytest.approx(1.68, abs=1e-15)
    b = cset.b.value(0.0, 0.0)
    assert b[0] == pytest.approx(0.2 / 1.5 * 0.4, abs=1e-15)
    assert b[1] == pytest.approx(0.2 / 1.5 * 0.2, abs=1e-15)


def test_rho_bounds_on_grid(cset):
    xs = np.linspace(-4, 4, 257)
    X, Y = np.meshgrid(xs, xs)
    r = cset.rho.value(X, Y)
    assert r.min() >= 1.3 - 1e-12 and r.max() <= 1.7 + 1e-12
    assert cset.cs2.value(X, Y).min() >= 1.44


def test_normal_flow_zero_normal_trace():
    cn = paper_coefficients(0.7, "normal_flow")
    t = np.linspace(-4, 4, 200)
    for x, y, comp in [(4.0, t, 0), (-4.0, t, 0), (t, 4.0, 1), (t, -4.0, 1)]:
        b = cn.b.value(np.broadcast_to(x, np.shape(t)) if np.isscalar(x) else x,
                       np.broadcast_to(y, np.shape(t)) if np.isscalar(y) else y)
        assert np.abs(b[..., comp]).max() < 1e-12


@pytest.mark.parametrize("flow", ["periodic_flow", "normal_flow"])
def test_div_rho_b_vanishes(flow):
    # div(rho b) = alpha div(w) = 0 analytically; check via div(rho b) =
    # grad(rho).b + rho div(b) at 1e4 samples
    cs = paper_coefficients(1.3, flow)
    rng = np.random.default_rng(5)
    x = rng.uniform(-4, 4, 10000)
    y = rng.uniform(-4, 4, 10000)
    gr = cs.rho.grad(x, y)
    bv = cs.b.value(x, y)
    jb = cs.b.jacobian(x, y)
    div_rho_b = (gr[..., 0] * bv[..., 0] + gr[..., 1] * bv[..., 1]
                 + cs.rho.value(x, y) * (jb[..., 0, 0] + jb[..., 1, 1]))
    assert np.abs(div_rho_b).max() < 1e-10


def test_hessians_symmetric(cset):
    rng = np.random.default_rng(2)
    x = rng.uniform(-4, 4, 500)
    y = rng.uniform(-4, 4, 500)
    hp = cset.p.hess(x, y)
    assert np.abs(hp - np.swapaxes(hp, -1, -2)).max() == 0.0
    m = -hp / cset.rho.value(x, y)[..., None, None] + cset.phi.hess(x, y)
    assert np.abs(m - np.swapaxes(m, -1, -2)).max() == 0.0


# ---------------------------------------------------------------------------
# Gaussian source
# ---------------------------------------------------------------------------

def test_gaussian_center_value():
    g = gaussian_profile()
    assert g.value(0.0, 0.0) == pytest.approx(math.sqrt(GAUSS_DECAY / math.pi),
                                              rel=1e-14)


def test_gaussian_unit_circle_decay():
    g = gaussian_profile()
    center = g.value(0.0, 0.0)
    assert g.value(1.0, 0.0) == pytest.approx(1e-6 * center, rel=1e-12)
    assert g.value(0.6, 0.8) == pytest.approx(1e-6 * center, rel=1e-12)


def test_source_center_symmetry(cset):
    s = gaussian_source(cset)
    v = s.value(0.0, 0.0)
    g0 = math.sqrt(GAUSS_DECAY / math.pi)
    # grad g vanishes at the origin, so only the -i omega g term survives
    assert v[0] == pytest.approx(-1j * cset.omega * g0, rel=1e-13)
    assert v[1] == 0


# ---------------------------------------------------------------------------
# Mach number
# ---------------------------------------------------------------------------

def test_mach_table_periodic_flow():
    # reported flow-strength table for the periodic flow
    expected = {0.2: 0.002, 0.5: 0.012, 1.5: 0.115, 3.0: 0.463}
    for alpha, target in expected.items():
        got = mach_number_sq(paper_coefficients(alpha, "periodic_flow"))
        assert abs(got - target) <= 0.10 * target


def test_mach_zero_flow():
    assert mach_number_sq(paper_coefficients(0.0, "periodic_flow")) == 0.0


def test_mach_alpha_scaling():
    m1 = mach_number_sq(paper_coefficients(1.0, "normal_flow"), resolution=128)
    m2 = mach_number_sq(paper_coefficients(2.0, "normal_flow"), resolution=128)
    assert m2 == pytest.approx(4 * m1, rel=1e-12)


def test_mach_rejects_low_resolution(cset):
    with pytest.raises(CoefficientError):
        mach_number_sq(cset, resolution=32)


# ---------------------------------------------------------------------------
# derivative self-check
# ---------------------------------------------------------------------------

def test_check_derivatives_paper_set(cset):
    assert check_derivatives(cset, samples=100, seed=0) <= 1e-6


def test_check_derivatives_constant_set():
    cs = constant_coefficients(rho=2.0, cs2=3.0, gamma=0.5, omega=2.0, b=(0.1, 0.2))
    assert check_derivatives(cs, samples=50, seed=1) <= 1e-10


def test_check_derivatives_flags_corruption():
    cs = paper_coefficients(0.2, "periodic_flow")
    good_grad = cs.p.grad
    cs.p.grad = lambda x, y: 1.05 * good_grad(x, y)
    assert check_derivatives(cs, samples=50, seed=2) >= 1e-2


# ---------------------------------------------------------------------------
# presets
# ---------------------------------------------------------------------------

def test_preset_loading():
    cs = coefficients_from_config({"preset": "paper_normal", "alpha": 0.1})
    assert "normal_flow" in cs.label
    with pytest.raises(CoefficientError):
        coefficients_from_config({"preset": "nope"})


def test_omega_must_be_nonzero():
    with pytest.raises(CoefficientError):
        constant_coefficients(omega=0.0)

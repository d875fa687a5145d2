import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import special

from todasov import quadrature as quad
from todasov.errors import BudgetExceeded, NonConvergence, PreconditionViolated
from todasov.gammaplex import loggamma
from todasov.kernels import log_lambda
from todasov.quadrature import ContourPlan, Layer, integrate_de, integrate_iterated, integrate_line
from todasov.whittaker import Positions, Rapidities, phi_gg, phi_mb


def gaussian(w):
    return np.exp(-w * w)


def test_gaussian_line():
    r = integrate_line(gaussian, 0.0, ContourPlan(tol=1e-13), decay=1.0)
    assert abs(r.value - math.sqrt(math.pi)) < 1e-12
    assert r.abs_err_est >= 0


def test_gaussian_shifted_contour():
    # e^{-w^2} is entire: any horizontal line gives the same value
    r = integrate_line(gaussian, 0.7, ContourPlan(tol=1e-12), decay=1.0, extent=1.0)
    assert abs(r.value - math.sqrt(math.pi)) < 1e-10


def test_gamma_line_gives_inverse_e():
    y = 0.3 + 0.5j

    def f(w):
        return np.exp(loggamma((y - w) / 1j)) / (2 * math.pi)

    r = integrate_line(f, 0.0, ContourPlan(tol=1e-12), center=0.3, decay=math.pi / 2, extent=4)
    assert abs(r.value - math.exp(-1)) < 1e-10


def bump(w):
    w = np.asarray(w)
    inside = np.abs(w.real) < 3
    u = np.where(inside, w.real / 3, 0.0)
    return np.where(inside, np.exp(-1 / np.where(inside, 1 - u * u, 1.0)), 0.0)


def test_gamma_pair_against_dense_reference():
    def f(w):
        return np.exp(loggamma(1j * (w - 0.4)) + loggamma(-1j * (w - 0.4))) * bump(w)

    # |Gamma(it)|^2 has a 1/t^2 singularity at t = 0, shifted below the axis
    g = lambda w: f(w - 0.3j)
    plan = ContourPlan(tol=1e-11, window_halfwidth=3.0)
    r = integrate_line(g, 0.0, plan)
    ref = integrate_line(g, 0.0, plan.replace(nodes_per_unit=40, tol=1e-13))
    assert abs(r.value - ref.value) < 1e-9


def test_iterated_two_gaussians():
    inner = lambda outer: (lambda pts: np.exp(-(pts[:, 0] ** 2))[None, :] * np.ones((outer.shape[0], 1)))
    layers = [Layer(1, inner, decay=1.0), Layer(1, inner, decay=1.0)]
    r = integrate_iterated(layers, ContourPlan(tol=1e-12))
    assert abs(r.value - math.pi) < 1e-10


def test_iterated_tuple_layers():
    inner = lambda outer: (lambda pts: np.exp(-(pts[:, 0] ** 2))[None, :] * np.ones((outer.shape[0], 1)))
    r = integrate_iterated([(1, inner, 0.0, {"decay": 1.0}), (1, inner, 0.0, {"decay": 1.0})],
                           ContourPlan(tol=1e-12))
    assert abs(r.value - math.pi) < 1e-10


def test_iterated_explicit_window():
    inner = lambda outer: (lambda pts: np.exp(-(pts[:, 0] ** 2))[None, :] * np.ones((outer.shape[0], 1)))
    layers = [Layer(1, inner, opts={"window": (-7.0, 7.0)}), Layer(1, inner, decay=1.0)]
    r = integrate_iterated(layers, ContourPlan(tol=1e-12))
    assert abs(r.value - math.pi) < 1e-10


def test_iterated_budget_cap():
    inner = lambda outer: (lambda pts: np.ones((outer.shape[0], pts.shape[0])))
    with pytest.raises(BudgetExceeded):
        integrate_iterated([Layer(2, inner, decay=1e-3), Layer(2, inner, decay=1e-3)],
                           ContourPlan(tol=1e-8, max_evals=10_000))


def test_mb_layers_match_gg():
    y, x = Rapidities((0.5, -0.5)), Positions((0.0, 0.0))
    a = phi_mb(y, x, ContourPlan(tol=1e-12)).value
    b = phi_gg(y, x, ContourPlan(tol=1e-12)).value
    assert abs(a - b) < 1e-8


def _gg2(plan):
    # GG for N=2 as one nested layer through integrate_iterated
    y, x = (0.5, -0.5), np.array([0.3, -0.2])

    def fac(outer):
        return lambda pts: np.exp(log_lambda(y[0], x[None, :], pts, 1.0)
                                  + 1j * y[1] * pts[:, 0] / 1.0)[None, :]

    return integrate_iterated([Layer(1, fac, rule="trapezoid", center=0.05, extent=0.25)], plan).value


def test_gg_window_robust():
    a = _gg2(ContourPlan(tol=1e-12))
    b = _gg2(ContourPlan(tol=1e-12, window_halfwidth=12.0))
    assert abs(a - b) < 1e-10


def test_de_bessel():
    f = lambda t: np.exp(-np.exp(-t) - np.exp(t))
    r = integrate_de(f, 0.0, ContourPlan(tol=1e-13))
    assert abs(r.value - 2 * special.k0(2.0)) < 1e-13
    assert abs(r.value - 0.2277877) < 1e-7


@given(st.floats(-5, 5))
def test_de_translation(c):
    f = lambda t: np.exp(-np.exp(-t) - np.exp(t) + 0.3j * t)
    g = lambda t: f(t - c)
    a = integrate_de(f, 0.0, ContourPlan(tol=1e-13)).value
    b = integrate_de(g, c, ContourPlan(tol=1e-13)).value
    assert abs(a - b) < 1e-12


@given(st.floats(0.05, 0.95))
def test_mb_contour_deformation(shift):
    y, x = Rapidities((0.4, -0.3)), Positions((0.2, -0.1))
    tol = 1e-10
    a = phi_mb(y, x, ContourPlan(tol=tol)).value
    b = phi_mb(y, x, ContourPlan(offsets=(shift,), tol=tol)).value
    assert abs(a - b) < 5 * tol * max(1.0, abs(a))


def test_mb_contour_deformation_two_layers():
    y, x = Rapidities((0.4, -0.3, 0.1)), Positions((0.2, -0.1, 0.3))
    a = phi_mb(y, x, ContourPlan(tol=1e-7)).value
    b = phi_mb(y, x, ContourPlan(offsets=(0.6, 1.2), tol=1e-7)).value
    assert abs(a - b) < 5e-7


def test_refinement_shrinks_differences():
    f = lambda w: np.exp(-w * w) * np.cos(3 * w)
    vals = []
    for npu in (1, 2, 4):
        g, w = quad.line_rule(0.0, 8.0, npu)
        vals.append((w * f(g)).sum())
    exact = math.sqrt(math.pi) * math.exp(-9 / 4)
    errs = [abs(v - exact) for v in vals]
    assert errs[1] < errs[0] / 10 or errs[1] < 1e-14


def test_deterministic():
    f = lambda t: np.exp(-np.exp(-t) - np.exp(t) + 0.7j * t)
    a = integrate_de(f, 0.1, ContourPlan(tol=1e-12))
    b = integrate_de(f, 0.1, ContourPlan(tol=1e-12))
    assert a == b


def test_nonconvergence_reported():
    # a discontinuous integrand never settles to 1e-15 within six doublings
    f = lambda w: np.where(np.abs(w) < 1.0, 1.0, 0.0) * np.exp(-w * w)
    with pytest.raises(NonConvergence):
        integrate_line(f, 0.0, ContourPlan(tol=1e-15), decay=1.0)


def test_self_refinement_error_estimate_is_honest():
    rng = np.random.default_rng(5)
    ok = 0
    for _ in range(20):
        a, b = rng.uniform(0.5, 2.0), rng.uniform(-3, 3)
        f = lambda w: np.exp(-a * w * w + 1j * b * w)
        exact = math.sqrt(math.pi / a) * math.exp(-b * b / (4 * a))
        r = integrate_line(f, 0.0, ContourPlan(tol=1e-9), decay=a)
        ok += abs(r.value - exact) <= 4 * max(r.abs_err_est, 1e-15) + 1e-13
    assert ok >= 19


@pytest.mark.parametrize("kw", [{"offsets": (0.5, 0.3)}, {"offsets": (-0.1,)}, {"tol": 0},
                                {"nodes_per_unit": 0}, {"window_halfwidth": -1.0}])
def test_plan_validation(kw):
    with pytest.raises(PreconditionViolated):
        ContourPlan(**kw)


def test_budget_from_environment(monkeypatch):
    monkeypatch.setenv("TODA_SOV_BUDGET", "1e5")
    assert ContourPlan().budget == 100_000
    assert ContourPlan(max_evals=7).budget == 7


def test_default_depths():
    assert ContourPlan().depths(1, 1.0) == (0.25,)
    assert ContourPlan().depths(2, 2.0) == (1.0, 2.0)
    assert ContourPlan(offsets=(0.3, 0.9)).depths(2, 2.0) == (0.6, 1.8)
    with pytest.raises(PreconditionViolated):
        ContourPlan(offsets=(0.3,)).depths(2, 1.0)

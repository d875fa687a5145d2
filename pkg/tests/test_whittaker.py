import cmath
import itertools
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from todasov import quadrature as quad
from todasov.errors import DegenerateInput, DimensionMismatch, PreconditionViolated
from todasov.kernels import ChainParams, mb_weight
from todasov.quadrature import ContourPlan
from todasov.whittaker import (Positions, Rapidities, brute_force_r_sequences, decay_envelope,
                               enumerate_r_sequences, phi_base, phi_gg, phi_gg_batch,
                               phi_gg_recursive, phi_mb)
from todasov.rsequences import check_invariants

P1 = ChainParams(1.0)


def bessel_phi2(y, x, hbar):
    """Two-particle phi through the Macdonald function, via mpmath."""
    nu = 1j * (y[0] - y[1]) / hbar
    k = complex(mpmath.besselk(nu, 2 * mpmath.exp((x[1] - x[0]) / 2) / hbar))
    return 2 * cmath.exp(1j * (y[0] + y[1]) * (x[0] + x[1]) / (2 * hbar)) * k


def mb_phi2_generic(y, x, hbar, alpha=0.3):
    """Same Mellin-Barnes integral, written from the weight and the generic line rule."""
    p = ChainParams(hbar)
    ya = np.array(y)

    def f(w):
        w = np.atleast_1d(w)
        out = np.empty(w.shape, dtype=complex)
        for i, wi in enumerate(w):
            out[i] = mb_weight([wi], ya, p).to_complex() * cmath.exp(
                1j * (wi * (x[0] - x[1]) + sum(y) * x[1]) / hbar)
        return out

    plan = ContourPlan(tol=1e-11, nodes_per_unit=8)
    r = quad.integrate_line(f, -alpha * hbar, plan, center=0.5 * sum(y), decay=math.pi / hbar,
                            extent=0.5 * abs(y[0] - y[1]))
    return r.value / (2 * math.pi * hbar)


def point(y, x, hbar=1.0):
    return Rapidities(tuple(y), ChainParams(hbar)), Positions(tuple(x))


def test_phi_base():
    assert phi_base(0.0, 3.3, P1) == 1
    assert phi_base(0.7, 1.3, P1) == pytest.approx(cmath.exp(0.91j), rel=1e-15)
    assert np.conj(phi_base(0.4, -2.0, P1)) == pytest.approx(phi_base(-0.4, -2.0, P1))


def test_n1_is_exact():
    y, x = point([0.7], [1.3])
    for fn in (phi_mb, phi_gg, phi_gg_recursive):
        r = fn(y, x)
        assert r.value == pytest.approx(cmath.exp(0.91j), rel=1e-15)


CASES2 = [((0.5, -0.5), (0.0, 0.0), 1.0), ((0.3, 0.9), (0.2, -0.4), 0.7),
          ((0.1, -0.2), (1.0, 0.5), 1.3), ((-1.1, 0.6), (-0.5, 0.8), 1.0)]


@pytest.mark.parametrize("y,x,h", CASES2)
def test_n2_three_routes(y, x, h):
    ref = bessel_phi2(y, x, h)
    gg = phi_gg(*point(y, x, h)).value
    mb = phi_mb(*point(y, x, h)).value
    generic = mb_phi2_generic(y, x, h)
    for v in (gg, mb, generic):
        assert abs(v - ref) <= 1e-8 * abs(ref)


def test_n2_example_point_mb_equals_gg():
    y, x = point([0.5, -0.5], [0.0, 0.0])
    a, b = phi_mb(y, x).value, phi_gg(y, x).value
    assert abs(a - b) < 1e-8


def test_mb_offsets_do_not_matter():
    y, x = point([0.4, -0.3], [0.1, 0.6])
    a = phi_mb(y, x, ContourPlan(offsets=(0.25,), tol=1e-10))
    b = phi_mb(y, x, ContourPlan(offsets=(0.4,), tol=1e-10))
    assert abs(a.value - b.value) <= 5e-10


def test_mb_equals_gg_n2_random():
    rng = np.random.default_rng(7)
    for _ in range(20):
        y, x = point(rng.uniform(-1, 1, 2), rng.uniform(-1, 1, 2))
        a, b = phi_mb(y, x).value, phi_gg(y, x).value
        assert abs(a - b) / abs(b) < 1e-6


def test_mb_equals_gg_n3():
    rng = np.random.default_rng(11)
    for _ in range(3):
        y, x = point(rng.uniform(-1, 1, 3), rng.uniform(-1, 1, 3))
        a, b = phi_mb(y, x).value, phi_gg(y, x).value
        assert abs(a - b) / abs(b) < 1e-4


def test_recursive_matches_pyramid():
    y, x = point([0.3, -0.2], [0.4, -0.1])
    assert abs(phi_gg_recursive(y, x).value - phi_gg(y, x).value) < 1e-10
    y, x = point([0.3, -0.2, 0.5], [0.4, -0.1, 0.2])
    ref = phi_gg(y, x).value
    assert abs(phi_gg_recursive(y, x).value - ref) < 1e-6


def test_recursive_outer_first_vs_last():
    y, x = point([0.6, -0.1, -0.4], [0.2, 0.0, -0.3])
    a = phi_gg_recursive(y, x, outer="first").value
    b = phi_gg_recursive(y, x, outer="last").value
    assert abs(a - b) < 1e-8
    with pytest.raises(ValueError):
        phi_gg_recursive(y, x, outer="middle")


def test_symmetry_in_y():
    ys = (0.5, -0.2, 0.1)
    x = (0.3, -0.4, 0.2)
    vals = [phi_gg(*point(p, x)).value for p in itertools.permutations(ys)]
    assert max(abs(v - vals[0]) for v in vals) < 1e-7


def test_n4_permutation():
    ys = (0.3, -0.2, 0.5, -0.4)
    x = (0.1, -0.2, 0.0, 0.3)
    plan = ContourPlan(tol=1e-5)
    a = phi_gg(*point(ys, x), plan).value
    b = phi_gg(*point(ys[::-1], x), plan).value
    assert abs(a - b) < 1e-5 * max(1.0, abs(a))


@settings(max_examples=15)
@given(st.lists(st.floats(-1.5, 1.5), min_size=2, max_size=2),
       st.lists(st.floats(-1.5, 1.5), min_size=2, max_size=2))
def test_conjugation(y, x):
    a = phi_gg(*point(y, x)).value
    b = phi_mb(*point([-v for v in y], x)).value
    assert abs(np.conj(a) - b) < 1e-9


@settings(max_examples=15)
@given(st.lists(st.floats(-1.5, 1.5), min_size=2, max_size=2),
       st.lists(st.floats(-1.5, 1.5), min_size=2, max_size=2), st.floats(-3, 3))
def test_translation(y, x, c):
    a = phi_gg(*point(y, [v + c for v in x])).value
    b = cmath.exp(1j * c * sum(y)) * phi_mb(*point(y, x)).value
    assert abs(a - b) < 1e-9


def test_translation_n3():
    y, x = (0.2, -0.5, 0.4), np.array([0.1, 0.3, -0.2])
    a = phi_gg(*point(y, x + 0.7)).value
    b = cmath.exp(0.7j * sum(y)) * phi_gg(*point(y, x)).value
    assert abs(a - b) < 1e-6


def test_bounded_on_grid():
    g = np.linspace(-3, 3, 100)
    X = np.stack(np.meshgrid(g, g, indexing="ij"), axis=-1).reshape(-1, 2)
    vals, err, _ = phi_gg_batch((0.4, -0.3), X, 1.0, ContourPlan(tol=1e-9))
    assert vals.shape == (10_000,)
    assert np.all(np.isfinite(vals))
    assert np.abs(vals).max() < 10.0


def test_decay_envelope():
    assert decay_envelope([0.0, 0.0], P1) == pytest.approx(math.exp(-1))
    t = 1.5
    assert decay_envelope([-t, t], P1) == pytest.approx(math.exp(-math.exp(t)))


def test_phi_over_envelope_bounded_along_rays():
    y = (0.3, -0.2)
    for direction in [(-1, 1), (-1, 0.5), (0, 1), (-1, 0), (-0.3, 1)]:
        ratios = []
        for t in np.linspace(0.5, 3.5, 7):
            x = (direction[0] * t, direction[1] * t)
            v = abs(phi_gg(*point(y, x)).value)
            ratios.append(v / decay_envelope(x, P1))
        assert max(ratios) < 1e3 * max(ratios[0], 1.0)


def test_dimension_and_cap_errors():
    with pytest.raises(DimensionMismatch):
        phi_gg(*point([0.1, 0.2], [0.0]))
    with pytest.raises(PreconditionViolated):
        phi_mb(*point([0.0] * 5, [0.0] * 5))
    with pytest.raises(PreconditionViolated):
        Rapidities((float("nan"),))


def test_r_sequence_examples():
    one = enumerate_r_sequences([-1.0])
    assert len(one) == 1 and next(iter(one))[(1, 1)] == -1.0
    two = enumerate_r_sequences([1.0])
    assert sorted(s[(1, 1)] for s in two) == [0.0, 1.0]
    assert enumerate_r_sequences([1.0, 1.0]) == brute_force_r_sequences([1.0, 1.0])


@pytest.mark.parametrize("n", [3, 4])
def test_r_sequences_all_sign_patterns(n):
    mags = [1.0, 0.7, 1.9][: n - 1]
    for signs in itertools.product((1, -1), repeat=n - 1):
        r = [s * m for s, m in zip(signs, mags)]
        got = enumerate_r_sequences(r)
        assert got == brute_force_r_sequences(r)
        assert all(check_invariants(seq) for seq in got)


def test_r_sequences_degenerate():
    with pytest.raises(DegenerateInput):
        enumerate_r_sequences([1.0, -1.0])

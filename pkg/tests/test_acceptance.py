"""Acceptance criteria 1-13, one check each.

Each check returns (passed, detail) and prints a single ``ACCEPTANCE k PASS|FAIL`` line.
Run with ``pytest -s tests/test_acceptance.py`` to see the lines inline, or
``python3 tests/test_acceptance.py`` for the bare report.
"""

import cmath
import math
import time

import numpy as np
import pytest

from todasov.identities import (h_alpha_check, verify_eigenfunction, verify_four_v,
                                verify_gustafson, verify_l_lambda_exchange,
                                verify_lambda_commutation, verify_lambda_exchange,
                                verify_r_sequences, _generic_magnitudes)
from todasov.kernels import ChainParams
from todasov.quadrature import DEFAULT_BUDGET, ContourPlan
from todasov.transforms import TestFunction, h_isometry, isometry_u, isometry_v
from todasov.whittaker import Positions, Rapidities, decay_envelope, phi_gg, phi_mb

P1 = ChainParams(1.0)


def rng_for(k):
    return np.random.default_rng([2024, k])


def point(y, x):
    return Rapidities(tuple(y)), Positions(tuple(x))


def worst(reports):
    return max(r.rel_residual for r in reports)


def c1():
    rng = rng_for(1)
    t0 = time.perf_counter()
    errs2 = []
    for _ in range(20):
        y, x = point(rng.uniform(-1, 1, 2), rng.uniform(-1, 1, 2))
        a, b = phi_mb(y, x).value, phi_gg(y, x).value
        errs2.append(abs(a - b) / abs(b))
    t2 = time.perf_counter() - t0
    t0 = time.perf_counter()
    errs3 = []
    for _ in range(5):
        y, x = point(rng.uniform(-1, 1, 3), rng.uniform(-1, 1, 3))
        a, b = phi_mb(y, x).value, phi_gg(y, x).value
        errs3.append(abs(a - b) / abs(b))
    t3 = time.perf_counter() - t0
    ok = max(errs2) < 1e-6 and t2 < 60 and max(errs3) < 1e-4 and t3 < 600
    return ok, f"N=2 max rel {max(errs2):.1e} in {t2:.1f}s; N=3 max rel {max(errs3):.1e} in {t3:.1f}s"


def c2():
    rng = rng_for(2)
    t0 = time.perf_counter()
    reps = [verify_lambda_exchange(*rng.uniform(-1, 1, 2), tau=(rng.uniform(-1, 1),),
                                   taup=(rng.uniform(-1, 1),)) for _ in range(10)]
    dt = time.perf_counter() - t0
    ok = worst(reps) < 1e-6 and dt < 60
    return ok, f"10 cases, max rel {worst(reps):.1e} in {dt:.1f}s"


def c3():
    rng = rng_for(3)
    t0 = time.perf_counter()
    reps = [verify_four_v(*rng.uniform(-1, 1, 4), *rng.uniform(-2, 2, 2)) for _ in range(20)]
    dt = time.perf_counter() - t0
    ok = worst(reps) < 1e-9 and dt < 10
    return ok, f"20 cases, max rel {worst(reps):.1e} in {dt:.1f}s"


def c4():
    rng = rng_for(4)
    r2 = [verify_lambda_commutation(*rng.uniform(-1, 1, 2), rng.uniform(-1, 1, 2)) for _ in range(10)]
    r3 = [verify_lambda_commutation(*rng.uniform(-1, 1, 2), rng.uniform(-1, 1, 3), rng.uniform(-1, 1, 1))
          for _ in range(3)]
    ok = worst(r2) < 1e-7 and worst(r3) < 1e-5
    return ok, f"N=2 max rel {worst(r2):.1e}; N=3 max rel {worst(r3):.1e}"


def _upper(rng, size):
    return rng.uniform(-1, 1, size) + 1j * rng.uniform(0.3, 1.0, size)


def c5():
    rng = rng_for(5)
    r1 = [verify_gustafson(1, [0.3 + 0.5j], s=0.0)]
    special_ok = abs(abs(r1[0].rhs) - math.exp(-1)) < 1e-12
    r1 += [verify_gustafson(1, _upper(rng, 1), s=rng.uniform(-3, 1)) for _ in range(9)]
    r2 = [verify_gustafson(2, [0.3 + 0.6j, -0.4 + 0.8j], [0.1 - 0.7j])]
    r2 += [verify_gustafson(2, _upper(rng, 2), np.conj(_upper(rng, 1)), s=rng.uniform(-1, 1))
           for _ in range(4)]
    ok = special_ok and worst(r1) < 1e-8 and worst(r2) < 1e-6
    return ok, f"n=1 max rel {worst(r1):.1e} (|rhs(s=0)| = e^-1: {special_ok}); n=2 max rel {worst(r2):.1e}"


def c6():
    rng = rng_for(6)
    reps = [verify_l_lambda_exchange(complex(rng.uniform(-1, 1), rng.uniform(0.2, 1.0)),
                                     complex(rng.uniform(-1, 1), rng.uniform(-1.0, 0.0)),
                                     rng.uniform(-1, 1, 2), rng.uniform(-1, 1, 1)) for _ in range(5)]
    ok = worst(reps) < 1e-6
    return ok, f"5 cases, max rel {worst(reps):.1e}"


def c7():
    one = TestFunction.bump([0.2], 1.0, (1.0, 0.5))
    r1 = isometry_u(one, one)
    two = TestFunction.bump([0.8, -0.8], 0.6, symmetrized=True, gap=1.0)
    base = isometry_u(two, two)
    quad4 = isometry_u(two, two, ContourPlan(tol=1e-8, max_evals=4 * DEFAULT_BUDGET))
    ok = r1.rel_residual < 1e-6 and base.rel_residual < 1e-3 and quad4.rel_residual <= 0.5 * base.rel_residual
    return ok, (f"N=1 rel {r1.rel_residual:.1e}; N=2 rel {base.rel_residual:.1e} at default budget, "
                f"{quad4.rel_residual:.1e} at 4x")


def c8():
    r1 = isometry_v(TestFunction.bump([0.2], 1.0, (1.0, 0.5)))
    F = TestFunction((([0.3, -0.2], 0.7, (1.0,)), ([-0.5, 0.4], 0.5, (0.5,))))
    r2 = isometry_v(F)
    tail_ok = r2.extra["tail_bound"] < 0.5 * r2.tol * abs(r2.rhs)
    ok = r1.rel_residual < 1e-6 and r2.rel_residual < 1e-2 and tail_ok
    return ok, (f"N=1 rel {r1.rel_residual:.1e}; N=2 rel {r2.rel_residual:.1e}, "
                f"tail {r2.extra['tail_bound']:.1e} vs tol/2 {0.5 * r2.tol * abs(r2.rhs):.1e}")


def c9():
    G = TestFunction.bump([0.0], 1.0, (1.0, 0.3))
    iso = h_isometry(G)
    alpha = h_alpha_check(G)
    ok = iso.rel_residual < 1e-3 and alpha.rel_residual < 1e-4
    return ok, f"isometry rel {iso.rel_residual:.1e}; Plemelj vs alpha-limit {alpha.rel_residual:.1e}"


def c10():
    rng = rng_for(10)
    conj_res, trans_res = [], []
    for _ in range(50):
        y, x = rng.uniform(-1.5, 1.5, 2), rng.uniform(-1.5, 1.5, 2)
        a = phi_gg(*point(y, x)).value
        # the other side by Mellin-Barnes, so float symmetry of one evaluator cannot pass it
        b = phi_mb(*point(-y, x)).value
        conj_res.append(abs(np.conj(a) - b))
    for _ in range(50):
        y, x, c = rng.uniform(-1.5, 1.5, 2), rng.uniform(-1.5, 1.5, 2), rng.uniform(-3, 3)
        a = phi_gg(*point(y, x + c)).value
        b = cmath.exp(1j * c * y.sum()) * phi_mb(*point(y, x)).value
        trans_res.append(abs(a - b))
    ok = max(conj_res) < 1e-8 and max(trans_res) < 1e-8
    return ok, f"conjugation max {max(conj_res):.1e}; translation max {max(trans_res):.1e}"


def c11():
    rng = rng_for(11)
    cases = [((0.5, -0.5), (0.0, 0.0))] + [(rng.uniform(-1, 1, 2), rng.uniform(-1, 1, 2)) for _ in range(2)]
    spreads = []
    for y, x in cases:
        rep = verify_eigenfunction(y, x)
        ratios = np.array([complex(*r) for r in rep.extra["ratios"]])
        spreads.append(float(np.abs(ratios - ratios[0]).max() / abs(ratios[0])))
    ok = max(spreads) < 1e-4
    return ok, f"{len(cases)} cases, max relative spread {max(spreads):.1e}"


def c12():
    rng = rng_for(12)
    reps = [verify_r_sequences(n, _generic_magnitudes(rng, n)) for n in (3, 4) for _ in range(3)]
    ok = all(r.passed and r.extra["sets_equal"] and r.extra["invariants"] for r in reps)
    n_patterns = sum(len(r.extra["counts"]) for r in reps)
    return ok, f"{n_patterns} sign patterns over N=3,4, all sets equal the brute-force enumeration"


RAYS = [(-1.0, 1.0), (0.0, 1.0), (-1.0, 0.0), (-0.5, 1.5), (-1.5, 0.5)]


def c13():
    ts = np.linspace(0.0, 4.0, 17)
    y = (0.3, -0.2)
    growth = []
    for d in RAYS:
        g = []
        for t in ts:
            x = (d[0] * t, d[1] * t)
            g.append(math.log(abs(phi_gg(*point(y, x)).value)) - math.log(decay_envelope(x, P1)))
        g = np.array(g)
        # largest rise over any earlier value along the ray
        growth.append(float(max(0.0, np.max(g[1:] - np.maximum.accumulate(g)[:-1]))))
    ok = max(growth) < 0.1
    return ok, f"5 rays, t in [0, 4], largest rise of log|phi| - log envelope {max(growth):.1e}"


CRITERIA = {1: c1, 2: c2, 3: c3, 4: c4, 5: c5, 6: c6, 7: c7, 8: c8, 9: c9, 10: c10, 11: c11,
            12: c12, 13: c13}


def report(k):
    t0 = time.perf_counter()
    try:
        ok, detail = CRITERIA[k]()
    except Exception as exc:  # a crash is a failure, reported like one
        ok, detail = False, f"{type(exc).__name__}: {exc}"
    line = f"ACCEPTANCE {k:2d} {'PASS' if ok else 'FAIL'} ({time.perf_counter() - t0:.1f}s) {detail}"
    return ok, line


@pytest.mark.parametrize("k", sorted(CRITERIA))
def test_criterion(k, capsys):
    ok, line = report(k)
    with capsys.disabled():
        print("\n" + line)
    assert ok, line


if __name__ == "__main__":
    for k in sorted(CRITERIA):
        print(report(k)[1], flush=True)

"""Numerical verifiers for the integral identities of the open Toda kernels.

Each verifier evaluates both sides of one identity by quadrature (or closed
form where available) and returns an ``IdentityReport``.  ``run_suite``
draws seeded random cases for every registered identity.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import quadrature as quad
from .errors import (DimensionMismatch, PreconditionViolated, SmallDenominator,
                     TodaSovError)
from .gammaplex import loggamma
from .kernels import ChainParams, log_l, log_lambda, log_lambda_bar, log_v
from .quadrature import ContourPlan, Layer
from .rsequences import brute_force_r_sequences, check_invariants, enumerate_r_sequences
from .transforms import (IdentityReport, TestFunction, _Timer, h_alpha_extrapolated,
                         h_isometry, h_transform_n1, isometry_u, isometry_v)
from .whittaker import Positions, Rapidities, phi_gg, phi_gg_batch, phi_mb

DEFAULT_EPS = 0.3  # regulators, in units of hbar


@dataclass(frozen=True)
class CaseSpec:
    """Seeded batch of random cases.  ``tol=None`` keeps each identity's own threshold."""

    seed: int = 42
    n_cases: int = 3
    box: float = 1.0
    tol: float | None = None

    def __post_init__(self):
        if int(self.n_cases) < 0:
            raise PreconditionViolated("n_cases must be non-negative")
        if not self.box > 0:
            raise PreconditionViolated("box must be positive")
        if self.tol is not None and not self.tol > 0:
            raise PreconditionViolated("tol must be positive")

    def threshold(self, default: float) -> float:
        return default if self.tol is None else self.tol


def _plan(plan, tol):
    return plan or ContourPlan(tol=tol)


def _gamma(z):
    return np.exp(loggamma(np.asarray(z, dtype=complex)))


def _windowed(f, lo, hi, plan):
    """Integral of ``f`` over [lo, hi] by refined Gauss-Legendre panels."""
    p = plan.replace(window_halfwidth=0.5 * (hi - lo))
    return quad.integrate_line(f, 0.0, p, center=0.5 * (lo + hi))


def _exp_margin(rate, tol):
    return 2.0 + math.log(1.0 / tol) / rate


# ---------------------------------------------------------------- 4-V exchange


def verify_four_v(x_p, x_p1, xq_p, xq_p1, lam, mu, params: ChainParams | None = None,
                  plan: ContourPlan | None = None, tol: float = 1e-9) -> IdentityReport:
    """int V_{lam+}(x_{p+1}-t) V_{lam-}(x_p-t) V_{mu+}(t-x'_p) V_{mu-}(t-x'_{p+1}) dt
    = (cosh((x_p-x'_p)/2)/cosh((x_{p+1}-x'_{p+1})/2))^{i(lam-mu)/hbar} * (same, lam <-> mu).
    """
    params = params or ChainParams()
    hbar = params.hbar
    plan = _plan(plan, 1e-13)
    pts = (x_p, x_p1, xq_p, xq_p1)
    center = 0.5 * (max(pts) + min(pts))
    extent = 0.5 * (max(pts) - min(pts))

    def side(a, b):
        return lambda t: np.exp(log_v(a, 1, x_p1 - t, hbar) + log_v(a, -1, x_p - t, hbar)
                                + log_v(b, 1, t - xq_p, hbar) + log_v(b, -1, t - xq_p1, hbar))

    with _Timer() as clock:
        left = quad.integrate_de(side(lam, mu), center, plan, hbar, extent)
        right = quad.integrate_de(side(mu, lam), center, plan, hbar, extent)
        ratio = math.cosh((x_p - xq_p) / 2) / math.cosh((x_p1 - xq_p1) / 2)
        rhs = np.exp(1j * (lam - mu) / hbar * math.log(ratio)) * right.value
    return IdentityReport.build("four_v", left.value, rhs, tol, left.nodes_used + right.nodes_used,
                                clock.seconds, quad_err=left.abs_err_est + right.abs_err_est)


# ---------------------------------------------------------------- Lambda / bar-Lambda exchange


def _exchange_axis_log(k, n, y, yp, eps1, epsn, tau, taup, hbar):
    """Log of the factor of bar-Lambda_{y'} e^{..} Lambda_y that depends on x_k alone."""

    def f(x):
        out = np.zeros(np.shape(x), dtype=complex)
        if k == 0:
            out += 0.5j * (y - yp) * x / hbar - eps1 * x / hbar
        if k == n - 1:
            out += 0.5j * (y - yp) * x / hbar + epsn * x / hbar
        if k <= n - 2:
            out += log_v(y, -1, x - tau[k], hbar) + log_v(-yp, -1, x - taup[k], hbar)
        if k >= 1:
            out += log_v(y, 1, x - tau[k - 1], hbar) + log_v(-yp, 1, x - taup[k - 1], hbar)
        return out

    return f


def verify_lambda_exchange(y, yp, eps1=None, epsn=None, tau=(0.0,), taup=(0.0,),
                           params: ChainParams | None = None, plan: ContourPlan | None = None,
                           tol: float = 1e-6) -> IdentityReport:
    """int bar-Lambda_{y'}(tau'|x) e^{eps_N x_N/hbar} e^{-eps_1 x_1/hbar} Lambda_y(x|tau) d^N x
    = Gamma((y'-y+i eps_N)/(i hbar)) Gamma((y-y'+i eps_1)/(i hbar))
      ((e^{tau_1}+e^{tau'_1})/hbar)^{-eps_1/hbar} ((e^{-tau_{N-1}}+e^{-tau'_{N-1}})/hbar)^{-eps_N/hbar}
      * int Lambda^{(N-1)}_y(tau'|s) bar-Lambda^{(N-1)}_{y'}(s|tau) ds.

    The left integrand is a product of one-variable factors, so the N-fold
    integral is a product of line integrals.
    """
    params = params or ChainParams()
    hbar = params.hbar
    eps1 = DEFAULT_EPS * hbar if eps1 is None else eps1
    epsn = DEFAULT_EPS * hbar if epsn is None else epsn
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    taup = np.atleast_1d(np.asarray(taup, dtype=float))
    if tau.size != taup.size:
        raise DimensionMismatch("tau and tau' must have the same length")
    n = tau.size + 1
    if n not in (2, 3):
        raise PreconditionViolated("verify_lambda_exchange supports N = 2 or 3")
    if not (eps1 > 0 and epsn > 0):
        raise PreconditionViolated("regulators eps_1, eps_N must be positive")
    plan = _plan(plan, 1e-11)
    gg = quad.gg_halfwidth(plan.tol, hbar)

    with _Timer() as clock:
        lhs = 1.0 + 0j
        nodes = 0
        err = 0.0
        for k in range(n):
            f = _exchange_axis_log(k, n, y, yp, eps1, epsn, tau, taup, hbar)
            anchors = [tau[j] for j in (k - 1, k) if 0 <= j < n - 1] + \
                      [taup[j] for j in (k - 1, k) if 0 <= j < n - 1]
            lo, hi = min(anchors) - gg, max(anchors) + gg
            # the end variables keep only an exponential tail on one side
            if k == 0:
                hi = max(anchors) + _exp_margin(eps1 / hbar, plan.tol)
            if k == n - 1:
                lo = min(anchors) - _exp_margin(epsn / hbar, plan.tol)
            r = _windowed(lambda x, f=f: np.exp(f(x)), lo, hi, plan)
            lhs *= r.value
            nodes += r.nodes_used
            err += r.abs_err_est

        pref = _gamma((yp - y + 1j * epsn) / (1j * hbar)) * _gamma((y - yp + 1j * eps1) / (1j * hbar))
        pref *= ((math.exp(tau[0]) + math.exp(taup[0])) / hbar) ** (-eps1 / hbar)
        pref *= ((math.exp(-tau[-1]) + math.exp(-taup[-1])) / hbar) ** (-epsn / hbar)
        if n == 2:
            kern = np.exp(1j * y * taup[0] / hbar - 1j * yp * tau[0] / hbar)
        else:
            def g(s):
                s = np.asarray(s)[..., None]
                return np.exp(log_lambda(y, taup, s, hbar) + log_lambda_bar(yp, s, tau, hbar))

            c = 0.25 * (tau.sum() + taup.sum())
            ext = 0.5 * (max(tau.max(), taup.max()) - min(tau.min(), taup.min()))
            r = quad.integrate_de(g, c, plan, hbar, ext)
            kern = r.value
            nodes += r.nodes_used
            err += r.abs_err_est
        rhs = complex(np.ravel(pref)[0]) * kern
    return IdentityReport.build(f"lambda_exchange[N={n}]", lhs, rhs, tol, nodes, clock.seconds,
                                quad_err=err)


# ---------------------------------------------------------------- Lambda commutation


def _double_trapezoid(f, centers, extents, plan, hbar):
    """int f(z1, z2) dz1 dz2 for a doubly-exponentially confined integrand."""

    def inner(outer):
        z1 = outer[:, 0].real

        def g(pts):
            return f(z1[:, None], pts[:, 0].real[None, :])

        return g

    layers = [
        Layer(1, inner, center=centers[1], extent=extents[1], rule="trapezoid", hbar=hbar),
        Layer(1, lambda outer: (lambda pts: np.ones((outer.shape[0], pts.shape[0]))),
              center=centers[0], extent=extents[0], rule="trapezoid", hbar=hbar),
    ]
    return quad.integrate_iterated(layers, plan)


def _commutation_side(a, b, x, xp, hbar, plan):
    n = x.size
    if n == 2:
        f = lambda z: np.exp(log_lambda(a, x, np.asarray(z)[..., None], hbar) + 1j * b * z / hbar)
        return quad.integrate_de(f, x.mean(), plan, hbar, 0.5 * abs(x[0] - x[1]))

    def f2(z1, z2):
        z = np.stack(np.broadcast_arrays(z1, z2), axis=-1)
        return np.exp(log_lambda(a, x, z, hbar) + log_lambda(b, z, xp, hbar))

    centers = [0.5 * (x[0] + x[1]), 0.5 * (x[1] + x[2])]
    extents = [0.5 * abs(x[0] - x[1]) + 1.0, 0.5 * abs(x[1] - x[2]) + 1.0]
    return _double_trapezoid(f2, centers, extents, plan, hbar)


def verify_lambda_commutation(lam, mu, x, xp=(), params: ChainParams | None = None,
                              plan: ContourPlan | None = None, tol: float | None = None
                              ) -> IdentityReport:
    """int Lambda^{(N)}_lam(x|z) Lambda^{(N-1)}_mu(z|x') dz is symmetric in lam <-> mu."""
    params = params or ChainParams()
    hbar = params.hbar
    x = np.atleast_1d(np.asarray(x, dtype=float))
    xp = np.atleast_1d(np.asarray(xp, dtype=float))
    n = x.size
    if n not in (2, 3):
        raise PreconditionViolated("verify_lambda_commutation supports N = 2 or 3")
    if xp.size != n - 2:
        raise DimensionMismatch(f"x' must have length {n - 2}")
    tol = tol if tol is not None else (1e-7 if n == 2 else 1e-5)
    plan = _plan(plan, 1e-12 if n == 2 else 1e-9)
    with _Timer() as clock:
        left = _commutation_side(lam, mu, x, xp, hbar, plan)
        right = _commutation_side(mu, lam, x, xp, hbar, plan)
    return IdentityReport.build(f"lambda_commutation[N={n}]", left.value, right.value, tol,
                                left.nodes_used + right.nodes_used, clock.seconds,
                                quad_err=left.abs_err_est + right.abs_err_est)


# ---------------------------------------------------------------- L / Lambda exchange


def verify_l_lambda_exchange(y, w, x, z, params: ChainParams | None = None,
                             plan: ContourPlan | None = None, tol: float = 1e-6) -> IdentityReport:
    """int L^{(2)}_y(x|t) Lambda^{(2)}_w(t|z) d^2 t
    = hbar^{i(w-y)/hbar} Gamma((y-w)/(i hbar)) int Lambda^{(2)}_w(x|t) L^{(1)}_y(t|z) dt.
    """
    params = params or ChainParams()
    hbar = params.hbar
    y, w = complex(y), complex(w)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if x.size != 2 or z.size != 1:
        raise PreconditionViolated("verify_l_lambda_exchange is implemented for N = 3 "
                                   "(x of length 2, z of length 1)")
    gap = (y - w).imag
    if not gap > 0:
        raise PreconditionViolated("need Im(y) > Im(w)")
    plan = _plan(plan, 1e-10)
    gg = quad.gg_halfwidth(plan.tol, hbar)

    def inner(outer):
        t1 = outer[:, 0].real

        def g(pts):
            t = np.stack(np.broadcast_arrays(t1[:, None], pts[:, 0].real[None, :]), axis=-1)
            return np.exp(log_l(y, x, t, hbar) + log_lambda(w, t, z, hbar))

        return g

    # t_2 decays only like e^{(Im y - Im w) t_2 / hbar} towards -infinity
    lo = min(x[1], z[0]) - _exp_margin(gap / hbar, plan.tol)
    hi = max(x[1], z[0]) + gg
    layers = [
        Layer(1, inner, opts={"window": (lo, hi)}),
        Layer(1, lambda outer: (lambda pts: np.ones((outer.shape[0], pts.shape[0]))),
              center=0.5 * (x[0] + x[1]), extent=0.5 * abs(x[0] - x[1]) + 1.0,
              rule="trapezoid", hbar=hbar),
    ]
    with _Timer() as clock:
        left = quad.integrate_iterated(layers, plan)
        f = lambda t: np.exp(log_lambda(w, x, np.asarray(t)[..., None], hbar)
                             + log_l(y, np.asarray(t)[..., None], z, hbar))
        right = quad.integrate_de(f, x.mean(), plan, hbar, 0.5 * abs(x[0] - x[1]))
        pref = np.exp(1j * (w - y) / hbar * math.log(hbar)) * _gamma((y - w) / (1j * hbar))
        rhs = complex(np.ravel(pref)[0]) * right.value
    return IdentityReport.build("l_lambda", left.value, rhs, tol,
                                left.nodes_used + right.nodes_used, clock.seconds,
                                quad_err=left.abs_err_est + right.abs_err_est)


# ---------------------------------------------------------------- Gustafson


def _gustafson_log(w, y, x, s, hbar):
    """Log-integrand on R^n; w: (..., n)."""
    w = np.asarray(w, dtype=complex)
    n = w.shape[-1]
    out = s * w.sum(axis=-1) / (1j * hbar)
    out = out + loggamma((y[None, :] - w[..., :, None]) / (1j * hbar)).sum(axis=(-1, -2))
    if x.size:
        out = out + loggamma((w[..., :, None] - x[None, :]) / (1j * hbar)).sum(axis=(-1, -2))
    if n > 1:
        a, b = np.nonzero(~np.eye(n, dtype=bool))
        out = out - loggamma((w[..., a] - w[..., b]) / (1j * hbar)).sum(axis=-1)
    return out - n * math.log(2 * math.pi * hbar)


def verify_gustafson(n, y, x=(), s=0.0, params: ChainParams | None = None,
                     plan: ContourPlan | None = None, tol: float | None = None) -> IdentityReport:
    """int_{R^n} e^{s sum w/(i hbar)} prod Gamma((y_b-w_a)/(i hbar)) prod Gamma((w_a-x_b)/(i hbar))
    / prod_{a != b} Gamma((w_a-w_b)/(i hbar)) d^n w/(2 pi hbar)^n
    = n! e^{s sum y/(i hbar)} e^{-e^s} prod Gamma((y_a-x_b)/(i hbar)).
    """
    params = params or ChainParams()
    hbar = params.hbar
    y = np.atleast_1d(np.asarray(y, dtype=complex))
    x = np.atleast_1d(np.asarray(x, dtype=complex)) if np.size(x) else np.zeros(0, dtype=complex)
    if n not in (1, 2):
        raise PreconditionViolated("verify_gustafson supports n = 1 or 2")
    if y.size != n or x.size != n - 1:
        raise DimensionMismatch(f"need {n} values of y and {n - 1} of x")
    if not y.imag.min() > 0 or (x.size and not x.imag.max() < 0):
        raise PreconditionViolated("need min Im(y) > 0 > max Im(x) for the real-line contour")
    tol = tol if tol is not None else (1e-8 if n == 1 else 1e-6)
    plan = _plan(plan, 1e-12 if n == 1 else 1e-9)
    decay = math.pi / (2 * hbar)
    re = np.concatenate([y.real, x.real])
    center = 0.5 * (re.max() + re.min())
    extent = 0.5 * (re.max() - re.min()) + 6.0

    with _Timer() as clock:
        if n == 1:
            res = quad.integrate_line(lambda w: np.exp(_gustafson_log(np.asarray(w)[..., None],
                                                                      y, x, s, hbar)),
                                      0.0, plan, center, decay, extent)
        else:
            def inner(outer):
                w1 = outer[:, 0]

                def g(pts):
                    w = np.stack(np.broadcast_arrays(w1[:, None], pts[:, 0][None, :]), axis=-1)
                    return np.exp(_gustafson_log(w, y, x, s, hbar))

                return g

            layers = [Layer(1, inner, center=center, decay=decay, extent=extent),
                      Layer(1, lambda outer: (lambda pts: np.ones((outer.shape[0], pts.shape[0]))),
                            center=center, decay=decay, extent=extent)]
            res = quad.integrate_iterated(layers, plan)
        lg = s * y.sum() / (1j * hbar) - math.exp(s)
        if x.size:
            lg = lg + loggamma((y[:, None] - x[None, :]) / (1j * hbar)).sum()
        rhs = math.factorial(n) * np.exp(lg)
    return IdentityReport.build(f"gustafson[n={n}]", res.value, rhs, tol, res.nodes_used,
                                clock.seconds, quad_err=res.abs_err_est)


# ---------------------------------------------------------------- phi: MB against pyramid


def _mb_gg_case(y, x, hbar, tol):
    with _Timer() as clock:
        a = phi_mb(Rapidities(tuple(y), ChainParams(hbar)), Positions(tuple(x)))
        b = phi_gg(Rapidities(tuple(y), ChainParams(hbar)), Positions(tuple(x)))
    return IdentityReport.build(f"mb_gg[N={len(y)}]", a.value, b.value, tol,
                                a.nodes_used + b.nodes_used, clock.seconds,
                                y=[float(v) for v in y], x=[float(v) for v in x])


def verify_mb_gg(spec: CaseSpec, n: int, hbar: float = 1.0) -> list:
    """phi_mb against phi_gg at ``spec.n_cases`` seeded random points."""
    if n not in (2, 3):
        raise PreconditionViolated("verify_mb_gg supports N = 2 or 3")
    rng = np.random.default_rng([spec.seed, n])
    tol = spec.threshold(1e-6 if n == 2 else 1e-4)
    out = []
    for _ in range(spec.n_cases):
        y = rng.uniform(-spec.box, spec.box, n)
        x = rng.uniform(-spec.box, spec.box, n)
        out.append(_mb_gg_case(y, x, hbar, tol))
    return out


# ---------------------------------------------------------------- eigenfunction


FD6 = np.array([1 / 90, -3 / 20, 3 / 2, -49 / 18, 3 / 2, -3 / 20, 1 / 90])
PROBE_OFFSETS = ((0.0, 0.0), (0.3, -0.2), (-0.4, 0.5))


def _h0_ratios(y, probes, hbar, h, plan):
    """(H_0 phi)/phi at each probe with Richardson-combined order-6 differences."""
    n = probes.shape[1]
    stencil = np.arange(-3, 4)
    pts = [probes]
    for step in (h, 2 * h):
        for a in range(n):
            shift = np.zeros((7, n))
            shift[:, a] = step * stencil
            pts.append((probes[:, None, :] + shift[None]).reshape(-1, n))
    vals, _, used = phi_gg_batch(y, np.concatenate(pts), hbar, plan)
    m = probes.shape[0]
    phi0 = vals[:m]
    rest = vals[m:].reshape(2, n, m, 7)
    lap = [(rest[i] @ FD6).sum(axis=0) / step**2 for i, step in enumerate((h, 2 * h))]
    lap = (64 * lap[0] - lap[1]) / 63
    pot = np.exp(probes[:, 1:] - probes[:, :-1]).sum(axis=1)
    return phi0, (-0.5 * hbar**2 * lap + pot * phi0), used


def verify_eigenfunction(y, x, params: ChainParams | None = None, fd_step: float | None = None,
                         tol: float = 1e-4, probes=None) -> IdentityReport:
    """Constancy of (H_0 phi_y)/phi_y, H_0 = -hbar^2/2 Laplacian + sum_a e^{x_{a+1} - x_a}.

    lhs is the ratio at ``x``; rhs the ratio at the probe farthest from it.
    The value against sum y_a^2 / 2 is reported in ``extra``.
    """
    params = params or ChainParams()
    hbar = params.hbar
    y = tuple(float(v) for v in np.atleast_1d(y))
    x = np.atleast_1d(np.asarray(x, dtype=float))
    n = len(y)
    if n not in (1, 2) or x.size != n:
        raise PreconditionViolated("verify_eigenfunction supports N = 1 or 2 with len(x) = N")
    h = 1e-2 * hbar if fd_step is None else fd_step
    if probes is None:
        probes = [x + np.array(o[:n]) * hbar for o in PROBE_OFFSETS]
    probes = np.atleast_2d(np.asarray(probes, dtype=float))
    plan = ContourPlan(tol=1e-13)
    with _Timer() as clock:
        phi0, h_phi, used = _h0_ratios(y, probes, hbar, h, plan)
    small = np.abs(phi0) < 1e-8
    if small.any():
        raise SmallDenominator(f"|phi| < 1e-8 at probe {probes[np.argmax(small)].tolist()}")
    ratios = h_phi / phi0
    far = int(np.argmax(np.abs(ratios - ratios[0])))
    expected = 0.5 * sum(v * v for v in y)
    value_res = float(np.abs(ratios - expected).max()) / max(abs(expected), 1e-300)
    return IdentityReport.build(
        f"eigenfunction[N={n}]", ratios[0], ratios[far], tol, used, clock.seconds,
        ratios=[[float(r.real), float(r.imag)] for r in ratios], expected=expected,
        value_residual=value_res, value_passed=bool(value_res < tol),
        convention_sensitive=True)


# ---------------------------------------------------------------- R-sequences


def verify_r_sequences(n: int, magnitudes) -> IdentityReport:
    """Branching enumeration against the brute-force oracle over every sign pattern of r."""
    magnitudes = np.abs(np.asarray(magnitudes, dtype=float))
    if magnitudes.size != n - 1:
        raise DimensionMismatch(f"need {n - 1} magnitudes")
    counts = {}
    same = True
    invariants = True
    with _Timer() as clock:
        for signs in np.ndindex(*([2] * (n - 1))):
            r = tuple(float(m if s == 0 else -m) for m, s in zip(magnitudes, signs))
            fast = enumerate_r_sequences(r)
            slow = brute_force_r_sequences(r)
            counts["".join("+-"[s] for s in signs)] = (len(fast), len(slow))
            same &= fast == slow
            invariants &= all(check_invariants(q) for q in fast)
    total_fast = sum(c[0] for c in counts.values())
    total_slow = sum(c[1] for c in counts.values())
    rep = IdentityReport.build(f"r_sequences[N={n}]", total_fast, total_slow, 0.5, 0, clock.seconds,
                               counts=counts, sets_equal=bool(same), invariants=bool(invariants))
    rep.passed = bool(rep.passed and same and invariants)
    return rep


# ---------------------------------------------------------------- suite


def _generic_magnitudes(rng, n):
    while True:
        m = rng.uniform(0.2, 2.0, n - 1)
        try:
            for signs in np.ndindex(*([2] * (n - 1))):
                r = [v if s == 0 else -v for v, s in zip(m, signs)]
                for lo in range(len(r)):
                    for hi in range(lo, len(r)):
                        if abs(sum(r[lo:hi + 1])) < 1e-3:
                            raise ValueError
        except ValueError:
            continue
        return m


def _cases_four_v(spec, rng):
    for _ in range(spec.n_cases):
        xs = rng.uniform(-spec.box, spec.box, 4)
        lam, mu = rng.uniform(-2, 2, 2)
        yield verify_four_v, (*xs, lam, mu), {"tol": spec.threshold(1e-9)}


def _cases_lambda_exchange(spec, rng):
    for n, count in ((2, spec.n_cases), (3, min(spec.n_cases, 2))):
        for _ in range(count):
            y, yp = rng.uniform(-spec.box, spec.box, 2)
            tau = rng.uniform(-spec.box, spec.box, n - 1)
            taup = rng.uniform(-spec.box, spec.box, n - 1)
            yield verify_lambda_exchange, (y, yp), {"tau": tau, "taup": taup,
                                                    "tol": spec.threshold(1e-6)}


def _cases_lambda_commutation(spec, rng):
    for n, count, tol in ((2, spec.n_cases, 1e-7), (3, min(spec.n_cases, 3), 1e-5)):
        for _ in range(count):
            lam, mu = rng.uniform(-spec.box, spec.box, 2)
            x = rng.uniform(-spec.box, spec.box, n)
            xp = rng.uniform(-spec.box, spec.box, n - 2)
            yield verify_lambda_commutation, (lam, mu, x, xp), {"tol": spec.threshold(tol)}


def _cases_l_lambda(spec, rng):
    for _ in range(spec.n_cases):
        y = complex(rng.uniform(-spec.box, spec.box), rng.uniform(0.3, 1.5))
        w = complex(rng.uniform(-spec.box, spec.box), rng.uniform(-0.3, 0.1))
        x = rng.uniform(-spec.box, spec.box, 2)
        z = rng.uniform(-spec.box, spec.box, 1)
        yield verify_l_lambda_exchange, (y, w, x, z), {"tol": spec.threshold(1e-6)}


def _cases_gustafson(spec, rng):
    for i in range(spec.n_cases):
        y = complex(rng.uniform(-spec.box, spec.box), rng.uniform(0.2, 1.0))
        s = 0.0 if i == 0 else rng.uniform(-3, 1)
        yield verify_gustafson, (1, [y], [], s), {"tol": spec.threshold(1e-8)}
    for _ in range(min(spec.n_cases, 5)):
        y = rng.uniform(-spec.box, spec.box, 2) + 1j * rng.uniform(0.3, 1.0, 2)
        x = rng.uniform(-spec.box, spec.box, 1) - 1j * rng.uniform(0.3, 1.0, 1)
        s = rng.uniform(-1, 0.5)
        yield verify_gustafson, (2, y, x, s), {"tol": spec.threshold(1e-6)}


def _cases_mb_gg(spec, rng):
    tol2, tol3 = spec.threshold(1e-6), spec.threshold(1e-4)
    for n, count, tol in ((2, spec.n_cases, tol2), (3, min(spec.n_cases, 5), tol3)):
        for _ in range(count):
            y = rng.uniform(-spec.box, spec.box, n)
            x = rng.uniform(-spec.box, spec.box, n)
            yield _mb_gg_case, (y, x, 1.0, tol), {}


def _cases_eigenfunction(spec, rng):
    for i in range(spec.n_cases):
        n = 1 if i % 3 == 2 else 2
        y = rng.uniform(-spec.box, spec.box, n)
        x = rng.uniform(-0.5 * spec.box, 0.5 * spec.box, n)
        yield verify_eigenfunction, (y, x), {"tol": spec.threshold(1e-4)}


def _cases_isometry_u(spec, rng):
    for i in range(spec.n_cases):
        c1 = rng.uniform(-spec.box, spec.box)
        c2 = c1 + rng.uniform(-0.4, 0.4)  # overlapping supports, nonzero inner product
        psi = TestFunction.bump([c1], rng.uniform(0.5, 1.0), (1.0, rng.uniform(-1, 1)))
        phi = TestFunction.bump([c2], rng.uniform(0.5, 1.0))
        yield _iso_u, (psi, phi, spec.threshold(1e-6)), {}
    for i in range(min(spec.n_cases, 2)):
        c = rng.uniform(0.8, 1.6)
        f = TestFunction.bump([-c, c], rng.uniform(0.5, 0.8), symmetrized=True, gap=1.0)
        yield _iso_u, (f, f, spec.threshold(1e-3)), {}


def _iso_u(psi, phi, tol):
    rep = isometry_u(psi, phi, ContourPlan(tol=min(tol, 1e-8)))
    return IdentityReport.build(rep.name, rep.lhs, rep.rhs, tol, rep.nodes, rep.seconds, **rep.extra)


def _cases_isometry_v(spec, rng):
    for _ in range(spec.n_cases):
        f = TestFunction.bump([rng.uniform(-spec.box, spec.box)], rng.uniform(0.5, 1.0),
                              (1.0, rng.uniform(-1, 1)))
        yield isometry_v, (f, ContourPlan(tol=spec.threshold(1e-6) * 1e-2)), \
            {"tol": spec.threshold(1e-6)}
    for _ in range(min(spec.n_cases, 2)):
        a = rng.uniform(-spec.box, spec.box, 2)
        b = rng.uniform(-spec.box, spec.box, 2)
        f = TestFunction.bump(a, 0.8) + TestFunction.bump(b, 0.6, (0.5, 1.0))
        yield isometry_v, (f,), {"tol": spec.threshold(1e-2)}


def h_alpha_check(G: TestFunction, params: ChainParams | None = None, points=None,
                  tol: float = 1e-4) -> IdentityReport:
    """Plemelj-limit H_1 G against the alpha -> 0 extrapolation of the regularized integral."""
    a, b = G.intervals(0)[0][0], G.intervals(0)[-1][1]
    points = np.linspace(a - 0.5, b + 0.5, 7) if points is None else np.asarray(points)
    with _Timer() as clock:
        pl = np.array([h_transform_n1(G, w, params) for w in points])
        ex = np.array([h_alpha_extrapolated(G, w, params) for w in points])
    k = int(np.argmax(np.abs(pl - ex)))
    scale = float(np.abs(pl).max())
    rep = IdentityReport.build("h_n1_alpha", ex[k], pl[k], tol, 0, clock.seconds,
                               max_abs_gap=float(np.abs(pl - ex).max()), scale=scale)
    rel = rep.abs_residual / scale
    rep.rel_residual = rel
    rep.passed = bool(rel < tol)
    return rep


def _cases_h_n1(spec, rng):
    for _ in range(spec.n_cases):
        g = TestFunction.bump([rng.uniform(-spec.box, spec.box)], rng.uniform(0.6, 1.2),
                              (1.0, rng.uniform(-0.5, 0.5)))
        yield h_isometry, (g,), {"tol": spec.threshold(1e-3)}
        yield h_alpha_check, (g,), {"tol": spec.threshold(1e-4)}


def _cases_r_sequences(spec, rng):
    for _ in range(spec.n_cases):
        for n in (3, 4):
            yield verify_r_sequences, (n, _generic_magnitudes(rng, n)), {}


SUITE = {
    "eigenfunction": _cases_eigenfunction,
    "four_v": _cases_four_v,
    "gustafson": _cases_gustafson,
    "h_n1": _cases_h_n1,
    "isometry_u": _cases_isometry_u,
    "isometry_v": _cases_isometry_v,
    "l_lambda": _cases_l_lambda,
    "lambda_commutation": _cases_lambda_commutation,
    "lambda_exchange": _cases_lambda_exchange,
    "mb_gg": _cases_mb_gg,
    "r_sequences": _cases_r_sequences,
}
IDENTITIES = tuple(sorted(SUITE))


def _run_one(task):
    name, idx, fn, args, kw = task
    try:
        rep = fn(*args, **kw)
    except TodaSovError as exc:
        rep = IdentityReport(name, complex("nan"), complex("nan"), math.inf, math.inf, False,
                             float(kw.get("tol", 0.0)), 0, 0.0,
                             {"error": f"{type(exc).__name__}: {exc}"})
    rep.name = f"{name}/{idx:03d}:{rep.name}"
    return rep


def suite_tasks(spec: CaseSpec, names=None):
    names = IDENTITIES if names in (None, "all", ["all"]) else names
    if isinstance(names, str):
        names = [names]
    unknown = [nm for nm in names if nm not in SUITE]
    if unknown:
        raise KeyError(f"unknown identity {unknown[0]!r}; choose from {', '.join(IDENTITIES)}")
    tasks = []
    for nm in sorted(set(names)):
        rng = np.random.default_rng([spec.seed, IDENTITIES.index(nm)])
        for i, (fn, args, kw) in enumerate(SUITE[nm](spec, rng)):
            tasks.append((nm, i, fn, args, kw))
    return tasks


def run_suite(spec: CaseSpec, names=None, workers: int = 1) -> list:
    """Run seeded cases of the named identities (all by default).

    Case draws depend only on (seed, identity), so the reports are the same for
    any worker count.  Output is sorted by report name.
    """
    tasks = suite_tasks(spec, names)
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            reports = list(pool.map(_run_one, tasks))
    else:
        reports = [_run_one(t) for t in tasks]
    return sorted(reports, key=lambda r: r.name)

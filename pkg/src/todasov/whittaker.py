"""Evaluators of the GL(N) Whittaker kernel phi_y(x).

Two independent routes:

* ``phi_mb``: iterated Mellin-Barnes contour integrals over the layers
  (R - i alpha_s)^{N-s}.  All layers share one real node set, so every Gamma
  factor coupling two layers is an M x M table and the layer sums become
  tensor contractions (matrix products for N <= 3).
* ``phi_gg``: the pyramid of real Lambda-kernel integrals, integrated with
  the trapezoid rule on per-point windows; nodes where the outer kernel is
  negligible are pruned before the inner layers are evaluated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import quadrature as quad
from .errors import BudgetExceeded, DimensionMismatch, NonConvergence, PreconditionViolated
from .gammaplex import loggamma
from .kernels import ChainParams, log_lambda
from .quadrature import ContourPlan, QuadResult
from .rsequences import RSequence, enumerate_r_sequences, brute_force_r_sequences  # noqa: F401

MAX_N = 4


@dataclass(frozen=True)
class Rapidities:
    y: tuple
    params: ChainParams = field(default_factory=ChainParams)

    def __post_init__(self):
        y = tuple(float(v) for v in np.atleast_1d(self.y))
        if not y or not all(math.isfinite(v) for v in y):
            raise PreconditionViolated("rapidities must be finite and non-empty")
        object.__setattr__(self, "y", y)
        if self.params.n != len(y):
            object.__setattr__(self, "params", ChainParams(self.params.hbar, len(y)))

    @property
    def n(self) -> int:
        return len(self.y)

    @property
    def hbar(self) -> float:
        return self.params.hbar

    def array(self):
        return np.array(self.y)


@dataclass(frozen=True)
class Positions:
    x: tuple

    def __post_init__(self):
        x = tuple(float(v) for v in np.atleast_1d(self.x))
        if not x or not all(math.isfinite(v) for v in x):
            raise PreconditionViolated("positions must be finite and non-empty")
        object.__setattr__(self, "x", x)

    @property
    def n(self) -> int:
        return len(self.x)

    def array(self):
        return np.array(self.x)


def _check(y: Rapidities, x: Positions):
    if y.n != x.n:
        raise DimensionMismatch(f"{y.n} rapidities but {x.n} positions")
    if y.n > MAX_N:
        raise PreconditionViolated(f"N exceeds supported maximum {MAX_N}")


def phi_base(y, x, params: ChainParams):
    """phi_y(x) = e^{i x y / hbar} for one particle."""
    return np.exp(1j * np.asarray(x) * np.asarray(y) / params.hbar)


def default_tol(n: int) -> float:
    return 1e-10 if n <= 2 else 1e-7


# ---------------------------------------------------------------- Mellin-Barnes


def _mb_tables(g, depths, hbar):
    """Gamma tables shared by all layers for real nodes ``g``."""
    m = g.size
    diff = g[:, None] - g[None, :]
    # 1/Gamma((w_b - w_a)/(i hbar)) / Gamma((w_a - w_b)/(i hbar)) for two
    # variables on one layer; zero on the diagonal
    rg = np.exp(-loggamma((g[None, :] - g[:, None]) / (1j * hbar)))
    rg[np.arange(m), np.arange(m)] = 0.0
    rg = rg * rg.T
    cross = []
    for s in range(len(depths) - 1):
        # Gamma((w^{(s)}_i - w^{(s+1)}_k)/(i hbar)), offsets a_s < a_{s+1}
        z = (diff + 1j * (depths[s + 1] - depths[s])) / (1j * hbar)
        cross.append(np.exp(loggamma(z)))
    return rg, cross


def _contract(h, t, n_out):
    """sum_k h[k] prod_{a, b} t[i_b, k_a] for k of rank n_out - 1."""
    r = h.ndim
    if r == 1:
        th = t * h[None, :]
        return th @ t.T if n_out == 2 else np.einsum("ik,jk,lk,k->ijl", t, t, t, h)
    if r == 2 and n_out == 3:
        p = t[:, :, None] * t[:, None, :]
        q = (p * h[None]).reshape(t.shape[0], -1)
        pf = p.reshape(t.shape[0], -1)
        return np.einsum("ia,ja,la->ijl", q, pf, pf, optimize=True)
    raise BudgetExceeded("contraction rank not supported")


def mb_sum(y, x, hbar, depths, g, wts):
    """One fixed-rule Mellin-Barnes sum for phi_y(x); y, x of length N."""
    n = y.size
    if n == 1:
        return complex(np.exp(1j * y[0] * x[0] / hbar))
    lh = math.log(hbar)
    # one layer (N=2) needs no pair tables
    rg, cross = _mb_tables(g, depths, hbar) if n > 2 else (None, [])
    # innermost layer s = N-1: phi_w(x_1) = e^{i w x_1 / hbar}
    w_in = g - 1j * depths[-1]
    f = np.exp(1j * w_in * x[0] / hbar)
    for s in range(n - 2, 0, -1):
        k = n - s  # variables on layer s; layer s+1 has k-1
        w_out = g - 1j * depths[s - 1]
        w_in = g - 1j * depths[s]
        xs = x[k - 1]
        node = wts * np.exp((1j / hbar) * w_in * (k * lh - xs))
        h = f
        for axis in range(h.ndim):
            shape = [1] * h.ndim
            shape[axis] = -1
            h = h * node.reshape(shape)
        if h.ndim == 2:
            h = h * rg
        f_new = _contract(h, cross[s - 1], k)
        pref = np.exp((1j / hbar) * w_out * (xs - (k - 1) * lh))
        for axis in range(f_new.ndim):
            shape = [1] * f_new.ndim
            shape[axis] = -1
            f_new = f_new * pref.reshape(shape)
        f = f_new / (math.factorial(k - 1) * (2 * math.pi * hbar) ** (k - 1))
    # outermost layer: spectral vector y, layer 1 with N-1 variables
    w1 = g - 1j * depths[0]
    c = np.exp(loggamma((y[:, None] - w1[None, :]) / (1j * hbar)).sum(axis=0))
    node = wts * c * np.exp((1j / hbar) * w1 * (n * lh - x[-1]))
    h = f
    for axis in range(h.ndim):
        shape = [1] * h.ndim
        shape[axis] = -1
        h = h * node.reshape(shape)
    if h.ndim == 2:
        h = h * rg
    elif h.ndim == 3:
        h = h * rg[:, :, None] * rg[:, None, :] * rg[None, :, :]
    total = complex(h.sum())
    pref = np.exp((1j / hbar) * y.sum() * (x[-1] - (n - 1) * lh))
    return pref * total / (math.factorial(n - 1) * (2 * math.pi * hbar) ** (n - 1))


def _mb_cost(n, m):
    return {1: 1, 2: m, 3: m**3, 4: m**5}[n]


def phi_mb(y: Rapidities, x: Positions, plan: ContourPlan | None = None) -> QuadResult:
    """Mellin-Barnes evaluation of phi_y(x)."""
    _check(y, x)
    n, hbar = y.n, y.hbar
    plan = plan or ContourPlan(tol=default_tol(n))
    ya, xa = y.array(), x.array()
    if n == 1:
        return QuadResult(complex(phi_base(ya[0], xa[0], y.params)), 0.0, 1)
    depths = plan.depths(n - 1, hbar)
    center = 0.5 * (ya.max() + ya.min())
    hw = plan.halfwidth(quad.mb_halfwidth(plan.tol, hbar, 0.5 * (ya.max() - ya.min())))

    def evaluate(level):
        # density grows by sqrt(2) per level: the N=3 cost is cubic in nodes
        g, wts = quad.line_rule(center, hw, plan.nodes_per_unit * 2 ** (level / 2))
        cost = _mb_cost(n, g.size)
        if cost > plan.budget:
            raise BudgetExceeded(f"{cost} evaluations exceed the cap {plan.budget}")
        val = mb_sum(ya, xa, hbar, depths, g, wts)
        return val, cost, 64 * quad.EPS * max(abs(val), 1.0)

    # the N=2 contour passes hbar/4 from a Gamma pole; its cost is linear, so
    # start where the panels resolve that distance
    start = 4 if n == 2 else 0
    value, err, used = quad.refine(evaluate, plan.tol, plan.budget, start=start)
    return QuadResult(value, err, used)


def phi_pair(d, u, hbar: float = 1.0, nodes_per_unit: int = 16, tol: float = 1e-13):
    """Phi_d(u) = phi_{(d/2, -d/2)}(-u/2, u/2) on the grid d x u.

    Any two-particle value follows from it by translation covariance:
    phi_y(x) = e^{i (y_1 + y_2)(x_1 + x_2) / (2 hbar)} Phi_{y_1 - y_2}(x_2 - x_1).
    For u >= 0 the contour runs at depth hbar/2 below the real axis.  For
    u < 0 it is lifted to hbar/2 above, past the two poles at w = +-d/2, whose
    residues are plane waves; the remaining contour integral decays like
    e^{u/2}.  Returns a (len(d), len(u)) complex array.
    """
    d = np.atleast_1d(np.asarray(d, dtype=float))
    u = np.atleast_1d(np.asarray(u, dtype=float))
    lh = math.log(hbar)
    hw = quad.mb_halfwidth(tol, hbar, 0.5 * float(np.abs(d).max()))
    g, wts = quad.line_rule(0.0, hw, nodes_per_unit)
    out = np.zeros((d.size, u.size), dtype=complex)
    # residue branch is ill-conditioned as the two poles merge at d = 0
    near = np.abs(d) < 1e-3 * hbar
    neg = u < 0

    def contour(rows, cols, beta):
        if not rows.any() or not cols.any():
            return
        w = g + 1j * beta
        dd = d[rows, None]
        lw = (loggamma((0.5 * dd - w) / (1j * hbar)) + loggamma((-0.5 * dd - w) / (1j * hbar))
              + (2j / hbar) * lh * w)
        a = np.exp(lw) * wts
        out[np.ix_(rows, cols)] += (a @ np.exp(-1j * np.outer(w, u[cols]) / hbar)) / (2 * math.pi * hbar)

    beta = 0.5 * hbar
    contour(np.ones(d.size, bool), ~neg, -beta)
    contour(near, neg, -beta)
    # the lifted integral is below e^{-40} for u < -80 hbar
    contour(~near, neg & (u > -80 * hbar), beta)
    far = ~near
    if far.any() and neg.any():
        df = d[far, None]
        un = u[None, neg]
        r1 = np.exp(loggamma(-df / (1j * hbar)) + 1j * df * lh / hbar - 0.5j * df * un / hbar)
        r2 = np.exp(loggamma(df / (1j * hbar)) - 1j * df * lh / hbar + 0.5j * df * un / hbar)
        out[np.ix_(far, neg)] += r1 + r2
    return out


def phi_two(y, X, hbar: float = 1.0, **kw):
    """phi_y(x) for one rapidity pair y at many points X (P, 2)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y1, y2 = float(y[0]), float(y[1])
    u = X[:, 1] - X[:, 0]
    base = phi_pair([y1 - y2], u, hbar, **kw)[0]
    return np.exp(0.5j * (y1 + y2) * X.sum(axis=1) / hbar) * base


# ---------------------------------------------------------------- Gauss-Givental


def _prune_threshold(tol, vol):
    return 1e-3 * tol / max(vol, 1.0)


def gg_values(ys, X, hbar: float, step: float, halfwidth: float, tol: float,
              budget: int, counter: list | None = None):
    """Pyramid integral Lambda_{ys[0]} Lambda_{ys[1]} ... at the points X (P, n).

    Inner variables z_j are laid on per-point trapezoid grids centered at
    (x_j + x_{j+1})/2 with half-width |x_j - x_{j+1}|/2 + ``halfwidth``.
    """
    X = np.asarray(X, dtype=float)
    p, n = X.shape
    if n == 1:
        return np.exp(1j * ys[0] * X[:, 0] / hbar)
    m = n - 1
    gap = np.abs(X[:, :-1] - X[:, 1:]) / 2
    k = int(math.ceil((gap.max() + halfwidth) / step))
    t = step * np.arange(-k, k + 1)
    offs = np.stack(np.meshgrid(*([t] * m), indexing="ij"), axis=-1).reshape(-1, m)
    nt = offs.shape[0]
    if counter is not None:
        counter[0] += p * nt
        if counter[0] > budget:
            raise BudgetExceeded(f"more than {budget} kernel evaluations")
    centers = 0.5 * (X[:, :-1] + X[:, 1:])
    Z = centers[:, None, :] + offs[None, :, :]
    lk = log_lambda(ys[0], X[:, None, :], Z, hbar)  # (p, nt)
    mod = lk.real
    peak = mod.max(axis=1, keepdims=True)
    vol = step**m * nt
    keep = mod - peak > math.log(_prune_threshold(tol, vol))
    rows, cols = np.nonzero(keep)
    inner = gg_values(ys[1:], Z[rows, cols], hbar, step, halfwidth, tol, budget, counter)
    vals = np.exp(lk[rows, cols]) * inner
    out = np.zeros(p, dtype=complex)
    np.add.at(out, rows, vals)
    return out * step**m


LATTICE_CHUNK = 2_000_000


def gg_lattice(ys, X, hbar: float, step: float, halfwidth: float, tol: float,
               budget: int, counter: list | None = None):
    """Pyramid integral with every inner variable on the fixed lattice step*Z.

    By translation covariance phi(tau) = e^{i tau_1 sum(y) / hbar} phi(0, tau - tau_1),
    so an inner layer is only needed at distinct integer difference vectors,
    which are deduplicated before recursing.  Used for N >= 4.
    """
    X = np.asarray(X, dtype=float)
    p, n = X.shape
    if n == 1:
        return np.exp(1j * ys[0] * X[:, 0] / hbar)
    m = n - 1
    gap = np.abs(X[:, :-1] - X[:, 1:]) / 2
    k = int(math.ceil((gap.max() + halfwidth) / step))
    t = np.arange(-k, k + 1)
    offs = np.stack(np.meshgrid(*([t] * m), indexing="ij"), axis=-1).reshape(-1, m)
    nt = offs.shape[0]
    if counter is not None:
        counter[0] += p * nt
        if counter[0] > budget:
            raise BudgetExceeded(f"more than {budget} kernel evaluations")
    anchor = np.rint(0.5 * (X[:, :-1] + X[:, 1:]) / step).astype(np.int64)
    vol = step**m * nt
    cut = math.log(_prune_threshold(tol, vol))
    rows, zint, weights = [], [], []
    chunk = max(1, LATTICE_CHUNK // nt)
    for lo in range(0, p, chunk):
        zi = anchor[lo:lo + chunk, None, :] + offs[None, :, :]
        lk = log_lambda(ys[0], X[lo:lo + chunk, None, :], step * zi, hbar)
        keep = lk.real - lk.real.max(axis=1, keepdims=True) > cut
        r, c = np.nonzero(keep)
        rows.append(r + lo)
        zint.append(zi[r, c])
        weights.append(np.exp(lk[r, c]))
    rows = np.concatenate(rows)
    zint = np.concatenate(zint)
    vals = np.concatenate(weights)
    rest = ys[1:]
    if m == 1:
        inner = np.exp(1j * rest[0] * step * zint[:, 0] / hbar)
    else:
        diffs, where = np.unique(zint[:, 1:] - zint[:, :1], axis=0, return_inverse=True)
        pts = np.concatenate([np.zeros((diffs.shape[0], 1)), step * diffs], axis=1)
        base = gg_lattice(rest, pts, hbar, step, halfwidth, tol, budget, counter)
        inner = np.exp(1j * sum(rest) * step * zint[:, 0] / hbar) * base[np.ravel(where)]
    out = np.zeros(p, dtype=complex)
    np.add.at(out, rows, vals * inner)
    return out * step**m


def _gg_plan(plan, n):
    return plan or ContourPlan(tol=default_tol(n))


def phi_gg_batch(ys, X, hbar: float, plan: ContourPlan | None = None):
    """Pyramid evaluation at many points; returns (values, err, nodes)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    n = X.shape[1]
    plan = _gg_plan(plan, n)
    ys = tuple(float(v) for v in ys)
    if n == 1:
        return np.exp(1j * ys[0] * X[:, 0] / hbar), 0.0, X.shape[0]
    hw = plan.halfwidth(quad.gg_halfwidth(plan.tol, hbar))
    h0 = 2.0 / plan.nodes_per_unit
    counter = [0]
    rule = gg_lattice if n >= 4 else gg_values
    prev = rule(ys, X, hbar, h0, hw, plan.tol, plan.budget, counter)
    diff = np.inf
    for level in range(1, quad.MAX_DOUBLINGS + 1):
        cur = rule(ys, X, hbar, h0 / 2**level, hw, plan.tol, plan.budget, counter)
        diff = float(np.abs(cur - prev).max())
        prev = cur
        if diff <= plan.tol or counter[0] * 3 > plan.budget:
            break
    if diff > 10 * plan.tol:
        raise NonConvergence(f"pyramid refinements disagree by {diff:.3e}")
    noise = 64 * quad.EPS * float(np.abs(prev).max(initial=1.0))
    return prev, max(diff, noise), counter[0]


def phi_gg(y: Rapidities, x: Positions, plan: ContourPlan | None = None) -> QuadResult:
    """Gauss-Givental pyramid Lambda_{y_1} ... Lambda_{y_N} evaluated at x."""
    _check(y, x)
    vals, err, used = phi_gg_batch(y.y, x.array()[None, :], y.hbar, plan)
    return QuadResult(complex(vals[0]), err, used)


def phi_gg_recursive(y: Rapidities, x: Positions, plan: ContourPlan | None = None,
                     outer: str = "last") -> QuadResult:
    """phi_y(x) = int Lambda^{(N)}_{y_out}(x|tau) phi_{rest}(tau) dtau.

    ``outer="last"`` puts y_N on the outer layer, ``"first"`` puts y_1 there.
    The inner function is evaluated once on a fixed tensor grid anchored at
    zero; the coarse estimate reuses every other node of that grid.
    """
    _check(y, x)
    n, hbar = y.n, y.hbar
    plan = _gg_plan(plan, n)
    xa = x.array()
    if n == 1:
        return QuadResult(complex(phi_base(y.y[0], xa[0], y.params)), 0.0, 1)
    if outer == "last":
        y_out, rest = y.y[-1], y.y[:-1]
    elif outer == "first":
        y_out, rest = y.y[0], y.y[1:]
    else:
        raise ValueError("outer must be 'first' or 'last'")
    hw = plan.halfwidth(quad.gg_halfwidth(plan.tol, hbar))
    h0 = 2.0 / plan.nodes_per_unit
    m = n - 1
    lo = np.minimum(xa[:-1], xa[1:]) - hw
    hi = np.maximum(xa[:-1], xa[1:]) + hw
    prev = None
    diff = np.inf
    used = 0
    for level in range(1, quad.MAX_DOUBLINGS + 1):
        h = h0 / 2**level
        axes = [h * np.arange(math.floor(a / (2 * h)) * 2, math.ceil(b / (2 * h)) * 2 + 1)
                for a, b in zip(lo, hi)]
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
        shape = grid.shape[:-1]
        pts = grid.reshape(-1, m)
        lk = log_lambda(y_out, xa[None, :], pts, hbar)
        keep = lk.real - lk.real.max() > math.log(_prune_threshold(plan.tol, h**m * pts.shape[0]))
        inner = np.zeros(pts.shape[0], dtype=complex)
        vals, _, nodes = phi_gg_batch(rest, pts[keep], hbar, plan)
        inner[keep] = vals
        used += nodes + pts.shape[0]
        if used > plan.budget:
            raise BudgetExceeded(f"more than {plan.budget} kernel evaluations")
        integrand = (np.exp(lk) * inner).reshape(shape)
        fine = complex(integrand.sum()) * h**m
        # every other node along each axis gives the step-2h rule on the same grid
        coarse = complex(integrand[(slice(None, None, 2),) * m].sum()) * (2 * h) ** m
        diff = abs(fine - coarse)
        if prev is not None:
            diff = min(diff, abs(fine - prev))
        prev = fine
        if diff <= plan.tol:
            break
    if diff > 10 * plan.tol:
        raise NonConvergence(f"recursive refinements disagree by {diff:.3e}")
    return QuadResult(prev, max(diff, 64 * quad.EPS), used)


def decay_envelope(x, params: ChainParams) -> float:
    """prod_n exp(-(1/hbar) e^{(x_{n+1} - x_n)/2})."""
    x = np.asarray(x, dtype=float)
    d = x[..., 1:] - x[..., :-1]
    val = np.exp(-np.exp(d / 2).sum(axis=-1) / params.hbar)
    return val if np.ndim(val) else float(val)


def log_decay_envelope(x, params: ChainParams):
    x = np.asarray(x, dtype=float)
    return -np.exp((x[..., 1:] - x[..., :-1]) / 2).sum(axis=-1) / params.hbar

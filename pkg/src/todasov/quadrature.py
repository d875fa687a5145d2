"""Quadrature on horizontal contours and on double-exponentially decaying lines.

Integrands are called with numpy arrays of nodes and must return arrays of
the same shape (scalar callables are vectorized as a fallback). All rules are
refined by doubling the node density until two successive values agree to
``plan.tol``; the reported error is that difference plus a roundoff floor.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from .errors import BudgetExceeded, NonConvergence, PreconditionViolated

DEFAULT_BUDGET = 20_000_000
GL_DEGREE = 16
MAX_DOUBLINGS = 6
EPS = np.finfo(float).eps


def default_budget() -> int:
    env = os.environ.get("TODA_SOV_BUDGET")
    if env:
        return int(float(env))
    return DEFAULT_BUDGET


@dataclass(frozen=True)
class ContourPlan:
    """Contour depths (in units of hbar), windows, node density and tolerance."""

    offsets: tuple = ()
    window_halfwidth: float | str = "auto"
    nodes_per_unit: int = 4
    tol: float = 1e-10
    max_evals: int | None = None

    def __post_init__(self):
        offs = tuple(float(a) for a in self.offsets)
        object.__setattr__(self, "offsets", offs)
        if any(a <= 0 for a in offs) or any(b <= a for a, b in zip(offs, offs[1:])):
            raise PreconditionViolated(f"offsets must be positive and strictly increasing: {offs}")
        if self.window_halfwidth != "auto" and not float(self.window_halfwidth) > 0:
            raise PreconditionViolated("window_halfwidth must be positive or 'auto'")
        if int(self.nodes_per_unit) < 1:
            raise PreconditionViolated("nodes_per_unit must be a positive integer")
        if not self.tol > 0:
            raise PreconditionViolated("tol must be positive")

    @property
    def budget(self) -> int:
        return self.max_evals if self.max_evals is not None else default_budget()

    def depths(self, n_layers: int, hbar: float) -> tuple:
        """Absolute contour depths alpha_1 < ... for ``n_layers`` MB layers."""
        if not self.offsets:
            # one layer: hbar/4; deeper stacks need wider gaps between layers
            # because the cross-layer Gamma poles sit that far off each contour
            step = 0.25 if n_layers <= 1 else 0.5
            return tuple(s * hbar * step for s in range(1, n_layers + 1))
        if len(self.offsets) < n_layers:
            raise PreconditionViolated(f"need {n_layers} offsets, plan has {len(self.offsets)}")
        return tuple(a * hbar for a in self.offsets[:n_layers])

    def halfwidth(self, auto: float) -> float:
        return auto if self.window_halfwidth == "auto" else float(self.window_halfwidth)

    def replace(self, **changes) -> "ContourPlan":
        return replace(self, **changes)


@dataclass(frozen=True)
class QuadResult:
    value: complex
    abs_err_est: float
    nodes_used: int


def mb_halfwidth(tol: float, hbar: float = 1.0, extent: float = 0.0) -> float:
    """Auto window for Gamma-weighted contour layers (decay e^{-pi|w|/hbar})."""
    return extent + 2.0 + (hbar / math.pi) * math.log(1.0 / tol)


def gg_halfwidth(tol: float, hbar: float = 1.0, extent: float = 0.0) -> float:
    """Auto window for exp(-e^{|t|}/hbar) integrands."""
    return extent + max(math.log(hbar * math.log(1.0 / tol)), 0.0) + 4.0


@lru_cache(maxsize=None)
def _leggauss(degree: int):
    return np.polynomial.legendre.leggauss(degree)


def gl_panels(a: float, b: float, n_panels: int, degree: int = GL_DEGREE):
    """Composite Gauss-Legendre nodes and weights on [a, b]."""
    x, w = _leggauss(degree)
    edges = np.linspace(a, b, n_panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def line_rule(center: float, halfwidth: float, nodes_per_unit: float, degree: int = GL_DEGREE):
    n_panels = max(1, math.ceil(2.0 * halfwidth * nodes_per_unit / degree))
    return gl_panels(center - halfwidth, center + halfwidth, n_panels, degree)


def trapezoid_rule(center: float, halfwidth: float, step: float):
    k = math.ceil(halfwidth / step)
    nodes = center + step * np.arange(-k, k + 1)
    return nodes, np.full(nodes.size, step)


def tensor_rule(nodes, weights, dim: int):
    """d-fold tensor product of a 1-D rule: points (M^d, d), weights (M^d,)."""
    if dim == 0:
        return np.zeros((1, 0), dtype=nodes.dtype), np.ones(1)
    grids = np.meshgrid(*([nodes] * dim), indexing="ij")
    wgrids = np.meshgrid(*([weights] * dim), indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=-1)
    wts = np.prod(np.stack([g.ravel() for g in wgrids], axis=-1), axis=-1)
    return pts, wts


def _call(f, x):
    vals = np.asarray(f(x))
    if vals.shape != np.shape(x):
        vals = np.array([f(xi) for xi in np.ravel(x)]).reshape(np.shape(x))
    return vals.astype(complex, copy=False)


def refine(evaluate, tol: float, budget: int, start: int = 0):
    """Run ``evaluate(level)`` at increasing levels until successive values agree.

    ``evaluate`` returns ``(value, n_evals, noise)`` where ``noise`` is a
    roundoff/tail floor. Each level is expected to double the node density.
    Returns ``(value, err, nodes_used)``.
    """
    value, used, noise = evaluate(start)
    if used > budget:
        raise BudgetExceeded(f"{used} evaluations exceed the cap {budget}")
    level = start
    diff = math.inf
    while level < start + MAX_DOUBLINGS:
        level += 1
        new, n, noise = evaluate(level)
        used += n
        diff = abs(new - value)
        value = new
        if diff <= tol:
            break
        if used * 3 > budget:
            break
    if diff > 10 * tol:
        raise NonConvergence(f"refinements disagree by {diff:.3e} (tol {tol:.1e})")
    return value, max(diff, noise), used


def integrate_line(f, shift: float, plan: ContourPlan, center: float = 0.0,
                   decay: float = math.pi, extent: float = 0.0) -> QuadResult:
    """Integrate ``f`` along ``R + i*shift``.

    ``decay`` is the exponential rate c in |f(w)| ~ e^{-c|Re w - center|}; the
    auto window is ``extent + 2 + ln(1/tol)/c`` around ``center``.
    """
    hw = plan.halfwidth(extent + 2.0 + math.log(1.0 / plan.tol) / decay)

    def evaluate(level):
        g, wts = line_rule(center, hw, plan.nodes_per_unit * 2**level)
        vals = _call(f, g + 1j * shift)
        terms = wts * vals
        tail = (abs(vals[0]) + abs(vals[-1])) / decay
        return complex(terms.sum()), g.size, 4 * EPS * float(np.abs(terms).sum()) + tail

    value, err, used = refine(evaluate, plan.tol, plan.budget)
    return QuadResult(value, err, used)


def integrate_de(f, center: float, plan: ContourPlan, hbar: float = 1.0,
                 extent: float = 0.0) -> QuadResult:
    """Integrate a double-exponentially decaying ``f`` over the real line.

    The integrand already decays like exp(-c e^{|t - center|}), so the plain
    trapezoid rule on the native axis converges geometrically in 1/h.
    Successive halvings reuse the previous nodes.
    """
    hw = plan.halfwidth(gg_halfwidth(plan.tol, hbar, extent))
    h0 = 2.0 / plan.nodes_per_unit
    state = {}

    def evaluate(level):
        h = h0 / 2**level
        k = math.ceil(hw / h0) * 2**level
        if level == 0:
            t = center + h * np.arange(-k, k + 1)
            vals = _call(f, t)
            state["sum"] = complex(vals.sum())
            state["abs"] = float(np.abs(vals).sum())
            state["edge"] = abs(vals[0]) + abs(vals[-1])
            n = t.size
        else:
            t = center + h * (2 * np.arange(-k // 2, k // 2) + 1)
            vals = _call(f, t)
            state["sum"] += complex(vals.sum())
            state["abs"] += float(np.abs(vals).sum())
            n = t.size
        noise = 4 * EPS * h * state["abs"] + h * state["edge"]
        return h * state["sum"], n, noise

    value, err, used = refine(evaluate, plan.tol, plan.budget)
    return QuadResult(value, err, used)


@dataclass
class Layer:
    """One integration layer for ``integrate_iterated``.

    ``factory(outer)`` receives the outer variables as an array (P, D_outer),
    outermost layer first, and returns a callable mapping this layer's nodes
    (M, dim) to values (P, M).  ``opts["window"] = (lo, hi)`` fixes the
    window of a "gl" layer, for integrands that decay at different rates on
    the two sides.
    """

    dim: int
    factory: object
    shift: float = 0.0
    center: float = 0.0
    decay: float = math.pi
    extent: float = 0.0
    rule: str = "gl"
    hbar: float = 1.0
    opts: dict = field(default_factory=dict)


def _as_layer(spec) -> Layer:
    if isinstance(spec, Layer):
        return spec
    dim, factory, shift, *rest = spec
    kw = rest[0] if rest else {}
    return Layer(dim, factory, shift, **kw)


def _layer_rule(layer: Layer, plan: ContourPlan, level: int):
    window = layer.opts.get("window")
    if layer.rule == "gl" and window is not None:
        lo, hi = window
        g, w = line_rule(0.5 * (lo + hi), 0.5 * (hi - lo), plan.nodes_per_unit * 2**level)
        g = g + 1j * layer.shift
    elif layer.rule == "gl":
        hw = plan.halfwidth(layer.extent + 2.0 + math.log(1.0 / plan.tol) / layer.decay)
        g, w = line_rule(layer.center, hw, plan.nodes_per_unit * 2**level)
        g = g + 1j * layer.shift
    elif layer.rule == "trapezoid":
        hw = plan.halfwidth(gg_halfwidth(plan.tol, layer.hbar, layer.extent))
        g, w = trapezoid_rule(layer.center, hw, 2.0 / plan.nodes_per_unit / 2**level)
        g = g + 1j * layer.shift
    else:
        raise ValueError(f"unknown rule {layer.rule!r}")
    return g, w


def integrate_iterated(layers, plan: ContourPlan) -> QuadResult:
    """Nested tensor-product quadrature; ``layers`` are ordered innermost-first."""
    outer_first = [_as_layer(s) for s in reversed(list(layers))]

    def evaluate(level):
        lines = [_layer_rule(layer, plan, level) for layer in outer_first]
        total = math.prod(g.size ** layer.dim for (g, _), layer in zip(lines, outer_first))
        if total > plan.budget:
            raise BudgetExceeded(f"{total} evaluations exceed the cap {plan.budget}")
        rules = [tensor_rule(g, w, layer.dim) for (g, w), layer in zip(lines, outer_first)]

        def nest(idx, outer):
            pts, wts = rules[idx]
            vals = np.asarray(outer_first[idx].factory(outer)(pts), dtype=complex)
            vals = np.broadcast_to(vals, (outer.shape[0], pts.shape[0]))
            if idx + 1 < len(rules):
                p, m = outer.shape[0], pts.shape[0]
                combined = np.concatenate(
                    [np.repeat(outer, m, axis=0), np.tile(pts, (p, 1))], axis=1)
                vals = vals * nest(idx + 1, combined).reshape(p, m)
            return vals @ wts

        value = complex(nest(0, np.zeros((1, 0), dtype=complex))[0])
        return value, total, 8 * EPS * abs(value)

    value, err, used = refine(evaluate, plan.tol, plan.budget)
    return QuadResult(value, err, used)

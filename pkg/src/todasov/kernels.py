"""Integral kernels and spectral densities of the open Toda chain.

All kernels are products of the elementary factor

    V_{lam;+-}(x) = exp(-e^{+-x}/hbar + i lam x / (2 hbar))

and are evaluated as exp(sum of logs). Position arguments broadcast over
leading axes; the last axis indexes particles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import permutations

import numpy as np

from .errors import DimensionMismatch, PoleError, PreconditionViolated
from .gammaplex import LogComplex, loggamma
from ._gamma_py import is_pole


@dataclass(frozen=True)
class ChainParams:
    hbar: float = 1.0
    n: int = 1

    def __post_init__(self):
        if not self.hbar > 0:
            raise PreconditionViolated("hbar must be positive")
        if int(self.n) < 1:
            raise PreconditionViolated("n must be at least 1")


@dataclass(frozen=True)
class KernelPoint:
    spectral: complex
    outer: tuple
    inner: tuple


def _sign(sign) -> int:
    if sign in (1, "+", "plus"):
        return 1
    if sign in (-1, "-", "minus"):
        return -1
    raise ValueError(f"sign must be +1 or -1, got {sign!r}")


def log_v(lam, sign, x, hbar: float):
    s = _sign(sign)
    x = np.asarray(x)
    return -np.exp(s * x) / hbar + 1j * lam * x / (2.0 * hbar)


def v_kernel(lam, sign, x, params: ChainParams):
    return np.exp(log_v(lam, sign, x, params.hbar))


def _vec(a, name):
    a = np.asarray(a, dtype=float)
    if a.ndim == 0:
        a = a[None]
    return a


def log_q(lam, x, xp, hbar):
    n = x.shape[-1]
    wrap = np.roll(xp, 1, axis=-1)  # x'_{n-1}, with x'_0 := x'_N
    return (log_v(lam, -1, x - xp, hbar) + log_v(lam, 1, x - wrap, hbar)).sum(axis=-1)


def q_kernel(lam, x, xp, params: ChainParams):
    """Gaudin-Pasquier kernel prod_n V_{lam;-}(x_n - x'_n) V_{lam;+}(x_n - x'_{n-1}).

    The index n-1 at n=1 wraps to x'_N.
    """
    x, xp = _vec(x, "x"), _vec(xp, "xp")
    if x.shape[-1] != xp.shape[-1]:
        raise DimensionMismatch(f"q_kernel needs equal lengths, got {x.shape[-1]} and {xp.shape[-1]}")
    return np.exp(log_q(lam, x, xp, params.hbar))


def log_lambda(y, x, tau, hbar):
    n = x.shape[-1]
    out = 1j * y * (x[..., 0] + x[..., -1]) / (2.0 * hbar)
    if n == 1:
        return out
    out = out + log_v(y, -1, x[..., :-1] - tau, hbar).sum(axis=-1)
    out = out + log_v(y, 1, x[..., 1:] - tau, hbar).sum(axis=-1)
    return out


def _check_lambda(x, tau):
    if x.shape[-1] != tau.shape[-1] + 1:
        raise DimensionMismatch(
            f"kernel needs len(x) = len(tau) + 1, got {x.shape[-1]} and {tau.shape[-1]}")


def lambda_kernel(y, x, tau, params: ChainParams):
    """Lambda^{(N)}_y(x|tau) with x of length N and tau of length N-1."""
    x = _vec(x, "x")
    tau = np.asarray(tau, dtype=float)
    if tau.ndim == 0:
        tau = tau[None]
    _check_lambda(x, tau)
    return np.exp(log_lambda(y, x, tau, params.hbar))


def log_lambda_bar(y, tau, x, hbar):
    n = x.shape[-1]
    out = -1j * y * (x[..., 0] + x[..., -1]) / (2.0 * hbar)
    if n == 1:
        return out
    out = out + log_v(-y, -1, x[..., :-1] - tau, hbar).sum(axis=-1)
    out = out + log_v(-y, 1, x[..., 1:] - tau, hbar).sum(axis=-1)
    return out


def lambda_bar_kernel(y, tau, x, params: ChainParams):
    """Conjugate kernel bar-Lambda^{(N)}_y(tau|x)."""
    x = _vec(x, "x")
    tau = np.asarray(tau, dtype=float)
    if tau.ndim == 0:
        tau = tau[None]
    _check_lambda(x, tau)
    return np.exp(log_lambda_bar(y, tau, x, params.hbar))


def log_l(y, x, tau, hbar):
    out = 1j * y * (x[..., 0] - tau[..., -1]) / (2.0 * hbar)
    out = out + log_v(y, -1, x - tau, hbar).sum(axis=-1)
    if x.shape[-1] > 1:
        out = out + log_v(y, 1, x[..., 1:] - tau[..., :-1], hbar).sum(axis=-1)
    return out


def l_kernel(y, x, tau, params: ChainParams):
    """L^{(N-1)}_y(x|tau); x and tau both of length N-1."""
    x, tau = _vec(x, "x"), _vec(tau, "tau")
    if x.shape[-1] != tau.shape[-1]:
        raise DimensionMismatch(f"l_kernel needs equal lengths, got {x.shape[-1]} and {tau.shape[-1]}")
    return np.exp(log_l(y, x, tau, params.hbar))


def log_mb_weight(w, y, hbar):
    """Log of the Mellin-Barnes weight, vectorized over leading axes of ``w``.

    w: (..., n) complex, y: (n+1,) complex. Denominator poles give -inf.
    """
    w = np.asarray(w, dtype=complex)
    y = np.asarray(y, dtype=complex)
    n = w.shape[-1]
    diff = (y[None, :] - w[..., :, None]) / (1j * hbar)
    out = loggamma(diff).sum(axis=(-1, -2))
    out = out + (1j / hbar) * math.log(hbar) * ((n + 1) * w.sum(axis=-1) - n * y.sum())
    if n > 1:
        dw = (w[..., None, :] - w[..., :, None]) / (1j * hbar)
        a, b = np.nonzero(~np.eye(n, dtype=bool))
        out = out - loggamma(dw[..., a, b]).sum(axis=-1)
    return out


def mb_weight(w, y, params: ChainParams) -> LogComplex:
    """varpi(w_N | y_{N+1}) as a LogComplex."""
    w = np.atleast_1d(np.asarray(w, dtype=complex))
    y = np.atleast_1d(np.asarray(y, dtype=complex))
    if y.size != w.size + 1:
        raise DimensionMismatch(f"mb_weight needs len(y) = len(w) + 1, got {w.size}, {y.size}")
    num = (y[None, :] - w[:, None]) / (1j * params.hbar)
    if is_pole(num).any():
        raise PoleError("numerator Gamma of the weight at a pole")
    val = complex(log_mb_weight(w, y, params.hbar))
    if math.isinf(val.real) and val.real < 0:
        return LogComplex.zero()
    return LogComplex.from_log(val)


def log_sklyanin(y, hbar):
    """log mu(y) (real part meaningful); -inf on diagonals. y: (..., N)."""
    y = np.asarray(y, dtype=float)
    n = y.shape[-1]
    out = np.full(y.shape[:-1], -n * math.log(2.0 * math.pi * hbar), dtype=complex)
    if n > 1:
        a, b = np.nonzero(~np.eye(n, dtype=bool))
        d = (y[..., a] - y[..., b]) / (1j * hbar)
        out = out - loggamma(d).sum(axis=-1)
    return out


def sklyanin_density(y, params: ChainParams):
    """mu(y) = (2 pi hbar)^{-N} prod_{k != p} 1/Gamma((y_k - y_p)/(i hbar))."""
    val = np.exp(log_sklyanin(y, params.hbar)).real
    return val if np.ndim(val) else float(val)


def mu_tilde_density(w, params: ChainParams):
    w = np.asarray(w, dtype=float)
    val = np.exp(log_sklyanin(w, params.hbar).real + (math.pi / params.hbar) * w.sum(axis=-1))
    return val if np.ndim(val) else float(val)


def symmetrize(f, n: int):
    """Average a function of the last axis over all permutations of it."""
    perms = list(permutations(range(n)))

    def g(y):
        y = np.asarray(y)
        return sum(f(y[..., list(p)]) for p in perms) / len(perms)

    return g

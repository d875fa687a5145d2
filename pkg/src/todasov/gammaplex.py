"""Complex Gamma function and Gamma products in log space.

The array routine ``loggamma`` comes from the compiled ``_core`` extension when
it is importable, otherwise from the numpy implementation in ``_gamma_py``.
Set ``TODA_SOV_PURE=1`` to force the fallback.
"""

from __future__ import annotations

import cmath
import math
import os
from dataclasses import dataclass, field

import numpy as np

from . import _gamma_py
from .errors import PoleError

_loggamma_py = _gamma_py.loggamma

try:
    if os.environ.get("TODA_SOV_PURE", "") not in ("", "0"):
        raise ImportError("pure mode requested")
    from ._core import loggamma as _loggamma_c
except ImportError:
    _loggamma_c = None

BACKEND = "compiled" if _loggamma_c is not None else "numpy"
_active = _loggamma_c if _loggamma_c is not None else _loggamma_py

POLE_TOL = _gamma_py.POLE_TOL
TWO_PI = 2.0 * math.pi


def available_backends():
    return ["compiled", "numpy"] if _loggamma_c is not None else ["numpy"]


def set_backend(name: str) -> None:
    """Switch the array log-Gamma implementation ("compiled" or "numpy")."""
    global BACKEND, _active
    if name == "compiled":
        if _loggamma_c is None:
            raise ImportError("compiled core is not built")
        _active = _loggamma_c
    elif name == "numpy":
        _active = _loggamma_py
    else:
        raise ValueError(f"unknown backend {name!r}")
    BACKEND = name


def loggamma(z):
    """Vectorized complex log Gamma. Poles give ``inf``; any log branch."""
    return _active(z)


def rgamma(z):
    """Vectorized 1/Gamma(z); exact zeros at the poles."""
    return np.exp(-_active(z))


def wrap_phase(phase: float) -> float:
    p = math.remainder(phase, TWO_PI)
    return math.pi if p == -math.pi else p


@dataclass(frozen=True)
class LogComplex:
    """A complex number stored as (log-modulus, phase); ``log_mod=-inf`` is zero."""

    log_mod: float
    phase: float = 0.0

    def __post_init__(self):
        if math.isinf(self.log_mod) and self.log_mod < 0:
            object.__setattr__(self, "phase", 0.0)
        else:
            object.__setattr__(self, "phase", wrap_phase(float(self.phase)))

    @classmethod
    def zero(cls) -> "LogComplex":
        return cls(-math.inf, 0.0)

    @classmethod
    def from_log(cls, w: complex) -> "LogComplex":
        w = complex(w)
        return cls(w.real, w.imag)

    @classmethod
    def from_complex(cls, z: complex) -> "LogComplex":
        z = complex(z)
        if z == 0:
            return cls.zero()
        return cls(math.log(abs(z)), math.atan2(z.imag, z.real))  # cmath.phase raises on underflow

    @property
    def is_zero(self) -> bool:
        return self.log_mod == -math.inf

    def to_complex(self) -> complex:
        if self.is_zero:
            return 0j
        return cmath.rect(math.exp(self.log_mod), self.phase)

    def log(self) -> complex:
        return complex(self.log_mod, self.phase)

    def conjugate(self) -> "LogComplex":
        return LogComplex(self.log_mod, -self.phase if self.phase != math.pi else math.pi)

    def __mul__(self, other: "LogComplex") -> "LogComplex":
        if self.is_zero or other.is_zero:
            return LogComplex.zero()
        return LogComplex(self.log_mod + other.log_mod, self.phase + other.phase)

    def __truediv__(self, other: "LogComplex") -> "LogComplex":
        if other.is_zero:
            raise ZeroDivisionError("division by a zero LogComplex")
        if self.is_zero:
            return LogComplex.zero()
        return LogComplex(self.log_mod - other.log_mod, self.phase - other.phase)


def log_gamma(z: complex) -> LogComplex:
    """log Gamma(z) as a LogComplex with principal phase.

    Raises PoleError within 1e-12 of 0, -1, -2, ...
    """
    z = complex(z)
    if _gamma_py.is_pole(z):
        raise PoleError(f"Gamma pole at z={z}")
    return LogComplex.from_log(complex(_active(np.array([z]))[0]))


@dataclass(frozen=True)
class GammaProductSpec:
    numerators: tuple = field(default_factory=tuple)
    denominators: tuple = field(default_factory=tuple)


def eval_product(spec: GammaProductSpec) -> LogComplex:
    """prod Gamma(num) / prod Gamma(den); a denominator pole gives the zero marker."""
    num = np.asarray(spec.numerators, dtype=complex).ravel()
    den = np.asarray(spec.denominators, dtype=complex).ravel()
    if num.size and _gamma_py.is_pole(num).any():
        raise PoleError("numerator Gamma at a pole")
    if den.size and _gamma_py.is_pole(den).any():
        return LogComplex.zero()
    ln = _active(num) if num.size else np.zeros(0, complex)
    ld = _active(den) if den.size else np.zeros(0, complex)
    # fsum is exactly rounded, so the result does not depend on argument order
    re = math.fsum(ln.real) - math.fsum(ld.real)
    im = math.fsum(ln.imag) - math.fsum(ld.imag)
    return LogComplex(re, im)

"""Vectorized numpy complex log-Gamma, used when the compiled core is absent.

Algorithm (mirrored exactly by ``_core.pyx``):

* ``Re z < 1/2``: reflection ``log G(z) = log pi - log sin(pi z) - log G(1 - z)``
  with an overflow-free ``log sin``.
* ``|z| >= 8`` after reflection: Stirling series with 10 Bernoulli terms.
* otherwise: Lanczos sum with g = 7, nine coefficients.

Poles return ``inf + 0j`` so that ``exp(-loggamma(z))`` gives the exact zero
of ``1/Gamma``.
"""

import numpy as np

LANCZOS_G = 7.0
LANCZOS_COEF = np.array([
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
])

# B_{2k} / (2k (2k - 1)), k = 1..10
STIRLING_COEF = np.array([
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360360.0,
    1.0 / 156.0,
    -3617.0 / 122400.0,
    43867.0 / 244188.0,
    -174611.0 / 125400.0,
])

STIRLING_RADIUS = 8.0
POLE_TOL = 1e-12
HALF_LOG_2PI = 0.5 * np.log(2.0 * np.pi)
LOG_PI = np.log(np.pi)


def _stirling(z):
    w = 1.0 / z
    w2 = w * w
    s = np.zeros_like(z)
    for c in STIRLING_COEF[::-1]:
        s = s * w2 + c
    return (z - 0.5) * np.log(z) - z + HALF_LOG_2PI + s * w


def _lanczos(z):
    zm = z - 1.0
    acc = np.full_like(z, LANCZOS_COEF[0])
    for k in range(1, LANCZOS_COEF.size):
        acc = acc + LANCZOS_COEF[k] / (zm + k)
    t = zm + LANCZOS_G + 0.5
    return HALF_LOG_2PI + (zm + 0.5) * np.log(t) - t + np.log(acc)


def _right(z):
    out = np.empty_like(z)
    big = np.abs(z) >= STIRLING_RADIUS
    if big.any():
        out[big] = _stirling(z[big])
    small = ~big
    if small.any():
        out[small] = _lanczos(z[small])
    return out


def log_sin_pi(z):
    """log sin(pi z) without overflow for large |Im z| (some branch)."""
    w = np.pi * z
    out = np.empty_like(w)
    near = np.abs(w.imag) < 1.0
    if near.any():
        out[near] = np.log(np.sin(w[near]))
    up = ~near & (w.imag > 0)
    if up.any():
        wu = w[up]
        out[up] = -1j * wu + np.log1p(-np.exp(2j * wu)) + np.log(0.5j)
    dn = ~near & (w.imag < 0)
    if dn.any():
        wd = w[dn]
        out[dn] = 1j * wd + np.log1p(-np.exp(-2j * wd)) + np.log(-0.5j)
    return out


def is_pole(z):
    z = np.asarray(z, dtype=complex)
    re = z.real
    return (re < 0.5) & (np.abs(z - np.round(re)) < POLE_TOL)


def loggamma(z):
    """Complex log-Gamma of an array (any branch of the log; exp is exact)."""
    z = np.asarray(z, dtype=complex)
    shape = z.shape
    z = z.ravel()
    out = np.empty_like(z)
    pole = is_pole(z)
    refl = (z.real < 0.5) & ~pole
    right = ~refl & ~pole
    if right.any():
        out[right] = _right(z[right])
    if refl.any():
        zr = z[refl]
        out[refl] = LOG_PI - log_sin_pi(zr) - _right(1.0 - zr)
    out[pole] = np.inf
    return out.reshape(shape)

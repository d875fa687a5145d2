# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled complex log-Gamma; same algorithm as ``_gamma_py``."""

from libc.math cimport atan2, cos, cosh, exp, fabs, floor, hypot, log, log1p, sin, sinh, INFINITY

import numpy as np

cdef double LANCZOS_G = 7.0
cdef double[9] LANCZOS_COEF = [
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
]
cdef double[10] STIRLING_COEF = [
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
]
cdef double STIRLING_RADIUS = 8.0
cdef double POLE_TOL = 1e-12
cdef double PI = 3.141592653589793
cdef double HALF_LOG_2PI = 0.9189385332046728
cdef double LOG_PI = 1.1447298858494002


cdef inline double complex c_log(double complex z) noexcept nogil:
    return 0.5 * log(z.real * z.real + z.imag * z.imag) + 1j * atan2(z.imag, z.real)


cdef inline double complex c_inv(double complex z) noexcept nogil:
    cdef double d = 1.0 / (z.real * z.real + z.imag * z.imag)
    return z.real * d - 1j * (z.imag * d)


cdef inline double complex c_exp(double complex z) noexcept nogil:
    cdef double m = exp(z.real)
    return m * cos(z.imag) + 1j * (m * sin(z.imag))


cdef inline double complex c_sin(double complex z) noexcept nogil:
    return sin(z.real) * cosh(z.imag) + 1j * (cos(z.real) * sinh(z.imag))


cdef inline double complex c_log1p(double complex z) noexcept nogil:
    # |z| <= e^{-2} whenever this branch is used
    cdef double complex u
    if z.real * z.real + z.imag * z.imag < 1e-10:
        return z * (1.0 - z * (0.5 - z / 3.0))
    u = 1.0 + z
    return c_log(u) * z * c_inv(u - 1.0)


cdef inline double complex stirling(double complex z) noexcept nogil:
    cdef double complex w = c_inv(z)
    cdef double complex w2 = w * w
    cdef double complex s = 0.0
    cdef int k
    for k in range(9, -1, -1):
        s = s * w2 + STIRLING_COEF[k]
    return (z - 0.5) * c_log(z) - z + HALF_LOG_2PI + s * w


cdef inline double complex lanczos(double complex z) noexcept nogil:
    cdef double complex zm = z - 1.0
    cdef double complex acc = LANCZOS_COEF[0]
    cdef int k
    for k in range(1, 9):
        acc = acc + LANCZOS_COEF[k] * c_inv(zm + k)
    cdef double complex t = zm + LANCZOS_G + 0.5
    return HALF_LOG_2PI + (zm + 0.5) * c_log(t) - t + c_log(acc)


cdef inline double complex right_half(double complex z) noexcept nogil:
    if z.real * z.real + z.imag * z.imag >= STIRLING_RADIUS * STIRLING_RADIUS:
        return stirling(z)
    return lanczos(z)


cdef inline double complex log_sin_pi(double complex z) noexcept nogil:
    cdef double complex w = PI * z
    if fabs(w.imag) < 1.0:
        return c_log(c_sin(w))
    if w.imag > 0:
        return -1j * w + c_log1p(-c_exp(2j * w)) + c_log(0.5j)
    return 1j * w + c_log1p(-c_exp(-2j * w)) + c_log(-0.5j)


cdef inline double complex loggamma_one(double complex z) noexcept nogil:
    cdef double re = z.real
    cdef double n
    if re < 0.5:
        n = floor(re + 0.5)
        if hypot(re - n, z.imag) < POLE_TOL:
            return INFINITY
        return LOG_PI - log_sin_pi(z) - right_half(1.0 - z)
    return right_half(z)


def loggamma(z):
    """Complex log-Gamma of an array; poles map to ``inf + 0j``."""
    arr = np.ascontiguousarray(z, dtype=np.complex128)
    shape = arr.shape
    flat = arr.ravel()
    out = np.empty_like(flat)
    cdef double complex[::1] src = flat
    cdef double complex[::1] dst = out
    cdef Py_ssize_t i, n = flat.shape[0]
    with nogil:
        for i in range(n):
            dst[i] = loggamma_one(src[i])
    return out.reshape(shape)

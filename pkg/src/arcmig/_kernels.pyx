# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled Bessel-family kernels.

Scalar C loops mirroring `arcmig._kernels_py`: ascending series below x = 9,
the same series in 80-bit long double on [9, 18), Hankel asymptotic P/Q sums
for orders 0 and 1 from x = 18, and normalized downward (Miller) recurrence
for higher orders at x >= 9.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport ceil, cos, fabs, log, sin, sqrt
from libc.stdlib cimport free, malloc

cnp.import_array()

cdef extern from "math.h":
    long double logl(long double) nogil

cdef double PI = 3.14159265358979323846
cdef double EULER_GAMMA = 0.5772156649015328606
cdef double SERIES_CUT = 9.0
cdef double EXTENDED_CUT = 18.0

BACKEND_NAME = "compiled"

cdef long double _series_j_ld(int n, long double x) noexcept nogil:
    cdef long double half = x / 2.0
    cdef long double q = half * half
    cdef long double term = 1.0
    cdef long double total
    cdef int i, m
    for i in range(1, n + 1):
        term = term * half / i
    total = term
    for m in range(1, 200):
        term = -term * q / (m * (n + m))
        total += term
        if fabs(<double> term) <= 1e-25 * (fabs(<double> total) + 1e-30):
            break
    return total


cdef long double _series_y0_ld(long double x, long double j0val) noexcept nogil:
    cdef long double q = (x / 2.0) * (x / 2.0)
    cdef long double term = q
    cdef long double harmonic = 1.0
    cdef long double total = term * harmonic
    cdef long double sign = -1.0
    cdef int m
    for m in range(2, 200):
        term = term * q / (<long double> m * m)
        harmonic = harmonic + 1.0 / (<long double> m)
        total += sign * term * harmonic
        sign = -sign
        if fabs(<double> term) <= 1e-25 * (fabs(<double> total) + 1e-30):
            break
    cdef long double logpart = (logl(x / 2.0) + <long double> EULER_GAMMA) * j0val
    return (2.0 / <long double> PI) * (logpart + total)


cdef long double _series_y1_ld(long double x, long double j1val) noexcept nogil:
    cdef long double q = (x / 2.0) * (x / 2.0)
    cdef long double term = 1.0
    cdef long double h_m = 0.0
    cdef long double h_m1 = 1.0
    cdef long double total = term * (h_m + h_m1)
    cdef long double sign = -1.0
    cdef int m
    for m in range(1, 200):
        term = term * q / (<long double> m * (m + 1))
        h_m = h_m + 1.0 / (<long double> m)
        h_m1 = h_m1 + 1.0 / (<long double> (m + 1))
        total += sign * term * (h_m + h_m1)
        sign = -sign
        if fabs(<double> term) <= 1e-25 * (fabs(<double> total) + 1e-30):
            break
    cdef long double out = (2.0 / <long double> PI) * (logl(x / 2.0) + <long double> EULER_GAMMA) * j1val
    out = out - (2.0 / <long double> PI) / x
    out = out - (x / (2.0 * <long double> PI)) * total
    return out


cdef void _asymptotic_jy(int n, double x, double* jout, double* yout) noexcept nogil:
    cdef double mu = 4.0 * n * n
    cdef double p = 1.0
    cdef double q = 0.0
    cdef double c = 1.0
    cdef double prev = 1e308
    cdef double mag
    cdef int j, k4
    for j in range(1, 80):
        c = c * (mu - (2.0 * j - 1.0) * (2.0 * j - 1.0)) / (8.0 * j * x)
        mag = fabs(c)
        if mag >= prev:
            break
        prev = mag
        k4 = j % 4
        if k4 == 0:
            p += c
        elif k4 == 1:
            q += c
        elif k4 == 2:
            p -= c
        else:
            q -= c
        if mag < 1e-18:
            break
    cdef double chi = x - (0.5 * n + 0.25) * PI
    cdef double pref = sqrt(2.0 / (PI * x))
    cdef double cc = cos(chi)
    cdef double ss = sin(chi)
    jout[0] = pref * (p * cc - q * ss)
    yout[0] = pref * (p * ss + q * cc)


cdef double _j01(int n, double x) noexcept nogil:
    if x < SERIES_CUT:
        return <double> _series_j_ld(n, <long double> x)
    if x < EXTENDED_CUT:
        return <double> _series_j_ld(n, <long double> x)
    cdef double jv, yv
    _asymptotic_jy(n, x, &jv, &yv)
    return jv


cdef double _y01(int n, double x) noexcept nogil:
    cdef long double j
    cdef double jv, yv
    if x < EXTENDED_CUT:
        j = _series_j_ld(n, <long double> x)
        if n == 0:
            return <double> _series_y0_ld(<long double> x, j)
        return <double> _series_y1_ld(<long double> x, j)
    _asymptotic_jy(n, x, &jv, &yv)
    return yv


cdef int _miller_scalar(int nmax, double x, double* out) noexcept nogil:
    """Fill out[0..nmax] with J_0(x)..J_nmax(x); x >= SERIES_CUT assumed."""
    cdef int top = nmax
    cdef int cx = <int> ceil(x)
    if cx > top:
        top = cx
    cdef int start = top + 40 + <int> (2.0 * sqrt(<double> top))
    if start % 2:
        start += 1
    cdef double jp = 0.0
    cdef double jc = 1e-30
    cdef double jm, scale
    cdef double norm = 0.0
    cdef double inv_x = 1.0 / x
    cdef int m, mm, i
    for i in range(nmax + 1):
        out[i] = 0.0
    for m in range(start, 0, -1):
        jm = (2.0 * m) * inv_x * jc - jp
        jp = jc
        jc = jm
        mm = m - 1
        if mm <= nmax:
            out[mm] = jc
        if mm > 0 and mm % 2 == 0:
            norm += jc
        if fabs(jc) > 1e250:
            scale = 1e-250
            jc *= scale
            jp *= scale
            norm *= scale
            for i in range(nmax + 1):
                out[i] *= scale
    norm = 2.0 * norm + jc
    for i in range(nmax + 1):
        out[i] /= norm
    return 0


def j0v(x):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] xs = np.ascontiguousarray(np.atleast_1d(x), dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty_like(xs)
    cdef Py_ssize_t i
    with nogil:
        for i in range(xs.shape[0]):
            out[i] = _j01(0, xs[i])
    return out


def j1v(x):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] xs = np.ascontiguousarray(np.atleast_1d(x), dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty_like(xs)
    cdef Py_ssize_t i
    with nogil:
        for i in range(xs.shape[0]):
            out[i] = _j01(1, xs[i])
    return out


def y0v(x):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] xs = np.ascontiguousarray(np.atleast_1d(x), dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty_like(xs)
    cdef Py_ssize_t i
    with nogil:
        for i in range(xs.shape[0]):
            out[i] = _y01(0, xs[i])
    return out


def y1v(x):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] xs = np.ascontiguousarray(np.atleast_1d(x), dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty_like(xs)
    cdef Py_ssize_t i
    with nogil:
        for i in range(xs.shape[0]):
            out[i] = _y01(1, xs[i])
    return out


def jnv(int n, x):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] xs = np.ascontiguousarray(np.atleast_1d(x), dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty_like(xs)
    cdef Py_ssize_t i
    cdef double* buf
    if n <= 1:
        with nogil:
            for i in range(xs.shape[0]):
                out[i] = _j01(n, xs[i])
        return out
    buf = <double*> malloc((n + 1) * sizeof(double))
    if buf == NULL:
        raise MemoryError()
    try:
        with nogil:
            for i in range(xs.shape[0]):
                if xs[i] < SERIES_CUT:
                    out[i] = <double> _series_j_ld(n, <long double> xs[i])
                else:
                    _miller_scalar(n, xs[i], buf)
                    out[i] = buf[n]
    finally:
        free(buf)
    return out


def jn_table(int nmax, x):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] xs = np.ascontiguousarray(np.atleast_1d(x), dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty((nmax + 1, xs.shape[0]))
    cdef Py_ssize_t i
    cdef int n
    cdef double* buf = <double*> malloc((nmax + 1) * sizeof(double))
    if buf == NULL:
        raise MemoryError()
    try:
        with nogil:
            for i in range(xs.shape[0]):
                if xs[i] < SERIES_CUT:
                    for n in range(nmax + 1):
                        out[n, i] = <double> _series_j_ld(n, <long double> xs[i])
                else:
                    _miller_scalar(nmax, xs[i], buf)
                    for n in range(nmax + 1):
                        out[n, i] = buf[n]
    finally:
        free(buf)
    return out

"""Pure-NumPy implementation of the Bessel-family kernels.

This is the fallback backend; `arcmig._kernels` (Cython) implements the
same surface.  Evaluation scheme, shared by both backends:

* ascending power series below ``x < 9`` (largest term stays small enough
  that float64 cancellation is below 1e-13),
* the same series in 80-bit extended precision on ``9 <= x < 18``,
* Hankel asymptotic P/Q sums for orders 0 and 1 once ``x >= 18`` (optimal
  truncation error there is ~ exp(-2x)),
* normalized downward (Miller) recurrence for orders >= 2 at ``x >= 9``.

All functions assume finite ``x >= 0``; argument validation lives in
`arcmig.specfun`.
"""

import numpy as np

SERIES_CUT = 9.0
EXTENDED_CUT = 18.0

_EULER_GAMMA = 0.5772156649015328606

BACKEND_NAME = "pure"


def _series_j(n, x, dtype=np.float64):
    """Ascending series for J_n on an array, in the requested precision."""
    x = np.asarray(x, dtype=dtype)
    half = x / dtype(2.0)
    q = half * half
    # leading term (x/2)^n / n!
    term = np.ones_like(x)
    for i in range(1, n + 1):
        term = term * half / dtype(i)
    total = term.copy()
    for m in range(1, 200):
        term = -term * q / dtype(m * (n + m))
        total += term
        if np.all(np.abs(term) <= 1e-25 * (np.abs(total) + 1e-30)):
            break
    return total


def _series_y0(x, j0val, dtype=np.float64):
    """Series for Y_0 given J_0 at the same points."""
    x = np.asarray(x, dtype=dtype)
    q = (x / dtype(2.0)) ** 2
    term = q.copy()          # m = 1 term of sum H_m (x^2/4)^m / (m!)^2
    harmonic = dtype(1.0)
    total = term * harmonic
    sign = -1.0
    for m in range(2, 200):
        term = term * q / dtype(m * m)
        harmonic = harmonic + dtype(1.0) / dtype(m)
        total += dtype(sign) * term * harmonic
        sign = -sign
        if np.all(np.abs(term) <= 1e-25 * (np.abs(total) + 1e-30)):
            break
    logpart = (np.log(x / dtype(2.0)) + dtype(_EULER_GAMMA)) * j0val
    return (dtype(2.0) / dtype(np.pi)) * (logpart + total)


def _series_y1(x, j1val, dtype=np.float64):
    """Series for Y_1 given J_1 at the same points."""
    x = np.asarray(x, dtype=dtype)
    q = (x / dtype(2.0)) ** 2
    # sum over m of (psi(m+1)+psi(m+2)) (-q)^m / (m! (m+1)!), psi(1) = -gamma
    term = np.ones_like(x)
    h_m = dtype(0.0)
    h_m1 = dtype(1.0)
    total = term * (h_m + h_m1)
    sign = -1.0
    for m in range(1, 200):
        term = term * q / dtype(m * (m + 1))
        h_m = h_m + dtype(1.0) / dtype(m)
        h_m1 = h_m1 + dtype(1.0) / dtype(m + 1)
        total += dtype(sign) * term * (h_m + h_m1)
        sign = -sign
        if np.all(np.abs(term) <= 1e-25 * (np.abs(total) + 1e-30)):
            break
    out = (dtype(2.0) / dtype(np.pi)) * (np.log(x / dtype(2.0)) + dtype(_EULER_GAMMA)) * j1val
    out = out - (dtype(2.0) / dtype(np.pi)) / x
    out = out - (x / (dtype(2.0) * dtype(np.pi))) * total
    return out


def _asymptotic_jy(n, x):
    """Hankel asymptotic expansion for order n in {0, 1}, x >= 18.

    Returns (J_n, Y_n).  Terms are accumulated to optimal truncation.
    """
    x = np.asarray(x, dtype=np.float64)
    mu = 4.0 * n * n
    p = np.ones_like(x)
    q = np.zeros_like(x)
    c = np.ones_like(x)
    prev = np.full_like(x, np.inf)
    active = np.ones(x.shape, dtype=bool)
    for j in range(1, 80):
        c = c * (mu - (2.0 * j - 1.0) ** 2) / (8.0 * j * x)
        mag = np.abs(c)
        active &= mag < prev          # optimal truncation: stop once terms grow
        if not active.any():
            break
        prev = np.where(active, mag, prev)
        contrib = np.where(active, c, 0.0)
        k4 = j % 4
        if k4 == 0:
            p += contrib
        elif k4 == 1:
            q += contrib
        elif k4 == 2:
            p -= contrib
        else:
            q -= contrib
        active &= mag > 1e-18
        if not active.any():
            break
    chi = x - (0.5 * n + 0.25) * np.pi
    pref = np.sqrt(2.0 / (np.pi * x))
    cos_chi = np.cos(chi)
    sin_chi = np.sin(chi)
    jval = pref * (p * cos_chi - q * sin_chi)
    yval = pref * (p * sin_chi + q * cos_chi)
    return jval, yval


def _miller_table(nmax, x):
    """All of J_0..J_nmax at points ``x`` via normalized downward recurrence.

    Valid for any x > 0; intended for x >= SERIES_CUT where the ascending
    series loses digits.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.size == 0:
        return np.zeros((nmax + 1, 0))
    top = max(nmax, int(np.ceil(np.max(x))))
    start = top + 40 + int(2.0 * np.sqrt(top))
    if start % 2:
        start += 1
    jp = np.zeros_like(x)            # J_{m+1}
    jc = np.full_like(x, 1e-30)      # J_m at m = start
    norm = np.zeros_like(x)
    table = np.zeros((nmax + 1,) + x.shape)
    inv_x = 1.0 / x
    for m in range(start, 0, -1):
        jm = (2.0 * m) * inv_x * jc - jp
        jp = jc
        jc = jm
        mm = m - 1
        if mm <= nmax:
            table[mm] = jc
        if mm > 0 and mm % 2 == 0:
            norm += jc
        big = np.abs(jc) > 1e250
        if big.any():
            scale = np.where(big, 1e-250, 1.0)
            jc = jc * scale
            jp = jp * scale
            norm = norm * scale
            table[:, big] *= 1e-250
    norm = 2.0 * norm + jc
    return table / norm


def _dispatch_01(n, x):
    """(J_n, Y_n) for n in {0,1} over the three ranges. x > 0 for Y."""
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    jv = np.empty_like(x)
    yv = np.empty_like(x)
    lo = x < SERIES_CUT
    mid = (~lo) & (x < EXTENDED_CUT)
    hi = x >= EXTENDED_CUT
    if lo.any():
        xs = x[lo]
        j = _series_j(n, xs)
        jv[lo] = j
        with np.errstate(divide="ignore"):
            yv[lo] = _series_y0(xs, j) if n == 0 else _series_y1(xs, j)
    if mid.any():
        xs = x[mid].astype(np.longdouble)
        j = _series_j(n, xs, dtype=np.longdouble)
        y = _series_y0(xs, j, np.longdouble) if n == 0 else _series_y1(xs, j, np.longdouble)
        jv[mid] = j.astype(np.float64)
        yv[mid] = y.astype(np.float64)
    if hi.any():
        j, y = _asymptotic_jy(n, x[hi])
        jv[hi] = j
        yv[hi] = y
    return jv, yv


def j0v(x):
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    out = np.empty_like(x)
    lo = x < SERIES_CUT
    mid = (~lo) & (x < EXTENDED_CUT)
    hi = x >= EXTENDED_CUT
    if lo.any():
        out[lo] = _series_j(0, x[lo])
    if mid.any():
        out[mid] = _series_j(0, x[mid].astype(np.longdouble), np.longdouble).astype(np.float64)
    if hi.any():
        out[hi] = _asymptotic_jy(0, x[hi])[0]
    return out


def j1v(x):
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    out = np.empty_like(x)
    lo = x < SERIES_CUT
    mid = (~lo) & (x < EXTENDED_CUT)
    hi = x >= EXTENDED_CUT
    if lo.any():
        out[lo] = _series_j(1, x[lo])
    if mid.any():
        out[mid] = _series_j(1, x[mid].astype(np.longdouble), np.longdouble).astype(np.float64)
    if hi.any():
        out[hi] = _asymptotic_jy(1, x[hi])[0]
    return out


def y0v(x):
    return _dispatch_01(0, x)[1]


def y1v(x):
    return _dispatch_01(1, x)[1]


def jnv(n, x):
    """J_n over an array for a single integer order n >= 0."""
    if n == 0:
        return j0v(x)
    if n == 1:
        return j1v(x)
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    out = np.empty_like(x)
    lo = x < SERIES_CUT
    if lo.any():
        out[lo] = _series_j(n, x[lo])
    if (~lo).any():
        out[~lo] = _miller_table(n, x[~lo])[n]
    return out


def jn_table(nmax, x):
    """Array of shape (nmax+1, len(x)) with rows J_0(x) .. J_nmax(x)."""
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    table = np.zeros((nmax + 1,) + x.shape)
    lo = x < SERIES_CUT
    if lo.any():
        xs = x[lo]
        for n in range(nmax + 1):
            table[n, lo] = _series_j(n, xs)
    if (~lo).any():
        table[:, ~lo] = _miller_table(nmax, x[~lo])
    return table

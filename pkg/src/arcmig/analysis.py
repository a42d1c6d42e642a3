"""Closed-form kernel predictions for the imaging functionals, limited-view
ring integrals with their correction series, and map-versus-prediction
metrics.

Every prediction is exposed in its leading-order form and, where the
underlying derivation keeps an integral or series remainder, in a variant
that includes the remainder numerically, so tests can measure what the
leading order neglects.
"""

import math
from dataclasses import dataclass

import numpy as np

from .backend import kernels
from .errors import ConfigError, DomainError, SingularityError
from .geometry import Crack, sample_points
from .imaging import ImageMap

__all__ = [
    "REGIMES",
    "RingIntegralResult",
    "ring_integrals",
    "kernel_predict",
    "kernel_predict_grid",
    "validate_map",
    "adaptive_quad",
    "band_j1sq_integral",
    "halfline_oscillatory_j0",
    "te_full_branch",
    "first_sidelobe_ratio",
]

REGIMES = (
    "TM_SINGLE",
    "TM_BAND",
    "TM_BAND_INF",
    "TM_SMALL_NINC_INF",
    "TM_WEIGHTED_BAND",
    "TM_WEIGHTED_INF",
    "TE_FULL_NEAR",
    "TE_FULL_FAR",
    "TE_SMALL_NINC_INF",
    "LV_TM_BAND",
    "LV_TE_BAND",
)

_FULL_VIEW_TOL = 1e-12


def _j0(z):
    return kernels.j0v(np.ravel(np.abs(z))).reshape(np.shape(z))


def _j1(z):
    return kernels.j1v(np.ravel(np.abs(z))).reshape(np.shape(z))


def adaptive_quad(f, a, b, tol=1e-10, max_depth=48):
    """Adaptive Simpson quadrature for a scalar (possibly complex) integrand."""

    def simpson(fa, fm, fb, h):
        return h / 6.0 * (fa + 4.0 * fm + fb)

    def recurse(x0, x2, f0, f1, f2, whole, depth):
        x1l = 0.5 * (x0 + 0.5 * (x0 + x2))
        x1r = 0.5 * (0.5 * (x0 + x2) + x2)
        fl = f(x1l)
        fr = f(x1r)
        h = x2 - x0
        left = simpson(f0, fl, f1, 0.5 * h)
        right = simpson(f1, fr, f2, 0.5 * h)
        if depth <= 0:
            return left + right
        if abs(left + right - whole) <= 15.0 * tol:
            return left + right + (left + right - whole) / 15.0
        return recurse(x0, 0.5 * (x0 + x2), f0, fl, f1, left, depth - 1) + recurse(
            0.5 * (x0 + x2), x2, f1, fr, f2, right, depth - 1
        )

    # seed with enough panels to resolve oscillation before adapting
    n0 = 8
    xs = np.linspace(a, b, n0 + 1)
    total = 0.0 + 0.0j
    for x0, x2 in zip(xs[:-1], xs[1:]):
        xm = 0.5 * (x0 + x2)
        f0, f1, f2 = f(x0), f(xm), f(x2)
        whole = simpson(f0, f1, f2, x2 - x0)
        total += recurse(x0, x2, f0, f1, f2, whole, max_depth)
    return total


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)


def _panel_gauss(f_vec, a, b, panels):
    """Composite 16-point Gauss-Legendre; f_vec maps a node array to values
    with the node axis last."""
    edges = np.linspace(a, b, panels + 1)
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * (edges[1] - edges[0])
    nodes = (mid[:, None] + half * _GL_NODES[None, :]).ravel()
    weights = np.broadcast_to(half * _GL_WEIGHTS, (panels, 16)).ravel()
    vals = f_vec(nodes)
    return np.tensordot(vals, weights, axes=([-1], [0]))


def band_j1sq_integral(k_first, k_last, r):
    """integral over [k_first, k_last] of J_1(k r)^2 dk, vectorized in r."""
    r = np.atleast_1d(np.asarray(r, dtype=np.float64))
    panels = max(8, int(math.ceil((k_last - k_first) * max(1e-9, float(np.max(r))) / 3.0)) + 2)

    def f_vec(ks):
        return _j1(np.outer(r, ks)) ** 2

    return _panel_gauss(f_vec, k_first, k_last, panels)


def _distances(x, points):
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    diff = x[:, None, :] - points[None, :, :]
    return np.hypot(diff[..., 0], diff[..., 1]), diff


@dataclass(frozen=True)
class RingIntegralResult:
    """Truncated arc integrals of the steering phases over [alpha, beta]."""

    plain: complex
    weighted: complex
    truncation: int
    tail_bound: float


def _lambda_tail_bound(kr, L):
    # |J_n(x)| <= (x/2)^n / n! gives a super-exponential tail for the series
    term = (0.5 * kr) ** (L + 1) / math.factorial(L + 1) / (L + 1)
    ratio = 0.5 * kr / (L + 2)
    if ratio < 0.9:
        return 4.0 * term / (1.0 - ratio)
    return float("inf")


def ring_integrals(alpha, beta, k, x, xi, truncation=None):
    """The two arc integrals of the limited-view analysis:

    plain    = integral over [alpha, beta] of exp(i k theta . x) dtheta,
    weighted = same with the factor theta . xi,

    both via the Jacobi-Anger form: (beta-alpha) J_0 plus the Lambda_D
    series, and the J_0/J_1 principal terms plus the Lambda_N series.  At
    full aperture every series term vanishes identically.
    """
    x = np.asarray(x, dtype=np.float64)
    xi = np.asarray(xi, dtype=np.float64)
    if abs(np.hypot(xi[0], xi[1]) - 1.0) > 1e-9:
        raise DomainError(f"xi must be a unit vector, got {xi}")
    span = beta - alpha
    if not (0.0 < span <= 2.0 * np.pi + _FULL_VIEW_TOL):
        raise DomainError(f"aperture span must lie in (0, 2*pi], got {span}")
    r = float(np.hypot(x[0], x[1]))
    kr = k * r
    phi = math.atan2(x[1], x[0]) if r > 0.0 else 0.0
    xi_ang = math.atan2(xi[1], xi[0])
    if truncation is None:
        truncation = int(math.ceil(kr)) + 30
    if truncation < 1:
        raise DomainError(f"truncation must be >= 1, got {truncation}")
    L = int(truncation)
    table = kernels.jn_table(max(L, 1), np.array([kr]))[:, 0]
    # principal terms from the dedicated order-0/1 kernels (shared
    # evaluation path with every other module)
    j0 = float(kernels.j0v(np.array([kr]))[0])
    j1 = float(kernels.j1v(np.array([kr]))[0])
    full_view = abs(span - 2.0 * np.pi) <= _FULL_VIEW_TOL

    xhat_dot_xi = (x @ xi) / r if r > 0.0 else 0.0
    plain = span * j0
    weighted = 2.0 * j0 * math.sin(span / 2.0) * math.cos((beta + alpha - 2.0 * xi_ang) / 2.0)
    weighted += 1j * j1 * (
        span * xhat_dot_xi + math.sin(span) * math.cos(beta + alpha - xi_ang - phi)
    )
    if full_view:
        # sin(n (beta-alpha)/2) = sin(n pi) = 0: the series vanishes exactly
        return RingIntegralResult(complex(plain), complex(weighted), L, 0.0)

    for n in range(1, L + 1):
        i_n = 1j**n
        plain += (
            4.0
            * i_n
            / n
            * table[n]
            * math.cos(n * (beta + alpha - 2.0 * phi) / 2.0)
            * math.sin(n * span / 2.0)
        )
    for n in range(2, L + 1):
        i_n = 1j**n
        lam = math.sin((1 - n) * span / 2.0) / (1 - n) * math.cos(
            ((1 - n) * (beta + alpha) + 2 * n * phi - 2.0 * xi_ang) / 2.0
        )
        lam += math.sin((1 + n) * span / 2.0) / (1 + n) * math.cos(
            ((1 + n) * (beta + alpha) - 2 * n * phi - 2.0 * xi_ang) / 2.0
        )
        weighted += 2.0 * i_n * table[n] * lam
    return RingIntegralResult(
        complex(plain), complex(weighted), L, _lambda_tail_bound(kr, L)
    )


def _require_positive_distance(r, regime):
    if np.any(r <= 0.0):
        raise SingularityError(
            f"{regime}: evaluation point coincides with a crack point",
            factor="|x - y_m|",
        )


def _transverse(diff, r, thetas, regime):
    # r^2 - (theta_s . (x - y_m))^2 per (point, sample, direction)
    proj = np.einsum("pmd,sd->pms", diff, thetas)
    trans = r[..., None] ** 2 - proj**2
    if np.any(trans <= 0.0):
        raise SingularityError(
            f"{regime}: an incident direction is parallel to x - y_m",
            factor="sqrt(|x-y|^2 - (theta.(x-y))^2)",
        )
    return proj, trans


def kernel_predict_grid(
    kind,
    x,
    points,
    normals=None,
    k=None,
    k_first=None,
    k_last=None,
    thetas=None,
    alpha=None,
    beta=None,
    truncation=None,
    include_remainder=False,
    on_tol=1e-12,
):
    """Vectorized kernel prediction at the points ``x`` (shape (P, 2)).

    ``include_remainder`` switches on the integral/series terms the
    leading-order statements neglect.
    """
    if kind not in REGIMES:
        raise ConfigError(f"unknown kernel regime {kind!r}")
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    r, diff = _distances(x, points)

    if kind == "TM_SINGLE":
        return np.sum(_j0(k * r) ** 2, axis=1)

    if kind == "TM_BAND":
        dk = k_last - k_first
        bracket = (
            k_last * (_j0(k_last * r) ** 2 + _j1(k_last * r) ** 2)
            - k_first * (_j0(k_first * r) ** 2 + _j1(k_first * r) ** 2)
        ) / dk
        if include_remainder:
            flat = band_j1sq_integral(k_first, k_last, r.ravel()) / dk
            bracket = bracket + flat.reshape(r.shape)
        return np.abs(np.sum(bracket, axis=1))

    if kind == "TM_BAND_INF":
        return (np.min(r, axis=1) <= on_tol).astype(np.float64)

    if kind == "TM_SMALL_NINC_INF":
        _require_positive_distance(r, kind)
        _, trans = _transverse(diff, r, np.atleast_2d(thetas), kind)
        return np.abs(np.sum(1.0 / np.sqrt(trans), axis=(1, 2)))

    if kind == "TM_WEIGHTED_BAND":
        dk = k_last - k_first
        bracket = 0.5 * k_last**2 * (_j0(k_last * r) ** 2 + _j1(k_last * r) ** 2)
        bracket -= 0.5 * k_first**2 * (_j0(k_first * r) ** 2 + _j1(k_first * r) ** 2)
        return np.abs(np.sum(bracket, axis=1)) / dk

    if kind == "TM_WEIGHTED_INF":
        _require_positive_distance(r, kind)
        proj, trans = _transverse(diff, r, np.atleast_2d(thetas), kind)
        return np.abs(np.sum(proj / trans**1.5, axis=(1, 2)))

    if kind in ("TE_FULL_NEAR", "TE_FULL_FAR"):
        normals = np.atleast_2d(np.asarray(normals, dtype=np.float64))
        dot = np.einsum("pmd,md->pm", diff, normals)
        if kind == "TE_FULL_NEAR":
            pref = (k_last**3 - k_first**3) / (12.0 * (k_last - k_first))
            return pref * np.abs(np.sum(dot**2, axis=1))
        _require_positive_distance(r, kind)
        pref = 2.0 / (np.pi * (k_last - k_first))
        return pref * np.abs(np.sum(dot**2 / (math.sqrt(2.0 * k_last) * r**4), axis=1))

    if kind == "TE_SMALL_NINC_INF":
        normals = np.atleast_2d(np.asarray(normals, dtype=np.float64))
        _require_positive_distance(r, kind)
        thetas = np.atleast_2d(thetas)
        proj, trans = _transverse(diff, r, thetas, kind)
        theta_nu = np.einsum("sd,md->ms", thetas, normals)        # (M, S)
        rhat_nu = np.einsum("pmd,md->pm", diff, normals) / r      # (P, M)
        lam4 = (1.0 + 1j * proj / np.sqrt(trans)) / r[..., None]  # (P, M, S)
        total = np.sum(theta_nu[None, :, :] * rhat_nu[..., None] * lam4, axis=(1, 2))
        return np.abs(total) / (k_last - k_first)

    if kind == "LV_TM_BAND":
        span = beta - alpha
        if include_remainder:
            out = np.empty(x.shape[0])
            for p in range(x.shape[0]):
                acc = 0.0 + 0.0j
                for m in range(points.shape[0]):
                    d = x[p] - points[m]

                    def f(kk):
                        return ring_integrals(
                            alpha, beta, kk, d, np.array([1.0, 0.0]), truncation
                        ).plain ** 2

                    acc += adaptive_quad(f, k_first, k_last, tol=1e-11)
                out[p] = abs(acc) / (span**2 * (k_last - k_first))
            return out
        return kernel_predict_grid(
            "TM_BAND", x, points, k_first=k_first, k_last=k_last
        )

    if kind == "LV_TE_BAND":
        normals = np.atleast_2d(np.asarray(normals, dtype=np.float64))
        span = beta - alpha
        dk = k_last - k_first
        if include_remainder:
            out = np.empty(x.shape[0])
            for p in range(x.shape[0]):
                acc = 0.0 + 0.0j
                for m in range(points.shape[0]):
                    d = x[p] - points[m]
                    nu = normals[m]

                    def f(kk):
                        return ring_integrals(alpha, beta, kk, d, nu, truncation).weighted ** 2

                    acc += adaptive_quad(f, k_first, k_last, tol=1e-11)
                out[p] = abs(acc) / (span**2 * dk)
            return out
        _require_positive_distance(r, kind)
        nu_ang = np.arctan2(normals[:, 1], normals[:, 0])
        phi = np.arctan2(diff[..., 1], diff[..., 0])
        rhat_nu = np.einsum("pmd,md->pm", diff, normals) / r
        c1 = 2.0 * math.sin(span / 2.0) * np.cos((beta + alpha - 2.0 * nu_ang) / 2.0)
        c2 = span * rhat_nu + math.sin(span) * np.cos(beta + alpha - nu_ang[None, :] - phi)
        j0_hi, j1_hi = _j0(k_last * r), _j1(k_last * r)
        j0_lo, j1_lo = _j0(k_first * r), _j1(k_first * r)
        term = (c1**2)[None, :] * (
            k_last * (j0_hi**2 + j1_hi**2) - k_first * (j0_lo**2 + j1_lo**2)
        ) / dk
        j1sq = band_j1sq_integral(k_first, k_last, r.ravel()).reshape(r.shape)
        term = term + ((c1**2)[None, :] - c2**2) * j1sq / dk
        term = term + 1j * c1[None, :] * c2 * (j0_lo**2 - j0_hi**2) / (2.0 * dk * r)
        return np.abs(np.sum(term, axis=1)) / span**2

    raise ConfigError(f"unhandled kernel regime {kind!r}")


def kernel_predict(kind, x, points, **kwargs) -> float:
    """Scalar wrapper over `kernel_predict_grid`."""
    return float(kernel_predict_grid(kind, np.atleast_2d(x), points, **kwargs)[0])


def te_full_branch(k_first, r):
    """Which asymptotic branch of the TE alternative kernel applies at
    distance r: 'near' (k r well below sqrt(2)), 'far', or 'gap'."""
    kr = k_first * r
    if kr < math.sqrt(2.0) * 0.5:
        return "near"
    if kr > 0.75 * 2.0:
        return "far"
    return "gap"


def halfline_oscillatory_j0(a, b, t_max=2000.0, window_fraction=0.4):
    """integral over [0, inf) of exp(i a t) J_0(b t) dt for |a| < b, by
    truncated panel quadrature with Cesaro-style averaging of the
    oscillating partial integrals."""
    if not abs(a) < b:
        raise DomainError("requires |a| < b")
    panel = np.pi / (2.0 * b)
    n_panels = int(t_max / panel)
    edges = panel * np.arange(n_panels + 1)
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * panel
    nodes = (mid[:, None] + half * _GL_NODES[None, :]).ravel()
    vals = np.exp(1j * a * nodes) * _j0(b * nodes)
    per_panel = (half * (vals.reshape(n_panels, 16) @ _GL_WEIGHTS))
    partial = np.cumsum(per_panel)
    tail = partial[int((1.0 - window_fraction) * n_panels):]
    return complex(np.mean(tail))


def first_sidelobe_ratio(values):
    """First side-lobe to main-peak ratio of a radial profile sampled from
    r = 0 outward (peak at index 0)."""
    values = np.asarray(values, dtype=np.float64)
    peak = values[0]
    i = 1
    while i + 1 < values.size and values[i + 1] <= values[i]:
        i += 1
    if i + 1 >= values.size:
        raise DomainError("no side lobe inside the sampled profile")
    j = i
    while j + 1 < values.size and values[j + 1] >= values[j]:
        j += 1
    return float(values[j] / peak)


def validate_map(image: ImageMap, crack: Crack, kind, params, off_distance=0.5, m_samples=None):
    """Compare a computed map against a kernel prediction and report
    localization metrics.

    Returns a dict with sup_deviation, on_crack_mean, off_crack_mean and
    contrast.  The prediction's sample points y_m come from
    `geometry.sample_points`; ``params`` feeds `kernel_predict_grid`.
    """
    grid = image.grid
    params = dict(params)
    if m_samples is None:
        m_samples = params.pop("m_samples", 32)
    else:
        params.pop("m_samples", None)
    samples = sample_points(crack, m_samples)
    pts = np.array([s.point for s in samples])
    normals = np.array([s.normal for s in samples])
    if (
        np.any(pts[:, 0] < grid.x_lo)
        or np.any(pts[:, 0] > grid.x_hi)
        or np.any(pts[:, 1] < grid.y_lo)
        or np.any(pts[:, 1] > grid.y_hi)
    ):
        raise ConfigError("crack lies outside the search grid")
    grid_points = grid.points()
    needs_normals = kind.startswith("TE") or kind == "LV_TE_BAND"
    kwargs = dict(params)
    if needs_normals:
        kwargs.setdefault("normals", normals)
    prediction = kernel_predict_grid(kind, grid_points, pts, **kwargs)
    sup_dev = float(np.max(np.abs(image.values - prediction)))
    dist = np.min(
        np.hypot(
            grid_points[:, None, 0] - pts[None, :, 0],
            grid_points[:, None, 1] - pts[None, :, 1],
        ),
        axis=1,
    )
    on_idx = np.unique([grid.index_nearest(p) for p in pts])
    on_mean = float(np.mean(image.values[on_idx]))
    off_mask = dist >= off_distance
    if not off_mask.any():
        raise ConfigError("no grid point is far enough from the crack")
    off_mean = float(np.mean(image.values[off_mask]))
    return {
        "sup_deviation": sup_dev,
        "on_crack_mean": on_mean,
        "off_crack_mean": off_mean,
        "contrast": on_mean / off_mean if off_mean > 0 else float("inf"),
    }


def localization_metrics(image: ImageMap, crack: Crack, off_distance=0.5, m_samples=64):
    """Contrast-style metrics without a kernel prediction."""
    grid = image.grid
    samples = sample_points(crack, m_samples)
    pts = np.array([s.point for s in samples])
    grid_points = grid.points()
    dist = np.min(
        np.hypot(
            grid_points[:, None, 0] - pts[None, :, 0],
            grid_points[:, None, 1] - pts[None, :, 1],
        ),
        axis=1,
    )
    on_idx = np.unique([grid.index_nearest(p) for p in pts])
    on_mean = float(np.mean(image.values[on_idx]))
    off_mask = dist >= off_distance
    off_mean = float(np.mean(image.values[off_mask]))
    argmax = image.argmax_point()
    return {
        "argmax_x": float(argmax[0]),
        "argmax_y": float(argmax[1]),
        "argmax_value": float(np.max(image.values)),
        "argmax_distance": float(
            np.min(np.hypot(pts[:, 0] - argmax[0], pts[:, 1] - argmax[1]))
        ),
        "on_crack_mean": on_mean,
        "off_crack_mean": off_mean,
        "contrast": on_mean / off_mean if off_mean > 0 else float("inf"),
    }

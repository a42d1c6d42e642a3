"""Kernel-prediction and ring-integral tests against independent quadrature
oracles (scipy.integrate.quad) and the limiting identities."""

import numpy as np
import pytest
import scipy.integrate
import scipy.special as sp

from arcmig import analysis, geometry, imaging, msr
from arcmig.errors import ConfigError, SingularityError

K1 = 2.0 * np.pi / 0.5
KF = 2.0 * np.pi / 0.4


def quad_complex(f, a, b, **kw):
    re = scipy.integrate.quad(lambda t: f(t).real, a, b, **kw)[0]
    im = scipy.integrate.quad(lambda t: f(t).imag, a, b, **kw)[0]
    return re + 1j * im


def test_tm_band_at_zero_distance_is_one():
    val = analysis.kernel_predict(
        "TM_BAND", [0.5, 0.5], np.array([[0.5, 0.5]]), k_first=K1, k_last=KF,
        include_remainder=True,
    )
    assert val == pytest.approx(1.0, abs=1e-12)


def test_tm_band_matches_adaptive_quadrature():
    r0 = 0.3
    val = analysis.kernel_predict(
        "TM_BAND", [r0, 0.0], np.array([[0.0, 0.0]]), k_first=K1, k_last=KF,
        include_remainder=True,
    )
    ref = scipy.integrate.quad(lambda k: sp.j0(k * r0) ** 2, K1, KF, epsabs=1e-12, limit=400)[0]
    assert abs(val - ref / (KF - K1)) < 1e-6


def test_tm_single_formula():
    pts = np.array([[0.0, 0.0], [0.2, -0.1]])
    x = np.array([0.15, 0.05])
    val = analysis.kernel_predict("TM_SINGLE", x, pts, k=K1)
    ref = sum(sp.j0(K1 * np.hypot(*(x - p))) ** 2 for p in pts)
    assert val == pytest.approx(ref, abs=1e-12)


def test_lv_tm_band_full_aperture_equals_tm_band():
    r0 = 0.3
    lv = analysis.kernel_predict(
        "LV_TM_BAND", [r0, 0.0], np.array([[0.0, 0.0]]),
        k_first=K1, k_last=KF, alpha=0.0, beta=2.0 * np.pi, include_remainder=True,
    )
    tm = analysis.kernel_predict(
        "TM_BAND", [r0, 0.0], np.array([[0.0, 0.0]]), k_first=K1, k_last=KF,
        include_remainder=True,
    )
    assert abs(lv - tm) < 1e-10
    # the leading-order variants coincide exactly by construction
    lv0 = analysis.kernel_predict(
        "LV_TM_BAND", [r0, 0.0], np.array([[0.0, 0.0]]),
        k_first=K1, k_last=KF, alpha=0.0, beta=2.0 * np.pi,
    )
    tm0 = analysis.kernel_predict(
        "TM_BAND", [r0, 0.0], np.array([[0.0, 0.0]]), k_first=K1, k_last=KF
    )
    assert lv0 == tm0


def test_ring_integrals_full_aperture_exact():
    x = np.array([0.2, 0.1])
    res = analysis.ring_integrals(0.0, 2.0 * np.pi, 12.0, x, np.array([0.0, 1.0]))
    r = np.hypot(*x)
    assert res.plain == pytest.approx(2.0 * np.pi * sp.j0(12.0 * r), abs=1e-14)
    assert res.tail_bound == 0.0
    xhat = x / r
    expected = 2.0 * np.pi * 1j * (xhat @ [0.0, 1.0]) * sp.j1(12.0 * r)
    assert abs(res.weighted - expected) < 1e-8


def test_ring_integrals_match_quadrature_oracle():
    rng = np.random.default_rng(12)
    alpha, beta = np.pi / 6.0, 5.0 * np.pi / 6.0
    for _ in range(8):
        k = rng.uniform(10.5, 21.0)
        x = rng.uniform(-1.0, 1.0, 2)
        ang = rng.uniform(0.0, 2.0 * np.pi)
        xi = np.array([np.cos(ang), np.sin(ang)])
        res = analysis.ring_integrals(alpha, beta, k, x, xi)
        plain_ref = quad_complex(
            lambda t: np.exp(1j * k * (np.cos(t) * x[0] + np.sin(t) * x[1])),
            alpha, beta, epsabs=1e-13, limit=300,
        )
        weighted_ref = quad_complex(
            lambda t: (np.cos(t) * xi[0] + np.sin(t) * xi[1])
            * np.exp(1j * k * (np.cos(t) * x[0] + np.sin(t) * x[1])),
            alpha, beta, epsabs=1e-13, limit=300,
        )
        assert abs(res.plain - plain_ref) < 1e-8
        assert abs(res.weighted - weighted_ref) < 1e-8


def test_ring_integral_at_origin():
    res = analysis.ring_integrals(0.4, 1.9, 7.0, np.zeros(2), np.array([1.0, 0.0]))
    assert res.plain == pytest.approx(1.5, abs=1e-14)
    ref = scipy.integrate.quad(lambda t: np.cos(t), 0.4, 1.9)[0]
    assert res.weighted == pytest.approx(ref, abs=1e-14)


def test_full_circle_average_matches_j0():
    dirs = msr.DirectionSet.full_view(256).directions()
    rng = np.random.default_rng(4)
    for _ in range(50):
        k = rng.uniform(2.0, 25.0)
        x = rng.uniform(-1.5, 1.5, 2)
        if k * np.hypot(*x) > 40.0:
            continue
        discrete = np.mean(np.exp(1j * k * (dirs @ x)))
        assert abs(discrete - sp.j0(k * np.hypot(*x))) < 1e-3


def test_full_circle_average_matches_j1():
    dirs = msr.DirectionSet.full_view(256).directions()
    rng = np.random.default_rng(5)
    for _ in range(50):
        k = rng.uniform(2.0, 25.0)
        x = rng.uniform(-1.5, 1.5, 2)
        r = np.hypot(*x)
        if k * r > 40.0 or r < 1e-3:
            continue
        ang = rng.uniform(0.0, 2.0 * np.pi)
        xi = np.array([np.cos(ang), np.sin(ang)])
        discrete = np.mean((dirs @ xi) * np.exp(1j * k * (dirs @ x)))
        expected = 1j * ((x / r) @ xi) * sp.j1(k * r)
        assert abs(discrete - expected) < 1e-3


def test_indefinite_integral_identities():
    # d/dt [t (J0^2 + J1^2)] = 2 J0(t)^2 - 2 J1(t)^2 / ... checked as the
    # definite form: int J0^2 = [t(J0^2+J1^2)] + int J1^2 over [a, b]
    a, b = 1.3, 17.2
    int_j0 = scipy.integrate.quad(lambda t: sp.j0(t) ** 2, a, b, limit=300)[0]
    int_j1 = scipy.integrate.quad(lambda t: sp.j1(t) ** 2, a, b, limit=300)[0]
    boundary = b * (sp.j0(b) ** 2 + sp.j1(b) ** 2) - a * (sp.j0(a) ** 2 + sp.j1(a) ** 2)
    assert abs(int_j0 - boundary - int_j1) < 1e-10
    # int J0 J1 dt = -J0^2 / 2
    int_j0j1 = scipy.integrate.quad(lambda t: sp.j0(t) * sp.j1(t), a, b, limit=300)[0]
    assert abs(int_j0j1 - 0.5 * (sp.j0(a) ** 2 - sp.j0(b) ** 2)) < 1e-10
    # int_0^x t J0(t)^2 dt = x^2/2 (J0^2 + J1^2)
    int_tj0 = scipy.integrate.quad(lambda t: t * sp.j0(t) ** 2, 0.0, b, limit=300)[0]
    assert abs(int_tj0 - 0.5 * b * b * (sp.j0(b) ** 2 + sp.j1(b) ** 2)) < 1e-9


def test_tm_band_inf_limit():
    # at fixed r > 0 the band kernel decays as k_F grows; at r = 0 it is 1
    r0 = 0.35
    vals = [
        analysis.kernel_predict(
            "TM_BAND", [r0, 0.0], np.array([[0.0, 0.0]]),
            k_first=K1, k_last=kf, include_remainder=True,
        )
        for kf in (50.0, 100.0, 200.0)
    ]
    assert vals[0] > vals[1] > vals[2]
    assert vals[2] < 0.1
    assert analysis.kernel_predict(
        "TM_BAND_INF", [0.0, 0.0], np.array([[0.0, 0.0]])
    ) == 1.0
    assert analysis.kernel_predict(
        "TM_BAND_INF", [r0, 0.0], np.array([[0.0, 0.0]])
    ) == 0.0


def test_lambda_terms_small_at_large_kr():
    # included-vs-dropped remainder differs by <= 10% of the peak (=1)
    for r0 in (2.0, 2.8):
        with_term = analysis.kernel_predict(
            "TM_BAND", [r0, 0.0], np.array([[0.0, 0.0]]),
            k_first=K1, k_last=KF, include_remainder=True,
        )
        without = analysis.kernel_predict(
            "TM_BAND", [r0, 0.0], np.array([[0.0, 0.0]]), k_first=K1, k_last=KF
        )
        assert KF * r0 >= 30.0
        assert abs(with_term - without) <= 0.1


def test_semi_infinite_oscillatory_integral():
    val = analysis.halfline_oscillatory_j0(0.3, 1.0)
    assert abs(val - 1.0 / np.sqrt(1.0 - 0.09)) < 1e-3


def test_weighted_band_kernel_formula():
    # exact identity: (1/(kF-k1)) int k J0(kr)^2 dk equals the closed form
    r0 = 0.4
    val = analysis.kernel_predict(
        "TM_WEIGHTED_BAND", [r0, 0.0], np.array([[0.0, 0.0]]), k_first=K1, k_last=KF
    )
    ref = scipy.integrate.quad(lambda k: k * sp.j0(k * r0) ** 2, K1, KF, limit=400)[0]
    assert abs(val - ref / (KF - K1)) < 1e-9


def test_small_ninc_regimes_and_singularities():
    thetas = np.array([[1.0, 0.0], [0.0, 1.0]])
    pts = np.array([[0.0, 0.0]])
    x = np.array([0.3, 0.4])
    val = analysis.kernel_predict("TM_SMALL_NINC_INF", x, pts, thetas=thetas)
    r2 = 0.25
    ref = 1.0 / np.sqrt(r2 - 0.09) + 1.0 / np.sqrt(r2 - 0.16)
    assert val == pytest.approx(ref, abs=1e-12)
    with pytest.raises(SingularityError):
        analysis.kernel_predict(
            "TM_SMALL_NINC_INF", [0.5, 0.0], pts, thetas=np.array([[1.0, 0.0]])
        )
    with pytest.raises(SingularityError) as err:
        analysis.kernel_predict(
            "TM_WEIGHTED_INF", [0.0, 0.0], pts, thetas=np.array([[1.0, 0.0]])
        )
    assert err.value.factor == "|x - y_m|"


def test_te_full_kernels_and_branch():
    pts = np.array([[0.0, 0.0]])
    normals = np.array([[0.0, 1.0]])
    x = np.array([0.0, 0.02])
    near = analysis.kernel_predict(
        "TE_FULL_NEAR", x, pts, normals=normals, k_first=K1, k_last=KF
    )
    expected = (KF**3 - K1**3) / (12.0 * (KF - K1)) * 0.02**2
    assert near == pytest.approx(expected, rel=1e-12)
    far = analysis.kernel_predict(
        "TE_FULL_FAR", [0.0, 2.0], pts, normals=normals, k_first=K1, k_last=KF
    )
    expected_far = 2.0 / (np.pi * (KF - K1)) * 4.0 / (np.sqrt(2.0 * KF) * 16.0)
    assert far == pytest.approx(expected_far, rel=1e-12)
    assert analysis.te_full_branch(K1, 0.02) == "near"
    assert analysis.te_full_branch(K1, 2.0) == "far"
    assert analysis.te_full_branch(K1, 0.1) == "gap"


def test_te_small_ninc_kernel():
    pts = np.array([[0.0, 0.0]])
    normals = np.array([[0.0, 1.0]])
    thetas = np.array([[0.0, 1.0]])
    x = np.array([0.3, 0.1])
    val = analysis.kernel_predict(
        "TE_SMALL_NINC_INF", x, pts, normals=normals, thetas=thetas,
        k_first=K1, k_last=KF,
    )
    r = np.hypot(*x)
    proj = x @ thetas[0]
    lam4 = (1.0 + 1j * proj / np.sqrt(r**2 - proj**2)) / r
    ref = abs((thetas[0] @ normals[0]) * ((x / r) @ normals[0]) * lam4) / (KF - K1)
    assert val == pytest.approx(ref, rel=1e-12)


def test_lv_te_band_full_aperture_reduces_to_j1_kernel():
    # at full aperture C1 = 0 and C2 = 2 pi (rhat . nu): the kernel becomes
    # the TE alternative's J1^2 band integral
    pts = np.array([[0.0, 0.0]])
    normals = np.array([[0.0, 1.0]])
    x = np.array([0.25, 0.35])
    lv = analysis.kernel_predict(
        "LV_TE_BAND", x, pts, normals=normals, k_first=K1, k_last=KF,
        alpha=0.0, beta=2.0 * np.pi,
    )
    r = np.hypot(*x)
    rhat_nu = (x / r) @ normals[0]
    ref = scipy.integrate.quad(
        lambda k: (rhat_nu * sp.j1(k * r)) ** 2, K1, KF, limit=400
    )[0] / (KF - K1)
    assert lv == pytest.approx(ref, rel=1e-6)


def test_lv_te_band_against_series_quadrature():
    pts = np.array([[0.0, 0.0]])
    normals = np.array([[np.sin(0.3), np.cos(0.3)]])
    x = np.array([0.2, 0.5])
    alpha, beta = np.pi / 6.0, 5.0 * np.pi / 6.0
    lead = analysis.kernel_predict(
        "LV_TE_BAND", x, pts, normals=normals, k_first=K1, k_last=KF,
        alpha=alpha, beta=beta,
    )
    full = analysis.kernel_predict(
        "LV_TE_BAND", x, pts, normals=normals, k_first=K1, k_last=KF,
        alpha=alpha, beta=beta, include_remainder=True,
    )
    # the Lambda_N series the leading order drops is a bounded correction
    assert full == pytest.approx(lead, abs=0.35 * max(1.0, lead))


def test_validate_map_identities():
    grid = imaging.SearchGrid(-1.0, 1.0, -1.0, 1.0, 0.05)
    crack = geometry.line_segment([-0.005, 0.0], [0.005, 0.0])
    pred = analysis.kernel_predict_grid(
        "TM_SINGLE", grid.points(), np.array([[0.0, 0.0]]), k=K1
    )
    image = imaging.ImageMap(grid=grid, values=pred)
    metrics = analysis.validate_map(
        image, crack, "TM_SINGLE", {"k": K1, "m_samples": 1}
    )
    assert metrics["sup_deviation"] == 0.0
    assert metrics["contrast"] > 1.0
    outside = geometry.line_segment([5.0, 5.0], [5.2, 5.0])
    with pytest.raises(ConfigError):
        analysis.validate_map(image, outside, "TM_SINGLE", {"k": K1})


def test_first_sidelobe_ratio_ordering():
    rr = np.arange(0.0, 3.0, 1e-3)
    pts = np.stack([rr, np.zeros_like(rr)], axis=1)
    origin = np.array([[0.0, 0.0]])
    prof_unit = analysis.kernel_predict_grid("TM_BAND", pts, origin, k_first=K1, k_last=KF)
    prof_weighted = analysis.kernel_predict_grid(
        "TM_WEIGHTED_BAND", pts, origin, k_first=K1, k_last=KF
    )
    assert analysis.first_sidelobe_ratio(prof_weighted) <= analysis.first_sidelobe_ratio(
        prof_unit
    )


def test_unknown_regime_rejected():
    with pytest.raises(ConfigError):
        analysis.kernel_predict("TM_NOPE", [0.0, 0.0], np.array([[0.0, 0.0]]))

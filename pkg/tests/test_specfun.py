"""Special-function tests: trivial identities, independent series oracles,
bisection-located zeros, and regime-sweep invariants."""

import math

import numpy as np
import pytest
import scipy.special as sp

from arcmig import specfun
from arcmig.errors import DomainError


def series_j_oracle(n, x, terms=80):
    """Plain ascending power series, written independently of the package."""
    term = (x / 2.0) ** n / math.factorial(n)
    total = term
    for m in range(1, terms):
        term *= -(x / 2.0) ** 2 / (m * (n + m))
        total += term
    return total


def series_y0_oracle(x, terms=80):
    gamma = 0.5772156649015328606
    j0 = series_j_oracle(0, x, terms)
    acc = 0.0
    term = 1.0
    harm = 0.0
    for m in range(1, terms):
        term *= (x / 2.0) ** 2 / (m * m)
        harm += 1.0 / m
        acc += (-1.0) ** (m + 1) * harm * term
    return (2.0 / math.pi) * ((math.log(x / 2.0) + gamma) * j0 + acc)


def test_j0_at_zero_is_one():
    assert specfun.bessel_j(0, 0.0) == 1.0


def test_jn_at_zero_vanishes():
    for n in range(1, 8):
        assert specfun.bessel_j(n, 0.0) == 0.0


def test_first_zero_of_j0_by_bisection():
    # locate the first zero of the independent series oracle, then check
    # the implementation vanishes there
    lo, hi = 2.0, 3.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if series_j_oracle(0, lo) * series_j_oracle(0, mid) <= 0.0:
            hi = mid
        else:
            lo = mid
    zero = 0.5 * (lo + hi)
    assert abs(zero - 2.404825557695773) < 1e-12
    assert abs(specfun.bessel_j(0, zero)) < 1e-10


def test_hankel_real_part_is_j():
    for x in [0.3, 1.7, 9.4, 25.0, 400.0]:
        h = specfun.hankel1(0, x)
        assert h.real == specfun.bessel_j(0, x)


def test_hankel0_at_one_series_oracle():
    h = specfun.hankel1(0, 1.0)
    assert abs(h.real - series_j_oracle(0, 1.0)) < 1e-14
    assert abs(h.imag - series_y0_oracle(1.0)) < 1e-13
    assert abs(h - (0.76519768655 + 0.08825696421j)) < 1e-10


def test_hankel0_small_argument_log_growth():
    # Im H_0(x) -> (2/pi) ln(x/2) to leading order as x -> 0+
    gamma = 0.5772156649015328606
    x = 1e-4
    h = specfun.hankel1(0, x)
    expansion = (2.0 / math.pi) * (math.log(x / 2.0) + gamma)
    # neglected terms are O(x^2 ln x)
    assert abs(h.imag - expansion) < 1e-7
    assert h.imag < -5.0


def test_hankel1_order_one_against_scipy():
    xs = np.array([0.05, 0.8, 3.1, 11.0, 44.0, 600.0])
    mine = specfun.hankel1_many(1, xs)
    ref = sp.hankel1(1, xs)
    assert np.max(np.abs(mine - ref)) < 1e-10


def test_bessel_broad_accuracy_vs_independent_implementation():
    # abs error <= 1e-12 for x <= 1e3 and n <= 64
    rng = np.random.default_rng(42)
    xs = np.concatenate([rng.uniform(0.0, 20.0, 250), rng.uniform(20.0, 1000.0, 250)])
    for n in [0, 1, 2, 7, 19, 33, 64]:
        err = np.max(np.abs(specfun.bessel_j_many(n, xs) - sp.jv(n, xs)))
        assert err < 1e-12, f"n={n}: {err}"


def test_bessel_bound_invariant():
    rng = np.random.default_rng(3)
    xs = rng.uniform(0.0, 200.0, 300)
    for n in [0, 1, 2, 5, 12, 30]:
        vals = np.abs(specfun.bessel_j_many(n, xs))
        bound = np.minimum(1.0, (xs**n) / (2.0**n * math.factorial(n)))
        assert np.all(vals <= bound + 1e-12)


def test_recurrence_consistency():
    rng = np.random.default_rng(4)
    xs = rng.uniform(0.1, 100.0, 200)
    for n in range(1, 20):
        lhs = specfun.bessel_j_many(n - 1, xs) + specfun.bessel_j_many(n + 1, xs)
        rhs = (2.0 * n / xs) * specfun.bessel_j_many(n, xs)
        assert np.max(np.abs(lhs - rhs)) < 1e-9
    # recurrence at fixed x across all orders from one table call
    table = specfun.bessel_j_table(21, np.array([0.5, 7.7, 60.0]))
    for n in range(1, 20):
        lhs = table[n - 1] + table[n + 1]
        rhs = 2.0 * n / np.array([0.5, 7.7, 60.0]) * table[n]
        assert np.max(np.abs(lhs - rhs)) < 1e-9


def test_asymptotic_agreement():
    rng = np.random.default_rng(5)
    xs = rng.uniform(50.0, 1000.0, 200)
    for n in range(4):
        approx = np.sqrt(2.0 / (np.pi * xs)) * np.cos(xs - 0.5 * n * np.pi - 0.25 * np.pi)
        err = np.abs(specfun.bessel_j_many(n, xs) - approx)
        assert np.all(err <= 0.5 / xs)


def test_jacobi_anger_zero_argument():
    for phi in [0.0, 0.4, 2.0]:
        for L in [0, 3, 25]:
            assert specfun.jacobi_anger_partial(0.0, phi, L) == 1.0 + 0.0j


def test_jacobi_anger_direct_exponential():
    val = specfun.jacobi_anger_partial(3.0, 0.0, 40)
    assert abs(val - np.exp(3.0j)) < 1e-10


def test_jacobi_anger_error_decreases_beyond_z():
    z, phi = 5.0, 1.0
    target = np.exp(1j * z * math.cos(phi))
    errs = [abs(specfun.jacobi_anger_partial(z, phi, L) - target) for L in range(6, 31)]
    # the added term at step L carries a cos(L*phi) factor that can nearly
    # vanish, so the decay is monotone along each parity class until the
    # error reaches the rounding floor
    floor = 1e-13
    for parity in (0, 1):
        seq = errs[parity::2]
        for a, b in zip(seq, seq[1:]):
            if a <= floor:
                break
            assert b < a
    assert errs[-1] < floor


def test_jacobi_anger_uniform_convergence():
    rng = np.random.default_rng(6)
    for _ in range(40):
        z = rng.uniform(0.0, 20.0)
        phi = rng.uniform(0.0, 2.0 * np.pi)
        val = specfun.jacobi_anger_partial(z, phi, int(math.ceil(z)) + 40)
        assert abs(val - np.exp(1j * z * math.cos(phi))) < 1e-12


def test_default_truncation_rule():
    # default L = ceil(z) + 20: tail is super-exponentially small but not
    # yet at machine level for z near 20
    z = 17.3
    a = specfun.jacobi_anger_partial(z, 0.7)
    b = specfun.jacobi_anger_partial(z, 0.7, int(math.ceil(z)) + 60)
    assert abs(a - b) < 1e-9


def test_domain_errors():
    with pytest.raises(DomainError):
        specfun.bessel_j(-1, 1.0)
    with pytest.raises(DomainError):
        specfun.bessel_j(2, float("nan"))
    with pytest.raises(DomainError):
        specfun.bessel_j(2, float("inf"))
    with pytest.raises(DomainError):
        specfun.hankel1(0, 0.0)
    with pytest.raises(DomainError):
        specfun.hankel1(0, -1.0)
    with pytest.raises(DomainError):
        specfun.hankel1(2, 1.0)


def test_negative_argument_reflection():
    assert abs(specfun.bessel_j(2, -3.0) - specfun.bessel_j(2, 3.0)) < 1e-15
    assert abs(specfun.bessel_j(3, -3.0) + specfun.bessel_j(3, 3.0)) < 1e-15


def test_backend_parity():
    from arcmig import _kernels_py
    from arcmig.backend import BACKEND, kernels

    if BACKEND != "compiled":
        pytest.skip("compiled backend not built")
    xs = np.concatenate(
        [np.linspace(0.0, 8.9, 57), np.linspace(9.0, 17.9, 41), np.linspace(18.1, 900.0, 63)]
    )
    assert np.max(np.abs(kernels.j0v(xs) - _kernels_py.j0v(xs))) < 1e-13
    assert np.max(np.abs(kernels.j1v(xs) - _kernels_py.j1v(xs))) < 1e-13
    pos = xs[xs > 0]
    assert np.max(np.abs(kernels.y0v(pos) - _kernels_py.y0v(pos))) < 1e-12
    assert np.max(np.abs(kernels.jn_table(30, xs) - _kernels_py.jn_table(30, xs))) < 1e-13

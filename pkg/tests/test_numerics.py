import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose
from scipy import special

from dyadreg.exceptions import NonFiniteError, OutOfDomainError, RankDeficientError
from dyadreg.numerics import (
    betainc,
    normal_quantile,
    solve,
    sym_eigen,
    sym_inverse,
    t_cdf,
    t_quantile,
)


def bisect(f, lo, hi, target, iters=200):
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if f(mid) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def oracle_normal_quantile(p):
    # erfc keeps relative accuracy in the lower tail
    return bisect(lambda x: 0.5 * math.erfc(-x / math.sqrt(2)), -40, 40, p)


def oracle_t_quantile(p, df):
    # scipy's incomplete beta, independent of the implementation under test
    def cdf(t):
        x = df / (df + t * t)
        tail = 0.5 * special.betainc(df / 2, 0.5, x)
        return 1 - tail if t > 0 else tail

    return bisect(cdf, -1e4, 1e4, p)


# -- eigen -------------------------------------------------------------------


def test_eigen_diagonal():
    e = sym_eigen(np.diag([3.0, 1.0]))
    assert_allclose(e.eigenvalues, [3.0, 1.0])
    assert_allclose(np.abs(e.eigenvectors), np.eye(2))


def test_eigen_analytic_2x2():
    e = sym_eigen([[2.0, 1.0], [1.0, 2.0]])
    assert_allclose(e.eigenvalues, [3.0, 1.0], atol=1e-14)
    v = e.eigenvectors
    s = 1 / math.sqrt(2)
    assert_allclose(np.abs(v[:, 0]), [s, s], atol=1e-14)
    assert_allclose(abs(v[:, 1] @ np.array([s, -s])), 1.0, atol=1e-14)


def _residuals(a):
    e = sym_eigen(a)
    u = e.eigenvectors
    recon = np.abs(u @ np.diag(e.eigenvalues) @ u.T - a).max()
    ortho = np.abs(u.T @ u - np.eye(a.shape[0])).max()
    return e, recon, ortho


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 7))
def test_eigen_invariants_random(seed, k):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(k, k)) * 10.0 ** rng.uniform(-3, 3)
    a = a + a.T
    e, recon, ortho = _residuals(a)
    assert recon <= 1e-10 * (1 + np.abs(a).max())
    assert ortho <= 1e-10
    assert np.all(np.diff(e.eigenvalues) <= 0)
    assert_allclose(e.eigenvalues, np.sort(np.linalg.eigvalsh(a))[::-1],
                    atol=1e-10 * (1 + np.abs(a).max()))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(-50, 50))
def test_eigen_shift(seed, c):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(4, 4))
    a = a + a.T
    base = sym_eigen(a).eigenvalues
    shifted, recon, _ = _residuals(a + c * np.eye(4))
    assert_allclose(shifted.eigenvalues, base + c, atol=1e-9)
    assert recon <= 1e-10 * (1 + np.abs(a + c * np.eye(4)).max())


def test_eigen_zero_and_nonfinite():
    e = sym_eigen(np.zeros((3, 3)))
    assert_allclose(e.eigenvalues, 0.0)
    with pytest.raises(NonFiniteError):
        sym_eigen([[1.0, np.nan], [np.nan, 1.0]])


def test_eigen_repeated_eigenvalues():
    q, _ = np.linalg.qr(np.random.default_rng(3).normal(size=(5, 5)))
    a = q @ np.diag([2.0, 2.0, 2.0, -1.0, -1.0]) @ q.T
    e, recon, ortho = _residuals(a)
    assert recon <= 1e-12 and ortho <= 1e-12
    assert_allclose(e.eigenvalues, [2, 2, 2, -1, -1], atol=1e-12)


def test_solve_and_inverse():
    rng = np.random.default_rng(0)
    a = rng.normal(size=(4, 4))
    b = rng.normal(size=4)
    assert_allclose(solve(a, b), np.linalg.solve(a, b), rtol=1e-12)
    s = a @ a.T + np.eye(4)
    assert_allclose(sym_inverse(s) @ s, np.eye(4), atol=1e-12)
    with pytest.raises(RankDeficientError):
        solve([[1.0, 2.0], [2.0, 4.0]], [1.0, 1.0])


# -- normal --------------------------------------------------------------------


def test_normal_quantile_values():
    assert normal_quantile(0.5) == 0.0
    assert normal_quantile(0.975) == pytest.approx(oracle_normal_quantile(0.975), abs=1e-10)
    assert normal_quantile(0.975) == pytest.approx(1.959964, abs=1e-6)


@pytest.mark.parametrize("p", [1e-12, 1e-6, 0.01, 0.2, 0.5, 0.7, 0.99, 1 - 1e-9])
def test_normal_quantile_against_erf_inversion(p):
    assert normal_quantile(p) == pytest.approx(oracle_normal_quantile(p), abs=1e-8)


@settings(max_examples=100)
@given(st.floats(1e-4, 1 - 1e-4))
def test_normal_quantile_antisymmetric(p):
    # far tails amplify the rounding of 1 - p
    assert normal_quantile(p) == pytest.approx(-normal_quantile(1 - p), abs=1e-8)


@pytest.mark.parametrize("p", [0.0, 1.0, -0.1, 1.5])
def test_normal_quantile_domain(p):
    with pytest.raises(OutOfDomainError):
        normal_quantile(p)


# -- incomplete beta / t ---------------------------------------------------------


@settings(max_examples=200, deadline=None)
@given(st.floats(0.05, 500), st.floats(0.05, 500), st.floats(0, 1))
def test_betainc_against_scipy(a, b, x):
    assert betainc(a, b, x) == pytest.approx(special.betainc(a, b, x), abs=1e-12)


def test_t_quantile_cauchy():
    assert t_quantile(0.975, 1) == pytest.approx(math.tan(math.pi * 0.475), abs=1e-10)
    assert t_quantile(0.975, 1) == pytest.approx(12.70620, abs=1e-4)
    # exercise the general (non closed-form) path right next to df = 1
    assert t_quantile(0.975, 1 + 1e-12) == pytest.approx(12.70620, abs=1e-4)


def test_t_quantile_df10():
    oracle = oracle_t_quantile(0.975, 10)
    assert oracle == pytest.approx(2.228139, abs=1e-6)
    assert t_quantile(0.975, 10) == pytest.approx(oracle, abs=1e-8)


def test_t_quantile_large_df_limit():
    assert t_quantile(0.975, 1e7) == pytest.approx(normal_quantile(0.975), abs=1e-5)
    assert t_quantile(0.975, math.inf) == normal_quantile(0.975)


@pytest.mark.parametrize("df", [0.2, 0.5, 0.9, 1.5, 2.0, 3.0, 5.769, 9.8, 30, 100, 1e4])
@pytest.mark.parametrize("p", [0.6, 0.9, 0.975, 0.995, 0.9999])
def test_t_quantile_against_oracle(p, df):
    oracle = oracle_t_quantile(p, df) if df >= 1 else None
    got = t_quantile(p, df)
    if oracle is not None and abs(oracle) < 1e4 * 0.99:
        assert got == pytest.approx(oracle, abs=1e-6)
    # round trip through the CDF holds everywhere, heavy tails included
    assert t_cdf(got, df) == pytest.approx(p, abs=1e-6)
    assert t_quantile(1 - p, df) == pytest.approx(-got, rel=1e-12)


def test_t_quantile_monotone_grid():
    ps = np.linspace(0.51, 0.999, 40)
    dfs = [0.5, 1, 2.5, 4, 8, 16, 50, 200]
    for df in dfs:
        qs = [t_quantile(p, df) for p in ps]
        assert np.all(np.diff(qs) > 0)
    for p in (0.6, 0.9, 0.975):
        qs = [t_quantile(p, df) for df in dfs]
        assert np.all(np.diff(qs) < 0)


@pytest.mark.parametrize("p, df", [(0.0, 3), (1.0, 3), (0.5, 0.0), (0.5, -1.0), (0.9, float("nan"))])
def test_t_quantile_domain(p, df):
    with pytest.raises(OutOfDomainError):
        t_quantile(p, df)

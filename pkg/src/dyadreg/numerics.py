"""Small dense numerics: symmetric eigendecomposition and critical values.

The matrices handled here are K x K with K the number of regressors, so the
eigensolver is a plain cyclic Jacobi iteration. Student-t quantiles accept a
real-valued number of degrees of freedom because the graph-based df
correction is rarely an integer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import NormalDist

import numpy as np

from dyadreg.exceptions import (
    DimensionMismatchError,
    NoConvergenceError,
    NonFiniteError,
    OutOfDomainError,
    RankDeficientError,
)

__all__ = [
    "EigenDecomposition",
    "as_symmetric",
    "sym_eigen",
    "sym_inverse",
    "solve",
    "normal_cdf",
    "normal_quantile",
    "betainc",
    "t_cdf",
    "t_sf",
    "t_pdf",
    "t_quantile",
]

JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100

_STD_NORMAL = NormalDist()


@dataclass(frozen=True)
class EigenDecomposition:
    """Eigenvalues in descending order and matching orthonormal columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self, eigenvalues=None) -> np.ndarray:
        lam = self.eigenvalues if eigenvalues is None else np.asarray(eigenvalues)
        u = self.eigenvectors
        return as_symmetric((u * lam) @ u.T)


def as_symmetric(a) -> np.ndarray:
    """Return ``(a + a.T) / 2`` as a float array; rejects non-square input.

    The result is exactly symmetric, which is the storage contract for every
    matrix the estimator hands around.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatchError(f"expected a square matrix, got shape {a.shape}")
    return 0.5 * (a + a.T)


def _off_norm(a: np.ndarray) -> float:
    return float(np.linalg.norm(a - np.diag(np.diag(a))))


def sym_eigen(a) -> EigenDecomposition:
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Sweeps stop once the off-diagonal Frobenius norm falls below
    ``1e-12 * ||a||_F``.

    Raises
    ------
    NonFiniteError
        If ``a`` contains NaN or infinity.
    NoConvergenceError
        If 100 sweeps do not reach the tolerance.
    """
    a = as_symmetric(a)
    if not np.all(np.isfinite(a)):
        raise NonFiniteError("matrix has non-finite entries")
    k = a.shape[0]
    v = np.eye(k)
    a = a.copy()
    scale = np.linalg.norm(a)
    if scale == 0.0:
        return EigenDecomposition(np.zeros(k), v)
    tol = JACOBI_TOL * scale

    for _ in range(JACOBI_MAX_SWEEPS):
        off = _off_norm(a)
        if off <= tol:
            break
        for p in range(k - 1):
            for q in range(p + 1, k):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.hypot(theta, 1.0))
                c = 1.0 / math.hypot(t, 1.0)
                s = t * c
                # A <- J' A J with J the (p, q) rotation [[c, s], [-s, c]]
                ap = a[:, p].copy()
                aq = a[:, q].copy()
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                ap = a[p, :].copy()
                aq = a[q, :].copy()
                a[p, :] = c * ap - s * aq
                a[q, :] = s * ap + c * aq
                a[p, q] = a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    else:
        off = _off_norm(a)
        if off > tol:
            raise NoConvergenceError(
                f"Jacobi did not converge in {JACOBI_MAX_SWEEPS} sweeps (off={off:.3e})"
            )

    lam = np.diag(a).copy()
    order = np.argsort(-lam, kind="stable")
    return EigenDecomposition(lam[order], v[:, order])


def solve(a, b) -> np.ndarray:
    """Solve ``a x = b`` by Gaussian elimination with partial pivoting.

    ``a`` is treated as singular when its smallest pivot falls below
    ``1e-14`` times its largest absolute entry. ``b`` may be a vector or a
    matrix of right-hand sides.
    """
    a = np.array(a, dtype=float)
    b = np.array(b, dtype=float)
    n = a.shape[0]
    if a.shape != (n, n) or b.shape[0] != n:
        raise DimensionMismatchError(f"incompatible shapes {a.shape} and {b.shape}")
    vec = b.ndim == 1
    if vec:
        b = b[:, None]
    scale = np.abs(a).max() if a.size else 0.0
    if scale == 0.0:
        raise RankDeficientError("matrix is zero")
    for col in range(n):
        piv = col + int(np.argmax(np.abs(a[col:, col])))
        if abs(a[piv, col]) <= 1e-14 * scale:
            raise RankDeficientError("matrix is numerically singular")
        if piv != col:
            a[[col, piv]] = a[[piv, col]]
            b[[col, piv]] = b[[piv, col]]
        f = a[col + 1:, col] / a[col, col]
        a[col + 1:, col:] -= np.outer(f, a[col, col:])
        b[col + 1:] -= np.outer(f, b[col])
    x = np.zeros_like(b)
    for row in range(n - 1, -1, -1):
        x[row] = (b[row] - a[row, row + 1:] @ x[row + 1:]) / a[row, row]
    return x[:, 0] if vec else x


def sym_inverse(a) -> np.ndarray:
    a = as_symmetric(a)
    return as_symmetric(solve(a, np.eye(a.shape[0])))


# -- normal distribution -----------------------------------------------------


def normal_cdf(x: float) -> float:
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def normal_quantile(p: float) -> float:
    """Inverse standard-normal CDF (Wichura's AS241 via the stdlib)."""
    if not 0.0 < p < 1.0:
        raise OutOfDomainError(f"probability must lie in (0, 1), got {p!r}")
    return _STD_NORMAL.inv_cdf(p)


# -- incomplete beta / Student t --------------------------------------------

_BETACF_EPS = 3e-16
_TINY = 1e-300


def _betacf(a: float, b: float, x: float) -> float:
    # Modified Lentz evaluation of the incomplete-beta continued fraction.
    max_iter = 1000 + int(10 * math.sqrt(max(a, b)))
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _BETACF_EPS:
            return h
    raise NoConvergenceError(f"incomplete beta fraction failed for a={a}, b={b}, x={x}")


def betainc(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta function ``I_x(a, b)``."""
    if a <= 0 or b <= 0:
        raise OutOfDomainError("betainc needs a > 0 and b > 0")
    if not 0.0 <= x <= 1.0:
        raise OutOfDomainError(f"betainc needs x in [0, 1], got {x!r}")
    if x == 0.0 or x == 1.0:
        return x
    log_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(x) + b * math.log1p(-x)
    )
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def _check_df(df: float) -> float:
    df = float(df)
    if not df > 0 or math.isnan(df):
        raise OutOfDomainError(f"degrees of freedom must be positive, got {df!r}")
    return df


def t_sf(t: float, df: float) -> float:
    """Upper tail ``P(T > t)`` of Student's t with real ``df``."""
    df = _check_df(df)
    if math.isinf(df):
        return normal_cdf(-t)
    if t == 0.0:
        return 0.5
    t2 = t * t
    if t2 < df:
        # I_{t^2/(df+t^2)}(1/2, df/2) is accurate near the centre
        half = 0.5 * betainc(0.5, 0.5 * df, t2 / (df + t2))
        return 0.5 - half if t > 0 else 0.5 + half
    tail = 0.5 * betainc(0.5 * df, 0.5, df / (df + t2))
    return tail if t > 0 else 1.0 - tail


def t_cdf(t: float, df: float) -> float:
    return t_sf(-t, df)


def t_pdf(t: float, df: float) -> float:
    df = _check_df(df)
    log_c = (
        math.lgamma(0.5 * (df + 1.0)) - math.lgamma(0.5 * df)
        - 0.5 * math.log(df * math.pi)
    )
    return math.exp(log_c - 0.5 * (df + 1.0) * math.log1p(t * t / df))


def _cornish_fisher(z: float, df: float) -> float:
    z2 = z * z
    g1 = (z2 + 1.0) * z / 4.0
    g2 = ((5.0 * z2 + 16.0) * z2 + 3.0) * z / 96.0
    g3 = (((3.0 * z2 + 19.0) * z2 + 17.0) * z2 - 15.0) * z / 384.0
    return z + g1 / df + g2 / df**2 + g3 / df**3


def t_quantile(p: float, df: float) -> float:
    """Inverse CDF of Student's t with real ``df > 0``.

    Works on the upper tail probability so that quantiles far in the tail
    keep full relative accuracy. A Cornish-Fisher starting value is refined
    by Newton steps, falling back to bisection whenever a step leaves the
    current bracket.
    """
    if not 0.0 < p < 1.0:
        raise OutOfDomainError(f"probability must lie in (0, 1), got {p!r}")
    df = _check_df(df)
    if p == 0.5:
        return 0.0
    if p < 0.5:
        return -t_quantile(1.0 - p, df)
    if df == 1.0:
        return math.tan(math.pi * (p - 0.5))
    q = 1.0 - p
    if math.isinf(df):
        return normal_quantile(p)

    z = normal_quantile(p)
    guess = _cornish_fisher(z, df) if df > 4 else max(z, 1.0)
    lo, hi = 0.0, max(guess, 1e-3)
    while t_sf(hi, df) > q:
        lo = hi
        hi *= 2.0
        if hi > 1e300:
            raise NoConvergenceError(f"no bracket for t quantile p={p}, df={df}")
    x = min(max(guess, lo), hi)
    for _ in range(200):
        f = t_sf(x, df) - q
        if f > 0:
            lo = x
        else:
            hi = x
        dens = t_pdf(x, df)
        step = f / dens if dens > 0 else math.inf
        nxt = x + step
        if not lo < nxt < hi:
            nxt = 0.5 * (lo + hi)
        if abs(nxt - x) <= 1e-14 * max(1.0, abs(x)):
            return nxt
        x = nxt
        if hi - lo <= 1e-14 * max(1.0, hi):
            return 0.5 * (lo + hi)
    raise NoConvergenceError(f"t quantile did not converge for p={p}, df={df}")

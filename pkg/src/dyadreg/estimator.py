"""OLS and the dyadic-robust sandwich variance estimator.

The meat of the sandwich sums ``u_n u_m x_n x_m'`` over every ordered pair of
dyads that share a unit, the diagonal ``n == m`` included. Rather than scan
all ``N^2`` pairs, scores are summed per unit: for unit ``g`` let
``s_g = sum_{n contains g} u_n x_n``. Then ``sum_g s_g s_g'`` covers every
overlapping ordered pair exactly once (two distinct dyads share at most one
unit) and every diagonal term twice, once per endpoint, so

    meat = sum_g s_g s_g' - sum_n u_n^2 x_n x_n'.

:class:`DyadicRobustOLS` wraps the functional API in a scikit-learn style
estimator.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from dyadreg.exceptions import (
    DimensionMismatchError,
    InputError,
    NonFiniteError,
    RankDeficientError,
    TooFewObservationsError,
)
from dyadreg.graph import DyadGraph, GraphDiagnostics, build_graph, diagnostics
from dyadreg.numerics import as_symmetric, solve, sym_eigen, sym_inverse

__all__ = [
    "DyadDataset",
    "OlsFit",
    "PsdPolicy",
    "RobustVariance",
    "ols_fit",
    "meat",
    "sandwich",
    "psd_correct",
    "DyadicRobustOLS",
]

RANK_TOL = 1e-10
DEFAULT_EPS = 1e-7


@dataclass(frozen=True, eq=False)
class DyadDataset:
    """A dyad graph with one outcome and one regressor row per dyad."""

    graph: DyadGraph
    y: np.ndarray
    x: np.ndarray

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        x = np.asarray(self.x, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        if y.ndim != 1 or x.ndim != 2:
            raise DimensionMismatchError("y must be a vector and x a matrix")
        n = self.graph.num_dyads
        if y.shape[0] != n or x.shape[0] != n:
            raise DimensionMismatchError(
                f"graph has {n} dyads but y has {y.shape[0]} and x has {x.shape[0]} rows"
            )
        if not (np.all(np.isfinite(y)) and np.all(np.isfinite(x))):
            raise NonFiniteError("y and x must be finite")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "x", x)

    @classmethod
    def from_arrays(cls, graph, y, x, add_intercept: bool = False) -> "DyadDataset":
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        if add_intercept:
            x = np.column_stack([np.ones(x.shape[0]), x])
        return cls(graph, y, x)

    @property
    def num_regressors(self) -> int:
        return self.x.shape[1]


@dataclass(frozen=True, eq=False)
class OlsFit:
    beta_hat: np.ndarray
    residuals: np.ndarray
    xtx: np.ndarray


@dataclass(frozen=True)
class PsdPolicy:
    """How to repair a sandwich estimate that is not positive definite.

    ``kind`` is ``"none"``, ``"clamp_zero"`` (floor eigenvalues at 0) or
    ``"clamp_eps"`` (floor eigenvalues at ``eps``).
    """

    kind: str = "clamp_eps"
    eps: float = DEFAULT_EPS

    def __post_init__(self):
        if self.kind not in ("none", "clamp_zero", "clamp_eps"):
            raise InputError(f"unknown PSD policy {self.kind!r}")
        if self.kind == "clamp_eps" and not self.eps > 0:
            raise InputError("clamp_eps needs a positive eps")

    @property
    def floor(self) -> float | None:
        if self.kind == "clamp_zero":
            return 0.0
        if self.kind == "clamp_eps":
            return float(self.eps)
        return None

    @classmethod
    def parse(cls, value) -> "PsdPolicy":
        """Accept a policy, a name (``clamp-eps``/``clamp_eps``) or ``None``."""
        if isinstance(value, PsdPolicy):
            return value
        if value is None:
            return cls("none")
        raw = str(value).strip().lower()
        head, paren, arg = raw.partition("(")
        name = head.strip().replace("-", "_")
        if paren:
            if name != "clamp_eps" or not arg.endswith(")"):
                raise InputError(f"unknown PSD policy {value!r}")
            try:
                return cls("clamp_eps", float(arg[:-1]))
            except ValueError:
                raise InputError(f"bad eps in PSD policy {value!r}") from None
        if name == "clamp_eps":
            return cls("clamp_eps", DEFAULT_EPS)
        return cls(name, DEFAULT_EPS)

    def __str__(self) -> str:
        if self.kind == "clamp_eps":
            return f"clamp_eps({self.eps:g})"
        return self.kind


NONE = PsdPolicy("none")
CLAMP_ZERO = PsdPolicy("clamp_zero")
CLAMP_EPS = PsdPolicy("clamp_eps", DEFAULT_EPS)


@dataclass(frozen=True, eq=False)
class RobustVariance:
    v_raw: np.ndarray
    v_used: np.ndarray
    eigenvalues_raw: np.ndarray
    policy: PsdPolicy = field(default=CLAMP_EPS)
    n_clamped: int = 0
    multiplier: float = 1.0

    @property
    def se(self) -> np.ndarray:
        return np.sqrt(np.clip(np.diag(self.v_used), 0.0, None))


def ols_fit(data: DyadDataset) -> OlsFit:
    """Least squares fit of ``y`` on ``x``.

    Raises
    ------
    TooFewObservationsError
        If there are fewer dyads than regressors.
    RankDeficientError
        If the smallest eigenvalue of ``X'X`` is below ``1e-10`` times the
        largest.
    """
    x, y = data.x, data.y
    n, k = x.shape
    if n < k:
        raise TooFewObservationsError(f"{n} observations for {k} regressors")
    xtx = as_symmetric(x.T @ x)
    lam = sym_eigen(xtx).eigenvalues
    if not lam[-1] > RANK_TOL * lam[0]:
        raise RankDeficientError(
            f"X'X is rank deficient (eigenvalues {lam[0]:.3e} .. {lam[-1]:.3e})"
        )
    xty = x.T @ y
    beta = solve(xtx, xty)
    resid = y - x @ beta
    # one step of iterative refinement tightens the normal equations
    beta = beta + solve(xtx, x.T @ resid)
    resid = y - x @ beta
    return OlsFit(beta, resid, xtx)


def meat(data: DyadDataset, fit: OlsFit) -> np.ndarray:
    """Dyadic-robust meat ``sum_{n,m overlapping} u_n u_m x_n x_m'``."""
    resid = np.asarray(fit.residuals, dtype=float)
    if resid.shape != (data.graph.num_dyads,):
        raise DimensionMismatchError("residuals do not match the dataset")
    scores = resid[:, None] * data.x
    graph = data.graph
    num_units = graph.num_units
    first, second = graph.first, graph.second
    k = scores.shape[1]
    unit_sums = np.empty((num_units, k))
    for j in range(k):
        col = scores[:, j]
        unit_sums[:, j] = np.bincount(first, col, num_units) + np.bincount(
            second, col, num_units
        )
    return as_symmetric(unit_sums.T @ unit_sums - scores.T @ scores)


def psd_correct(v, policy="clamp_eps") -> tuple[np.ndarray, int]:
    """Floor the eigenvalues of ``v`` according to ``policy``.

    Returns the corrected matrix and the number of eigenvalues that were
    raised. When nothing is raised the input comes back unchanged.
    """
    policy = PsdPolicy.parse(policy)
    v = as_symmetric(v)
    if policy.floor is None:
        return v, 0
    eig = sym_eigen(v)
    lam = eig.eigenvalues
    clamped = int(np.count_nonzero(lam < policy.floor))
    if clamped == 0:
        return v, 0
    out = eig.reconstruct(np.maximum(lam, policy.floor))
    # reconstruction roundoff can leave the smallest eigenvalue a hair under the floor
    low = sym_eigen(out).eigenvalues[-1]
    if low < policy.floor:
        out = out + (policy.floor - low) * np.eye(out.shape[0])
    return out, clamped


def sandwich(
    data: DyadDataset, psd_policy="clamp_eps", multiplier: float = 1.0
) -> tuple[OlsFit, RobustVariance]:
    """Fit OLS and compute the dyadic-robust variance of the coefficients.

    ``multiplier`` scales the raw estimate before correction; it defaults to
    1, i.e. no small-sample adjustment.
    """
    policy = PsdPolicy.parse(psd_policy)
    fit = ols_fit(data)
    bread = sym_inverse(fit.xtx)
    v_raw = as_symmetric(multiplier * (bread @ meat(data, fit) @ bread))
    lam = sym_eigen(v_raw).eigenvalues
    v_used, clamped = psd_correct(v_raw, policy)
    return fit, RobustVariance(v_raw, v_used, lam, policy, clamped, float(multiplier))


def _coerce_graph(dyads, n_rows: int, num_units=None) -> tuple[DyadGraph, list | None]:
    if isinstance(dyads, DyadGraph):
        graph, labels = dyads, None
    else:
        pairs = np.asarray(dyads, dtype=object)
        if pairs.ndim != 2 or pairs.shape[1] != 2:
            raise DimensionMismatchError("dyads must have shape (n_samples, 2)")
        try:
            edges = [(int(g), int(h)) for g, h in pairs]
            labels = None
            if num_units is None:
                num_units = max(max(e) for e in edges) if edges else 0
        except (TypeError, ValueError):
            labels = []
            index: dict = {}
            edges = []
            for g, h in pairs:
                for lab in (g, h):
                    if lab not in index:
                        index[lab] = len(labels) + 1
                        labels.append(lab)
                edges.append((index[g], index[h]))
            num_units = len(labels)
        graph = build_graph(edges, num_units)
    if graph.num_dyads != n_rows:
        raise DimensionMismatchError(
            f"{graph.num_dyads} dyads for {n_rows} samples"
        )
    return graph, labels


class DyadicRobustOLS(RegressorMixin, BaseEstimator):
    """Linear regression with dyadic-robust standard errors.

    Parameters
    ----------
    fit_intercept : bool, default=True
        Prepend a column of ones to ``X``.
    psd_policy : {"clamp_eps", "clamp_zero", "none"}, default="clamp_eps"
        Eigenvalue repair applied to the sandwich estimate.
    eps : float, default=1e-7
        Eigenvalue floor used by ``"clamp_eps"``.
    level : float, default=0.95
        Default confidence level for :meth:`conf_int`.
    critical : {"normal", "t_kappa"}, default="normal"
        Default critical values for :meth:`conf_int`.

    Attributes
    ----------
    params_ : ndarray of shape (n_params,)
        All coefficients, intercept first when ``fit_intercept``.
    coef_, intercept_ :
        Slopes and intercept in the usual scikit-learn layout.
    vcov_, vcov_raw_ : ndarray
        Corrected and raw sandwich estimates for ``params_``.
    bse_ : ndarray
        Standard errors from ``vcov_``.
    graph_ : DyadGraph
    diagnostics_ : GraphDiagnostics
    n_clamped_ : int
    unit_labels_ : list or None
        Original unit labels when dyads were given as strings.

    Examples
    --------
    >>> model = DyadicRobustOLS().fit(X, y, dyads=pairs)  # doctest: +SKIP
    >>> model.conf_int(critical="t_kappa")  # doctest: +SKIP
    """

    def __init__(
        self,
        fit_intercept=True,
        psd_policy="clamp_eps",
        eps=DEFAULT_EPS,
        level=0.95,
        critical="normal",
    ):
        self.fit_intercept = fit_intercept
        self.psd_policy = psd_policy
        self.eps = eps
        self.level = level
        self.critical = critical

    def _policy(self) -> PsdPolicy:
        kind = PsdPolicy.parse(self.psd_policy).kind
        return PsdPolicy(kind, self.eps)

    def _design(self, X) -> np.ndarray:
        if self.fit_intercept:
            return np.column_stack([np.ones(X.shape[0]), X])
        return X

    def fit(self, X, y, dyads=None, num_units=None):
        """Fit the model.

        ``dyads`` is either a :class:`DyadGraph` aligned with the rows of
        ``X`` or an array of shape (n_samples, 2) of unit labels. Integer
        labels are used as 1-based unit ids; any other labels are numbered
        in order of first appearance.
        """
        if dyads is None:
            raise InputError("DyadicRobustOLS.fit needs the dyads of each sample")
        X, y = check_X_y(X, y, y_numeric=True, dtype=float)
        graph, labels = _coerce_graph(dyads, X.shape[0], num_units)
        data = DyadDataset(graph, y, self._design(X))
        fit, var = sandwich(data, self._policy())

        self.graph_ = graph
        self.unit_labels_ = labels
        self.diagnostics_: GraphDiagnostics = diagnostics(graph)
        self.fit_ = fit
        self.variance_ = var
        self.params_ = fit.beta_hat
        self.vcov_ = var.v_used
        self.vcov_raw_ = var.v_raw
        self.bse_ = var.se
        self.n_clamped_ = var.n_clamped
        self.residuals_ = fit.residuals
        if self.fit_intercept:
            self.intercept_ = float(fit.beta_hat[0])
            self.coef_ = fit.beta_hat[1:].copy()
        else:
            self.intercept_ = 0.0
            self.coef_ = fit.beta_hat.copy()
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "params_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise DimensionMismatchError(
                f"expected {self.n_features_in_} features, got {X.shape[1]}"
            )
        return self._design(X) @ self.params_

    def t_stats(self, beta0=0.0):
        check_is_fitted(self, "params_")
        return (self.params_ - beta0) / self.bse_

    def inference(self, k, beta0=0.0, level=None, critical=None):
        """:class:`~dyadreg.inference.InferenceResult` for parameter ``k``."""
        from dyadreg.inference import confidence_interval

        check_is_fitted(self, "params_")
        return confidence_interval(
            self.fit_,
            self.variance_,
            k,
            self.level if level is None else level,
            self.diagnostics_,
            critical=self.critical if critical is None else critical,
            beta0=beta0,
        )

    def conf_int(self, level=None, critical=None):
        """Array of shape (n_params, 2) with lower and upper bounds."""
        check_is_fitted(self, "params_")
        return np.array(
            [self.inference(k, level=level, critical=critical).ci
             for k in range(len(self.params_))]
        )

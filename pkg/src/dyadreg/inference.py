"""Dyadic-robust t-statistics and confidence intervals.

Two sets of critical values are supported: standard normal, and Student-t
with ``kappa = G * median(M_g) / max(M_g)`` degrees of freedom. The latter
widens intervals when a few hub units sit in far more dyads than the typical
unit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from dyadreg.estimator import OlsFit, RobustVariance
from dyadreg.exceptions import (
    IndexOutOfRangeError,
    InputError,
    NonPositiveVarianceError,
    OutOfDomainError,
)
from dyadreg.graph import GraphDiagnostics
from dyadreg.numerics import normal_quantile, t_quantile

__all__ = [
    "CRITICALS",
    "InferenceResult",
    "t_stat",
    "critical_value",
    "confidence_interval",
]

CRITICALS = ("normal", "t_kappa")


@dataclass(frozen=True)
class InferenceResult:
    coef_index: int
    beta_hat_k: float
    se_k: float
    t_stat: float
    beta0: float
    kappa: float
    level: float
    crit_normal: float
    crit_tkappa: float
    ci_normal: tuple[float, float]
    ci_tkappa: tuple[float, float]
    critical: str = "normal"

    @property
    def ci(self) -> tuple[float, float]:
        """The interval for the selected critical values."""
        return self.ci_tkappa if self.critical == "t_kappa" else self.ci_normal

    def covers(self, value: float, critical: str | None = None) -> bool:
        lo, hi = self.ci_tkappa if (critical or self.critical) == "t_kappa" else self.ci_normal
        return lo <= value <= hi


def normalize_critical(name: str) -> str:
    key = str(name).strip().lower().replace("-", "_")
    if key in ("tkappa", "t_kappa", "t"):
        return "t_kappa"
    if key == "normal":
        return "normal"
    raise InputError(f"unknown critical value family {name!r}")


def _check_index(fit: OlsFit, k: int) -> int:
    if not 0 <= k < len(fit.beta_hat):
        raise IndexOutOfRangeError(f"coefficient index {k} out of range")
    return int(k)


def _variance_kk(v: RobustVariance, k: int) -> float:
    var = float(v.v_used[k, k])
    if not var > 0:
        raise NonPositiveVarianceError(
            f"variance of coefficient {k} is {var!r}; use the clamp_eps policy"
        )
    return var


def t_stat(fit: OlsFit, v: RobustVariance, k: int, beta0: float = 0.0) -> float:
    """``(beta_hat_k - beta0) / sqrt(V_kk)`` using the corrected variance."""
    k = _check_index(fit, k)
    return (float(fit.beta_hat[k]) - beta0) / math.sqrt(_variance_kk(v, k))


def critical_value(level: float, critical: str = "normal", kappa: float | None = None) -> float:
    """Two-sided critical value at confidence ``level``."""
    if not 0.0 < level < 1.0:
        raise OutOfDomainError(f"level must lie in (0, 1), got {level!r}")
    p = 0.5 * (1.0 + level)
    if normalize_critical(critical) == "normal":
        return normal_quantile(p)
    if kappa is None:
        raise InputError("t_kappa critical values need kappa")
    return t_quantile(p, kappa)


def confidence_interval(
    fit: OlsFit,
    v: RobustVariance,
    k: int,
    level: float,
    diag: GraphDiagnostics,
    critical: str = "normal",
    beta0: float = 0.0,
) -> InferenceResult:
    """Intervals for coefficient ``k`` under both critical-value families.

    ``critical`` only selects which interval :attr:`InferenceResult.ci`
    returns; both are always computed.
    """
    k = _check_index(fit, k)
    critical = normalize_critical(critical)
    se = math.sqrt(_variance_kk(v, k))
    beta = float(fit.beta_hat[k])
    z = critical_value(level, "normal")
    tk = critical_value(level, "t_kappa", diag.kappa)
    return InferenceResult(
        coef_index=k,
        beta_hat_k=beta,
        se_k=se,
        t_stat=(beta - beta0) / se,
        beta0=float(beta0),
        kappa=float(diag.kappa),
        level=float(level),
        crit_normal=z,
        crit_tkappa=tk,
        ci_normal=(beta - z * se, beta + z * se),
        ci_tkappa=(beta - tk * se, beta + tk * se),
        critical=critical,
    )

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable

import numpy as np
from scipy import stats

from src.utils.errors import ContractError, InsufficientDataError

_MODULE = "experiments"

KS_LEVEL = 1e-3


class ScalingTransform(Enum):
    LOG_LOG = "LogLog"
    LOG_VS_R3 = "LogVsR3"


@dataclass(frozen=True)
class ScalingFit:
    transform: ScalingTransform
    slope: float
    intercept: float
    r_squared: float
    used: int = 0
    excluded: int = 0

    def as_dict(self) -> dict:
        return {
            "transform": self.transform.value,
            "slope": self.slope,
            "intercept": self.intercept,
            "r_squared": self.r_squared,
            "used": self.used,
            "excluded": self.excluded,
        }


def wilson_interval(hits: int, trials: int, confidence: float = 0.95) -> tuple[float, float]:
    if trials < 1:
        raise ContractError(_MODULE, f"need at least one trial, got {trials}")
    if not 0 <= hits <= trials:
        raise ContractError(_MODULE, f"hits {hits} outside [0, {trials}]")
    ci = stats.binomtest(hits, trials).proportion_ci(confidence_level=confidence, method="wilson")
    p = hits / trials
    return max(0.0, min(float(ci.low), p)), min(1.0, max(float(ci.high), p))


def fit_scaling_points(points: Iterable[tuple[float, float]], transform: ScalingTransform) -> ScalingFit:
    xs, ys = [], []
    excluded = 0
    for param, p_hat in points:
        if not 0.0 < p_hat < 1.0:
            excluded += 1
            continue
        if transform is ScalingTransform.LOG_LOG:
            if param <= 0:
                excluded += 1
                continue
            xs.append(math.log(param))
            ys.append(math.log(p_hat))
        else:
            xs.append(param**3)
            ys.append(-math.log(p_hat))
    if len(xs) < 3:
        raise InsufficientDataError(_MODULE, f"{len(xs)} usable points for a {transform.value} fit, need 3 ({excluded} excluded)")
    result = stats.linregress(xs, ys)
    r_squared = float(min(1.0, max(0.0, result.rvalue**2)))
    return ScalingFit(transform, float(result.slope), float(result.intercept), r_squared, len(xs), excluded)


def ks_exponential(samples, rate: float):
    return stats.kstest(np.asarray(samples, dtype=np.float64), "expon", args=(0.0, 1.0 / rate))


def ks_two_sample(a, b):
    return stats.ks_2samp(np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64))


def lag1_autocorrelation(samples) -> float:
    """Lag-1 correlation; a 2-D array is read row by row and only pairs inside one row count."""
    x = np.atleast_2d(np.asarray(samples, dtype=np.float64))
    lead, lag = x[:, :-1].ravel(), x[:, 1:].ravel()
    if lead.size < 2:
        raise InsufficientDataError(_MODULE, "autocorrelation needs at least 3 samples")
    return float(np.corrcoef(lead, lag)[0, 1])


def mean_within_sigma(samples, target: float, k: float = 3.0) -> bool:
    x = np.asarray(samples, dtype=np.float64)
    sigma = x.std(ddof=1) / math.sqrt(x.size)
    return bool(abs(x.mean() - target) <= k * sigma)


def mean_and_stderr(samples) -> tuple[float, float]:
    x = np.asarray(samples, dtype=np.float64)
    if x.size < 2:
        return float(x.mean()), float("nan")
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.size))


def variance_and_stderr(samples) -> tuple[float, float]:
    # normal-theory standard error of the sample variance from the fourth central moment
    x = np.asarray(samples, dtype=np.float64)
    n = x.size
    var = float(x.var(ddof=1))
    m4 = float(np.mean((x - x.mean()) ** 4))
    return var, math.sqrt(max(m4 - var * var * (n - 3) / (n - 1), 0.0) / n)

"""
Heavy-tail exponent estimation and the bridge between the degree
exponent gamma and the return-tail exponent m
"""

import logging
from typing import Literal, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from tradenet.exceptions import DomainError, EmptyInputError, InsufficientTailError
from tradenet.schemas import BoundsCheck, CcdfPoints, TailFit, TrendFit

logger = logging.getLogger(__name__)

# Return-tail exponent band implied by 2 <= gamma <= 3
M_MIN = 2.0
M_MAX = 3.5

MIN_REGRESSION_POINTS = 10
MIN_HILL_TAIL = 20
# Fewer distinct values than this in a fitted tail gets a discreteness note
MIN_DISTINCT_SUPPORT = 30


def _positive(samples: Sequence[float]) -> np.ndarray:
    values = np.asarray(samples, dtype=float)
    values = values[np.isfinite(values)]
    if values.size == 0:
        raise EmptyInputError("No samples")
    if np.any(values <= 0.0):
        raise DomainError("Tail samples must be positive")
    return values


def _support_note(values: np.ndarray) -> Optional[str]:
    distinct = np.unique(values).size
    if distinct < MIN_DISTINCT_SUPPORT:
        return f"discrete support: only {distinct} distinct values in the tail"
    return None


def ccdf(samples: Sequence[float]) -> CcdfPoints:
    """
    Empirical P(X >= s) evaluated at each distinct sample value

    Raises:
        EmptyInputError: If there are no samples
    """
    values = np.sort(_positive(samples))
    distinct, first = np.unique(values, return_index=True)
    fraction = (values.size - first) / values.size
    return CcdfPoints(s=distinct.tolist(), fraction=fraction.tolist())


def auto_s_min(samples: Sequence[float]) -> float:
    """Default regression cutoff: the 90th percentile of the sample"""
    return float(np.quantile(_positive(samples), 0.9))


def fit_ccdf_regression(points: CcdfPoints, s_min: float) -> TailFit:
    """
    Ordinary least squares on (ln s, ln P(X >= s)) for s >= s_min

    Raises:
        InsufficientTailError: If fewer than 10 points lie above s_min or
            the tail does not decay
    """
    s = np.asarray(points.s)
    fraction = np.asarray(points.fraction)
    mask = s >= s_min
    n_tail = int(mask.sum())
    if n_tail < MIN_REGRESSION_POINTS:
        raise InsufficientTailError(
            f"{n_tail} CCDF points above s_min={s_min:g}, need {MIN_REGRESSION_POINTS}"
        )

    fit = stats.linregress(np.log(s[mask]), np.log(fraction[mask]))
    if fit.slope >= 0.0:
        raise InsufficientTailError(f"CCDF tail does not decay (slope {fit.slope:.3g})")

    return TailFit(
        m_hat=float(-fit.slope),
        s_min=float(s_min),
        stderr=float(fit.stderr),
        n_tail=n_tail,
        method="regression",
        note=_support_note(s[mask]),
    )


def hill(samples: Sequence[float], tail_fraction: float = 0.1) -> TailFit:
    """
    Hill estimate of the CCDF exponent from the top tail_fraction order
    statistics, with asymptotic standard error m_hat / sqrt(n_tail)

    Raises:
        InsufficientTailError: If fewer than 20 samples are in the tail
    """
    if not 0.0 < tail_fraction < 1.0:
        raise DomainError(f"tail_fraction {tail_fraction} outside (0, 1)")
    values = np.sort(_positive(samples))[::-1]
    n_tail = int(np.floor(tail_fraction * values.size))
    if n_tail < MIN_HILL_TAIL or n_tail >= values.size:
        raise InsufficientTailError(
            f"{n_tail} samples in the top {tail_fraction:g} tail, need {MIN_HILL_TAIL}"
        )

    threshold = values[n_tail]
    log_excess = np.log(values[:n_tail] / threshold).sum()
    if log_excess <= 0.0:
        raise InsufficientTailError("Tail samples are all equal to the threshold")

    m_hat = n_tail / log_excess
    return TailFit(
        m_hat=float(m_hat),
        s_min=float(threshold),
        stderr=float(m_hat / np.sqrt(n_tail)),
        n_tail=n_tail,
        method="hill",
        note=_support_note(values[:n_tail]),
    )


def hill_diagnostic(
    samples: Sequence[float], fractions: Sequence[float] = (0.2, 0.1, 0.05, 0.01)
) -> Tuple[list[Tuple[float, float]], Optional[str]]:
    """
    Hill estimates over a ladder of shrinking tail fractions

    Returns:
        ((fraction, m_hat) pairs, note) where the note reports a steady
        upward drift, the signature of a lighter-than-power-law tail
    """
    ladder = []
    for fraction in sorted(fractions, reverse=True):
        try:
            ladder.append((fraction, hill(samples, fraction).m_hat))
        except InsufficientTailError:
            break

    estimates = [m for _, m in ladder]
    note = None
    if len(estimates) >= 3 and all(b > a for a, b in zip(estimates, estimates[1:])):
        if estimates[-1] > 1.2 * estimates[0]:
            note = (
                f"Hill estimate drifts upward from {estimates[0]:.3g} to "
                f"{estimates[-1]:.3g} as the tail shrinks; tail may not be a power law"
            )
            logger.warning(note)
    return ladder, note


def fit_tail(
    samples: Sequence[float],
    method: Literal["hill", "regression"] = "hill",
    tail_fraction: float = 0.1,
    s_min: Optional[float] = None,
) -> TailFit:
    """Dispatch to the configured estimator"""
    if method == "hill":
        return hill(samples, tail_fraction)
    cutoff = auto_s_min(samples) if s_min is None else s_min
    return fit_ccdf_regression(ccdf(samples), cutoff)


def tail_samples(
    returns: Sequence[float], side: Literal["loss", "gain", "absolute"]
) -> np.ndarray:
    """Positive magnitudes of one side of a return series; NaN gaps dropped"""
    values = np.asarray(returns, dtype=float)
    values = values[np.isfinite(values)]
    if side == "loss":
        return -values[values < 0.0]
    if side == "gain":
        return values[values > 0.0]
    return np.abs(values[values != 0.0])


def m_from_gamma(gamma: float) -> float:
    """m = 3 gamma / 2 - 1"""
    return 1.5 * gamma - 1.0


def gamma_from_m(m: float) -> float:
    """gamma = 2 (m + 1) / 3"""
    return 2.0 * (m + 1.0) / 3.0


def degree_gamma(fit: TailFit) -> float:
    """Density exponent gamma from a CCDF fit of a degree sample"""
    return fit.m_hat + 1.0


def classify_bounds(
    m_hat: float, stderr: float, low: float = M_MIN, high: float = M_MAX
) -> BoundsCheck:
    """
    Place an exponent against the closed band [low, high] and report
    whether its 2-sigma interval crosses a bound
    """
    if m_hat < low:
        classification = "below"
    elif m_hat > high:
        classification = "above"
    else:
        classification = "within"

    lo, hi = m_hat - 2.0 * stderr, m_hat + 2.0 * stderr
    crossed = [
        name for name, bound in (("lower bound", low), ("upper bound", high)) if lo < bound < hi
    ]
    interval = f"2-sigma interval [{lo:.4g}, {hi:.4g}]"
    if crossed:
        note = f"{interval} crosses the {' and '.join(crossed)} of [{low:g}, {high:g}]"
    else:
        note = f"{interval} does not cross [{low:g}, {high:g}] bounds"
    return BoundsCheck(classification=classification, note=note)


def size_scaling(r: Sequence[int], k_t: Sequence[int]) -> TrendFit:
    """
    Regression of ln r on ln K_T over avalanches that destroyed links;
    the slope measures the link-counting exponent relating collapsed
    agents to destroyed links

    Raises:
        InsufficientTailError: If fewer than 10 avalanches destroyed links
            or K_T never varies
    """
    r_arr = np.asarray(r, dtype=float)
    k_arr = np.asarray(k_t, dtype=float)
    mask = k_arr >= 1.0
    if mask.sum() < MIN_REGRESSION_POINTS or np.unique(k_arr[mask]).size < 2:
        raise InsufficientTailError("Too few link-destroying avalanches for size scaling")
    fit = stats.linregress(np.log(k_arr[mask]), np.log(r_arr[mask]))
    return TrendFit(
        slope=float(fit.slope),
        intercept=float(fit.intercept),
        stderr=float(fit.stderr),
        p_value=float(fit.pvalue),
        r2=float(fit.rvalue**2),
        n=int(mask.sum()),
    )

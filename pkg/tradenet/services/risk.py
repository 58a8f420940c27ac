"""
Pareto-tail Value-at-Risk and its envelope between the bounding exponents
"""

import logging
from typing import Optional, Sequence

import numpy as np
import pandas as pd

from tradenet.exceptions import DataValidationError, DomainError, InsufficientDataError
from tradenet.schemas import VaREnvelope, VaRQuery
from tradenet.services.tails import M_MAX, M_MIN

logger = logging.getLogger(__name__)

MIN_EMPIRICAL_SAMPLES = 100


def check_losses(losses: Sequence[float]) -> np.ndarray:
    """
    Losses are positive magnitudes; NaN cells are gaps and pass through

    Raises:
        DataValidationError: Listing the 1-based rows holding a zero,
            negative or infinite loss
    """
    values = np.asarray(losses, dtype=float)
    invalid = ~np.isnan(values) & ~(np.isfinite(values) & (values > 0.0))
    bad = (np.flatnonzero(invalid) + 1).tolist()
    if bad:
        raise DataValidationError("Losses must be positive and finite", rows=bad)
    return values


def pareto_var(m: float, query: VaRQuery) -> float:
    """
    Loss level exceeded with probability 1 - alpha under a Pareto tail
    P(X >= s) = (s / x_min)^-m, i.e. x* = x_min (1 - alpha)^(-1/m).
    The horizon is carried as metadata only.

    Raises:
        DomainError: If m <= 0
    """
    if m <= 0.0:
        raise DomainError(f"Tail exponent must be positive, got {m}")
    return float(query.x_min * (1.0 - query.alpha) ** (-1.0 / m))


def var_envelope(query: VaRQuery, m_hat: Optional[float] = None) -> VaREnvelope:
    """
    VaR at the bounding exponents (upper at m = 2, lower at m = 7/2) and,
    when given, at a fitted exponent

    Raises:
        DomainError: If m_hat <= 0
    """
    envelope = VaREnvelope(
        var_lower=pareto_var(M_MAX, query),
        var_upper=pareto_var(M_MIN, query),
        m_hat=m_hat,
    )
    if m_hat is None:
        return envelope

    envelope.var_point = pareto_var(m_hat, query)
    if not M_MIN <= m_hat <= M_MAX:
        note = (
            f"m_hat={m_hat:.4g} outside [{M_MIN:g}, {M_MAX:g}]; "
            f"var_point={envelope.var_point:.6g} is not bounded by the envelope"
        )
        envelope.notes.append(note)
        logger.warning(note)
    return envelope


def empirical_var(losses: Sequence[float], alpha: float) -> float:
    """
    alpha-quantile of a loss sample, linear interpolation between order
    statistics

    Raises:
        DomainError: If alpha is outside (0, 1)
        InsufficientDataError: With fewer than 100 losses
    """
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha {alpha} outside (0, 1)")
    values = np.asarray(losses, dtype=float)
    values = values[np.isfinite(values)]
    if values.size < MIN_EMPIRICAL_SAMPLES:
        raise InsufficientDataError(
            f"Empirical VaR needs {MIN_EMPIRICAL_SAMPLES} losses, got {values.size}"
        )
    return float(np.quantile(values, alpha, method="linear"))


def bounding_ccdf(
    thresholds: Sequence[float], x_min: float, empirical: Optional[Sequence[float]] = None
) -> pd.DataFrame:
    """
    The two bounding tails P(X >= s) = (s / x_min)^-m for m = 2 and m = 7/2,
    equal to 1 below x_min, next to an optional empirical CCDF

    Returns:
        DataFrame with columns s, empirical, p_min, p_max where p_min is the
        heavier (m = 2) bound
    """
    if x_min <= 0.0:
        raise DomainError(f"x_min must be positive, got {x_min}")
    s = np.asarray(thresholds, dtype=float)
    ratio = np.maximum(s / x_min, 1.0)
    frame = pd.DataFrame(
        {
            "s": s,
            "empirical": np.nan if empirical is None else np.asarray(empirical, dtype=float),
            "p_min": ratio ** (-M_MIN),
            "p_max": ratio ** (-M_MAX),
        }
    )
    return frame

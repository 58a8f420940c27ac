"""
Tests for Pareto VaR and the bounding envelope
"""

import logging
import math

import numpy as np
import pytest
from pydantic import ValidationError
from scipy import integrate

from tradenet.conftest import ParetoSampler
from tradenet.exceptions import DataValidationError, DomainError, InsufficientDataError
from tradenet.schemas import VaRQuery
from tradenet.services.risk import (
    bounding_ccdf,
    check_losses,
    empirical_var,
    pareto_var,
    var_envelope,
)


class TestParetoVaR:
    """Test the closed-form quantile"""

    def test_reference_value(self) -> None:
        """Test m = 2, x_min = 0.01, alpha = 0.99 gives 0.1"""
        assert pareto_var(2.0, VaRQuery(alpha=0.99, x_min=0.01)) == pytest.approx(0.1)

    @pytest.mark.parametrize("m", [2.0, 2.5, 3.0, 3.5])
    @pytest.mark.parametrize("alpha", [0.95, 0.99])
    def test_tail_mass_oracle(self, m: float, alpha: float) -> None:
        """Test the density integrated beyond VaR equals 1 - alpha"""
        x_min = 0.02
        var = pareto_var(m, VaRQuery(alpha=alpha, x_min=x_min))
        mass, _ = integrate.quad(lambda s: m * x_min**m * s ** (-m - 1.0), var, math.inf)
        assert mass == pytest.approx(1.0 - alpha, abs=1e-6)

    def test_monotone(self) -> None:
        """Test VaR grows with alpha and falls with m"""
        by_alpha = [pareto_var(2.5, VaRQuery(alpha=a, x_min=1.0)) for a in (0.9, 0.95, 0.99)]
        by_m = [pareto_var(m, VaRQuery(alpha=0.99, x_min=1.0)) for m in (2.0, 2.5, 3.5)]
        assert by_alpha == sorted(by_alpha)
        assert by_m == sorted(by_m, reverse=True)

    def test_horizon_is_metadata(self) -> None:
        """Test the horizon leaves the quantile unchanged"""
        one = pareto_var(3.0, VaRQuery(alpha=0.95, x_min=1.0))
        ten = pareto_var(3.0, VaRQuery(alpha=0.95, x_min=1.0, horizon=10))
        assert one == ten

    @pytest.mark.parametrize("m", [0.0, -2.0])
    def test_nonpositive_exponent(self, m: float) -> None:
        """Test m <= 0 is outside the domain"""
        with pytest.raises(DomainError):
            pareto_var(m, VaRQuery(alpha=0.99, x_min=1.0))

    @pytest.mark.parametrize("alpha", [0.0, 1.0, 1.5])
    def test_query_validation(self, alpha: float) -> None:
        """Test alpha outside (0, 1) is rejected by the query"""
        with pytest.raises(ValidationError):
            VaRQuery(alpha=alpha, x_min=1.0)


class TestEnvelope:
    """Test the bounding envelope"""

    def test_reference_envelope(self) -> None:
        """Test bounds at x_min = 0.01, alpha = 0.99"""
        envelope = var_envelope(VaRQuery(alpha=0.99, x_min=0.01))
        assert envelope.var_upper == pytest.approx(0.1)
        assert envelope.var_lower == pytest.approx(0.03728, abs=1e-5)
        assert envelope.var_point is None
        assert envelope.notes == []

    def test_point_inside(self) -> None:
        """Test an in-band exponent lies between the bounds"""
        envelope = var_envelope(VaRQuery(alpha=0.99, x_min=0.01), m_hat=2.5)
        assert envelope.var_point is not None
        assert envelope.var_lower <= envelope.var_point <= envelope.var_upper
        assert envelope.notes == []

    def test_point_outside(self, caplog: pytest.LogCaptureFixture) -> None:
        """Test an out-of-band exponent is reported, not clamped"""
        with caplog.at_level(logging.WARNING, logger="tradenet.services.risk"):
            envelope = var_envelope(VaRQuery(alpha=0.99, x_min=0.01), m_hat=1.5)
        assert envelope.var_point == pytest.approx(pareto_var(1.5, VaRQuery(alpha=0.99, x_min=0.01)))
        assert envelope.var_point > envelope.var_upper
        assert len(envelope.notes) == 1 and "outside" in envelope.notes[0]
        assert "outside" in caplog.text


class TestEmpiricalVaR:
    """Test the sample quantile"""

    def test_interpolation(self) -> None:
        """Test 1..100 at 0.95 gives 95.05"""
        assert empirical_var(np.arange(1, 101), 0.95) == pytest.approx(95.05)

    def test_constant(self) -> None:
        """Test constant losses"""
        assert empirical_var([0.3] * 200, 0.99) == pytest.approx(0.3)

    def test_gaps_ignored(self) -> None:
        """Test NaN entries do not count"""
        losses = np.append(np.arange(1, 101, dtype=float), [np.nan, np.nan])
        assert empirical_var(losses, 0.95) == pytest.approx(95.05)

    def test_pareto_sample(self, pareto_samples: ParetoSampler) -> None:
        """Test a large Pareto sample matches the closed form"""
        losses = pareto_samples(2.5, 100_000, seed=21)
        expected = pareto_var(2.5, VaRQuery(alpha=0.99, x_min=1.0))
        assert empirical_var(losses, 0.99) == pytest.approx(expected, rel=0.05)

    def test_too_few(self) -> None:
        """Test fewer than 100 losses"""
        with pytest.raises(InsufficientDataError):
            empirical_var(np.arange(1, 100), 0.95)

    @pytest.mark.parametrize("alpha", [0.0, 1.0])
    def test_alpha_domain(self, alpha: float) -> None:
        """Test alpha outside (0, 1)"""
        with pytest.raises(DomainError):
            empirical_var(np.arange(1, 201), alpha)

    def test_invalid_losses_listed(self) -> None:
        """Test zero, negative and infinite losses are reported by row"""
        losses = [0.5, 0.0, np.nan, -1.0, np.inf, 2.0]
        with pytest.raises(DataValidationError) as exc_info:
            check_losses(losses)
        assert exc_info.value.rows == [2, 4, 5]

    def test_gaps_pass_validation(self) -> None:
        """Test NaN gaps are kept for the quantile to skip"""
        values = check_losses([0.5, np.nan, 2.0])
        assert np.isnan(values[1]) and values[2] == 2.0


class TestBoundingCcdf:
    """Test the bounding tails table"""

    def test_values(self) -> None:
        """Test both tails equal 1 below x_min and decay above"""
        frame = bounding_ccdf([0.5, 1.0, 2.0], x_min=1.0)
        assert list(frame.columns) == ["s", "empirical", "p_min", "p_max"]
        assert frame["p_min"].tolist() == pytest.approx([1.0, 1.0, 0.25])
        assert frame["p_max"].tolist() == pytest.approx([1.0, 1.0, 2.0**-3.5])
        assert frame["empirical"].isna().all()

    def test_heavier_bound_dominates(self) -> None:
        """Test the m = 2 tail is never below the m = 7/2 tail"""
        frame = bounding_ccdf(np.linspace(0.5, 50.0, 40), x_min=1.0, empirical=np.ones(40))
        assert (frame["p_min"] >= frame["p_max"]).all()
        assert (frame["empirical"] == 1.0).all()

    def test_bad_x_min(self) -> None:
        """Test x_min must be positive"""
        with pytest.raises(DomainError):
            bounding_ccdf([1.0], x_min=0.0)

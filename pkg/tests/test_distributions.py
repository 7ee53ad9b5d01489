"""
Tests for distributions.py module
"""

import math

import pytest

from boltzmann_py.distributions import (
    draw_geometric,
    draw_loglaw,
    draw_poisson,
    geometric_pmf,
    loglaw_pmf,
    poisson_pmf,
)
from boltzmann_py.errors import LawDomainError
from boltzmann_py.random_source import RandomSource
from boltzmann_py.stats import chi_square_counts

TRIALS = 100_000
SIGNIFICANCE = 1e-3


def observed(draw, support):
    counts = [0] * (support + 1)
    for value in draw:
        counts[min(value, support)] += 1
    return counts


def law(pmf, support):
    head = [pmf(j) for j in range(support)]
    return head + [max(0.0, 1.0 - math.fsum(head))]


class TestProbabilities:
    """Tests for the probability mass functions"""

    def test_loglaw(self):
        """Test P(1) = lam / log(1/(1-lam)) at lam = 0.5"""
        assert loglaw_pmf(0.5, 1) == pytest.approx(0.7213475204, abs=1e-9)

    def test_geometric(self):
        """Test P(0) = 1 - p"""
        assert geometric_pmf(0.5, 0) == 0.5
        assert geometric_pmf(0.5, 3, minimum=2) == 0.25

    def test_poisson(self):
        """Test the unconditioned and conditioned Poisson law"""
        assert poisson_pmf(1.0, 0) == pytest.approx(math.exp(-1.0))
        # P(J = 1 | J >= 1) = lam e^{-lam} / (1 - e^{-lam})
        assert poisson_pmf(1.0, 1, minimum=1) == pytest.approx(math.exp(-1.0) / (1.0 - math.exp(-1.0)))
        assert poisson_pmf(1.0, 0, minimum=1) == 0.0

    @pytest.mark.parametrize("pmf", [
        lambda j: poisson_pmf(2.0, j, minimum=2),
        lambda j: geometric_pmf(0.7, j, minimum=1),
        lambda j: loglaw_pmf(0.8, j, minimum=3),
    ])
    def test_normalized(self, pmf):
        """Test that each conditioned law sums to one"""
        assert math.fsum(pmf(j) for j in range(400)) == pytest.approx(1.0, abs=1e-12)


class TestDomains:
    """Tests for parameter validation"""

    def test_poisson_zero(self, rng):
        """Test that Poisson(0) always gives 0"""
        assert all(draw_poisson(0.0, rng) == 0 for _ in range(10))

    def test_poisson_zero_with_minimum(self, rng):
        with pytest.raises(LawDomainError):
            draw_poisson(0.0, rng, minimum=1)

    @pytest.mark.parametrize("lam", [-1.0, math.inf, math.nan])
    def test_poisson_out_of_domain(self, rng, lam):
        with pytest.raises(LawDomainError):
            draw_poisson(lam, rng)

    @pytest.mark.parametrize("p", [-0.1, 1.0, 1.5])
    def test_geometric_out_of_domain(self, rng, p):
        with pytest.raises(LawDomainError):
            draw_geometric(p, rng)

    @pytest.mark.parametrize("lam", [0.0, 1.0])
    def test_loglaw_out_of_domain(self, rng, lam):
        with pytest.raises(LawDomainError):
            draw_loglaw(lam, rng)

    def test_loglaw_minimum(self, rng):
        """Test that a minimum below 1 is rejected"""
        with pytest.raises(LawDomainError):
            draw_loglaw(0.5, rng, minimum=0)

    def test_domain_error_is_value_error(self, rng):
        """Test that callers catching ValueError also see domain errors"""
        with pytest.raises(ValueError, match="geometric"):
            draw_geometric(2.0, rng)

    def test_geometric_zero(self, rng):
        """Test that p = 0 gives the minimum"""
        assert draw_geometric(0.0, rng, minimum=3) == 3


class TestDraws:
    """Goodness of fit of the draws against their laws"""

    @pytest.mark.slow
    def test_poisson(self):
        rng = RandomSource(1)
        counts = observed((draw_poisson(1.5, rng) for _ in range(TRIALS)), 8)
        result = chi_square_counts(counts, law(lambda j: poisson_pmf(1.5, j), 8))
        assert result.p_value > SIGNIFICANCE

    @pytest.mark.slow
    def test_conditioned_poisson(self):
        rng = RandomSource(2)
        draws = [draw_poisson(0.5, rng, minimum=2) for _ in range(TRIALS)]
        assert min(draws) >= 2
        counts = observed(draws, 6)
        result = chi_square_counts(counts, law(lambda j: poisson_pmf(0.5, j, minimum=2), 6))
        assert result.p_value > SIGNIFICANCE

    @pytest.mark.slow
    def test_geometric(self):
        rng = RandomSource(3)
        counts = observed((draw_geometric(0.6, rng) for _ in range(TRIALS)), 12)
        result = chi_square_counts(counts, law(lambda j: geometric_pmf(0.6, j), 12))
        assert result.p_value > SIGNIFICANCE

    @pytest.mark.slow
    def test_loglaw(self):
        rng = RandomSource(4)
        draws = [draw_loglaw(0.7, rng, minimum=2) for _ in range(TRIALS)]
        assert min(draws) >= 2
        counts = observed(draws, 12)
        result = chi_square_counts(counts, law(lambda j: loglaw_pmf(0.7, j, minimum=2), 12))
        assert result.p_value > SIGNIFICANCE

    def test_large_poisson_mean(self):
        """Test a mean where e^{-lam} underflows"""
        rng = RandomSource(5)
        draws = [draw_poisson(800.0, rng) for _ in range(2000)]
        assert sum(draws) / len(draws) == pytest.approx(800.0, rel=0.01)

    def test_deterministic(self):
        """Test that equal seeds give equal draws"""
        first = [draw_poisson(3.0, RandomSource(9)) for _ in range(5)]
        second = [draw_poisson(3.0, RandomSource(9)) for _ in range(5)]
        assert first == second

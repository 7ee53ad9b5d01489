"""
Tests for ord_transform.py module
"""

import math
from unittest.mock import patch

import pytest

from boltzmann_py.errors import (
    DivergentOGFError,
    EgfDivergentError,
    InconsistentOracleError,
    SizeCeilingExceededError,
    TailTooHeavyError,
)
from boltzmann_py.exp_sampler import SpecTarget
from boltzmann_py.objects import LabeledObject
from boltzmann_py.oracle import SeriesCoeffs
from boltzmann_py.ord_transform import (
    InverseCdf,
    Mixture,
    OrdinarySampler,
    build_ordinary,
    density_eval,
    density_integral,
    draw_u,
    mixture_density,
    sample_many,
    sample_ordinary,
    _mixture_table,
)
from boltzmann_py.random_source import RandomSource
from boltzmann_py.spec_parser import load_spec
from boltzmann_py.stats import Histogram, chi_square, law_distance, size_law, total_variation

TRIALS = 100_000
SIGNIFICANCE = 1e-3


@pytest.fixture
def set_sampler(set_target):
    """Ordinary sampler for SET(Z) at 0.5: sizes are geometric with P(n) = 2^-(n+1)"""
    return build_ordinary(set_target, 0.5, rng=RandomSource(21))


class TestBuildOrdinary:
    """Tests for build_ordinary function"""

    def test_mixture_table(self, set_sampler):
        """Test that the size table stops once the tail is below 1e-9"""
        mixture = set_sampler.strategy
        assert isinstance(mixture, Mixture)
        assert len(mixture.probabilities) == 30
        assert mixture.probabilities[0] == pytest.approx(0.5)
        assert mixture.probabilities[3] == pytest.approx(1 / 16)
        assert mixture.tail < 1e-9

    def test_mixture_table_counts_series_tail(self):
        """Test that the dropped mass includes the tail beyond the known coefficients"""
        coeffs = SeriesCoeffs.from_counts("A", [1] * 65)
        mixture = _mixture_table(coeffs, 0.5, 2.0, tail_bound=2.0 * 0.6e-9)
        assert len(mixture.probabilities) == 32
        assert mixture.tail <= Mixture.TAIL

    def test_mixture_table_tail_too_heavy(self):
        coeffs = SeriesCoeffs.from_counts("A", [1] * 65)
        with pytest.raises(TailTooHeavyError):
            _mixture_table(coeffs, 0.5, 2.0, tail_bound=2.0 * 2e-9)

    def test_oracle_values(self, set_sampler):
        """Test that series and Laplace values of A(0.5) = 2 agree"""
        assert set_sampler.ogf.value == pytest.approx(2.0, abs=1e-12)
        assert set_sampler.laplace.value == pytest.approx(2.0, abs=1e-8)

    def test_inverse_cdf(self, set_target):
        """Test the tabulated strategy"""
        sampler = build_ordinary(set_target, 0.5, strategy="invcdf", rng=RandomSource(1))
        table = sampler.strategy
        assert isinstance(table, InverseCdf)
        assert len(table.cdf) == InverseCdf.CELLS + 1
        assert table.cdf[0] == 0.0
        assert table.cdf[-1] == pytest.approx(1.0)
        assert all(a <= b for a, b in zip(table.cdf, table.cdf[1:]))

    def test_superexponential(self, cayley_spec):
        """Test that labeled trees have a divergent OGF"""
        with pytest.raises(DivergentOGFError):
            build_ordinary(SpecTarget(cayley_spec), 0.1)

    def test_safety_bound(self, set_target):
        with pytest.raises(DivergentOGFError):
            build_ordinary(set_target, 0.97)

    def test_unknown_strategy(self, set_target):
        with pytest.raises(ValueError, match="strategy"):
            build_ordinary(set_target, 0.5, strategy="rejection")

    def test_negative_x(self, set_target):
        with pytest.raises(ValueError):
            build_ordinary(set_target, -0.5)

    def test_cross_check_failure(self, set_target):
        """Test that a wrong Â is caught by the series/Laplace comparison"""
        with patch.object(set_target, "egf_value", side_effect=lambda y: 1.01 * math.exp(y)):
            with pytest.raises(InconsistentOracleError):
                build_ordinary(set_target, 0.5)

    def test_cross_check_disabled(self, set_target):
        with patch.object(set_target, "egf_value", side_effect=lambda y: 1.01 * math.exp(y)):
            sampler = build_ordinary(set_target, 0.5, cross_check=False)
        assert sampler.laplace is None

    def test_large_table(self, set_target):
        """Test that the order grows when the tail is heavy"""
        sampler = build_ordinary(set_target, 0.9, rng=RandomSource(2))
        assert sampler.coeffs.order > 64
        assert sampler.ogf.value == pytest.approx(10.0, rel=1e-9)
        assert sampler.ogf.error <= Mixture.TAIL / 2 * sampler.ogf.value
        assert sampler.strategy.tail <= Mixture.TAIL


class TestDensity:
    """Tests for the density d(u) = e^{-u} Â(xu) / A(x)"""

    def test_pointwise(self, set_sampler):
        """Test d(1) = e^{-1/2} / 2"""
        assert density_eval(set_sampler, 1.0) == pytest.approx(0.3032653299, abs=1e-10)

    @pytest.mark.parametrize("u", [0.0, 0.3, 1.0, 4.0, 12.0])
    def test_mixture_form(self, set_sampler, u):
        """Test that the Gamma mixture equals the closed form"""
        assert mixture_density(set_sampler, u) == pytest.approx(density_eval(set_sampler, u), rel=1e-10)

    def test_normalization(self, set_sampler):
        """Test that d integrates to 1"""
        assert density_integral(set_sampler).value == pytest.approx(1.0, abs=1e-8)

    def test_normalization_words(self, binary_target):
        sampler = build_ordinary(binary_target, 0.25, rng=RandomSource(3))
        assert density_integral(sampler).value == pytest.approx(1.0, abs=1e-8)

    def test_negative_u(self, set_sampler):
        with pytest.raises(ValueError):
            density_eval(set_sampler, -1.0)


class TestDrawU:
    """Tests for the u draw"""

    @pytest.mark.parametrize("strategy", ["mixture", "invcdf"])
    def test_mean(self, set_target, strategy):
        """Test E[u] = E[N] + 1 = 2 for SET(Z) at 0.5"""
        sampler = build_ordinary(set_target, 0.5, strategy=strategy, rng=RandomSource(4))
        draws = [draw_u(sampler) for _ in range(TRIALS)]
        assert min(draws) >= 0.0
        assert sum(draws) / TRIALS == pytest.approx(2.0, abs=0.06)

    def test_mixture_size_draw(self, set_sampler):
        """Test the (n, u) pairs of the mixture"""
        n, u = set_sampler.strategy.draw(set_sampler.rng)
        assert 0 <= n <= set_sampler.strategy.order
        assert u > 0.0

    def test_deterministic(self, set_target):
        first = build_ordinary(set_target, 0.5, rng=RandomSource(5))
        second = build_ordinary(set_target, 0.5, rng=RandomSource(5))
        assert [first.draw_u() for _ in range(5)] == [second.draw_u() for _ in range(5)]


class TestSampleOrdinary:
    """Tests for sample_ordinary function"""

    def test_records_draw(self, set_sampler):
        """Test that u and x*u are kept on the object"""
        obj = sample_ordinary(set_sampler)
        assert obj.mode == "ordinary"
        assert obj.draw.x_effective == pytest.approx(0.5 * obj.draw.u)
        data = obj.to_json()
        assert data["u"] == obj.draw.u

    def test_draw_not_part_of_identity(self, set_sampler):
        """Test that equal objects from different draws compare equal"""
        first = sample_ordinary(set_sampler.with_rng(RandomSource(6)))
        second = first.with_draw(first.draw.u + 1.0, 0.0)
        assert first == second
        assert hash(first) == hash(second)

    def test_x_zero(self, set_target):
        """Test that all mass sits on size 0"""
        sampler = build_ordinary(set_target, 0.0, rng=RandomSource(10))
        assert {sampler.sample().size for _ in range(20)} == {0}

    def test_finite_class(self):
        """Test 1 + Z * Z at 1: sizes 0 and 2 with weights 1 and 2"""
        sampler = build_ordinary(SpecTarget(load_spec("A = 1 + Z * Z")), 1.0, rng=RandomSource(11))
        sizes = [sampler.sample().size for _ in range(3000)]
        assert set(sizes) <= {0, 2}
        assert sizes.count(2) / len(sizes) == pytest.approx(2 / 3, abs=0.04)

    def test_ceiling(self, set_target):
        sampler = build_ordinary(set_target, 0.8, rng=RandomSource(12), ceiling=2)
        assert all(sampler.sample().size <= 2 for _ in range(200))

    def test_ceiling_unreachable(self):
        sampler = build_ordinary(SpecTarget(load_spec("A = Z * Z")), 0.5, rng=RandomSource(13), ceiling=1)
        with pytest.raises(SizeCeilingExceededError):
            sampler.sample()

    def test_retry_after_rejected_parameter(self, set_sampler, caplog):
        """Test that a rejected x*u is redrawn and logged"""
        good = LabeledObject(set_sampler.target.sample_exponential(0.0, set_sampler.rng).shape, 0)
        with patch.object(set_sampler.target, "sample_exponential",
                          side_effect=[EgfDivergentError("singular"), good]):
            obj = sample_ordinary(set_sampler)
        assert obj.size == 0
        assert obj.draw is not None
        assert "rejected" in caplog.text

    def test_retries_exhausted(self, set_sampler):
        """Test the error after MAX_RETRIES rejected parameters"""
        with patch.object(set_sampler.target, "sample_exponential", side_effect=EgfDivergentError("singular")):
            with pytest.raises(InconsistentOracleError):
                sample_ordinary(set_sampler)

    def test_with_rng_shares_tables(self, set_sampler):
        other = set_sampler.with_rng(RandomSource(14))
        assert isinstance(other, OrdinarySampler)
        assert other.strategy is set_sampler.strategy
        assert other.rng is not set_sampler.rng


@pytest.mark.slow
class TestOrdinarySizeLaw:
    """Chi-square and total-variation tests of the ordinary size law a_n x^n / A(x)"""

    def test_size_law(self, set_sampler):
        """Test the geometric size law P(n) = 2^-(n+1)"""
        hist = Histogram.from_sizes([obj.size for obj in sample_many(set_sampler, TRIALS)])
        law = size_law(set_sampler.coeffs.counts[:12], 0.5, set_sampler.ogf.value)
        assert chi_square(hist, law).p_value > SIGNIFICANCE
        assert law_distance(hist, law) < 0.01

    def test_size_law_binary_words(self, binary_target):
        """Test 2^n words at 0.25: P(n) = 2^-(n+1)"""
        sampler = build_ordinary(binary_target, 0.25, rng=RandomSource(7))
        hist = Histogram.from_sizes([sampler.sample().size for _ in range(TRIALS)])
        law = [0.5 ** (n + 1) for n in range(12)]
        assert chi_square(hist, law).p_value > SIGNIFICANCE
        assert law_distance(hist, law) < 0.01

    def test_strategies_agree(self, set_target):
        """Test that both u-draw strategies give the same size law"""
        mixture = build_ordinary(set_target, 0.5, rng=RandomSource(8))
        table = build_ordinary(set_target, 0.5, strategy="invcdf", rng=RandomSource(9))
        first = Histogram.from_sizes([mixture.sample().size for _ in range(TRIALS)])
        second = Histogram.from_sizes([table.sample().size for _ in range(TRIALS)])
        assert total_variation(first, second) < 0.01
        law = size_law(mixture.coeffs.counts[:12], 0.5, mixture.ogf.value)
        assert chi_square(second, law).p_value > SIGNIFICANCE

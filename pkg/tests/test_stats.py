"""
Tests for stats.py module
"""

import json
import math
from unittest.mock import patch

import pytest

from boltzmann_py.errors import DegenerateLawError, TooLargeError
from boltzmann_py.exp_sampler import SpecTarget, gamma_exp
from boltzmann_py.ord_transform import build_ordinary
from boltzmann_py.random_source import RandomSource
from boltzmann_py.spec_parser import load_spec
from boltzmann_py.stats import (
    CheckReport,
    CheckResult,
    Histogram,
    chi2_cdf,
    chi_square,
    chi_square_counts,
    enumerate_objects,
    enumerate_target,
    law_distance,
    run_check_suite,
    size_law,
    total_variation,
)
from boltzmann_py.words import ShuffleTarget

CHECK_NAMES = [
    "coefficients-vs-enumeration",
    "oracle-agreement",
    "density-normalization",
    "exponential-size-law",
    "ordinary-size-law",
    "conditional-uniformity",
    "strategy-equivalence",
    "gamma-moments",
    "per-draw-cost",
]


@pytest.fixture
def subsets_target():
    """SET(Z) * SET(Z): 2^n objects of size n (a subset and its complement)"""
    return SpecTarget(load_spec("A = SET(Z) * SET(Z)"))


def by_name(report):
    return {check.name: check for check in report.checks}


class TestHistogram:
    """Tests for Histogram class"""

    def test_from_sizes(self):
        hist = Histogram.from_sizes([0, 1, 1, 3], seed=5, generator="exp")
        assert hist.total == 4
        assert hist.mean() == pytest.approx(1.25)
        assert hist.buckets(2) == [1, 2, 1]

    def test_add(self):
        total = Histogram.from_sizes([0, 1], generator="a") + Histogram.from_sizes([1], generator="b")
        assert total.counts[1] == 2
        assert total.generator == "a+b"

    def test_to_dict(self):
        data = Histogram.from_sizes([2, 0, 2], seed=9, generator="ordinary").to_dict()
        assert data == {"counts": {"0": 1, "2": 2}, "total": 3, "seed": 9, "generator": "ordinary"}

    def test_empty_mean(self):
        assert Histogram().mean() == 0.0


class TestChiSquare:
    """Tests for the chi-square machinery"""

    def test_critical_value(self):
        """Test the 95% point of χ² with one degree of freedom"""
        assert chi2_cdf(3.841, 1) == pytest.approx(0.95, abs=1e-4)
        assert chi2_cdf(0.0, 3) == 0.0

    def test_proportional_counts(self):
        """Test counts exactly proportional to the law"""
        result = chi_square_counts([50, 30, 20], [0.5, 0.3, 0.2])
        assert result.statistic == pytest.approx(0.0, abs=1e-12)
        assert result.dof == 2
        assert result.p_value == pytest.approx(1.0)

    def test_tail_merging(self):
        """Test that buckets with expected count below 5 merge from the tail"""
        result = chi_square_counts([50, 30, 15, 3, 2], [0.5, 0.3, 0.15, 0.03, 0.02])
        assert result.dof == 3
        assert any("3..4" in merge for merge in result.merges)

    def test_front_remainder(self):
        """Test that a small leading bucket joins its neighbour"""
        result = chi_square_counts([1, 49, 50], [0.01, 0.49, 0.5])
        assert result.dof == 1
        assert any("0..1" in merge for merge in result.merges)

    def test_degenerate(self):
        """Test a law leaving a single bucket"""
        with pytest.raises(DegenerateLawError):
            chi_square_counts([10, 0], [0.99, 0.01])

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            chi_square_counts([1, 2], [1.0])

    def test_histogram_tail_bucket(self):
        """Test that sizes beyond the law fall in the complement bucket"""
        hist = Histogram.from_sizes([0] * 50 + [1] * 25 + [5] * 25)
        result = chi_square(hist, [0.5, 0.25])
        assert result.statistic == pytest.approx(0.0)

    def test_law_above_one(self):
        with pytest.raises(ValueError):
            chi_square(Histogram.from_sizes([0, 1]), [0.7, 0.7])

    def test_detects_wrong_law(self):
        """Test that a geometric sample is rejected against a uniform law"""
        rng = RandomSource(41)
        sizes = [min(int(rng.standard_gamma(1.0)), 3) for _ in range(5000)]
        assert chi_square(Histogram.from_sizes(sizes), [0.25] * 4).p_value < 1e-6


class TestTotalVariation:
    """Tests for total_variation function"""

    def test_identical(self):
        hist = Histogram.from_sizes([0, 1, 1])
        assert total_variation(hist, hist) == 0.0

    def test_disjoint(self):
        assert total_variation(Histogram.from_sizes([0]), Histogram.from_sizes([1])) == 1.0

    def test_empty(self):
        with pytest.raises(ValueError):
            total_variation(Histogram(), Histogram.from_sizes([1]))


class TestLawDistance:
    """Tests for law_distance function"""

    def test_exact_match(self):
        hist = Histogram.from_sizes([0, 1, 1, 5])
        assert law_distance(hist, [0.25, 0.5]) == pytest.approx(0.0)

    def test_tail_bucket(self):
        """Test that sizes past the law fall into the remaining mass"""
        hist = Histogram.from_sizes([0, 3])
        assert law_distance(hist, [1.0]) == pytest.approx(0.5)

    def test_empty(self):
        with pytest.raises(ValueError):
            law_distance(Histogram(), [1.0])


class TestSizeLaw:
    """Tests for size_law function"""

    def test_ordinary(self):
        assert size_law([1, 1, 1], 0.5, 2.0) == pytest.approx([0.5, 0.25, 0.125])

    def test_exponential(self):
        law = size_law([1, 1, 2], 1.0, 4.0, exponential=True)
        assert law == pytest.approx([0.25, 0.25, 0.25])


class TestEnumeration:
    """Tests for exhaustive enumeration"""

    def test_set_of_atoms(self, set_spec):
        assert len(enumerate_objects(set_spec, "A", 5)) == 1

    def test_set_partitions(self, bell_spec):
        assert len(enumerate_objects(bell_spec, "P", 3)) == 5
        assert len(enumerate_objects(bell_spec, "P", 4)) == 15

    def test_cayley(self, cayley_spec):
        assert len(enumerate_objects(cayley_spec, "T", 3)) == 9

    @pytest.mark.parametrize("text,counts", [
        ("P = SET(CYC(Z))", [1, 1, 2, 6, 24, 120]),
        ("D = SET(CYC>=2(Z))", [1, 0, 1, 2, 9, 44]),
        ("S = SEQ(Z)", [1, 1, 2, 6, 24, 120]),
        ("B = 1 + Z * B * B", [1, 1, 4, 30, 336, 5040]),
        ("C = CYC>=3(Z)", [0, 0, 0, 2, 6, 24]),
    ])
    def test_counts_match(self, text, counts):
        """Test enumeration sizes against the known sequences"""
        spec = load_spec(text)
        for n, expected in enumerate(counts):
            objects = enumerate_objects(spec, None, n)
            assert len(objects) == expected
            assert len(set(objects)) == expected

    def test_size_zero(self, set_spec, cayley_spec):
        assert len(enumerate_objects(set_spec, "A", 0)) == 1
        assert enumerate_objects(cayley_spec, "T", 0) == []

    def test_too_large(self, set_spec):
        with pytest.raises(TooLargeError):
            enumerate_objects(set_spec, "A", 9)

    def test_negative_size(self, set_spec):
        with pytest.raises(ValueError):
            enumerate_objects(set_spec, "A", -1)

    def test_sampler_forms_are_enumerated(self, bell_spec):
        """Test that sampled objects use the enumeration's canonical form"""
        universe = set(enumerate_objects(bell_spec, "P", 3))
        rng = RandomSource(42)
        seen = set()
        for _ in range(3000):
            obj = gamma_exp(bell_spec, "P", 1.5, rng)
            if obj.size == 3:
                assert obj in universe
                seen.add(obj)
        assert seen == universe

    def test_cycles_canonical(self):
        """Test that sampled cycles match enumerated ones"""
        spec = load_spec("C = CYC(Z)")
        universe = set(enumerate_objects(spec, "C", 4))
        assert len(universe) == 6
        rng = RandomSource(43)
        for _ in range(500):
            obj = gamma_exp(spec, "C", 0.9, rng)
            if obj.size == 4:
                assert obj in universe

    def test_words(self, binary_target, ab_shuffle):
        assert len(enumerate_target(binary_target, 3)) == 8
        assert len(enumerate_target(ShuffleTarget(ab_shuffle), 3)) == 8

    def test_unsupported_target(self):
        with pytest.raises(TypeError):
            enumerate_target(object(), 2)


class TestCheckSuite:
    """Tests for run_check_suite"""

    def test_all_checks_pass(self, subsets_target):
        """Test a class with a convergent OGF and several objects per size"""
        report = run_check_suite(subsets_target, 0.25, trials=10_000, seed=1)
        assert [c.name for c in report.checks] == CHECK_NAMES
        assert report.passed, [c.to_dict() for c in report.failures]
        checks = by_name(report)
        assert checks["conditional-uniformity"].status == "pass"
        assert checks["conditional-uniformity"].detail.startswith("ordinary draws")
        assert set(report.histograms) == {"exponential", "ordinary"}
        assert set(report.timings) == {"u_draw", "ordinary_draw"}

    def test_divergent_class(self, seq_spec):
        """Test SEQ(Z): OGF checks fail with the divergence error, the rest still run"""
        report = run_check_suite(SpecTarget(seq_spec), 0.5, trials=2000, seed=2)
        checks = by_name(report)
        assert not report.passed
        for name in ("oracle-agreement", "density-normalization", "ordinary-size-law"):
            assert checks[name].status == "fail"
            assert checks[name].error == "DivergentOGFError"
        assert checks["coefficients-vs-enumeration"].status == "pass"
        assert checks["exponential-size-law"].status == "pass"
        assert "exponential draws" in checks["conditional-uniformity"].detail

    def test_recursive_class(self, cayley_spec):
        """Test Cayley trees: n^(n-1) labeled trees have no convergent OGF"""
        report = run_check_suite(SpecTarget(cayley_spec), 0.2, trials=20_000, seed=8)
        checks = by_name(report)
        assert checks["coefficients-vs-enumeration"].status == "pass"
        assert checks["exponential-size-law"].status == "pass"
        assert checks["oracle-agreement"].error == "DivergentOGFError"
        assert checks["conditional-uniformity"].status == "pass"
        assert "exponential draws" in checks["conditional-uniformity"].detail

    def test_oracle_disagreement_without_slack(self, set_target):
        """Test that a relative EGF error of 5e-10 is caught by the Laplace cross-check"""
        with patch.object(set_target, "egf_value", side_effect=lambda y: (1 + 5e-10) * math.exp(y)):
            report = run_check_suite(set_target, 0.5, trials=0, seed=9)
        oracle = by_name(report)["oracle-agreement"]
        assert oracle.status == "fail"
        assert "laplace" in oracle.detail

    def test_no_trials(self, set_target):
        """Test that zero trials runs only the analytic checks"""
        report = run_check_suite(set_target, 0.5, trials=0, seed=3)
        statuses = {c.name: c.status for c in report.checks}
        assert statuses["coefficients-vs-enumeration"] == "pass"
        assert statuses["oracle-agreement"] == "pass"
        assert statuses["density-normalization"] == "pass"
        assert all(statuses[name] == "skip" for name in CHECK_NAMES[3:])
        assert report.passed

    def test_x_zero(self, set_target):
        report = run_check_suite(set_target, 0.0, trials=0, seed=4)
        checks = by_name(report)
        assert checks["density-normalization"].status == "skip"
        assert "laplace" not in checks["oracle-agreement"].detail

    def test_rational_oracle(self, binary_target):
        """Test that regular languages are also checked by the linear solve"""
        report = run_check_suite(binary_target, 0.25, trials=0, seed=5)
        oracle = by_name(report)["oracle-agreement"]
        assert oracle.status == "pass"
        assert "rational" in oracle.detail

    def test_shuffle(self, ab_shuffle):
        report = run_check_suite(ShuffleTarget(ab_shuffle), 0.25, trials=4000, seed=6)
        assert report.passed, [c.to_dict() for c in report.failures]

    def test_deterministic_with_workers(self, set_target):
        """Test that equal seeds give identical reports, also across threads"""
        first = run_check_suite(set_target, 0.5, trials=1000, seed=7, workers=3)
        second = run_check_suite(set_target, 0.5, trials=1000, seed=7, workers=3)
        assert json.dumps(first.to_dict(), sort_keys=True) == json.dumps(second.to_dict(), sort_keys=True)
        assert "timings" not in first.to_dict()
        assert "timings" in first.to_dict(include_timings=True)

    def test_report_document(self):
        report = CheckReport("A", 0.5, 10, 1, checks=[CheckResult("x", "fail", "bad", p_value=0.0, error="E")])
        data = report.to_dict()
        assert data["passed"] is False
        assert data["checks"] == [{"name": "x", "status": "fail", "detail": "bad", "p_value": 0.0, "error": "E"}]


@pytest.mark.slow
class TestNullCalibration:
    """The chi-square p-values of a correct sampler are close to uniform"""

    def test_rejection_rate(self, set_target):
        sampler = build_ordinary(set_target, 0.5, rng=RandomSource(44))
        law = size_law(sampler.coeffs.counts[:10], 0.5, sampler.ogf.value)
        rejections = 0
        runs = 200
        for _ in range(runs):
            sizes = [sampler.sample().size for _ in range(1000)]
            if chi_square(Histogram.from_sizes(sizes), law).p_value < 0.01:
                rejections += 1
        assert rejections / runs <= 0.05

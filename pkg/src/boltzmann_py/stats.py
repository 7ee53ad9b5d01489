"""
Empirical verification of the samplers.

Exhaustive enumeration of small objects gives the ground truth for the
counts; size histograms are compared with the exact Boltzmann laws by
Pearson's chi-square test, and run_check_suite bundles every check into
one machine-readable report.
"""

import logging
import math
import time
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations
from typing import Any, Callable, Dict, FrozenSet, List, Optional, Sequence, Tuple

from scipy.special import gammainc, gammaincc

from .errors import BoltzmannError, DegenerateLawError, DivergentOGFError, InconclusiveGrowthError, TooLargeError
from .exp_sampler import SpecTarget
from .objects import Branch, Collection, EmptyLeaf, LabeledObject, Leaf, Pair, Shape, WordObject
from .oracle import DEFAULT_ORDER, ogf_eval_laplace
from .ord_transform import BoltzmannTarget, Mixture, OrdinarySampler, build_ordinary, density_integral
from .random_source import RandomSource
from .spec_parser import Atom, Cyc, Epsilon, Product, Ref, Seq, Set, SpecExpr, Union, ValidatedSpec
from .utils import exponential_term, format_seconds, ordinary_term
from .words import ShuffleTarget, WordTarget, enumerate_interleavings, enumerate_words, ogf_rational_eval

logger = logging.getLogger(__name__)

MIN_EXPECTED = 5.0


@dataclass
class Histogram:
    """Counts of sampled sizes"""
    counts: Counter = field(default_factory=Counter)
    seed: Optional[int] = None
    generator: str = ""

    @classmethod
    def from_sizes(cls, sizes: Sequence[int], seed: Optional[int] = None, generator: str = "") -> "Histogram":
        return cls(Counter(sizes), seed, generator)

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def buckets(self, cutoff: int) -> List[int]:
        """Counts for sizes 0..cutoff-1, then one bucket for sizes >= cutoff"""
        head = [self.counts.get(n, 0) for n in range(cutoff)]
        head.append(sum(c for n, c in self.counts.items() if n >= cutoff))
        return head

    def mean(self) -> float:
        return sum(n * c for n, c in self.counts.items()) / self.total if self.total else 0.0

    def __add__(self, other: "Histogram") -> "Histogram":
        generator = self.generator if self.generator == other.generator else f"{self.generator}+{other.generator}"
        return Histogram(self.counts + other.counts, self.seed, generator)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "counts": {str(n): c for n, c in sorted(self.counts.items())},
            "total": self.total,
            "seed": self.seed,
            "generator": self.generator,
        }


@dataclass(frozen=True)
class Chi2Result:
    statistic: float
    dof: int
    p_value: float
    merges: Tuple[str, ...] = ()


def chi2_cdf(value: float, dof: int) -> float:
    """P(χ²_dof <= value)"""
    if value <= 0.0:
        return 0.0
    return float(gammainc(dof / 2.0, value / 2.0))


def chi_square_counts(observed: Sequence[int], probabilities: Sequence[float]) -> Chi2Result:
    """
    Pearson's test of observed counts against bucket probabilities.

    Buckets with expected count below 5 are merged from the last bucket
    inwards; a remainder left at the front joins its neighbour.

    Raises:
        DegenerateLawError: fewer than two buckets after merging
    """
    if len(observed) != len(probabilities):
        raise ValueError("observed and law lengths differ")
    total = sum(observed)
    groups: List[Tuple[int, float, int, int]] = []  # observed, expected, first, last bucket
    merges: List[str] = []
    acc_o, acc_e, last = 0, 0.0, len(observed) - 1
    for i in range(len(observed) - 1, -1, -1):
        acc_o += observed[i]
        acc_e += probabilities[i] * total
        if acc_e >= MIN_EXPECTED:
            groups.append((acc_o, acc_e, i, last))
            acc_o, acc_e, last = 0, 0.0, i - 1
    if last >= 0:
        if groups:
            o, e, _, hi = groups[-1]
            groups[-1] = (o + acc_o, e + acc_e, 0, hi)
        else:
            groups.append((acc_o, acc_e, 0, last))
    for _, e, lo, hi in groups:
        if hi > lo:
            merges.append(f"buckets {lo}..{hi} merged (expected {e:.3g})")

    if len(groups) < 2:
        raise DegenerateLawError(f"{len(groups)} bucket(s) after merging, need at least 2")
    statistic = 0.0
    for o, e, _, _ in groups:
        if e > 0.0:
            statistic += (o - e) ** 2 / e
        elif o > 0:
            statistic = math.inf
    dof = len(groups) - 1
    p_value = 0.0 if math.isinf(statistic) else float(gammaincc(dof / 2.0, statistic / 2.0))
    return Chi2Result(statistic, dof, min(1.0, max(0.0, p_value)), tuple(reversed(merges)))


def chi_square(hist: Histogram, law: Sequence[float]) -> Chi2Result:
    """
    Test a size histogram against exact probabilities p_0..p_{K-1}.

    Sizes >= K form the last bucket, with probability 1 - sum(law).

    Args:
        hist: Sampled sizes
        law: Exact probabilities by size

    Returns:
        Chi2Result
    """
    mass = math.fsum(law)
    if mass > 1.0 + 1e-9:
        raise ValueError(f"law sums to {mass}, above 1")
    probabilities = list(law) + [max(0.0, 1.0 - mass)]
    return chi_square_counts(hist.buckets(len(law)), probabilities)


def total_variation(first: Histogram, second: Histogram) -> float:
    """Total-variation distance between two empirical size laws"""
    if not first.total or not second.total:
        raise ValueError("empty histogram")
    sizes = set(first.counts) | set(second.counts)
    return 0.5 * sum(
        abs(first.counts.get(n, 0) / first.total - second.counts.get(n, 0) / second.total)
        for n in sizes
    )


def law_distance(hist: Histogram, law: Sequence[float]) -> float:
    """Total-variation distance between a size histogram and exact probabilities p_0..p_{K-1}"""
    if not hist.total:
        raise ValueError("empty histogram")
    mass = math.fsum(law)
    observed = hist.buckets(len(law))
    probabilities = list(law) + [max(0.0, 1.0 - mass)]
    return 0.5 * math.fsum(abs(count / hist.total - p) for count, p in zip(observed, probabilities))


def size_law(counts: Sequence[int], x: float, total: float, exponential: bool = False) -> List[float]:
    """Exact size probabilities a_n x^n / A(x), or a_n x^n / (n! Â(x))"""
    term = exponential_term if exponential else ordinary_term
    return [term(a, x, n) / total for n, a in enumerate(counts)]


# Enumeration

MAX_ENUMERATION_SIZE = 8


def _nonempty_subsets(labels: FrozenSet[int], containing: Optional[int] = None):
    items = sorted(labels)
    for size in range(1, len(items) + 1):
        for chosen in combinations(items, size):
            if containing is None or containing in chosen:
                yield frozenset(chosen)


class _Enumerator:
    def __init__(self, spec: ValidatedSpec):
        self.spec = spec
        self._memo: Dict[Tuple[int, FrozenSet[int]], List[Shape]] = {}

    def shapes(self, expr: SpecExpr, labels: FrozenSet[int]) -> List[Shape]:
        key = (id(expr), labels)
        if key not in self._memo:
            self._memo[key] = self._shapes(expr, labels)
        return self._memo[key]

    def _shapes(self, expr: SpecExpr, labels: FrozenSet[int]) -> List[Shape]:
        if isinstance(expr, Epsilon):
            return [EmptyLeaf()] if not labels else []
        if isinstance(expr, Atom):
            return [Leaf(next(iter(labels)), expr.letter)] if len(labels) == 1 else []
        if isinstance(expr, Ref):
            return self.shapes(self.spec.definition(expr.name), labels)
        if isinstance(expr, Union):
            return ([Branch("left", s) for s in self.shapes(expr.left, labels)]
                    + [Branch("right", s) for s in self.shapes(expr.right, labels)])
        if isinstance(expr, Product):
            found = []
            for size in range(len(labels) + 1):
                for part in combinations(sorted(labels), size):
                    left = frozenset(part)
                    for a in self.shapes(expr.left, left):
                        for b in self.shapes(expr.right, labels - left):
                            found.append(Pair(a, b))
            return found
        if isinstance(expr, Seq):
            return [Collection("seq", c) for c in self._sequences(expr.inner, labels, expr.minimum)]
        if isinstance(expr, Set):
            return [Collection("set", c) for c in self._sets(expr.inner, labels, expr.minimum)]
        # cycles: the component holding the smallest label comes first
        found = []
        if labels:
            smallest = min(labels)
            for block in _nonempty_subsets(labels, smallest):
                for head in self.shapes(expr.inner, block):
                    for rest in self._sequences(expr.inner, labels - block, expr.minimum - 1):
                        found.append(Collection("cyc", (head,) + rest))
        return found

    def _sequences(self, inner: SpecExpr, labels: FrozenSet[int], minimum: int) -> List[Tuple[Shape, ...]]:
        if not labels:
            return [()] if minimum <= 0 else []
        found = []
        for block in _nonempty_subsets(labels):
            for head in self.shapes(inner, block):
                for rest in self._sequences(inner, labels - block, minimum - 1):
                    found.append((head,) + rest)
        return found

    def _sets(self, inner: SpecExpr, labels: FrozenSet[int], minimum: int) -> List[Tuple[Shape, ...]]:
        if not labels:
            return [()] if minimum <= 0 else []
        found = []
        for block in _nonempty_subsets(labels, min(labels)):
            for head in self.shapes(inner, block):
                for rest in self._sets(inner, labels - block, minimum - 1):
                    found.append((head,) + rest)
        return found


def enumerate_objects(spec: ValidatedSpec, class_name: Optional[str], n: int) -> List[LabeledObject]:
    """
    All labeled objects of size n, in the canonical form the samplers produce.

    Args:
        spec: Validated specification
        class_name: Class (root when None)
        n: Size, at most 8

    Returns:
        Duplicate-free list of a_n objects

    Raises:
        TooLargeError: n above 8
    """
    if n < 0:
        raise ValueError("size must be >= 0")
    if n > MAX_ENUMERATION_SIZE:
        raise TooLargeError(f"enumeration limited to size {MAX_ENUMERATION_SIZE}, got {n}")
    root = Ref(spec.resolve(class_name))
    shapes = _Enumerator(spec).shapes(root, frozenset(range(1, n + 1)))
    return [LabeledObject(shape, n) for shape in shapes]


def enumerate_target(target: BoltzmannTarget, n: int) -> list:
    """Exhaustive list of the objects of size n of any supported target"""
    if n > MAX_ENUMERATION_SIZE:
        raise TooLargeError(f"enumeration limited to size {MAX_ENUMERATION_SIZE}, got {n}")
    if isinstance(target, SpecTarget):
        return enumerate_objects(target.spec, target.class_name, n)
    if isinstance(target, WordTarget):
        return [WordObject(w) for w in enumerate_words(target.dfa, n)]
    if isinstance(target, ShuffleTarget):
        return list(enumerate_interleavings(target.shuffle, n))
    raise TypeError(f"cannot enumerate {type(target).__name__}")


# Check suite

@dataclass
class CheckResult:
    name: str
    status: str  # pass, fail or skip
    detail: str = ""
    statistic: Optional[float] = None
    p_value: Optional[float] = None
    error: Optional[str] = None

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {"name": self.name, "status": self.status, "detail": self.detail}
        if self.statistic is not None:
            data["statistic"] = self.statistic
        if self.p_value is not None:
            data["p_value"] = self.p_value
        if self.error is not None:
            data["error"] = self.error
        return data


@dataclass
class CheckReport:
    target: str
    x: float
    trials: int
    seed: Optional[int]
    checks: List[CheckResult] = field(default_factory=list)
    histograms: Dict[str, Histogram] = field(default_factory=dict)
    timings: Dict[str, float] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.status != "fail" for c in self.checks)

    @property
    def failures(self) -> List[CheckResult]:
        return [c for c in self.checks if c.status == "fail"]

    def to_dict(self, include_timings: bool = False) -> Dict[str, Any]:
        """Report document; wall-clock timings are left out unless asked for so reruns stay identical"""
        data = {
            "target": self.target,
            "x": self.x,
            "seed": self.seed,
            "trials": self.trials,
            "passed": self.passed,
            "checks": [c.to_dict() for c in self.checks],
            "histograms": {k: h.to_dict() for k, h in self.histograms.items()},
        }
        if include_timings:
            data["timings"] = dict(self.timings)
        return data


DIVERGENCE_ERRORS = (DivergentOGFError, InconclusiveGrowthError)


class CheckSuite:
    """Runs every verification for one target at one parameter"""

    ENUMERATION_SIZE = 6
    UNIFORMITY_SIZE = 4
    DENSITY_TOL = 1e-8

    def __init__(self, target: BoltzmannTarget, x: float, trials: int, seed: Optional[int] = None,
                 workers: int = 1, significance: float = 1e-3, strategy: str = "mixture"):
        """
        Initialize suite.

        Args:
            target: Class to verify
            x: Parameter
            trials: Draws per sampling check (0 runs the analytic checks only)
            seed: Master seed; worker streams are spawned from it
            workers: Number of trial partitions
            significance: Rejection level of each chi-square test
            strategy: u-draw strategy of the ordinary sampler under test
        """
        self.target = target
        self.x = x
        self.trials = trials
        self.rng = RandomSource(seed)
        self.workers = max(1, workers)
        self.significance = significance
        self.strategy = strategy
        self.report = CheckReport(target.name, x, trials, self.rng.seed)
        self._ordinary: Optional[OrdinarySampler] = None
        self._ordinary_error: Optional[BoltzmannError] = None
        self._samples: Dict[str, list] = {}

    def run(self) -> CheckReport:
        steps = [
            ("coefficients-vs-enumeration", self.check_enumeration),
            ("oracle-agreement", self.check_oracles),
            ("density-normalization", self.check_density),
            ("exponential-size-law", self.check_exponential_law),
            ("ordinary-size-law", self.check_ordinary_law),
            ("conditional-uniformity", self.check_uniformity),
            ("strategy-equivalence", self.check_strategies),
            ("gamma-moments", self.check_gamma_moments),
            ("per-draw-cost", self.check_cost),
        ]
        for name, step in steps:
            try:
                result = step(name)
            except BoltzmannError as exc:
                result = CheckResult(name, "fail", str(exc), error=type(exc).__name__)
            logger.info("check %s: %s %s", name, result.status, result.detail)
            self.report.checks.append(result)
        return self.report

    # helpers

    def _ordinary_sampler(self) -> OrdinarySampler:
        if self._ordinary is None and self._ordinary_error is None:
            try:
                self._ordinary = build_ordinary(self.target, self.x, self.strategy, self.rng.spawn(0))
            except BoltzmannError as exc:
                self._ordinary_error = exc
        if self._ordinary_error is not None:
            raise self._ordinary_error
        return self._ordinary

    def _partitioned(self, draw: Callable[[RandomSource, int], list], stream: int) -> list:
        """Split the trials across workers, each with its own spawned stream"""
        share, extra = divmod(self.trials, self.workers)
        parts = [share + (1 if i < extra else 0) for i in range(self.workers)]
        base = self.rng.spawn(stream)
        if self.workers == 1:
            return draw(base.spawn(0), parts[0])
        with ThreadPoolExecutor(max_workers=self.workers) as pool:
            chunks = pool.map(lambda i: draw(base.spawn(i), parts[i]), range(self.workers))
            return [obj for chunk in chunks for obj in chunk]

    def _exponential_samples(self) -> list:
        if "exponential" not in self._samples:
            def draw(rng: RandomSource, count: int) -> list:
                return [self.target.sample_exponential(self.x, rng) for _ in range(count)]
            self._samples["exponential"] = self._partitioned(draw, 1)
        return self._samples["exponential"]

    def _ordinary_samples(self, sampler: OrdinarySampler, key: str, stream: int) -> list:
        if key not in self._samples:
            def draw(rng: RandomSource, count: int) -> list:
                local = sampler.with_rng(rng)
                return [local.sample() for _ in range(count)]
            self._samples[key] = self._partitioned(draw, stream)
        return self._samples[key]

    def _skip(self, name: str, why: str = "no trials requested") -> CheckResult:
        return CheckResult(name, "skip", why)

    def _verdict(self, name: str, result: Chi2Result, detail: str) -> CheckResult:
        status = "pass" if result.p_value >= self.significance else "fail"
        return CheckResult(name, status, detail, statistic=result.statistic, p_value=result.p_value)

    # checks

    def check_enumeration(self, name: str) -> CheckResult:
        counts = self.target.coefficients(self.ENUMERATION_SIZE).counts
        for n in range(self.ENUMERATION_SIZE + 1):
            objects = enumerate_target(self.target, n)
            if len(objects) != counts[n] or len(set(objects)) != len(objects):
                return CheckResult(name, "fail", f"size {n}: {len(objects)} enumerated, a_n = {counts[n]}")
        return CheckResult(name, "pass", f"a_0..a_{self.ENUMERATION_SIZE} = {list(counts)}")

    def check_oracles(self, name: str) -> CheckResult:
        sampler = self._ordinary_sampler()
        series = sampler.ogf
        values = {"series": series}
        if self.x > 0.0:
            values["laplace"] = sampler.laplace or ogf_eval_laplace(
                self.target.egf_value, self.x, tol=1e-10 * series.value, rate=sampler.growth.rate
            )
        if isinstance(self.target, WordTarget):
            values["rational"] = ogf_rational_eval(self.target.dfa, self.x)
        detail = ", ".join(f"{k}={v.value:.12g}±{v.error:.2g}" for k, v in values.items())
        for first, second in combinations(values.values(), 2):
            if abs(first.value - second.value) > first.error + second.error:
                return CheckResult(name, "fail", detail)
        return CheckResult(name, "pass", detail)

    def check_density(self, name: str) -> CheckResult:
        sampler = self._ordinary_sampler()
        if self.x == 0.0:
            return self._skip(name, "d(u) = e^{-u} at x = 0")
        integral = density_integral(sampler)
        gap = abs(integral.value - 1.0)
        status = "pass" if gap <= self.DENSITY_TOL else "fail"
        return CheckResult(name, status, f"∫d = {integral.value:.12f} (cutoff {integral.cutoff:g})",
                           statistic=gap)

    def check_exponential_law(self, name: str) -> CheckResult:
        if not self.trials:
            return self._skip(name)
        samples = self._exponential_samples()
        hist = Histogram.from_sizes([s.size for s in samples], self.report.seed, "exponential")
        self.report.histograms["exponential"] = hist
        counts = self.target.coefficients(DEFAULT_ORDER).counts
        law = size_law(counts, self.x, self.target.egf_value(self.x), exponential=True)
        return self._verdict(name, chi_square(hist, _clip(law)), f"mean size {hist.mean():.4f}")

    def check_ordinary_law(self, name: str) -> CheckResult:
        sampler = self._ordinary_sampler()
        if not self.trials:
            return self._skip(name)
        samples = self._ordinary_samples(sampler, "ordinary", 2)
        hist = Histogram.from_sizes([s.size for s in samples], self.report.seed, f"ordinary/{self.strategy}")
        self.report.histograms["ordinary"] = hist
        law = size_law(sampler.coeffs.counts, self.x, sampler.ogf.value)
        return self._verdict(name, chi_square(hist, _clip(law)), f"mean size {hist.mean():.4f}")

    def check_uniformity(self, name: str) -> CheckResult:
        if not self.trials:
            return self._skip(name)
        try:
            samples = self._ordinary_samples(self._ordinary_sampler(), "ordinary", 2)
            source = "ordinary"
        except DIVERGENCE_ERRORS:
            samples = self._exponential_samples()
            source = "exponential"
        worst: Optional[Chi2Result] = None
        tested = []
        for n in range(1, self.UNIFORMITY_SIZE + 1):
            objects = enumerate_target(self.target, n)
            drawn = Counter(s for s in samples if s.size == n)
            total = sum(drawn.values())
            if len(objects) < 2 or total < MIN_EXPECTED * len(objects):
                continue
            foreign = set(drawn) - set(objects)
            if foreign:
                return CheckResult(name, "fail", f"size {n}: drew {len(foreign)} object(s) outside the class")
            result = chi_square_counts([drawn.get(o, 0) for o in objects], [1.0 / len(objects)] * len(objects))
            tested.append(n)
            if worst is None or result.p_value < worst.p_value:
                worst = result
        if worst is None:
            return self._skip(name, "no size up to 4 with enough draws and at least two objects")
        return self._verdict(name, worst, f"{source} draws, sizes {tested}")

    def check_strategies(self, name: str) -> CheckResult:
        sampler = self._ordinary_sampler()
        if not self.trials:
            return self._skip(name)
        other = "invcdf" if self.strategy == "mixture" else "mixture"
        alternative = build_ordinary(self.target, self.x, other, self.rng.spawn(3), cross_check=False)
        first = self.report.histograms.get("ordinary") or Histogram.from_sizes(
            [s.size for s in self._ordinary_samples(sampler, "ordinary", 2)])
        second = Histogram.from_sizes(
            [s.size for s in self._ordinary_samples(alternative, other, 4)], self.report.seed, f"ordinary/{other}")
        distance = total_variation(first, second)
        threshold = 0.01 * max(1.0, math.sqrt(1e5 / self.trials))
        status = "pass" if distance < threshold else "fail"
        return CheckResult(name, status, f"TV distance {distance:.5f} (threshold {threshold:.4f})",
                           statistic=distance)

    def check_gamma_moments(self, name: str) -> CheckResult:
        sampler = self._ordinary_sampler()
        if not self.trials:
            return self._skip(name)
        mixture = sampler.strategy if isinstance(sampler.strategy, Mixture) else None
        if mixture is None:
            return self._skip(name, "ordinary sampler does not use the mixture strategy")
        rng = self.rng.spawn(5)
        by_size: Dict[int, List[float]] = {}
        for _ in range(self.trials):
            n, u = mixture.draw(rng)
            by_size.setdefault(n, []).append(u)
        n, draws = max(by_size.items(), key=lambda item: len(item[1]))
        mean = math.fsum(draws) / len(draws)
        sigma = math.sqrt((n + 1) / len(draws))
        status = "pass" if abs(mean - (n + 1)) <= 3 * sigma else "fail"
        return CheckResult(name, status, f"n={n}: mean u {mean:.4f}, expected {n + 1} ± {3 * sigma:.4f}",
                           statistic=(mean - (n + 1)) / sigma)

    def check_cost(self, name: str) -> CheckResult:
        sampler = self._ordinary_sampler()
        if not self.trials:
            return self._skip(name)
        timed = sampler.with_rng(self.rng.spawn(6))
        rounds = min(self.trials, 2000)
        started = time.perf_counter()
        for _ in range(rounds):
            timed.draw_u()
        u_cost = (time.perf_counter() - started) / rounds
        started = time.perf_counter()
        for _ in range(rounds):
            timed.sample()
        draw_cost = (time.perf_counter() - started) / rounds
        self.report.timings.update(u_draw=u_cost, ordinary_draw=draw_cost)
        logger.info("per-draw cost: u-draw %s, ordinary draw %s", format_seconds(u_cost), format_seconds(draw_cost))
        return CheckResult(name, "pass", f"timed over {rounds} draws")


def _clip(law: List[float]) -> List[float]:
    """Drop the trailing zero-probability sizes of a finite class"""
    end = len(law)
    while end > 1 and law[end - 1] == 0.0:
        end -= 1
    return law[:end]


def run_check_suite(target: BoltzmannTarget, x: float, trials: int, seed: Optional[int] = None,
                    workers: int = 1, strategy: str = "mixture") -> CheckReport:
    """
    Run every check for one target.

    Args:
        target: SpecTarget, WordTarget or ShuffleTarget
        x: Parameter
        trials: Draws per sampling check; 0 skips them
        seed: Master seed
        workers: Trial partitions
        strategy: u-draw strategy of the ordinary sampler

    Returns:
        CheckReport; failing checks carry the error class name when one was raised
    """
    return CheckSuite(target, x, trials, seed, workers, strategy=strategy).run()

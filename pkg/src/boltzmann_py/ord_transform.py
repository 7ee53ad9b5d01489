"""
Ordinary Boltzmann samplers built from exponential ones.

For a class with counts a_n, the ordinary model returns an object of size n
with probability x^n / A(x). It is obtained by drawing a parameter u from
the density

    d(u) = e^{-u} Â(xu) / A(x)

and running the exponential sampler at x*u. Expanding Â termwise shows d is
the mixture of Gamma(n+1) densities with weights a_n x^n / A(x), which is
the default way u is drawn (Mixture). InverseCdf tabulates d instead and
needs only Â.

Works for any target implementing BoltzmannTarget: a specification class
(exp_sampler.SpecTarget), a regular language or a shuffle product (words).
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import List, Optional, Protocol, Tuple, Union as TypingUnion

import numpy as np

from .errors import (
    EgfDivergentError,
    EmptyLanguageError,
    InconsistentOracleError,
    SizeCeilingExceededError,
    TailTooHeavyError,
)
from .oracle import (
    DEFAULT_ORDER,
    MAX_ORDER,
    EvalResult,
    GrowthEstimate,
    SeriesCoeffs,
    growth_estimate,
    integrate_decaying,
    ogf_eval_laplace,
    ogf_eval_series,
)
from .random_source import RandomSource
from .utils import exponential_term, ordinary_term

logger = logging.getLogger(__name__)


class BoltzmannTarget(Protocol):
    """What the ordinary transform needs from a class"""

    @property
    def name(self) -> str:
        ...

    def coefficients(self, order: int = DEFAULT_ORDER) -> SeriesCoeffs:
        ...

    def egf_value(self, y: float) -> float:
        ...

    def sample_exponential(self, y: float, rng: RandomSource, ceiling: Optional[int] = None):
        ...


@dataclass(frozen=True)
class Mixture:
    """Size law π_n = a_n x^n / A(x) for n <= N_trunc, with the dropped tail mass"""
    probabilities: Tuple[float, ...]
    tail: float
    cumulative: np.ndarray = field(repr=False, compare=False)

    TAIL = 1e-9

    @property
    def order(self) -> int:
        return len(self.probabilities) - 1

    def draw_size(self, rng: RandomSource) -> int:
        v = rng.uniform() * self.cumulative[-1]
        return int(np.searchsorted(self.cumulative, v, side="right"))

    def draw(self, rng: RandomSource) -> Tuple[int, float]:
        """Size n from the table, then u ~ Gamma(n + 1)"""
        n = self.draw_size(rng)
        return n, rng.standard_gamma(n + 1)


@dataclass(frozen=True)
class InverseCdf:
    """Tabulated cumulative of d(u) on a uniform grid over [0, cutoff]"""
    grid: np.ndarray = field(repr=False)
    cdf: np.ndarray = field(repr=False)
    step: float
    cutoff: float

    CELLS = 4096
    NODES = 5

    def draw(self, rng: RandomSource) -> float:
        v = rng.uniform()
        i = int(np.searchsorted(self.cdf, v, side="right"))
        i = min(max(i, 1), len(self.cdf) - 1)
        lo, hi = self.cdf[i - 1], self.cdf[i]
        if hi <= lo:
            return float(self.grid[i - 1])
        return float(self.grid[i - 1] + (v - lo) / (hi - lo) * self.step)


UDrawStrategy = TypingUnion[Mixture, InverseCdf]

STRATEGIES = ("mixture", "invcdf")


@dataclass
class OrdinarySampler:
    """Γₓ for a target: parameter, oracle values, u-draw strategy and random source"""
    target: BoltzmannTarget
    x: float
    ogf: EvalResult
    strategy: UDrawStrategy
    rng: RandomSource
    coeffs: SeriesCoeffs
    growth: GrowthEstimate
    laplace: Optional[EvalResult] = None
    ceiling: Optional[int] = None

    MAX_RETRIES = 10
    MAX_RESAMPLES = 1000

    def with_rng(self, rng: RandomSource) -> "OrdinarySampler":
        """Same tables, another random source"""
        return replace(self, rng=rng)

    def draw_u(self) -> float:
        return draw_u(self)

    def sample(self):
        return sample_ordinary(self)


def _mixture_table(coeffs: SeriesCoeffs, x: float, total: float, tail_bound: float) -> Mixture:
    """
    Size table π_0..π_N, cut at the first N whose dropped mass, counting the
    series tail beyond the known coefficients, is at most Mixture.TAIL.

    Raises:
        TailTooHeavyError: the coefficients run out before that
    """
    beyond = tail_bound / total
    probabilities: List[float] = []
    cumulative = 0.0
    for n, a in enumerate(coeffs.counts):
        p = ordinary_term(a, x, n) / total
        probabilities.append(p)
        cumulative += p
        if max(0.0, 1.0 - cumulative) + beyond <= Mixture.TAIL:
            break
    tail = max(0.0, 1.0 - cumulative) + beyond
    if tail > Mixture.TAIL:
        raise TailTooHeavyError(
            f"size table for x={x} keeps tail mass {tail:.3g} above {Mixture.TAIL:g} at order {coeffs.order}"
        )
    return Mixture(tuple(probabilities), tail, np.cumsum(probabilities))


def _inverse_cdf(target: BoltzmannTarget, x: float, total: float, cutoff: float) -> InverseCdf:
    cells = InverseCdf.CELLS
    grid = np.linspace(0.0, cutoff, cells + 1)
    step = cutoff / cells
    points, weights = np.polynomial.legendre.leggauss(InverseCdf.NODES)
    masses = np.empty(cells)
    for i in range(cells):
        mid = grid[i] + step / 2.0
        masses[i] = step / 2.0 * math.fsum(
            w * math.exp(-(mid + step / 2.0 * t)) * target.egf_value(x * (mid + step / 2.0 * t))
            for t, w in zip(points, weights)
        )
    cdf = np.concatenate(([0.0], np.cumsum(masses))) / total
    reached = float(cdf[-1])
    if abs(reached - 1.0) > 1e-6:
        raise InconsistentOracleError(f"tabulated density integrates to {reached:.9f}, not 1")
    if reached < 1.0 - Mixture.TAIL:
        logger.info("tabulated cdf reaches %.12f at cutoff %g", reached, cutoff)
    cdf = np.maximum.accumulate(cdf / reached)
    return InverseCdf(grid, cdf, step, cutoff)


def build_ordinary(
    target: BoltzmannTarget,
    x: float,
    strategy: str = "mixture",
    rng: Optional[RandomSource] = None,
    cross_check: bool = True,
    ceiling: Optional[int] = None,
) -> OrdinarySampler:
    """
    Prepare an ordinary sampler.

    Args:
        target: Class to sample
        x: Parameter (>= 0; x = 0 puts all mass on size 0)
        strategy: "mixture" or "invcdf"
        rng: Random source (fresh entropy when None)
        cross_check: Compare the series value of A(x) with the Laplace integral
        ceiling: Optional largest size (conditioned law)

    Returns:
        OrdinarySampler

    Raises:
        DivergentOGFError: A(x) diverges or x*R above the safety bound
        InconclusiveGrowthError: coefficient growth undecided
        TailTooHeavyError: tail mass above 1e-9 at order MAX_ORDER
        InconsistentOracleError: series and Laplace values disagree
        EmptyLanguageError: A(x) = 0
    """
    if x < 0:
        raise ValueError("x must be >= 0")
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy '{strategy}', expected one of {STRATEGIES}")
    rng = rng or RandomSource()

    coeffs = target.coefficients(DEFAULT_ORDER)
    growth = growth_estimate(coeffs)
    ogf = ogf_eval_series(coeffs, growth, x)
    order = DEFAULT_ORDER
    # half the tail allowance goes to the series bound, half to the table cut
    while ogf.error > Mixture.TAIL / 2 * ogf.value:
        if order >= MAX_ORDER:
            raise TailTooHeavyError(
                f"tail bound {ogf.error:.3g} still above {Mixture.TAIL / 2:g} * A(x) at order {MAX_ORDER}"
            )
        order = min(2 * order, MAX_ORDER)
        logger.info("extending size-law table to order %d for x=%g", order, x)
        coeffs = target.coefficients(order)
        ogf = ogf_eval_series(coeffs, growth, x)
    if ogf.value <= 0.0:
        raise EmptyLanguageError(f"A({x}) = 0 for '{target.name}'")

    laplace = None
    if x > 0.0 and (cross_check or strategy == "invcdf"):
        laplace = ogf_eval_laplace(target.egf_value, x, tol=1e-10 * ogf.value, rate=growth.rate)
        gap = abs(laplace.value - ogf.value)
        allowed = laplace.error + ogf.error + 1e-7 * ogf.value
        if cross_check and gap > allowed:
            raise InconsistentOracleError(
                f"A({x}): series {ogf.value:.12g} vs laplace {laplace.value:.12g} (allowed {allowed:.3g})"
            )

    if strategy == "invcdf" and x > 0.0:
        table: UDrawStrategy = _inverse_cdf(target, x, ogf.value, laplace.cutoff)
    else:
        table = _mixture_table(coeffs, x, ogf.value, ogf.error)
    logger.debug("ordinary sampler for %s at x=%g: A=%.12g ± %.2g, strategy %s",
                 target.name, x, ogf.value, ogf.error, type(table).__name__)
    return OrdinarySampler(
        target=target, x=x, ogf=ogf, strategy=table, rng=rng,
        coeffs=coeffs, growth=growth, laplace=laplace, ceiling=ceiling,
    )


def draw_u(sampler: OrdinarySampler) -> float:
    """
    Draw u from d(u) = e^{-u} Â(xu) / A(x).

    Mixture: size n with probability π_n, then u ~ Gamma(n + 1) (numpy's
    Marsaglia–Tsang method, O(1) expected time). InverseCdf: interpolated
    inverse of the tabulated cumulative.
    """
    if isinstance(sampler.strategy, Mixture):
        return sampler.strategy.draw(sampler.rng)[1]
    return sampler.strategy.draw(sampler.rng)


def sample_ordinary(sampler: OrdinarySampler):
    """
    Draw one object from the ordinary Boltzmann model.

    u := draw_u(); object := exponential sampler at x*u. The drawn u and x*u
    are recorded on the object.

    Raises:
        InconsistentOracleError: the exponential sampler rejected x*u MAX_RETRIES times
        SizeCeilingExceededError: no object within the ceiling after MAX_RESAMPLES draws
    """
    for _ in range(sampler.MAX_RESAMPLES):
        obj = _draw_once(sampler)
        if sampler.ceiling is None or obj.size <= sampler.ceiling:
            return obj
    raise SizeCeilingExceededError(
        f"no object of size <= {sampler.ceiling} in {sampler.MAX_RESAMPLES} ordinary draws"
    )


def _draw_once(sampler: OrdinarySampler):
    for attempt in range(1, sampler.MAX_RETRIES + 1):
        u = draw_u(sampler)
        y = sampler.x * u
        try:
            obj = sampler.target.sample_exponential(y, sampler.rng)
        except EgfDivergentError as exc:
            logger.warning("exponential sampler rejected x*u=%g (attempt %d/%d): %s",
                           y, attempt, sampler.MAX_RETRIES, exc)
            continue
        return obj.with_draw(u, y)
    raise InconsistentOracleError(
        f"exponential sampler rejected {sampler.MAX_RETRIES} drawn parameters at x={sampler.x}"
    )


def sample_many(sampler: OrdinarySampler, count: int) -> list:
    return [sample_ordinary(sampler) for _ in range(count)]


def density_eval(sampler: OrdinarySampler, u: float) -> float:
    """Pointwise d(u) from the Â evaluator and the stored A(x)"""
    if u < 0:
        raise ValueError("u must be >= 0")
    return math.exp(-u) * sampler.target.egf_value(sampler.x * u) / sampler.ogf.value


def mixture_density(sampler: OrdinarySampler, u: float) -> float:
    """
    Termwise form sum_n π_n e^{-u} u^n / n! of d(u), over the coefficient
    table of the sampler.
    """
    if u < 0:
        raise ValueError("u must be >= 0")
    total = sampler.ogf.value
    return math.fsum(
        ordinary_term(a, sampler.x, n) / total * math.exp(-u) * exponential_term(1, u, n)
        for n, a in enumerate(sampler.coeffs.counts)
    )


def density_integral(sampler: OrdinarySampler, tol: float = 1e-10) -> EvalResult:
    """∫₀^∞ d(u) du by the decaying-integrand quadrature; 1 for a consistent oracle"""
    hint = None
    if sampler.growth.rate is not None and sampler.x * sampler.growth.rate < 1.0:
        hint = 1.0 - sampler.x * sampler.growth.rate
    return integrate_decaying(lambda u: density_eval(sampler, u), tol, decay_hint=hint)

"""
Generating-function oracles.

Exact EGF coefficients by power-series arithmetic, numerical evaluation of
the exponential generating function Â(x), and two independent evaluations
of the ordinary generating function A(x): coefficient summation with a
geometric tail bound, and the Laplace–Borel integral

    A(x) = ∫₀^∞ e^{-u} Â(xu) du

computed by outward-marching Gauss–Legendre quadrature. A ratio-test growth
estimate decides whether A(x) converges at all.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Dict, Optional, Sequence, Tuple

import numpy as np

from .errors import (
    DivergentOGFError,
    EgfDivergentError,
    InconclusiveGrowthError,
    ToleranceNotReachedError,
    UnachievableError,
)
from .series import PowerSeries
from .spec_parser import (
    Atom,
    Cyc,
    Epsilon,
    Product,
    Ref,
    Seq,
    Set,
    SpecExpr,
    Union,
    ValidatedSpec,
)
from .utils import exp_tail, geometric_tail, log_tail, ordinary_term

logger = logging.getLogger(__name__)

DEFAULT_ORDER = 64
MAX_ORDER = 4096
SAFETY = 0.95  # x * R must stay at or below this for series OGF evaluation


class Method(str, Enum):
    """How a value was obtained; the error bound's rigor depends on it.

    series       truncated sum plus geometric tail from the growth estimate (heuristic)
    laplace      Gauss–Legendre quadrature with step-halving error and decay-based cutoff (heuristic)
    closed-form  floating composition of exp / log / 1/(1-.) (rounding only)
    fixed-point  monotone iteration from 0, contraction-based error estimate (heuristic)
    linear-solve dense solve, bound from the residual (rigorous up to rounding)
    """
    SERIES = "series"
    LAPLACE = "laplace"
    CLOSED_FORM = "closed-form"
    FIXED_POINT = "fixed-point"
    LINEAR_SOLVE = "linear-solve"


@dataclass(frozen=True)
class SeriesCoeffs:
    """Exact counting sequence a_0..a_N with its EGF coefficients a_n / n!"""
    class_name: str
    order: int
    counts: Tuple[int, ...]
    egf: Tuple[Fraction, ...]
    complete: bool = False  # every nonzero count lies within the truncation

    @classmethod
    def from_counts(cls, class_name: str, counts: Sequence[int], complete: bool = False) -> "SeriesCoeffs":
        counts = tuple(int(c) for c in counts)
        egf = tuple(Fraction(c, math.factorial(n)) for n, c in enumerate(counts))
        return cls(class_name, len(counts) - 1, counts, egf, complete)

    def __getitem__(self, n: int) -> int:
        return self.counts[n]


@dataclass(frozen=True)
class EvalResult:
    """Numerical value with an absolute error bound"""
    value: float
    error: float
    method: Method
    cutoff: Optional[float] = None  # integration cutoff for laplace results

    def to_dict(self) -> Dict[str, float]:
        return {"value": self.value, "err": self.error}


class Verdict(str, Enum):
    AT_MOST_EXPONENTIAL = "AtMostExponential"
    SUPEREXPONENTIAL = "Superexponential"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class GrowthEstimate:
    """Outcome of the ratio test on a coefficient window"""
    verdict: Verdict
    rate: Optional[float] = None  # bound R on a_{n+1}/a_n, set for AtMostExponential
    margin: float = 0.0  # relative spread of the ratios in the window
    ratios: Tuple[float, ...] = ()

    @property
    def bounded(self) -> bool:
        return self.verdict is Verdict.AT_MOST_EXPONENTIAL


# Exact coefficients

def _series_of(expr: SpecExpr, env: Dict[str, PowerSeries], order: int) -> PowerSeries:
    if isinstance(expr, Epsilon):
        return PowerSeries.one(order)
    if isinstance(expr, Atom):
        return PowerSeries.atom(order)
    if isinstance(expr, Ref):
        return env[expr.name]
    if isinstance(expr, Union):
        return _series_of(expr.left, env, order) + _series_of(expr.right, env, order)
    if isinstance(expr, Product):
        return _series_of(expr.left, env, order) * _series_of(expr.right, env, order)
    inner = _series_of(expr.inner, env, order)
    if isinstance(expr, Seq):
        return inner.sequence(expr.minimum)
    if isinstance(expr, Set):
        return inner.set(expr.minimum)
    return inner.cycle(expr.minimum)


def _pad(series: PowerSeries, order: int) -> PowerSeries:
    return PowerSeries(series.coeffs, order)


@lru_cache(maxsize=64)
def _system_series(spec: ValidatedSpec, order: int) -> Dict[str, PowerSeries]:
    definitions = spec.system.definitions
    if not spec.recursive:
        env: Dict[str, PowerSeries] = {}
        pending = list(definitions)
        while pending:
            for name in list(pending):
                try:
                    env[name] = _series_of(definitions[name], env, order)
                except KeyError:
                    continue
                pending.remove(name)
        return env

    # Raise the truncation one coefficient at a time; at order k only
    # coefficient k is still moving, and it settles after at most
    # (number of classes + 1) sweeps on a well-founded system.
    env = {name: PowerSeries.zero(0) for name in definitions}
    sweeps_per_order = len(definitions) + 2
    for k in range(order + 1):
        env = {name: _pad(series, k) for name, series in env.items()}
        for _ in range(sweeps_per_order):
            updated = {name: _series_of(expr, env, k) for name, expr in definitions.items()}
            if updated == env:
                break
            env = updated
        else:
            raise EgfDivergentError(f"coefficient iteration did not settle at order {k}")
    return env


def egf_coeffs(spec: ValidatedSpec, class_name: Optional[str] = None, order: int = DEFAULT_ORDER) -> SeriesCoeffs:
    """
    Exact counts of a class up to a truncation order.

    Args:
        spec: Validated specification
        class_name: Class to count (root when None)
        order: Truncation order N >= 0

    Returns:
        SeriesCoeffs with a_0..a_N and a_n / n!
    """
    if order < 0:
        raise ValueError("order must be >= 0")
    name = spec.resolve(class_name)
    series = _system_series(spec, order)[name]
    degree = spec.degree(name)
    return SeriesCoeffs(
        class_name=name,
        order=order,
        counts=tuple(series.counts()),
        egf=series.coeffs,
        complete=degree is not None and order >= degree,
    )


# Growth

def _log_value(value) -> float:
    if isinstance(value, Fraction):
        return math.log(value.numerator) - math.log(value.denominator)
    return math.log(value)


def growth_estimate(coeffs: SeriesCoeffs, use_egf: bool = False) -> GrowthEstimate:
    """
    Ratio test over the last half of the nonzero coefficients.

    Consecutive nonzero coefficients a_n, a_m give the gap-normalized ratio
    (a_m / a_n)^(1/(m-n)), so periodic supports such as (ab)* still work.

    Args:
        coeffs: Coefficient table
        use_egf: Inspect a_n / n! instead of a_n

    Returns:
        GrowthEstimate; Inconclusive when fewer than 8 nonzero coefficients
        are available or the ratios follow no clear trend
    """
    if coeffs.complete:
        return GrowthEstimate(Verdict.AT_MOST_EXPONENTIAL, rate=0.0)

    values = coeffs.egf if use_egf else coeffs.counts
    nonzero = [(n, v) for n, v in enumerate(values) if v > 0]
    if len(nonzero) < 8:
        return GrowthEstimate(Verdict.INCONCLUSIVE)

    window = nonzero[len(nonzero) // 2 - 1:]
    ratios = tuple(
        math.exp((_log_value(v1) - _log_value(v0)) / (n1 - n0))
        for (n0, v0), (n1, v1) in zip(window, window[1:])
    )
    lo, hi = min(ratios), max(ratios)
    spread = (hi - lo) / hi
    rising = all(b >= a * (1 - 1e-12) for a, b in zip(ratios, ratios[1:]))
    falling = all(b <= a * (1 + 1e-12) for a, b in zip(ratios, ratios[1:]))

    if spread <= 0.10:
        return GrowthEstimate(Verdict.AT_MOST_EXPONENTIAL, rate=ratios[-1] * (1 + spread),
                              margin=spread, ratios=ratios)
    if falling:
        # later ratios stay below the window maximum
        return GrowthEstimate(Verdict.AT_MOST_EXPONENTIAL, rate=hi, margin=spread, ratios=ratios)
    if rising:
        steps = [b - a for a, b in zip(ratios, ratios[1:])]
        half = len(steps) // 2
        early = sum(steps[:half]) / max(half, 1)
        late = sum(steps[-half:]) / max(half, 1)
        # a convergent ratio sequence decelerates; an unbounded one keeps climbing
        if late >= 0.6 * early:
            return GrowthEstimate(Verdict.SUPEREXPONENTIAL, margin=spread, ratios=ratios)
    return GrowthEstimate(Verdict.INCONCLUSIVE, margin=spread, ratios=ratios)


def _require_convergent(growth: GrowthEstimate, x: float, what: str = "A(x)") -> None:
    if growth.verdict is Verdict.SUPEREXPONENTIAL:
        raise DivergentOGFError(f"{what} diverges for every x > 0: coefficients grow superexponentially")
    if growth.verdict is Verdict.INCONCLUSIVE:
        raise InconclusiveGrowthError(f"cannot decide the growth of the coefficients of {what}")
    if x * growth.rate > SAFETY:
        raise DivergentOGFError(
            f"{what} at x={x}: x*R = {x * growth.rate:.4g} exceeds the safety bound {SAFETY}"
        )


def _tail_bound(terms: Sequence[float], ratio: float) -> float:
    """Geometric bound on the terms beyond the table, anchored on its last window"""
    if ratio <= 0.0:
        return 0.0
    order = len(terms) - 1
    anchor = 0.0
    for n in range(max(0, order - 7), order + 1):
        if terms[n] > 0.0:
            anchor = max(anchor, terms[n] * ratio ** (order - n))
    return geometric_tail(anchor, ratio)


# Ordinary generating function

def ogf_eval_series(coeffs: SeriesCoeffs, growth: GrowthEstimate, x: float) -> EvalResult:
    """
    A(x) as the truncated coefficient sum plus a geometric tail bound.

    Args:
        coeffs: Exact counts
        growth: Growth estimate of the counts
        x: Parameter (>= 0)

    Returns:
        EvalResult (method series)

    Raises:
        DivergentOGFError: superexponential growth or x*R above the safety bound
        InconclusiveGrowthError: growth undecided
    """
    if x < 0:
        raise ValueError("x must be >= 0")
    if x == 0.0:
        return EvalResult(float(coeffs.counts[0]), 0.0, Method.SERIES)
    _require_convergent(growth, x)

    terms = [ordinary_term(a, x, n) for n, a in enumerate(coeffs.counts)]
    total = math.fsum(terms)
    tail = 0.0 if coeffs.complete else _tail_bound(terms, x * growth.rate)
    rounding = 4 * len(terms) * np.finfo(float).eps * total
    return EvalResult(total, tail + rounding, Method.SERIES)


def expected_size_ordinary(coeffs: SeriesCoeffs, growth: GrowthEstimate, x: float) -> float:
    """
    Mean of the ordinary size law P(n) = a_n x^n / A(x).

    Args:
        coeffs: Exact counts
        growth: Growth estimate of the counts
        x: Parameter (>= 0)

    Returns:
        Expected size; at x = 0 the smallest size carrying objects
    """
    return expected_size_eval(coeffs, growth, x).value


def expected_size_eval(coeffs: SeriesCoeffs, growth: GrowthEstimate, x: float) -> EvalResult:
    """
    Mean of the ordinary size law with an error bound.

    Both sums Σ a_n x^n and Σ n a_n x^n get a geometric tail bound beyond
    the table; the error covers every mean between S1 / (S0 + T0) and
    (S1 + T1) / S0.

    Raises:
        DivergentOGFError: superexponential growth or x*R above the safety bound
        InconclusiveGrowthError: growth undecided
    """
    if x < 0:
        raise ValueError("x must be >= 0")
    if x == 0.0:
        return EvalResult(float(next((n for n, a in enumerate(coeffs.counts) if a), 0)), 0.0, Method.SERIES)
    _require_convergent(growth, x)
    terms = [ordinary_term(a, x, n) for n, a in enumerate(coeffs.counts)]
    total = math.fsum(terms)
    if total == 0.0:
        return EvalResult(0.0, 0.0, Method.SERIES)
    weighted = math.fsum(n * t for n, t in enumerate(terms))
    mean = weighted / total

    tail = weighted_tail = 0.0
    ratio = x * growth.rate
    if not coeffs.complete and ratio > 0.0:
        tail = _tail_bound(terms, ratio)
        # Σ_{j>=1} (N + j) t r^j for the anchored term t
        anchor = tail * (1.0 - ratio) / ratio
        weighted_tail = anchor * (coeffs.order * ratio / (1.0 - ratio) + ratio / (1.0 - ratio) ** 2)
    low = weighted / (total + tail)
    high = (weighted + weighted_tail) / total
    rounding = 4 * len(terms) * np.finfo(float).eps * max(mean, 1.0)
    return EvalResult(mean, max(mean - low, high - mean) + rounding, Method.SERIES)


# Quadrature

@lru_cache(maxsize=8)
def _gauss_legendre(nodes: int) -> Tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(nodes)


def _gauss_panel(f: Callable[[float], float], a: float, b: float, nodes: int) -> float:
    points, weights = _gauss_legendre(nodes)
    half, mid = (b - a) / 2.0, (a + b) / 2.0
    return half * math.fsum(w * f(mid + half * t) for t, w in zip(points, weights))


def _adaptive_panel(f, a: float, b: float, tol: float, nodes: int, depth: int = 0) -> Tuple[float, float]:
    whole = _gauss_panel(f, a, b, nodes)
    mid = (a + b) / 2.0
    left = _gauss_panel(f, a, mid, nodes)
    right = _gauss_panel(f, mid, b, nodes)
    halves = left + right
    error = abs(halves - whole)
    if error <= max(tol, 8 * np.finfo(float).eps * abs(halves)) or depth >= 12:
        return halves, error
    lv, le = _adaptive_panel(f, a, mid, tol / 2, nodes, depth + 1)
    rv, re_ = _adaptive_panel(f, mid, b, tol / 2, nodes, depth + 1)
    return lv + rv, le + re_


def integrate_decaying(
    f: Callable[[float], float],
    tol: float,
    decay_hint: Optional[float] = None,
    panel: float = 2.0,
    u_max: float = 2000.0,
    nodes: int = 20,
) -> EvalResult:
    """
    Integrate a nonnegative, eventually decaying function over [0, ∞).

    Composite Gauss–Legendre panels are laid out from 0 outwards; each panel
    is refined by step halving. Marching stops at the first panel end U where
    the integrand decays and f(U)/δ < tol/2, δ being the observed log-decay
    rate (capped by decay_hint when given).

    Args:
        f: Integrand
        tol: Absolute error target
        decay_hint: Asymptotic exponential decay rate, if known
        panel: Panel width
        u_max: Give up beyond this point
        nodes: Gauss–Legendre nodes per panel

    Returns:
        EvalResult (method laplace) with the cutoff U

    Raises:
        DivergentOGFError: the integrand blows up or does not decay before u_max
        ToleranceNotReachedError: accumulated quadrature error above tol/2
    """
    total, quad_error, tail = 0.0, 0.0, 0.0
    a = 0.0
    fa = f(0.0)
    while True:
        b = a + panel
        value, error = _adaptive_panel(f, a, b, tol / 256.0, nodes)
        fb = f(b)
        if not (math.isfinite(value) and math.isfinite(fb)) or fb > 1e300:
            raise DivergentOGFError(f"integrand blows up near u={b:g}")
        total += value
        quad_error += error
        if fb == 0.0:
            if total > 0.0 or b >= 64.0:
                break
        elif fa > 0.0 and fb < fa:
            decay = -math.log(fb / fa) / panel
            if decay_hint is not None and decay_hint > 0.0:
                decay = min(decay, decay_hint)
            tail = fb / decay
            if tail < tol / 2.0:
                break
        a, fa = b, fb
        if a >= u_max:
            raise DivergentOGFError(f"integrand does not decay before u={u_max:g}")
    if quad_error > tol / 2.0:
        raise ToleranceNotReachedError(
            f"quadrature error {quad_error:.3g} above tolerance {tol / 2.0:.3g}"
        )
    return EvalResult(total, quad_error + tail, Method.LAPLACE, cutoff=b)


def ogf_eval_laplace(
    egf: Callable[[float], float],
    x: float,
    tol: float = 1e-10,
    rate: Optional[float] = None,
) -> EvalResult:
    """
    A(x) by the Laplace–Borel integral ∫₀^∞ e^{-u} Â(xu) du.

    Args:
        egf: Evaluator y -> Â(y); raises EgfDivergentError past its singularity
        x: Parameter (>= 0)
        tol: Absolute error target
        rate: Growth bound R of the counts, used as decay hint 1 - xR

    Returns:
        EvalResult (method laplace) with the integration cutoff

    Raises:
        DivergentOGFError: Â singular at finite u, or the integrand does not decay
    """
    if x < 0:
        raise ValueError("x must be >= 0")
    hint = None
    if rate is not None and x * rate < 1.0:
        hint = 1.0 - x * rate

    def integrand(u: float) -> float:
        return math.exp(-u) * egf(x * u)

    try:
        result = integrate_decaying(integrand, tol, decay_hint=hint)
    except EgfDivergentError as exc:
        raise DivergentOGFError(f"Â(xu) is singular at finite u for x={x}: {exc}") from exc
    logger.debug("laplace A(%g) = %.12g ± %.2g (cutoff %g)", x, result.value, result.error, result.cutoff)
    return result


def ogf_eval_adaptive(
    coefficients: Callable[[int], SeriesCoeffs],
    x: float,
    rel_tol: float = 1e-9,
    max_order: int = MAX_ORDER,
) -> Tuple[EvalResult, SeriesCoeffs, GrowthEstimate]:
    """
    Series evaluation of A(x), doubling the order until the tail bound
    falls below rel_tol * A(x) or max_order is reached.

    Args:
        coefficients: order -> SeriesCoeffs
        x: Parameter
        rel_tol: Relative tail target
        max_order: Largest order tried

    Returns:
        (result, coefficients used, growth estimate from the default order)
    """
    coeffs = coefficients(DEFAULT_ORDER)
    growth = growth_estimate(coeffs)
    result = ogf_eval_series(coeffs, growth, x)
    order = DEFAULT_ORDER
    while result.error > rel_tol * max(result.value, 1e-300) and order < max_order:
        order = min(order * 2, max_order)
        logger.info("extending coefficient table to order %d for x=%g", order, x)
        coeffs = coefficients(order)
        result = ogf_eval_series(coeffs, growth, x)
    return result, coeffs, growth


# Exponential generating function

def expression_value(expr: SpecExpr, y: float, env: Dict[str, float], spec: ValidatedSpec) -> float:
    """
    EGF value of an expression at y.

    Class references are read from env, or computed and stored there when
    missing (valid only for non-recursive classes).

    Raises:
        EgfDivergentError: a SEQ or CYC argument reaches 1, or SET overflows
    """
    if isinstance(expr, Epsilon):
        return 1.0
    if isinstance(expr, Atom):
        return y
    if isinstance(expr, Ref):
        if expr.name not in env:
            env[expr.name] = expression_value(spec.definition(expr.name), y, env, spec)
        return env[expr.name]
    if isinstance(expr, Union):
        return expression_value(expr.left, y, env, spec) + expression_value(expr.right, y, env, spec)
    if isinstance(expr, Product):
        return expression_value(expr.left, y, env, spec) * expression_value(expr.right, y, env, spec)
    f = expression_value(expr.inner, y, env, spec)
    if isinstance(expr, Set):
        if f > 700.0:
            raise EgfDivergentError(f"SET argument {f:g} overflows")
        return exp_tail(f, expr.minimum)
    if f >= 1.0:
        raise EgfDivergentError(
            f"{type(expr).__name__.upper()} argument {f:g} at or beyond the singularity 1"
        )
    if isinstance(expr, Seq):
        return f ** expr.minimum / (1.0 - f)
    return log_tail(f, expr.minimum)


class EgfEvaluator:
    """Callable y -> Â(y) for one class, with a fixed strategy"""

    MAX_VALUE = 1e12
    MAX_ITERATIONS = 10_000
    MAX_GROWING_STEPS = 25
    CACHE_SIZE = 256

    def __init__(self, spec: ValidatedSpec, class_name: Optional[str] = None,
                 tol: float = 1e-13, damping: float = 1.0):
        """
        Initialize evaluator.

        Args:
            spec: Validated specification
            class_name: Class to evaluate (root when None)
            tol: Absolute error target of the fixed-point strategy
            damping: Relaxation factor of the fixed-point update (1 = plain iteration)
        """
        self.spec = spec
        self.class_name = spec.resolve(class_name)
        self.tol = tol
        self.damping = damping
        self._fixed_points: Dict[float, Tuple[Dict[str, float], EvalResult]] = {}

    def __call__(self, y: float) -> float:
        return self.evaluate(y).value

    def evaluate(self, y: float, method: Optional[Method] = None) -> EvalResult:
        if y < 0:
            raise ValueError("x must be >= 0")
        if y == 0.0:
            a0 = egf_coeffs(self.spec, self.class_name, 0).counts[0]
            return EvalResult(float(a0), 0.0, Method.CLOSED_FORM)
        if method is None:
            method = Method.FIXED_POINT if self.class_name in self.spec.recursive else Method.CLOSED_FORM
            if method is Method.FIXED_POINT:
                result = self._try_series(y)
                if result is not None:
                    return result
        if method is Method.CLOSED_FORM:
            if self.class_name in self.spec.recursive:
                raise ValueError(f"class '{self.class_name}' is recursive: no closed form")
            return self._closed(y)
        if method is Method.SERIES:
            result = self._try_series(y)
            if result is None:
                raise EgfDivergentError(f"series strategy cannot bound the tail at x={y}")
            return result
        if method is Method.FIXED_POINT:
            return self.values(y)[1]
        raise ValueError(f"unsupported EGF method {method}")

    def _closed(self, y: float) -> EvalResult:
        value = expression_value(self.spec.definition(self.class_name), y, {}, self.spec)
        if not math.isfinite(value) or value > 1e300:
            raise EgfDivergentError(f"Â({y}) overflows")
        return EvalResult(value, 8 * np.finfo(float).eps * value, Method.CLOSED_FORM)

    def _try_series(self, y: float) -> Optional[EvalResult]:
        coeffs = egf_coeffs(self.spec, self.class_name, DEFAULT_ORDER)
        growth = growth_estimate(coeffs, use_egf=True)
        if not growth.bounded or y * growth.rate > SAFETY:
            return None
        terms = [float(c) * y ** n for n, c in enumerate(coeffs.egf)]
        total = math.fsum(terms)
        tail = 0.0 if coeffs.complete else _tail_bound(terms, y * growth.rate)
        if tail > self.tol:
            return None
        return EvalResult(total, tail + 4 * len(terms) * np.finfo(float).eps * total, Method.SERIES)

    def values(self, y: float) -> Tuple[Dict[str, float], EvalResult]:
        """
        Fixed-point values of every class at y.

        Iterates v <- F(v) from v = 0. Below the singularity the iteration
        increases monotonically to the least fixed point; above it, it either
        exceeds MAX_VALUE, leaves the domain of a constructor or keeps taking
        growing steps. Solved points are kept, so repeated draws at one
        parameter solve once.

        Returns:
            (values of all classes, EvalResult for this class)

        Raises:
            EgfDivergentError: divergence or no contraction within MAX_ITERATIONS
        """
        cached = self._fixed_points.get(y)
        if cached is None:
            cached = self._solve(y)
            if len(self._fixed_points) >= self.CACHE_SIZE:
                self._fixed_points.clear()
            self._fixed_points[y] = cached
        env, result = cached
        return dict(env), result

    def _solve(self, y: float) -> Tuple[Dict[str, float], EvalResult]:
        definitions = self.spec.system.definitions
        env = {name: 0.0 for name in definitions}
        previous_step: Optional[float] = None
        growing = 0
        for iteration in range(1, self.MAX_ITERATIONS + 1):
            updated: Dict[str, float] = {}
            for name, expr in definitions.items():
                fresh = expression_value(expr, y, dict(env), self.spec)
                updated[name] = (1 - self.damping) * env[name] + self.damping * fresh
            step = max(abs(updated[n] - env[n]) for n in definitions)
            env = updated
            if any(v > self.MAX_VALUE or not math.isfinite(v) for v in env.values()):
                raise EgfDivergentError(f"fixed-point iteration diverges at x={y}")
            scale = max(1.0, max(abs(v) for v in env.values()))
            if step <= 4 * np.finfo(float).eps * scale:
                # rounding level
                error = step
                break
            if previous_step is None or previous_step == 0.0:
                # the contraction ratio needs two nonzero steps
                previous_step = step
                continue
            q = step / previous_step
            previous_step = step
            if q >= 1.0:
                growing += 1
                if growing >= self.MAX_GROWING_STEPS:
                    raise EgfDivergentError(
                        f"fixed-point iteration at x={y} grew for {growing} consecutive steps"
                    )
                continue
            growing = 0
            error = step * q / (1.0 - q)
            if error <= self.tol * scale:
                break
        else:
            raise EgfDivergentError(
                f"fixed-point iteration at x={y} did not contract in {self.MAX_ITERATIONS} steps"
            )
        logger.debug("fixed point at x=%g after %d iterations", y, iteration)
        return env, EvalResult(env[self.class_name], error, Method.FIXED_POINT)


def egf_eval(spec: ValidatedSpec, class_name: Optional[str], x: float,
             tol: float = 1e-12, method: Optional[Method] = None) -> EvalResult:
    """
    Evaluate Â(x).

    Strategy: closed form for non-recursive classes, truncated series when
    the EGF coefficients allow a tail bound below tol, fixed-point iteration
    otherwise. A specific method can be forced.

    Args:
        spec: Validated specification
        class_name: Class (root when None)
        x: Parameter (>= 0)
        tol: Absolute error target
        method: Force a strategy

    Returns:
        EvalResult

    Raises:
        EgfDivergentError: x at or beyond the EGF singularity
    """
    return EgfEvaluator(spec, class_name, tol=tol).evaluate(x, method)


# Tuning

def tune_parameter(coefficients: Callable[[int], SeriesCoeffs], target: float,
                   rel_tol: float = 0.01) -> float:
    """
    Find x with E[N](x) within rel_tol of target, by bisection.

    E[N] is increasing in x, so bisection on [0, SAFETY/R] converges.

    Args:
        coefficients: order -> SeriesCoeffs
        target: Target mean size (>= 0)
        rel_tol: Relative tolerance on the mean

    Returns:
        Recommended x

    Raises:
        UnachievableError: target above the mean reachable at the safety bound
    """
    if target < 0:
        raise ValueError("target size must be >= 0")
    base = coefficients(DEFAULT_ORDER)
    growth = growth_estimate(base)
    if growth.verdict is Verdict.SUPEREXPONENTIAL:
        raise DivergentOGFError("A(x) diverges for every x > 0: coefficients grow superexponentially")
    if growth.verdict is Verdict.INCONCLUSIVE:
        raise InconclusiveGrowthError("cannot decide coefficient growth")

    smallest = next((n for n, a in enumerate(base.counts) if a), None)
    if smallest is None:
        raise UnachievableError("class has no objects")
    if target <= smallest:
        if target < smallest * (1 - rel_tol):
            raise UnachievableError(f"no object is smaller than {smallest}")
        return 0.0

    if growth.rate == 0.0:
        coeffs = base
        largest = max(n for n, a in enumerate(coeffs.counts) if a)
        if target > largest:
            raise UnachievableError(f"finite class: no object is larger than {largest}")
        hi = 1.0
        while expected_size_ordinary(coeffs, growth, hi) < target * (1 - rel_tol) and hi < 1e12:
            hi *= 2.0
    else:
        # stay on the accepted side of x * R <= SAFETY after rounding
        hi = SAFETY / growth.rate * (1 - 1e-12)
        needed = int(math.ceil(math.log(1e-12) / math.log(SAFETY))) + 8
        coeffs = coefficients(min(max(DEFAULT_ORDER, needed), 1024))
        ceiling = expected_size_ordinary(coeffs, growth, hi)
        if target > ceiling * (1 + rel_tol):
            raise UnachievableError(
                f"target {target:g} beyond the largest mean {ceiling:.4g} reachable at x={hi:.4g}"
            )

    lo = 0.0
    mid = hi
    for _ in range(200):
        mid = (lo + hi) / 2.0
        mean = expected_size_ordinary(coeffs, growth, mid)
        if abs(mean - target) <= rel_tol * target:
            return mid
        if mean < target:
            lo = mid
        else:
            hi = mid
    return mid

"""
Discrete laws used by the constructor rules of the exponential sampler.

SEQ draws its component count from a geometric law, SET from a Poisson law
and CYC from a logarithmic law. Each accepts a minimum count k, giving the
law conditioned on at least k components. Draws use exact sequential
inversion over the cumulative probabilities, computed in log space.
"""

import math
from typing import Callable

from scipy.special import gammainc

from .errors import LawDomainError
from .random_source import RandomSource
from .utils import log_tail

# Probabilities below this are treated as exhausted mass during inversion
_NEGLIGIBLE = 1e-17


def _invert(log_weight: Callable[[int], float], log_norm: float, start: int,
            mode: int, rng: RandomSource) -> int:
    """Smallest j >= start whose cumulative probability exceeds a uniform draw"""
    v = rng.uniform()
    cumulative = 0.0
    j = start
    while True:
        p = math.exp(log_weight(j) - log_norm)
        cumulative += p
        if v < cumulative:
            return j
        # rounding can leave the cumulative just short of 1
        if j > mode and p < _NEGLIGIBLE:
            return j
        j += 1


def poisson_pmf(lam: float, j: int, minimum: int = 0) -> float:
    """P(J = j) for J ~ Poisson(lam) conditioned on J >= minimum"""
    if j < minimum:
        return 0.0
    if lam == 0.0:
        return 1.0 if j == minimum == 0 else 0.0
    tail = 1.0 if minimum == 0 else float(gammainc(minimum, lam))
    return math.exp(j * math.log(lam) - math.lgamma(j + 1) - lam) / tail


def draw_poisson(lam: float, rng: RandomSource, minimum: int = 0) -> int:
    """
    Draw from Poisson(lam) conditioned on at least `minimum`.

    Args:
        lam: Mean of the unconditioned law (>= 0)
        rng: Random source
        minimum: Smallest admissible value

    Returns:
        The count
    """
    if not lam >= 0.0 or math.isinf(lam):
        raise LawDomainError("poisson", lam, "0 <= lambda < inf")
    if lam == 0.0:
        if minimum > 0:
            raise LawDomainError("poisson", lam, "lambda > 0 when a minimum is set")
        return 0
    # P(Poisson >= k) is the regularized lower incomplete gamma P(k, lam)
    tail = 1.0 if minimum == 0 else float(gammainc(minimum, lam))
    if tail == 0.0:
        raise LawDomainError("poisson", lam, f"lambda large enough to reach {minimum}")
    log_lam = math.log(lam)
    return _invert(
        lambda j: j * log_lam - math.lgamma(j + 1),
        lam + math.log(tail),
        minimum,
        max(minimum, int(lam)),
        rng,
    )


def geometric_pmf(p: float, j: int, minimum: int = 0) -> float:
    """P(J = j) for the SEQ law P(j) proportional to p^j, j >= minimum"""
    if j < minimum:
        return 0.0
    return (1.0 - p) * p ** (j - minimum)


def draw_geometric(p: float, rng: RandomSource, minimum: int = 0) -> int:
    """
    Draw j >= minimum with probability (1 - p) p^(j - minimum).

    Args:
        p: Ratio, 0 <= p < 1
        rng: Random source
        minimum: Smallest admissible value

    Returns:
        The count
    """
    if not 0.0 <= p < 1.0:
        raise LawDomainError("geometric", p, "0 <= p < 1")
    if p == 0.0:
        return minimum
    log_p = math.log(p)
    return _invert(
        lambda j: (j - minimum) * log_p,
        -math.log1p(-p),
        minimum,
        minimum,
        rng,
    )


def loglaw_pmf(lam: float, j: int, minimum: int = 1) -> float:
    """P(J = j) for the CYC law P(j) proportional to lam^j / j, j >= minimum"""
    if j < minimum:
        return 0.0
    return lam ** j / j / log_tail(lam, minimum)


def draw_loglaw(lam: float, rng: RandomSource, minimum: int = 1) -> int:
    """
    Draw j >= minimum with probability proportional to lam^j / j.

    Args:
        lam: Parameter, 0 < lam < 1
        rng: Random source
        minimum: Smallest admissible value (>= 1)

    Returns:
        The count
    """
    if not 0.0 < lam < 1.0:
        raise LawDomainError("loglaw", lam, "0 < lambda < 1")
    if minimum < 1:
        raise LawDomainError("loglaw", minimum, "minimum >= 1")
    log_lam = math.log(lam)
    return _invert(
        lambda j: j * log_lam - math.log(j),
        math.log(log_tail(lam, minimum)),
        minimum,
        minimum,
        rng,
    )

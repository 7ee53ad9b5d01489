"""
Utility functions shared by the oracle, samplers and CLI.
"""

import hashlib
import json
import math
from math import comb
from typing import Any, Dict, List, Sequence


def ordinary_term(count: int, x: float, n: int) -> float:
    """
    Compute a_n * x^n as a float without overflowing on huge counts.

    Args:
        count: Exact count a_n (may exceed the float range)
        x: Parameter (>= 0)
        n: Size

    Returns:
        The term value (0.0 when count or x^n vanishes)
    """
    if count == 0:
        return 0.0
    if n == 0:
        return float(count)
    if x <= 0.0:
        return 0.0
    return math.exp(math.log(count) + n * math.log(x))


def exponential_term(count: int, y: float, n: int) -> float:
    """
    Compute a_n * y^n / n! as a float, in log space.

    Args:
        count: Exact count a_n
        y: Parameter (>= 0)
        n: Size

    Returns:
        The term value
    """
    if count == 0:
        return 0.0
    if n == 0:
        return float(count)
    if y <= 0.0:
        return 0.0
    return math.exp(math.log(count) + n * math.log(y) - math.lgamma(n + 1))


def binomial_convolution(a: Sequence[int], b: Sequence[int]) -> List[int]:
    """
    Labeled product of two counting sequences.

    c_n = sum_k C(n, k) a_k b_{n-k}, truncated to the shorter input.

    Args:
        a: Counts of the left class
        b: Counts of the right class

    Returns:
        Counts of the product class
    """
    order = min(len(a), len(b))
    return [
        sum(comb(n, k) * a[k] * b[n - k] for k in range(n + 1))
        for n in range(order)
    ]


def config_hash(config: Dict[str, Any]) -> str:
    """
    Stable short hash of a configuration mapping.

    Args:
        config: JSON-serializable mapping

    Returns:
        First 16 hex digits of the SHA-256 of the canonical JSON
    """
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


def format_seconds(seconds: float) -> str:
    """
    Format a short duration with a readable unit.

    Args:
        seconds: Duration in seconds

    Returns:
        Formatted string (ns, us, ms or s)
    """
    if seconds < 1e-6:
        return f"{seconds * 1e9:.1f} ns"
    if seconds < 1e-3:
        return f"{seconds * 1e6:.1f} us"
    if seconds < 1.0:
        return f"{seconds * 1e3:.1f} ms"
    return f"{seconds:.2f} s"


def geometric_tail(term: float, ratio: float) -> float:
    """
    Bound sum_{k>=1} term * ratio^k.

    Args:
        term: Last included term
        ratio: Common ratio bound, must be < 1

    Returns:
        The geometric tail bound (inf when ratio >= 1)
    """
    if term == 0.0:
        return 0.0
    if ratio >= 1.0:
        return math.inf
    return term * ratio / (1.0 - ratio)


def exp_tail(f: float, k: int) -> float:
    """
    Compute sum_{j>=k} f^j / j!, the generating function of sets of at least k parts.

    Args:
        f: Argument (>= 0)
        k: Minimum cardinality

    Returns:
        The tail sum, without cancellation for small f
    """
    if k == 0:
        return math.exp(f)
    if f > k:
        return math.exp(f) - math.fsum(f ** j / math.factorial(j) for j in range(k))
    term = f ** k / math.factorial(k)
    total, j = 0.0, k
    while term > 0.0:
        total += term
        if term <= 1e-18 * total:
            break
        j += 1
        term *= f / j
    return total


def log_tail(f: float, k: int) -> float:
    """
    Compute sum_{j>=k} f^j / j for 0 <= f < 1 and k >= 1.

    Args:
        f: Argument
        k: Minimum cycle length

    Returns:
        The tail sum
    """
    head = -math.log1p(-f)
    if k == 1:
        return head
    if f > 0.5:
        return head - math.fsum(f ** j / j for j in range(1, k))
    total, j = 0.0, k
    power = f ** k
    while power > 0.0:
        total += power / j
        if power / j <= 1e-18 * total:
            break
        j += 1
        power *= f
    return total

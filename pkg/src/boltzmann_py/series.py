"""
Exact truncated power series over the rationals.

Coefficients are fractions.Fraction over unbounded integers, so the
exponential generating function of a labeled class is represented without
round-off up to the truncation order. The constructors of the symbolic
method map to: union = sum, product = Cauchy product, SEQ = quasi-inverse,
SET = exponential, CYC = logarithm of the quasi-inverse.
"""

from fractions import Fraction
from math import factorial
from typing import Iterable, List, Sequence, Tuple, Union

Number = Union[int, Fraction]


class PowerSeries:
    """Power series truncated after the coefficient of z^order"""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable[Number], order: int):
        values = [Fraction(c) for c in coeffs][: order + 1]
        values.extend([Fraction(0)] * (order + 1 - len(values)))
        self.coeffs: Tuple[Fraction, ...] = tuple(values)

    @classmethod
    def zero(cls, order: int) -> "PowerSeries":
        return cls((), order)

    @classmethod
    def one(cls, order: int) -> "PowerSeries":
        return cls((1,), order)

    @classmethod
    def atom(cls, order: int) -> "PowerSeries":
        """The series z"""
        return cls((0, 1), order)

    @classmethod
    def from_counts(cls, counts: Sequence[int]) -> "PowerSeries":
        """EGF of a counting sequence: coefficient n is counts[n] / n!"""
        return cls(
            (Fraction(c, factorial(n)) for n, c in enumerate(counts)),
            len(counts) - 1,
        )

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    def counts(self) -> List[int]:
        """
        Labeled counts n! * [z^n].

        Raises:
            ValueError: if some count is not an integer
        """
        result = []
        for n, c in enumerate(self.coeffs):
            value = c * factorial(n)
            if value.denominator != 1:
                raise ValueError(f"coefficient {n} does not give an integer count: {value}")
            result.append(value.numerator)
        return result

    def __getitem__(self, n: int) -> Fraction:
        return self.coeffs[n]

    def __len__(self) -> int:
        return len(self.coeffs)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PowerSeries):
            return NotImplemented
        return self.coeffs == other.coeffs

    def __hash__(self) -> int:
        return hash(self.coeffs)

    def __repr__(self) -> str:
        shown = ", ".join(str(c) for c in self.coeffs[:6])
        more = ", ..." if len(self.coeffs) > 6 else ""
        return f"PowerSeries([{shown}{more}], order={self.order})"

    def _check(self, other: "PowerSeries") -> int:
        return min(self.order, other.order)

    def __add__(self, other: "PowerSeries") -> "PowerSeries":
        order = self._check(other)
        return PowerSeries((self.coeffs[n] + other.coeffs[n] for n in range(order + 1)), order)

    def __sub__(self, other: "PowerSeries") -> "PowerSeries":
        order = self._check(other)
        return PowerSeries((self.coeffs[n] - other.coeffs[n] for n in range(order + 1)), order)

    def scale(self, factor: Number) -> "PowerSeries":
        factor = Fraction(factor)
        return PowerSeries((factor * c for c in self.coeffs), self.order)

    def __mul__(self, other: "PowerSeries") -> "PowerSeries":
        order = self._check(other)
        a, b = self.coeffs, other.coeffs
        # skip leading zeros of both operands
        lo_a = next((i for i, c in enumerate(a[: order + 1]) if c), order + 1)
        lo_b = next((i for i, c in enumerate(b[: order + 1]) if c), order + 1)
        out = [Fraction(0)] * (order + 1)
        for i in range(lo_a, order + 1):
            ai = a[i]
            if not ai:
                continue
            for j in range(lo_b, order + 1 - i):
                bj = b[j]
                if bj:
                    out[i + j] += ai * bj
        return PowerSeries(out, order)

    def power(self, k: int) -> "PowerSeries":
        result = PowerSeries.one(self.order)
        for _ in range(k):
            result = result * self
        return result

    def _require_no_constant(self, what: str) -> None:
        if self.coeffs[0] != 0:
            raise ValueError(f"{what} needs a series without constant term")

    def quasi_inverse(self) -> "PowerSeries":
        """1 / (1 - f) for f(0) = 0"""
        self._require_no_constant("quasi-inverse")
        f = self.coeffs
        g = [Fraction(1)] + [Fraction(0)] * self.order
        for n in range(1, self.order + 1):
            g[n] = sum((f[k] * g[n - k] for k in range(1, n + 1) if f[k]), Fraction(0))
        return PowerSeries(g, self.order)

    def exp(self) -> "PowerSeries":
        """exp(f) for f(0) = 0, from g' = f' g"""
        self._require_no_constant("exponential")
        f = self.coeffs
        g = [Fraction(1)] + [Fraction(0)] * self.order
        for n in range(1, self.order + 1):
            acc = sum((k * f[k] * g[n - k] for k in range(1, n + 1) if f[k]), Fraction(0))
            g[n] = acc / n
        return PowerSeries(g, self.order)

    def log_quasi_inverse(self) -> "PowerSeries":
        """log(1 / (1 - f)) for f(0) = 0, integrating f' / (1 - f)"""
        self._require_no_constant("logarithm")
        q = self.quasi_inverse().coeffs
        f = self.coeffs
        h = [Fraction(0)] * (self.order + 1)
        for n in range(1, self.order + 1):
            # [z^(n-1)] f' q, divided by n
            acc = sum((k * f[k] * q[n - k] for k in range(1, n + 1) if f[k]), Fraction(0))
            h[n] = acc / n
        return PowerSeries(h, self.order)

    def sequence(self, minimum: int = 0) -> "PowerSeries":
        """Sequences of at least `minimum` components: f^k / (1 - f)"""
        return self.power(minimum) * self.quasi_inverse()

    def set(self, minimum: int = 0) -> "PowerSeries":
        """Sets of at least `minimum` components: exp(f) - sum_{j<k} f^j / j!"""
        result = self.exp()
        term = PowerSeries.one(self.order)
        for j in range(minimum):
            result = result - term.scale(Fraction(1, factorial(j)))
            term = term * self
        return result

    def cycle(self, minimum: int = 1) -> "PowerSeries":
        """Cycles of at least `minimum` components: log(1/(1-f)) - sum_{1<=j<k} f^j / j"""
        result = self.log_quasi_inverse()
        term = self
        for j in range(1, minimum):
            result = result - term.scale(Fraction(1, j))
            term = term * self
        return result

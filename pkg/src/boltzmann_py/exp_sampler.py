"""
Exponential Boltzmann samplers for validated specifications.

An object of size n is returned with probability x^n / (n! Â(x)). The shape
is generated top-down from the constructor rules, then the atoms receive a
uniform random permutation of 1..n.

Example:
    >>> spec = load_spec("A = SET(Z)")
    >>> sampler = ExponentialSampler(spec, "A", 0.5, RandomSource(7))
    >>> obj = sampler.sample()
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from .distributions import draw_geometric, draw_loglaw, draw_poisson
from .errors import EmptyLanguageError, SizeCeilingExceededError
from .objects import Branch, Collection, EmptyLeaf, LabeledObject, Leaf, Pair, Shape, canonicalize, relabel
from .oracle import DEFAULT_ORDER, EgfEvaluator, SeriesCoeffs, egf_coeffs, expression_value
from .random_source import RandomSource
from .spec_parser import Atom, Cyc, Epsilon, Product, Ref, Seq, Set, SpecExpr, Union, ValidatedSpec

logger = logging.getLogger(__name__)


class _CeilingHit(Exception):
    pass


class ExponentialSampler:
    """Γ̂ₓ for one class of a specification at a fixed parameter"""

    MAX_RESAMPLES = 1000

    def __init__(self, spec: ValidatedSpec, class_name: Optional[str], x: float,
                 rng: RandomSource, ceiling: Optional[int] = None,
                 evaluator: Optional[EgfEvaluator] = None):
        """
        Initialize sampler.

        Args:
            spec: Validated specification
            class_name: Class to sample (root when None)
            x: Parameter, below the EGF singularity
            rng: Random source owned by this sampler
            ceiling: Optional largest admissible size; draws above it are
                rejected, giving the Boltzmann law conditioned on n <= ceiling
            evaluator: Fixed-point solver of the same specification, shared
                between samplers so its solved points are reused

        Raises:
            EgfDivergentError: x at or beyond the singularity
            EmptyLanguageError: Â(x) = 0
        """
        if x < 0:
            raise ValueError("x must be >= 0")
        self.spec = spec
        self.class_name = spec.resolve(class_name)
        self.x = x
        self.rng = rng
        self.ceiling = ceiling
        self._root = Ref(self.class_name)

        self._env: Dict[str, float] = {}
        if spec.recursive and x > 0.0:
            solver = evaluator or EgfEvaluator(spec, self.class_name)
            self._env, _ = solver.values(x)
        self._values: Dict[int, float] = {}
        self.value = self._value(self._root)
        if self.value <= 0.0:
            raise EmptyLanguageError(f"Â({x}) = 0 for class '{self.class_name}'")

    def _value(self, expr: SpecExpr) -> float:
        key = id(expr)
        if key not in self._values:
            if self.x == 0.0:
                self._values[key] = _value_at_zero(expr, self.spec)
            else:
                self._values[key] = expression_value(expr, self.x, self._env, self.spec)
        return self._values[key]

    def sample(self) -> LabeledObject:
        """
        Draw one object.

        Raises:
            SizeCeilingExceededError: no draw within the ceiling after MAX_RESAMPLES tries
        """
        for attempt in range(self.MAX_RESAMPLES):
            try:
                shape, size = self._draw_shape()
            except _CeilingHit:
                continue
            if attempt:
                logger.debug("accepted after %d rejection(s) above ceiling %s", attempt, self.ceiling)
            labels = (int(v) + 1 for v in self.rng.permutation(size)) if size else iter(())
            return LabeledObject(canonicalize(relabel(shape, labels)), size)
        raise SizeCeilingExceededError(
            f"no object of size <= {self.ceiling} in {self.MAX_RESAMPLES} draws at x={self.x}"
        )

    def _draw_shape(self) -> Tuple[Shape, int]:
        # explicit stack: trees near the singularity are deeper than the recursion limit
        tasks: List[Tuple[str, object]] = [("expand", self._root)]
        results: List[Shape] = []
        size = 0
        while tasks:
            action, payload = tasks.pop()
            if action == "build":
                kind, arity, side = payload
                children = results[len(results) - arity:]
                del results[len(results) - arity:]
                if kind == "branch":
                    results.append(Branch(side, children[0]))
                elif kind == "pair":
                    results.append(Pair(children[0], children[1]))
                else:
                    results.append(Collection(kind, tuple(children)))
                continue

            expr = payload
            if isinstance(expr, Epsilon):
                results.append(EmptyLeaf())
            elif isinstance(expr, Atom):
                size += 1
                if self.ceiling is not None and size > self.ceiling:
                    raise _CeilingHit()
                results.append(Leaf(0, expr.letter))
            elif isinstance(expr, Ref):
                tasks.append(("expand", self.spec.definition(expr.name)))
            elif isinstance(expr, Union):
                left = self._value(expr.left)
                take_left = self.rng.uniform() * self._value(expr) < left
                side, chosen = ("left", expr.left) if take_left else ("right", expr.right)
                tasks.append(("build", ("branch", 1, side)))
                tasks.append(("expand", chosen))
            elif isinstance(expr, Product):
                tasks.append(("build", ("pair", 2, None)))
                tasks.append(("expand", expr.right))
                tasks.append(("expand", expr.left))
            else:
                inner = self._value(expr.inner)
                if isinstance(expr, Seq):
                    count, kind = draw_geometric(inner, self.rng, expr.minimum), "seq"
                elif isinstance(expr, Set):
                    count, kind = draw_poisson(inner, self.rng, expr.minimum), "set"
                else:
                    count, kind = draw_loglaw(inner, self.rng, expr.minimum), "cyc"
                tasks.append(("build", (kind, count, None)))
                tasks.extend(("expand", expr.inner) for _ in range(count))
        return results[0], size


def _value_at_zero(expr: SpecExpr, spec: ValidatedSpec) -> float:
    """Number of size-0 objects, the EGF value at 0"""
    if isinstance(expr, Epsilon):
        return 1.0
    if isinstance(expr, Atom):
        return 0.0
    if isinstance(expr, Ref):
        return float(egf_coeffs(spec, expr.name, 0).counts[0])
    if isinstance(expr, Union):
        return _value_at_zero(expr.left, spec) + _value_at_zero(expr.right, spec)
    if isinstance(expr, Product):
        return _value_at_zero(expr.left, spec) * _value_at_zero(expr.right, spec)
    # collections are over classes without size-0 objects
    if isinstance(expr, Cyc):
        return 0.0
    return 1.0 if expr.minimum == 0 else 0.0


def gamma_exp(spec: ValidatedSpec, class_name: Optional[str], x: float, rng: RandomSource,
              ceiling: Optional[int] = None) -> LabeledObject:
    """
    Draw one object from the exponential Boltzmann model.

    Args:
        spec: Validated specification
        class_name: Class (root when None)
        x: Parameter
        rng: Random source
        ceiling: Optional size ceiling (conditioned law)

    Returns:
        LabeledObject of size n with probability x^n / (n! Â(x))
    """
    return ExponentialSampler(spec, class_name, x, rng, ceiling).sample()


@dataclass
class SpecTarget:
    """A class of a specification, as consumed by the ordinary transform and the checks"""
    spec: ValidatedSpec
    class_name: Optional[str] = None
    _evaluator: Optional[EgfEvaluator] = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        self.class_name = self.spec.resolve(self.class_name)
        self._evaluator = EgfEvaluator(self.spec, self.class_name)

    @property
    def name(self) -> str:
        return self.class_name

    def coefficients(self, order: int = DEFAULT_ORDER) -> SeriesCoeffs:
        return egf_coeffs(self.spec, self.class_name, order)

    def egf_value(self, y: float) -> float:
        return self._evaluator(y)

    def sample_exponential(self, y: float, rng: RandomSource,
                           ceiling: Optional[int] = None) -> LabeledObject:
        sampler = ExponentialSampler(self.spec, self.class_name, y, rng, ceiling, evaluator=self._evaluator)
        return sampler.sample()

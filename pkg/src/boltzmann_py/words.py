"""
Regular languages as labeled word classes.

A word of length n is a labeled object whose atoms are its positions, so a
language with a_n words of length n has EGF sum a_n x^n / n!. Languages are
given by deterministic automata read from JSON:

    {"alphabet": ["a", "b"], "states": 1, "start": 0, "accept": [0],
     "delta": {"0,a": 0, "0,b": 0}}

Missing transitions lead to an implicit dead state. The shuffle product of
two languages has the product EGF; its objects are pairs of words with the
set of positions taken from the left word.
"""

import json
import logging
import math
import threading
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations, product as cartesian
from typing import Dict, FrozenSet, Iterator, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator
from scipy.linalg import expm

from .errors import (
    DfaError,
    DivergentOGFError,
    EmptyLanguageError,
    SingularSystemError,
    SizeCeilingExceededError,
    TailTooHeavyError,
)
from .oracle import DEFAULT_ORDER, EvalResult, Method, SeriesCoeffs
from .ord_transform import OrdinarySampler, build_ordinary
from .objects import ShuffleObject, WordObject
from .random_source import RandomSource
from .utils import binomial_convolution

logger = logging.getLogger(__name__)

DEAD = -1


class DfaDocument(BaseModel):
    """JSON form of an automaton, validated before conversion"""

    model_config = ConfigDict(extra="forbid")

    alphabet: List[str] = Field(min_length=1)
    states: int = Field(ge=1)
    start: int = Field(ge=0)
    accept: List[int] = Field(default_factory=list)
    delta: Dict[str, int] = Field(default_factory=dict)

    @field_validator("alphabet")
    @classmethod
    def _distinct_letters(cls, letters: List[str]) -> List[str]:
        if any(not letter for letter in letters):
            raise ValueError("letters must be non-empty")
        if len(set(letters)) != len(letters):
            raise ValueError("alphabet has repeated letters")
        return letters

    @model_validator(mode="after")
    def _in_range(self) -> "DfaDocument":
        if self.start >= self.states:
            raise ValueError(f"start state {self.start} out of range")
        for state in self.accept:
            if not 0 <= state < self.states:
                raise ValueError(f"accepting state {state} out of range")
        for key, target in self.delta.items():
            state, letter = _split_key(key)
            if not 0 <= state < self.states:
                raise ValueError(f"transition '{key}' leaves unknown state {state}")
            if letter not in self.alphabet:
                raise ValueError(f"transition '{key}' uses letter outside the alphabet")
            if not 0 <= target < self.states:
                raise ValueError(f"transition '{key}' enters unknown state {target}")
        return self


def _split_key(key: str) -> Tuple[int, str]:
    state, sep, letter = key.partition(",")
    if not sep or not state.strip().isdigit():
        raise ValueError(f"transition key '{key}' is not 'state,letter'")
    return int(state), letter


@dataclass(frozen=True)
class Dfa:
    """Deterministic automaton with a total transition function (DEAD = -1 absorbs)"""
    alphabet: Tuple[str, ...]
    states: int
    start: int
    accept: FrozenSet[int]
    delta: Tuple[Tuple[int, ...], ...]  # delta[state][letter index]
    name: str = field(default="L", compare=False)

    @classmethod
    def from_document(cls, document: DfaDocument, name: str = "L") -> "Dfa":
        index = {letter: i for i, letter in enumerate(document.alphabet)}
        table = [[DEAD] * len(document.alphabet) for _ in range(document.states)]
        for key, target in document.delta.items():
            state, letter = _split_key(key)
            table[state][index[letter]] = target
        raw = cls(
            alphabet=tuple(document.alphabet),
            states=document.states,
            start=document.start,
            accept=frozenset(document.accept),
            delta=tuple(tuple(row) for row in table),
            name=name,
        )
        trimmed = raw.trimmed()
        logger.debug("automaton %s: %d state(s), %d after trimming", name, raw.states, trimmed.states)
        return trimmed

    @classmethod
    def from_json(cls, text: str, name: str = "L") -> "Dfa":
        """
        Parse and validate a DFA document.

        Raises:
            DfaError: malformed JSON or schema violation
        """
        try:
            document = DfaDocument.model_validate(json.loads(text))
        except json.JSONDecodeError as exc:
            raise DfaError(f"{name}: invalid JSON: {exc}") from exc
        except ValidationError as exc:
            raise DfaError(f"{name}: invalid automaton: {exc}") from exc
        return cls.from_document(document, name)

    def step(self, state: int, letter_index: int) -> int:
        return DEAD if state == DEAD else self.delta[state][letter_index]

    def accepts(self, word) -> bool:
        state = self.start
        index = {letter: i for i, letter in enumerate(self.alphabet)}
        for letter in word:
            if letter not in index:
                return False
            state = self.step(state, index[letter])
        return state in self.accept

    def trimmed(self) -> "Dfa":
        """Restrict to states reachable from start and co-reachable to an accepting state"""
        forward = {self.start}
        stack = [self.start]
        while stack:
            for target in self.delta[stack.pop()]:
                if target != DEAD and target not in forward:
                    forward.add(target)
                    stack.append(target)
        backward = set(self.accept)
        changed = True
        while changed:
            changed = False
            for state in range(self.states):
                if state not in backward and any(t in backward for t in self.delta[state] if t != DEAD):
                    backward.add(state)
                    changed = True

        useful = sorted(forward & backward)
        if self.start not in useful:
            # empty language: a lone non-accepting start state
            return Dfa(self.alphabet, 1, 0, frozenset(), (tuple([DEAD] * len(self.alphabet)),), self.name)
        renumber = {old: new for new, old in enumerate(useful)}
        delta = tuple(
            tuple(renumber.get(t, DEAD) for t in self.delta[old])
            for old in useful
        )
        accept = frozenset(renumber[s] for s in self.accept if s in renumber)
        return Dfa(self.alphabet, len(useful), renumber[self.start], accept, delta, self.name)

    def transition_matrix(self, dtype=object) -> np.ndarray:
        """M[i, j] = number of letters leading from i to j"""
        matrix = np.zeros((self.states, self.states), dtype=dtype)
        for i, row in enumerate(self.delta):
            for j in row:
                if j != DEAD:
                    matrix[i, j] += 1
        return matrix

    def accept_vector(self, dtype=object) -> np.ndarray:
        vector = np.zeros(self.states, dtype=dtype)
        for state in self.accept:
            vector[state] = 1
        return vector

    @property
    def is_empty(self) -> bool:
        return not self.accept

    @property
    def is_finite(self) -> bool:
        """A trimmed automaton accepts finitely many words iff it has no cycle"""
        state_colors: Dict[int, int] = {}

        def has_cycle(state: int) -> bool:
            state_colors[state] = 1
            for target in self.delta[state]:
                if target == DEAD:
                    continue
                if state_colors.get(target) == 1:
                    return True
                if target not in state_colors and has_cycle(target):
                    return True
            state_colors[state] = 2
            return False

        return not has_cycle(self.start)

    @property
    def longest_word(self) -> Optional[int]:
        """Length of the longest accepted word of a finite language"""
        if not self.is_finite:
            return None
        if self.is_empty:
            return 0

        @lru_cache(maxsize=None)
        def longest(state: int) -> int:
            best = 0 if state in self.accept else -1
            for target in self.delta[state]:
                if target != DEAD:
                    tail = longest(target)
                    if tail >= 0:
                        best = max(best, tail + 1)
            return best

        return longest(self.start)

    @property
    def spectral_radius(self) -> float:
        if self.is_empty:
            return 0.0
        return float(max(abs(np.linalg.eigvals(self.transition_matrix(float)))))


@lru_cache(maxsize=128)
def _count_table(dfa: Dfa, order: int) -> Tuple[int, ...]:
    vector = [0] * dfa.states
    vector[dfa.start] = 1
    counts = []
    for _ in range(order + 1):
        counts.append(sum(vector[s] for s in dfa.accept))
        following = [0] * dfa.states
        for state, ways in enumerate(vector):
            if ways:
                for target in dfa.delta[state]:
                    if target != DEAD:
                        following[target] += ways
        vector = following
    return tuple(counts)


def count_words(dfa: Dfa, order: int = DEFAULT_ORDER) -> SeriesCoeffs:
    """
    Number of accepted words of each length, by dynamic programming over states.

    Args:
        dfa: Automaton
        order: Largest length N

    Returns:
        SeriesCoeffs with exact integer counts a_0..a_N
    """
    longest = dfa.longest_word
    complete = dfa.is_finite and longest is not None and order >= longest
    return SeriesCoeffs.from_counts(dfa.name, _count_table(dfa, order), complete=complete)


def count_words_matrix(dfa: Dfa, order: int) -> List[int]:
    """Counts e_start^T M^n f from exact transfer-matrix powers"""
    matrix = dfa.transition_matrix()
    accept = dfa.accept_vector()
    power = np.identity(dfa.states, dtype=object)
    counts = []
    for _ in range(order + 1):
        counts.append(int(power[dfa.start].dot(accept)))
        power = power.dot(matrix)
    return counts


def egf_words(dfa: Dfa, y: float) -> float:
    """Ĉ(y) = e_start^T exp(yM) f"""
    if dfa.is_empty:
        return 0.0
    if y == 0.0:
        return 1.0 if dfa.start in dfa.accept else 0.0
    propagated = expm(y * dfa.transition_matrix(float))
    return float(propagated[dfa.start] @ dfa.accept_vector(float))


def ogf_rational_eval(dfa: Dfa, x: float) -> EvalResult:
    """
    Exact A(x) of a regular language by solving (I - xM) v = f.

    Args:
        dfa: Automaton
        x: Parameter, below 1 / spectral radius of M

    Returns:
        EvalResult (method linear-solve), error from the residual

    Raises:
        DivergentOGFError: x * spectral radius >= 1
        SingularSystemError: I - xM numerically singular
    """
    if x < 0:
        raise ValueError("x must be >= 0")
    if dfa.is_empty:
        return EvalResult(0.0, 0.0, Method.LINEAR_SOLVE)
    rho = dfa.spectral_radius
    if x * rho >= 1.0:
        raise DivergentOGFError(f"A(x) of '{dfa.name}' diverges: x * spectral radius = {x * rho:.4g}")
    system = np.identity(dfa.states) - x * dfa.transition_matrix(float)
    accept = dfa.accept_vector(float)
    try:
        solution = np.linalg.solve(system, accept)
        residual = system @ solution - accept
        correction = np.linalg.solve(system, residual)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(f"I - xM singular at x={x}: {exc}") from exc
    value = float(solution[dfa.start])
    error = float(np.max(np.abs(correction))) + 4 * np.finfo(float).eps * abs(value)
    return EvalResult(value, error, Method.LINEAR_SOLVE)


def enumerate_words(dfa: Dfa, length: int) -> Iterator[Tuple[str, ...]]:
    """All accepted words of a given length, in lexicographic letter order"""
    for word in cartesian(dfa.alphabet, repeat=length):
        if dfa.accepts(word):
            yield word


class WordSampler:
    """Exponential sampler of a regular language, reusable across parameters"""

    TAIL = 1e-12
    MAX_LENGTH = 4096

    def __init__(self, dfa: Dfa):
        """
        Initialize sampler.

        Args:
            dfa: Trimmed automaton
        """
        self.dfa = dfa
        self._completions: List[List[int]] = [
            [1 if s in dfa.accept else 0 for s in range(dfa.states)]
        ]
        self._prefixes: List[int] = [1]
        self._frontier = [1 if s == dfa.start else 0 for s in range(dfa.states)]
        self.out_degree = max((sum(t != DEAD for t in row) for row in dfa.delta), default=0)
        self._lock = threading.Lock()

    def completions(self, length: int) -> List[int]:
        """Number of accepted words of this length read from each state"""
        with self._lock:
            while len(self._completions) <= length:
                previous = self._completions[-1]
                self._completions.append([
                    sum(previous[t] for t in self.dfa.delta[s] if t != DEAD)
                    for s in range(self.dfa.states)
                ])
        return self._completions[length]

    def count(self, length: int) -> int:
        return self.completions(length)[self.dfa.start]

    def prefixes(self, length: int) -> int:
        """Number of words of this length that can still be completed to an accepted word"""
        with self._lock:
            while len(self._prefixes) <= length:
                following = [0] * self.dfa.states
                for state, ways in enumerate(self._frontier):
                    if ways:
                        for target in self.dfa.delta[state]:
                            if target != DEAD:
                                following[target] += ways
                self._frontier = following
                self._prefixes.append(sum(following))
        return self._prefixes[length]

    def length_table(self, y: float) -> np.ndarray:
        """
        Terms a_n y^n / n!, scaled by a common factor, up to the first n whose
        remaining tail is below TAIL times the running sum.

        Words longer than n number at most W_n d^(m-n) at length m, with W_n
        the live prefixes of length n and d the largest out-degree, so the
        tail is at most W_n y^n / n! * r / (1 - r) with r = d y / (n + 1).

        Raises:
            EmptyLanguageError: no accepted word
            TailTooHeavyError: the bound is not met by MAX_LENGTH
        """
        if self.dfa.is_empty:
            raise EmptyLanguageError(f"Ĉ({y}) = 0 for '{self.dfa.name}'")
        if y == 0.0:
            if self.count(0) == 0:
                raise EmptyLanguageError(f"Ĉ(0) = 0 for '{self.dfa.name}'")
            return np.ones(1)
        log_y = math.log(y)
        logs: List[float] = []
        shift = -math.inf
        running = 0.0  # sum of exp(log - shift)
        for n in range(self.MAX_LENGTH + 1):
            count = self.count(n)
            log_term = math.log(count) + n * log_y - math.lgamma(n + 1) if count else -math.inf
            logs.append(log_term)
            if log_term > shift:
                running = running * math.exp(shift - log_term) + 1.0 if running else 1.0
                shift = log_term
            elif count:
                running += math.exp(log_term - shift)

            alive = self.prefixes(n)
            ratio = self.out_degree * y / (n + 1)
            if alive == 0 or ratio == 0.0:
                break
            if running and ratio < 1.0:
                log_tail = (math.log(alive) + n * log_y - math.lgamma(n + 1)
                            + math.log(ratio) - math.log1p(-ratio))
                if log_tail - shift <= math.log(self.TAIL * running):
                    break
        else:
            raise TailTooHeavyError(f"length table for '{self.dfa.name}' at x={y} exceeds {self.MAX_LENGTH}")
        if not running:
            raise EmptyLanguageError(f"Ĉ({y}) = 0 for '{self.dfa.name}'")
        return np.exp(np.asarray(logs) - shift)

    def uniform_word(self, length: int, rng: RandomSource) -> Tuple[str, ...]:
        """Uniform accepted word of a given length, by backward counting"""
        state = self.dfa.start
        word = []
        for remaining in range(length, 0, -1):
            ahead = self.completions(remaining - 1)
            pick = rng.integer_below(self.completions(remaining)[state])
            for letter_index, target in enumerate(self.dfa.delta[state]):
                weight = ahead[target] if target != DEAD else 0
                if pick < weight:
                    word.append(self.dfa.alphabet[letter_index])
                    state = target
                    break
                pick -= weight
        return tuple(word)

    def sample(self, y: float, rng: RandomSource) -> WordObject:
        terms = self.length_table(y)
        cumulative = np.cumsum(terms)
        length = int(np.searchsorted(cumulative, rng.uniform() * cumulative[-1], side="right"))
        return WordObject(self.uniform_word(length, rng))


@lru_cache(maxsize=32)
def _word_sampler(dfa: Dfa) -> WordSampler:
    return WordSampler(dfa)


def exp_word_sampler(dfa: Dfa, x: float, rng: RandomSource) -> WordObject:
    """
    Draw a word of length n with probability a_n x^n / (n! Ĉ(x)), uniform among
    the accepted words of that length.

    Raises:
        EmptyLanguageError: Ĉ(x) = 0
    """
    if x < 0:
        raise ValueError("x must be >= 0")
    return _word_sampler(dfa).sample(x, rng)


@dataclass(frozen=True)
class ShuffleLanguage:
    """Shuffle product of two regular languages, with interleaving semantics"""
    left: Dfa
    right: Dfa

    @property
    def name(self) -> str:
        return f"{self.left.name}⧢{self.right.name}"

    def counts(self, order: int = DEFAULT_ORDER) -> List[int]:
        """c_n = sum_k C(n, k) a_k b_{n-k}"""
        return binomial_convolution(_count_table(self.left, order), _count_table(self.right, order))

    def egf_value(self, y: float) -> float:
        return egf_words(self.left, y) * egf_words(self.right, y)


def shuffle_exp_sampler(shuffle: ShuffleLanguage, x: float, rng: RandomSource) -> ShuffleObject:
    """
    Exponential sampler of the shuffle: independent words from both sides and
    a uniform set of |left| positions among |left| + |right|.
    """
    left = exp_word_sampler(shuffle.left, x, rng)
    right = exp_word_sampler(shuffle.right, x, rng)
    pattern = rng.subset(left.size + right.size, left.size)
    return ShuffleObject(left.word, right.word, pattern)


def enumerate_interleavings(shuffle: ShuffleLanguage, length: int) -> Iterator[ShuffleObject]:
    """All annotated interleavings of a given total length"""
    for k in range(length + 1):
        for left in enumerate_words(shuffle.left, k):
            for right in enumerate_words(shuffle.right, length - k):
                for pattern in combinations(range(length), k):
                    yield ShuffleObject(left, right, pattern)


def _with_ceiling(draw, ceiling: Optional[int], attempts: int = 1000):
    for _ in range(attempts):
        obj = draw()
        if ceiling is None or obj.size <= ceiling:
            return obj
    raise SizeCeilingExceededError(f"no object of size <= {ceiling} in {attempts} draws")


@dataclass(frozen=True)
class WordTarget:
    """A regular language as consumed by the ordinary transform and the checks"""
    dfa: Dfa

    @property
    def name(self) -> str:
        return self.dfa.name

    def coefficients(self, order: int = DEFAULT_ORDER) -> SeriesCoeffs:
        return count_words(self.dfa, order)

    def egf_value(self, y: float) -> float:
        return egf_words(self.dfa, y)

    def sample_exponential(self, y: float, rng: RandomSource, ceiling: Optional[int] = None) -> WordObject:
        return _with_ceiling(lambda: exp_word_sampler(self.dfa, y, rng), ceiling)


@dataclass(frozen=True)
class ShuffleTarget:
    shuffle: ShuffleLanguage

    @property
    def name(self) -> str:
        return self.shuffle.name

    def coefficients(self, order: int = DEFAULT_ORDER) -> SeriesCoeffs:
        left, right = self.shuffle.left, self.shuffle.right
        complete = (
            left.is_finite and right.is_finite
            and order >= (left.longest_word or 0) + (right.longest_word or 0)
        )
        return SeriesCoeffs.from_counts(self.name, self.shuffle.counts(order), complete=complete)

    def egf_value(self, y: float) -> float:
        return self.shuffle.egf_value(y)

    def sample_exponential(self, y: float, rng: RandomSource, ceiling: Optional[int] = None) -> ShuffleObject:
        return _with_ceiling(lambda: shuffle_exp_sampler(self.shuffle, y, rng), ceiling)


def ordinary_shuffle_sampler(shuffle: ShuffleLanguage, x: float, rng: Optional[RandomSource] = None,
                             strategy: str = "mixture") -> OrdinarySampler:
    """
    Ordinary sampler of the shuffle: size n with probability c_n x^n / C(x).

    Returns:
        OrdinarySampler whose sample() yields ShuffleObject

    Raises:
        DivergentOGFError: x * R above the safety bound
    """
    return build_ordinary(ShuffleTarget(shuffle), x, strategy=strategy, rng=rng)

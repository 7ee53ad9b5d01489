"""
Boltzmann Sampler Library

A Python library for random generation of combinatorial structures:
- Labeled specifications (.bz files) with SEQ / SET / CYC constructors
- Exact counting series and generating-function oracles
- Exponential Boltzmann samplers
- Ordinary samplers obtained from exponential ones through the density
  e^{-u} Â(xu) / A(x) of a randomized parameter
- Regular languages (DFA JSON documents) and their shuffle products
- Chi-square verification against the exact size laws
"""

try:
    from ._version import version as __version__
except ImportError:
    __version__ = "unknown"

from .errors import BoltzmannError
from .spec_parser import SpecSystem, ValidatedSpec, load_spec, parse_spec, validate
from .oracle import (
    EvalResult,
    GrowthEstimate,
    SeriesCoeffs,
    egf_coeffs,
    egf_eval,
    expected_size_eval,
    expected_size_ordinary,
    growth_estimate,
    ogf_eval_laplace,
    ogf_eval_series,
    tune_parameter,
)
from .random_source import RandomSource
from .objects import LabeledObject, ShuffleObject, WordObject
from .exp_sampler import ExponentialSampler, SpecTarget, gamma_exp
from .ord_transform import OrdinarySampler, build_ordinary, draw_u, sample_ordinary
from .words import (
    Dfa,
    ShuffleLanguage,
    ShuffleTarget,
    WordTarget,
    count_words,
    exp_word_sampler,
    ogf_rational_eval,
    ordinary_shuffle_sampler,
    shuffle_exp_sampler,
)
from .stats import Chi2Result, Histogram, chi_square, enumerate_objects, run_check_suite
from .loader import BoltzmannLoader

__all__ = [
    "BoltzmannError",
    "SpecSystem",
    "ValidatedSpec",
    "load_spec",
    "parse_spec",
    "validate",
    "EvalResult",
    "GrowthEstimate",
    "SeriesCoeffs",
    "egf_coeffs",
    "egf_eval",
    "expected_size_eval",
    "expected_size_ordinary",
    "growth_estimate",
    "ogf_eval_laplace",
    "ogf_eval_series",
    "tune_parameter",
    "RandomSource",
    "LabeledObject",
    "ShuffleObject",
    "WordObject",
    "ExponentialSampler",
    "SpecTarget",
    "gamma_exp",
    "OrdinarySampler",
    "build_ordinary",
    "draw_u",
    "sample_ordinary",
    "Dfa",
    "ShuffleLanguage",
    "ShuffleTarget",
    "WordTarget",
    "count_words",
    "exp_word_sampler",
    "ogf_rational_eval",
    "ordinary_shuffle_sampler",
    "shuffle_exp_sampler",
    "Chi2Result",
    "Histogram",
    "chi_square",
    "enumerate_objects",
    "run_check_suite",
    "BoltzmannLoader",
]

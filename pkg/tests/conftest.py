"""
Pytest configuration and shared fixtures for boltzmann-py tests
"""

import json

import pytest

from boltzmann_py.exp_sampler import SpecTarget
from boltzmann_py.loader import BoltzmannLoader
from boltzmann_py.random_source import RandomSource
from boltzmann_py.spec_parser import load_spec
from boltzmann_py.words import Dfa, ShuffleLanguage, WordTarget


SET_SPEC = "A = SET(Z)"
BELL_SPEC = "P = SET(SET>=1(Z))"
CAYLEY_SPEC = "T = Z * SET(T)"
SEQ_SPEC = "S = SEQ(Z)"
EPSILON_SPEC = "E = 1"


@pytest.fixture
def temp_dir(tmp_path):
    """Provide a temporary directory for test files"""
    return tmp_path


@pytest.fixture
def rng():
    """Seeded random source"""
    return RandomSource(12345)


@pytest.fixture
def set_spec():
    """SET(Z): one object of each size"""
    return load_spec(SET_SPEC)


@pytest.fixture
def bell_spec():
    """Set partitions"""
    return load_spec(BELL_SPEC)


@pytest.fixture
def cayley_spec():
    """Labeled rooted trees"""
    return load_spec(CAYLEY_SPEC)


@pytest.fixture
def seq_spec():
    """SEQ(Z): a_n = n!"""
    return load_spec(SEQ_SPEC)


@pytest.fixture
def epsilon_spec():
    return load_spec(EPSILON_SPEC)


@pytest.fixture
def set_target(set_spec):
    return SpecTarget(set_spec, "A")


def make_dfa(alphabet, states, start, accept, delta, name="L"):
    """Build a Dfa from the JSON document fields"""
    document = {"alphabet": alphabet, "states": states, "start": start, "accept": accept, "delta": delta}
    return Dfa.from_json(json.dumps(document), name=name)


@pytest.fixture
def binary_dfa():
    """{a,b}*"""
    return make_dfa(["a", "b"], 1, 0, [0], {"0,a": 0, "0,b": 0}, name="binary")


@pytest.fixture
def abstar_dfa():
    """(ab)*"""
    return make_dfa(["a", "b"], 2, 0, [0], {"0,a": 1, "1,b": 0}, name="abstar")


@pytest.fixture
def astar_dfa():
    return make_dfa(["a"], 1, 0, [0], {"0,a": 0}, name="astar")


@pytest.fixture
def bstar_dfa():
    return make_dfa(["b"], 1, 0, [0], {"0,b": 0}, name="bstar")


@pytest.fixture
def empty_dfa():
    """Language with no words"""
    return make_dfa(["a", "b"], 1, 0, [], {"0,a": 0, "0,b": 0}, name="empty")


@pytest.fixture
def epsilon_dfa():
    """Language holding only the empty word"""
    return make_dfa(["a"], 1, 0, [0], {}, name="epsilon")


@pytest.fixture
def binary_target(binary_dfa):
    return WordTarget(binary_dfa)


@pytest.fixture
def ab_shuffle(astar_dfa, bstar_dfa):
    """a* shuffled with b*"""
    return ShuffleLanguage(astar_dfa, bstar_dfa)


@pytest.fixture
def loader():
    return BoltzmannLoader()


@pytest.fixture
def spec_file(temp_dir):
    """Write a specification file and return its path"""
    def write(text, name="spec.bz"):
        path = temp_dir / name
        path.write_text(text, encoding="utf-8")
        return path
    return write

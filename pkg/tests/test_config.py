"""
Tests for config.py module
"""

import pytest
from pydantic import ValidationError

from boltzmann_py.config import SEED_ENV, Mode, OutputFormat, RunConfig, resolve_seed


class TestResolveSeed:
    """Tests for resolve_seed function"""

    def test_explicit(self):
        assert resolve_seed(42, {SEED_ENV: "7"}) == 42

    def test_environment(self):
        assert resolve_seed(None, {SEED_ENV: "7"}) == 7
        assert resolve_seed(None, {SEED_ENV: "0x10"}) == 16

    def test_entropy(self):
        seed = resolve_seed(None, {})
        assert 0 <= seed < 2 ** 64

    @pytest.mark.parametrize("value", ["abc", "-3"])
    def test_invalid_environment(self, value):
        with pytest.raises(ValueError, match=SEED_ENV):
            resolve_seed(None, {SEED_ENV: value})


class TestRunConfig:
    """Tests for RunConfig class"""

    def test_defaults(self):
        config = RunConfig(command="sample", inputs=["set.bz"], x=0.5)
        assert config.mode == Mode.EXPONENTIAL.value
        assert config.format == OutputFormat.JSON.value
        assert config.count == 1
        assert config.strategy == "mixture"

    def test_sampling_needs_positive_x(self):
        with pytest.raises(ValidationError, match="x > 0"):
            RunConfig(command="sample", inputs=["set.bz"], x=0.0)

    def test_oracle_needs_x(self):
        with pytest.raises(ValidationError, match="--x"):
            RunConfig(command="oracle", inputs=["set.bz"])

    def test_oracle_accepts_zero(self):
        assert RunConfig(command="oracle", inputs=["set.bz"], x=0.0).x == 0.0

    def test_tune_needs_size(self):
        with pytest.raises(ValidationError, match="--size"):
            RunConfig(command="tune", inputs=["set.bz"])

    def test_unknown_strategy(self):
        with pytest.raises(ValidationError, match="strategy"):
            RunConfig(command="sample", inputs=["set.bz"], x=0.5, strategy="rejection")

    @pytest.mark.parametrize("field,value", [("x", -0.1), ("count", 0), ("seed", -1), ("workers", 0)])
    def test_ranges(self, field, value):
        options = {"command": "check", "inputs": ["set.bz"], "x": 0.5}
        options[field] = value
        with pytest.raises(ValidationError):
            RunConfig(**options)

    def test_extra_field(self):
        with pytest.raises(ValidationError):
            RunConfig(command="sample", x=0.5, colour="blue")

    def test_hash_ignores_output(self, temp_dir):
        base = RunConfig(command="sample", inputs=["set.bz"], x=0.5, seed=3)
        redirected = RunConfig(command="sample", inputs=["set.bz"], x=0.5, seed=3, output=str(temp_dir / "out"))
        assert base.hash == redirected.hash
        assert len(base.hash) == 16

    def test_hash_tracks_seed(self):
        first = RunConfig(command="sample", inputs=["set.bz"], x=0.5, seed=3)
        second = RunConfig(command="sample", inputs=["set.bz"], x=0.5, seed=4)
        assert first.hash != second.hash

    def test_canonical(self):
        data = RunConfig(command="check", inputs=["set.bz"], x=0.5, mode="ord").canonical()
        assert data["mode"] == "ord"
        assert "output" not in data

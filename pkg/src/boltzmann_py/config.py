"""
Run configuration for the command-line tool.

RunConfig validates the options of one invocation, resolves the seed and
hashes the canonical configuration so every output document can be traced
back to the exact run that produced it.
"""

import os
from enum import Enum
from typing import Any, Dict, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .ord_transform import STRATEGIES
from .utils import config_hash

SEED_ENV = "BZ_SEED"


class Mode(str, Enum):
    EXPONENTIAL = "exp"
    ORDINARY = "ord"


class OutputFormat(str, Enum):
    JSON = "json"
    TEXT = "text"


def resolve_seed(seed: Optional[int] = None, environ: Optional[Dict[str, str]] = None) -> int:
    """
    Seed used by a run: explicit value, then $BZ_SEED, then 64 bits of OS entropy.

    Raises:
        ValueError: $BZ_SEED is not a non-negative integer
    """
    if seed is not None:
        return seed
    environ = os.environ if environ is None else environ
    value = environ.get(SEED_ENV)
    if value:
        try:
            parsed = int(value, 0)
        except ValueError:
            raise ValueError(f"{SEED_ENV}={value!r} is not an integer") from None
        if parsed < 0:
            raise ValueError(f"{SEED_ENV} must be >= 0")
        return parsed
    return int(np.random.SeedSequence().generate_state(1, dtype=np.uint64)[0])


class RunConfig(BaseModel):
    """Options of one CLI invocation"""

    model_config = ConfigDict(extra="forbid", use_enum_values=True)

    command: str
    inputs: List[str] = Field(default_factory=list)
    class_name: Optional[str] = None
    x: Optional[float] = Field(default=None, ge=0.0)
    mode: Mode = Mode.EXPONENTIAL
    count: int = Field(default=1, ge=1)
    seed: int = Field(default=0, ge=0)
    strategy: str = "mixture"
    ceiling: Optional[int] = Field(default=None, ge=0)
    format: OutputFormat = OutputFormat.JSON
    output: Optional[str] = None
    trials: int = Field(default=0, ge=0)
    workers: int = Field(default=1, ge=1)
    target_size: Optional[float] = Field(default=None, ge=0.0)
    order: int = Field(default=16, ge=0)
    timings: bool = False

    @model_validator(mode="after")
    def _check(self) -> "RunConfig":
        if self.strategy not in STRATEGIES:
            raise ValueError(f"strategy must be one of {STRATEGIES}")
        if self.command in ("sample", "words sample") and not (self.x and self.x > 0.0):
            raise ValueError("sampling needs x > 0")
        if self.command in ("oracle", "check") and self.x is None:
            raise ValueError(f"'{self.command}' needs --x")
        if self.command == "tune" and self.target_size is None:
            raise ValueError("'tune' needs --size")
        return self

    def canonical(self) -> Dict[str, Any]:
        """Configuration as hashed: every field except the output path"""
        return self.model_dump(mode="json", exclude={"output"})

    @property
    def hash(self) -> str:
        return config_hash(self.canonical())

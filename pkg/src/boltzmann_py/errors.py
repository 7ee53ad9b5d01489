"""
Exception hierarchy for boltzmann-py.

Every error raised on purpose by the library derives from BoltzmannError,
so callers (and the CLI exit-code mapping) can catch by family.
"""

from typing import Optional


class BoltzmannError(Exception):
    """Base class for all library errors"""


# Specification errors

class SpecError(BoltzmannError):
    """Invalid specification or language description"""


class SpecSyntaxError(SpecError):
    """Malformed specification text"""

    def __init__(self, message: str, line: int = 0, column: int = 0):
        self.line = line
        self.column = column
        if line:
            message = f"line {line}, column {column}: {message}"
        super().__init__(message)


class UnknownNameError(SpecError):
    """Reference to a class that is never defined"""

    def __init__(self, name: str, line: int = 0, column: int = 0):
        self.name = name
        self.line = line
        self.column = column
        where = f" (line {line}, column {column})" if line else ""
        super().__init__(f"unknown class name '{name}'{where}")


class IllFoundedError(SpecError):
    """Specification with infinitely many objects of some size, or no objects at all"""

    def __init__(self, class_name: str, reason: str):
        self.class_name = class_name
        self.reason = reason
        super().__init__(f"class '{class_name}' is ill-founded: {reason}")


class DfaError(SpecError):
    """Malformed automaton document"""


# Oracle errors

class OracleError(BoltzmannError):
    """Generating function evaluation failed"""


class EgfDivergentError(OracleError):
    """x lies at or beyond the singularity of the exponential generating function"""


class DivergentOGFError(OracleError):
    """The ordinary generating function does not converge at x"""


class InconclusiveGrowthError(OracleError):
    """Coefficient growth could not be decided from the inspected window"""


class ToleranceNotReachedError(OracleError):
    """Numerical integration could not meet the requested tolerance"""


class SingularSystemError(OracleError):
    """Linear system for a rational generating function is singular"""


# Sampler errors

class SamplerError(BoltzmannError):
    """Sampler construction or drawing failed"""


class SizeCeilingExceededError(SamplerError):
    """No object below the configured size ceiling within the allowed attempts"""


class TailTooHeavyError(SamplerError):
    """Size-law table cannot reach the required cumulative mass"""


class InconsistentOracleError(SamplerError):
    """Oracle values contradict each other (e.g. drawn parameter out of range)"""


class EmptyLanguageError(SamplerError):
    """The generating function vanishes at x, nothing can be drawn"""


class LawDomainError(SamplerError, ValueError):
    """Parameter outside the open domain of a discrete law"""

    def __init__(self, law: str, value: float, domain: Optional[str] = None):
        self.law = law
        self.value = value
        detail = f" (expected {domain})" if domain else ""
        super().__init__(f"{law}: parameter {value!r} out of domain{detail}")


# Statistics errors

class StatsError(BoltzmannError):
    """Statistical verification failed to run"""


class TooLargeError(StatsError):
    """Exhaustive enumeration requested beyond the size guard"""


class DegenerateLawError(StatsError):
    """Goodness-of-fit test with fewer than two buckets"""


class UnachievableError(BoltzmannError):
    """Requested expected size is not reachable below the convergence boundary"""

"""
Exception hierarchy for PCAdv toolkit
"""
from typing import Iterable, Optional, Tuple


class PCAdvError(Exception):
    """Base error for the toolkit"""
    pass


class ValidationError(PCAdvError, ValueError):
    """Invalid input data (cloud shape, finiteness, point count)"""
    pass


class InvalidArgumentError(ValidationError):
    """Invalid scalar argument (k, eps, label, rate)"""
    pass


class ConfigurationError(PCAdvError):
    """Inconsistent attack or experiment configuration"""
    pass


class UnsupportedDefenseError(ConfigurationError):
    """Defense name is reserved but not implemented"""
    pass


class NumericFailureError(PCAdvError, ArithmeticError):
    """Non-finite value met during a forward or backward pass"""

    def __init__(self, layer: str, restart: Optional[int] = None, iteration: Optional[int] = None):
        self.layer = layer
        self.restart = restart
        self.iteration = iteration
        super().__init__(self._describe())

    def annotate(self, restart: int, iteration: int) -> "NumericFailureError":
        """Copy of the error carrying attack loop coordinates"""
        return NumericFailureError(self.layer, restart=restart, iteration=iteration)

    def _describe(self) -> str:
        message = f"non-finite value in layer '{self.layer}'"
        if self.restart is not None:
            message += f" (restart={self.restart}, iteration={self.iteration})"
        return message


class FormatError(PCAdvError, ValueError):
    """Malformed binary file"""

    def __init__(self, message: str, offset: int, sample_index: Optional[int] = None):
        self.offset = offset
        self.sample_index = sample_index
        location = f"offset {offset}"
        if sample_index is not None:
            location = f"sample {sample_index}, {location}"
        super().__init__(f"{message} ({location})")


class CoverageError(PCAdvError):
    """Result records do not cover the requested cells"""

    def __init__(self, missing: Iterable[Tuple[str, ...]]):
        self.missing = sorted(missing)
        preview = ", ".join("/".join(str(p) for p in cell) for cell in self.missing[:10])
        more = f" (+{len(self.missing) - 10} more)" if len(self.missing) > 10 else ""
        super().__init__(f"Missing result cells: {preview}{more}")

__all__ = [
    "ArtifactError",
    "ConfigurationError",
    "DegenerateInputError",
    "FitDivergedError",
    "FormatError",
    "HashMismatchError",
    "NonFiniteError",
    "ShapeMismatchError",
    "UnrecoverableError",
    "WeightspaceError",
]

from pathlib import Path


class WeightspaceError(Exception):
    """Base class of every error the pipeline reports as a machine-readable record."""


class UnrecoverableError(WeightspaceError):
    pass


class ConfigurationError(WeightspaceError):
    pass


class ShapeMismatchError(WeightspaceError, ValueError):
    def __init__(self, op: str, *shapes: tuple[int, ...] | list[int]) -> None:
        self.op = op
        self.shapes = tuple(tuple(s) for s in shapes)
        rendered = " vs ".join(str(list(s)) for s in self.shapes)
        super().__init__(f"{op}: incompatible shapes {rendered}")


class NonFiniteError(WeightspaceError, ArithmeticError):
    pass


class FitDivergedError(NonFiniteError):
    def __init__(self, instance_id: str, detail: str = "") -> None:
        self.instance_id = instance_id
        super().__init__(f"Fit of instance '{instance_id}' diverged{': ' + detail if detail else ''}")


class DegenerateInputError(WeightspaceError, ValueError):
    pass


class ArtifactError(WeightspaceError):
    def __init__(self, path: Path | str, producer: str) -> None:
        self.path = Path(path)
        self.producer = producer
        super().__init__(f"Missing artifact '{self.path}'; run `weightspace {producer}` first")


class HashMismatchError(WeightspaceError):
    def __init__(self, path: Path | str, expected: str, actual: str) -> None:
        self.path = Path(path)
        self.expected = expected
        self.actual = actual
        super().__init__(f"Content hash mismatch for '{self.path}': expected {expected}, got {actual}")


class FormatError(WeightspaceError):
    def __init__(self, path: Path | str, offset: int, reason: str) -> None:
        self.path = Path(path)
        self.offset = offset
        super().__init__(f"{self.path}: {reason} (at byte {offset})")

__all__ = ["LearningRate", "Seed", "UnitInterval", "UnitIntervalList"]

from typing import Annotated

from pydantic import BeforeValidator, Field


def _split_floats(value: object) -> object:
    if isinstance(value, str):
        return [float(v) for v in value.split(",") if v.strip()]
    return value


LearningRate = Annotated[float, Field(gt=0.0, le=10.0)]
"""A strictly positive optimizer step size."""

UnitInterval = Annotated[float, Field(ge=0.0, le=1.0)]
"""A float in the closed interval [0, 1]."""

Seed = Annotated[int, Field(ge=0, lt=2**63)]
"""A non-negative 64-bit seed."""

UnitIntervalList = Annotated[list[UnitInterval], BeforeValidator(_split_floats)]
"""Floats in [0, 1], also accepted as a comma separated string such as "0,0.5,1"."""

"""Run-wide floating-point precision.

The mode is read once from ``RETAINKV_PRECISION`` (``single`` or ``double``, default
``double``) and stays fixed for the run. Tests switch it with :func:`use_precision`.
"""

import os
from collections.abc import Iterator
from contextlib import contextmanager
from enum import Enum

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field

from retainkv.exceptions import ConfigError

PRECISION_ENV = "RETAINKV_PRECISION"


class Precision(str, Enum):
    SINGLE = "single"
    DOUBLE = "double"


class Tolerances(BaseModel):
    """Documented comparison tolerances for one precision mode."""

    model_config = ConfigDict(frozen=True)

    softmax_row_sum: float = Field(..., description="Max deviation of a softmax row sum from 1.")
    equivalence_rel: float = Field(..., description="Relative tolerance for chunked-vs-full equivalence.")
    equivalence_abs: float = Field(..., description="Absolute tolerance for chunked-vs-full equivalence.")


_TOLERANCES = {
    Precision.SINGLE: Tolerances(softmax_row_sum=1e-6, equivalence_rel=1e-4, equivalence_abs=1e-5),
    Precision.DOUBLE: Tolerances(softmax_row_sum=1e-12, equivalence_rel=1e-8, equivalence_abs=1e-8),
}

_active: Precision | None = None


def _parse(mode: "Precision | str") -> Precision:
    try:
        return Precision(str(getattr(mode, "value", mode)).strip().lower())
    except ValueError as e:
        raise ConfigError(f"unknown precision {mode!r}; expected 'single' or 'double'") from e


def active_precision() -> Precision:
    global _active
    if _active is None:
        _active = _parse(os.environ.get(PRECISION_ENV, Precision.DOUBLE.value))
        logger.debug(f"Precision mode: {_active.value}")
    return _active


def set_precision(mode: Precision | str) -> Precision:
    """Set the run-wide precision and return the previous mode."""
    global _active
    previous = active_precision()
    _active = _parse(mode)
    return previous


@contextmanager
def use_precision(mode: Precision | str) -> Iterator[Precision]:
    previous = set_precision(mode)
    try:
        yield active_precision()
    finally:
        set_precision(previous)


def dtype() -> type[np.floating]:
    return np.float32 if active_precision() is Precision.SINGLE else np.float64


def tolerances() -> Tolerances:
    return _TOLERANCES[active_precision()]

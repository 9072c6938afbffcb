"""Shared scenario types, unit conversions and validation."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass


class CoverageError(ValueError):
    """Base class for every error raised by this package."""


class BeamBudgetExceeded(CoverageError):
    pass


class NonPositiveParameter(CoverageError):
    pass


class SchemeShapeMismatch(CoverageError):
    pass


class DimensionError(CoverageError):
    pass


class DegenerateBreakpoint(CoverageError):
    pass


class NumericalInstability(ArithmeticError):
    pass


class ToleranceNotMet(ArithmeticError):
    pass


class Scheme(enum.Enum):
    ORP_SA = "orp-sa"
    ORP_AS = "orp-as"
    ORP_MPG = "orp-mpg"
    ORP_AS_MPG = "orp-as-mpg"
    STC = "stc"

    @classmethod
    def parse(cls, name: str) -> "Scheme":
        key = name.strip().lower().replace("_", "-").replace("&", "-")
        for scheme in cls:
            if scheme.value == key:
                return scheme
        raise ValueError(f"unknown scheme {name!r}")

    @property
    def is_orp(self) -> bool:
        return self is not Scheme.STC


@dataclass(frozen=True)
class SystemConfig:
    """One downlink scenario. ``rho`` and ``threshold`` are linear scale."""

    n_tx: int
    n_rx: int = 1
    n_beams: int = 1
    n_slots: int = 1
    rho: float = 1.0
    threshold: float = 1.0

    def replace(self, **changes) -> "SystemConfig":
        fields = dict(
            n_tx=self.n_tx,
            n_rx=self.n_rx,
            n_beams=self.n_beams,
            n_slots=self.n_slots,
            rho=self.rho,
            threshold=self.threshold,
        )
        fields.update(changes)
        return SystemConfig(**fields)

    @property
    def n_columns(self) -> int:
        return self.n_beams * self.n_slots


def db_to_linear(x_db: float) -> float:
    if not math.isfinite(x_db):
        raise ValueError(f"dB value must be finite, got {x_db}")
    return 10.0 ** (x_db / 10.0)


def linear_to_db(x: float) -> float:
    if not x > 0:
        raise NonPositiveParameter(f"linear value must be positive, got {x}")
    return 10.0 * math.log10(x)


def validate(config: SystemConfig, scheme: Scheme) -> None:
    """Raise if ``config`` is not a legal scenario for ``scheme``."""
    for name in ("n_tx", "n_rx", "n_beams", "n_slots"):
        value = getattr(config, name)
        if int(value) != value or value < 1:
            raise NonPositiveParameter(f"{name} must be a positive integer, got {value}")
    for name in ("rho", "threshold"):
        value = getattr(config, name)
        if not (math.isfinite(value) and value > 0):
            raise NonPositiveParameter(f"{name} must be positive and finite, got {value}")

    if scheme in (Scheme.ORP_SA, Scheme.ORP_MPG, Scheme.STC) and config.n_rx != 1:
        raise SchemeShapeMismatch(f"{scheme.value} requires n_rx = 1, got {config.n_rx}")
    if scheme in (Scheme.ORP_SA, Scheme.ORP_AS) and config.n_slots != 1:
        raise SchemeShapeMismatch(f"{scheme.value} requires n_slots = 1, got {config.n_slots}")

    # STC has no beams, so only the ORP variants consume the beam budget.
    if scheme.is_orp and config.n_columns > config.n_tx:
        raise BeamBudgetExceeded(
            f"n_beams * n_slots = {config.n_columns} exceeds n_tx = {config.n_tx}"
        )

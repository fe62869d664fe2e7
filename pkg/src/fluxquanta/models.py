# pylint: disable=missing-module-docstring,missing-class-docstring
# pylint: disable=missing-function-docstring
# pylint: disable=no-member
# pylint: disable=too-few-public-methods
import enum
import math
import re

from dataclasses import dataclass

from typing import Optional, Union

import numpy as np


class ValidationError(ValueError):
    pass


class NonIntegralGrid(ValidationError):
    pass


class DegenerateGrid(ValidationError):
    pass


class ShapeMismatch(ValidationError):
    pass


class CFLViolation(ValidationError):
    pass


class NonPositiveQuota(ValidationError):
    pass


class QuotaTooSmall(ValidationError):
    pass


class IndexOutOfRange(ValidationError):
    pass


class FrameMisalignment(ValidationError):
    pass


class EmptySearchRange(ValidationError):
    pass


class UnsupportedIC(ValidationError):
    pass


class ZeroReference(ValidationError):
    pass


class ConfigError(ValidationError):

    def __init__(self, key, message):
        super().__init__(f"{key}: {message}")
        self.key = key


class FormatError(ValidationError):

    def __init__(self, lineno, message):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


class NumericError(ArithmeticError):
    pass


class NonFiniteState(NumericError):

    def __init__(self, step, message="state became non-finite"):
        super().__init__(f"step {step}: {message}")
        self.step = step


class BaseModel:

    def __post_init__(self):
        """Run validation methods if declared.
        The validation method can be a simple check
        that raises ValidationError or a transformation to
        the field value.
        The validation is performed by calling a function named:
            `validate_<field_name>(self, value) -> field.type`
        """
        for name, _ in self.__dataclass_fields__.items():
            if (method := getattr(self, f"validate_{name}", None)):
                object.__setattr__(self, name, method(getattr(self, name)))


def _positive(name, value):
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise ValidationError(f"{name} must be a number, got {value!r}")
    if not (math.isfinite(value) and value > 0):
        raise ValidationError(f"{name} must be positive and finite, got {value!r}")
    return value


def _finite(name, value):
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise ValidationError(f"{name} must be a number, got {value!r}")
    if not math.isfinite(value):
        raise ValidationError(f"{name} must be finite, got {value!r}")
    return value


class BoundaryKind(str, enum.Enum):
    DIRICHLET = "dirichlet"
    INSULATED = "insulated"
    PERIODIC = "periodic"


BOUNDARY_TOKEN = re.compile(
    r"^(?P<kind>[a-z]+)(?:\((?P<low>[^,()]+),(?P<high>[^,()]+)\))?$"
)


@dataclass(frozen=True)
class Boundary(BaseModel):
    """Boundary treatment of one axis.

    ``low`` and ``high`` are the wall values at the start and the end of the
    axis; they only mean something for Dirichlet. A periodic axis is periodic
    at both ends by construction.
    """
    kind: BoundaryKind = BoundaryKind.DIRICHLET
    low: float = 0.0
    high: float = 0.0

    def __post_init__(self):
        super().__post_init__()
        if self.kind is not BoundaryKind.DIRICHLET and (self.low or self.high):
            raise ValidationError(
                f"{self.kind.value} boundary does not take wall values"
            )

    def validate_kind(self, value):
        try:
            return BoundaryKind(value)
        except ValueError:
            raise ValidationError(f"unknown boundary kind {value!r}")

    def validate_low(self, value):
        return _finite("boundary.low", value)

    def validate_high(self, value):
        return _finite("boundary.high", value)

    @property
    def is_dirichlet(self):
        return self.kind is BoundaryKind.DIRICHLET

    @property
    def is_periodic(self):
        return self.kind is BoundaryKind.PERIODIC

    @property
    def is_insulated(self):
        return self.kind is BoundaryKind.INSULATED

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if "value" in d:
            value = d.pop("value")
            d.setdefault("low", value)
            d.setdefault("high", value)
        return cls(**d)

    def as_token(self):
        if self.is_dirichlet:
            return f"{self.kind.value}({self.low!r},{self.high!r})"
        return self.kind.value

    @classmethod
    def from_token(cls, token):
        match = BOUNDARY_TOKEN.match(token.strip())
        if match is None:
            raise ValidationError(f"malformed boundary token {token!r}")
        kind = match.group("kind")
        if match.group("low") is None:
            return cls(kind)
        return cls(kind, float(match.group("low")), float(match.group("high")))


@dataclass(frozen=True)
class QuotaParam(BaseModel):
    """The size of one flux packet: every spike carries exactly this much flux."""
    quota: float

    def __post_init__(self):
        value = self.quota
        try:
            value = float(value)
        except (TypeError, ValueError):
            raise NonPositiveQuota(f"quota must be a number, got {value!r}")
        if not (math.isfinite(value) and value > 0):
            raise NonPositiveQuota(f"quota must be positive and finite, got {value!r}")
        object.__setattr__(self, "quota", value)

    def __float__(self):
        return self.quota


class ResetRule(str, enum.Enum):
    """What a cell loses when it emits spikes.

    ``conservative`` deducts exactly the flux it sent; ``soft`` deducts a
    fixed ``v_th`` per spike; ``hard`` clamps every emitting cell to
    ``v_reset``. Only ``conservative`` keeps the mass ledger closed.
    """
    CONSERVATIVE = "conservative"
    SOFT = "soft"
    HARD = "hard"


@dataclass
class NeuronParams(BaseModel):
    """Per-cell dynamics besides flux exchange.

    The default is pure conservative transport: no relaxation towards
    ``v_rest``, unit synaptic gain and no source.
    """
    tau_m: Optional[float] = None
    v_rest: float = 0.0
    r_m: float = 1.0
    source: Union[None, float, np.ndarray] = None
    reset: ResetRule = ResetRule.CONSERVATIVE
    v_th: Optional[float] = None
    v_reset: Optional[float] = None

    def __post_init__(self):
        super().__post_init__()
        if self.reset is ResetRule.SOFT and self.v_th is None:
            raise ValidationError("soft reset needs v_th")
        if self.v_reset is None:
            self.v_reset = self.v_rest

    def validate_tau_m(self, value):
        if value is None:
            return None
        return _positive("tau_m", value)

    def validate_v_rest(self, value):
        return _finite("v_rest", value)

    def validate_r_m(self, value):
        return _positive("r_m", value)

    def validate_source(self, value):
        if value is None:
            return None
        value = np.asarray(value, dtype=np.float64)
        if not np.isfinite(value).all():
            raise ValidationError("source must be finite")
        if value.ndim == 0 and value == 0.0:
            return None
        return value

    def validate_reset(self, value):
        try:
            return ResetRule(value)
        except ValueError:
            raise ValidationError(f"unknown reset rule {value!r}")

    def validate_v_th(self, value):
        if value is None:
            return None
        return _positive("v_th", value)

    def validate_v_reset(self, value):
        if value is None:
            return None
        return _finite("v_reset", value)

    @property
    def leak_enabled(self):
        return self.tau_m is not None

    @classmethod
    def from_dict(cls, d):
        return cls(**d)

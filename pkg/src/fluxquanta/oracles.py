"""Reference solutions: closed forms and an independent fine-grid solver.

The finite-difference reference shares no code with the flux, projector or
processor modules, so it can catch their bugs instead of repeating them.
"""
import logging
import math

from dataclasses import dataclass
from typing import Union

import numpy as np

from .fields import StateField
from .models import (
    BaseModel, CFLViolation, UnsupportedIC, ValidationError, _finite, _positive,
)
from .trajectories import Frame, TeacherTrajectory


logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Sine(BaseModel):
    """``amplitude * sin(mode * pi * x / L)``."""
    mode: int = 1
    amplitude: float = 1.0

    def validate_mode(self, value):
        if int(value) != value or value < 1:
            raise ValidationError(f"sine mode must be a positive integer, got {value!r}")
        return int(value)

    def validate_amplitude(self, value):
        return _finite("amplitude", value)

    def sample(self, grid):
        if grid.dims != 1:
            raise UnsupportedIC("Sine is a 1D initial condition")
        return self.amplitude * np.sin(self.mode * math.pi * grid.x_centers / grid.lx)


@dataclass(frozen=True)
class Gaussian(BaseModel):
    center: float = 0.5
    width: float = 0.05
    amplitude: float = 1.0

    def validate_center(self, value):
        return _finite("center", value)

    def validate_width(self, value):
        return _positive("width", value)

    def validate_amplitude(self, value):
        return _finite("amplitude", value)

    def sample(self, grid):
        if grid.dims != 1:
            raise UnsupportedIC("Gaussian is a 1D initial condition")
        if not 0.0 <= self.center <= grid.lx:
            raise UnsupportedIC(f"Gaussian center {self.center!r} outside the domain")
        x = grid.x_centers
        return self.amplitude * np.exp(-0.5 * ((x - self.center) / self.width) ** 2)


@dataclass(frozen=True)
class Step(BaseModel):
    """``low`` left of ``edge`` and ``high`` right of it."""
    edge: float = 0.5
    low: float = 0.0
    high: float = 1.0

    def validate_edge(self, value):
        return _finite("edge", value)

    def validate_low(self, value):
        return _finite("low", value)

    def validate_high(self, value):
        return _finite("high", value)

    def sample(self, grid):
        if grid.dims != 1:
            raise UnsupportedIC("Step is a 1D initial condition")
        if not 0.0 < self.edge < grid.lx:
            raise UnsupportedIC(f"step edge {self.edge!r} outside the domain")
        return np.where(grid.x_centers < self.edge, self.low, self.high)


@dataclass(frozen=True)
class Product2D(BaseModel):
    """``amplitude * sin(mx*pi*x/Lx) * sin(my*pi*y/Ly)``."""
    mx: int = 1
    my: int = 1
    amplitude: float = 1.0

    def validate_mx(self, value):
        return Sine.validate_mode(self, value)

    def validate_my(self, value):
        return Sine.validate_mode(self, value)

    def validate_amplitude(self, value):
        return _finite("amplitude", value)

    def sample(self, grid):
        if grid.dims != 2:
            raise UnsupportedIC("Product2D is a 2D initial condition")
        sx = np.sin(self.mx * math.pi * grid.x_centers / grid.lx)
        sy = np.sin(self.my * math.pi * grid.y_centers / grid.ly)
        return self.amplitude * np.outer(sy, sx)


@dataclass(frozen=True)
class Uniform(BaseModel):
    value: float = 1.0

    def validate_value(self, value):
        return _finite("value", value)

    def sample(self, grid):
        return np.full(grid.shape, self.value)


InitialCondition = Union[Sine, Gaussian, Step, Product2D, Uniform]

INITIAL_CONDITIONS = {
    "sine": Sine,
    "gaussian": Gaussian,
    "step": Step,
    "product2d": Product2D,
    "uniform": Uniform,
}


def initial_condition_from_dict(d):
    d = dict(d)
    kind = d.pop("kind", None)
    try:
        cls = INITIAL_CONDITIONS[kind]
    except KeyError:
        raise ValidationError(f"unknown initial condition {kind!r}")
    return cls(**d)


def sample(ic, grid):
    return StateField(ic.sample(grid))


def _require_dirichlet_zero(grid):
    for boundary in grid.boundary:
        if not (boundary.is_dirichlet and boundary.low == 0 and boundary.high == 0):
            raise UnsupportedIC("closed-form solutions need Dirichlet-0 walls")


def heat1d_analytic(ic, kappa, grid, t):
    """Closed-form decay of a sine mode under Dirichlet-0 walls."""
    if not isinstance(ic, Sine):
        raise UnsupportedIC(f"no closed form for {type(ic).__name__}")
    _require_dirichlet_zero(grid)
    k = ic.mode * math.pi / grid.lx
    return StateField(ic.sample(grid) * math.exp(-kappa * k * k * t))


def heat2d_analytic(ic, kappa, grid, t):
    """Closed-form decay of a product sine mode under Dirichlet-0 walls."""
    if not isinstance(ic, Product2D):
        raise UnsupportedIC(f"no closed form for {type(ic).__name__}")
    _require_dirichlet_zero(grid)
    rate = kappa * math.pi ** 2 * (
        (ic.mx / grid.lx) ** 2 + (ic.my / grid.ly) ** 2
    )
    return StateField(ic.sample(grid) * math.exp(-rate * t))


def analytic(ic, kappa, grid, t):
    if grid.dims == 1:
        return heat1d_analytic(ic, kappa, grid, t)
    return heat2d_analytic(ic, kappa, grid, t)


def analytic_trajectory(ic, kappa, grid, steps):
    """Closed-form frames at the given step indices of ``grid.dt``."""
    frames = [
        Frame(step * grid.dt, analytic(ic, kappa, grid, step * grid.dt))
        for step in steps
    ]
    return TeacherTrajectory(grid, frames, "analytic")


def _pad(u, boundary, axis):
    """Add one ghost layer on both ends of ``axis``."""
    u = np.moveaxis(u, axis, -1)
    if boundary.is_periodic:
        low, high = u[..., -1:], u[..., :1]
    elif boundary.is_insulated:
        low, high = u[..., :1], u[..., -1:]
    else:
        # Mirror about the wall value.
        low = 2.0 * boundary.low - u[..., :1]
        high = 2.0 * boundary.high - u[..., -1:]
    return np.moveaxis(np.concatenate([low, u, high], axis=-1), -1, axis)


def _laplacian(u, grid):
    if grid.dims == 1:
        p = _pad(u, grid.boundary[0], 0)
        return (p[:-2] - 2.0 * p[1:-1] + p[2:]) / grid.dx ** 2
    px = _pad(u, grid.boundary[0], 1)
    py = _pad(u, grid.boundary[1], 0)
    return (
        (px[:, :-2] - 2.0 * px[:, 1:-1] + px[:, 2:]) / grid.dx ** 2
        + (py[:-2, :] - 2.0 * py[1:-1, :] + py[2:, :]) / grid.dy ** 2
    )


def restrict(fine, factor, dims):
    """Average ``factor`` (per axis) fine cells into each coarse cell."""
    if dims == 1:
        return fine.reshape(-1, factor).mean(axis=1)
    ny, nx = fine.shape
    return fine.reshape(ny // factor, factor, nx // factor, factor).mean(axis=(1, 3))


def fdm_reference(ic, kappa, grid, t_end, refinement=4, stride=1, steps=None):
    """Unquantized explicit finite differences on a ``refinement``-times finer
    grid, block-averaged back onto ``grid``.

    The fine step is ``grid.dt / refinement**2``. Frames are taken at the
    coarse step indices ``steps`` if given, else every ``stride`` coarse
    steps and at ``t_end``.
    """
    if int(refinement) != refinement or refinement < 2:
        raise ValidationError(f"refinement must be an integer >= 2, got {refinement!r}")
    refinement = int(refinement)
    kappa = _positive("kappa", kappa)
    fine = grid.refined(refinement)
    if grid.dims == 1:
        bound = fine.dx ** 2 / (2.0 * kappa)
    else:
        bound = 1.0 / (2.0 * kappa * (1.0 / fine.dx ** 2 + 1.0 / fine.dy ** 2))
    if fine.dt > bound * (1.0 + 1e-12):
        raise CFLViolation(f"fine dt={fine.dt!r} exceeds {bound!r}")

    n_coarse = round(t_end / grid.dt)
    if abs(n_coarse * grid.dt - t_end) > 1e-9:
        raise ValidationError(f"t_end={t_end!r} is not a multiple of dt={grid.dt!r}")
    if steps is None:
        if int(stride) != stride or stride < 1:
            raise ValidationError(f"stride must be an integer >= 1, got {stride!r}")
        steps = list(range(0, n_coarse + 1, int(stride))) + [n_coarse]
    wanted = set(steps)
    inner = refinement ** 2
    logger.debug(
        "fdm reference: %d coarse steps x %d fine steps on %s cells",
        n_coarse, inner, fine.shape,
    )

    u = ic.sample(fine)
    frames = []
    if 0 in wanted:
        frames.append(Frame(0.0, StateField(restrict(u, refinement, grid.dims))))
    coef = kappa * fine.dt
    for n in range(1, n_coarse + 1):
        for _ in range(inner):
            u = u + coef * _laplacian(u, fine)
        if n in wanted:
            frames.append(Frame(n * grid.dt, StateField(restrict(u, refinement, grid.dims))))
    return TeacherTrajectory(grid, frames, "fdm")

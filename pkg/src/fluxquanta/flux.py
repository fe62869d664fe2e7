"""Physical flux calculator.

Maps cell averages to continuous fluxes through every face with a centred
finite difference and a scalar constitutive law, ``F = -K(u) du/dn``.
"""
from dataclasses import dataclass
from typing import Union

import numpy as np

from .fields import FaceField
from .models import BaseModel, ValidationError, _positive, _finite


@dataclass(frozen=True)
class Constant(BaseModel):
    kappa: float

    def validate_kappa(self, value):
        return _positive("kappa", value)

    def __call__(self, u):
        return self.kappa

    def max_diffusivity(self, u_max):
        return self.kappa


@dataclass(frozen=True)
class PowerLaw(BaseModel):
    """``K(u) = k0 * |u|**exponent``; ``exponent = 0`` is ``Constant(k0)``."""
    k0: float
    exponent: float = 0.0

    def validate_k0(self, value):
        return _positive("k0", value)

    def validate_exponent(self, value):
        return _finite("exponent", value)

    def __call__(self, u):
        return self.k0 * np.abs(u) ** self.exponent

    def max_diffusivity(self, u_max):
        if self.exponent == 0:
            return self.k0
        return self.k0 * abs(u_max) ** self.exponent


Constitutive = Union[Constant, PowerLaw]


def constitutive_from_dict(d):
    d = dict(d)
    law = d.pop("law", "constant")
    if law == "constant":
        return Constant(**d)
    if law == "power":
        return PowerLaw(**d)
    raise ValidationError(f"unknown constitutive law {law!r}")


def _axis_flux(u, step, law, boundary, axis):
    """Fluxes through all faces normal to ``axis`` (0 = x, last array axis)."""
    # Work with the face-normal axis last.
    u = np.moveaxis(u, axis, -1)
    shape = u.shape[:-1] + (u.shape[-1] + 1,)
    flux = np.empty(shape)

    left, right = u[..., :-1], u[..., 1:]
    flux[..., 1:-1] = -law(0.5 * (left + right)) * (right - left) / step

    if boundary.is_periodic:
        first, last = u[..., :1], u[..., -1:]
        wrapped = -law(0.5 * (last + first)) * (first - last) / step
        flux[..., :1] = wrapped
        flux[..., -1:] = wrapped
    elif boundary.is_insulated:
        flux[..., 0] = 0.0
        flux[..., -1] = 0.0
    else:
        half = 0.5 * step
        first, last = u[..., 0], u[..., -1]
        low, high = boundary.low, boundary.high
        flux[..., 0] = -law(0.5 * (low + first)) * (first - low) / half
        flux[..., -1] = -law(0.5 * (last + high)) * (high - last) / half

    return np.moveaxis(flux, -1, axis)


def flux_arrays(u, grid, law, boundary):
    """Face fluxes of a raw cell array; no shape or finiteness checks."""
    if grid.dims == 1:
        return FaceField(_axis_flux(u, grid.dx, law, boundary[0], 0))
    fx = _axis_flux(u, grid.dx, law, boundary[0], 1)
    fy = _axis_flux(u, grid.dy, law, boundary[1], 0)
    return FaceField(fx, fy)


def compute_physical_flux(state, grid, law, boundary=None):
    """Continuous fluxes of ``state`` through every face of ``grid``.

    ``boundary`` defaults to the grid's own boundary treatment; pass a tuple
    with one entry per axis to override it.
    """
    state.check(grid)
    boundary = grid.boundary if boundary is None else tuple(boundary)
    return flux_arrays(state.values, grid, law, boundary)

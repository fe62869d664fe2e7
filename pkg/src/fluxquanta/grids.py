"""Grid geometry: the neuron lattice is the finite-volume mesh.

Cells are centred, faces include both boundary faces, and 2D arrays are
stored row-major with x varying fastest (shape ``(ny, nx)``).
"""
import logging
import math

from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from .models import (
    BaseModel, Boundary, DegenerateGrid, NonIntegralGrid, ValidationError,
    _positive,
)


logger = logging.getLogger(__name__)

INTEGRAL_TOLERANCE = 1e-9

MIN_CELLS = 3


def _cell_count(length, step, axis):
    ratio = length / step
    count = round(ratio)
    if abs(ratio - count) > INTEGRAL_TOLERANCE * max(abs(ratio), 1.0):
        raise NonIntegralGrid(
            f"L{axis}/d{axis} = {length!r}/{step!r} = {ratio!r} is not integral"
        )
    if count < MIN_CELLS:
        raise DegenerateGrid(f"N{axis} = {count} < {MIN_CELLS}")
    return count


@dataclass(frozen=True)
class GridSpec(BaseModel):
    dims: int
    lx: float
    dx: float
    dt: float
    ly: Optional[float] = None
    dy: Optional[float] = None
    boundary: Tuple[Boundary, ...] = ()

    def __post_init__(self):
        super().__post_init__()
        if self.dims == 2:
            if self.ly is None or self.dy is None:
                raise ValidationError("2D grids need ly and dy")
            object.__setattr__(self, "ly", _positive("ly", self.ly))
            object.__setattr__(self, "dy", _positive("dy", self.dy))
        else:
            object.__setattr__(self, "ly", None)
            object.__setattr__(self, "dy", None)
        boundary = self.boundary or (Boundary(),) * self.dims
        if len(boundary) == 1 and self.dims == 2:
            boundary = boundary * 2
        if len(boundary) != self.dims:
            raise ValidationError(
                f"expected {self.dims} boundary axes, got {len(boundary)}"
            )
        object.__setattr__(self, "boundary", tuple(boundary))

    def validate_dims(self, value):
        if value not in (1, 2):
            raise ValidationError(f"dims must be 1 or 2, got {value!r}")
        return value

    def validate_lx(self, value):
        return _positive("lx", value)

    def validate_dx(self, value):
        return _positive("dx", value)

    def validate_dt(self, value):
        return _positive("dt", value)

    def validate_boundary(self, value):
        out = []
        for axis in value:
            if isinstance(axis, Boundary):
                out.append(axis)
            elif isinstance(axis, dict):
                out.append(Boundary.from_dict(axis))
            else:
                out.append(Boundary(axis))
        return tuple(out)


@dataclass(frozen=True)
class Grid:
    spec: GridSpec
    nx: int
    ny: int
    cell_volume: float
    x_centers: np.ndarray = field(repr=False, compare=False)
    y_centers: Optional[np.ndarray] = field(default=None, repr=False, compare=False)

    @property
    def dims(self):
        return self.spec.dims

    @property
    def dx(self):
        return self.spec.dx

    @property
    def dy(self):
        return self.spec.dy

    @property
    def dt(self):
        return self.spec.dt

    @property
    def lx(self):
        return self.spec.lx

    @property
    def ly(self):
        return self.spec.ly

    @property
    def boundary(self):
        return self.spec.boundary

    @property
    def shape(self):
        if self.dims == 1:
            return (self.nx,)
        return (self.ny, self.nx)

    @property
    def n_cells(self):
        return self.nx * self.ny

    @property
    def x_face_shape(self):
        if self.dims == 1:
            return (self.nx + 1,)
        return (self.ny, self.nx + 1)

    @property
    def y_face_shape(self):
        if self.dims == 1:
            return None
        return (self.ny + 1, self.nx)

    @property
    def n_x_faces(self):
        return math.prod(self.x_face_shape)

    @property
    def n_y_faces(self):
        if self.dims == 1:
            return 0
        return math.prod(self.y_face_shape)

    @property
    def x_face_area(self):
        return 1.0 if self.dims == 1 else self.dy

    @property
    def y_face_area(self):
        return self.dx

    def with_dt(self, dt):
        spec = GridSpec(
            self.spec.dims, self.spec.lx, self.spec.dx, dt,
            self.spec.ly, self.spec.dy, self.spec.boundary,
        )
        return make_grid(spec)

    def refined(self, factor):
        """The same domain with every cell split ``factor`` times per axis
        and the time step divided by ``factor**2``."""
        spec = self.spec
        return make_grid(GridSpec(
            spec.dims, spec.lx, spec.dx / factor, spec.dt / factor ** 2,
            spec.ly, None if spec.dy is None else spec.dy / factor,
            spec.boundary,
        ))


def make_grid(spec):
    """Build the grid described by ``spec``.

    Raises NonIntegralGrid when a length is not an integer number of cells
    and DegenerateGrid for fewer than three cells on an axis.
    """
    nx = _cell_count(spec.lx, spec.dx, "x")
    x_centers = (np.arange(nx) + 0.5) * spec.dx
    if spec.dims == 1:
        grid = Grid(spec, nx, 1, spec.dx, x_centers)
    else:
        ny = _cell_count(spec.ly, spec.dy, "y")
        y_centers = (np.arange(ny) + 0.5) * spec.dy
        grid = Grid(spec, nx, ny, spec.dx * spec.dy, x_centers, y_centers)
    logger.debug(
        "grid %s cells, %d x-faces, %d y-faces, dV=%g",
        "x".join(str(n) for n in reversed(grid.shape)),
        grid.n_x_faces, grid.n_y_faces, grid.cell_volume,
    )
    return grid


def cfl_max_dt(grid, kappa_max):
    """Largest stable explicit-diffusion time step for ``kappa_max``."""
    kappa_max = _positive("kappa_max", kappa_max)
    if grid.dims == 1:
        return grid.dx ** 2 / (2.0 * kappa_max)
    return 1.0 / (2.0 * kappa_max * (1.0 / grid.dx ** 2 + 1.0 / grid.dy ** 2))

# pylint: disable=missing-module-docstring,missing-class-docstring
# pylint: disable=missing-function-docstring
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .models import BaseModel, ShapeMismatch, ValidationError


def _as_array(name, value, dtype):
    try:
        return np.asarray(value, dtype=dtype)
    except (TypeError, ValueError):
        raise ValidationError(f"{name} must be numeric")


@dataclass
class StateField(BaseModel):
    """Cell averages of the transported quantity.

    One value per cell, shaped like ``grid.shape``; each value is both the
    cell average of ``u`` and the membrane potential of the neuron that owns
    the cell.
    """
    values: np.ndarray

    def validate_values(self, value):
        value = _as_array("StateField.values", value, np.float64)
        if value.ndim not in (1, 2):
            raise ValidationError("StateField.values must be 1D or 2D")
        if not np.isfinite(value).all():
            raise ValidationError("StateField.values must be finite")
        return value

    @classmethod
    def zeros(cls, grid):
        return cls(np.zeros(grid.shape))

    @classmethod
    def from_flat(cls, values, grid):
        values = np.asarray(values, dtype=np.float64)
        if values.size != grid.n_cells:
            raise ShapeMismatch(
                f"expected {grid.n_cells} cell values, got {values.size}"
            )
        return cls(values.reshape(grid.shape))

    def check(self, grid):
        if self.values.shape != grid.shape:
            raise ShapeMismatch(
                f"state shape {self.values.shape} does not match grid {grid.shape}"
            )
        return self

    @property
    def flat(self):
        return self.values.reshape(-1)

    def copy(self):
        return StateField(self.values.copy())

    def __eq__(self, other):
        if not isinstance(other, StateField):
            return NotImplemented
        return (
            self.values.shape == other.values.shape
            and np.array_equal(self.values, other.values)
        )


@dataclass
class FaceField(BaseModel):
    """Signed flux through every face; positive points along +x (+y).

    ``x`` has shape ``grid.x_face_shape`` and ``y`` ``grid.y_face_shape``
    (``None`` in 1D). Boundary faces are included.
    """
    x: np.ndarray
    y: Optional[np.ndarray] = None

    def validate_x(self, value):
        return _as_array("FaceField.x", value, np.float64)

    def validate_y(self, value):
        if value is None:
            return None
        return _as_array("FaceField.y", value, np.float64)

    def check(self, grid):
        _check_faces(self, grid)
        return self

    def arrays(self):
        if self.y is None:
            return (self.x,)
        return (self.x, self.y)

    def __neg__(self):
        return FaceField(-self.x, None if self.y is None else -self.y)


@dataclass
class SpikeField(BaseModel):
    """Signed integer spike counts, one per face.

    ``n > 0`` sends ``n`` quanta in the + direction, ``n < 0`` sends ``-n``
    quanta in the - direction.
    """
    x: np.ndarray
    y: Optional[np.ndarray] = None

    def validate_x(self, value):
        return _as_array("SpikeField.x", value, np.int64)

    def validate_y(self, value):
        if value is None:
            return None
        return _as_array("SpikeField.y", value, np.int64)

    def check(self, grid):
        _check_faces(self, grid)
        return self

    def arrays(self):
        if self.y is None:
            return (self.x,)
        return (self.x, self.y)

    @property
    def n_plus(self):
        return sum(int(a[a > 0].sum()) for a in self.arrays())

    @property
    def n_minus(self):
        return sum(int(-a[a < 0].sum()) for a in self.arrays())

    @property
    def n_faces(self):
        return sum(a.size for a in self.arrays())

    def __eq__(self, other):
        if not isinstance(other, SpikeField):
            return NotImplemented
        mine, theirs = self.arrays(), other.arrays()
        return len(mine) == len(theirs) and all(
            a.shape == b.shape and np.array_equal(a, b)
            for a, b in zip(mine, theirs)
        )


def _check_faces(faces, grid):
    if faces.x.shape != grid.x_face_shape:
        raise ShapeMismatch(
            f"x-faces shape {faces.x.shape} does not match grid {grid.x_face_shape}"
        )
    if grid.dims == 1:
        if faces.y is not None:
            raise ShapeMismatch("1D grids have no y-faces")
    elif faces.y is None or faces.y.shape != grid.y_face_shape:
        shape = None if faces.y is None else faces.y.shape
        raise ShapeMismatch(
            f"y-faces shape {shape} does not match grid {grid.y_face_shape}"
        )

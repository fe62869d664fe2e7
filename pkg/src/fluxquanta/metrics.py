"""Accuracy, conservation and cost metrics."""
import math

from dataclasses import dataclass, asdict

import numpy as np

from .ledger import total
from .models import (
    BaseModel, ShapeMismatch, ValidationError, ZeroReference, _positive,
)


#: Energy of one synaptic operation on a neuromorphic core [J].
JOULES_PER_SPIKE = 0.067e-12

#: Energy of one half-precision FLOP on a datacenter GPU [J].
JOULES_PER_FLOP = 0.4e-12

MASS_EPSILON = 1e-30


def _values(field):
    return getattr(field, "values", field)


def _pair(pred, ref):
    a, b = np.asarray(_values(pred)), np.asarray(_values(ref))
    if a.shape != b.shape:
        raise ShapeMismatch(f"shapes {a.shape} and {b.shape} differ")
    return a, b


def rmse(pred, ref):
    a, b = _pair(pred, ref)
    diff = a - b
    return math.sqrt(total(diff * diff) / diff.size)


def absolute_error(pred, ref):
    """Point-wise ``|pred - ref|``."""
    a, b = _pair(pred, ref)
    return np.abs(a - b)


def functional_error(pred_next, ref_next):
    """Relative L2 error of a predicted frame, ``||pred - ref|| / ||ref||``."""
    a, b = _pair(pred_next, ref_next)
    norm = math.sqrt(total(b * b))
    if norm == 0.0:
        raise ZeroReference("reference frame is identically zero")
    diff = a - b
    return math.sqrt(total(diff * diff)) / norm


def spacetime_rmse(pred, ref, tolerance=1e-9):
    """RMSE over every frame of ``ref`` and every cell, matching frames of
    ``pred`` by time."""
    squares = []
    count = 0
    for frame in ref.frames:
        a, b = _pair(pred.frame_at(frame.time, tolerance).state, frame.state)
        diff = a - b
        squares.append(total(diff * diff))
        count += diff.size
    if count == 0:
        return 0.0
    return math.sqrt(math.fsum(squares) / count)


def total_mass(state, grid):
    """Riemann sum ``dV * sum(u)``, correctly rounded in a fixed order."""
    return total(np.asarray(_values(state))) * grid.cell_volume


def mass_series(trajectory):
    return [total_mass(frame.state, trajectory.grid) for frame in trajectory.frames]


def mass_drift(trajectory):
    """Largest relative departure of the total mass from its initial value."""
    masses = mass_series(trajectory)
    m0 = masses[0]
    scale = max(abs(m0), MASS_EPSILON)
    return max(abs(m - m0) for m in masses) / scale


def total_variation(state, grid):
    """Sum of absolute neighbour differences along every axis, with the wall
    values of Dirichlet axes included as the outermost neighbours."""
    u = np.asarray(_values(state))
    axes = ((-1, grid.boundary[0]),)
    if grid.dims == 2:
        axes += ((0, grid.boundary[1]),)
    parts = []
    for axis, boundary in axes:
        v = np.moveaxis(u, axis, -1)
        if boundary.is_dirichlet:
            low = np.full(v.shape[:-1] + (1,), boundary.low)
            high = np.full(v.shape[:-1] + (1,), boundary.high)
            v = np.concatenate([low, v, high], axis=-1)
        elif boundary.is_periodic:
            v = np.concatenate([v, v[..., :1]], axis=-1)
        parts.append(total(np.abs(np.diff(v, axis=-1))))
    return math.fsum(parts)


def dense_flop_estimate(grid, n_steps, stages=4, network_params=0):
    """FLOPs of a dense solver covering the same run.

    Every stage touches every cell with one multiply-add per point of the
    ``2*dims + 1`` point Laplacian and one for the update. A surrogate
    network of ``network_params`` weights adds ``2 * network_params`` per
    cell and step.
    """
    stencil = 2 * (2 * grid.dims + 1) + 2
    per_step = grid.n_cells * (stages * stencil + 2 * network_params)
    return float(per_step * n_steps)


@dataclass(frozen=True)
class EnergyModel(BaseModel):
    joules_per_spike: float = JOULES_PER_SPIKE
    joules_per_flop: float = JOULES_PER_FLOP

    def validate_joules_per_spike(self, value):
        return _positive("joules_per_spike", value)

    def validate_joules_per_flop(self, value):
        return _positive("joules_per_flop", value)


@dataclass
class EnergyReport:
    total_spikes: float
    flop_estimate: float
    spike_energy_J: float
    flop_energy_J: float
    cost_ratio: float
    energy_ratio: float

    def as_dict(self):
        return asdict(self)


def energy_report(total_spikes, flop_estimate, model=None):
    """Spike energy against dense-FLOP energy.

    ``cost_ratio`` compares raw operation counts, ``energy_ratio`` the
    energies; both are NaN when there are no FLOPs to compare with.
    """
    model = model or EnergyModel()
    if total_spikes < 0 or flop_estimate < 0:
        raise ValidationError("spike and FLOP counts must be non-negative")
    spike_energy = total_spikes * model.joules_per_spike
    flop_energy = flop_estimate * model.joules_per_flop
    return EnergyReport(
        total_spikes=float(total_spikes),
        flop_estimate=float(flop_estimate),
        spike_energy_J=spike_energy,
        flop_energy_J=flop_energy,
        cost_ratio=total_spikes / flop_estimate if flop_estimate else math.nan,
        energy_ratio=spike_energy / flop_energy if flop_energy else math.nan,
    )

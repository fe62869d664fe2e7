"""Discrete flux processor.

Turns reconstructed face fluxes into a state update. Every face value is
computed once and applied with opposite signs to the two cells it separates,
so whatever one neuron emits its neighbour receives, and interior exchanges
cancel in the total mass.

The time-invariant operator advanced by :func:`step` is

    u' = u - dt * D(Q(F(u))) + dt * S

with ``F`` the physical flux, ``Q`` quantize-then-reconstruct and ``D`` the
divergence. RK4 quantizes each of its four stage fluxes independently.
"""
import enum
import logging

from dataclasses import dataclass, field, replace
from typing import List, Optional, Tuple

import numpy as np

from .fields import StateField
from .flux import Constant, Constitutive, flux_arrays
from .grids import Grid, cfl_max_dt
from .ledger import ConservationLedger, total
from .metrics import total_mass
from .models import (
    BaseModel, CFLViolation, IndexOutOfRange, NeuronParams, NonFiniteState,
    NumericError, QuotaParam, ResetRule, ValidationError,
)
from .projector import count_spikes, quantize, reconstruct, sparsity
from .trajectories import Trajectory


logger = logging.getLogger(__name__)

#: Runs up to this many steps record every step by default.
DENSE_RECORD_LIMIT = 1000

#: Frames recorded by default for longer runs, besides the initial one.
DEFAULT_FRAMES = 100

RK4_WEIGHTS = (1.0 / 6.0, 2.0 / 6.0, 2.0 / 6.0, 1.0 / 6.0)


class Integrator(str, enum.Enum):
    EULER = "euler"
    RK4 = "rk4"


@dataclass
class StepStats:
    spikes_this_step: float
    sparsity_this_step: float
    boundary_flux_net: float


@dataclass
class RunStats:
    n_steps: int
    total_spikes: float
    mean_sparsity: float
    ledger: ConservationLedger
    spike_history: List[float] = field(default_factory=list, repr=False)
    sparsity_history: List[float] = field(default_factory=list, repr=False)
    quota_history: List[Tuple[int, float]] = field(default_factory=list, repr=False)


@dataclass
class _Stage:
    rate: np.ndarray
    spikes: float
    sparsity: float
    walls: list
    leak: float
    emitted: Optional[list] = None


def _axis_divergence(scaled, active, axis):
    scaled = np.moveaxis(scaled, axis, -1)
    if active is None:
        out = scaled[..., 1:] - scaled[..., :-1]
    else:
        active = np.moveaxis(active, axis, -1)
        out = np.zeros(scaled.shape[:-1] + (scaled.shape[-1] - 1,))
        right = active[..., 1:]
        out[right] = out[right] + scaled[..., 1:][right]
        left = active[..., :-1]
        out[left] = out[left] - scaled[..., :-1][left]
    return np.moveaxis(out, -1, axis)


def divergence(f_disc, grid, spikes=None):
    """Net outflow per unit volume of every cell.

    Cell ``i`` gets ``(f[i+1/2] - f[i-1/2]) / dx``, plus the y term in 2D.
    When ``spikes`` is given, only faces with a non-zero count are visited;
    the result is bit-identical to the dense path.
    """
    f_disc.check(grid)
    if spikes is not None:
        spikes.check(grid)
    active_x = None if spikes is None else spikes.x != 0
    if grid.dims == 1:
        return _axis_divergence(f_disc.x / grid.dx, active_x, 0)
    active_y = None if spikes is None else spikes.y != 0
    return (
        _axis_divergence(f_disc.x / grid.dx, active_x, 1)
        + _axis_divergence(f_disc.y / grid.dy, active_y, 0)
    )


def _axis_emitted(counts, axis):
    counts = np.moveaxis(counts, axis, -1)
    out = np.maximum(counts[..., 1:], 0) + np.maximum(-counts[..., :-1], 0)
    return np.moveaxis(out, -1, axis).astype(np.float64)


def emitted_spikes(spikes, grid):
    """Spikes sent by each cell, one array per axis.

    A positive face count is sent by the cell on the low side of the face,
    a negative one by the cell on the high side. Wall ghosts send nothing.
    """
    spikes.check(grid)
    if grid.dims == 1:
        return [_axis_emitted(spikes.x, 0)]
    return [_axis_emitted(spikes.x, 1), _axis_emitted(spikes.y, 0)]


def _walls(faces, grid):
    """Flux through the two walls of each non-periodic axis, weighted by
    face area: ``[(low_faces, high_faces, area), ...]``."""
    walls = []
    arrays = faces.arrays()
    areas = (grid.x_face_area, grid.y_face_area)
    for arr, boundary, axis, area in zip(arrays, grid.boundary, (-1, 0), areas):
        if boundary.is_periodic:
            continue
        arr = np.moveaxis(arr, axis, -1)
        walls.append((arr[..., 0].copy(), arr[..., -1].copy(), area))
    return walls


def _wall_exchange(walls, r_m):
    inflow = []
    outflow = []
    for low, high, area in walls:
        inflow.append(np.maximum(low, 0.0) * area)
        inflow.append(np.maximum(-high, 0.0) * area)
        outflow.append(np.maximum(-low, 0.0) * area)
        outflow.append(np.maximum(high, 0.0) * area)
    inflow = r_m * total(np.array([total(a) for a in inflow]))
    outflow = r_m * total(np.array([total(a) for a in outflow]))
    return inflow, outflow


@dataclass
class Simulation(BaseModel):
    """Everything that defines the evolution operator except the state.

    ``quota=None`` runs the same finite-volume scheme without the spike
    projector, which is the unquantized reference.
    """
    grid: Grid
    law: Constitutive
    quota: Optional[QuotaParam] = None
    params: NeuronParams = field(default_factory=NeuronParams)
    integrator: Integrator = Integrator.RK4
    event_driven: bool = True

    def __post_init__(self):
        super().__post_init__()
        if isinstance(self.law, Constant):
            self.check_stability()

    def validate_quota(self, value):
        if value is None or isinstance(value, QuotaParam):
            return value
        return QuotaParam(value)

    def validate_integrator(self, value):
        try:
            return Integrator(value)
        except ValueError:
            raise ValidationError(f"unknown integrator {value!r}")

    def with_quota(self, quota):
        return replace(self, quota=quota)

    def _u_max(self, state):
        walls = [abs(v) for b in self.grid.boundary if b.is_dirichlet
                 for v in (b.low, b.high)]
        values = [float(np.abs(state.values).max())] if state is not None else []
        return max(values + walls + [0.0])

    def check_stability(self, state=None):
        """Raise CFLViolation unless ``dt`` is within the explicit bound.

        With a ``state`` this also warns when one quantum exceeds the largest
        flux the state can produce, in which case most faces stay silent.
        """
        u_max = self._u_max(state) if state is not None else 1.0
        kappa = self.law.max_diffusivity(u_max)
        if kappa <= 0:
            return
        bound = cfl_max_dt(self.grid, kappa)
        if self.grid.dt > bound * (1.0 + 1e-12):
            raise CFLViolation(
                f"dt={self.grid.dt!r} exceeds the stability bound {bound!r} "
                f"for kappa_max={kappa!r}"
            )
        if state is not None and self.quota is not None and u_max > 0:
            scale = kappa * u_max / self.grid.dx
            if self.quota.quota > scale:
                logger.warning(
                    "quota %g exceeds kappa*u_max/dx = %g; most faces will stay silent",
                    self.quota.quota, scale,
                )

    def _stage(self, u):
        grid = self.grid
        faces = flux_arrays(u, grid, self.law, grid.boundary)
        spikes = emitted = None
        if self.quota is not None:
            spikes = quantize(faces, self.quota)
            if self.params.reset is not ResetRule.CONSERVATIVE:
                emitted = emitted_spikes(spikes, grid)
            faces = reconstruct(spikes, self.quota)
            n_spikes = float(count_spikes(spikes, grid))
            silent = sparsity(spikes, grid)
        else:
            n_spikes, silent = 0.0, 0.0
        active = spikes if self.event_driven else None
        rate = -self.params.r_m * divergence(faces, grid, active)
        if self.params.source is not None:
            rate = rate + self.params.source
        leak = 0.0
        if self.params.leak_enabled:
            relax = -(u - self.params.v_rest) / self.params.tau_m
            rate = rate + relax
            leak = total(relax) * grid.cell_volume
        return _Stage(rate, n_spikes, silent, _walls(faces, grid), leak, emitted)

    def _advance(self, u):
        dt = self.grid.dt
        if self.integrator is Integrator.EULER:
            stage = self._stage(u)
            return u + dt * stage.rate, [stage], (1.0,)
        k1 = self._stage(u)
        k2 = self._stage(u + 0.5 * dt * k1.rate)
        k3 = self._stage(u + 0.5 * dt * k2.rate)
        k4 = self._stage(u + dt * k3.rate)
        w = RK4_WEIGHTS
        rate = w[0] * k1.rate + w[1] * k2.rate + w[2] * k3.rate + w[3] * k4.rate
        return u + dt * rate, [k1, k2, k3, k4], w

    def _reset(self, new, stages, weights):
        """Apply a non-conservative post-spike rule to the advanced state.

        Nothing of it is posted to the ledger.
        """
        params = self.params
        if params.reset is ResetRule.CONSERVATIVE or self.quota is None:
            return new
        sent = [
            sum(w * s.emitted[axis] for w, s in zip(weights, stages))
            for axis in range(self.grid.dims)
        ]
        if params.reset is ResetRule.HARD:
            new = new.copy()
            new[sum(sent) > 0] = params.v_reset
            return new
        # give back the packets actually sent, charge v_th per spike instead
        change = -sum(sent) * params.v_th
        for count, h in zip(sent, (self.grid.dx, self.grid.dy)):
            change = count * (self.grid.dt * params.r_m * self.quota.quota / h) + change
        return new + change

    def _post(self, stages, weights, ledger):
        dt = self.grid.dt
        walls = []
        for index, (low, high, area) in enumerate(stages[0].walls):
            low = sum(w * s.walls[index][0] for w, s in zip(weights, stages))
            high = sum(w * s.walls[index][1] for w, s in zip(weights, stages))
            walls.append((low, high, area))
        inflow, outflow = _wall_exchange(walls, self.params.r_m)
        if ledger is not None:
            ledger.post_boundary(dt * inflow, dt * outflow)
            if self.params.source is not None:
                source = np.broadcast_to(self.params.source, self.grid.shape)
                ledger.post_source(dt * total(source) * self.grid.cell_volume)
            if self.params.leak_enabled:
                ledger.post_leak(dt * sum(w * s.leak for w, s in zip(weights, stages)))
        n = len(stages)
        return StepStats(
            spikes_this_step=sum(s.spikes for s in stages) / n,
            sparsity_this_step=sum(s.sparsity for s in stages) / n,
            boundary_flux_net=inflow - outflow,
        )

    def step(self, state, ledger=None, index=0):
        """Advance ``state`` by one time step.

        Returns the new state and the step statistics; the mass exchanged
        with the outside is posted to ``ledger`` when given.
        """
        state.check(self.grid)
        try:
            new, stages, weights = self._advance(state.values)
            new = self._reset(new, stages, weights)
            if not np.isfinite(new).all():
                raise NonFiniteState(index)
            stats = self._post(stages, weights, ledger)
        except NonFiniteState:
            raise
        except NumericError as e:
            raise NonFiniteState(index, str(e))
        return StateField(new), stats


def step(state, grid, law, params, quota, integrator, ledger=None):
    """One application of the evolution operator; see :class:`Simulation`."""
    sim = Simulation(grid, law, quota, params, integrator)
    sim.check_stability(state)
    return sim.step(state, ledger)


def assimilate(state, observations, grid, ledger=None):
    """Overwrite observed cells; ``observations`` is ``[(cell, value), ...]``
    with row-major flat cell indices.

    The mass change is posted to ``ledger`` as a source so the account stays
    closed.
    """
    state.check(grid)
    if not observations:
        return state
    values = state.values.copy()
    flat = values.reshape(-1)
    changes = []
    for cell, value in observations:
        cell = int(cell)
        if not 0 <= cell < grid.n_cells:
            raise IndexOutOfRange(f"cell {cell} outside 0..{grid.n_cells - 1}")
        value = float(value)
        if not np.isfinite(value):
            raise ValidationError(f"observation for cell {cell} is not finite")
        changes.append(value - flat[cell])
        flat[cell] = value
    if ledger is not None:
        ledger.post_source(total(np.array(changes)) * grid.cell_volume)
    return StateField(values)


def default_record_steps(n_steps):
    if n_steps <= DENSE_RECORD_LIMIT:
        return list(range(n_steps + 1))
    return sorted({round(k * n_steps / DEFAULT_FRAMES) for k in range(DEFAULT_FRAMES + 1)})


def record_steps(n_steps, stride=None, extra=()):
    """Step indices to record: every ``stride`` steps (or the default
    spacing), the last step and any ``extra`` ones."""
    if stride is None:
        steps = set(default_record_steps(n_steps))
    else:
        if stride < 1:
            raise ValidationError(f"stride must be >= 1, got {stride!r}")
        steps = set(range(0, n_steps + 1, stride))
    steps.add(0)
    steps.add(n_steps)
    steps.update(s for s in extra if 0 <= s <= n_steps)
    return sorted(steps)


def evolve(state0, n_steps, simulation, stride=None, record=None,
           observations=None, equation="", retune=None):
    """Apply :meth:`Simulation.step` ``n_steps`` times.

    Frames are recorded at ``record`` (step indices) if given, else every
    ``stride`` steps, else with the default spacing. ``observations`` maps a
    step index to ``[(cell, value), ...]`` assimilated before that step.

    ``retune(start, n_steps, observed, simulation)`` is called at each
    observation step before the observations are assimilated, with the
    state the segment since the previous one started from; the simulation
    it returns advances the rest of the run.
    """
    if n_steps < 0:
        raise ValidationError(f"n_steps must be >= 0, got {n_steps!r}")
    grid = simulation.grid
    state0.check(grid)
    simulation.check_stability(state0)
    steps = record_steps(n_steps, stride) if record is None else sorted(set(record))
    wanted = set(steps)
    observations = observations or {}

    try:
        mass0 = total_mass(state0, grid)
    except NumericError as e:
        raise NonFiniteState(0, str(e))
    ledger = ConservationLedger(mass0)
    trajectory = Trajectory(grid, [], "simulation", equation)
    spike_history = []
    sparsity_history = []
    quota_history = []

    logger.debug(
        "evolving %d steps, dt=%g, quota=%s, %s",
        n_steps, grid.dt,
        None if simulation.quota is None else simulation.quota.quota,
        simulation.integrator.value,
    )
    state = state0
    start, start_index = state0, 0
    for index in range(n_steps + 1):
        if index in observations:
            since = index - start_index
            if retune is not None and since > 0 and simulation.quota is not None:
                simulation = retune(start, since, observations[index], simulation)
                quota_history.append((index, simulation.quota.quota))
            state = assimilate(state, observations[index], grid, ledger)
            start, start_index = state, index
        if index in wanted:
            trajectory.append(index * grid.dt, state)
        if index == n_steps:
            break
        state, stats = simulation.step(state, ledger, index)
        spike_history.append(stats.spikes_this_step)
        sparsity_history.append(stats.sparsity_this_step)

    run = RunStats(
        n_steps=n_steps,
        total_spikes=float(sum(spike_history)),
        mean_sparsity=(
            float(np.mean(sparsity_history)) if sparsity_history else 1.0
        ),
        ledger=ledger,
        spike_history=spike_history,
        sparsity_history=sparsity_history,
        quota_history=quota_history,
    )
    logger.debug(
        "done: %g spikes, mean sparsity %.4f", run.total_spikes, run.mean_sparsity,
    )
    return trajectory, run


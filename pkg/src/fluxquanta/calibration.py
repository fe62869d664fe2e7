"""Quota calibration by distillation from a teacher trajectory, and Pareto
sweeps over fixed quota lists.

Loss is ``sum over frames of ||u_pred - u_teacher||^2 + lam * spikes``. It is
not differentiable through the rounding, so the quota is found with a scalar
search: a logarithmic grid over ``[q_lo, q_hi]`` followed by golden-section
refinement in ``log(quota)`` around the best grid point.

The same search re-tunes the quota of a running simulation from its
observations, see :class:`QuotaRetuner`.
"""
import concurrent.futures
import logging
import math

from dataclasses import dataclass, field, asdict
from typing import List

import numpy as np

from .ledger import total
from .metrics import EnergyModel, rmse
from .models import (
    BaseModel, EmptySearchRange, FrameMisalignment, NumericError, QuotaParam,
    ShapeMismatch, ValidationError, _finite, _positive,
)
from .processor import evolve


logger = logging.getLogger(__name__)

INV_PHI = (math.sqrt(5) - 1) / 2
INV_PHI2 = (3 - math.sqrt(5)) / 2


@dataclass(frozen=True)
class CalibrationConfig(BaseModel):
    lam: float = 0.0
    q_lo: float = 1e-6
    q_hi: float = 1e-1
    points_per_decade: int = 2
    tolerance: float = 0.05
    workers: int = 1

    def __post_init__(self):
        super().__post_init__()
        if not self.q_lo < self.q_hi:
            raise EmptySearchRange(
                f"search interval [{self.q_lo!r}, {self.q_hi!r}] is empty"
            )

    def validate_lam(self, value):
        value = _finite("lambda", value)
        if value < 0:
            raise ValidationError(f"lambda must be >= 0, got {value!r}")
        return value

    def validate_q_lo(self, value):
        try:
            return _positive("q_lo", value)
        except ValidationError as exc:
            raise EmptySearchRange(str(exc))

    def validate_q_hi(self, value):
        try:
            return _positive("q_hi", value)
        except ValidationError as exc:
            raise EmptySearchRange(str(exc))

    def validate_points_per_decade(self, value):
        if int(value) != value or value < 1:
            raise ValidationError(f"points_per_decade must be >= 1, got {value!r}")
        return int(value)

    def validate_tolerance(self, value):
        return _positive("tolerance", value)

    def validate_workers(self, value):
        if int(value) != value or value < 1:
            raise ValidationError(f"workers must be >= 1, got {value!r}")
        return int(value)


@dataclass
class CalibrationSample:
    quota: float
    fidelity: float
    spikes: float
    loss: float


def _rank(sample):
    return (sample.loss, sample.spikes, -sample.quota)


@dataclass
class CalibrationReport:
    lam: float
    samples: List[CalibrationSample] = field(default_factory=list)

    @property
    def best(self):
        """The lowest-loss sample; ties go to fewer spikes, then to the
        larger quota."""
        return min(self.samples, key=_rank)

    @property
    def quota(self):
        return self.best.quota

    @property
    def loss(self):
        return self.best.loss

    def as_dict(self):
        return {
            "quota": self.quota,
            "loss": self.loss,
            "lambda": self.lam,
            "samples": [asdict(s) for s in self.samples],
        }


@dataclass
class ParetoPoint:
    quota: float
    final_rmse: float
    total_spikes: float
    mean_sparsity: float
    spike_energy_J: float
    error: str = ""

    @property
    def failed(self):
        return bool(self.error)


def fidelity(pred, teacher):
    """Sum of squared differences over every teacher frame and cell."""
    parts = []
    for frame in teacher.frames:
        try:
            match = pred.frame_at(frame.time)
        except FrameMisalignment:
            raise FrameMisalignment(
                f"prediction has no frame at teacher time t={frame.time!r}"
            )
        a, b = match.state.values, frame.state.values
        if a.shape != b.shape:
            raise ShapeMismatch(f"shapes {a.shape} and {b.shape} differ")
        diff = a - b
        parts.append(total(diff * diff))
    return math.fsum(parts)


def loss_total(pred, teacher, total_spikes, lam):
    return fidelity(pred, teacher) + lam * total_spikes


def log_grid(q_lo, q_hi, points_per_decade):
    """Logarithmically spaced quotas from ``q_lo`` to ``q_hi`` inclusive."""
    decades = math.log10(q_hi / q_lo)
    intervals = max(1, math.ceil(decades * points_per_decade - 1e-9))
    points = np.geomspace(q_lo, q_hi, intervals + 1).tolist()
    points[0], points[-1] = q_lo, q_hi
    return points


def _parallel_map(fn, calls, workers):
    """``[fn(*args) for args in calls]``, in order, possibly in subprocesses."""
    if workers <= 1 or len(calls) <= 1:
        return [fn(*args) for args in calls]
    with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as ex:
        futures = [ex.submit(fn, *args) for args in calls]
        return [f.result() for f in futures]


def _teacher_schedule(teacher, simulation):
    grid = simulation.grid
    if teacher.grid.shape != grid.shape:
        raise ShapeMismatch(
            f"teacher grid {teacher.grid.shape} does not match {grid.shape}"
        )
    steps = teacher.aligned_steps(grid.dt)
    if steps[0] != 0:
        raise FrameMisalignment("teacher has no frame at t=0")
    return steps


def _golden_section(f, a, b, width):
    """Narrow ``[a, b]`` around a minimum of ``f`` until it is at most ``width``
    wide, reusing one interior point per iteration."""
    h = b - a
    if h <= width:
        return
    n = int(math.ceil(math.log(width / h) / math.log(INV_PHI)))
    c = a + INV_PHI2 * h
    d = a + INV_PHI * h
    yc = f(c)
    yd = f(d)
    for _ in range(n - 1):
        h = INV_PHI * h
        if yc < yd:
            d, yd = c, yc
            c = a + INV_PHI2 * h
            yc = f(c)
        else:
            a = c
            c, yc = d, yd
            d = a + INV_PHI * h
            yd = f(d)


def _calibration_point(simulation, quota, teacher, steps, lam):
    pred, run = evolve(
        teacher.initial, steps[-1], simulation.with_quota(QuotaParam(quota)),
        record=steps,
    )
    fit = fidelity(pred, teacher)
    return CalibrationSample(quota, fit, run.total_spikes, fit + lam * run.total_spikes)


def calibrate_quota(teacher, simulation, cal):
    """Find the quota whose run best reproduces ``teacher``.

    The run starts from the teacher's frame at ``t=0`` and is compared on
    every teacher frame. Every sample is kept in the returned report.
    """
    steps = _teacher_schedule(teacher, simulation)
    report = CalibrationReport(cal.lam)
    cache = {}

    def record(samples):
        for sample in samples:
            logger.debug(
                "quota=%.6g fidelity=%.6g spikes=%.6g loss=%.6g",
                sample.quota, sample.fidelity, sample.spikes, sample.loss,
            )
            cache[sample.quota] = sample
            report.samples.append(sample)

    def evaluate(quota):
        if quota not in cache:
            record([_calibration_point(simulation, quota, teacher, steps, cal.lam)])
        return cache[quota].loss

    grid = log_grid(cal.q_lo, cal.q_hi, cal.points_per_decade)
    record(_parallel_map(
        _calibration_point,
        [(simulation, q, teacher, steps, cal.lam) for q in grid],
        cal.workers,
    ))

    k = min(range(len(grid)), key=lambda i: _rank(report.samples[i]))
    a = math.log(grid[max(k - 1, 0)])
    b = math.log(grid[min(k + 1, len(grid) - 1)])
    _golden_section(lambda x: evaluate(math.exp(x)), a, b, math.log1p(cal.tolerance))

    best = report.best
    logger.info(
        "calibrated quota %.6g (loss %.6g, %d samples)",
        best.quota, best.loss, len(report.samples),
    )
    return QuotaParam(best.quota), report


@dataclass(frozen=True)
class RetuneConfig(BaseModel):
    """Quotas tried at an observation step lie within ``[q / span, q * span]``
    of the current one ``q``."""
    span: float = 4.0
    tolerance: float = 0.05

    def validate_span(self, value):
        value = _positive("span", value)
        if value <= 1:
            raise EmptySearchRange(f"span must be > 1, got {value!r}")
        return value

    def validate_tolerance(self, value):
        return _positive("tolerance", value)


@dataclass
class RetuneSample:
    n_steps: int
    quota_before: float
    quota_after: float
    misfit_before: float
    misfit_after: float


def observation_misfit(state, observations):
    """Sum of squared differences at the observed cells."""
    flat = state.values.reshape(-1)
    diffs = np.array([flat[int(cell)] - float(value) for cell, value in observations])
    return total(diffs * diffs)


def _replay_misfit(simulation, quota, start, n_steps, observations):
    pred, _ = evolve(
        start, n_steps, simulation.with_quota(QuotaParam(quota)), record=[n_steps],
    )
    return observation_misfit(pred.final, observations)


@dataclass
class QuotaRetuner:
    """Re-tunes the quota of a running simulation from its observations.

    Passed as ``retune`` to :func:`~fluxquanta.processor.evolve`. At every
    observation step the segment since the previous one is replayed from
    its starting state with candidate quotas, and the quota whose end state
    best matches the observed cells advances the rest of the run. The
    current quota stays unless another one fits strictly better.
    """
    config: RetuneConfig = field(default_factory=RetuneConfig)
    history: List[RetuneSample] = field(default_factory=list)

    def __call__(self, start, n_steps, observations, simulation):
        current = simulation.quota.quota
        cache = {current: _replay_misfit(simulation, current, start, n_steps, observations)}

        def evaluate(x):
            quota = math.exp(x)
            if quota not in cache:
                cache[quota] = _replay_misfit(simulation, quota, start, n_steps, observations)
            return cache[quota]

        reach = math.log(self.config.span)
        centre = math.log(current)
        _golden_section(evaluate, centre - reach, centre + reach, math.log1p(self.config.tolerance))
        best = min(cache, key=lambda q: (cache[q], q != current))
        self.history.append(RetuneSample(n_steps, current, best, cache[current], cache[best]))
        logger.debug(
            "retuned quota over %d steps: %.6g -> %.6g (misfit %.6g -> %.6g)",
            n_steps, current, best, cache[current], cache[best],
        )
        if best == current:
            return simulation
        return simulation.with_quota(QuotaParam(best))


def _sweep_point(simulation, quota, state0, n_steps, reference_final, model):
    try:
        pred, run = evolve(
            state0, n_steps, simulation.with_quota(QuotaParam(quota)),
            record=[0, n_steps],
        )
        return ParetoPoint(
            quota=quota,
            final_rmse=rmse(pred.final, reference_final),
            total_spikes=run.total_spikes,
            mean_sparsity=run.mean_sparsity,
            spike_energy_J=run.total_spikes * model.joules_per_spike,
        )
    except (ValidationError, NumericError) as exc:
        return ParetoPoint(quota, math.nan, math.nan, math.nan, math.nan, str(exc))


def pareto_sweep(quotas, simulation, reference, workers=1, model=None, state0=None):
    """One independent run per quota from ``state0`` (by default the
    reference's first frame) to the reference's last frame, scored against
    that last frame.

    Points come back sorted by quota; a failed run yields a point with NaN
    metrics and the error message instead of aborting the sweep.
    """
    model = model or EnergyModel()
    quotas = sorted(QuotaParam(q).quota for q in quotas)
    if len(set(quotas)) != len(quotas):
        raise ValidationError("sweep quotas must be distinct")
    steps = _teacher_schedule(reference, simulation)
    if state0 is None:
        state0 = reference.initial
    calls = [
        (simulation, q, state0, steps[-1], reference.final, model)
        for q in quotas
    ]
    points = _parallel_map(_sweep_point, calls, workers)
    for point in points:
        if point.failed:
            logger.warning("sweep point quota=%g failed: %s", point.quota, point.error)
    return points

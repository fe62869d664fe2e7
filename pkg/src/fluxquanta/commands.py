"""Command implementations behind ``python -m fluxquanta``.

Each command takes a config path plus the command-line overrides and returns
a process exit code: 0 on success, 2 for bad input (configuration, files,
validation) and 3 when the numerics fail.
"""
import functools
import logging
import os

import numpy as np

from .calibration import QuotaRetuner, calibrate_quota, pareto_sweep
from .configs import RunConfig
from .flux import Constant
from .models import ConfigError, NumericError, UnsupportedIC, ValidationError
from .oracles import analytic_trajectory, fdm_reference, sample
from .processor import evolve, record_steps
from .reports import (
    calibration_report, run_report, write_pareto_csv, write_report,
)
from .trajectories import (
    TeacherTrajectory, load_trajectory, read_observations, sample_observations,
    save_trajectory, schedule_observations, write_observations,
)


logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def exit_codes(command):
    """Turn the package's exceptions into exit codes."""

    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        try:
            command(*args, **kwargs)
        except (ValidationError, OSError) as exc:
            logger.error("%s", exc)
            return EXIT_CONFIG
        except NumericError as exc:
            logger.error("numeric failure at %s", exc)
            return EXIT_NUMERIC
        return EXIT_OK

    return wrapper


def _load(path, quota=None, steps=None, out=None):
    config = RunConfig.load(path).with_overrides(quota=quota, steps=steps, out=out)
    os.makedirs(config.output_dir, exist_ok=True)
    return config


def _kappa(config):
    law = config.physics.constitutive()
    if not isinstance(law, Constant) and law.exponent != 0:
        raise UnsupportedIC("reference solutions need a constant diffusivity")
    return config.physics.kappa


def _oracle(config, kind, steps, refinement):
    """Reference frames at the given step indices of the configured grid."""
    grid = config.build_grid()
    if kind == "analytic":
        return analytic_trajectory(config.initial, _kappa(config), grid, steps)
    return fdm_reference(
        config.initial, _kappa(config), grid, steps[-1] * grid.dt,
        refinement, steps=steps,
    )


def _external(config, path, key):
    if path is None:
        raise ConfigError(key, "a trajectory path is required")
    teacher = load_trajectory(config.resolve(path), TeacherTrajectory)
    if teacher.grid.shape != config.build_grid().shape:
        raise ConfigError(key, f"trajectory grid {teacher.grid.shape} does not match the config")
    return teacher


def _simulate(config, quota=None):
    """Run the configured simulation and write its trajectory and report."""
    simulation = config.simulation(quota)
    grid = simulation.grid
    n_steps = config.n_steps
    steps = config.record_steps()

    reference = None
    kind = config.reference.kind
    if kind == "file":
        reference = _external(config, config.reference.path, "reference.path")
        reference = reference.truncated(n_steps * grid.dt)
        steps = sorted(set(steps) | set(reference.aligned_steps(grid.dt)))
    elif kind != "none":
        reference = _oracle(config, kind, steps, config.reference.refinement)

    observations = None
    if config.output.observations is not None:
        with open(config.resolve(config.output.observations), encoding="utf-8") as fh:
            observations = schedule_observations(read_observations(fh), grid.dt)

    retune = None
    if config.correction.retune:
        if observations is None:
            raise ConfigError("correction.retune", "needs output.observations")
        if simulation.quota is None:
            raise ConfigError("correction.retune", "needs a quota")
        retune = QuotaRetuner(config.correction.retuning())

    logger.info(
        "simulating %s: %d steps, quota=%s",
        config.equation, n_steps,
        "none" if simulation.quota is None else f"{simulation.quota.quota:g}",
    )
    trajectory, run = evolve(
        sample(config.initial, grid), n_steps, simulation,
        record=steps, observations=observations, equation=config.equation,
        retune=retune,
    )
    save_trajectory(trajectory, config.output_path(".traj"))
    report = run_report(config, simulation, trajectory, run, reference)
    write_report(report, config.output_path(".report.toml"))
    return report


@exit_codes
def cmd_simulate(path, quota=None, steps=None, out=None):
    _simulate(_load(path, quota, steps, out))


@exit_codes
def cmd_oracle(path, quota=None, steps=None, out=None):
    config = _load(path, quota, steps, out)
    mode = config.oracle.mode
    every = config.oracle.observe_stride
    observed = [] if every is None else list(range(every, config.n_steps + 1, every))
    steps = record_steps(config.n_steps, config.oracle.stride, observed)
    teacher = _oracle(config, mode, steps, config.oracle.refinement)
    teacher.equation = config.equation
    save_trajectory(teacher, config.output_path(f".{mode}.traj"))
    if every is not None:
        dt = config.build_grid().dt
        records = sample_observations(
            teacher, [k * dt for k in observed], config.oracle.observe_cells,
            config.oracle.noise, np.random.default_rng(config.seed),
        )
        path = config.output_path(f".{mode}.obs")
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            write_observations(records, fh)
        logger.info("wrote %d observations to %s", len(records), path)


def _teacher(config):
    cal = config.calibration
    grid = config.build_grid()
    horizon = config.t_end if cal.horizon is None else cal.horizon
    if cal.teacher == "file":
        teacher = _external(config, cal.teacher_path, "calibration.teacher_path")
        return teacher.truncated(horizon)
    n_train = RunConfig.steps_for("calibration.horizon", horizon, grid.dt)
    return _oracle(config, cal.teacher, record_steps(n_train, config.solver.stride), cal.refinement)


@exit_codes
def cmd_calibrate(path, quota=None, steps=None, out=None):
    config = _load(path, quota, steps, out)
    teacher = _teacher(config)
    chosen, report = calibrate_quota(
        teacher, config.simulation(), config.calibration.search(),
    )
    write_report(
        calibration_report(report, teacher),
        config.output_path(".calibration.toml"),
    )
    if config.calibration.follow_on:
        _simulate(config, chosen.quota)


@exit_codes
def cmd_sweep(path, quota=None, steps=None, out=None):
    config = _load(path, quota, steps, out)
    quotas = config.sweep.quotas
    if not quotas:
        raise ConfigError("sweep.quotas", "at least one quota is required")
    grid = config.build_grid()
    kind = config.reference.kind
    if kind == "none":
        raise ConfigError("reference.kind", "a sweep needs a reference")
    if kind == "file":
        reference = _external(config, config.reference.path, "reference.path")
        reference = reference.truncated(config.n_steps * grid.dt)
    else:
        reference = _oracle(config, kind, [0, config.n_steps], config.reference.refinement)
    points = pareto_sweep(
        quotas, config.simulation(), reference, config.sweep.workers,
        state0=sample(config.initial, grid),
    )
    write_pareto_csv(points, config.output_path(".pareto.csv"))


COMMANDS = {
    "simulate": cmd_simulate,
    "oracle": cmd_oracle,
    "calibrate": cmd_calibrate,
    "sweep": cmd_sweep,
}

"""Run and calibration reports (TOML) and Pareto sweeps (CSV)."""
import csv
import logging
import math

import tomlkit

from .metrics import (
    absolute_error, dense_flop_estimate, energy_report, functional_error,
    mass_drift, rmse, spacetime_rmse, total_mass,
)
from .models import ZeroReference


logger = logging.getLogger(__name__)

PARETO_COLUMNS = (
    "quota", "final_rmse", "total_spikes", "mean_sparsity", "spike_energy_J",
    "error",
)


def _accuracy(trajectory, reference, snapshots):
    final = reference.frame_at(trajectory.frames[-1].time).state
    try:
        relative = functional_error(trajectory.final, final)
    except ZeroReference:
        relative = math.nan
    section = {
        "reference": reference.provenance,
        "final_rmse": rmse(trajectory.final, final),
        "final_relative_error": relative,
        "spacetime_rmse": spacetime_rmse(trajectory, reference),
        "max_abs_error": float(absolute_error(trajectory.final, final).max()),
    }
    if snapshots:
        section["snapshots"] = [
            {
                "time": t,
                "rmse": rmse(trajectory.frame_at(t).state, reference.frame_at(t).state),
            }
            for t in snapshots
        ]
    return section


def run_report(config, simulation, trajectory, run, reference=None):
    """Every metric of one run as a plain nested mapping."""
    grid = simulation.grid
    ledger = run.ledger
    mass_final = total_mass(trajectory.final, grid)
    stages = 4 if simulation.integrator.value == "rk4" else 1
    flops = dense_flop_estimate(grid, run.n_steps, stages)
    report = {
        "run": {
            "equation": config.equation,
            "dims": grid.dims,
            "nx": grid.nx,
            "ny": grid.ny,
            "dt": grid.dt,
            "t_end": run.n_steps * grid.dt,
            "n_steps": run.n_steps,
            "frames": len(trajectory),
            "integrator": simulation.integrator.value,
            "quota": "none" if simulation.quota is None else simulation.quota.quota,
            "boundary": "/".join(b.as_token() for b in grid.boundary),
            "reset": simulation.params.reset.value,
        },
        "conservation": {
            "mass_initial": ledger.mass_initial,
            "mass_final": mass_final,
            "mass_drift": mass_drift(trajectory),
            "ledger_residual": ledger.residual(mass_final),
            "ledger_relative_residual": ledger.relative_residual(mass_final),
            "boundary_in": float(ledger.boundary_in),
            "boundary_out": float(ledger.boundary_out),
            "source": float(ledger.source_accum),
            "leak": float(ledger.leak_accum),
        },
        "spikes": {
            "total": run.total_spikes,
            "mean_sparsity": run.mean_sparsity,
        },
        "energy": energy_report(run.total_spikes, flops).as_dict(),
    }
    if run.quota_history:
        report["correction"] = {
            "steps": [step for step, _ in run.quota_history],
            "quotas": [quota for _, quota in run.quota_history],
            "final_quota": run.quota_history[-1][1],
        }
    if reference is not None:
        report["accuracy"] = _accuracy(trajectory, reference, config.solver.snapshots)
    return report


def calibration_report(report, teacher):
    data = report.as_dict()
    data["teacher"] = {
        "provenance": teacher.provenance,
        "frames": len(teacher),
        "horizon": teacher.frames[-1].time,
    }
    return data


def write_report(data, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(tomlkit.dumps(data))
    logger.info("wrote report %s", path)


def read_report(path):
    with open(path, encoding="utf-8") as fh:
        return tomlkit.loads(fh.read()).unwrap()


def write_pareto_csv(points, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=PARETO_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for point in points:
            writer.writerow({
                "quota": repr(point.quota),
                "final_rmse": repr(point.final_rmse),
                "total_spikes": repr(point.total_spikes),
                "mean_sparsity": repr(point.mean_sparsity),
                "spike_energy_J": repr(point.spike_energy_J),
                "error": point.error,
            })
    logger.info("wrote %d sweep points to %s", len(points), path)


def read_pareto_csv(path):
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.DictReader(fh))
    for row in rows:
        for key in PARETO_COLUMNS[:-1]:
            row[key] = float(row[key])
    return rows

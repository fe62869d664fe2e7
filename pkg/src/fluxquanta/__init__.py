__all__ = [
    "__version__",
    "Boundary", "BoundaryKind", "NeuronParams", "QuotaParam", "ResetRule",
    "GridSpec", "Grid", "make_grid",
    "StateField", "FaceField", "SpikeField",
    "ConservationLedger",
    "Constant", "PowerLaw", "compute_physical_flux",
    "quantize", "reconstruct",
    "Simulation", "step", "evolve", "assimilate",
    "CalibrationConfig", "calibrate_quota", "loss_total", "pareto_sweep",
    "QuotaRetuner", "RetuneConfig",
    "Trajectory", "TeacherTrajectory", "read_trajectory", "write_trajectory",
    "RunConfig",
]

__version__ = '0.1.0.dev0'

from .calibration import (
    CalibrationConfig, QuotaRetuner, RetuneConfig, calibrate_quota, loss_total,
    pareto_sweep,
)
from .configs import RunConfig
from .fields import FaceField, SpikeField, StateField
from .flux import Constant, PowerLaw, compute_physical_flux
from .grids import Grid, GridSpec, make_grid
from .ledger import ConservationLedger
from .models import Boundary, BoundaryKind, NeuronParams, QuotaParam, ResetRule
from .processor import Simulation, assimilate, evolve, step
from .projector import quantize, reconstruct
from .trajectories import TeacherTrajectory, Trajectory, read_trajectory, write_trajectory

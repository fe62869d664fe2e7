# pylint: disable=missing-module-docstring,missing-class-docstring
# pylint: disable=missing-function-docstring
import dataclasses
import logging
import os

from dataclasses import dataclass, field
from typing import Optional, Tuple

import tomlkit

from .calibration import CalibrationConfig, RetuneConfig
from .flux import Constant, PowerLaw
from .grids import GridSpec, cfl_max_dt, make_grid
from .models import (
    BaseModel, Boundary, ConfigError, NeuronParams, QuotaParam, ResetRule,
    ValidationError, _finite, _positive,
)
from .oracles import INITIAL_CONDITIONS
from .processor import Integrator, Simulation, record_steps


logger = logging.getLogger(__name__)

EQUATIONS = {"heat1d": 1, "diffusion2d": 2}

STEP_TOLERANCE = 1e-9


def _optional(name, value, check=_positive):
    return None if value is None else check(name, value)


def _count(name, value, minimum=1):
    if isinstance(value, bool) or not isinstance(value, (int, float)) \
            or int(value) != value or value < minimum:
        raise ValidationError(f"{name} must be an integer >= {minimum}, got {value!r}")
    return int(value)


def _choice(name, value, choices):
    if value not in choices:
        raise ValidationError(
            f"{name} must be one of {', '.join(choices)}, got {value!r}"
        )
    return value


@dataclass(frozen=True)
class GridSection(BaseModel):
    """Either ``dx`` or ``nx`` fixes the x spacing, likewise for y. ``dt``
    defaults to half the explicit stability bound."""
    lx: float = 1.0
    dx: Optional[float] = None
    nx: Optional[int] = None
    ly: Optional[float] = None
    dy: Optional[float] = None
    ny: Optional[int] = None
    dt: Optional[float] = None

    def validate_lx(self, value):
        return _positive("lx", value)

    def validate_dx(self, value):
        return _optional("dx", value)

    def validate_nx(self, value):
        return _optional("nx", value, _count)

    def validate_ly(self, value):
        return _optional("ly", value)

    def validate_dy(self, value):
        return _optional("dy", value)

    def validate_ny(self, value):
        return _optional("ny", value, _count)

    def validate_dt(self, value):
        return _optional("dt", value)

    def spacing(self, axis):
        length = self.lx if axis == "x" else (self.ly or self.lx)
        step = getattr(self, f"d{axis}")
        count = getattr(self, f"n{axis}")
        if step is not None and count is not None:
            raise ValidationError(f"give d{axis} or n{axis}, not both")
        if step is None:
            if count is None:
                raise ValidationError(f"one of d{axis} or n{axis} is required")
            step = length / count
        return length, step


@dataclass(frozen=True)
class PhysicsSection(BaseModel):
    law: str = "constant"
    kappa: float = 0.1
    exponent: float = 0.0
    tau_m: Optional[float] = None
    v_rest: float = 0.0
    r_m: float = 1.0
    source: float = 0.0
    reset: str = "conservative"
    v_th: Optional[float] = None
    v_reset: Optional[float] = None

    def __post_init__(self):
        super().__post_init__()
        self.neuron_params()

    def validate_law(self, value):
        return _choice("law", value, ("constant", "power"))

    def validate_kappa(self, value):
        return _positive("kappa", value)

    def validate_exponent(self, value):
        return _finite("exponent", value)

    def validate_source(self, value):
        return _finite("source", value)

    def validate_reset(self, value):
        return _choice("reset", value, tuple(r.value for r in ResetRule))

    def constitutive(self):
        if self.law == "power":
            return PowerLaw(self.kappa, self.exponent)
        return Constant(self.kappa)

    def neuron_params(self):
        return NeuronParams(
            self.tau_m, self.v_rest, self.r_m, self.source,
            self.reset, self.v_th, self.v_reset,
        )


@dataclass(frozen=True)
class SolverSection(BaseModel):
    integrator: str = "rk4"
    quota: Optional[float] = None
    stride: Optional[int] = None
    snapshots: Tuple[float, ...] = ()
    event_driven: bool = True

    def validate_integrator(self, value):
        return _choice("integrator", value, tuple(i.value for i in Integrator))

    def validate_quota(self, value):
        return None if value is None else QuotaParam(value).quota

    def validate_stride(self, value):
        return _optional("stride", value, _count)

    def validate_snapshots(self, value):
        return tuple(_finite("snapshots", t) for t in value)


@dataclass(frozen=True)
class ReferenceSection(BaseModel):
    kind: str = "analytic"
    refinement: int = 4
    path: Optional[str] = None

    def validate_kind(self, value):
        return _choice("kind", value, ("analytic", "fdm", "file", "none"))

    def validate_refinement(self, value):
        return _count("refinement", value, 2)


@dataclass(frozen=True)
class CalibrationSection(BaseModel):
    lam: float = 0.0
    q_lo: float = 1e-6
    q_hi: float = 1e-1
    points_per_decade: int = 2
    tolerance: float = 0.05
    horizon: Optional[float] = None
    teacher: str = "analytic"
    teacher_path: Optional[str] = None
    refinement: int = 4
    workers: int = 1
    follow_on: bool = True

    def __post_init__(self):
        super().__post_init__()
        self.search()

    def validate_horizon(self, value):
        return _optional("horizon", value)

    def validate_teacher(self, value):
        return _choice("teacher", value, ("analytic", "fdm", "file"))

    def validate_refinement(self, value):
        return _count("refinement", value, 2)

    def search(self):
        return CalibrationConfig(
            self.lam, self.q_lo, self.q_hi, self.points_per_decade,
            self.tolerance, self.workers,
        )


@dataclass(frozen=True)
class SweepSection(BaseModel):
    quotas: Tuple[float, ...] = ()
    workers: int = 1

    def validate_quotas(self, value):
        return tuple(QuotaParam(q).quota for q in value)

    def validate_workers(self, value):
        return _count("workers", value)


@dataclass(frozen=True)
class OracleSection(BaseModel):
    mode: str = "analytic"
    refinement: int = 4
    stride: int = 1
    observe_stride: Optional[int] = None
    observe_cells: int = 4
    noise: float = 0.0

    def validate_mode(self, value):
        return _choice("mode", value, ("analytic", "fdm"))

    def validate_refinement(self, value):
        return _count("refinement", value, 2)

    def validate_stride(self, value):
        return _count("stride", value)

    def validate_observe_stride(self, value):
        return _optional("observe_stride", value, _count)

    def validate_observe_cells(self, value):
        return _count("observe_cells", value)

    def validate_noise(self, value):
        value = _finite("noise", value)
        if value < 0:
            raise ValidationError(f"noise must be >= 0, got {value!r}")
        return value


@dataclass(frozen=True)
class CorrectionSection(BaseModel):
    retune: bool = False
    span: float = 4.0
    tolerance: float = 0.05

    def __post_init__(self):
        super().__post_init__()
        self.retuning()

    def retuning(self):
        return RetuneConfig(self.span, self.tolerance)


@dataclass(frozen=True)
class OutputSection(BaseModel):
    directory: str = "."
    name: Optional[str] = None
    observations: Optional[str] = None


SECTIONS = {
    "grid": GridSection,
    "physics": PhysicsSection,
    "solver": SolverSection,
    "reference": ReferenceSection,
    "calibration": CalibrationSection,
    "sweep": SweepSection,
    "oracle": OracleSection,
    "correction": CorrectionSection,
    "output": OutputSection,
}

#: TOML keys that are not valid Python identifiers.
KEY_ALIASES = {"lambda": "lam"}

TOP_LEVEL_KEYS = ("equation", "t_end", "seed", "initial", "boundary") + tuple(SECTIONS)

BOUNDARY_KEYS = ("kind", "value", "low", "high")


def _section(cls, data, prefix):
    if not isinstance(data, dict):
        raise ConfigError(prefix, "expected a table")
    kwargs = {}
    for key, value in data.items():
        name = KEY_ALIASES.get(key, key)
        if name not in cls.__dataclass_fields__:
            raise ConfigError(f"{prefix}.{key}", "unknown key")
        kwargs[name] = value
    try:
        return cls(**kwargs)
    except ConfigError:
        raise
    except ValidationError as exc:
        raise ConfigError(prefix, str(exc))


def _boundary(data, dims):
    if not isinstance(data, dict):
        raise ConfigError("boundary", "expected a table")
    axes = [axis for axis in ("x", "y") if axis in data]
    if dims == 1 and "y" in data:
        raise ConfigError("boundary.y", "1D grids have no y axis")
    if axes:
        extra = set(data) - {"x", "y"}
        if extra:
            raise ConfigError(f"boundary.{sorted(extra)[0]}", "mixes per-axis and global keys")
        tables = [(f"boundary.{axis}", data.get(axis, {})) for axis in ("x", "y")[:dims]]
    else:
        tables = [("boundary", data)] * dims
    boundary = []
    for prefix, table in tables:
        for key in table:
            if key not in BOUNDARY_KEYS:
                raise ConfigError(f"{prefix}.{key}", "unknown key")
        try:
            boundary.append(Boundary.from_dict(table))
        except ValidationError as exc:
            raise ConfigError(prefix, str(exc))
    return tuple(boundary)


def _initial(data):
    if not isinstance(data, dict):
        raise ConfigError("initial", "expected a table")
    data = dict(data)
    kind = data.pop("kind", None)
    if kind not in INITIAL_CONDITIONS:
        raise ConfigError("initial.kind", f"unknown initial condition {kind!r}")
    cls = INITIAL_CONDITIONS[kind]
    for key in data:
        if key not in cls.__dataclass_fields__:
            raise ConfigError(f"initial.{key}", "unknown key")
    try:
        return cls(**data)
    except ValidationError as exc:
        raise ConfigError("initial", str(exc))


@dataclass(frozen=True)
class RunConfig(BaseModel):
    """A validated run configuration.

    Relative paths inside it are resolved against ``base_dir``, the directory
    of the file it was loaded from.
    """
    equation: str
    t_end: float
    initial: object
    boundary: Tuple[Boundary, ...] = ()
    grid: GridSection = field(default_factory=GridSection)
    physics: PhysicsSection = field(default_factory=PhysicsSection)
    solver: SolverSection = field(default_factory=SolverSection)
    reference: ReferenceSection = field(default_factory=ReferenceSection)
    calibration: CalibrationSection = field(default_factory=CalibrationSection)
    sweep: SweepSection = field(default_factory=SweepSection)
    oracle: OracleSection = field(default_factory=OracleSection)
    correction: CorrectionSection = field(default_factory=CorrectionSection)
    output: OutputSection = field(default_factory=OutputSection)
    seed: int = 0
    base_dir: str = "."
    name: str = "run"

    def __post_init__(self):
        super().__post_init__()
        try:
            grid = self.build_grid()
        except ValidationError as exc:
            raise ConfigError("grid", str(exc))
        self.steps_for("t_end", self.t_end, grid.dt)
        for t in self.solver.snapshots:
            if t > self.t_end + STEP_TOLERANCE:
                raise ConfigError("solver.snapshots", f"t={t!r} is after t_end")
            self.steps_for("solver.snapshots", t, grid.dt)

    def validate_equation(self, value):
        if value not in EQUATIONS:
            raise ConfigError("equation", f"unknown equation {value!r}")
        return value

    def validate_t_end(self, value):
        try:
            value = _finite("t_end", value)
        except ValidationError as exc:
            raise ConfigError("t_end", str(exc))
        if value < 0:
            raise ConfigError("t_end", f"must be >= 0, got {value!r}")
        return value

    def validate_seed(self, value):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError("seed", f"must be an integer, got {value!r}")
        return value

    @staticmethod
    def steps_for(key, t, dt):
        n = round(t / dt)
        if abs(n * dt - t) > STEP_TOLERANCE:
            raise ConfigError(key, f"t={t!r} is not an integral number of dt={dt!r}")
        return n

    @property
    def dims(self):
        return EQUATIONS[self.equation]

    def build_grid(self):
        g = self.grid
        lx, dx = g.spacing("x")
        ly = dy = None
        if self.dims == 2:
            ly, dy = g.spacing("y")
        dt = g.dt
        if dt is None:
            trial = make_grid(GridSpec(self.dims, lx, dx, 1.0, ly, dy, self.boundary))
            dt = 0.5 * cfl_max_dt(trial, self.physics.constitutive().max_diffusivity(1.0))
        return make_grid(GridSpec(self.dims, lx, dx, dt, ly, dy, self.boundary))

    @property
    def n_steps(self):
        return self.steps_for("t_end", self.t_end, self.build_grid().dt)

    def record_steps(self):
        dt = self.build_grid().dt
        extra = [self.steps_for("solver.snapshots", t, dt) for t in self.solver.snapshots]
        return record_steps(self.n_steps, self.solver.stride, extra)

    def simulation(self, quota=None):
        """The evolution operator; ``quota`` overrides the configured one."""
        quota = self.solver.quota if quota is None else quota
        return Simulation(
            self.build_grid(),
            self.physics.constitutive(),
            None if quota is None else QuotaParam(quota),
            self.physics.neuron_params(),
            self.solver.integrator,
            self.solver.event_driven,
        )

    def resolve(self, path):
        if path is None:
            return None
        return os.path.normpath(os.path.join(self.base_dir, path))

    @property
    def output_dir(self):
        return self.resolve(self.output.directory)

    @property
    def output_name(self):
        return self.output.name or self.name

    def output_path(self, suffix):
        return os.path.join(self.output_dir, f"{self.output_name}{suffix}")

    def with_overrides(self, quota=None, steps=None, out=None):
        """Apply command-line overrides and validate the result again."""
        config = self
        if quota is not None:
            config = dataclasses.replace(
                config, solver=dataclasses.replace(config.solver, quota=quota),
            )
        if steps is not None:
            steps = _count("steps", steps, 0)
            t_end = steps * config.build_grid().dt
            # snapshots past the shortened end are dropped
            snapshots = tuple(
                t for t in config.solver.snapshots if t <= t_end + STEP_TOLERANCE
            )
            config = dataclasses.replace(
                config, t_end=t_end,
                solver=dataclasses.replace(config.solver, snapshots=snapshots),
            )
        if out is not None:
            config = dataclasses.replace(
                config, output=dataclasses.replace(config.output, directory=os.path.abspath(out)),
            )
        return config

    @classmethod
    def from_dict(cls, data, base_dir=".", name="run"):
        for key in data:
            if KEY_ALIASES.get(key, key) not in TOP_LEVEL_KEYS:
                raise ConfigError(key, "unknown key")
        for key in ("equation", "t_end", "initial"):
            if key not in data:
                raise ConfigError(key, "missing required key")
        equation = data["equation"]
        if equation not in EQUATIONS:
            raise ConfigError("equation", f"unknown equation {equation!r}")
        kwargs = {
            name_: _section(section, data.get(name_, {}), name_)
            for name_, section in SECTIONS.items()
        }
        return cls(
            equation=equation,
            t_end=data["t_end"],
            initial=_initial(data["initial"]),
            boundary=_boundary(data.get("boundary", {}), EQUATIONS[equation]),
            seed=data.get("seed", 0),
            base_dir=base_dir,
            name=name,
            **kwargs,
        )

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            try:
                data = tomlkit.loads(fh.read()).unwrap()
            except tomlkit.exceptions.TOMLKitError as exc:
                raise ConfigError(os.path.basename(path), str(exc))
        base_dir = os.path.dirname(os.path.abspath(path))
        name = os.path.splitext(os.path.basename(path))[0]
        config = cls.from_dict(data, base_dir, name)
        logger.debug("loaded %s: %s, %d steps", path, config.equation, config.n_steps)
        return config

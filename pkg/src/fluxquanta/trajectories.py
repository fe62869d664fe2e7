# pylint: disable=missing-module-docstring,missing-class-docstring
# pylint: disable=missing-function-docstring
import logging
import math
import re

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .fields import StateField
from .grids import GridSpec, make_grid
from .models import (
    BaseModel, Boundary, FormatError, FrameMisalignment, ShapeMismatch,
    ValidationError,
)


logger = logging.getLogger(__name__)

MAGIC = "PISNN-TRAJ v1"

ALIGNMENT_TOLERANCE = 1e-9

TEACHER_PROVENANCES = ("analytic", "fdm", "external-file")

PROVENANCES = ("simulation",) + TEACHER_PROVENANCES

META_KEYS = (
    "dims", "nx", "ny", "dx", "dy", "dt_frame", "frames", "boundary",
    "equation",
)

OPTIONAL_META_KEYS = ("provenance",)

FRAME_LINE = re.compile(r"^frame t=(?P<time>\S+)$")

OBSERVATION_LINE = re.compile(
    r"^t=(?P<time>\S+)\s+cell=(?P<cell>\d+)\s+value=(?P<value>\S+)$"
)


@dataclass
class Frame:
    time: float
    state: StateField

    @property
    def values(self):
        return self.state.values


@dataclass
class Trajectory(BaseModel):
    """Ordered snapshots of a state on one grid."""
    grid: object
    frames: List[Frame] = field(default_factory=list)
    provenance: str = "simulation"
    equation: str = ""

    def validate_frames(self, value):
        frames = []
        for frame in value:
            if not isinstance(frame, Frame):
                time, values = frame
                frame = Frame(float(time), StateField(values))
            if frame.state.values.shape != self.grid.shape:
                raise ShapeMismatch(
                    f"frame t={frame.time!r} has shape {frame.state.values.shape}, "
                    f"grid is {self.grid.shape}"
                )
            if frames and not frame.time > frames[-1].time:
                raise ValidationError(
                    f"frame times must increase strictly, "
                    f"got {frame.time!r} after {frames[-1].time!r}"
                )
            frames.append(frame)
        return frames

    def validate_provenance(self, value):
        if value not in PROVENANCES:
            raise ValidationError(f"unknown provenance {value!r}")
        return value

    def __len__(self):
        return len(self.frames)

    def __iter__(self):
        return iter(self.frames)

    def __getitem__(self, index):
        return self.frames[index]

    @property
    def times(self):
        return [frame.time for frame in self.frames]

    @property
    def final(self):
        return self.frames[-1].state

    @property
    def initial(self):
        return self.frames[0].state

    def append(self, time, state):
        if self.frames and not time > self.frames[-1].time:
            raise ValidationError(f"frame time {time!r} does not increase")
        self.frames.append(Frame(time, state.check(self.grid)))

    def frame_at(self, time, tolerance=ALIGNMENT_TOLERANCE):
        for frame in self.frames:
            if abs(frame.time - time) <= tolerance:
                return frame
        raise FrameMisalignment(f"no frame at t={time!r}")

    def aligned_steps(self, dt, tolerance=ALIGNMENT_TOLERANCE):
        """Step index of every frame on a clock ticking every ``dt``."""
        steps = []
        for frame in self.frames:
            step = round(frame.time / dt)
            if abs(frame.time - step * dt) > tolerance:
                raise FrameMisalignment(
                    f"frame t={frame.time!r} is not a multiple of dt={dt!r}"
                )
            steps.append(step)
        return steps

    def truncated(self, horizon, tolerance=ALIGNMENT_TOLERANCE):
        """The frames up to and including ``horizon``."""
        frames = [f for f in self.frames if f.time <= horizon + tolerance]
        return type(self)(self.grid, frames, self.provenance, self.equation)

    @classmethod
    def load(cls, fh):
        return read_trajectory(fh, cls=cls)

    def dump(self, fh):
        write_trajectory(self, fh)


@dataclass
class TeacherTrajectory(Trajectory):
    """A reference trajectory a quota is distilled from."""
    provenance: str = "external-file"

    def validate_provenance(self, value):
        if value not in TEACHER_PROVENANCES:
            raise ValidationError(f"{value!r} is not a teacher provenance")
        return value

    @classmethod
    def adopt(cls, trajectory, provenance=None):
        if provenance is None:
            provenance = trajectory.provenance
            if provenance not in TEACHER_PROVENANCES:
                provenance = "external-file"
        return cls(
            trajectory.grid, list(trajectory.frames), provenance,
            trajectory.equation,
        )


def _format(value):
    return "%.17g" % value


def write_trajectory(trajectory, fh):
    """Write ``trajectory`` to the open text file ``fh``.

    Values are printed with 17 significant digits, which round-trips every
    binary64 number exactly.
    """
    grid = trajectory.grid
    times = trajectory.times
    dt_frame = times[1] - times[0] if len(times) > 1 else grid.dt
    meta = {
        "dims": grid.dims,
        "nx": grid.nx,
        "ny": grid.ny,
        "dx": _format(grid.dx),
        "dy": _format(grid.dy if grid.dims == 2 else 0.0),
        "dt_frame": _format(dt_frame),
        "frames": len(trajectory.frames),
        "boundary": "/".join(b.as_token() for b in grid.boundary),
        "equation": trajectory.equation or ("heat1d" if grid.dims == 1 else "diffusion2d"),
        "provenance": trajectory.provenance,
    }
    lines = [MAGIC]
    lines.extend(f"meta {key}={value}" for key, value in meta.items())
    for frame in trajectory.frames:
        lines.append(f"frame t={_format(frame.time)}")
        for row in np.atleast_2d(frame.values):
            lines.append(" ".join(_format(v) for v in row))
    fh.write("\n".join(lines) + "\n")


def _parse_float(text, lineno):
    try:
        value = float(text)
    except ValueError:
        raise FormatError(lineno, f"not a number: {text!r}")
    if not math.isfinite(value):
        raise FormatError(lineno, f"non-finite value {text!r}")
    return value


def _grid_from_meta(meta, lineno):
    try:
        dims = int(meta["dims"])
        nx = int(meta["nx"])
        ny = int(meta["ny"])
        dx = float(meta["dx"])
        dy = float(meta["dy"])
        dt = float(meta["dt_frame"])
        boundary = tuple(Boundary.from_token(t) for t in meta["boundary"].split("/"))
    except KeyError as exc:
        raise FormatError(lineno, f"missing meta key {exc.args[0]!r}")
    except ValueError as exc:
        raise FormatError(lineno, f"bad meta value: {exc}")
    if dt <= 0:
        dt = 1.0
    try:
        if dims == 1:
            spec = GridSpec(1, nx * dx, dx, dt, boundary=boundary)
        else:
            spec = GridSpec(2, nx * dx, dx, dt, ny * dy, dy, boundary)
        grid = make_grid(spec)
    except ValidationError as exc:
        raise FormatError(lineno, f"invalid grid metadata: {exc}")
    if (grid.nx, grid.ny) != (nx, ny if dims == 2 else 1):
        raise FormatError(lineno, "grid metadata is inconsistent")
    return grid


def read_trajectory(fh, cls=Trajectory):
    """Parse a trajectory written by :func:`write_trajectory`, or by any
    external producer that follows the same format."""
    lines = fh.read().splitlines()
    if not lines or lines[0].strip() != MAGIC:
        raise FormatError(1, f"expected header {MAGIC!r}")

    meta = {}
    lineno = 1
    while lineno < len(lines) and lines[lineno].startswith("meta "):
        key, sep, value = lines[lineno][5:].partition("=")
        if not sep:
            raise FormatError(lineno + 1, "meta line without '='")
        key = key.strip()
        if key not in META_KEYS + OPTIONAL_META_KEYS:
            raise FormatError(lineno + 1, f"unknown meta key {key!r}")
        meta[key] = value.strip()
        lineno += 1

    missing = [key for key in META_KEYS if key not in meta]
    if missing:
        raise FormatError(lineno, f"missing meta keys: {', '.join(missing)}")
    grid = _grid_from_meta(meta, lineno)
    try:
        n_frames = int(meta["frames"])
    except ValueError:
        raise FormatError(lineno, f"bad frame count {meta['frames']!r}")
    rows = grid.ny if grid.dims == 2 else 1

    frames = []
    last_complete = "none"
    for _ in range(n_frames):
        if lineno >= len(lines):
            raise FormatError(
                lineno, f"truncated file; last complete frame is {last_complete}"
            )
        match = FRAME_LINE.match(lines[lineno].strip())
        if match is None:
            raise FormatError(lineno + 1, f"expected 'frame t=...', got {lines[lineno]!r}")
        time = _parse_float(match.group("time"), lineno + 1)
        lineno += 1
        values = []
        for _ in range(rows):
            if lineno >= len(lines):
                raise FormatError(
                    lineno, f"truncated file; last complete frame is {last_complete}"
                )
            row = [_parse_float(v, lineno + 1) for v in lines[lineno].split()]
            if len(row) != grid.nx:
                raise FormatError(
                    lineno + 1, f"expected {grid.nx} values, got {len(row)}"
                )
            values.append(row)
            lineno += 1
        values = np.array(values if grid.dims == 2 else values[0])
        frames.append(Frame(time, StateField(values)))
        last_complete = f"#{len(frames) - 1} (t={_format(time)})"

    if any(line.strip() for line in lines[lineno:]):
        raise FormatError(lineno + 1, "unexpected content after the last frame")

    provenance = meta.get("provenance", "external-file")
    if cls is TeacherTrajectory and provenance not in TEACHER_PROVENANCES:
        provenance = "external-file"
    try:
        return cls(grid, frames, provenance, meta["equation"])
    except ValidationError as exc:
        raise FormatError(lineno, str(exc))


def read_observations(fh):
    """Parse an observation replay file into ``[(time, cell, value), ...]``."""
    observations = []
    for lineno, line in enumerate(fh.read().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        match = OBSERVATION_LINE.match(line)
        if match is None:
            raise FormatError(lineno, f"expected 't=<time> cell=<index> value=<float>', got {line!r}")
        observations.append((
            _parse_float(match.group("time"), lineno),
            int(match.group("cell")),
            _parse_float(match.group("value"), lineno),
        ))
    return observations


def write_observations(observations, fh):
    """Write ``[(time, cell, value), ...]`` in the replay format."""
    fh.write("".join(
        f"t={_format(time)} cell={int(cell)} value={_format(value)}\n"
        for time, cell, value in observations
    ))


def sample_observations(trajectory, times, cells, noise=0.0, rng=None):
    """Synthetic sensor readings taken from ``trajectory``.

    At each of ``times`` a fresh set of ``cells`` distinct cells is drawn
    and read, with Gaussian noise of standard deviation ``noise`` added.
    """
    rng = np.random.default_rng() if rng is None else rng
    n_cells = trajectory.grid.n_cells
    if not 1 <= cells <= n_cells:
        raise ValidationError(f"cannot observe {cells} of {n_cells} cells")
    records = []
    for time in times:
        frame = trajectory.frame_at(time)
        chosen = np.sort(rng.choice(n_cells, size=cells, replace=False))
        values = frame.values.reshape(-1)[chosen]
        if noise:
            values = values + rng.normal(0.0, noise, cells)
        records.extend(
            (frame.time, int(c), float(v)) for c, v in zip(chosen, values)
        )
    return records


def schedule_observations(observations, dt, tolerance=ALIGNMENT_TOLERANCE):
    """Group ``(time, cell, value)`` records by the step they apply at."""
    schedule = {}
    for time, cell, value in observations:
        step = round(time / dt)
        if abs(time - step * dt) > tolerance:
            raise FrameMisalignment(f"observation t={time!r} is not a multiple of dt={dt!r}")
        schedule.setdefault(step, []).append((cell, value))
    return schedule


def load_trajectory(path, cls=Trajectory):
    with open(path, encoding="utf-8") as fh:
        return read_trajectory(fh, cls=cls)


def save_trajectory(trajectory, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        write_trajectory(trajectory, fh)
    logger.info("wrote %d frames to %s", len(trajectory), path)

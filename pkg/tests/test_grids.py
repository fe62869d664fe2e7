import numpy as np
import pytest

from fluxquanta import models
from fluxquanta.fields import FaceField, SpikeField, StateField
from fluxquanta.grids import GridSpec, cfl_max_dt, make_grid
from fluxquanta.models import Boundary, NeuronParams, QuotaParam


def test_make_grid_1d():
    grid = make_grid(GridSpec(1, 1.0, 0.01, 2.5e-4))
    assert grid.nx == 100
    assert grid.shape == (100,)
    assert grid.n_x_faces == 101
    assert grid.n_y_faces == 0
    assert grid.cell_volume == pytest.approx(0.01)
    assert grid.boundary == (Boundary(),)


def test_make_grid_2d():
    grid = make_grid(GridSpec(2, 1.0, 1 / 64, 2.5e-4, 1.0, 1 / 64))
    assert (grid.nx, grid.ny) == (64, 64)
    assert grid.shape == (64, 64)
    assert grid.x_face_shape == (64, 65)
    assert grid.y_face_shape == (65, 64)
    assert grid.n_x_faces == 65 * 64
    assert grid.n_y_faces == 64 * 65
    assert grid.cell_volume == pytest.approx(1 / 64 ** 2)


def test_make_grid_is_pure():
    spec = GridSpec(1, 1.0, 0.01, 2.5e-4)
    assert make_grid(spec) == make_grid(spec)


def test_non_integral_grid():
    with pytest.raises(models.NonIntegralGrid) as exc_info:
        make_grid(GridSpec(1, 1.0, 0.013, 1e-4))
    assert "not integral" in str(exc_info.value)


def test_degenerate_grid():
    with pytest.raises(models.DegenerateGrid):
        make_grid(GridSpec(1, 1.0, 0.5, 1e-4))


@pytest.mark.parametrize("field, value", [
    ("dx", 0.0),
    ("dt", -1e-3),
    ("lx", float("nan")),
])
def test_grid_spec_rejects_non_positive(field, value):
    kwargs = {"dims": 1, "lx": 1.0, "dx": 0.1, "dt": 1e-3}
    kwargs[field] = value
    with pytest.raises(models.ValidationError):
        GridSpec(**kwargs)


def test_grid_spec_2d_needs_y():
    with pytest.raises(models.ValidationError):
        GridSpec(2, 1.0, 0.1, 1e-3)


def test_single_boundary_is_shared_in_2d():
    spec = GridSpec(2, 1.0, 0.1, 1e-3, 1.0, 0.1, (Boundary("periodic"),))
    assert spec.boundary == (Boundary("periodic"), Boundary("periodic"))


def test_cfl_max_dt():
    grid_1d = make_grid(GridSpec(1, 1.0, 0.01, 1e-4))
    assert cfl_max_dt(grid_1d, 0.1) == pytest.approx(5.0e-4)
    grid_2d = make_grid(GridSpec(2, 1.0, 1 / 64, 1e-4, 1.0, 1 / 64))
    assert cfl_max_dt(grid_2d, 0.1) == pytest.approx(6.1035e-4, rel=1e-4)


def test_cfl_max_dt_monotone():
    coarse = make_grid(GridSpec(1, 1.0, 0.02, 1e-4))
    fine = make_grid(GridSpec(1, 1.0, 0.01, 1e-4))
    assert cfl_max_dt(fine, 0.2) < cfl_max_dt(fine, 0.1)
    assert cfl_max_dt(fine, 0.1) < cfl_max_dt(coarse, 0.1)


def test_refined_grid():
    grid = make_grid(GridSpec(1, 1.0, 0.01, 2.5e-4))
    fine = grid.refined(4)
    assert fine.nx == 400
    assert fine.dt == pytest.approx(2.5e-4 / 16)


def test_boundary_rejects_wall_values_unless_dirichlet():
    with pytest.raises(models.ValidationError) as exc_info:
        Boundary("insulated", 1.0, 0.0)
    assert "does not take wall values" in str(exc_info.value)


def test_boundary_unknown_kind():
    with pytest.raises(models.ValidationError):
        Boundary("open")


@pytest.mark.parametrize("boundary", [
    Boundary(),
    Boundary("dirichlet", 0.25, -1.5),
    Boundary("insulated"),
    Boundary("periodic"),
])
def test_boundary_token(boundary):
    assert Boundary.from_token(boundary.as_token()) == boundary


def test_boundary_from_dict_value():
    assert Boundary.from_dict({"kind": "dirichlet", "value": 2.0}) == Boundary("dirichlet", 2.0, 2.0)


@pytest.mark.parametrize("quota", [0.0, -1e-3, float("inf"), "a lot"])
def test_quota_must_be_positive(quota):
    with pytest.raises(models.NonPositiveQuota):
        QuotaParam(quota)


def test_neuron_params_defaults():
    params = NeuronParams()
    assert not params.leak_enabled
    assert params.r_m == 1.0
    assert params.source is None
    assert NeuronParams(source=0.0).source is None


def test_neuron_params_tau_must_be_positive():
    with pytest.raises(models.ValidationError):
        NeuronParams(tau_m=0.0)


def test_state_field_checks_shape():
    grid = make_grid(GridSpec(1, 1.0, 0.1, 1e-3))
    StateField(np.zeros(10)).check(grid)
    with pytest.raises(models.ShapeMismatch):
        StateField(np.zeros(11)).check(grid)


def test_state_field_must_be_finite():
    with pytest.raises(models.ValidationError):
        StateField([0.0, float("nan"), 1.0])


def test_state_field_from_flat_is_row_major():
    grid = make_grid(GridSpec(2, 0.4, 0.1, 1e-3, 0.3, 0.1))
    state = StateField.from_flat(np.arange(12.0), grid)
    assert state.values.shape == (3, 4)
    # x varies fastest
    assert state.values[0, 1] == 1.0
    assert state.values[1, 0] == 4.0


def test_face_field_shapes():
    grid = make_grid(GridSpec(2, 0.4, 0.1, 1e-3, 0.3, 0.1))
    FaceField(np.zeros((3, 5)), np.zeros((4, 4))).check(grid)
    with pytest.raises(models.ShapeMismatch):
        FaceField(np.zeros((3, 5))).check(grid)
    with pytest.raises(models.ShapeMismatch):
        FaceField(np.zeros((3, 5)), np.zeros((4, 5))).check(grid)


def test_spike_field_counts():
    spikes = SpikeField([3, -2, 0, 1])
    assert spikes.n_plus == 4
    assert spikes.n_minus == 2
    assert spikes.n_plus + spikes.n_minus == int(np.abs(spikes.x).sum())
    assert spikes.n_faces == 4

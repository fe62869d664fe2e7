import math

import numpy as np
import pytest

from fluxquanta import models
from fluxquanta.grids import GridSpec, make_grid
from fluxquanta.metrics import total_mass, total_variation
from fluxquanta.models import Boundary
from fluxquanta.oracles import (
    Gaussian, Product2D, Sine, Step, Uniform, analytic, analytic_trajectory,
    fdm_reference, heat1d_analytic, heat2d_analytic,
    initial_condition_from_dict, restrict, sample,
)


def heat_grid(nx=100, dt=2.5e-4, boundary=None):
    return make_grid(GridSpec(1, 1.0, 1.0 / nx, dt, boundary=boundary or ()))


def square_grid(n=64, dt=2.5e-4):
    return make_grid(GridSpec(2, 1.0, 1.0 / n, dt, 1.0, 1.0 / n))


def test_heat1d_at_time_zero_is_the_initial_condition():
    grid = heat_grid()
    np.testing.assert_array_equal(
        heat1d_analytic(Sine(), 0.1, grid, 0.0).values,
        np.sin(math.pi * grid.x_centers),
    )


def test_heat1d_decay_factor():
    grid = heat_grid()
    u0 = sample(Sine(), grid).values
    u = heat1d_analytic(Sine(), 0.1, grid, 0.5).values
    np.testing.assert_allclose(u, u0 * math.exp(-0.1 * math.pi ** 2 * 0.5), rtol=1e-12)
    assert math.exp(-0.1 * math.pi ** 2 * 0.5) == pytest.approx(0.61049, abs=1e-5)


def test_heat1d_higher_mode():
    grid = heat_grid()
    u = heat1d_analytic(Sine(mode=3, amplitude=2.0), 0.1, grid, 0.1).values
    expected = 2.0 * np.sin(3 * math.pi * grid.x_centers) * math.exp(-0.9 * math.pi ** 2 * 0.1)
    np.testing.assert_allclose(u, expected, rtol=1e-12, atol=1e-15)


def test_heat2d_decay_factor():
    grid = square_grid()
    u0 = sample(Product2D(), grid).values
    u = heat2d_analytic(Product2D(), 0.1, grid, 0.8).values
    np.testing.assert_allclose(u, u0 * math.exp(-0.2 * math.pi ** 2 * 0.8), rtol=1e-12)
    assert math.exp(-0.2 * math.pi ** 2 * 0.8) == pytest.approx(0.20615, abs=1e-4)


def test_zero_amplitude_stays_zero():
    assert not heat2d_analytic(Product2D(amplitude=0.0), 0.1, square_grid(), 0.3).values.any()


def test_heat2d_is_symmetric_under_axis_swap():
    grid = square_grid(32)
    a = heat2d_analytic(Product2D(1, 2), 0.1, grid, 0.2).values
    b = heat2d_analytic(Product2D(2, 1), 0.1, grid, 0.2).values
    assert np.array_equal(a, b.T)


@pytest.mark.parametrize("ic, grid", [
    (Gaussian(), heat_grid()),
    (Sine(), heat_grid(boundary=(Boundary("insulated"),))),
    (Sine(), heat_grid(boundary=(Boundary("dirichlet", 1.0, 0.0),))),
    (Sine(), square_grid(16)),
    (Product2D(), heat_grid()),
])
def test_unsupported_closed_forms(ic, grid):
    with pytest.raises(models.UnsupportedIC):
        analytic(ic, 0.1, grid, 0.1)


@pytest.mark.parametrize("ic", [
    Gaussian(center=1.5), Step(edge=0.0), Step(edge=2.0),
])
def test_initial_condition_outside_the_domain(ic):
    with pytest.raises(models.UnsupportedIC):
        sample(ic, heat_grid())


def test_initial_condition_from_dict():
    assert initial_condition_from_dict({"kind": "gaussian", "width": 0.1}) == Gaussian(width=0.1)
    assert initial_condition_from_dict({"kind": "sine"}) == Sine()
    with pytest.raises(models.ValidationError):
        initial_condition_from_dict({"kind": "square"})
    with pytest.raises(models.ValidationError):
        initial_condition_from_dict({"kind": "sine", "mode": 0})


def test_step_and_uniform_sampling():
    grid = heat_grid(10)
    np.testing.assert_array_equal(sample(Step(0.5, 0.0, 1.0), grid).values, [0.0] * 5 + [1.0] * 5)
    np.testing.assert_array_equal(sample(Uniform(0.5), square_grid(8)).values, np.full((8, 8), 0.5))


def test_analytic_trajectory():
    grid = heat_grid()
    traj = analytic_trajectory(Sine(), 0.1, grid, [0, 1000, 2000])
    assert traj.provenance == "analytic"
    assert traj.times == pytest.approx([0.0, 0.25, 0.5])
    np.testing.assert_allclose(traj.final.values, heat1d_analytic(Sine(), 0.1, grid, 0.5).values)


def test_restrict_averages_blocks():
    np.testing.assert_array_equal(restrict(np.arange(8.0), 4, 1), [1.5, 5.5])
    fine = np.arange(16.0).reshape(4, 4)
    np.testing.assert_array_equal(restrict(fine, 2, 2), [[2.5, 4.5], [10.5, 12.5]])


def test_fdm_matches_analytic():
    grid = heat_grid()
    ref = fdm_reference(Sine(), 0.1, grid, 0.5, refinement=4)
    exact = heat1d_analytic(Sine(), 0.1, grid, 0.5).values
    assert ref.provenance == "fdm"
    assert ref.times == pytest.approx([i * 2.5e-4 for i in range(2001)])
    assert np.abs(ref.final.values - exact).max() <= 1e-4


def test_fdm_converges_at_second_order():
    errors = []
    for nx in (50, 100):
        grid = heat_grid(nx)
        ref = fdm_reference(Sine(), 0.1, grid, 0.5, refinement=4, steps=[2000])
        exact = heat1d_analytic(Sine(), 0.1, grid, 0.5).values
        errors.append(np.abs(ref.final.values - exact).max())
    assert 3.5 <= errors[0] / errors[1] <= 4.5


def test_fdm_2d_matches_analytic():
    grid = make_grid(GridSpec(2, 1.0, 0.0625, 5e-3, 1.0, 0.0625))
    ref = fdm_reference(Product2D(), 0.1, grid, 0.1, refinement=2, steps=[0, 20])
    exact = heat2d_analytic(Product2D(), 0.1, grid, 0.1).values
    assert len(ref) == 2
    assert np.abs(ref.final.values - exact).max() <= 1e-2


def test_fdm_stride_records_final_step():
    ref = fdm_reference(Sine(), 0.1, heat_grid(), 0.25, stride=300)
    assert [round(t / 2.5e-4) for t in ref.times] == [0, 300, 600, 900, 1000]


def test_fdm_uniform_insulated_is_constant():
    grid = heat_grid(20, boundary=(Boundary("insulated"),))
    ref = fdm_reference(Uniform(0.7), 0.1, grid, 0.05, stride=50)
    for frame in ref:
        np.testing.assert_allclose(frame.values, 0.7, rtol=0, atol=1e-15)


def test_fdm_insulated_conserves_mass():
    grid = heat_grid(boundary=(Boundary("insulated"),))
    ref = fdm_reference(Gaussian(0.3, 0.05), 0.1, grid, 0.05, stride=20)
    m0 = total_mass(ref.initial, grid)
    for frame in ref:
        assert abs(total_mass(frame.state, grid) - m0) <= 1e-12 * m0


def test_fdm_step_total_variation_does_not_grow():
    grid = heat_grid()
    ref = fdm_reference(Step(), 0.1, grid, 0.1, stride=10)
    variation = [total_variation(frame.state, grid) for frame in ref]
    for before, after in zip(variation, variation[1:]):
        assert after <= before + 1e-12


def test_fdm_is_deterministic():
    grid = heat_grid(40)
    a = fdm_reference(Gaussian(), 0.1, grid, 0.01, stride=4)
    b = fdm_reference(Gaussian(), 0.1, grid, 0.01, stride=4)
    assert all(np.array_equal(x.values, y.values) for x, y in zip(a, b))


def test_fdm_rejects_bad_refinement():
    with pytest.raises(models.ValidationError):
        fdm_reference(Sine(), 0.1, heat_grid(), 0.01, refinement=1)


def test_fdm_rejects_unstable_fine_step():
    with pytest.raises(models.CFLViolation):
        fdm_reference(Sine(), 0.1, heat_grid(dt=1e-3), 0.01)


def test_fdm_rejects_misaligned_end_time():
    with pytest.raises(models.ValidationError):
        fdm_reference(Sine(), 0.1, heat_grid(), 0.0101)

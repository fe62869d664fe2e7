import math

import numpy as np
import pytest

from fluxquanta import models
from fluxquanta.fields import FaceField, SpikeField, StateField
from fluxquanta.flux import Constant, compute_physical_flux
from fluxquanta.grids import GridSpec, make_grid
from fluxquanta.models import Boundary, QuotaParam
from fluxquanta.projector import (
    count_spikes, quantize, reconstruct, round_half_away, sparsity,
)


@pytest.mark.parametrize("flux, quota, expected", [
    (0.37, 0.1, 4),
    (0.0, 0.1, 0),
    (0.0, 1e-9, 0),
    (-0.05, 0.1, -1),
    (0.05, 0.1, 1),
    (-0.37, 0.1, -4),
])
def test_quantize_examples(flux, quota, expected):
    spikes = quantize(FaceField([flux]), QuotaParam(quota))
    assert spikes.x.dtype == np.int64
    assert spikes.x[0] == expected


def test_round_half_away():
    values = np.array([-2.5, -1.5, -0.5, 0.5, 1.5, 2.5, 0.49999999999999994])
    assert round_half_away(values).tolist() == [-3, -2, -1, 1, 2, 3, 0]


def test_reconstruct_examples():
    assert reconstruct(SpikeField([4]), 0.1).x[0] == pytest.approx(0.4)
    for quota in (1e-6, 0.1, 3.0):
        assert not reconstruct(SpikeField([0, 0]), quota).x.any()


def test_quantize_rejects_bad_quota():
    with pytest.raises(models.NonPositiveQuota):
        quantize(FaceField([1.0]), 0.0)


def test_quota_too_small():
    with pytest.raises(models.QuotaTooSmall):
        quantize(FaceField([1.0]), 1e-17)


def test_quota_too_small_when_ratio_overflows():
    with pytest.raises(models.QuotaTooSmall):
        quantize(FaceField([1e300, 1.0, 0.0]), 1e-10)


def test_non_finite_flux_is_numeric_error():
    with pytest.raises(models.NumericError):
        quantize(FaceField([np.inf, 1.0]), 1e-3)


def test_error_bound_on_random_fields():
    rng = np.random.default_rng(20240601)
    flux = FaceField(rng.standard_normal(10_000) * 10.0 ** rng.uniform(-3, 2, 10_000))
    for quota in (1e-3, 0.1, 0.7):
        discrete = reconstruct(quantize(flux, quota), quota)
        assert (np.abs(discrete.x - flux.x) <= quota / 2).all()


def test_oddness_is_bitwise():
    rng = np.random.default_rng(7)
    x = rng.standard_normal(10_000)
    # exact ties
    x[:100] = (np.arange(100) + 0.5) * 0.25
    flux = FaceField(x)
    for quota in (0.25, 1e-2, 3.3):
        assert quantize(-flux, quota) == SpikeField(-quantize(flux, quota).x)


def test_monotone_sparsification():
    rng = np.random.default_rng(13)
    flux = FaceField(rng.standard_normal(1000), rng.standard_normal(500))
    quotas = [1e-3, 1e-2, 3e-2, 0.1, 1.0]
    counts = [count_spikes(quantize(flux, q)) for q in quotas]
    for q1, q2 in zip(quotas, quotas[1:]):
        n1, n2 = quantize(flux, q1), quantize(flux, q2)
        assert (np.abs(n1.x) >= np.abs(n2.x)).all()
        assert (np.abs(n1.y) >= np.abs(n2.y)).all()
    assert counts == sorted(counts, reverse=True)


def test_reconstruct_then_quantize_power_of_two():
    rng = np.random.default_rng(17)
    spikes = SpikeField(rng.integers(-10_000, 10_000, 1000))
    for quota in (2.0 ** -10, 0.5, 8.0):
        assert quantize(reconstruct(spikes, quota), quota) == spikes
    # other quotas are off by at most one ulp, which the rounding absorbs
    assert quantize(reconstruct(spikes, 0.1), 0.1) == spikes


def test_count_spikes():
    assert count_spikes(SpikeField([3, -2, 0])) == 5
    assert count_spikes(SpikeField(np.zeros(7))) == 0


def test_count_spikes_sine_profile():
    grid = make_grid(GridSpec(1, 1.0, 0.01, 2.5e-4))
    state = StateField(np.sin(math.pi * grid.x_centers))
    flux = compute_physical_flux(state, grid, Constant(0.1))
    expected = sum(abs(round_half_away(f / 1e-3)) for f in flux.x.tolist())
    assert count_spikes(quantize(flux, 1e-3)) == expected
    # about sum |F| / quota, with |F| close to 0.1*pi*|cos(pi x)|
    assert expected == pytest.approx(101 * 0.1 * 2 / 1e-3, rel=0.02)


def test_sparsity():
    assert sparsity(SpikeField(np.zeros(5))) == 1.0
    assert sparsity(SpikeField([1, -1, 2])) == 0.0
    assert sparsity(SpikeField([3, 0, 0, -1])) == 0.5


def test_periodic_alias_face_counted_once():
    grid = make_grid(GridSpec(1, 0.3, 0.1, 1e-3, boundary=(Boundary("periodic"),)))
    spikes = SpikeField([2, 0, 1, 2])
    assert count_spikes(spikes) == 5
    assert count_spikes(spikes, grid) == 3
    assert sparsity(spikes, grid) == pytest.approx(1 / 3)

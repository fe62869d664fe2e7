"""Spike projector: continuous face fluxes <-> signed integer spike counts.

Quantization rounds half away from zero, which is odd-symmetric:
``quantize(-F) == -quantize(F)`` holds bit for bit.
"""
import numpy as np

from .fields import FaceField, SpikeField
from .models import NumericError, QuotaParam, QuotaTooSmall

#: Largest spike count per face that still converts to float64 exactly.
MAX_QUANTA = 2 ** 53


def _quota_value(quota):
    if isinstance(quota, QuotaParam):
        return quota.quota
    return QuotaParam(quota).quota


def round_half_away(x):
    """Round to the nearest integer, ties away from zero.

    ``x - trunc(x)`` is exact in binary floating point, so the tie test never
    sees a rounded fraction.
    """
    whole = np.trunc(x)
    frac = x - whole
    return whole + np.sign(frac) * (np.abs(frac) >= 0.5)


def _quantize_array(flux, quota):
    if not np.isfinite(flux).all():
        raise NumericError("face flux is not finite")
    with np.errstate(over="ignore", invalid="ignore"):
        n = round_half_away(flux / quota)
    if n.size and (not np.isfinite(n).all() or np.abs(n).max() > MAX_QUANTA):
        raise QuotaTooSmall(
            f"quota {quota!r} needs more than 2**53 quanta on one face"
        )
    return n.astype(np.int64)


def quantize(flux, quota):
    """Number of flux quanta per face, ``round(F / quota)``."""
    q = _quota_value(quota)
    if flux.y is None:
        return SpikeField(_quantize_array(flux.x, q))
    return SpikeField(_quantize_array(flux.x, q), _quantize_array(flux.y, q))


def reconstruct(spikes, quota):
    """Discrete flux carried by the spikes, ``n * quota``."""
    q = _quota_value(quota)
    if spikes.y is None:
        return FaceField(spikes.x * q)
    return FaceField(spikes.x * q, spikes.y * q)


def _interfaces(spikes, grid):
    """Spike arrays with the duplicate face of every periodic axis dropped."""
    if grid is None:
        return spikes.arrays()
    out = []
    for arr, boundary, axis in zip(spikes.arrays(), grid.boundary, (-1, 0)):
        if boundary.is_periodic:
            arr = np.delete(arr, -1, axis=axis)
        out.append(arr)
    return out


def count_spikes(spikes, grid=None):
    """Total number of spike events, ``sum |n|`` over all faces.

    With a ``grid`` the wrap-around face of a periodic axis, which is stored
    twice, is counted once.
    """
    return sum(int(np.abs(a).sum()) for a in _interfaces(spikes, grid))


def sparsity(spikes, grid=None):
    """Fraction of faces that carry no spike."""
    arrays = _interfaces(spikes, grid)
    faces = sum(a.size for a in arrays)
    if faces == 0:
        return 1.0
    silent = sum(int(np.count_nonzero(a == 0)) for a in arrays)
    return silent / faces

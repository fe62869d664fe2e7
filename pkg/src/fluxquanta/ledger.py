"""Mass bookkeeping.

Every change of total mass is posted to a :class:`ConservationLedger`: flux
through the domain walls, sources (including assimilated observations) and
the optional leak. With all of them accounted for, the current mass minus
the ledger balance is pure round-off.
"""
import math

from dataclasses import dataclass, field

import numpy as np

from .models import NumericError


class KahanSum:
    """Running compensated sum.

    Keeps a carry of the low-order bits lost by each addition, so that long
    series of small increments do not drift.
    """

    def __init__(self, value=0.0):
        self.sum = float(value)
        self.carry = 0.0

    def add(self, value):
        value = float(value) - self.carry
        total = self.sum + value
        self.carry = (total - self.sum) - value
        self.sum = total
        return self

    def __float__(self):
        return self.sum

    def __repr__(self):
        return f"KahanSum({self.sum!r})"


def total(values):
    """Deterministic, correctly rounded sum of an array in flat order."""
    try:
        return math.fsum(values.reshape(-1).tolist())
    except OverflowError as e:
        raise NumericError(f"sum overflows: {e}")


@dataclass
class ConservationLedger:
    mass_initial: float
    boundary_in: KahanSum = field(default_factory=KahanSum)
    boundary_out: KahanSum = field(default_factory=KahanSum)
    source_accum: KahanSum = field(default_factory=KahanSum)
    leak_accum: KahanSum = field(default_factory=KahanSum)

    def post_boundary(self, inflow, outflow):
        """Record mass that entered and left through the walls.

        Both arguments are non-negative amounts of mass.
        """
        self.boundary_in.add(inflow)
        self.boundary_out.add(outflow)

    def post_source(self, amount):
        self.source_accum.add(amount)

    def post_leak(self, amount):
        self.leak_accum.add(amount)

    @property
    def boundary_net(self):
        return self.boundary_in.sum - self.boundary_out.sum

    @property
    def expected_mass(self):
        return total(np.array([
            self.mass_initial,
            self.boundary_in.sum, -self.boundary_out.sum,
            self.source_accum.sum, self.leak_accum.sum,
        ]))

    def residual(self, mass_now):
        """Mass not explained by the posted exchanges."""
        return mass_now - self.expected_mass

    def relative_residual(self, mass_now, eps=1e-30):
        return abs(self.residual(mass_now)) / max(abs(self.mass_initial), eps)

    def is_finite(self):
        return all(math.isfinite(float(acc)) for acc in (
            self.boundary_in, self.boundary_out,
            self.source_accum, self.leak_accum,
        ))

    def as_dict(self):
        return {
            "mass_initial": self.mass_initial,
            "boundary_in": self.boundary_in.sum,
            "boundary_out": self.boundary_out.sum,
            "source_accum": self.source_accum.sum,
            "leak_accum": self.leak_accum.sum,
        }

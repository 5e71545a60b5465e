"""Collapse timescales and the N-component energy bound.

``tau = h / dE``. A vanishing ``dE`` means the superposition never collapses;
that case is carried as ``tau is None`` with ``stable=True`` rather than as a
float infinity so reports stay serialisable.

The N-component bound for a particle of mass ``m`` and radius ``a`` whose
branches sit on a shell of radius ``r`` is

    bound = G n (n - 1) m_c^2 / (2 r) + (3 n / 5) G m_c^2 / a

with ``m_c = m`` under :attr:`MassConvention.FULL_MASS_PER_COMPONENT` and
``m_c = m / n`` under :attr:`MassConvention.BORN_WEIGHTED`. It is compared
against the coincident self-energy ``(3/5) G m^2 / a`` of the single particle.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional, Union

from .energy import DeltaE
from .units import CONSTANTS, DENSITY, ENERGY, LENGTH, MASS, TIME, Quantity


class MassConvention(enum.Enum):
    FULL_MASS_PER_COMPONENT = "full"
    BORN_WEIGHTED = "born"


@dataclass(frozen=True)
class CollapseEstimate:
    delta_e: Union[DeltaE, Quantity]
    tau: Optional[Quantity]

    @property
    def energy(self) -> Quantity:
        return self.delta_e.value if isinstance(self.delta_e, DeltaE) else self.delta_e

    @property
    def stable(self) -> bool:
        return self.tau is None


def collapse_time(delta_e: Union[DeltaE, Quantity]) -> CollapseEstimate:
    energy = delta_e.value if isinstance(delta_e, DeltaE) else delta_e
    e = energy.to(ENERGY)
    if e < 0.0:
        raise ValueError(f"instability energy must be nonnegative, got {e!r} J")
    if e == 0.0:
        return CollapseEstimate(delta_e, None)
    tau = CONSTANTS.planck_h / energy
    tau.to(TIME)
    return CollapseEstimate(delta_e, tau)


def size_scaling_tau(a_factor: float, density: Quantity, a0: Quantity) -> float:
    """tau(a_factor * a0) / tau(a0) for a particle of fixed density.

    Uses dE = G m^2 / a with m = (4/3) pi a^3 rho; the exact answer is
    ``a_factor ** -5``.
    """
    if not (a_factor > 0.0 and math.isfinite(a_factor)):
        raise ValueError("a_factor must be positive")
    density.to(DENSITY)
    a0.to(LENGTH)

    def tau(a: Quantity) -> Quantity:
        m = (4.0 / 3.0) * math.pi * a**3 * density
        return collapse_time(CONSTANTS.G * m**2 / a).tau

    return float(tau(a0 * a_factor) / tau(a0))


@dataclass(frozen=True)
class NComponentReport:
    n: int
    r: Quantity
    a: Quantity
    mass_convention: MassConvention
    bound: Quantity
    coincident_self_energy: Quantity

    @property
    def violation_ratio(self) -> float:
        return float(self.bound / self.coincident_self_energy)


def n_component_bound(
    n: int,
    m: Quantity,
    r: Quantity,
    a: Quantity,
    convention: MassConvention = MassConvention.FULL_MASS_PER_COMPONENT,
) -> NComponentReport:
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise ValueError("n must be an integer >= 1")
    if m.to(MASS) <= 0.0:
        raise ValueError("mass must be positive")
    if r.to(LENGTH) <= 0.0 or a.to(LENGTH) <= 0.0:
        raise ValueError("r and a must be positive")
    G = CONSTANTS.G
    m_c = m if convention is MassConvention.FULL_MASS_PER_COMPONENT else m / n
    pair_term = G * (n * (n - 1)) * m_c**2 / (2.0 * r)
    self_term = (3.0 * n / 5.0) * G * m_c**2 / a
    return NComponentReport(
        n=n,
        r=r,
        a=a,
        mass_convention=convention,
        bound=pair_term + self_term,
        coincident_self_energy=0.6 * G * m**2 / a,
    )


def conservation_violation_curve(
    n_max: int,
    m: Quantity,
    r: Quantity,
    a: Quantity,
    convention: MassConvention = MassConvention.FULL_MASS_PER_COMPONENT,
) -> list[tuple[int, float]]:
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    return [
        (n, n_component_bound(n, m, r, a, convention).violation_ratio)
        for n in range(1, n_max + 1)
    ]


def born_ratio_limit(r: Quantity, a: Quantity) -> float:
    """Large-n limit of the Born-weighted violation ratio: 5 a / (6 r)."""
    return float(5.0 * a / (6.0 * r))

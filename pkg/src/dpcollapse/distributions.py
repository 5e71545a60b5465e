"""Parametric mass/charge densities and the superposition data model.

A :class:`DistributionModel` describes one material particle: a shape
(point, uniform sphere of radius ``a`` or isotropic Gaussian of width
``sigma``), its total mass and optionally its total charge. The charge density
has the same geometry as the mass density, scaled by charge/mass.

Positions accepted by the functions here are 3-vectors, either a sequence of
length :class:`~dpcollapse.units.Quantity` objects or plain numbers taken to
be metres. Numeric work is done in SI floats with numpy.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import erf

from .units import (
    CHARGE,
    DENSITY,
    LENGTH,
    MASS,
    SPECIFIC_ENERGY,
    G,
    Quantity,
)


class UnsupportedOperation(ValueError):
    """The operation is not defined for this distribution shape."""


class SingularityError(ValueError):
    """Evaluation hit the 1/r singularity of a point source."""


class Shape(enum.Enum):
    POINT = "point"
    UNIFORM_SPHERE = "sphere"
    GAUSSIAN = "gaussian"


@dataclass(frozen=True)
class DistributionModel:
    shape: Shape
    total_mass: Quantity
    size: Optional[Quantity] = None
    total_charge: Optional[Quantity] = None

    def __post_init__(self):
        if self.total_mass.to(MASS) <= 0.0:
            raise ValueError("total_mass must be positive")
        if self.shape is Shape.POINT:
            if self.size is not None:
                raise ValueError("a point distribution has no size")
        elif self.size is None or self.size.to(LENGTH) <= 0.0:
            raise ValueError(f"{self.shape.value} requires a positive size")
        if self.total_charge is not None:
            self.total_charge.to(CHARGE)

    @classmethod
    def point(cls, mass: Quantity, charge: Quantity | None = None) -> DistributionModel:
        return cls(Shape.POINT, mass, None, charge)

    @classmethod
    def uniform_sphere(
        cls, radius: Quantity, mass: Quantity, charge: Quantity | None = None
    ) -> DistributionModel:
        return cls(Shape.UNIFORM_SPHERE, mass, radius, charge)

    @classmethod
    def gaussian(
        cls, sigma: Quantity, mass: Quantity, charge: Quantity | None = None
    ) -> DistributionModel:
        return cls(Shape.GAUSSIAN, mass, sigma, charge)

    @property
    def mass_kg(self) -> float:
        return self.total_mass.value

    @property
    def charge_c(self) -> float | None:
        return None if self.total_charge is None else self.total_charge.value

    @property
    def size_m(self) -> float:
        """Radius or sigma in metres; 0 for a point."""
        return 0.0 if self.size is None else self.size.value

    @property
    def is_extended(self) -> bool:
        return self.shape is not Shape.POINT

    def with_charge(self, charge: Quantity | None) -> DistributionModel:
        return DistributionModel(self.shape, self.total_mass, self.size, charge)

    def with_mass(self, mass: Quantity) -> DistributionModel:
        return DistributionModel(self.shape, mass, self.size, self.total_charge)

    def scaled_lengths(self, factor: float) -> DistributionModel:
        if self.size is None:
            return self
        return DistributionModel(self.shape, self.total_mass, self.size * factor, self.total_charge)


def as_metres(r) -> np.ndarray:
    """Normalise a 3-vector of lengths to a float array in metres."""
    if isinstance(r, np.ndarray):
        out = np.asarray(r, dtype=float)
    else:
        r = list(r)
        out = np.array(
            [c.to(LENGTH) if isinstance(c, Quantity) else float(c) for c in r], dtype=float
        )
    if out.shape != (3,):
        raise ValueError(f"expected a 3-vector, got shape {out.shape}")
    if not np.all(np.isfinite(out)):
        raise ValueError("position components must be finite")
    return out


def _erf_over_x(x: np.ndarray) -> np.ndarray:
    """erf(x)/x with the x -> 0 limit 2/sqrt(pi)."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1e-4
    safe = np.where(small, 1.0, x)
    series = (2.0 / math.sqrt(math.pi)) * (1.0 - x * x / 3.0 + x**4 / 10.0)
    return np.where(small, series, erf(safe) / safe)


def density_at(model: DistributionModel, r) -> Quantity:
    if model.shape is Shape.POINT:
        raise UnsupportedOperation("a point mass has no pointwise density")
    rr = float(np.linalg.norm(as_metres(r)))
    m, s = model.mass_kg, model.size_m
    if model.shape is Shape.UNIFORM_SPHERE:
        value = 3.0 * m / (4.0 * math.pi * s**3) if rr <= s else 0.0
    else:
        value = m * (2.0 * math.pi * s * s) ** -1.5 * math.exp(-rr * rr / (2.0 * s * s))
    return Quantity(value, DENSITY)


def potential_radial(model: DistributionModel, r: np.ndarray) -> np.ndarray:
    """Vectorised gravitational potential (J/kg) at radial distances ``r`` (m)."""
    r = np.asarray(r, dtype=float)
    gm = G.value * model.mass_kg
    if model.shape is Shape.POINT:
        if np.any(r == 0.0):
            raise SingularityError("potential of a point mass at r = 0")
        return -gm / r
    a = model.size_m
    if model.shape is Shape.UNIFORM_SPHERE:
        inside = -gm * (3.0 * a * a - r * r) / (2.0 * a**3)
        with np.errstate(divide="ignore"):
            outside = -gm / np.where(r > 0.0, r, 1.0)
        return np.where(r < a, inside, outside)
    k = 1.0 / (a * math.sqrt(2.0))
    return -gm * k * _erf_over_x(r * k)


def potential_at(model: DistributionModel, r) -> Quantity:
    rr = float(np.linalg.norm(as_metres(r)))
    return Quantity(float(potential_radial(model, np.array(rr))), SPECIFIC_ENERGY)


def sample_unit_points(shape: Shape, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``n`` points from the shape with unit size, centred at the origin."""
    if shape is Shape.GAUSSIAN:
        return rng.standard_normal((n, 3))
    if shape is Shape.UNIFORM_SPHERE:
        direction = rng.standard_normal((n, 3))
        direction /= np.linalg.norm(direction, axis=1, keepdims=True)
        radius = rng.random(n) ** (1.0 / 3.0)
        return direction * radius[:, None]
    raise UnsupportedOperation("cannot sample a point distribution")


def sample_points(model: DistributionModel, n: int, seed: int) -> np.ndarray:
    """I.i.d. samples (metres, shape ``(n, 3)``) from the normalised density."""
    if n <= 0:
        raise ValueError("n must be positive")
    if not model.is_extended:
        raise UnsupportedOperation("cannot sample a point distribution")
    rng = np.random.default_rng(seed)
    return model.size_m * sample_unit_points(model.shape, n, rng)


@dataclass(frozen=True)
class ComponentPlacement:
    center: tuple[Quantity, Quantity, Quantity]
    weight: complex

    def __post_init__(self):
        if len(self.center) != 3:
            raise ValueError("center must be a 3-vector")
        for c in self.center:
            c.to(LENGTH)
        w = abs(complex(self.weight))
        if not (0.0 < w <= 1.0 + 1e-12):
            raise ValueError(f"weight modulus must lie in (0, 1], got {w}")

    @classmethod
    def at(cls, x: float, y: float = 0.0, z: float = 0.0, weight: complex = 1.0):
        """Placement from coordinates in metres."""
        return cls(tuple(Quantity(v, LENGTH) for v in (x, y, z)), weight)

    @property
    def center_m(self) -> np.ndarray:
        return as_metres(self.center)

    @property
    def probability(self) -> float:
        return abs(complex(self.weight)) ** 2


@dataclass(frozen=True)
class SuperpositionSpec:
    """Superposition of one particle over ``N >= 2`` branch locations."""

    base: DistributionModel
    components: tuple[ComponentPlacement, ...]

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        if len(self.components) < 2:
            raise ValueError("a superposition needs at least two components")
        total = sum(c.probability for c in self.components)
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"sum of |weight|^2 must be 1, got {total!r}")

    @classmethod
    def two_branch(
        cls, base: DistributionModel, separation: float, a: complex = None, b: complex = None
    ) -> SuperpositionSpec:
        """Two branches on the x-axis, ``separation`` metres apart.

        Amplitudes default to 1/sqrt(2) each.
        """
        if a is None and b is None:
            a = b = 1.0 / math.sqrt(2.0)
        elif b is None:
            b = math.sqrt(1.0 - abs(a) ** 2)
        elif a is None:
            a = math.sqrt(1.0 - abs(b) ** 2)
        half = 0.5 * separation
        return cls(base, (ComponentPlacement.at(-half, weight=a), ComponentPlacement.at(half, weight=b)))

    @classmethod
    def shell(cls, base: DistributionModel, n: int, radius: float) -> SuperpositionSpec:
        """``n`` equal-amplitude branches on a Fibonacci lattice of ``radius`` metres."""
        if n < 2:
            raise ValueError("a superposition needs at least two components")
        k = np.arange(n) + 0.5
        polar = np.arccos(1.0 - 2.0 * k / n)
        azim = math.pi * (1.0 + math.sqrt(5.0)) * k
        pts = radius * np.column_stack(
            [np.sin(polar) * np.cos(azim), np.sin(polar) * np.sin(azim), np.cos(polar)]
        )
        w = 1.0 / math.sqrt(n)
        return cls(base, tuple(ComponentPlacement.at(*p, weight=w) for p in pts))

    @property
    def n(self) -> int:
        return len(self.components)

    def separations(self) -> np.ndarray:
        c = np.array([p.center_m for p in self.components])
        return np.linalg.norm(c[:, None, :] - c[None, :, :], axis=-1)

    def scaled_lengths(self, factor: float) -> SuperpositionSpec:
        comps = tuple(
            ComponentPlacement.at(*(p.center_m * factor), weight=p.weight) for p in self.components
        )
        return SuperpositionSpec(self.base.scaled_lengths(factor), comps)

    def with_base(self, base: DistributionModel) -> SuperpositionSpec:
        return SuperpositionSpec(base, self.components)

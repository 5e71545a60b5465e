"""Dimension-checked physical quantities and the constants used by the package.

Everything is SI internally. A :class:`Dimension` is an integer exponent
vector over (kg, m, s, A); a :class:`Quantity` pairs a finite float with one.
Display units such as eV are formatting concerns handled by
:func:`convert_to_eV` and the report layer.

>>> G * (1.0 * KILOGRAM) ** 2 / (1.0 * METRE)
Quantity(value=6.6743e-11, dim=Dimension(mass=1, length=2, time=-2, current=0))
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union


class UnitsError(ValueError):
    """Base class for errors raised by this module."""


class DimensionError(UnitsError):
    """Operands have incompatible dimensions."""


class NonFiniteError(UnitsError):
    """A value is (or an operation produced) NaN or infinity."""


@dataclass(frozen=True)
class Dimension:
    mass: int = 0
    length: int = 0
    time: int = 0
    current: int = 0

    def __post_init__(self):
        for name in ("mass", "length", "time", "current"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, int):
                raise TypeError(f"dimension exponent {name!r} must be int, got {v!r}")

    @property
    def exponents(self) -> tuple[int, int, int, int]:
        return (self.mass, self.length, self.time, self.current)

    def __mul__(self, other: Dimension) -> Dimension:
        return Dimension(*(a + b for a, b in zip(self.exponents, other.exponents)))

    def __truediv__(self, other: Dimension) -> Dimension:
        return Dimension(*(a - b for a, b in zip(self.exponents, other.exponents)))

    def __pow__(self, n: int) -> Dimension:
        if isinstance(n, bool) or not isinstance(n, int):
            raise TypeError("dimensions can only be raised to integer powers")
        return Dimension(*(a * n for a in self.exponents))

    @property
    def is_dimensionless(self) -> bool:
        return self.exponents == (0, 0, 0, 0)

    def symbol(self) -> str:
        """Compact SI rendering, e.g. ``kg m^2 s^-2``."""
        parts = []
        for sym, e in zip(("kg", "m", "s", "A"), self.exponents):
            if e == 1:
                parts.append(sym)
            elif e:
                parts.append(f"{sym}^{e}")
        return " ".join(parts) or "1"


DIMENSIONLESS = Dimension()
MASS = Dimension(mass=1)
LENGTH = Dimension(length=1)
TIME = Dimension(time=1)
CURRENT = Dimension(current=1)
CHARGE = CURRENT * TIME
VELOCITY = LENGTH / TIME
ACCELERATION = VELOCITY / TIME
FORCE = MASS * ACCELERATION
ENERGY = FORCE * LENGTH
ACTION = ENERGY * TIME
DENSITY = MASS / LENGTH**3
SPECIFIC_ENERGY = ENERGY / MASS  # J/kg, gravitational potential
PERMITTIVITY = CHARGE**2 / (ENERGY * LENGTH)


def _check_finite(value: float) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise NonFiniteError(f"non-finite quantity value: {value!r}")
    return value


Scalar = Union[int, float]


@dataclass(frozen=True)
class Quantity:
    """A finite real value carrying an SI dimension.

    Plain numbers mix in as dimensionless quantities. Any operation that would
    produce NaN or infinity raises :class:`NonFiniteError` instead.
    """

    value: float
    dim: Dimension = DIMENSIONLESS

    def __post_init__(self):
        object.__setattr__(self, "value", _check_finite(self.value))
        if not isinstance(self.dim, Dimension):
            raise TypeError(f"dim must be a Dimension, got {type(self.dim).__name__}")

    @staticmethod
    def _coerce(other) -> Quantity:
        if isinstance(other, Quantity):
            return other
        if isinstance(other, (int, float)) and not isinstance(other, bool):
            return Quantity(other)
        return NotImplemented

    def _same_dim(self, other: Quantity, op: str) -> None:
        if self.dim != other.dim:
            raise DimensionError(
                f"cannot {op} [{self.dim.symbol()}] and [{other.dim.symbol()}]"
            )

    def _arith(self, value: float) -> float:
        # float overflow yields inf silently; make it loud
        return _check_finite(value)

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        self._same_dim(other, "add")
        return Quantity(self._arith(self.value + other.value), self.dim)

    __radd__ = __add__

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        self._same_dim(other, "subtract")
        return Quantity(self._arith(self.value - other.value), self.dim)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other - self

    def __neg__(self):
        return Quantity(-self.value, self.dim)

    def __abs__(self):
        return Quantity(abs(self.value), self.dim)

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return Quantity(self._arith(self.value * other.value), self.dim * other.dim)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if other.value == 0.0:
            raise NonFiniteError("division by a zero quantity")
        return Quantity(self._arith(self.value / other.value), self.dim / other.dim)

    def __rtruediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other / self

    def __pow__(self, n: int):
        if isinstance(n, bool) or not isinstance(n, int):
            raise TypeError("quantities can only be raised to integer powers")
        if n < 0 and self.value == 0.0:
            raise NonFiniteError("zero quantity raised to a negative power")
        try:
            value = self.value**n
        except OverflowError as exc:
            raise NonFiniteError(str(exc)) from None
        return Quantity(self._arith(value), self.dim**n)

    def _cmp_value(self, other) -> float:
        other = self._coerce(other)
        if other is NotImplemented:
            raise TypeError(f"cannot compare Quantity with {type(other).__name__}")
        self._same_dim(other, "compare")
        return other.value

    def __lt__(self, other):
        return self.value < self._cmp_value(other)

    def __le__(self, other):
        return self.value <= self._cmp_value(other)

    def __gt__(self, other):
        return self.value > self._cmp_value(other)

    def __ge__(self, other):
        return self.value >= self._cmp_value(other)

    def __float__(self):
        if not self.dim.is_dimensionless:
            raise DimensionError(f"cannot convert [{self.dim.symbol()}] to float")
        return self.value

    def to(self, dim: Dimension) -> float:
        """Return the SI magnitude after asserting the dimension is ``dim``."""
        if self.dim != dim:
            raise DimensionError(f"expected [{dim.symbol()}], got [{self.dim.symbol()}]")
        return self.value

    def __str__(self):
        return f"{self.value:.6g} {self.dim.symbol()}"


def quantity(value: Scalar, dim: Dimension = DIMENSIONLESS) -> Quantity:
    return Quantity(value, dim)


def mul(a: Quantity, b: Quantity) -> Quantity:
    return a * b


def div(a: Quantity, b: Quantity) -> Quantity:
    return a / b


def power(a: Quantity, n: int) -> Quantity:
    return a**n


KILOGRAM = Quantity(1.0, MASS)
METRE = Quantity(1.0, LENGTH)
SECOND = Quantity(1.0, TIME)
AMPERE = Quantity(1.0, CURRENT)
COULOMB = Quantity(1.0, CHARGE)
JOULE = Quantity(1.0, ENERGY)
NEWTON = Quantity(1.0, FORCE)


@dataclass(frozen=True)
class Constants:
    """Fundamental constants (SI)."""

    G: Quantity
    epsilon0: Quantity
    elementary_charge: Quantity
    planck_h: Quantity
    electronvolt: Quantity
    version: str

    @property
    def coulomb_constant(self) -> Quantity:
        """1/(4 pi epsilon0), in J m / C^2."""
        return 1.0 / (4.0 * math.pi * self.epsilon0)


CODATA_2018 = Constants(
    G=Quantity(6.67430e-11, LENGTH**3 / (MASS * TIME**2)),
    epsilon0=Quantity(8.8541878128e-12, PERMITTIVITY),
    elementary_charge=Quantity(1.602176634e-19, CHARGE),
    planck_h=Quantity(6.62607015e-34, ACTION),
    electronvolt=Quantity(1.602176634e-19, ENERGY),
    version="CODATA 2018",
)

CONSTANTS = CODATA_2018
G = CONSTANTS.G
EPSILON0 = CONSTANTS.epsilon0
E_CHARGE = CONSTANTS.elementary_charge
PLANCK_H = CONSTANTS.planck_h
ELECTRONVOLT = CONSTANTS.electronvolt


def convert_to_eV(e: Quantity) -> float:
    return e.to(ENERGY) / ELECTRONVOLT.value


def from_eV(value: float) -> Quantity:
    return Quantity(value * ELECTRONVOLT.value, ENERGY)

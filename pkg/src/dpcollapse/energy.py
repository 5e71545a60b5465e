"""Coulomb-kernel bilinear form and the superposition instability energy.

The central object is

    I[rho_a, rho_b] = integral integral rho_a(x) rho_b(y) / |x - y| d3x d3y

evaluated either in closed form (:func:`coulomb_form`) or by paired Monte
Carlo sampling (:func:`coulomb_form_mc`). The instability energy of a
two-branch superposition is

    dE = convention_factor * coupling * (I11 + I22 - 2 I12)

with coupling ``G`` for gravity and ``1/(4 pi eps0)`` for electrostatics.
The default ``convention_factor`` of 1/2 makes ``dE`` the self-energy of the
difference density, the same convention in which a uniform sphere has
self-energy ``(3/5) G m^2 / a`` (:func:`self_energy`). Pass ``4 * pi`` for the
literal prefactor of the density-form functional, or 1 for the bare norm.
"""
from __future__ import annotations

import enum
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .distributions import (
    DistributionModel,
    Shape,
    SingularityError,
    SuperpositionSpec,
    _erf_over_x,
    as_metres,
    sample_unit_points,
)
from .units import (
    CHARGE,
    DIMENSIONLESS,
    ENERGY,
    FORCE,
    LENGTH,
    MASS,
    CONSTANTS,
    Quantity,
)

DEFAULT_CONVENTION = 0.5
DEFAULT_SAMPLES = 1_000_000
DEFAULT_SEED = 20210331
MC_PARTITIONS = 16
MIN_MC_SAMPLES = 1_000

SeedLike = Union[int, Sequence[int]]


class Interaction(enum.Enum):
    GRAVITY = "gravity"
    ELECTROMAGNETIC = "electromagnetic"


class Method(enum.Enum):
    CLOSED_FORM = "closed_form"
    MONTE_CARLO = "monte_carlo"


class Weighting(enum.Enum):
    """How a branch's share of the particle's mass and charge is assigned.

    BORN gives each branch ``|weight|^2`` of the total; FULL gives every
    branch the whole particle.
    """

    BORN = "born"
    FULL = "full"


class ConsistencyError(ArithmeticError):
    """A computed result violates a property it must satisfy."""


class ClosedFormFallbackWarning(UserWarning):
    """No closed form exists for the pair; the Monte Carlo path was used."""


class PointApproximationWarning(UserWarning):
    """A point-source force was requested inside the distribution's extent."""


def coupling(interaction: Interaction) -> Quantity:
    if interaction is Interaction.GRAVITY:
        return CONSTANTS.G
    return CONSTANTS.coulomb_constant


def _source_dim(source: Interaction):
    return MASS if source is Interaction.GRAVITY else CHARGE


@dataclass(frozen=True)
class Branch:
    """A distribution placed at ``center`` (metres) carrying ``fraction`` of its mass/charge."""

    model: DistributionModel
    center: tuple[float, float, float] = (0.0, 0.0, 0.0)
    fraction: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in as_metres(self.center)))
        if not (self.fraction > 0.0 and math.isfinite(self.fraction)):
            raise ValueError("branch fraction must be positive and finite")

    def amount(self, source: Interaction) -> float:
        if source is Interaction.GRAVITY:
            return self.fraction * self.model.mass_kg
        q = self.model.charge_c
        if q is None:
            raise ValueError("electromagnetic interaction requires total_charge")
        return self.fraction * q

    @property
    def center_m(self) -> np.ndarray:
        return np.array(self.center)


@dataclass(frozen=True)
class KernelIntegral:
    value: Quantity
    method: Method
    mc_std_error: Optional[Quantity] = None
    samples: Optional[int] = None
    seed: Optional[SeedLike] = None
    resampled: int = 0
    fallback: bool = False

    @property
    def std_error_value(self) -> float:
        return 0.0 if self.mc_std_error is None else self.mc_std_error.value


def _integral_quantity(value: float, source: Interaction) -> Quantity:
    return Quantity(value, _source_dim(source) ** 2 / LENGTH)


def _closed_form_value(a: Branch, b: Branch, source: Interaction) -> Optional[float]:
    """Unit-free closed form of the bilinear form, or None if no formula applies."""
    amount = a.amount(source) * b.amount(source)
    d = float(np.linalg.norm(a.center_m - b.center_m))
    order = {Shape.POINT: 0, Shape.UNIFORM_SPHERE: 1, Shape.GAUSSIAN: 2}
    p, q = sorted((a.model, b.model), key=lambda m: order[m.shape])
    pair = (p.shape, q.shape)

    if pair == (Shape.POINT, Shape.POINT):
        if d == 0.0:
            raise SingularityError("coincident point sources have a divergent interaction")
        return amount / d
    if pair == (Shape.UNIFORM_SPHERE, Shape.UNIFORM_SPHERE):
        ra, rb = p.size_m, q.size_m
        if d == 0.0 and ra == rb:
            return 1.2 * amount / ra
        if d >= ra + rb:
            return amount / d
        return None
    if pair == (Shape.POINT, Shape.UNIFORM_SPHERE):
        r = q.size_m
        if d >= r:
            return amount / d
        return amount * (3.0 * r * r - d * d) / (2.0 * r**3)
    if pair in ((Shape.GAUSSIAN, Shape.GAUSSIAN), (Shape.POINT, Shape.GAUSSIAN)):
        width = math.sqrt(p.size_m**2 + q.size_m**2)
        k = 1.0 / (width * math.sqrt(2.0))
        return amount * k * float(_erf_over_x(d * k))
    return None


def coulomb_form(
    a: Branch,
    b: Branch,
    source: Interaction = Interaction.GRAVITY,
    *,
    samples: int = DEFAULT_SAMPLES,
    seed: SeedLike = DEFAULT_SEED,
) -> KernelIntegral:
    """Closed-form bilinear form of two placed distributions.

    Supported pairs: point-point (d > 0), uniform spheres that do not overlap
    or coincide exactly, Gaussian-Gaussian at any separation, point-sphere and
    point-Gaussian. Anything else (overlapping spheres, sphere-Gaussian) falls
    back to :func:`coulomb_form_mc` with a :class:`ClosedFormFallbackWarning`
    and ``fallback=True`` on the result.
    """
    value = _closed_form_value(a, b, source)
    if value is not None:
        return KernelIntegral(_integral_quantity(value, source), Method.CLOSED_FORM)
    warnings.warn(
        f"no closed form for {a.model.shape.value}-{b.model.shape.value} at this "
        "separation; using Monte Carlo",
        ClosedFormFallbackWarning,
        stacklevel=2,
    )
    result = coulomb_form_mc(a, b, source, samples=samples, seed=seed)
    return KernelIntegral(
        result.value,
        result.method,
        result.mc_std_error,
        result.samples,
        result.seed,
        result.resampled,
        fallback=True,
    )


def _partition_sizes(samples: int, partitions: int) -> list[int]:
    base, extra = divmod(samples, partitions)
    return [base + (1 if i < extra else 0) for i in range(partitions)]


def _draw(branch: Branch, n: int, rng: np.random.Generator) -> np.ndarray:
    if branch.model.shape is Shape.POINT:
        return np.broadcast_to(branch.center_m, (n, 3))
    return branch.center_m + branch.model.size_m * sample_unit_points(branch.model.shape, n, rng)


def _partition_stats(a: Branch, b: Branch, n: int, seq: np.random.SeedSequence):
    """(count, mean, M2, resampled) of 1/|x - y| over one partition."""
    if n == 0:
        return 0, 0.0, 0.0, 0
    rng = np.random.default_rng(seq)
    dist = np.linalg.norm(_draw(a, n, rng) - _draw(b, n, rng), axis=1)
    resampled = 0
    bad = np.flatnonzero(dist == 0.0)
    while bad.size:
        if not (a.model.is_extended or b.model.is_extended):
            raise SingularityError("coincident point sources have a divergent interaction")
        resampled += bad.size
        k = bad.size
        dist[bad] = np.linalg.norm(_draw(a, k, rng) - _draw(b, k, rng), axis=1)
        bad = bad[dist[bad] == 0.0]
    inv = 1.0 / dist
    mean = float(inv.mean())
    m2 = float(np.sum((inv - mean) ** 2))
    return n, mean, m2, resampled


def _branch_key(branch: Branch) -> tuple:
    model = branch.model
    return (
        model.shape.value,
        model.size_m,
        model.mass_kg,
        model.charge_c or 0.0,
        tuple(branch.center_m),
        branch.fraction,
    )


def coulomb_form_mc(
    a: Branch,
    b: Branch,
    source: Interaction = Interaction.GRAVITY,
    *,
    samples: int = DEFAULT_SAMPLES,
    seed: SeedLike = DEFAULT_SEED,
    workers: int = 1,
) -> KernelIntegral:
    """Monte Carlo estimate of the bilinear form by paired sampling.

    Draws ``x_i ~ rho_a`` and ``y_i ~ rho_b`` independently and averages
    ``1/|x_i - y_i|``. Samples are split into a fixed number of partitions,
    each seeded from ``SeedSequence(seed).spawn``, and the partial statistics
    are merged in partition order, so the estimate depends only on
    ``(samples, seed)`` and never on ``workers``.

    Point sources are "sampled" as their centre, which makes a point-point
    pair a zero-variance evaluation.
    """
    if samples < MIN_MC_SAMPLES:
        raise ValueError(f"samples must be >= {MIN_MC_SAMPLES}")
    # the kernel is symmetric, so fix the draw order to make the estimate so too
    if _branch_key(b) < _branch_key(a):
        a, b = b, a
    children = np.random.SeedSequence(seed).spawn(MC_PARTITIONS)
    sizes = _partition_sizes(samples, MC_PARTITIONS)
    jobs = list(zip(sizes, children))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda job: _partition_stats(a, b, *job), jobs))
    else:
        parts = [_partition_stats(a, b, *job) for job in jobs]

    # Chan et al. pairwise merge, fixed order
    n, mean, m2, resampled = 0, 0.0, 0.0, 0
    for nb, mb, m2b, rb in parts:
        if nb == 0:
            continue
        total = n + nb
        delta = mb - mean
        mean += delta * nb / total
        m2 += m2b + delta * delta * n * nb / total
        n = total
        resampled += rb
    var = m2 / (n - 1)
    amount = a.amount(source) * b.amount(source)
    return KernelIntegral(
        _integral_quantity(amount * mean, source),
        Method.MONTE_CARLO,
        mc_std_error=_integral_quantity(abs(amount) * math.sqrt(var / n), source),
        samples=samples,
        seed=seed,
        resampled=resampled,
    )


@dataclass(frozen=True)
class DeltaE:
    value: Quantity
    interaction: Interaction
    convention_factor: float
    weighting: Weighting
    self_1: KernelIntegral
    self_2: KernelIntegral
    cross: KernelIntegral
    std_error: Optional[Quantity] = None

    @property
    def breakdown(self) -> dict[str, KernelIntegral]:
        return {"self_1": self.self_1, "self_2": self.self_2, "cross": self.cross}

    @property
    def method(self) -> Method:
        if any(k.method is Method.MONTE_CARLO for k in (self.self_1, self.self_2, self.cross)):
            return Method.MONTE_CARLO
        return Method.CLOSED_FORM

    @property
    def used_fallback(self) -> bool:
        return any(k.fallback for k in (self.self_1, self.self_2, self.cross))


def branches(spec: SuperpositionSpec, weighting: Weighting = Weighting.BORN) -> list[Branch]:
    return [
        Branch(
            spec.base,
            tuple(c.center_m),
            c.probability if weighting is Weighting.BORN else 1.0,
        )
        for c in spec.components
    ]


def delta_e(
    spec: SuperpositionSpec,
    interaction: Interaction = Interaction.GRAVITY,
    convention_factor: float = DEFAULT_CONVENTION,
    weighting: Weighting = Weighting.BORN,
    *,
    method: Method | None = None,
    samples: int = DEFAULT_SAMPLES,
    seed: int = DEFAULT_SEED,
) -> DeltaE:
    """Instability energy of a two-branch superposition.

    ``method=None`` prefers closed forms and falls back to Monte Carlo term by
    term; ``Method.MONTE_CARLO`` forces the sampling path for all three
    terms (independent streams derived from ``seed``).
    """
    if spec.n != 2:
        raise ValueError(f"delta_e needs exactly 2 components, got {spec.n}")
    if not (math.isfinite(convention_factor) and convention_factor > 0.0):
        raise ValueError("convention_factor must be positive and finite")
    if interaction is Interaction.ELECTROMAGNETIC and spec.base.total_charge is None:
        raise ValueError("electromagnetic delta_e requires a charged distribution")
    if spec.base.shape is Shape.POINT:
        raise SingularityError("point-particle branches have divergent self-energy")
    b1, b2 = branches(spec, weighting)
    pairs = [(b1, b1), (b2, b2), (b1, b2)]

    terms = []
    for k, (x, y) in enumerate(pairs):
        term_seed = (seed, k)
        if method is Method.MONTE_CARLO:
            terms.append(coulomb_form_mc(x, y, interaction, samples=samples, seed=term_seed))
        else:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", ClosedFormFallbackWarning)
                term = coulomb_form(x, y, interaction, samples=samples, seed=term_seed)
            if term.fallback:
                warnings.warn(
                    "overlapping branches have no closed form; cross term estimated by Monte Carlo",
                    ClosedFormFallbackWarning,
                    stacklevel=2,
                )
            terms.append(term)
    s1, s2, cr = terms

    scale = convention_factor * coupling(interaction)
    raw = s1.value.value + s2.value.value - 2.0 * cr.value.value
    se = math.sqrt(
        s1.std_error_value**2 + s2.std_error_value**2 + 4.0 * cr.std_error_value**2
    )
    tolerance = max(3.0 * se, 1e-12 * (s1.value.value + s2.value.value))
    if raw < -tolerance:
        raise ConsistencyError(f"negative instability energy {raw!r} beyond tolerance {tolerance!r}")
    # negative values inside the tolerance are rounding or sampling noise; on
    # the exact path, so is anything of either sign below the float floor
    if raw < 0.0 or (se == 0.0 and raw <= tolerance):
        raw = 0.0
    energy = scale * _integral_quantity(raw, interaction)
    std_error = None
    if se > 0.0:
        std_error = scale * _integral_quantity(se, interaction)
    return DeltaE(
        value=energy,
        interaction=interaction,
        convention_factor=convention_factor,
        weighting=weighting,
        self_1=s1,
        self_2=s2,
        cross=cr,
        std_error=std_error,
    )


def self_energy(
    model: DistributionModel,
    interaction: Interaction = Interaction.GRAVITY,
    *,
    method: Method | None = None,
    samples: int = DEFAULT_SAMPLES,
    seed: SeedLike = DEFAULT_SEED,
) -> tuple[Quantity, Optional[Quantity]]:
    """Self-energy ``coupling * I[rho, rho] / 2`` and its MC standard error.

    For a uniform sphere this is ``(3/5) G m^2 / a``.
    """
    if not model.is_extended:
        raise SingularityError("a point particle has divergent self-energy")
    branch = Branch(model)
    if method is Method.MONTE_CARLO:
        term = coulomb_form_mc(branch, branch, interaction, samples=samples, seed=seed)
    else:
        term = coulomb_form(branch, branch, interaction, samples=samples, seed=seed)
    k = 0.5 * coupling(interaction)
    se = None if term.mc_std_error is None else k * term.mc_std_error
    return k * term.value, se


def coupling_ratio(charge: Quantity, mass: Quantity) -> float:
    """q^2 / (4 pi eps0 G m^2), dimensionless."""
    m = mass.to(MASS)
    if m == 0.0:
        raise ValueError("mass must be nonzero")
    ratio = (CONSTANTS.coulomb_constant * charge**2) / (CONSTANTS.G * mass**2)
    return ratio.to(DIMENSIONLESS)


def em_gravity_ratio(
    charge: Quantity,
    mass: Quantity,
    spec: SuperpositionSpec | None = None,
    weighting: Weighting = Weighting.BORN,
    *,
    rtol: float = 1e-10,
) -> float:
    """Ratio of electrostatic to gravitational instability energy.

    With ``spec`` given, both energies are also computed for that geometry
    (base mass and charge replaced by ``mass`` and ``charge``) and their
    quotient must match the closed-form ratio to ``rtol``.
    """
    ratio = coupling_ratio(charge, mass)
    if spec is None:
        return ratio
    base = spec.base.with_mass(mass).with_charge(charge)
    grav = delta_e(spec.with_base(base), Interaction.GRAVITY, weighting=weighting)
    em = delta_e(spec.with_base(base), Interaction.ELECTROMAGNETIC, weighting=weighting)
    if grav.value.value == 0.0:
        if em.value.value != 0.0:
            raise ConsistencyError("electromagnetic energy nonzero where gravitational vanishes")
        return ratio
    quotient = (em.value / grav.value).to(DIMENSIONLESS)
    if not math.isclose(quotient, ratio, rel_tol=rtol, abs_tol=0.0):
        raise ConsistencyError(f"energy quotient {quotient!r} differs from {ratio!r}")
    return ratio


def mutual_force(model: DistributionModel, d: Quantity, interaction: Interaction) -> Quantity:
    """Point-approximation force between two copies of ``model`` at distance ``d``."""
    dist = d.to(LENGTH)
    if dist == 0.0:
        raise SingularityError("mutual force at zero separation")
    if dist < 0.0:
        raise ValueError("separation must be positive")
    if dist < model.size_m:
        warnings.warn(
            "separation is smaller than the distribution size; point approximation is poor",
            PointApproximationWarning,
            stacklevel=2,
        )
    if interaction is Interaction.GRAVITY:
        force = CONSTANTS.G * model.total_mass**2 / d**2
    else:
        if model.total_charge is None:
            raise ValueError("electromagnetic force requires total_charge")
        force = CONSTANTS.coulomb_constant * model.total_charge**2 / d**2
    force.to(FORCE)
    return force


def point_estimate(mass: Quantity, distance: Quantity) -> Quantity:
    """The order-of-magnitude estimate G m^2 / a."""
    energy = CONSTANTS.G * mass**2 / distance
    energy.to(ENERGY)
    return energy

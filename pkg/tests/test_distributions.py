import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from dpcollapse.distributions import (
    ComponentPlacement,
    DistributionModel,
    SingularityError,
    SuperpositionSpec,
    UnsupportedOperation,
    density_at,
    potential_at,
    potential_radial,
    sample_points,
)
from dpcollapse.units import CONSTANTS, LENGTH, MASS, Quantity

G = CONSTANTS.G.value
kg = lambda v: Quantity(v, MASS)  # noqa: E731
m_ = lambda v: Quantity(v, LENGTH)  # noqa: E731

SPHERE = DistributionModel.uniform_sphere(m_(1.0), kg(1.0))
GAUSS = DistributionModel.gaussian(m_(1.0), kg(1.0))
POINT = DistributionModel.point(kg(1.0))


def test_model_validation():
    with pytest.raises(ValueError):
        DistributionModel.uniform_sphere(m_(1.0), kg(0.0))
    with pytest.raises(ValueError):
        DistributionModel.gaussian(m_(-1.0), kg(1.0))
    with pytest.raises(ValueError):
        DistributionModel.uniform_sphere(m_(1.0), Quantity(1.0, LENGTH))


def test_density_values():
    assert density_at(SPHERE, (0, 0, 0)).value == pytest.approx(3 / (4 * math.pi), rel=1e-15)
    assert density_at(SPHERE, (2, 0, 0)).value == 0.0
    assert density_at(GAUSS, (0, 0, 0)).value == pytest.approx((2 * math.pi) ** -1.5, rel=1e-15)


def test_density_accepts_quantities():
    r = (m_(0.1), m_(0.0), m_(0.0))
    assert density_at(SPHERE, r) == density_at(SPHERE, (0.1, 0, 0))


def test_point_density_unsupported():
    with pytest.raises(UnsupportedOperation):
        density_at(POINT, (1, 0, 0))


def test_point_potential():
    assert potential_at(POINT, (1, 0, 0)).value == pytest.approx(-6.6743e-11, rel=1e-15)
    with pytest.raises(SingularityError):
        potential_at(POINT, (0, 0, 0))


@pytest.mark.parametrize("a", [1e-6, 0.5, 1.0, 3.0])
def test_sphere_potential_continuous_at_surface(a):
    model = DistributionModel.uniform_sphere(m_(a), kg(2.0))
    inside = potential_radial(model, np.nextafter(a, 0.0))
    at = potential_radial(model, a)
    outside = potential_radial(model, np.nextafter(a, 2 * a))
    ref = -G * 2.0 / a
    assert at == pytest.approx(ref, rel=1e-15)
    assert abs(inside - outside) < 1e-12 * abs(ref)


def test_gaussian_potential_origin_limit():
    expected = -G * math.sqrt(2 / math.pi)
    assert potential_at(GAUSS, (0, 0, 0)).value == pytest.approx(expected, rel=1e-15)
    # the series branch must join the erf(x)/x branch smoothly
    for r in (1e-9, 1e-6, 1.3e-4, 1.5e-4, 1e-3):
        direct = -G * math.erf(r / math.sqrt(2)) / r
        assert potential_radial(GAUSS, r) == pytest.approx(direct, rel=1e-13)


def _laplacian_fd(model, point, h):
    def phi(p):
        return float(potential_radial(model, np.linalg.norm(p)))

    total = 0.0
    for axis in range(3):
        e = np.zeros(3)
        e[axis] = h
        total += phi(point + e) - 2 * phi(point) + phi(point - e)
    return total / (h * h)


def laplacian(model, point):
    # Richardson extrapolation of the central difference, step relative to the size
    h = 1e-2 * model.size_m
    coarse = _laplacian_fd(model, point, h)
    fine = _laplacian_fd(model, point, h / 2)
    return (4 * fine - coarse) / 3


@pytest.mark.parametrize("model", [SPHERE, GAUSS], ids=["sphere", "gaussian"])
def test_poisson_consistency(model):
    rng = np.random.default_rng(7)
    for _ in range(20):
        direction = rng.standard_normal(3)
        direction /= np.linalg.norm(direction)
        # interior points, away from the sphere surface kink
        radius = rng.uniform(0.1, 0.9 if model is SPHERE else 2.5) * model.size_m
        p = radius * direction
        expected = 4 * math.pi * G * density_at(model, p).value
        assert laplacian(model, p) == pytest.approx(expected, rel=1e-6)


def test_sphere_exterior_is_harmonic():
    p = np.array([1.7, 0.3, -0.2])
    ref = G / 1.7**3
    assert abs(laplacian(SPHERE, p)) < 1e-6 * ref


def test_sample_points_determinism():
    a = sample_points(GAUSS, 1000, seed=3)
    b = sample_points(GAUSS, 1000, seed=3)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, sample_points(GAUSS, 1000, seed=4))


def test_sample_points_errors():
    with pytest.raises(UnsupportedOperation):
        sample_points(POINT, 10, 0)
    with pytest.raises(ValueError):
        sample_points(SPHERE, 0, 0)


def test_sphere_half_volume_fraction():
    n = 100_000
    pts = sample_points(SPHERE, n, seed=11)
    frac = np.mean(np.linalg.norm(pts, axis=1) <= 0.5 ** (1 / 3))
    assert abs(frac - 0.5) < 3 * math.sqrt(0.25 / n)


def test_gaussian_sample_mean():
    n = 100_000
    pts = sample_points(GAUSS, n, seed=12)
    assert np.all(np.abs(pts.mean(axis=0)) < 5 / math.sqrt(n))


@pytest.mark.parametrize(
    "model, cdf",
    [
        (DistributionModel.uniform_sphere(m_(2.0), kg(1.0)), lambda r: np.clip(r / 2.0, 0, 1) ** 3),
        (DistributionModel.gaussian(m_(0.5), kg(1.0)), stats.chi(3, scale=0.5).cdf),
    ],
    ids=["sphere", "gaussian"],
)
def test_radial_cdf_ks(model, cdf):
    n = 100_000
    r = np.linalg.norm(sample_points(model, n, seed=5), axis=1)
    result = stats.kstest(r, cdf)
    critical_1pct = 1.628 / math.sqrt(n)
    assert result.statistic < critical_1pct


def test_superposition_normalisation():
    spec = SuperpositionSpec.two_branch(SPHERE, 3.0)
    assert spec.n == 2
    assert sum(c.probability for c in spec.components) == pytest.approx(1.0, abs=1e-12)
    assert spec.separations()[0, 1] == pytest.approx(3.0)
    with pytest.raises(ValueError):
        SuperpositionSpec(SPHERE, (ComponentPlacement.at(0.0, weight=0.5), ComponentPlacement.at(1.0, weight=0.5)))
    with pytest.raises(ValueError):
        SuperpositionSpec(SPHERE, (ComponentPlacement.at(0.0),))


def test_superposition_allows_coincident_components():
    spec = SuperpositionSpec.two_branch(SPHERE, 0.0)
    assert spec.separations()[0, 1] == 0.0


def test_complex_weights():
    w = complex(0.6, 0.0), complex(0.0, 0.8)
    spec = SuperpositionSpec(SPHERE, (ComponentPlacement.at(0.0, weight=w[0]), ComponentPlacement.at(1.0, weight=w[1])))
    assert [c.probability for c in spec.components] == pytest.approx([0.36, 0.64])


def test_weight_modulus_bounds():
    with pytest.raises(ValueError):
        ComponentPlacement.at(0.0, weight=0.0)
    with pytest.raises(ValueError):
        ComponentPlacement.at(0.0, weight=1.5)


@settings(max_examples=30)
@given(st.integers(min_value=2, max_value=40), st.floats(min_value=1e-3, max_value=10.0))
def test_shell_spec(n, radius):
    spec = SuperpositionSpec.shell(SPHERE, n, radius)
    centers = np.array([c.center_m for c in spec.components])
    assert np.allclose(np.linalg.norm(centers, axis=1), radius, rtol=1e-12)
    assert sum(c.probability for c in spec.components) == pytest.approx(1.0, abs=1e-12)


def test_scaled_lengths():
    spec = SuperpositionSpec.two_branch(SPHERE, 3.0).scaled_lengths(2.0)
    assert spec.base.size_m == 2.0
    assert spec.separations()[0, 1] == pytest.approx(6.0)

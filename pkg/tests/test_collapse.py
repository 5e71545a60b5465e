from fractions import Fraction

import numpy as np
import pytest
from conftest import kg, metres
from hypothesis import given, settings, strategies as st

from dpcollapse.collapse import (
    MassConvention,
    born_ratio_limit,
    collapse_time,
    conservation_violation_curve,
    n_component_bound,
    size_scaling_tau,
)
from dpcollapse.distributions import DistributionModel, SuperpositionSpec
from dpcollapse.energy import Branch, Weighting, coulomb_form, delta_e
from dpcollapse.units import CONSTANTS, DENSITY, ENERGY, Quantity, from_eV

G = CONSTANTS.G.value
H = CONSTANTS.planck_h.value
FULL = MassConvention.FULL_MASS_PER_COMPONENT
BORN = MassConvention.BORN_WEIGHTED


def test_collapse_time_from_1e_19_eV():
    est = collapse_time(from_eV(1e-19))
    assert est.tau.value == pytest.approx(H / 1.602176634e-38, rel=1e-15)
    assert est.tau.value == pytest.approx(4.14e4, rel=0.01)
    assert not est.stable


def test_collapse_time_zero_is_stable():
    est = collapse_time(Quantity(0.0, ENERGY))
    assert est.stable and est.tau is None


def test_collapse_time_negative_errors():
    with pytest.raises(ValueError):
        collapse_time(Quantity(-1e-40, ENERGY))


def test_collapse_time_reciprocal():
    e = from_eV(1e-19)
    assert collapse_time(e * 1e5).tau.value == pytest.approx(collapse_time(e).tau.value * 1e-5, rel=1e-15)


def test_collapse_time_accepts_delta_e(unit_sphere):
    de = delta_e(SuperpositionSpec.two_branch(unit_sphere, 4.0))
    est = collapse_time(de)
    assert est.delta_e is de
    assert est.tau.value * de.value.value == pytest.approx(H, rel=1e-12)


@settings(max_examples=200)
@given(st.floats(min_value=1e-60, max_value=1e10))
def test_tau_times_energy_is_h(e):
    est = collapse_time(Quantity(e, ENERGY))
    assert (est.tau * est.energy).value == pytest.approx(H, rel=1e-12)


RHO = Quantity(2000.0, DENSITY)


@pytest.mark.parametrize("lam, expected", [(10.0, 1e-5), (1.0, 1.0), (2.0, 1 / 32)])
def test_size_scaling(lam, expected):
    assert size_scaling_tau(lam, RHO, metres(1e-6)) == pytest.approx(expected, rel=1e-12)


def test_size_scaling_log_slope():
    lams = np.array([0.5, 3.0, 20.0])
    taus = [size_scaling_tau(l, RHO, metres(1e-6)) for l in lams]
    slope, _ = np.polyfit(np.log(lams), np.log(taus), 1)
    assert abs(slope + 5.0) < 1e-9


@pytest.mark.parametrize("bad", [0.0, -1.0, float("nan")])
def test_size_scaling_rejects_bad_factor(bad):
    with pytest.raises(ValueError):
        size_scaling_tau(bad, RHO, metres(1e-6))


M, A = kg(1.5e-17), metres(1e-6)
GM2_A = G * 1.5e-17**2 / 1e-6


def test_single_component():
    rep = n_component_bound(1, M, A, A, FULL)
    assert rep.bound.value == pytest.approx(0.6 * GM2_A, rel=1e-14)
    assert rep.coincident_self_energy.value == pytest.approx(0.6 * GM2_A, rel=1e-14)
    assert rep.violation_ratio == pytest.approx(1.0, rel=1e-15)


def test_two_components_at_r_equals_a():
    rep = n_component_bound(2, M, A, A, FULL)
    assert rep.bound.value == pytest.approx(2.2 * GM2_A, rel=1e-12)
    assert rep.violation_ratio == pytest.approx(11 / 3, rel=1e-12)


def test_full_ratio_exact_algebra():
    # 5 a n (n-1) / (6 r) + n, in exact rationals
    for n in (1, 2, 3, 7, 40):
        exact = Fraction(5 * n * (n - 1), 6) + n
        assert n_component_bound(n, M, A, A, FULL).violation_ratio == pytest.approx(float(exact), rel=1e-12)


def test_born_variant_differs_and_is_bounded():
    curve = conservation_violation_curve(2000, M, A, A, BORN)
    ratios = [r for _, r in curve]
    assert ratios[0] == pytest.approx(1.0)
    assert ratios[1] == pytest.approx(11 / 12, rel=1e-12)
    assert ratios[-1] == pytest.approx(born_ratio_limit(A, A), rel=1e-3)
    assert born_ratio_limit(A, A) == pytest.approx(5 / 6)
    assert max(ratios) <= 1.0 + 1e-12


def test_curve_shapes():
    assert conservation_violation_curve(1, M, A, A) == [(1, pytest.approx(1.0))]
    full = conservation_violation_curve(100, M, A, A, FULL)
    assert [n for n, _ in full] == list(range(1, 101))
    assert all(b >= a for (_, a), (_, b) in zip(full, full[1:]))
    assert full[-1][1] / 100**2 == pytest.approx(5 / 6, rel=0.02)  # O(n^2)


def test_bound_argument_validation():
    with pytest.raises(ValueError):
        n_component_bound(0, M, A, A)
    with pytest.raises(ValueError):
        n_component_bound(2, M, metres(0.0), A)
    with pytest.raises(ValueError):
        conservation_violation_curve(0, M, A, A)


def test_pair_term_matches_point_cross_term():
    r = 1e3
    rep = n_component_bound(2, kg(1.0), metres(r), metres(1e-3), FULL)
    pair_term = rep.bound.value - 2 * 0.6 * G / 1e-3
    point = DistributionModel.point(kg(1.0))
    cross = G * coulomb_form(Branch(point), Branch(point, (r, 0, 0))).value.value
    assert pair_term == pytest.approx(cross, rel=1e-10)


def test_pair_term_matches_delta_e_cross_term():
    # extended branches far apart: the cross term of delta_e is G m^2 / r
    r = 1e4
    sphere = DistributionModel.uniform_sphere(metres(1e-3), kg(1.0))
    de = delta_e(SuperpositionSpec.two_branch(sphere, r), weighting=Weighting.FULL)
    rep = n_component_bound(2, kg(1.0), metres(r), metres(1e-3), FULL)
    pair_term = rep.bound.value - 2 * 0.6 * G / 1e-3
    assert G * de.cross.value.value == pytest.approx(pair_term, rel=1e-10)


@settings(max_examples=200)
@given(st.integers(min_value=4, max_value=500), st.floats(min_value=1e-3, max_value=1.0))
def test_violation_exceeds_half_n(n, r_over_a):
    rep = n_component_bound(n, M, metres(1e-6 * r_over_a), A, FULL)
    assert rep.violation_ratio > n / 2


@settings(max_examples=200)
@given(st.integers(min_value=2, max_value=500), st.floats(min_value=1.0, max_value=1e3))
def test_bound_exceeds_coincident(n, r_over_a):
    rep = n_component_bound(n, M, metres(1e-6 * r_over_a), A, FULL)
    assert rep.bound >= rep.coincident_self_energy

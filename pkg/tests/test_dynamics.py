import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wsbkit.dynamics import (HillRegionMap, eom_rhs, from_polar, hill_classify, jacobi_constant,
                             jacobi_constant_p2, jacobian_matrix, kepler_energy,
                             kepler_energy_inertial, lagrange_points, mirror, omega,
                             omega_gradient, polygon_area, to_p1_frame, to_p2_frame, to_polar,
                             zero_velocity_curve)
from wsbkit.errors import DomainError, SingularityError

from conftest import EARTH_MOON, SUN_JUPITER

positions = st.tuples(st.floats(-1.5, 2.0), st.floats(-1.5, 1.5)).filter(
    lambda p: np.hypot(*p) > 0.05 and np.hypot(p[0] - 1, p[1]) > 0.05)
velocities = st.tuples(st.floats(-2, 2), st.floats(-2, 2))
mus = st.floats(1e-4, 0.49)


def test_gradient_matches_finite_differences():
    mu = EARTH_MOON
    for y1, y2 in [(0.3, 0.2), (1.1, -0.05), (-0.7, 0.4)]:
        h = 1e-6
        fd = [(omega(y1 + h, y2, mu) - omega(y1 - h, y2, mu)) / (2 * h),
              (omega(y1, y2 + h, mu) - omega(y1, y2 - h, mu)) / (2 * h)]
        np.testing.assert_allclose(omega_gradient(y1, y2, mu), fd, rtol=1e-7, atol=1e-8)


def test_jacobian_matches_finite_differences():
    mu = SUN_JUPITER
    s = np.array([0.95, 0.03, 0.1, -0.2])
    A = jacobian_matrix(s, mu)
    h = 1e-6
    fd = np.column_stack([(eom_rhs(s + h * e, mu) - eom_rhs(s - h * e, mu)) / (2 * h)
                          for e in np.eye(4)])
    np.testing.assert_allclose(A, fd, atol=1e-6)


def test_lagrange_earth_moon():
    eq = lagrange_points(EARTH_MOON)
    np.testing.assert_allclose(eq.jacobi[:3], [3.20034, 3.18416, 3.02415], atol=5e-4)
    np.testing.assert_allclose(eq.jacobi[3:], 3.0, atol=1e-12)
    # equilibria: zero gradient
    for p in eq.positions:
        np.testing.assert_allclose(omega_gradient(p[0], p[1], EARTH_MOON), 0.0, atol=1e-12)
    assert eq.positions[0, 0] < 1 < eq.positions[1, 0]
    assert eq.positions[2, 0] < 0


@given(mus)
@settings(max_examples=40, deadline=None)
def test_lagrange_ordering(mu):
    eq = lagrange_points(mu)
    assert eq.C1 > eq.C2 > eq.C3 > 3.0 - 1e-12
    np.testing.assert_allclose(eq.jacobi[3:], 3.0, atol=1e-12)


def test_mu_out_of_range():
    with pytest.raises(DomainError):
        lagrange_points(0.7)
    with pytest.raises(DomainError):
        lagrange_points(-0.1)


def test_collision_guard():
    with pytest.raises(SingularityError):
        eom_rhs(np.array([1.0, 0.0, 0.0, 0.0]), EARTH_MOON)
    with pytest.raises(SingularityError):
        kepler_energy(np.zeros(4), EARTH_MOON)


@given(positions, velocities, mus)
@settings(max_examples=100, deadline=None)
def test_jacobi_chart_independent(p, v, mu):
    s1 = np.array([*p, *v])
    assert jacobi_constant(s1, mu) == pytest.approx(jacobi_constant_p2(to_p2_frame(s1), mu),
                                                     rel=1e-12, abs=1e-12)


@given(positions, velocities, mus, st.floats(0, 6.3))
@settings(max_examples=100, deadline=None)
def test_kepler_energy_rotating_vs_inertial(p, v, mu, t):
    # the rotating formula must agree with an independent inertial computation
    s2 = to_p2_frame(np.array([*p, *v]))
    assert kepler_energy(s2, mu) == pytest.approx(kepler_energy_inertial(s2, mu, t),
                                                  rel=1e-11, abs=1e-12)


@given(positions, velocities)
@settings(max_examples=100, deadline=None)
def test_frame_and_mirror_involutions(p, v):
    s = np.array([*p, *v])
    np.testing.assert_array_equal(mirror(mirror(s)), s)
    np.testing.assert_allclose(to_p1_frame(to_p2_frame(s)), s, atol=1e-15)


@given(positions, velocities, mus)
@settings(max_examples=100, deadline=None)
def test_mirror_reverses_field(p, v, mu):
    # reversibility: f(R s) = -R f(s)
    s = np.array([*p, *v])
    np.testing.assert_allclose(eom_rhs(mirror(s), mu), -mirror(eom_rhs(s, mu)), atol=1e-10)


def test_polar_round_trip(rng):
    for _ in range(50):
        r, th = rng.uniform(0.01, 0.3), rng.uniform(0, 2 * np.pi)
        rd, thd = rng.normal(), rng.normal()
        out = to_polar(from_polar(r, th, rd, thd))
        np.testing.assert_allclose(out, (r, th, rd, thd), rtol=1e-12, atol=1e-12)


def test_hill_regions_closed_necks():
    mu = EARTH_MOON
    C = 3.25
    assert hill_classify((0.0, 0.3), C, mu).label == "H1"
    assert hill_classify((1.05, 0.0), C, mu).label == "H2"
    assert hill_classify((2.5, 2.5), C, mu).label == "HO"
    assert hill_classify((0.9, 0.5), C, mu).label == "forbidden"


def test_hill_regions_open_neck():
    mu = EARTH_MOON
    eq = lagrange_points(mu)
    C = 0.5 * (eq.C1 + eq.C2)
    hm = HillRegionMap(C, mu)
    assert hm._lab_p1 == hm._lab_p2 != hm._lab_far
    assert hm.classify((0.5, 0.0)).label == "H1"
    assert hm.classify((1.02, 0.0)).label == "H2"


def test_zero_velocity_curve():
    assert zero_velocity_curve(2.9, EARTH_MOON) == []
    curves = zero_velocity_curve(3.25, EARTH_MOON, resolution=600)
    assert len(curves) >= 3
    for c in curves:
        mid = c[len(c) // 2]
        assert 2 * omega(mid[0], mid[1], EARTH_MOON) == pytest.approx(3.25, rel=2e-3)
    # the P2 lobe is the smallest closed curve around (1, 0)
    around_p2 = [c for c in curves if np.all(np.abs(c[:, 0] - 1) < 0.3)
                 and np.all(np.abs(c[:, 1]) < 0.3)]
    assert around_p2 and polygon_area(around_p2[0]) < 0.1


def test_equilibrium_and_limiting_cases():
    eq = lagrange_points(EARTH_MOON)
    l4 = np.array([*eq.positions[3], 0.0, 0.0])
    np.testing.assert_allclose(eom_rhs(l4, EARTH_MOON), 0.0, atol=1e-14)
    np.testing.assert_allclose(mirror(l4)[:2], eq.positions[4], atol=1e-15)
    # mu = 0: centrifugal force balances P1 gravity on the unit circle
    s = np.array([1.0, 0.0, 0.0, 0.0])
    np.testing.assert_allclose(eom_rhs(s, 0.0), 0.0, atol=1e-15)
    assert jacobi_constant(s, 0.0) == pytest.approx(3.0, abs=1e-15)


def test_jacobian_block_structure():
    A = jacobian_matrix(np.array([0.4, 0.3, 0.1, 0.2]), EARTH_MOON)
    np.testing.assert_array_equal(A[:2, :2], 0.0)
    np.testing.assert_array_equal(A[:2, 2:], np.eye(2))


def test_hill_sphere_asymptotics():
    mu = 1e-6
    eq = lagrange_points(mu)
    h = (mu / 3) ** (1 / 3)
    for i in (1, 2):
        assert eq.distance_to_p2(i) == pytest.approx(h, rel=0.02)


def test_zero_velocity_set_at_l1():
    eq = lagrange_points(EARTH_MOON)
    x, y = eq.positions[0]
    assert 2 * omega(x, y, EARTH_MOON) == pytest.approx(eq.C1, abs=1e-14)
    hm = HillRegionMap(2.9, EARTH_MOON, shape=200)
    assert hm.allowed.all()


def test_p2_lobe_area_grid_convergence():
    C = 3.25
    def lobe(res):
        cs = zero_velocity_curve(C, EARTH_MOON, resolution=res, bounds=(0.7, 1.3, -0.3, 0.3))
        return max(polygon_area(c) for c in cs)
    assert lobe(400) == pytest.approx(lobe(1600), rel=0.01)

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wsbkit.dynamics import kepler_energy, lagrange_points
from wsbkit.errors import DomainError
from wsbkit.wsb import (PeriapsisIC, classify, classify_many, e2_at_p1_crossing_check,
                        periapsis_state, periapsis_states)

from conftest import EARTH_MOON, SUN_JUPITER


@given(st.floats(1e-3, 0.3), st.floats(0, 2 * math.pi), st.floats(0, 0.95),
       st.floats(1e-4, 0.3))
@settings(max_examples=200, deadline=None)
def test_periapsis_energy_identity(r, theta, e, mu):
    s = periapsis_state(PeriapsisIC(r, theta, e, mu))
    assert kepler_energy(s, mu) == pytest.approx(mu * (e - 1) / (2 * r), rel=1e-12, abs=1e-14)
    # velocity perpendicular to the ray
    assert abs(s[0] * s[2] + s[1] * s[3]) < 1e-12 * max(1.0, np.hypot(s[2], s[3]))


def test_vectorised_states_match_scalar():
    r = np.array([0.01, 0.05, 0.2])
    th = np.array([0.0, 1.0, 4.0])
    S = periapsis_states(r, th, 0.4, EARTH_MOON)
    for i in range(3):
        np.testing.assert_array_equal(S[i], periapsis_state(PeriapsisIC(r[i], th[i], 0.4,
                                                                        EARTH_MOON)))


def test_ic_validation():
    for args in [(0.0, 0, 0, EARTH_MOON), (0.1, 0, 1.0, EARTH_MOON), (0.1, 0, 0.2, 0.6)]:
        with pytest.raises(DomainError):
            PeriapsisIC(*args)
    with pytest.raises(DomainError):
        classify(PeriapsisIC(0.01, 0, 0, EARTH_MOON), 0)


def test_close_orbit_stable_far_orbit_unstable(cfg):
    near = classify(PeriapsisIC(0.005, 0.0, 0.0, EARTH_MOON), 4, cfg)
    assert near.stable and near.completed == 4 and len(near.crossings) == 4
    for c in near.crossings:
        assert c.E2 < 0 and c.thetadot > 0 and c.rdot == c.rdot
    far = classify(PeriapsisIC(0.6, 0.0, 0.0, EARTH_MOON), 1, cfg)
    assert not far.stable and far.failing_cycle == 1 and far.unstable_kind is not None


def test_deterministic_and_thread_independent(cfg):
    r = np.linspace(0.01, 0.15, 24)
    a = classify_many(r, 1.0, 0.3, SUN_JUPITER, 2, cfg, threads=1)
    b = classify_many(r, 1.0, 0.3, SUN_JUPITER, 2, cfg, threads=3)
    assert [(o.stable, o.unstable_kind, o.t_final) for o in a] == \
        [(o.stable, o.unstable_kind, o.t_final) for o in b]
    c = classify(PeriapsisIC(r[5], 1.0, 0.3, SUN_JUPITER), 2, cfg)
    assert c.t_final == a[5].t_final


def test_truncation_matches_direct_run(cfg):
    r = np.linspace(0.01, 0.12, 30)
    hi = classify_many(r, 2.0, 0.0, SUN_JUPITER, 3, cfg)
    lo = classify_many(r, 2.0, 0.0, SUN_JUPITER, 1, cfg)
    for h, l in zip(hi, lo):
        t = h.truncate(1)
        assert (t.stable, t.unstable_kind) == (l.stable, l.unstable_kind)
        # stable for 3 cycles implies stable for 1
        assert not h.stable or t.stable


def test_no_p1_cycle_when_necks_closed(cfg):
    # C above C1: P2 region is sealed, so no trajectory can circle P1
    mu = EARTH_MOON
    C1 = lagrange_points(mu).C1
    r = np.linspace(0.002, 0.02, 40)
    outs = classify_many(r, 0.5, 0.0, mu, 2, cfg)
    assert all(o.jacobi > C1 for o in outs)
    assert all(o.unstable_kind != "P1-cycle" for o in outs)


def test_p1_crossing_diagnostic(cfg):
    # between C2 and C1 only the L1 neck is open, so escapers circle P1
    mu = EARTH_MOON
    eq = lagrange_points(mu)
    r = np.linspace(0.005, 0.3, 300)
    C = np.array([PeriapsisIC(x, 0.05, 0.0, mu).jacobi for x in r])
    r = r[(C > eq.C2) & (C < eq.C1)]
    outs = classify_many(r, 0.05, 0.0, mu, 1, cfg)
    ics = [PeriapsisIC(x, 0.05, 0.0, mu) for x, o in zip(r, outs) if o.unstable_kind == "P1-cycle"]
    assert len(ics) >= 5
    for ic in ics[:10]:
        d = e2_at_p1_crossing_check(ic, cfg)
        assert d.Y1 < -1.0 and d.t1 > 0 and d.passed


def test_periapsis_speed_value():
    from wsbkit.wsb import periapsis_velocity
    assert periapsis_velocity(0.05, 0.0, 0.01215) == pytest.approx(
        math.sqrt(0.01215 / 0.05) - 0.05, rel=1e-15)
    assert periapsis_velocity(0.05, 0.0, 0.01215) == pytest.approx(0.44295, abs=1e-5)
    s = periapsis_state(PeriapsisIC(0.05, 1.0, 0.0, 0.01215))
    assert s[0] * s[2] + s[1] * s[3] == pytest.approx(0.0, abs=1e-16)


def test_kepler_energy_at_rest():
    r = 0.1
    assert kepler_energy(np.array([r, 0, 0, 0]), EARTH_MOON) == pytest.approx(
        0.5 * r ** 2 - EARTH_MOON / r, rel=1e-15)


def test_kind_two_at_second_cycle(cfg):
    ic = PeriapsisIC(0.037056856187290974, math.pi, 0.0, SUN_JUPITER)
    assert classify(ic, 1, cfg).stable
    o = classify(ic, 2, cfg)
    assert o.unstable_kind == "E2-nonnegative" and o.failing_cycle == 2
    assert o.crossings[-1].E2 >= 0


def test_outer_region_ic_circles_p1(cfg):
    # beyond L2 in the outer region every return first goes around P1
    mu = EARTH_MOON
    ic = PeriapsisIC(1.2, math.pi, 0.0, mu)
    o = classify(ic, 1, cfg)
    assert not o.stable and o.unstable_kind in ("P1-cycle", "non-return")


def test_p1_crossing_from_trajectory(cfg):
    from wsbkit.dynamics import to_p1_frame
    from wsbkit.integrate import propagate
    mu = EARTH_MOON
    eq = lagrange_points(mu)
    r = np.linspace(0.15, 0.25, 80)
    C = np.array([PeriapsisIC(x, 0.05, 0.0, mu).jacobi for x in r])
    r = r[(C > eq.C2) & (C < eq.C1)]
    outs = classify_many(r, 0.05, 0.0, mu, 1, cfg)
    ic = next(PeriapsisIC(x, 0.05, 0.0, mu) for x, o in zip(r, outs)
              if o.unstable_kind == "P1-cycle")
    a = e2_at_p1_crossing_check(ic, cfg)
    traj = propagate(to_p1_frame(ic.state), (0.0, a.t1 + 1.0), mu, cfg)
    b = e2_at_p1_crossing_check(traj)
    assert b.t1 == pytest.approx(a.t1, abs=1e-9) and b.E2 == pytest.approx(a.E2, rel=1e-8)
    short = propagate(to_p1_frame(ic.state), (0.0, 0.5), mu, cfg)
    with pytest.raises(DomainError):
        e2_at_p1_crossing_check(short)


@pytest.mark.xfail(strict=True, reason="rotating-frame angular momentum at the "
                   "crossing is of order one; the near-zero heuristic does not hold")
def test_angular_momentum_small_at_p1_crossing(cfg):
    mu = EARTH_MOON
    eq = lagrange_points(mu)
    r = np.linspace(0.005, 0.3, 300)
    C = np.array([PeriapsisIC(x, math.pi, 0.0, mu).jacobi for x in r])
    r = r[(C > eq.C2) & (C < eq.C1)]
    outs = classify_many(r, math.pi, 0.0, mu, 1, cfg)
    ds = [e2_at_p1_crossing_check(PeriapsisIC(x, math.pi, 0.0, mu), cfg)
          for x, o in zip(r, outs) if o.unstable_kind == "P1-cycle"]
    assert ds and all(d.passed for d in ds)
    assert max(abs(d.angular_momentum) for d in ds) < 0.1

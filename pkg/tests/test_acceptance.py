"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest -s tests/test_acceptance.py`` to see the report lines.
"""
import functools
import itertools
import math
import time

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from wsbkit.dynamics import (eom_rhs, jacobi_constant, kepler_energy, lagrange_points, mirror,
                             omega, to_p1_frame)
from wsbkit.integrate import IntegratorConfig, flow, propagate_events, ray_event, winding_event
from wsbkit.manifolds import lyapunov_family, wn_vs_manifold
from wsbkit.products import write_sweep
from wsbkit.section import SectionPoint, poincare_return, theta_dot_on_section
from wsbkit.sweep import (REFINE_TOL, extract_intervals, monotonicity_check, radial_scan,
                          refine_scan, sweep)
from wsbkit.wsb import PeriapsisIC, classify, classify_many, e2_at_p1_crossing_check, periapsis_state

from conftest import ACCEPTANCE_LINES, EARTH_MOON, SUN_JUPITER

CFG = IntegratorConfig(rel_tol=1e-12, abs_tol=1e-12)
TIGHT = IntegratorConfig(rel_tol=1e-13, abs_tol=1e-13)


def report(tag, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} {tag}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print("\n" + line)
    assert ok, detail


def test_c01_lagrange_constants():
    t0 = time.perf_counter()
    eq = lagrange_points(EARTH_MOON)
    err = np.max(np.abs(eq.jacobi[:3] - [3.20034, 3.18416, 3.02415]))
    tri = 0.0
    for mu in np.geomspace(1e-6, 0.5, 21)[:-1]:
        tri = max(tri, float(np.max(np.abs(lagrange_points(mu).jacobi[3:] - 3.0))))
    dt = time.perf_counter() - t0
    report("C1 Lagrange constants", err <= 5e-4 and tri <= 1e-12 and dt < 1.0,
           f"max |C1..C3 - ref| = {err:.2e}, max |C4,C5 - 3| over 20 mu = {tri:.1e}, "
           f"{dt:.2f} s")


def test_c02_jacobi_conservation():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2)
    eq = lagrange_points(EARTH_MOON)
    worst, done = 0.0, 0
    while done < 20:
        ic = PeriapsisIC(rng.uniform(0.005, 0.06), rng.uniform(0, 2 * math.pi),
                         rng.uniform(0, 0.6), EARTH_MOON)
        if ic.jacobi <= eq.C1:
            continue  # keep the sample inside the sealed P2 region
        traj, _ = propagate_events(to_p1_frame(ic.state), EARTH_MOON, CFG,
                                   [winding_event("P2", 50.0)])
        assert traj.status == "terminal"
        worst = max(worst, traj.jacobi_drift())
        done += 1
    dt = time.perf_counter() - t0
    report("C2 Jacobi conservation", worst <= 1e-9 and dt < 10,
           f"max relative drift over 50 P2 revolutions = {worst:.2e}, {dt:.2f} s")


def test_c03_periapsis_energy_identity():
    t0 = time.perf_counter()
    worst = 0.0
    for r, e, mu in itertools.product(np.geomspace(1e-3, 0.3, 10), np.linspace(0, 0.95, 10),
                                      [1e-4, SUN_JUPITER, 0.005, EARTH_MOON, 0.1]):
        s = periapsis_state(PeriapsisIC(r, 0.7, e, mu))
        worst = max(worst, abs(float(kepler_energy(s, mu)) - mu * (e - 1) / (2 * r)))
    dt = time.perf_counter() - t0
    report("C3 periapsis energy identity", worst <= 1e-13 and dt < 1.0,
           f"max |E2 - mu(e-1)/(2r)| = {worst:.2e} on 10x10x5 grid, {dt:.2f} s")


C4_THETAS = (0.0, math.pi / 2, math.pi, 3 * math.pi / 2)
C4_ES = (0.0, 0.4, 0.9)
C4_NS = (1, 2, 3, 4)


@functools.lru_cache(maxsize=1)
def nesting_sweep():
    """Independent 500-point scans at each n, refined, on the criterion-4 grid."""
    out = {}
    for th, e in itertools.product(C4_THETAS, C4_ES):
        for n in C4_NS:
            sc = radial_scan(th, e, n, SUN_JUPITER, K=500, cfg=CFG)
            _, recs = refine_scan(sc, extract_intervals(sc, CFG.r_min), CFG, REFINE_TOL)
            out[(th, e, n)] = (sc, recs)
    return out


def test_c04_monotone_nesting():
    t0 = time.perf_counter()
    res = nesting_sweep()
    violations, pairs, mismatch = 0, 0, 0
    for th, e in itertools.product(C4_THETAS, C4_ES):
        for m, n in itertools.combinations(C4_NS, 2):
            sm, bm = res[(th, e, m)]
            sn, bn = res[(th, e, n)]
            rep = monotonicity_check(sm, sn, list(bm) + list(bn), band=REFINE_TOL)
            violations += len(rep.violations)
            pairs += 1
        # second route: the n = 4 run truncated must agree with the direct scans
        top = res[(th, e, 4)][0]
        for m in (1, 2, 3):
            mismatch += int(np.sum(top.truncate(m).stable != res[(th, e, m)][0].stable))
    dt = time.perf_counter() - t0
    report("C4 monotone nesting", violations == 0 and mismatch == 0,
           f"{violations} violations over {pairs} (m, n) pairs x 500 radii; "
           f"{mismatch} truncation mismatches; {dt:.0f} s")


def test_c05_boundary_separation():
    t0 = time.perf_counter()
    res = nesting_sweep()
    total, good, flag_agree = 0, 0, 0
    bad = {}
    for (th, e, n), (_, recs) in res.items():
        for b in recs:
            lo = classify(PeriapsisIC(b.r_star - 2 * REFINE_TOL, th, e, SUN_JUPITER), n, CFG)
            hi = classify(PeriapsisIC(b.r_star + 2 * REFINE_TOL, th, e, SUN_JUPITER), n, CFG)
            total += 1
            sep = lo.stable != hi.stable
            good += sep
            flag_agree += sep == b.separated
            if not sep:
                key = (b.unstable_kind, n)
                bad[key] = bad.get(key, 0) + 1
    dt = time.perf_counter() - t0
    breakdown = ", ".join(f"{k} n={n}: {c}" for (k, n), c in sorted(bad.items()))
    report("C5 boundary separation", total > 0 and good == total,
           f"{good}/{total} refined points separate at r* +/- 2 refine_tol "
           f"(refinement self-check flag agrees on {flag_agree}/{total}); "
           f"unseparated by adjacent kind and n: {breakdown or 'none'}; {dt:.0f} s")


def test_c06_section_round_trip():
    t0 = time.perf_counter()
    rng = np.random.default_rng(6)
    mu = EARTH_MOON
    worst_td = 0.0
    n_td = 0
    while n_td < 100:
        ic = PeriapsisIC(rng.uniform(0.01, 0.08), rng.uniform(0, 2 * math.pi),
                         rng.uniform(0, 0.5), mu)
        y0 = to_p1_frame(ic.state)
        C = float(jacobi_constant(y0, mu))
        theta0 = rng.uniform(0, 2 * math.pi)
        _, recs = propagate_events(y0, mu, TIGHT, [ray_event(theta0, 1, terminal=True)],
                                   t_span=(0.0, 20.0), store=False)
        if not recs:
            continue
        r, _, rd, td = recs[0].polar
        worst_td = max(worst_td, abs(theta_dot_on_section(r, rd, theta0, C, mu) - td))
        n_td += 1
    worst_c = 0.0
    n_c = 0
    mu = SUN_JUPITER
    while n_c < 50:
        ic = PeriapsisIC(rng.uniform(0.005, 0.03), rng.uniform(0, 2 * math.pi),
                         rng.uniform(0, 0.3), mu)
        p = SectionPoint(ic.r, rng.uniform(-0.01, 0.01), ic.theta, ic.jacobi, mu)
        try:
            rec = poincare_return(p, CFG)
        except Exception:
            continue
        worst_c = max(worst_c, abs(rec.C_actual - p.C))
        n_c += 1
    dt = time.perf_counter() - t0
    report("C6 section round trip", worst_td <= 1e-10 and worst_c <= 1e-9 and dt < 30,
           f"max thetadot error = {worst_td:.2e} (100 samples), max |C drift| per return = "
           f"{worst_c:.2e} (50 points), {dt:.1f} s")


def test_c07_symmetry_conjugacy():
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    mu = EARTH_MOON
    T = 5 * 2 * math.pi
    states = [to_p1_frame(PeriapsisIC(rng.uniform(0.01, 0.05), rng.uniform(0, 2 * math.pi),
                                      rng.uniform(0, 0.5), mu).state) for _ in range(10)]
    worst = 0.0
    for s in states:
        lhs = mirror(flow(s, T, mu, CFG))
        worst = max(worst, float(np.max(np.abs(lhs - flow(mirror(s), -T, mu, CFG)))))
    dt = time.perf_counter() - t0
    # second route, untimed and reported only: backward leg from an unrelated solver;
    # the gap measures the two solvers' truncation difference, not the symmetry
    worst_indep = 0.0
    for s in states[:3]:
        lhs = mirror(flow(s, 2 * math.pi, mu, CFG))
        sol = solve_ivp(lambda _, y: eom_rhs(y, mu), (0, -2 * math.pi), mirror(s),
                        method="DOP853", rtol=1e-13, atol=1e-14)
        worst_indep = max(worst_indep, float(np.max(np.abs(lhs - sol.y[:, -1]))))
    report("C7 symmetry conjugacy", worst <= 1e-8 and dt < 5,
           f"max |mirror(flow(t)) - flow(-t)(mirror)| = {worst:.2e} over 5 revolutions, "
           f"{dt:.2f} s; against a DOP853 backward leg over 1 revolution {worst_indep:.2e}")


def test_c08_lyapunov_quality():
    t0 = time.perf_counter()
    lines, ok = [], True
    for neck in ("L1", "L2"):
        orb = lyapunov_family(SUN_JUPITER, 3.037, neck, CFG)
        sp = orb.spectrum
        res = orb.periodicity_residual(CFG)
        unit = float(np.max(np.abs(sp.unit_pair - 1.0)))
        good = res < 1e-9 and sp.pattern_ok(1e-6, 1e-8)
        ok &= good
        lines.append(f"{neck}: T={orb.period:.6f} residual={res:.1e} lambda={sp.lam:.2f} "
                     f"|unit-1|={unit:.1e} |det-1|={abs(sp.det - 1):.1e}")
    dt = time.perf_counter() - t0
    report("C8 Lyapunov orbit quality", ok and dt < 10, "; ".join(lines) + f"; {dt:.1f} s")


def test_c09_manifold_concordance():
    t0 = time.perf_counter()
    mu = SUN_JUPITER
    C2 = lagrange_points(mu).C2
    rows = []
    for th in np.arange(8) * math.pi / 4 + math.pi / 8:
        for e in (0.0, 0.3, 0.6):
            sc = radial_scan(th, e, 1, mu, K=300, cfg=CFG)
            _, recs = refine_scan(sc, extract_intervals(sc, CFG.r_min), CFG, REFINE_TOL)
            for b in recs[:4]:
                if b.C >= C2 or b.unstable_kind not in ("P1-cycle", "non-return"):
                    continue
                rep = wn_vs_manifold(th, e, 1, mu, CFG, r_star=b.r_star)
                rows.append((th, e, b.r_star, rep.best_distance, rep.distances))
    hits = [r for r in rows if r[3] <= 1e-3]
    for th, e, rs, d, ds in rows:
        print(f"  theta={th:.4f} e={e} r*={rs:.8f} k=1: {ds.get('k=1', np.inf):.2e} "
              f"k=2: {ds.get('k=2', np.inf):.2e}")
    dt = time.perf_counter() - t0
    report("C9 manifold concordance", len(hits) >= 5,
           f"{len(hits)}/{len(rows)} qualifying W1 points within 1e-3 of a stable-manifold "
           f"axis intersection; {dt:.0f} s")


def _joined_to_p2(r, theta, C, mu):
    # segment from P2 to the point stays in the allowed region
    s = np.linspace(0.002, r, 400)
    return bool(np.all(2 * omega(1 + s * math.cos(theta), s * math.sin(theta), mu) >= C))


def test_c10_p1_crossing_energy():
    t0 = time.perf_counter()
    mu = EARTH_MOON
    eq = lagrange_points(mu)
    ics = []
    for e in (0.0, 0.2, 0.4, 0.6, 0.8):
        for th in np.arange(16) * math.pi / 8 + 0.05:
            r = np.linspace(0.005, 0.3, 2000)
            C = np.array([PeriapsisIC(x, th, e, mu).jacobi for x in r])
            keep = (C > eq.C2) & (C < eq.C1)
            keep &= np.array([k and _joined_to_p2(x, th, c, mu) for x, c, k in zip(r, C, keep)])
            r = r[keep]
            if r.size == 0:
                continue
            outs = classify_many(r, th, e, mu, 1, CFG)
            ics += [PeriapsisIC(x, th, e, mu) for x, o in zip(r, outs)
                    if o.unstable_kind == "P1-cycle"]
    diags = [e2_at_p1_crossing_check(ic, CFG) for ic in ics]
    frac = float(np.mean([g.passed for g in diags])) if diags else 0.0
    y1 = [g.Y1 for g in diags] or [np.nan]
    dt = time.perf_counter() - t0
    report("C10 E2 at P1-side crossing", len(diags) >= 100 and frac >= 0.95,
           f"{frac:.1%} of {len(diags)} P1-cycle trajectories started in the P2 realm have "
           f"E2 > 0 at the first Y1 < -1 axis crossing (Y1 in [{min(y1):.2f}, "
           f"{max(y1):.2f}]); {dt:.1f} s")


def test_c11_determinism(tmp_path):
    t0 = time.perf_counter()
    args = ([0.0, 2.0, 4.0], [0.0, 0.5], [1, 2], SUN_JUPITER, CFG, (0.005, 0.12), 80, 1e-9)
    outs = []
    for threads in (1, 2, 4):
        res = sweep(*args, threads=threads)
        d = tmp_path / f"t{threads}"
        write_sweep(res, d)
        outs.append({n: (d / n).read_bytes()
                     for n in ("scans.csv", "intervals.csv", "boundaries.csv")})
    same = all(o == outs[0] for o in outs[1:])
    dt = time.perf_counter() - t0
    report("C11 determinism", same,
           f"scans/intervals/boundaries CSVs byte-identical across 1, 2, 4 threads; "
           f"{dt:.1f} s")

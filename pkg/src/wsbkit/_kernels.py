"""Compiled inner loops: CR3BP vector field, Dormand-Prince 5(4) stepping,
dense output, event location and the W-algorithm classification loop.

Everything here works on plain float arrays so that numba can compile it in
nopython mode and release the GIL. States are P1-centred rotating-frame
vectors ``(y1, y2, v1, v2)``; a 20-vector carries the flattened 4x4
state-transition matrix after the state.
"""
import math

import numpy as np
from numba import njit

TWO_PI = 2.0 * math.pi

# integrator config vector layout
CFG_RTOL = 0
CFG_ATOL = 1
CFG_HINIT = 2
CFG_HMIN = 3
CFG_HMAX = 4
CFG_TMAX = 5
CFG_RMIN = 6
CFG_EVTOL = 7
CFG_TANTOL = 8
CFG_SIZE = 9

# propagation status codes
ST_DONE = 0
ST_TERMINAL = 1
ST_COLLISION = 2
ST_UNDERFLOW = 3
ST_BUFFER = 4

# event kinds
EV_RAY = 0
EV_AXIS = 1
EV_WIND = 2
EV_ESCAPE = 3

# classification verdicts / unstable kinds
V_STABLE = 0
V_UNSTABLE = 1
V_ERROR = 2
K_NONE = 0
K_P1_CYCLE = 1
K_E2_NONNEG = 2
K_TANGENTIAL = 3
K_NON_RETURN = 4
K_COLLISION = 5

N_SUB = 4  # dense-output samples per step for sign-change detection
START_GTOL = 1e-13

# Dormand-Prince 5(4) tableau
A21 = 1.0 / 5.0
A31, A32 = 3.0 / 40.0, 9.0 / 40.0
A41, A42, A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
A51, A52, A53, A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
A61, A62, A63, A64, A65 = (9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0,
                           49.0 / 176.0, -5103.0 / 18656.0)
B1, B3, B4, B5, B6 = 35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0
E1, E3, E4, E5, E6, E7 = (71.0 / 57600.0, -71.0 / 16695.0, 71.0 / 1920.0,
                          -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0)

# continuous extension (4th order), rows = stages, cols = powers theta^1..theta^4
DENSE_P = np.array([
    [1.0, -8048581381.0 / 2820520608.0, 8663915743.0 / 2820520608.0,
     -12715105075.0 / 11282082432.0],
    [0.0, 0.0, 0.0, 0.0],
    [0.0, 131558114200.0 / 32700410799.0, -68118460800.0 / 10900136933.0,
     87487479700.0 / 32700410799.0],
    [0.0, -1754552775.0 / 470086768.0, 14199869525.0 / 1410260304.0,
     -10690763975.0 / 1880347072.0],
    [0.0, 127303824393.0 / 49829197408.0, -318862633887.0 / 49829197408.0,
     701980252875.0 / 199316789632.0],
    [0.0, -282668133.0 / 205662961.0, 2019193451.0 / 616988883.0,
     -1453857185.0 / 822651844.0],
    [0.0, 40617522.0 / 29380423.0, -110615467.0 / 29380423.0,
     69997945.0 / 29380423.0],
])

SAFETY = 0.9
BETA = 0.04
EXPO1 = 0.2 - BETA * 0.75
FAC_MIN_INV = 1.0 / 10.0  # growth at most 10x
FAC_MAX_INV = 1.0 / 0.2   # shrink at most 5x


# --------------------------------------------------------------------------
# vector field
# --------------------------------------------------------------------------

@njit(cache=True, nogil=True)
def omega_grad(y1, y2, mu):
    r1 = math.sqrt(y1 * y1 + y2 * y2)
    dx2 = y1 - 1.0
    r2 = math.sqrt(dx2 * dx2 + y2 * y2)
    q1 = (1.0 - mu) / (r1 * r1 * r1)
    q2 = mu / (r2 * r2 * r2) if mu > 0.0 else 0.0
    ox = (y1 - mu) - q1 * y1 - q2 * dx2
    oy = y2 - q1 * y2 - q2 * y2
    return ox, oy


@njit(cache=True, nogil=True)
def omega_hess(y1, y2, mu):
    r1sq = y1 * y1 + y2 * y2
    dx2 = y1 - 1.0
    r2sq = dx2 * dx2 + y2 * y2
    r1 = math.sqrt(r1sq)
    r2 = math.sqrt(r2sq)
    m1 = 1.0 - mu
    c1 = m1 / (r1sq * r1)
    d1 = 3.0 * m1 / (r1sq * r1sq * r1)
    if mu > 0.0:
        c2 = mu / (r2sq * r2)
        d2 = 3.0 * mu / (r2sq * r2sq * r2)
    else:
        c2 = 0.0
        d2 = 0.0
    oxx = 1.0 - c1 - c2 + d1 * y1 * y1 + d2 * dx2 * dx2
    oyy = 1.0 - c1 - c2 + d1 * y2 * y2 + d2 * y2 * y2
    oxy = d1 * y1 * y2 + d2 * dx2 * y2
    return oxx, oxy, oyy


@njit(cache=True, nogil=True)
def deriv(y, mu, out):
    ox, oy = omega_grad(y[0], y[1], mu)
    out[0] = y[2]
    out[1] = y[3]
    out[2] = 2.0 * y[3] + ox
    out[3] = -2.0 * y[2] + oy
    if y.shape[0] == 20:
        oxx, oxy, oyy = omega_hess(y[0], y[1], mu)
        # d(Phi)/dt = A Phi, A = [[0, I], [Omega_hess, 2J]]
        for j in range(4):
            p0 = y[4 + j]
            p1 = y[8 + j]
            p2 = y[12 + j]
            p3 = y[16 + j]
            out[4 + j] = p2
            out[8 + j] = p3
            out[12 + j] = oxx * p0 + oxy * p1 + 2.0 * p3
            out[16 + j] = oxy * p0 + oyy * p1 - 2.0 * p2


@njit(cache=True, nogil=True)
def jacobi(y, mu):
    r1 = math.sqrt(y[0] * y[0] + y[1] * y[1])
    dx2 = y[0] - 1.0
    r2 = math.sqrt(dx2 * dx2 + y[1] * y[1])
    om = 0.5 * ((y[0] - mu) ** 2 + y[1] * y[1]) + (1.0 - mu) / r1 + 0.5 * mu * (1.0 - mu)
    if mu > 0.0:
        om += mu / r2
    return 2.0 * om - (y[2] * y[2] + y[3] * y[3])


@njit(cache=True, nogil=True)
def kepler_e2(y, mu):
    Y1 = y[0] - 1.0
    Y2 = y[1]
    R = math.sqrt(Y1 * Y1 + Y2 * Y2)
    ang = y[2] * Y2 - y[3] * Y1
    return 0.5 * (y[2] * y[2] + y[3] * y[3]) - mu / R - ang + 0.5 * R * R


# --------------------------------------------------------------------------
# Dormand-Prince step and dense output
# --------------------------------------------------------------------------

@njit(cache=True, nogil=True)
def dp_step(y, h, mu, K, ynew, tmp):
    """One DOPRI5 step from y with K[0] = f(y) already filled.

    Fills K[1:7] (K[6] = f(ynew), FSAL) and ynew; returns the 5th-4th order
    difference vector norm pieces through the caller (see ``err_norm``).
    """
    n = y.shape[0]
    for i in range(n):
        tmp[i] = y[i] + h * A21 * K[0, i]
    deriv(tmp, mu, K[1])
    for i in range(n):
        tmp[i] = y[i] + h * (A31 * K[0, i] + A32 * K[1, i])
    deriv(tmp, mu, K[2])
    for i in range(n):
        tmp[i] = y[i] + h * (A41 * K[0, i] + A42 * K[1, i] + A43 * K[2, i])
    deriv(tmp, mu, K[3])
    for i in range(n):
        tmp[i] = y[i] + h * (A51 * K[0, i] + A52 * K[1, i] + A53 * K[2, i] + A54 * K[3, i])
    deriv(tmp, mu, K[4])
    for i in range(n):
        tmp[i] = y[i] + h * (A61 * K[0, i] + A62 * K[1, i] + A63 * K[2, i]
                             + A64 * K[3, i] + A65 * K[4, i])
    deriv(tmp, mu, K[5])
    for i in range(n):
        ynew[i] = y[i] + h * (B1 * K[0, i] + B3 * K[2, i] + B4 * K[3, i]
                              + B5 * K[4, i] + B6 * K[5, i])
    deriv(ynew, mu, K[6])


@njit(cache=True, nogil=True)
def err_norm(y, ynew, K, h, rtol, atol):
    n = y.shape[0]
    acc = 0.0
    for i in range(n):
        e = h * (E1 * K[0, i] + E3 * K[2, i] + E4 * K[3, i] + E5 * K[4, i]
                 + E6 * K[5, i] + E7 * K[6, i])
        sc = atol + rtol * max(abs(y[i]), abs(ynew[i]))
        acc += (e / sc) ** 2
    return math.sqrt(acc / n)


@njit(cache=True, nogil=True)
def dense_eval(y, ynew, K, h, theta, out):
    """Continuous extension on a step; exact at both step endpoints."""
    n = y.shape[0]
    if theta <= 0.0:
        for i in range(n):
            out[i] = y[i]
        return
    if theta >= 1.0:
        for i in range(n):
            out[i] = ynew[i]
        return
    t2 = theta * theta
    t3 = t2 * theta
    t4 = t3 * theta
    for i in range(n):
        acc = 0.0
        for s in range(7):
            w = (DENSE_P[s, 0] * theta + DENSE_P[s, 1] * t2
                 + DENSE_P[s, 2] * t3 + DENSE_P[s, 3] * t4)
            acc += K[s, i] * w
        out[i] = y[i] + h * acc


@njit(cache=True, nogil=True)
def initial_step(y, f0, mu, direction, rtol, atol, hmax, tmp, f1):
    """Hairer's starting step heuristic for a 5th-order method."""
    n = y.shape[0]
    d0 = 0.0
    d1 = 0.0
    for i in range(n):
        sc = atol + rtol * abs(y[i])
        d0 += (y[i] / sc) ** 2
        d1 += (f0[i] / sc) ** 2
    d0 = math.sqrt(d0 / n)
    d1 = math.sqrt(d1 / n)
    if d0 < 1e-5 or d1 < 1e-5:
        h0 = 1e-6
    else:
        h0 = 0.01 * d0 / d1
    h0 = min(h0, hmax)
    for i in range(n):
        tmp[i] = y[i] + direction * h0 * f0[i]
    deriv(tmp, mu, f1)
    d2 = 0.0
    for i in range(n):
        sc = atol + rtol * abs(y[i])
        d2 += ((f1[i] - f0[i]) / sc) ** 2
    d2 = math.sqrt(d2 / n) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100.0 * h0, h1, hmax)


@njit(cache=True, nogil=True)
def exact_state(y, f0, h, mu, out):
    """State at node + h from a fresh DOPRI5 step (|h| within accepted step)."""
    n = y.shape[0]
    if h == 0.0:
        for i in range(n):
            out[i] = y[i]
        return
    K = np.empty((7, n))
    tmp = np.empty(n)
    for i in range(n):
        K[0, i] = f0[i]
    dp_step(y, h, mu, K, out, tmp)


# --------------------------------------------------------------------------
# geometry helpers
# --------------------------------------------------------------------------

@njit(cache=True, nogil=True)
def wrap_pi(a):
    while a > math.pi:
        a -= TWO_PI
    while a <= -math.pi:
        a += TWO_PI
    return a


@njit(cache=True, nogil=True)
def angle_p1(y):
    return math.atan2(y[1], y[0])


@njit(cache=True, nogil=True)
def angle_p2(y):
    return math.atan2(y[1], y[0] - 1.0)


@njit(cache=True, nogil=True)
def too_close(y, mu, rmin):
    r1 = math.sqrt(y[0] * y[0] + y[1] * y[1])
    dx = y[0] - 1.0
    r2 = math.sqrt(dx * dx + y[1] * y[1])
    if r1 < rmin:
        return True
    if mu > 0.0 and r2 < rmin:
        return True
    return False


@njit(cache=True, nogil=True)
def polar_p2(y):
    """(r, theta, rdot, thetadot) about P2 in the rotating frame."""
    Y1 = y[0] - 1.0
    Y2 = y[1]
    r = math.sqrt(Y1 * Y1 + Y2 * Y2)
    th = math.atan2(Y2, Y1)
    rdot = (Y1 * y[2] + Y2 * y[3]) / r
    thdot = (Y1 * y[3] - Y2 * y[2]) / (r * r)
    return r, th, rdot, thdot


# --------------------------------------------------------------------------
# generic event propagation
# --------------------------------------------------------------------------

@njit(cache=True, nogil=True)
def _event_g(kind, par, y, phi1, phi2, phi1_0, phi2_0):
    """Event function value; sign changes mark candidate events."""
    if kind == EV_RAY:
        c = math.cos(par[0])
        s = math.sin(par[0])
        Y1 = y[0] - 1.0
        return -s * Y1 + c * y[1]
    elif kind == EV_AXIS:
        if par[0] == 0.0:
            return y[1]
        return y[0] - 1.0
    elif kind == EV_WIND:
        if par[0] == 0.0:
            d = phi1 - phi1_0
        else:
            d = phi2 - phi2_0
        # distance to the nearest multiple-of-threshold boundary, signed by |d|
        return abs(d) - TWO_PI * par[1]
    else:
        Y1 = y[0] - 1.0
        return math.sqrt(Y1 * Y1 + y[1] * y[1]) - par[0]


@njit(cache=True, nogil=True)
def _event_accept(kind, par, y, gprev, gnew):
    """Direction and region filters applied at a located event."""
    rising = gnew > gprev
    if kind == EV_RAY:
        if par[1] > 0.0 and not rising:
            return False
        if par[1] < 0.0 and rising:
            return False
        Y1 = y[0] - 1.0
        return math.cos(par[0]) * Y1 + math.sin(par[0]) * y[1] > 0.0
    elif kind == EV_AXIS:
        if par[1] > 0.0 and not rising:
            return False
        if par[1] < 0.0 and rising:
            return False
        if par[0] == 0.0:
            other = y[0] - 1.0
        else:
            other = y[1]
        return par[2] <= other <= par[3]
    elif kind == EV_WIND:
        return rising
    else:
        return rising


@njit(cache=True, nogil=True)
def _phi_at(y, a1_ref, a2_ref, p1_ref, p2_ref):
    a1 = angle_p1(y)
    a2 = angle_p2(y)
    return p1_ref + wrap_pi(a1 - a1_ref), p2_ref + wrap_pi(a2 - a2_ref)


@njit(cache=True, nogil=True)
def _locate(kind, par, y, ynew, K, h, th_a, th_b, g_a, g_b,
            a1_ref, a2_ref, p1_ref, p2_ref, phi1_0, phi2_0, evtol, buf):
    """Illinois false position on the dense output; returns theta in [th_a, th_b]."""
    fa = g_a
    fb = g_b
    a = th_a
    b = th_b
    side = 0
    habs = abs(h)
    c = b
    for _ in range(200):
        if (b - a) * habs <= evtol:
            break
        c = (a * fb - b * fa) / (fb - fa)
        if not (a < c < b):
            c = 0.5 * (a + b)
        dense_eval(y, ynew, K, h, c, buf)
        q1, q2 = _phi_at(buf, a1_ref, a2_ref, p1_ref, p2_ref)
        fc = _event_g(kind, par, buf, q1, q2, phi1_0, phi2_0)
        if fc == 0.0:
            a = c
            b = c
            break
        if (fc > 0.0) == (fb > 0.0):
            b = c
            fb = fc
            if side == -1:
                fa *= 0.5
            side = -1
        else:
            a = c
            fa = fc
            if side == 1:
                fb *= 0.5
            side = 1
    return 0.5 * (a + b)


@njit(cache=True, nogil=True)
def propagate_kernel(y0, t0, t_end, mu, cfg, ev_kind, ev_par, ev_term,
                     store, max_nodes, max_events):
    """Adaptive propagation with events.

    Returns (status, n_nodes, ts, ys, Ks, phis, n_ev, ev_idx, ev_t, ev_y, ev_phi,
    t_final, y_final, n_steps).
    """
    n = y0.shape[0]
    rtol = cfg[CFG_RTOL]
    atol = cfg[CFG_ATOL]
    hmin = cfg[CFG_HMIN]
    hmax = cfg[CFG_HMAX]
    rmin = cfg[CFG_RMIN]
    evtol = cfg[CFG_EVTOL]
    direction = 1.0 if t_end >= t0 else -1.0
    n_ev_kinds = ev_kind.shape[0]

    cap = max_nodes if store else 1
    ts = np.empty(cap)
    ys = np.empty((cap, n))
    Ks = np.empty((cap, 7, n)) if store else np.empty((1, 7, n))
    phis = np.empty((cap, 2))
    ev_idx = np.empty(max_events, dtype=np.int64)
    ev_t = np.empty(max_events)
    ev_y = np.empty((max_events, n))
    ev_phi = np.empty((max_events, 2))
    n_ev = 0

    y = y0.copy()
    ynew = np.empty(n)
    tmp = np.empty(n)
    buf = np.empty(n)
    f1 = np.empty(n)
    K = np.empty((7, n))
    deriv(y, mu, K[0])
    t = t0

    a1 = angle_p1(y)
    a2 = angle_p2(y)
    phi1 = a1
    phi2 = a2
    phi1_0 = phi1
    phi2_0 = phi2

    n_nodes = 0
    if store:
        ts[0] = t
        ys[0] = y
        phis[0, 0] = phi1
        phis[0, 1] = phi2
        n_nodes = 1

    if too_close(y, mu, rmin):
        return (ST_COLLISION, n_nodes, ts, ys, Ks, phis, n_ev, ev_idx, ev_t, ev_y,
                ev_phi, t, y, 0)

    span = abs(t_end - t0)
    if span == 0.0:
        return (ST_DONE, n_nodes, ts, ys, Ks, phis, n_ev, ev_idx, ev_t, ev_y,
                ev_phi, t, y, 0)
    h = min(cfg[CFG_HINIT], initial_step(y, K[0], mu, direction, rtol, atol, hmax, tmp, f1))
    h = max(h, hmin)
    facold = 1e-4
    n_steps = 0
    gprev = np.empty(n_ev_kinds)
    gcur = np.empty(n_ev_kinds)
    status = ST_DONE

    while True:
        remaining = abs(t_end - t)
        if remaining <= 1e-15 * max(1.0, abs(t_end)):
            status = ST_DONE
            break
        last = False
        if h >= remaining:
            h = remaining
            last = True
        hs = direction * h
        dp_step(y, hs, mu, K, ynew, tmp)
        err = err_norm(y, ynew, K, hs, rtol, atol)
        if not (err <= 1.0):
            if not math.isfinite(err):
                fac11 = 1e10
            else:
                fac11 = err ** EXPO1
            h = h / min(FAC_MAX_INV, fac11 / SAFETY)
            if h < hmin:
                status = ST_UNDERFLOW
                break
            continue
        n_steps += 1
        fac11 = err ** EXPO1
        fac = fac11 / facold ** BETA
        fac = max(FAC_MIN_INV, min(FAC_MAX_INV, fac / SAFETY))
        hnext = min(h / fac, hmax)
        facold = max(err, 1e-4)

        # scan the step on a few dense samples
        q1_ref = phi1
        q2_ref = phi2
        r1_ref = a1
        r2_ref = a2
        for e in range(n_ev_kinds):
            gprev[e] = _event_g(ev_kind[e], ev_par[e], y, phi1, phi2, phi1_0, phi2_0)
        th_prev = 0.0
        stop = False
        collided = False
        for j in range(1, N_SUB + 1):
            th = j / N_SUB
            dense_eval(y, ynew, K, hs, th, buf)
            if too_close(buf, mu, rmin):
                collided = True
                t_hit = t + hs * th
                break
            na1 = angle_p1(buf)
            na2 = angle_p2(buf)
            nphi1 = q1_ref + wrap_pi(na1 - r1_ref)
            nphi2 = q2_ref + wrap_pi(na2 - r2_ref)
            for e in range(n_ev_kinds):
                gcur[e] = _event_g(ev_kind[e], ev_par[e], buf, nphi1, nphi2, phi1_0, phi2_0)
            # collect crossings in this sub-interval, process in time order
            done_mask = 0
            while True:
                best = -1
                best_th = 2.0
                for e in range(n_ev_kinds):
                    if (done_mask >> e) & 1:
                        continue
                    ga = gprev[e]
                    gb = gcur[e]
                    if ga == 0.0 or (ga > 0.0) == (gb > 0.0):
                        continue
                    # a start point sitting on the surface up to roundoff is not an event
                    if n_steps == 1 and j == 1 and abs(ga) <= START_GTOL:
                        continue
                    the = _locate(ev_kind[e], ev_par[e], y, ynew, K, hs, th_prev, th,
                                  ga, gb, r1_ref, r2_ref, q1_ref, q2_ref,
                                  phi1_0, phi2_0, evtol, tmp)
                    if the < best_th:
                        best_th = the
                        best = e
                if best < 0:
                    break
                done_mask |= (1 << best)
                te = t + hs * best_th
                exact_state(y, K[0], hs * best_th, mu, tmp)
                ep1, ep2 = _phi_at(tmp, r1_ref, r2_ref, q1_ref, q2_ref)
                if _event_accept(ev_kind[best], ev_par[best], tmp, gprev[best], gcur[best]):
                    if n_ev >= max_events:
                        status = ST_BUFFER
                        stop = True
                        break
                    ev_idx[n_ev] = best
                    ev_t[n_ev] = te
                    for i in range(n):
                        ev_y[n_ev, i] = tmp[i]
                    ev_phi[n_ev, 0] = ep1
                    ev_phi[n_ev, 1] = ep2
                    n_ev += 1
                    if ev_term[best]:
                        status = ST_TERMINAL
                        stop = True
                        t = te
                        for i in range(n):
                            y[i] = tmp[i]
                        phi1 = ep1
                        phi2 = ep2
                        break
            if stop:
                break
            for e in range(n_ev_kinds):
                gprev[e] = gcur[e]
            q1_ref = nphi1
            q2_ref = nphi2
            r1_ref = na1
            r2_ref = na2
            th_prev = th

        if collided:
            status = ST_COLLISION
            t = t_hit
            for i in range(n):
                y[i] = buf[i]
            if store and n_nodes < cap:
                ts[n_nodes] = t
                ys[n_nodes] = y
                phis[n_nodes, 0] = phi1
                phis[n_nodes, 1] = phi2
                n_nodes += 1
            break
        if stop:
            if store and status == ST_TERMINAL and n_nodes < cap:
                ts[n_nodes] = t
                ys[n_nodes] = y
                phis[n_nodes, 0] = phi1
                phis[n_nodes, 1] = phi2
                n_nodes += 1
            break

        if store:
            if n_nodes >= cap:
                status = ST_BUFFER
                break
            Ks[n_nodes - 1] = K
        t = t_end if last else t + hs
        for i in range(n):
            y[i] = ynew[i]
            K[0, i] = K[6, i]
        a1 = angle_p1(y)
        a2 = angle_p2(y)
        phi1 = q1_ref + wrap_pi(a1 - r1_ref)
        phi2 = q2_ref + wrap_pi(a2 - r2_ref)
        if store:
            ts[n_nodes] = t
            ys[n_nodes] = y
            phis[n_nodes, 0] = phi1
            phis[n_nodes, 1] = phi2
            n_nodes += 1
        h = hnext
        if h < hmin:
            h = hmin

    return (status, n_nodes, ts, ys, Ks, phis, n_ev, ev_idx, ev_t, ev_y, ev_phi,
            t, y, n_steps)


# --------------------------------------------------------------------------
# W-algorithm classification loop
# --------------------------------------------------------------------------

@njit(cache=True, nogil=True)
def classify_kernel(y0, theta0, n_cycles, mu, cfg):
    """Classify one periapsis state as n-stable or n-unstable.

    Returns (verdict, kind, completed, tie, t_final, crossings (n x 10),
    n_retro, n_steps). Crossing rows: t, r, rdot, thetadot, E2, phi2_turns,
    y1, y2, v1, v2.
    """
    rtol = cfg[CFG_RTOL]
    atol = cfg[CFG_ATOL]
    hmin = cfg[CFG_HMIN]
    hmax = cfg[CFG_HMAX]
    tmax = cfg[CFG_TMAX]
    rmin = cfg[CFG_RMIN]
    evtol = cfg[CFG_EVTOL]
    tantol = cfg[CFG_TANTOL]

    cross = np.zeros((n_cycles, 10))
    y = y0.copy()
    ynew = np.empty(4)
    tmp = np.empty(4)
    buf = np.empty(4)
    st = np.empty(4)
    f1 = np.empty(4)
    K = np.empty((7, 4))
    deriv(y, mu, K[0])
    t = 0.0

    ray_par = np.array([theta0, 0.0, 0.0, 0.0])
    wind_par = np.array([0.0, 1.0, 0.0, 0.0])
    a1 = angle_p1(y)
    a2 = angle_p2(y)
    phi1 = a1
    phi2 = a2
    phi1_0 = phi1
    phi2_0 = phi2
    completed = 0
    n_retro = 0
    n_steps = 0

    if too_close(y, mu, rmin):
        return V_UNSTABLE, K_COLLISION, 0, 0, 0.0, cross, 0, 0

    h = min(cfg[CFG_HINIT], initial_step(y, K[0], mu, 1.0, rtol, atol, hmax, tmp, f1))
    h = max(h, hmin)
    facold = 1e-4

    while True:
        if t >= tmax:
            return V_UNSTABLE, K_NON_RETURN, completed, 0, t, cross, n_retro, n_steps
        if t + h > tmax:
            h = tmax - t
        dp_step(y, h, mu, K, ynew, tmp)
        err = err_norm(y, ynew, K, h, rtol, atol)
        if not (err <= 1.0):
            if not math.isfinite(err):
                fac11 = 1e10
            else:
                fac11 = err ** EXPO1
            h = h / min(FAC_MAX_INV, fac11 / SAFETY)
            if h < hmin:
                if too_close(y, mu, 100.0 * rmin):
                    return V_UNSTABLE, K_COLLISION, completed, 0, t, cross, n_retro, n_steps
                return V_ERROR, K_NONE, completed, 0, t, cross, n_retro, n_steps
            continue
        n_steps += 1
        fac11 = err ** EXPO1
        fac = fac11 / facold ** BETA
        fac = max(FAC_MIN_INV, min(FAC_MAX_INV, fac / SAFETY))
        hnext = min(h / fac, hmax)
        facold = max(err, 1e-4)

        q1_ref = phi1
        q2_ref = phi2
        r1_ref = a1
        r2_ref = a2
        g_ray_prev = _event_g(EV_RAY, ray_par, y, phi1, phi2, phi1_0, phi2_0)
        g_w_prev = _event_g(EV_WIND, wind_par, y, phi1, phi2, phi1_0, phi2_0)
        th_prev = 0.0
        for j in range(1, N_SUB + 1):
            th = j / N_SUB
            dense_eval(y, ynew, K, h, th, buf)
            if too_close(buf, mu, rmin):
                return (V_UNSTABLE, K_COLLISION, completed, 0, t + h * th, cross,
                        n_retro, n_steps)
            na1 = angle_p1(buf)
            na2 = angle_p2(buf)
            nphi1 = q1_ref + wrap_pi(na1 - r1_ref)
            nphi2 = q2_ref + wrap_pi(na2 - r2_ref)
            g_ray = _event_g(EV_RAY, ray_par, buf, nphi1, nphi2, phi1_0, phi2_0)
            g_w = _event_g(EV_WIND, wind_par, buf, nphi1, nphi2, phi1_0, phi2_0)

            t_w = -1.0
            if g_w_prev < 0.0 and g_w >= 0.0:
                th_w = _locate(EV_WIND, wind_par, y, ynew, K, h, th_prev, th, g_w_prev, g_w,
                               r1_ref, r2_ref, q1_ref, q2_ref, phi1_0, phi2_0, evtol, tmp)
                t_w = t + h * th_w
            t_c = -1.0
            counted = False
            if g_ray_prev != 0.0 and (g_ray_prev > 0.0) != (g_ray > 0.0):
                th_c = _locate(EV_RAY, ray_par, y, ynew, K, h, th_prev, th, g_ray_prev, g_ray,
                               r1_ref, r2_ref, q1_ref, q2_ref, phi1_0, phi2_0, evtol, tmp)
                exact_state(y, K[0], h * th_c, mu, st)
                Y1 = st[0] - 1.0
                if math.cos(theta0) * Y1 + math.sin(theta0) * st[1] > 0.0:
                    t_c = t + h * th_c
                    c1, c2 = _phi_at(st, r1_ref, r2_ref, q1_ref, q2_ref)
                    if g_ray > g_ray_prev:
                        kturn = int(round((c2 - phi2_0) / TWO_PI))
                        if kturn == completed + 1:
                            counted = True
                    else:
                        n_retro += 1

            if t_w >= 0.0 and (not counted or t_w <= t_c + evtol):
                tie = 1 if (counted and abs(t_w - t_c) <= evtol) else 0
                return V_UNSTABLE, K_P1_CYCLE, completed, tie, t_w, cross, n_retro, n_steps
            if counted:
                r, th_ang, rdot, thdot = polar_p2(st)
                e2 = kepler_e2(st, mu)
                row = cross[completed]
                row[0] = t_c
                row[1] = r
                row[2] = rdot
                row[3] = thdot
                row[4] = e2
                row[5] = (c2 - phi2_0) / TWO_PI
                for i in range(4):
                    row[6 + i] = st[i]
                bad_e = e2 >= 0.0
                bad_t = abs(thdot) < tantol
                if bad_e:
                    tie = 1 if bad_t else 0
                    return V_UNSTABLE, K_E2_NONNEG, completed, tie, t_c, cross, n_retro, n_steps
                if bad_t:
                    return V_UNSTABLE, K_TANGENTIAL, completed, 0, t_c, cross, n_retro, n_steps
                completed += 1
                if completed >= n_cycles:
                    return V_STABLE, K_NONE, completed, 0, t_c, cross, n_retro, n_steps
            g_ray_prev = g_ray
            g_w_prev = g_w
            q1_ref = nphi1
            q2_ref = nphi2
            r1_ref = na1
            r2_ref = na2
            th_prev = th

        t = t + h
        for i in range(4):
            y[i] = ynew[i]
            K[0, i] = K[6, i]
        a1 = angle_p1(y)
        a2 = angle_p2(y)
        phi1 = q1_ref + wrap_pi(a1 - r1_ref)
        phi2 = q2_ref + wrap_pi(a2 - r2_ref)
        h = max(hnext, hmin)


@njit(cache=True, nogil=True)
def classify_batch(states, theta0s, n_cycles, mu, cfg):
    """Loop ``classify_kernel`` over rows; returns packed summary arrays."""
    m = states.shape[0]
    verdict = np.empty(m, dtype=np.int64)
    kind = np.empty(m, dtype=np.int64)
    completed = np.empty(m, dtype=np.int64)
    tie = np.empty(m, dtype=np.int64)
    t_final = np.empty(m)
    n_retro = np.empty(m, dtype=np.int64)
    crossings = np.empty((m, n_cycles, 10))
    for i in range(m):
        v, k, c, ti, tf, cr, nr, _ = classify_kernel(states[i], theta0s[i], n_cycles, mu, cfg)
        verdict[i] = v
        kind[i] = k
        completed[i] = c
        tie[i] = ti
        t_final[i] = tf
        n_retro[i] = nr
        crossings[i] = cr
    return verdict, kind, completed, tie, t_final, n_retro, crossings

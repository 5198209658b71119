"""W-algorithm: periapsis initial conditions along a ray from P2 and their
n-stable / n-unstable classification."""
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
from numpy.typing import NDArray
from scipy.optimize import brentq

from . import _kernels as K
from .dynamics import jacobi_constant, kepler_energy, to_p1_frame, to_p2_frame
from .errors import DomainError, IntegrationError
from .integrate import IntegratorConfig, Trajectory, axis_event, propagate_events

KIND_NAMES = {
    K.K_NONE: None,
    K.K_P1_CYCLE: "P1-cycle",
    K.K_E2_NONNEG: "E2-nonnegative",
    K.K_TANGENTIAL: "tangential",
    K.K_NON_RETURN: "non-return",
    K.K_COLLISION: "collision-guard",
}


@dataclass(frozen=True)
class PeriapsisIC:
    r: float
    theta: float
    e: float
    mu: float

    def __post_init__(self):
        if not self.r > 0.0:
            raise DomainError("periapsis radius must be positive")
        if not (0.0 <= self.e < 1.0):
            raise DomainError("eccentricity must lie in [0, 1)")
        if not (0.0 < self.mu < 0.5):
            raise DomainError("mass ratio must lie in (0, 0.5)")

    @property
    def state(self) -> NDArray:
        return periapsis_state(self)

    @property
    def jacobi(self) -> float:
        return float(jacobi_constant(to_p1_frame(self.state), self.mu))


@dataclass(frozen=True)
class CrossingRecord:
    t: float
    r: float
    rdot: float
    thetadot: float
    E2: float
    phi2_turns: float
    state: tuple  # P1 frame, at the crossing


@dataclass
class StabilityOutcome:
    n: int
    stable: bool
    unstable_kind: Optional[str]
    failing_cycle: Optional[int]
    completed: int
    crossings: List[CrossingRecord]
    jacobi: float
    tie: bool = False
    t_final: float = 0.0
    retrograde_crossings: int = 0

    @property
    def verdict(self) -> str:
        return "stable" if self.stable else "unstable"

    def truncate(self, m: int) -> "StabilityOutcome":
        """Outcome the same trajectory would give for a smaller cycle target."""
        if m > self.n or m < 1:
            raise DomainError("truncation target must satisfy 1 <= m <= n")
        if self.completed >= m:
            return StabilityOutcome(m, True, None, None, m, self.crossings[:m], self.jacobi,
                                    False, self.crossings[m - 1].t,
                                    self.retrograde_crossings)
        return StabilityOutcome(m, False, self.unstable_kind, self.failing_cycle,
                                self.completed, list(self.crossings), self.jacobi,
                                self.tie, self.t_final, self.retrograde_crossings)


def periapsis_velocity(r, e, mu):
    """Rotating-frame speed at osculating periapsis (may be negative)."""
    return np.sqrt(mu * (1.0 + e) / r) - r


def periapsis_state(ic: PeriapsisIC) -> NDArray:
    """P2-frame state at periapsis on the ray at angle ``ic.theta``.

    Velocity is perpendicular to the ray, posigrade for positive
    :func:`periapsis_velocity` and reversed otherwise.
    """
    v = periapsis_velocity(ic.r, ic.e, ic.mu)
    c, s = math.cos(ic.theta), math.sin(ic.theta)
    return np.array([ic.r * c, ic.r * s, -v * s, v * c])


def periapsis_states(r, theta, e, mu) -> NDArray:
    """Vectorised :func:`periapsis_state` (P2 frame), shape (m, 4)."""
    r, theta, e = np.broadcast_arrays(np.asarray(r, float), np.asarray(theta, float),
                                      np.asarray(e, float))
    v = periapsis_velocity(r, e, mu)
    c, s = np.cos(theta), np.sin(theta)
    return np.stack([r * c, r * s, -v * s, v * c], axis=-1)


def _outcome(n, v, k, completed, tie, tf, cross, n_retro, C):
    if v == K.V_ERROR:
        raise IntegrationError("step size underflow during classification")
    recs = [CrossingRecord(float(row[0]), float(row[1]), float(row[2]), float(row[3]),
                           float(row[4]), float(row[5]), tuple(float(x) for x in row[6:10]))
            for row in cross[:min(completed + (1 if k in (K.K_E2_NONNEG, K.K_TANGENTIAL) else 0),
                                  n)]]
    stable = v == K.V_STABLE
    return StabilityOutcome(
        n=int(n), stable=bool(stable), unstable_kind=KIND_NAMES[int(k)],
        failing_cycle=None if stable else int(completed) + 1, completed=int(completed),
        crossings=recs, jacobi=float(C), tie=bool(tie), t_final=float(tf),
        retrograde_crossings=int(n_retro))


def classify(ic: PeriapsisIC, n: int, cfg: Optional[IntegratorConfig] = None) -> StabilityOutcome:
    """Run the W-algorithm on one initial condition for ``n`` cycles about P2."""
    if n < 1:
        raise DomainError("cycle target n must be >= 1")
    cfg = cfg or IntegratorConfig()
    y0 = to_p1_frame(periapsis_state(ic))
    res = K.classify_kernel(y0, float(ic.theta), int(n), float(ic.mu), cfg.as_array())
    v, k, completed, tie, tf, cross, n_retro, _ = res
    return _outcome(n, v, k, completed, tie, tf, cross, n_retro, K.jacobi(y0, ic.mu))


def _classify_chunk(states, thetas, n, mu, cfg_arr):
    return K.classify_batch(states, thetas, n, mu, cfg_arr)


def classify_many(r, theta, e, mu: float, n: int, cfg: Optional[IntegratorConfig] = None,
                  threads: int = 1, chunk: int = 64) -> List[StabilityOutcome]:
    """Classify many ICs; results are ordered as the inputs regardless of ``threads``."""
    if n < 1:
        raise DomainError("cycle target n must be >= 1")
    cfg = cfg or IntegratorConfig()
    r, theta, e = np.broadcast_arrays(np.atleast_1d(np.asarray(r, float)),
                                      np.atleast_1d(np.asarray(theta, float)),
                                      np.atleast_1d(np.asarray(e, float)))
    if np.any(r <= 0) or np.any((e < 0) | (e >= 1)):
        raise DomainError("need r > 0 and 0 <= e < 1")
    states = to_p1_frame(periapsis_states(r, theta, e, mu))
    thetas = np.ascontiguousarray(theta, dtype=float)
    cfg_arr = cfg.as_array()
    m = r.size
    bounds = [(i, min(i + chunk, m)) for i in range(0, m, chunk)]
    work = [(np.ascontiguousarray(states[a:b]), thetas[a:b]) for a, b in bounds]
    if threads > 1 and len(work) > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            parts = list(ex.map(lambda w: _classify_chunk(w[0], w[1], n, mu, cfg_arr), work))
    else:
        parts = [_classify_chunk(w[0], w[1], n, mu, cfg_arr) for w in work]
    out = []
    for (a, b), part in zip(bounds, parts):
        verdict, kind, completed, tie, tf, n_retro, cross = part
        for j in range(b - a):
            C = K.jacobi(states[a + j], mu)
            out.append(_outcome(n, verdict[j], kind[j], completed[j], tie[j], tf[j],
                                cross[j], n_retro[j], C))
    return out


@dataclass
class P1CrossingDiagnostic:
    t1: float
    Y1: float
    E2: float
    angular_momentum: float
    passed: bool


def e2_at_p1_crossing_check(ic, cfg: Optional[IntegratorConfig] = None,
                            y1_window=(-np.inf, -1.0)) -> P1CrossingDiagnostic:
    """Kepler energy at the first crossing of the negative Y1-axis beyond P1.

    Meant for trajectories that escape P2 and go around P1; the check passes
    when the two-body energy about P2 is positive there. ``ic`` is either a
    :class:`PeriapsisIC`, which is integrated here, or an already stored
    :class:`~wsbkit.integrate.Trajectory`, whose dense output is searched.
    """
    if isinstance(ic, Trajectory):
        t1, st1 = _first_axis_crossing(ic, y1_window)
        mu = ic.mu
    else:
        cfg = cfg or IntegratorConfig()
        mu = ic.mu
        y0 = to_p1_frame(periapsis_state(ic))
        ev = axis_event(axis=0, direction=0, lo=y1_window[0], hi=y1_window[1], terminal=True)
        _, recs = propagate_events(y0, mu, cfg, [ev], store=False)
        if not recs:
            raise DomainError("no qualifying crossing of the negative Y1-axis")
        t1, st1 = recs[0].t, recs[0].state
    st = to_p2_frame(st1)
    e2 = float(kepler_energy(st, mu))
    L = float(st[0] * st[3] - st[1] * st[2])  # rotating-frame, about P2
    return P1CrossingDiagnostic(float(t1), float(st[0]), e2, L, e2 > 0.0)


def _first_axis_crossing(traj: Trajectory, y1_window):
    y = traj.y
    for i in np.flatnonzero(np.sign(y[:-1, 1]) != np.sign(y[1:, 1])):
        t = brentq(lambda s: traj(s)[1], traj.t[i], traj.t[i + 1], xtol=1e-14)
        st = traj(t)
        if y1_window[0] <= st[0] - 1.0 <= y1_window[1]:
            return t, st
    raise DomainError("no qualifying crossing of the negative Y1-axis")

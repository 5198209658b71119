"""Adaptive Dormand-Prince propagation with dense output and event location.

The compiled loops live in :mod:`wsbkit._kernels`; this module wraps them in
typed configuration objects and a :class:`Trajectory` container.
"""
import csv
import math
from dataclasses import asdict, dataclass, field
from typing import List, Optional, Sequence

import numpy as np
from numpy.typing import NDArray

from . import _kernels as K
from .dynamics import R_MIN
from .errors import CollisionError, DomainError, IntegrationError

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class IntegratorConfig:
    rel_tol: float = 1e-12
    abs_tol: float = 1e-12
    h_init: float = 1e-2
    h_min: float = 1e-14
    h_max: float = 0.1
    t_max: float = 200 * TWO_PI
    r_min: float = R_MIN
    event_tol: float = 1e-13
    tangent_tol: float = 1e-8

    def __post_init__(self):
        if not (0 < self.h_min <= self.h_init <= self.h_max):
            raise DomainError("need 0 < h_min <= h_init <= h_max")
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise DomainError("tolerances must be positive")
        if self.t_max <= 0:
            raise DomainError("t_max must be positive")

    def as_array(self) -> NDArray:
        cfg = np.empty(K.CFG_SIZE)
        cfg[K.CFG_RTOL] = self.rel_tol
        cfg[K.CFG_ATOL] = self.abs_tol
        cfg[K.CFG_HINIT] = self.h_init
        cfg[K.CFG_HMIN] = self.h_min
        cfg[K.CFG_HMAX] = self.h_max
        cfg[K.CFG_TMAX] = self.t_max
        cfg[K.CFG_RMIN] = self.r_min
        cfg[K.CFG_EVTOL] = self.event_tol
        cfg[K.CFG_TANTOL] = self.tangent_tol
        return cfg

    def to_dict(self):
        return asdict(self)

    def replace(self, **kw):
        d = asdict(self)
        d.update(kw)
        return IntegratorConfig(**d)


# --------------------------------------------------------------------------
# events
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class EventSpec:
    """Event description.

    kind is one of ``"ray"``, ``"axis"``, ``"winding"``, ``"escape"``.

    * ray: crossing of the half-line from P2 at angle ``theta0``;
      ``direction`` +1 keeps only increasing polar angle, 0 keeps all.
    * axis: ``axis=0`` is the Y1-axis (Y2 = 0), ``axis=1`` the Y2-axis
      (Y1 = 0); crossings are kept only when the other coordinate lies in
      ``[lo, hi]`` and the sign matches ``direction`` (0 = both).
    * winding: unwrapped angle about ``center`` ("P1" or "P2") has changed by
      ``turns`` full turns in either sense.
    * escape: distance from P2 exceeds ``radius``.
    """

    kind: str
    theta0: float = 0.0
    direction: int = 0
    axis: int = 0
    lo: float = -np.inf
    hi: float = np.inf
    center: str = "P1"
    turns: float = 1.0
    radius: float = np.inf
    terminal: bool = False

    def encode(self):
        if self.kind == "ray":
            return K.EV_RAY, [self.theta0, float(self.direction), 0.0, 0.0]
        if self.kind == "axis":
            return K.EV_AXIS, [float(self.axis), float(self.direction), self.lo, self.hi]
        if self.kind == "winding":
            return K.EV_WIND, [0.0 if self.center == "P1" else 1.0, self.turns, 0.0, 0.0]
        if self.kind == "escape":
            return K.EV_ESCAPE, [self.radius, 1.0, 0.0, 0.0]
        raise DomainError(f"unknown event kind {self.kind!r}")


def ray_event(theta0, direction=1, terminal=False):
    return EventSpec("ray", theta0=theta0, direction=direction, terminal=terminal)


def axis_event(axis=0, direction=0, lo=-np.inf, hi=np.inf, terminal=False):
    return EventSpec("axis", axis=axis, direction=direction, lo=lo, hi=hi, terminal=terminal)


def winding_event(center="P1", turns=1.0, terminal=True):
    return EventSpec("winding", center=center, turns=turns, terminal=terminal)


def escape_event(radius, terminal=True):
    return EventSpec("escape", radius=radius, terminal=terminal)


@dataclass
class EventRecord:
    index: int       # position in the event list passed in
    kind: str
    t: float
    state: NDArray   # P1 frame
    phi1: float
    phi2: float

    @property
    def polar(self):
        return K.polar_p2(self.state)


def _encode_events(events: Sequence[EventSpec]):
    m = len(events)
    kinds = np.empty(m, dtype=np.int64)
    pars = np.zeros((m, 4))
    term = np.zeros(m, dtype=np.bool_)
    for i, ev in enumerate(events):
        k, p = ev.encode()
        kinds[i] = k
        pars[i] = p
        term[i] = ev.terminal
    return kinds, pars, term


# --------------------------------------------------------------------------
# trajectory
# --------------------------------------------------------------------------

@dataclass
class Trajectory:
    """Dense trajectory in the P1 frame with unwrapped winding angles."""

    t: NDArray
    y: NDArray
    coeffs: NDArray  # per step stage derivatives, shape (n_steps, 7, dim)
    phi1: NDArray
    phi2: NDArray
    mu: float
    status: str = "done"
    events: List[EventRecord] = field(default_factory=list)

    def __len__(self):
        return self.t.size

    @property
    def final_state(self):
        return self.y[-1]

    def __call__(self, t):
        """Dense-output evaluation at time(s) ``t`` inside the span."""
        ts = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.empty((ts.size, self.y.shape[1]))
        forward = self.t[-1] >= self.t[0]
        key = self.t if forward else -self.t
        for n, tq in enumerate(ts):
            kq = tq if forward else -tq
            i = int(np.searchsorted(key, kq, side="right")) - 1
            i = min(max(i, 0), self.t.size - 2)
            h = self.t[i + 1] - self.t[i]
            theta = (tq - self.t[i]) / h
            if theta <= 0.0:
                out[n] = self.y[i]
            elif theta >= 1.0:
                out[n] = self.y[i + 1]
            else:
                buf = np.empty(self.y.shape[1])
                K.dense_eval(self.y[i], self.y[i + 1], self.coeffs[i], h, theta, buf)
                out[n] = buf
        return out[0] if np.ndim(t) == 0 else out

    def jacobi(self):
        return np.array([K.jacobi(s, self.mu) for s in self.y])

    def kepler(self):
        return np.array([K.kepler_e2(s, self.mu) for s in self.y])

    def jacobi_drift(self):
        C = self.jacobi()
        return float(np.max(np.abs(C - C[0])) / abs(C[0]))

    def write_csv(self, path):
        C = self.jacobi()
        E2 = self.kepler()
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "y1", "y2", "v1", "v2", "C", "E2", "phi1", "phi2"])
            for i in range(self.t.size):
                w.writerow([fmt(v) for v in (self.t[i], *self.y[i, :4], C[i], E2[i],
                                              self.phi1[i], self.phi2[i])])


def fmt(v) -> str:
    return format(float(v), ".17g")


_STATUS = {K.ST_DONE: "done", K.ST_TERMINAL: "terminal", K.ST_COLLISION: "collision",
           K.ST_UNDERFLOW: "underflow", K.ST_BUFFER: "buffer-full"}


def step(state, h, mu, cfg: Optional[IntegratorConfig] = None):
    """One Dormand-Prince 5(4) step.

    Returns ``(new_state, error_norm, h_next)`` where ``error_norm`` is the
    scaled RMS of the embedded error estimate (accept when <= 1) and
    ``h_next`` the PI-controlled proposal for the following step.
    """
    cfg = cfg or IntegratorConfig()
    y = np.asarray(state, dtype=float).copy()
    if not (cfg.h_min <= abs(h) <= cfg.h_max):
        raise DomainError("step size outside [h_min, h_max]")
    n = y.size
    Kst = np.empty((7, n))
    ynew = np.empty(n)
    tmp = np.empty(n)
    K.deriv(y, mu, Kst[0])
    K.dp_step(y, float(h), float(mu), Kst, ynew, tmp)
    err = K.err_norm(y, ynew, Kst, float(h), cfg.rel_tol, cfg.abs_tol)
    if err == 0.0:
        fac = K.FAC_MIN_INV
    else:
        fac = max(K.FAC_MIN_INV, min(K.FAC_MAX_INV, err ** K.EXPO1 / 1e-4 ** K.BETA / K.SAFETY))
    h_next = min(abs(h) / fac, cfg.h_max)
    if err > 1.0 and abs(h) / min(K.FAC_MAX_INV, err ** K.EXPO1 / K.SAFETY) < cfg.h_min:
        raise IntegrationError("step size underflow")
    return ynew, err, h_next


def step_error_vector(state, h, mu):
    """Unscaled embedded error estimate of a single step (for order checks)."""
    y = np.asarray(state, dtype=float).copy()
    n = y.size
    Kst = np.empty((7, n))
    ynew = np.empty(n)
    tmp = np.empty(n)
    K.deriv(y, mu, Kst[0])
    K.dp_step(y, float(h), float(mu), Kst, ynew, tmp)
    e = np.array([K.E1, 0.0, K.E3, K.E4, K.E5, K.E6, K.E7])
    return h * (e @ Kst), ynew


def _run(state, t0, t1, mu, cfg, events, store, max_nodes=1 << 20, max_events=100000):
    y0 = np.asarray(state, dtype=float).copy()
    if events:
        kinds, pars, term = _encode_events(events)
    else:
        kinds = np.empty(0, dtype=np.int64)
        pars = np.zeros((0, 4))
        term = np.zeros(0, dtype=np.bool_)
    cap = max_nodes
    while True:
        res = K.propagate_kernel(y0, float(t0), float(t1), float(mu), cfg.as_array(),
                                 kinds, pars, term, store, cap, max_events)
        if res[0] == K.ST_BUFFER and store and res[1] >= cap:
            cap *= 4
            continue
        return res


def propagate_events(state, mu: float, cfg: Optional[IntegratorConfig] = None,
                     events: Sequence[EventSpec] = (), t_span=None, store=True,
                     raise_on_collision=False):
    """Propagate a P1-frame state with event location.

    ``t_span`` defaults to ``(0, cfg.t_max)``; a decreasing span integrates
    backwards. Returns ``(Trajectory, list[EventRecord])``. When ``store`` is
    false the trajectory holds only the start and end nodes.
    """
    cfg = cfg or IntegratorConfig()
    t0, t1 = (0.0, cfg.t_max) if t_span is None else map(float, t_span)
    y0 = np.asarray(state, dtype=float)
    (status, n_nodes, ts, ys, Ks, phis, n_ev, ev_idx, ev_t, ev_y, ev_phi,
     t_fin, y_fin, _) = _run(y0, t0, t1, mu, cfg, list(events), store)
    if status == K.ST_UNDERFLOW:
        raise IntegrationError(f"step size underflow at t={t_fin:.17g}")
    if status == K.ST_COLLISION and raise_on_collision:
        raise CollisionError(f"collision guard entered at t={t_fin:.17g}")
    recs = [EventRecord(int(ev_idx[i]), events[int(ev_idx[i])].kind, float(ev_t[i]),
                        ev_y[i].copy(), float(ev_phi[i, 0]), float(ev_phi[i, 1]))
            for i in range(n_ev)]
    if store:
        m = n_nodes
        coeffs = Ks[:max(m - 1, 0)].copy()
        # a terminal/collision node may end a partial step: rebuild its coeffs
        if m >= 2 and status in (K.ST_TERMINAL, K.ST_COLLISION):
            coeffs[m - 2] = _step_coeffs(ys[m - 2], ts[m - 1] - ts[m - 2], mu)
        traj = Trajectory(ts[:m].copy(), ys[:m].copy(), coeffs, phis[:m, 0].copy(),
                          phis[:m, 1].copy(), float(mu), _STATUS[status], recs)
    else:
        a1 = K.angle_p1(y0)
        a2 = K.angle_p2(y0)
        t_arr = np.array([t0, t_fin])
        y_arr = np.vstack([y0, y_fin])
        ph1 = np.array([a1, a1 + _total_turn(y0, y_fin, recs, 1)])
        ph2 = np.array([a2, a2 + _total_turn(y0, y_fin, recs, 2)])
        traj = Trajectory(t_arr, y_arr, np.empty((0, 7, y0.size)), ph1, ph2, float(mu),
                          _STATUS[status], recs)
    return traj, recs


def _total_turn(y0, y1, recs, which):
    # without stored nodes only the wrapped difference is known
    a = K.angle_p1 if which == 1 else K.angle_p2
    return K.wrap_pi(a(y1) - a(y0))


def _step_coeffs(y, h, mu):
    n = y.size
    Kst = np.empty((7, n))
    ynew = np.empty(n)
    tmp = np.empty(n)
    K.deriv(np.asarray(y, float).copy(), mu, Kst[0])
    K.dp_step(np.asarray(y, float).copy(), float(h), float(mu), Kst, ynew, tmp)
    return Kst


def propagate(state, t_span, mu: float, cfg: Optional[IntegratorConfig] = None) -> Trajectory:
    """Dense propagation over ``t_span``; stops early only at the collision guard."""
    traj, _ = propagate_events(state, mu, cfg, (), t_span=t_span, store=True)
    return traj


def flow(state, t, mu: float, cfg: Optional[IntegratorConfig] = None) -> NDArray:
    """Final state after integrating for time ``t`` (may be negative)."""
    cfg = cfg or IntegratorConfig()
    res = _run(np.asarray(state, float), 0.0, float(t), mu, cfg, [], False)
    if res[0] == K.ST_UNDERFLOW:
        raise IntegrationError("step size underflow")
    if res[0] == K.ST_COLLISION:
        raise CollisionError("collision guard entered")
    return res[12].copy()


def flow_stm(state, t, mu: float, cfg: Optional[IntegratorConfig] = None):
    """State and 4x4 state-transition matrix after time ``t``."""
    y0 = np.concatenate([np.asarray(state, float)[:4], np.eye(4).ravel()])
    yt = flow(y0, t, mu, cfg)
    return yt[:4], yt[4:].reshape(4, 4)

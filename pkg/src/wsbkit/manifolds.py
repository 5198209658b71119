"""Planar Lyapunov orbits about L1/L2, their monodromy, globalized
stable/unstable manifolds, section cuts and the comparison with refined
weak stability boundary points."""
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
from numpy.typing import NDArray
from scipy.optimize import brentq

from . import _kernels as K
from .dynamics import (eom_rhs, jacobi_constant, kepler_energy, lagrange_points,
                       jacobian_matrix, to_p1_frame, to_p2_frame)
from .errors import (CollisionError, ConvergenceError, DomainError, IntegrationError,
                     WSBError)
from .integrate import (IntegratorConfig, Trajectory, axis_event, flow, flow_stm,
                        propagate_events, ray_event)

NECKS = {"L1": 0, "L2": 1}
BRANCHES = ("stable-interior", "stable-exterior", "unstable-interior", "unstable-exterior")
MIRROR = np.diag([1.0, -1.0, -1.0, 1.0])


def _neck_index(which_neck):
    if which_neck not in NECKS:
        raise DomainError(f"which_neck must be 'L1' or 'L2', got {which_neck!r}")
    return NECKS[which_neck]


@dataclass
class MonodromySpectrum:
    eigenvalues: NDArray     # all four, sorted by modulus
    lam: float               # unstable multiplier
    lam_inv: float           # its partner
    unit_pair: NDArray       # the two multipliers closest to 1
    det: float

    def pattern_ok(self, unit_tol=1e-6, det_tol=1e-8) -> bool:
        big = np.sum(np.abs(self.eigenvalues) > 1.0 + unit_tol)
        return (big == 1 and abs(self.lam * self.lam_inv - 1.0) < unit_tol
                and bool(np.all(np.abs(self.unit_pair - 1.0) < unit_tol))
                and abs(self.det - 1.0) < det_tol)


def monodromy_spectrum(M) -> MonodromySpectrum:
    """Split the multipliers of a planar periodic orbit into the hyperbolic
    pair and the unit pair.

    The unit pair of a periodic orbit forms a Jordan block, so generic
    eigenvalue solvers scatter it by the square root of the matrix error.
    Here the characteristic polynomial is reduced with the symplectic
    structure instead: writing the multipliers as pairs ``(x, 1/x)`` with
    ``s = x + 1/x``, the two values of ``s`` solve
    ``s**2 - tr(M) s + (m2 - 2) = 0`` with ``m2`` the sum of the principal
    2x2 minors. The hyperbolic pair comes from the large root; the unit pair
    is taken as the roots of ``x**2 - s x + 1`` for the small root, which
    equals ``2`` for an exact periodic orbit.
    """
    M = np.asarray(M, dtype=float)
    ev = np.linalg.eigvals(M)
    ev = ev[np.argsort(np.abs(ev))]
    tr = float(np.trace(M))
    m2 = 0.0
    for i in range(4):
        for j in range(i + 1, 4):
            m2 += M[i, i] * M[j, j] - M[i, j] * M[j, i]
    disc = max(tr * tr - 4.0 * (m2 - 2.0), 0.0)
    s_big = 0.5 * (tr + math.copysign(math.sqrt(disc), tr))
    s_small = (m2 - 2.0) / s_big if s_big != 0.0 else tr
    lam = 0.5 * (s_big + math.copysign(math.sqrt(max(s_big * s_big - 4.0, 0.0)), s_big))
    lam_inv = 1.0 / lam
    d = s_small * s_small - 4.0
    if d >= 0.0:
        root = math.sqrt(d)
        unit = np.array([0.5 * (s_small + root), 0.5 * (s_small - root)], dtype=complex)
    else:
        root = math.sqrt(-d)
        unit = np.array([complex(0.5 * s_small, 0.5 * root), complex(0.5 * s_small, -0.5 * root)])
    return MonodromySpectrum(ev, float(lam), float(lam_inv), unit, float(np.linalg.det(M)))


@dataclass
class LyapunovOrbit:
    state: NDArray           # P1 frame, on the Y1-axis with zero Y1-velocity
    period: float
    C: float
    monodromy: NDArray
    which_neck: str
    mu: float
    iterations: int = 0
    half_residual: float = 0.0
    half_stm: Optional[NDArray] = None
    x_extent: tuple = (np.nan, np.nan)

    @property
    def spectrum(self) -> MonodromySpectrum:
        return monodromy_spectrum(self.monodromy)

    def periodicity_residual(self, cfg: Optional[IntegratorConfig] = None) -> float:
        return float(np.max(np.abs(flow(self.state, self.period, self.mu, cfg) - self.state)))

    def monodromy_full(self, cfg: Optional[IntegratorConfig] = None) -> NDArray:
        """Monodromy by integrating the variational equations over a full period."""
        return flow_stm(self.state, self.period, self.mu, cfg)[1]

    @property
    def amplitude(self) -> float:
        return abs(self.state[0] - lagrange_points(self.mu).positions[_neck_index(self.which_neck), 0])


def _half_period(state, mu, cfg, t_guess=None):
    """Propagate with the STM to the next crossing of the Y1-axis."""
    y0 = np.concatenate([state, np.eye(4).ravel()])
    ev = [axis_event(axis=0, direction=0, terminal=True)]
    recs = []
    if t_guess is not None:
        _, recs = propagate_events(y0, mu, cfg, ev, t_span=(0.0, 3.0 * t_guess), store=False)
    if not recs:
        _, recs = propagate_events(y0, mu, cfg, ev, t_span=(0.0, cfg.t_max), store=False)
    if not recs:
        raise ConvergenceError("no half-period axis crossing")
    yf = recs[0].state
    return recs[0].t, yf[:4].copy(), yf[4:].reshape(4, 4).copy()


def lyapunov_correct(mu: float, x0: float, vy_guess: float, which_neck: str = "L1",
                     cfg: Optional[IntegratorConfig] = None, max_newton: int = 25,
                     tol: float = 1e-11, polish: int = 3) -> LyapunovOrbit:
    """Differential correction of a symmetric Lyapunov orbit.

    Starts on the Y1-axis at ``x0`` (P1 frame) perpendicular to it and
    adjusts the Y2-velocity until the next axis crossing is perpendicular
    too, i.e. ``|dY1/dt| < tol`` there. After convergence up to ``polish``
    further Newton steps are taken while they still reduce the residual;
    the hyperbolic multiplier (~1e3 for Sun-Jupiter necks) amplifies any
    leftover residual into the unit pair of the monodromy.

    The monodromy is assembled from the half-period STM with the mirror
    symmetry; :meth:`LyapunovOrbit.monodromy_full` integrates a full period
    instead.
    """
    _neck_index(which_neck)
    cfg = cfg or IntegratorConfig()
    vy = float(vy_guess)
    t_half = None
    best = None
    extra = 0
    for it in range(1, max_newton + polish + 1):
        st = np.array([x0, 0.0, 0.0, vy])
        t_half, yf, P = _half_period(st, mu, cfg, t_half)
        vx = yf[2]
        if best is None or abs(vx) < abs(best[2][2]):
            best = (vy, t_half, yf, P, it)
        elif best is not None and abs(best[2][2]) < tol:
            break
        if abs(best[2][2]) < tol:
            if extra >= polish or vx == 0.0:
                break
            extra += 1
        elif it >= max_newton:
            raise ConvergenceError(f"no convergence after {max_newton} corrections "
                                   f"(|vx| = {abs(vx):.3e})")
        f = eom_rhs(yf, mu)
        dvx = P[2, 3] - f[2] * P[1, 3] / yf[3]
        if dvx == 0.0 or not np.isfinite(dvx):
            raise ConvergenceError("singular correction")
        vy -= vx / dvx
    vy, t_half, yf, P, it = best
    st = np.array([x0, 0.0, 0.0, vy])
    M = MIRROR @ np.linalg.solve(P, MIRROR @ P)
    return LyapunovOrbit(st, 2.0 * t_half, float(jacobi_constant(st, mu)), M, which_neck, mu,
                         it, float(abs(yf[2])), P, (min(x0, yf[0]), max(x0, yf[0])))


def _linear_data(mu, which_neck):
    i = _neck_index(which_neck)
    xL = lagrange_points(mu).positions[i, 0]
    A = jacobian_matrix([xL, 0.0, 0.0, 0.0], mu)
    a, b = A[2, 0], A[3, 1]
    # in-plane frequency: lambda**4 + q lambda**2 + a b = 0 with lambda = i nu
    q = 4.0 - a - b
    nu2 = 0.5 * (q + math.sqrt(q * q - 4.0 * a * b))
    return xL, a, nu2


def linear_guess(mu, amplitude, which_neck="L1"):
    """Axis point and Y2-velocity of the linearized Lyapunov orbit.

    The start point is displaced away from P2 by ``amplitude``.
    """
    xL, a, nu2 = _linear_data(mu, which_neck)
    sgn = -1.0 if which_neck == "L1" else 1.0
    A = sgn * amplitude
    return xL + A, -(a + nu2) * A / 2.0


def lyapunov_family(mu: float, C_target: float, which_neck: str = "L1",
                    cfg: Optional[IntegratorConfig] = None, amp0: float = 1e-4,
                    growth: float = 1.3, max_steps: int = 200, C_tol: float = 1e-9,
                    ) -> LyapunovOrbit:
    """Lyapunov orbit of a given Jacobi constant by continuation in amplitude.

    Natural-parameter continuation from a small amplitude until the Jacobi
    constant brackets ``C_target``, then Brent's method on the amplitude.
    """
    i = _neck_index(which_neck)
    CL = lagrange_points(mu).jacobi[i]
    if not C_target < CL:
        raise DomainError(f"C = {C_target} is not below C{i + 1} = {CL:.8f}; "
                          "no Lyapunov orbit of that energy")
    cfg = cfg or IntegratorConfig()
    xL = lagrange_points(mu).positions[i, 0]
    sgn = -1.0 if which_neck == "L1" else 1.0

    def orbit_at(amp, vy_guess):
        return lyapunov_correct(mu, xL + sgn * amp, vy_guess, which_neck, cfg)

    amp = amp0
    orb = orbit_at(amp, linear_guess(mu, amp, which_neck)[1])
    hist = [(amp, orb)]
    while orb.C > C_target:
        if len(hist) > max_steps:
            raise DomainError("C_target outside the reachable family range")
        amp_new = amp * growth
        if len(hist) >= 2:
            (a0, o0), (a1, o1) = hist[-2], hist[-1]
            vg = o1.state[3] + (o1.state[3] - o0.state[3]) * (amp_new - a1) / (a1 - a0)
        else:
            vg = linear_guess(mu, amp_new, which_neck)[1]
        try:
            o_new = orbit_at(amp_new, vg)
        except (ConvergenceError, IntegrationError, CollisionError) as exc:
            raise DomainError(f"family continuation failed at amplitude {amp_new:.4g}: {exc}")
        if o_new.C >= orb.C:
            raise DomainError("Jacobi constant stopped decreasing along the family")
        amp, orb = amp_new, o_new
        hist.append((amp, orb))
    if len(hist) == 1:
        if abs(orb.C - C_target) <= C_tol:
            return orb
        raise DomainError("C_target lies between C_i and the first family member; lower amp0")
    (a0, o0), (a1, o1) = hist[-2], hist[-1]
    known = [(a0, o0.state[3]), (a1, o1.state[3])]
    cache = {}

    def resid(amp):
        # linear interpolation of the velocity between the closest solved amplitudes
        lo = max((k for k in known if k[0] <= amp), default=known[0])
        hi = min((k for k in known if k[0] >= amp), default=known[-1])
        vg = lo[1] if hi[0] == lo[0] else lo[1] + (hi[1] - lo[1]) * (amp - lo[0]) / (hi[0] - lo[0])
        o = orbit_at(amp, vg)
        known.append((amp, o.state[3]))
        known.sort()
        cache[amp] = o
        return o.C - C_target

    amp = brentq(resid, a0, a1, xtol=1e-15, rtol=8 * np.finfo(float).eps, maxiter=100)
    o = cache.get(amp) or orbit_at(amp, known[0][1])
    if abs(o.C - C_target) > C_tol:
        raise ConvergenceError(f"family root finding ended {abs(o.C - C_target):.2e} from C_target")
    return o


def family_scan(mu, which_neck="L1", amplitudes=(1e-4, 1e-3, 3e-3, 1e-2), cfg=None):
    """Jacobi constant along the family at the given amplitudes."""
    out = []
    prev = None
    for amp in amplitudes:
        x0, vg = linear_guess(mu, amp, which_neck)
        if prev is not None:
            vg = prev[1] * amp / prev[0]
        o = lyapunov_correct(mu, x0, vg, which_neck, cfg)
        prev = (amp, o.state[3])
        out.append((amp, o.C))
    return out


# --------------------------------------------------------------------------
# globalization
# --------------------------------------------------------------------------

@dataclass
class ManifoldTrajectory:
    branch: str
    seed_phase: float        # fraction of the period in [0, 1)
    seed: NDArray            # P1 frame
    traj: Trajectory
    crossings: list          # EventRecord list on the section ray, if requested
    theta0: Optional[float]
    status: str


def _branch_parts(branch):
    if branch not in BRANCHES:
        raise DomainError(f"unknown branch {branch!r}")
    stab, side = branch.split("-")
    return stab == "stable", side == "interior"


def _eigvec(orbit: LyapunovOrbit, stable: bool):
    w, V = np.linalg.eig(orbit.monodromy)
    idx = np.argmin(np.abs(w)) if stable else np.argmax(np.abs(w))
    v = np.real(V[:, idx])
    return v / np.linalg.norm(v)


def _side_sign(orbit, v, interior):
    # interior means towards P2 in Y1
    towards = 1.0 if orbit.which_neck == "L1" else -1.0
    s = math.copysign(1.0, v[0]) * towards
    return s if interior else -s


def seed_states(orbit: LyapunovOrbit, branch: str, phases, epsilon: float = 1e-6,
                cfg: Optional[IntegratorConfig] = None) -> NDArray:
    """Displaced states along the transported eigenvector at the given phases."""
    stable, interior = _branch_parts(branch)
    v = _eigvec(orbit, stable)
    sgn = _side_sign(orbit, v, interior)
    phases = np.atleast_1d(np.asarray(phases, float))
    out = np.empty((phases.size, 4))
    y0 = np.concatenate([orbit.state, np.eye(4).ravel()])
    for i, ph in enumerate(phases):
        tau = (ph % 1.0) * orbit.period
        yt = y0 if tau == 0.0 else flow(y0, tau, orbit.mu, cfg)
        w = yt[4:].reshape(4, 4) @ v
        out[i] = yt[:4] + sgn * epsilon * w / np.linalg.norm(w)
    return out


def _integrate_seed(seed, orbit, branch, duration, cfg, theta0, phase):
    stable, _ = _branch_parts(branch)
    span = (0.0, -duration) if stable else (0.0, duration)
    evs = [] if theta0 is None else [ray_event(theta0, direction=0)]
    traj, recs = propagate_events(seed, orbit.mu, cfg, evs, t_span=span, store=True)
    return ManifoldTrajectory(branch, float(phase), seed, traj, recs, theta0, traj.status)


def globalize(orbit: LyapunovOrbit, branch: str, epsilon: float = 1e-6, n_seeds: int = 100,
              cfg: Optional[IntegratorConfig] = None, duration: float = 4.0 * math.pi,
              theta0: Optional[float] = None) -> List[ManifoldTrajectory]:
    """Trajectories of one manifold branch seeded at ``n_seeds`` phases.

    Stable branches are integrated backward in time and unstable ones
    forward, for ``duration`` time units. With ``theta0`` every crossing of
    that section ray is recorded.
    """
    if n_seeds < 1:
        raise DomainError("n_seeds must be >= 1")
    cfg = cfg or IntegratorConfig()
    phases = np.arange(n_seeds) / n_seeds
    seeds = seed_states(orbit, branch, phases, epsilon, cfg)
    return [_integrate_seed(s, orbit, branch, duration, cfg, theta0, ph)
            for s, ph in zip(seeds, phases)]


@dataclass
class ManifoldCut:
    branch: str
    k: int
    seed_phase: NDArray
    r: NDArray
    rdot: NDArray
    C: NDArray
    which_neck: str = ""

    def __len__(self):
        return self.r.size

    def closure_gap(self) -> float:
        """Distance between the last and first point relative to the median spacing."""
        if self.r.size < 3:
            return np.inf
        pts = np.column_stack([self.r, self.rdot])
        d = np.hypot(*np.diff(pts, axis=0).T)
        gap = float(np.hypot(*(pts[0] - pts[-1])))
        return gap / float(np.median(d))


def _entry_time(mt: ManifoldTrajectory, orbit: LyapunovOrbit):
    """First stored time the trajectory is past the orbit on the P2 side."""
    x = mt.traj.y[:, 0]
    if orbit.which_neck == "L1":
        past = x > orbit.x_extent[1]
    else:
        past = x < orbit.x_extent[0]
    idx = np.flatnonzero(past)
    return None if idx.size == 0 else mt.traj.t[idx[0]]


def counted_crossings(mt: ManifoldTrajectory, orbit: LyapunovOrbit, theta0: float):
    """Posigrade section crossings after the trajectory enters the P2 side.

    Only crossings closer to P2 than L2 count. Returns ``(r, rdot, state)``
    tuples in integration order; the first one is cut ``k = 1``.
    """
    if mt.theta0 is None or mt.theta0 != theta0:
        duration = abs(mt.traj.t[-1] - mt.traj.t[0])
        mt = _integrate_seed(mt.seed, orbit, mt.branch, duration, None, theta0, mt.seed_phase)
    _, interior = _branch_parts(mt.branch)
    t_in = _entry_time(mt, orbit) if interior else mt.traj.t[0]
    if t_in is None:
        return []
    rho = lagrange_points(orbit.mu).distance_to_p2(1)
    out = []
    for rec in mt.crossings:
        if abs(rec.t) < abs(t_in):
            continue
        r, _, rd, td = K.polar_p2(rec.state)
        if td > 0.0 and r < rho:
            out.append((r, rd, rec.state))
    return out


def section_cuts(trajectories: Sequence[ManifoldTrajectory], theta0: float, k_max: int,
                 orbit: LyapunovOrbit) -> List[ManifoldCut]:
    """Regroup counted section crossings by cut index ``k = 1..k_max``."""
    if k_max <= 0 or not trajectories:
        return []
    rows = {k: [] for k in range(1, k_max + 1)}
    for mt in trajectories:
        for k, (r, rd, st) in enumerate(counted_crossings(mt, orbit, theta0)[:k_max], start=1):
            rows[k].append((mt.seed_phase, r, rd, float(jacobi_constant(st, orbit.mu))))
    cuts = []
    branch = trajectories[0].branch
    for k in range(1, k_max + 1):
        a = np.array(sorted(rows[k]), dtype=float).reshape(-1, 4)
        cuts.append(ManifoldCut(branch, k, a[:, 0], a[:, 1], a[:, 2], a[:, 3],
                                orbit.which_neck))
    return cuts


# --------------------------------------------------------------------------
# comparison with the weak stability boundary
# --------------------------------------------------------------------------

@dataclass
class AxisIntersection:
    which_neck: str
    k: int
    seed_phase: float
    r: float
    E2: float


@dataclass
class ManifoldComparison:
    theta0: float
    e: float
    n: int
    r_star: float
    C: float
    status: str                         # "ok", "no-manifolds", "no-intersection"
    distances: Dict[str, float] = field(default_factory=dict)   # per cut index k
    intersections: List[AxisIntersection] = field(default_factory=list)

    @property
    def distance(self) -> float:
        """Distance for the primary reading (cut index k = n)."""
        return self.distances.get(f"k={self.n}", np.inf)

    @property
    def best_distance(self) -> float:
        return min(self.distances.values(), default=np.inf)


def _cut_rdot(orbit, branch, phase, theta0, k, epsilon, cfg, duration):
    seed = seed_states(orbit, branch, [phase], epsilon, cfg)[0]
    mt = _integrate_seed(seed, orbit, branch, duration, cfg, theta0, phase)
    cr = counted_crossings(mt, orbit, theta0)
    if len(cr) < k:
        return None
    return cr[k - 1]


def axis_intersections(orbit: LyapunovOrbit, theta0: float, k: int, epsilon: float = 1e-6,
                       n_seeds: int = 100, cfg: Optional[IntegratorConfig] = None,
                       duration: float = 4.0 * math.pi, phase_tol: float = 1e-12,
                       trajectories=None) -> List[AxisIntersection]:
    """Points where the k-th stable interior cut meets ``rdot = 0`` with E2 < 0.

    Sign changes of ``rdot`` between consecutive seeds are refined by
    bisection in the seed phase.
    """
    cfg = cfg or IntegratorConfig()
    branch = "stable-interior"
    if trajectories is None:
        trajectories = globalize(orbit, branch, epsilon, n_seeds, cfg, duration, theta0)
    cut = section_cuts(trajectories, theta0, k, orbit)[k - 1]
    out = []
    m = cut.r.size
    if m < 2:
        return out
    ph = cut.seed_phase
    step = 1.0 / max(len(trajectories), 1)
    for i in range(m):
        j = (i + 1) % m
        a, b = ph[i], ph[j] if j > i else ph[j] + 1.0
        if b - a > 1.5 * step:
            continue      # gap in the cut: the neighbours are not adjacent seeds
        if cut.rdot[i] == 0.0 or (cut.rdot[i] > 0) == (cut.rdot[j] > 0):
            continue
        sa = cut.rdot[i] > 0
        hit = None
        while b - a > phase_tol:
            mid = 0.5 * (a + b)
            res = _cut_rdot(orbit, branch, mid, theta0, k, epsilon, cfg, duration)
            if res is None:
                hit = None
                break
            hit = (mid, res)
            if (res[1] > 0) == sa:
                a = mid
            else:
                b = mid
        if hit is None:
            continue
        r, rd, st = hit[1]
        e2 = float(kepler_energy(to_p2_frame(st), orbit.mu))
        if e2 < 0.0:
            out.append(AxisIntersection(orbit.which_neck, k, hit[0] % 1.0, float(r), e2))
    return out


def wn_vs_manifold(theta0: float, e: float, n: int, mu: float,
                   cfg: Optional[IntegratorConfig] = None, r_star: Optional[float] = None,
                   epsilon: float = 1e-6, n_seeds: int = 100,
                   duration: float = 4.0 * math.pi) -> ManifoldComparison:
    """Distance from a refined boundary radius to the nearest stable-manifold
    intersection with the periapsis axis at the same Jacobi constant.

    Both readings of the cut index are reported: ``k = n`` (first counted
    crossing after entering the P2 region is ``k = 1``) and ``k = n + 1``.
    Without ``r_star`` the lowest refined boundary radius of a 500-point
    scan along the ray is used.
    """
    from .sweep import extract_intervals, radial_scan, refine_scan
    from .wsb import PeriapsisIC

    if n < 1:
        raise DomainError("cycle count n must be >= 1")
    cfg = cfg or IntegratorConfig()
    if r_star is None:
        sc = radial_scan(theta0, e, n, mu, K=500, cfg=cfg)
        _, recs = refine_scan(sc, extract_intervals(sc, cfg.r_min), cfg)
        if not recs:
            raise DomainError("no boundary point on this ray")
        r_star = recs[0].r_star
    C = PeriapsisIC(r_star, theta0, e, mu).jacobi
    eq = lagrange_points(mu)
    rep = ManifoldComparison(float(theta0), float(e), int(n), float(r_star), float(C), "ok")
    necks = [nk for nk, i in NECKS.items() if C < eq.jacobi[i]]
    if not necks:
        rep.status = "no-manifolds"
        return rep
    for k in (n, n + 1):
        rep.distances[f"k={k}"] = np.inf
    for nk in necks:
        orb = lyapunov_family(mu, C, nk, cfg)
        trajs = globalize(orb, "stable-interior", epsilon, n_seeds, cfg, duration, theta0)
        for k in (n, n + 1):
            pts = axis_intersections(orb, theta0, k, epsilon, n_seeds, cfg, duration,
                                     trajectories=trajs)
            rep.intersections.extend(pts)
            for p in pts:
                d = abs(p.r - r_star)
                if d < rep.distances[f"k={k}"]:
                    rep.distances[f"k={k}"] = d
    if not np.isfinite(rep.best_distance):
        rep.status = "no-intersection"
    return rep


@dataclass
class HypothesisReport:
    n: int
    counts: List[int]
    violators: List[float]     # seed phases

    @property
    def violator_fraction(self) -> float:
        return len(self.violators) / len(self.counts) if self.counts else 0.0


def hypothesis_a_check(trajectories: Sequence[ManifoldTrajectory], n: int) -> HypothesisReport:
    """Cycle counts along manifold trajectories.

    Stable branches are counted about P2 and unstable branches about P1; a
    trajectory with fewer than ``n`` full turns is a violator.
    """
    counts, bad = [], []
    for mt in trajectories:
        stable, _ = _branch_parts(mt.branch)
        phi = mt.traj.phi2 if stable else mt.traj.phi1
        turns = int(np.floor(np.max(np.abs(phi - phi[0])) / (2 * math.pi))) if phi.size else 0
        counts.append(turns)
        if turns < n:
            bad.append(mt.seed_phase)
    return HypothesisReport(int(n), counts, bad)

"""Surface of section on a ray from P2 at fixed Jacobi constant, the
first-return map on it and iterate orbits."""
import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from scipy.optimize import brentq

from . import _kernels as K
from .dynamics import (R_MIN, from_polar, jacobi_constant, kepler_energy, lagrange_points,
                       to_p1_frame, to_p2_frame, to_polar)
from .errors import (CollisionError, DomainError, EscapeError, NoReturnError,
                     OffSectionError, SingularityError)
from .integrate import IntegratorConfig, escape_event, propagate_events, ray_event
from .wsb import PeriapsisIC, periapsis_state

TERMINATIONS = ("completed", "escaped", "left-H2", "no-return", "collision")


def _effective_potential(r, theta0, mu):
    # 2 * Omega written in polar coordinates about P2
    Y1 = r * math.cos(theta0)
    Y2 = r * math.sin(theta0)
    r1 = math.hypot(Y1 + 1.0, Y2)
    return (2.0 * ((1.0 - mu) / r1 + mu / r) + (Y1 + 1.0 - mu) ** 2 + Y2 ** 2
            + mu * (1.0 - mu)), r1


def theta_dot_on_section(r, rdot, theta0, C, mu, r_min=R_MIN) -> float:
    """Positive rotating-frame angular rate with Jacobi constant ``C``.

    Solves ``2*Omega - rdot**2 - r**2 * thetadot**2 = C`` for ``thetadot``.
    """
    if not r > 0.0:
        raise DomainError("r must be positive")
    pot, r1 = _effective_potential(float(r), float(theta0), float(mu))
    if r < r_min or r1 < r_min:
        raise SingularityError("section point inside the collision guard")
    td2 = (pot - rdot * rdot - C) / (r * r)
    if not td2 > 0.0:
        raise OffSectionError(f"no positive angular rate: thetadot^2 = {td2:.3e}")
    return math.sqrt(td2)


@dataclass(frozen=True)
class SectionPoint:
    r: float
    rdot: float
    theta0: float
    C: float
    mu: float

    @property
    def thetadot(self) -> float:
        return theta_dot_on_section(self.r, self.rdot, self.theta0, self.C, self.mu)

    @property
    def E2(self) -> float:
        return float(kepler_energy(lift(self), self.mu))

    @classmethod
    def from_state(cls, state_p2, mu, C=None) -> "SectionPoint":
        """Section coordinates of a P2-frame state; ``C`` defaults to its own."""
        r, th, rd, _ = to_polar(state_p2)
        if C is None:
            C = float(jacobi_constant(to_p1_frame(state_p2), mu))
        return cls(float(r), float(rd), float(th), float(C), float(mu))


def lift(p: SectionPoint):
    """Full P2-frame state of a section point."""
    return from_polar(p.r, p.theta0, p.rdot, p.thetadot)


@dataclass
class ReturnRecord:
    point: SectionPoint
    t_flight: float
    state: np.ndarray   # P2 frame at the crossing
    C_actual: float     # Jacobi constant of the integrated state


def _escape_radius(mu):
    return 1.5 * lagrange_points(mu).distance_to_p2(2)


def poincare_return(p: SectionPoint, cfg: Optional[IntegratorConfig] = None,
                    leave_radius: Optional[float] = None) -> ReturnRecord:
    """Next posigrade crossing of the section ray, with flight time.

    Trajectories that get farther than ``leave_radius`` from P2 (default
    1.5 times the P2-L2 distance) raise :class:`EscapeError`.
    """
    cfg = cfg or IntegratorConfig()
    leave_radius = _escape_radius(p.mu) if leave_radius is None else leave_radius
    y0 = to_p1_frame(lift(p))
    evs = [ray_event(p.theta0, direction=1, terminal=True), escape_event(leave_radius)]
    traj, recs = propagate_events(y0, p.mu, cfg, evs, store=False)
    if traj.status == "collision":
        raise CollisionError("collision guard entered before returning to the section")
    if not recs:
        raise NoReturnError("no return to the section before t_max")
    rec = recs[-1]
    if rec.kind == "escape":
        raise EscapeError(f"left the P2 region at t={rec.t:.6g}")
    st = to_p2_frame(rec.state)
    r, _, rd, _ = to_polar(st)
    C_act = float(jacobi_constant(rec.state, p.mu))
    q = SectionPoint(float(r), float(rd), p.theta0, p.C, p.mu)
    return ReturnRecord(q, rec.t, st, C_act)


def poincare_map(p: SectionPoint, cfg: Optional[IntegratorConfig] = None,
                 leave_radius: Optional[float] = None) -> SectionPoint:
    return poincare_return(p, cfg, leave_radius).point


@dataclass
class IterateOrbit:
    points: List[SectionPoint]
    t_flight: List[float]
    termination: str
    rho: float
    E2: List[float] = field(default_factory=list)
    C_actual: List[float] = field(default_factory=list)

    @property
    def bounded(self) -> bool:
        return self.termination == "completed" and all(abs(q.r) < self.rho for q in self.points)

    @property
    def e2_negative(self) -> bool:
        return all(e < 0.0 for e in self.E2)

    def rows(self):
        """(k, r, rdot, t_flight, E2, C) per iterate; t_flight of p_0 is 0."""
        tf = [0.0] + list(self.t_flight)
        return [(k, q.r, q.rdot, tf[k], self.E2[k], self.C_actual[k])
                for k, q in enumerate(self.points)]


def iterate(p: SectionPoint, k_max: int, cfg: Optional[IntegratorConfig] = None,
            rho: Optional[float] = None, leave_radius: Optional[float] = None) -> IterateOrbit:
    """Iterate the return map up to ``k_max`` times.

    Stops early when an iterate lands beyond ``rho`` (default: P2-L2
    distance), the trajectory leaves the P2 region, does not return, or
    hits the collision guard.
    """
    if k_max < 0:
        raise DomainError("k_max must be >= 0")
    rho = lagrange_points(p.mu).distance_to_p2(2) if rho is None else rho
    st0 = lift(p)
    orb = IterateOrbit([p], [], "completed", float(rho), [float(kepler_energy(st0, p.mu))],
                       [float(jacobi_constant(to_p1_frame(st0), p.mu))])
    q = p
    for _ in range(k_max):
        try:
            rec = poincare_return(q, cfg, leave_radius)
        except EscapeError:
            orb.termination = "left-H2"
            break
        except NoReturnError:
            orb.termination = "no-return"
            break
        except (CollisionError, SingularityError):
            orb.termination = "collision"
            break
        q = rec.point
        orb.points.append(q)
        orb.t_flight.append(rec.t_flight)
        orb.E2.append(float(kepler_energy(rec.state, p.mu)))
        orb.C_actual.append(rec.C_actual)
        if abs(q.r) > rho:
            orb.termination = "escaped"
            break
    return orb


def sstar_orbit(ic: PeriapsisIC, k_max: int, cfg: Optional[IntegratorConfig] = None,
                rho: Optional[float] = None) -> IterateOrbit:
    """Iterates of the section point of a periapsis IC with their Kepler energies.

    The diagnostic ``orbit.e2_negative`` should hold for ICs that are
    stable for at least ``k_max`` cycles.
    """
    st = periapsis_state(ic)
    p = SectionPoint(ic.r, 0.0, ic.theta, ic.jacobi, ic.mu)
    if periapsis_velocity_sign(st) <= 0:
        raise OffSectionError("periapsis velocity is retrograde in the rotating frame")
    return iterate(p, k_max, cfg, rho)


def periapsis_velocity_sign(state_p2) -> float:
    return math.copysign(1.0, float(to_polar(state_p2)[3]))


def symmetric_fixed_point(C: float, mu: float, r_lo: float, r_hi: float, theta0: float = 0.0,
                          cfg: Optional[IntegratorConfig] = None, xtol: float = 1e-14
                          ) -> SectionPoint:
    """Fixed point of the return map on a symmetric periodic orbit.

    For ``theta0`` in {0, pi} an orbit leaving the ray perpendicularly and
    reaching the opposite ray perpendicularly is periodic by the mirror
    symmetry. The radius is found by Brent's method on the radial velocity
    at the opposite ray within ``[r_lo, r_hi]``.
    """
    if not (math.isclose(math.sin(theta0), 0.0, abs_tol=1e-15)):
        raise DomainError("symmetric fixed points need theta0 = 0 or pi")
    cfg = cfg or IntegratorConfig()
    opposite = (theta0 + math.pi) % (2 * math.pi)

    def half(r):
        p = SectionPoint(r, 0.0, theta0, C, mu)
        y0 = to_p1_frame(lift(p))
        _, recs = propagate_events(y0, mu, cfg, [ray_event(opposite, 1, True)], store=False)
        if not recs:
            raise NoReturnError("no half-period crossing")
        return float(K.polar_p2(recs[-1].state)[2])

    r = brentq(half, r_lo, r_hi, xtol=xtol, rtol=4 * np.finfo(float).eps)
    return SectionPoint(float(r), 0.0, float(theta0), float(C), float(mu))

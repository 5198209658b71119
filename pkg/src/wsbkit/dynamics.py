"""Planar circular restricted three-body problem: vector field, integrals,
equilibria, Hill regions and frame changes.

Two rotating charts are used throughout. The *P1 frame* has P1 at the origin
and P2 at ``(1, 0)``; states are ``(y1, y2, v1, v2)``. The *P2 frame* is the
same frame shifted so that P2 sits at the origin and P1 at ``(-1, 0)``;
states are ``(Y1, Y2, V1, V2)``. Velocities are identical in both charts.
Units: P1-P2 distance 1, angular rate 1, G = 1, total mass 1.
"""
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.typing import NDArray
from scipy import ndimage
from skimage import measure

from . import _kernels as K
from .errors import DomainError, SingularityError

R_MIN = 1e-6

HILL_BOUNDS = (-2.0, 3.0, -2.5, 2.5)
HILL_SHAPE = 2048


def _check_mu(mu, allow_zero=False):
    lo_ok = mu >= 0.0 if allow_zero else mu > 0.0
    if not (lo_ok and mu < 0.5):
        raise DomainError(f"mass ratio must lie in (0, 0.5), got {mu!r}")


def _distances(y1, y2):
    r1 = np.hypot(y1, y2)
    r2 = np.hypot(y1 - 1.0, y2)
    return r1, r2


def _guard(y1, y2, mu, r_min=R_MIN):
    r1, r2 = _distances(y1, y2)
    if np.any(r1 < r_min) or (mu > 0.0 and np.any(r2 < r_min)):
        raise SingularityError("state within the collision guard of a primary")
    return r1, r2


def omega(y1, y2, mu):
    """Effective potential including the constant mu(1-mu)/2."""
    r1, r2 = _guard(np.asarray(y1, float), np.asarray(y2, float), mu)
    pot = 0.5 * ((y1 - mu) ** 2 + y2 ** 2) + (1.0 - mu) / r1 + 0.5 * mu * (1.0 - mu)
    if mu > 0.0:
        pot = pot + mu / r2
    return pot


def omega_gradient(y1, y2, mu):
    _guard(np.asarray(y1, float), np.asarray(y2, float), mu)
    return K.omega_grad(float(y1), float(y2), float(mu))


def eom_rhs(state, mu: float) -> NDArray:
    """Time derivative of a P1-frame state."""
    s = np.asarray(state, dtype=float)
    _guard(s[0], s[1], mu)
    out = np.empty(4)
    K.deriv(s[:4].copy(), float(mu), out)
    return out


def jacobian_matrix(state, mu: float) -> NDArray:
    """Jacobian of :func:`eom_rhs` with respect to the state."""
    s = np.asarray(state, dtype=float)
    _guard(s[0], s[1], mu)
    oxx, oxy, oyy = K.omega_hess(float(s[0]), float(s[1]), float(mu))
    return np.array([
        [0.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
        [oxx, oxy, 0.0, 2.0],
        [oxy, oyy, -2.0, 0.0],
    ])


def variational_rhs(state, stm, mu: float) -> NDArray:
    """Derivative of the state-transition matrix, ``A(state) @ stm``."""
    return jacobian_matrix(state, mu) @ np.asarray(stm, dtype=float)


def jacobi_constant(state, mu: float):
    """Jacobi integral ``2*Omega - |v|^2`` of P1-frame state(s)."""
    s = np.asarray(state, dtype=float)
    return 2.0 * omega(s[..., 0], s[..., 1], mu) - (s[..., 2] ** 2 + s[..., 3] ** 2)


def jacobi_constant_p2(state, mu: float):
    """Jacobi integral evaluated directly in the P2 chart."""
    s = np.asarray(state, dtype=float)
    Y1, Y2, V1, V2 = s[..., 0], s[..., 1], s[..., 2], s[..., 3]
    r = np.hypot(Y1, Y2)
    r1 = np.hypot(Y1 + 1.0, Y2)
    if np.any(r1 < R_MIN) or (mu > 0 and np.any(r < R_MIN)):
        raise SingularityError("state within the collision guard of a primary")
    grav = (1.0 - mu) / r1 + (mu / r if mu > 0 else 0.0)
    return (-(V1 ** 2 + V2 ** 2) + 2.0 * grav + ((Y1 + 1.0 - mu) ** 2 + Y2 ** 2)
            + mu * (1.0 - mu))


def kepler_energy(state, mu: float):
    """Two-body energy of the particle relative to P2 from a P2-frame state."""
    s = np.asarray(state, dtype=float)
    Y1, Y2, V1, V2 = s[..., 0], s[..., 1], s[..., 2], s[..., 3]
    R = np.hypot(Y1, Y2)
    if np.any(R == 0.0):
        raise SingularityError("Kepler energy undefined at P2")
    ang = V1 * Y2 - V2 * Y1
    return 0.5 * (V1 ** 2 + V2 ** 2) - mu / R - ang + 0.5 * R ** 2


def kepler_energy_inertial(state, mu: float, t: float = 0.0):
    """Same energy computed in a non-rotating P2-centred frame at time ``t``.

    The rotating frame coincides with the inertial one at ``t = 0``; for other
    times positions and velocities are rotated by angle ``t``.
    """
    s = np.asarray(state, dtype=float)
    Y = s[..., :2]
    V = s[..., 2:4]
    Vin = V + np.stack([-Y[..., 1], Y[..., 0]], axis=-1)
    c, sn = np.cos(t), np.sin(t)
    R = np.array([[c, -sn], [sn, c]])
    X = Y @ R.T
    Xd = Vin @ R.T
    return 0.5 * np.sum(Xd ** 2, axis=-1) - mu / np.linalg.norm(X, axis=-1)


# --------------------------------------------------------------------------
# frames
# --------------------------------------------------------------------------

def to_p2_frame(state) -> NDArray:
    s = np.array(state, dtype=float)
    s[..., 0] -= 1.0
    return s


def to_p1_frame(state) -> NDArray:
    s = np.array(state, dtype=float)
    s[..., 0] += 1.0
    return s


def to_polar(state):
    """(r, theta, rdot, thetadot) about P2 of a P2-frame state (rotating rates)."""
    s = np.asarray(state, dtype=float)
    Y1, Y2, V1, V2 = s[..., 0], s[..., 1], s[..., 2], s[..., 3]
    r = np.hypot(Y1, Y2)
    if np.any(r == 0.0):
        raise DomainError("polar coordinates undefined at r = 0")
    theta = np.mod(np.arctan2(Y2, Y1), 2.0 * np.pi)
    rdot = (Y1 * V1 + Y2 * V2) / r
    thetadot = (Y1 * V2 - Y2 * V1) / r ** 2
    return r, theta, rdot, thetadot


def from_polar(r, theta, rdot, thetadot) -> NDArray:
    """P2-frame state from rotating polar coordinates about P2."""
    c, s = np.cos(theta), np.sin(theta)
    return np.stack(np.broadcast_arrays(
        r * c, r * s, rdot * c - r * thetadot * s, rdot * s + r * thetadot * c), axis=-1)


def mirror(state) -> NDArray:
    """Reflection ``(Y1, Y2, V1, V2) -> (Y1, -Y2, -V1, V2)``; valid in either chart."""
    s = np.array(state, dtype=float)
    s[..., 1] *= -1.0
    s[..., 2] *= -1.0
    return s


# --------------------------------------------------------------------------
# equilibria
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class EquilibriumSet:
    """Libration points in the P1 frame and their Jacobi values."""

    mu: float
    positions: NDArray  # (5, 2)
    jacobi: NDArray     # (5,)

    @property
    def C1(self):
        return float(self.jacobi[0])

    @property
    def C2(self):
        return float(self.jacobi[1])

    @property
    def C3(self):
        return float(self.jacobi[2])

    def distance_to_p2(self, i: int) -> float:
        """Distance from P2 to L_i (1-based index)."""
        x, y = self.positions[i - 1]
        return float(np.hypot(x - 1.0, y))


def _collinear_gradient(x, mu):
    return K.omega_grad(x, 0.0, mu)[0]


def _bisect(f, a, b, tol=1e-14, max_iter=200):
    fa = f(a)
    fb = f(b)
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if (fa > 0) == (fb > 0):
        raise DomainError("bracket does not enclose a sign change")
    for _ in range(max_iter):
        m = 0.5 * (a + b)
        if b - a <= tol or m in (a, b):
            break
        fm = f(m)
        if fm == 0.0:
            return m
        if (fm > 0) == (fa > 0):
            a, fa = m, fm
        else:
            b = m
    return 0.5 * (a + b)


@lru_cache(maxsize=256)
def lagrange_points(mu: float) -> EquilibriumSet:
    """Locate L1..L5 for mass ratio ``mu``.

    Collinear points come from bisection of the on-axis gradient in three
    brackets; L4/L5 are the equilateral points.
    """
    _check_mu(mu)
    eps = 1e-9
    g = lambda x: _collinear_gradient(x, mu)  # noqa: E731
    x1 = _bisect(g, eps, 1.0 - eps)
    x2 = _bisect(g, 1.0 + eps, 3.0)
    x3 = _bisect(g, -1.0 + eps, -eps) if g(-1.0 + eps) * g(-eps) < 0 else \
        _bisect(g, -1.5, -eps)
    pos = np.array([
        [x1, 0.0],
        [x2, 0.0],
        [x3, 0.0],
        [0.5, np.sqrt(3.0) / 2.0],
        [0.5, -np.sqrt(3.0) / 2.0],
    ])
    states = np.hstack([pos, np.zeros((5, 2))])
    C = np.array([K.jacobi(s, mu) for s in states])
    return EquilibriumSet(mu=float(mu), positions=pos, jacobi=C)


# --------------------------------------------------------------------------
# Hill regions
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class HillLabel:
    label: str  # "H1", "H2", "HO" or "forbidden"
    uncertain: bool


class HillRegionMap:
    """Connected components of ``2*Omega >= C`` on a fixed grid (P1 frame).

    Labels are assigned by the component containing P1, P2 and a far-field
    corner cell. When necks are open and components merge, points of the
    merged component are split by the vertical lines through L1 and L2.
    """

    def __init__(self, C: float, mu: float, bounds=HILL_BOUNDS, shape=HILL_SHAPE):
        _check_mu(mu)
        self.C = float(C)
        self.mu = float(mu)
        self.bounds = tuple(float(b) for b in bounds)
        nx = ny = shape if np.isscalar(shape) else None
        if nx is None:
            nx, ny = shape
        x0, x1, y0, y1 = self.bounds
        self.xs = np.linspace(x0, x1, int(nx))
        self.ys = np.linspace(y0, y1, int(ny))
        self.dx = self.xs[1] - self.xs[0]
        self.dy = self.ys[1] - self.ys[0]
        X, Y = np.meshgrid(self.xs, self.ys, indexing="xy")
        with np.errstate(divide="ignore"):
            r1 = np.hypot(X, Y)
            r2 = np.hypot(X - 1.0, Y)
            field = (X - mu) ** 2 + Y ** 2 + 2 * (1 - mu) / r1 + 2 * mu / r2 + mu * (1 - mu)
        field[~np.isfinite(field)] = np.inf
        self.two_omega = field
        self.allowed = field >= self.C
        self.labels, _ = ndimage.label(self.allowed)
        eq = lagrange_points(mu)
        self.x_l1 = eq.positions[0, 0]
        self.x_l2 = eq.positions[1, 0]
        self._lab_p1 = self.labels[self._index(0.0, 0.0)]
        self._lab_p2 = self.labels[self._index(1.0, 0.0)]
        self._lab_far = self.labels[0, 0]

    def _index(self, x, y):
        i = int(round((y - self.bounds[2]) / self.dy))
        j = int(round((x - self.bounds[0]) / self.dx))
        i = min(max(i, 0), self.ys.size - 1)
        j = min(max(j, 0), self.xs.size - 1)
        return i, j

    def classify(self, point) -> HillLabel:
        x, y = float(point[0]), float(point[1])
        if np.hypot(x, y) < R_MIN or np.hypot(x - 1.0, y) < R_MIN:
            raise SingularityError("point coincides with a primary")
        two_om = 2.0 * float(omega(x, y, self.mu))
        gx, gy = K.omega_grad(x, y, self.mu)
        slope = 2.0 * np.hypot(gx, gy) * max(self.dx, self.dy)
        uncertain = abs(two_om - self.C) <= slope
        if two_om < self.C:
            return HillLabel("forbidden", uncertain)
        lab = self.labels[self._index(x, y)]
        if lab == 0:
            # grid cell is forbidden but the point is not: sits on the curve
            return HillLabel(self._strip_label(x, None), True)
        return HillLabel(self._component_label(lab, x), uncertain)

    def _strip_label(self, x, lab):
        if self.x_l1 <= x <= self.x_l2:
            return "H2"
        if x < self.x_l1 and (lab is None or lab == self._lab_p1):
            return "H1"
        return "HO"

    def _component_label(self, lab, x):
        with_p1 = lab == self._lab_p1
        with_p2 = lab == self._lab_p2
        with_far = lab == self._lab_far
        if with_p2 and not (with_p1 or with_far):
            return "H2"
        if with_p1 and not (with_p2 or with_far):
            return "H1"
        if with_far and not (with_p1 or with_p2):
            return "HO"
        if with_p1 or with_p2 or with_far:
            return self._strip_label(x, lab)
        return "HO"


def hill_classify(point, C: float, mu: float, shape=HILL_SHAPE, bounds=HILL_BOUNDS) -> HillLabel:
    """Hill-region label of a P1-frame position at Jacobi value ``C``."""
    return _cached_map(float(C), float(mu), bounds, shape).classify(point)


@lru_cache(maxsize=8)
def _cached_map(C, mu, bounds, shape):
    return HillRegionMap(C, mu, bounds=bounds, shape=shape)


def zero_velocity_curve(C: float, mu: float, resolution: int = 1000,
                        bounds=HILL_BOUNDS) -> list:
    """Polylines of ``2*Omega = C`` in the P1 frame, via marching squares.

    Returns an empty list for ``C <= 3`` where no forbidden region exists.
    """
    _check_mu(mu)
    if C <= 3.0:
        return []
    x0, x1, y0, y1 = bounds
    xs = np.linspace(x0, x1, resolution)
    ys = np.linspace(y0, y1, resolution)
    X, Y = np.meshgrid(xs, ys, indexing="xy")
    with np.errstate(divide="ignore"):
        field = ((X - mu) ** 2 + Y ** 2 + 2 * (1 - mu) / np.hypot(X, Y)
                 + 2 * mu / np.hypot(X - 1, Y) + mu * (1 - mu))
    field = np.where(np.isfinite(field), field, 1e6)
    curves = []
    for c in measure.find_contours(field, C):
        # contour coordinates are (row, col) fractional indices
        px = x0 + c[:, 1] * (xs[1] - xs[0])
        py = y0 + c[:, 0] * (ys[1] - ys[0])
        curves.append(np.column_stack([px, py]))
    return curves


def polygon_area(poly) -> float:
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))

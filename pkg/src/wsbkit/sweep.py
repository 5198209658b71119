"""Radial scans along a ray from P2, stable-interval extraction, boundary
refinement, grid sweeps and finite-n approximations of the limit sets."""
import datetime as _dt
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from numpy.typing import NDArray

from . import __version__
from .dynamics import lagrange_points
from .errors import BracketError, DomainError, IntegrationError
from .integrate import IntegratorConfig
from .wsb import PeriapsisIC, StabilityOutcome, classify, classify_many

REFINE_TOL = 1e-10
DEFAULT_K = 2000
DEFAULT_E_GRID = (0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95)
DEFAULT_N_THETA = 180


def default_scan_range(mu: float, outer: bool = False) -> Tuple[float, float]:
    """``[1e-3, 0.9 d]`` with ``d`` the P2-L1 distance, or ``1.2 d`` for outer probes."""
    d = lagrange_points(mu).distance_to_p2(1)
    return 1e-3, (1.2 if outer else 0.9) * d


def default_theta_grid(n: int = DEFAULT_N_THETA) -> NDArray:
    return np.arange(n) * (2.0 * np.pi / n)


@dataclass
class RadialScan:
    theta: float
    e: float
    n: int
    mu: float
    radii: NDArray
    outcomes: List[StabilityOutcome]

    def __post_init__(self):
        if self.radii.size and np.any(np.diff(self.radii) <= 0):
            raise DomainError("scan radii must be strictly increasing")

    @property
    def stable(self) -> NDArray:
        return np.array([o.stable for o in self.outcomes], dtype=bool)

    @property
    def jacobi(self) -> NDArray:
        return np.array([o.jacobi for o in self.outcomes])

    def truncate(self, m: int) -> "RadialScan":
        return RadialScan(self.theta, self.e, m, self.mu, self.radii,
                          [o.truncate(m) for o in self.outcomes])


def radial_scan(theta: float, e: float, n: int, mu: float,
                r_range: Optional[Tuple[float, float]] = None, K: int = DEFAULT_K,
                cfg: Optional[IntegratorConfig] = None, threads: int = 1,
                radii: Optional[NDArray] = None) -> RadialScan:
    """Classify ``K`` equally spaced radii (or explicit ``radii``) on one ray."""
    cfg = cfg or IntegratorConfig()
    if radii is None:
        if K < 2:
            raise DomainError("a scan needs K >= 2 points")
        lo, hi = r_range or default_scan_range(mu)
        if not (cfg.r_min < lo < hi):
            raise DomainError("scan range must satisfy r_min < lo < hi")
        radii = np.linspace(lo, hi, K)
    radii = np.asarray(radii, dtype=float)
    outs = classify_many(radii, theta, e, mu, n, cfg, threads=threads)
    return RadialScan(float(theta), float(e), int(n), float(mu), radii, outs)


def scan_levels(theta, e, n_list: Sequence[int], mu, r_range=None, K=DEFAULT_K,
                cfg=None, threads=1, radii=None) -> Dict[int, RadialScan]:
    """Scans for several cycle targets from a single run at the largest one.

    Valid because the classification for ``m < n`` is exactly the prefix of
    the run for ``n`` (see :meth:`StabilityOutcome.truncate`).
    """
    n_list = sorted(set(int(n) for n in n_list))
    if not n_list:
        return {}
    top = radial_scan(theta, e, n_list[-1], mu, r_range, K, cfg, threads, radii)
    return {n: (top if n == top.n else top.truncate(n)) for n in n_list}


# --------------------------------------------------------------------------
# intervals
# --------------------------------------------------------------------------

@dataclass
class Interval:
    """Open interval ``(a, b)`` of n-stable radii.

    ``i0..i1`` are the indices of the stable grid run it came from. ``a`` is
    the unstable neighbour below (or ``r_min`` when the run starts the scan)
    and ``b`` the unstable neighbour above (or the last radius, flagged
    ``truncated``), until refinement replaces them with boundary radii.
    """

    a: float
    b: float
    i0: int = -1
    i1: int = -1
    below_resolution: bool = False
    lower_open: bool = False
    truncated: bool = False
    lower_refined: bool = False
    upper_refined: bool = False

    @property
    def length(self):
        return self.b - self.a

    def contains(self, r):
        return self.a < r < self.b


@dataclass
class IntervalSet:
    theta: float
    e: float
    n: int
    mu: float
    intervals: List[Interval] = field(default_factory=list)
    approximation: Optional[str] = None

    def __len__(self):
        return len(self.intervals)

    @property
    def measure(self) -> float:
        return float(sum(iv.length for iv in self.intervals))

    def contains(self, r) -> bool:
        return any(iv.contains(r) for iv in self.intervals)

    def pairs(self):
        return [(iv.a, iv.b) for iv in self.intervals]


def extract_intervals(scan: RadialScan, r_min: Optional[float] = None) -> IntervalSet:
    """Maximal runs of stable grid points as open intervals."""
    if scan.radii.size == 0:
        raise DomainError("empty scan")
    r_min = IntegratorConfig().r_min if r_min is None else r_min
    st = scan.stable
    r = scan.radii
    out = IntervalSet(scan.theta, scan.e, scan.n, scan.mu)
    i = 0
    m = st.size
    while i < m:
        if not st[i]:
            i += 1
            continue
        j = i
        while j + 1 < m and st[j + 1]:
            j += 1
        lower_open = i == 0
        truncated = j == m - 1
        a = r_min if lower_open else r[i - 1]
        b = r[j] if truncated else r[j + 1]
        out.intervals.append(Interval(float(a), float(b), i, j, below_resolution=(i == j),
                                      lower_open=lower_open, truncated=truncated))
        i = j + 1
    return out


# --------------------------------------------------------------------------
# boundary refinement
# --------------------------------------------------------------------------

@dataclass
class BoundaryRecord:
    theta: float
    e: float
    n: int
    r_star: float
    side: str            # "lower" or "upper" end of a stable interval
    C: float
    width: float         # final bracket width
    unstable_kind: Optional[str]
    iterations: int
    r_stable: float      # stable end of the final bracket
    r_unstable: float    # unstable end of the final bracket
    separated: Optional[bool] = None   # verdicts at r_star -/+ 2 refine_tol differ


def refine_boundary(lo: float, hi: float, theta: float, e: float, n: int, mu: float,
                    cfg: Optional[IntegratorConfig] = None, refine_tol: float = REFINE_TOL,
                    known: Optional[Tuple[StabilityOutcome, StabilityOutcome]] = None,
                    self_check: bool = True) -> BoundaryRecord:
    """Bisect between a stable and an unstable radius down to ``refine_tol``.

    ``known`` may carry the outcomes at ``lo`` and ``hi`` to skip their
    reclassification. With ``self_check`` the result is reclassified at
    ``r_star -/+ 2 refine_tol``; ``separated`` is false when both sides agree,
    which happens where verdicts are not resolved by the integrator at this
    scale (near-collision passages, strongly chaotic later cycles).
    """
    cfg = cfg or IntegratorConfig()
    if known is None:
        o_lo = classify(PeriapsisIC(lo, theta, e, mu), n, cfg)
        o_hi = classify(PeriapsisIC(hi, theta, e, mu), n, cfg)
    else:
        o_lo, o_hi = known
    if o_lo.stable == o_hi.stable:
        raise BracketError("bracket endpoints classify identically")
    if o_lo.stable:
        rs, ru, ou = lo, hi, o_hi
    else:
        rs, ru, ou = hi, lo, o_lo
    side = "upper" if rs < ru else "lower"
    it = 0
    while abs(ru - rs) >= refine_tol:
        mid = 0.5 * (rs + ru)
        if mid in (rs, ru):
            break
        o = classify(PeriapsisIC(mid, theta, e, mu), n, cfg)
        it += 1
        if o.stable:
            rs = mid
        else:
            ru, ou = mid, o
    r_star = 0.5 * (rs + ru)
    C = PeriapsisIC(r_star, theta, e, mu).jacobi
    sep = None
    if self_check:
        below = classify(PeriapsisIC(r_star - 2 * refine_tol, theta, e, mu), n, cfg)
        above = classify(PeriapsisIC(r_star + 2 * refine_tol, theta, e, mu), n, cfg)
        sep = below.stable != above.stable
    return BoundaryRecord(float(theta), float(e), int(n), float(r_star), side, float(C),
                          float(abs(ru - rs)), ou.unstable_kind, it, float(rs), float(ru), sep)


def bisection_iterations(width: float, tol: float) -> int:
    """Number of halvings taking ``width`` strictly below ``tol``."""
    if width < tol:
        return 0
    return int(math.floor(math.log2(width / tol))) + 1


def refine_scan(scan: RadialScan, intervals: IntervalSet, cfg=None,
                refine_tol=REFINE_TOL) -> Tuple[IntervalSet, List[BoundaryRecord]]:
    """Refine every bracketed interval endpoint of a scan."""
    cfg = cfg or IntegratorConfig()
    recs = []
    new = IntervalSet(intervals.theta, intervals.e, intervals.n, intervals.mu)
    r = scan.radii
    outs = scan.outcomes
    for iv in intervals.intervals:
        iv2 = Interval(**asdict(iv))
        if not iv.lower_open:
            b = refine_boundary(r[iv.i0 - 1], r[iv.i0], scan.theta, scan.e, scan.n, scan.mu,
                                cfg, refine_tol, known=(outs[iv.i0 - 1], outs[iv.i0]))
            recs.append(b)
            iv2.a = b.r_star
            iv2.lower_refined = True
        if not iv.truncated:
            b = refine_boundary(r[iv.i1], r[iv.i1 + 1], scan.theta, scan.e, scan.n, scan.mu,
                                cfg, refine_tol, known=(outs[iv.i1], outs[iv.i1 + 1]))
            recs.append(b)
            iv2.b = b.r_star
            iv2.upper_refined = True
        new.intervals.append(iv2)
    return new, recs


# --------------------------------------------------------------------------
# sweeps
# --------------------------------------------------------------------------

@dataclass
class SweepManifest:
    mu: float
    theta_grid: List[float]
    e_grid: List[float]
    n_list: List[int]
    r_range: List[float]
    K: int
    refine_tol: float
    persist_tol: float
    integrator: dict
    tool_version: str = __version__
    timestamp: str = ""
    notes: List[str] = field(default_factory=list)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        return cls(**d)

    def config(self) -> IntegratorConfig:
        return IntegratorConfig(**self.integrator)


@dataclass
class SweepResult:
    manifest: SweepManifest
    scans: Dict[tuple, RadialScan] = field(default_factory=dict)
    intervals: Dict[tuple, IntervalSet] = field(default_factory=dict)
    boundaries: Dict[tuple, List[BoundaryRecord]] = field(default_factory=dict)
    errors: List[str] = field(default_factory=list)

    def keys(self):
        """(theta, e, n) keys in deterministic grid order."""
        return sorted(self.intervals, key=lambda k: (self.manifest.theta_grid.index(k[0]),
                                                     self.manifest.e_grid.index(k[1]), k[2]))


def make_manifest(mu, theta_grid, e_grid, n_list, cfg=None, r_range=None, K=DEFAULT_K,
                  refine_tol=REFINE_TOL, persist_tol=None) -> SweepManifest:
    cfg = cfg or IntegratorConfig()
    r_range = r_range or default_scan_range(mu)
    return SweepManifest(
        mu=float(mu), theta_grid=[float(t) for t in theta_grid],
        e_grid=[float(e) for e in e_grid], n_list=sorted(int(n) for n in n_list),
        r_range=[float(r_range[0]), float(r_range[1])], K=int(K),
        refine_tol=float(refine_tol),
        persist_tol=float(10 * refine_tol if persist_tol is None else persist_tol),
        integrator=cfg.to_dict(),
        timestamp=_dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        notes=["non-return (kind iv) is judged at integrator t_max",
               "limit-set products are finite-n APPROXIMATIONS"])


def _sweep_item(theta, e, man: SweepManifest, cfg, refine):
    scans = scan_levels(theta, e, man.n_list, man.mu, tuple(man.r_range), man.K, cfg)
    res = {}
    for n, sc in scans.items():
        ivs = extract_intervals(sc, cfg.r_min)
        if refine:
            ivs, recs = refine_scan(sc, ivs, cfg, man.refine_tol)
        else:
            recs = []
        res[n] = (sc, ivs, recs)
    return res


def sweep(theta_grid, e_grid, n_list, mu: float, cfg: Optional[IntegratorConfig] = None,
          r_range=None, K: int = DEFAULT_K, refine_tol: float = REFINE_TOL,
          threads: int = 1, refine: bool = True, manifest: Optional[SweepManifest] = None
          ) -> SweepResult:
    """S_n and W_n data products over a (theta, e) grid for each n in ``n_list``.

    Work items are (theta, e) pairs; they run on ``threads`` workers and are
    merged in grid order, so output does not depend on the thread count.
    Failures of single items are logged in ``errors`` and the rest retained.
    """
    cfg = cfg or IntegratorConfig()
    if manifest is None:
        manifest = make_manifest(mu, theta_grid, e_grid, n_list, cfg, r_range, K, refine_tol)
    man = manifest
    cfg = man.config()
    result = SweepResult(man)
    if not man.n_list:
        return result
    items = [(th, e) for th in man.theta_grid for e in man.e_grid]

    def run(item):
        try:
            return item, _sweep_item(item[0], item[1], man, cfg, refine), None
        except (IntegrationError, DomainError) as exc:
            return item, None, f"theta={item[0]!r} e={item[1]!r}: {exc}"

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            done = list(ex.map(run, items))
    else:
        done = [run(it) for it in items]
    for (th, e), res, err in done:
        if err:
            result.errors.append(err)
            continue
        for n, (sc, ivs, recs) in res.items():
            result.scans[(th, e, n)] = sc
            result.intervals[(th, e, n)] = ivs
            result.boundaries[(th, e, n)] = recs
    return result


# --------------------------------------------------------------------------
# nesting and limit sets
# --------------------------------------------------------------------------

@dataclass
class MonotonicityReport:
    m: int
    n: int
    violations: List[float]   # radii stable at m but unstable at n
    checked: int

    @property
    def ok(self):
        return not self.violations


def monotonicity_check(scan_m: RadialScan, scan_n: RadialScan,
                       boundaries: Sequence[BoundaryRecord] = (),
                       band: float = REFINE_TOL) -> MonotonicityReport:
    """Points stable for the larger cycle count but unstable for the smaller.

    Points within ``band`` of any supplied boundary radius are skipped.
    """
    if scan_m.n < scan_n.n:
        scan_m, scan_n = scan_n, scan_m
    if (scan_m.radii.shape != scan_n.radii.shape or np.any(scan_m.radii != scan_n.radii)
            or scan_m.theta != scan_n.theta or scan_m.e != scan_n.e or scan_m.mu != scan_n.mu):
        raise DomainError("scans are not on the same grid")
    rs = np.array([b.r_star for b in boundaries]) if boundaries else np.empty(0)
    bad = []
    sm, sn = scan_m.stable, scan_n.stable
    for i, r in enumerate(scan_m.radii):
        if sm[i] and not sn[i]:
            if rs.size and np.min(np.abs(rs - r)) <= band:
                continue
            bad.append(float(r))
    return MonotonicityReport(scan_m.n, scan_n.n, bad, int(scan_m.radii.size))


def intersect_intervals(a: Sequence[Tuple[float, float]], b: Sequence[Tuple[float, float]]):
    """Intersection of two sorted lists of disjoint open intervals."""
    out = []
    i = j = 0
    while i < len(a) and j < len(b):
        lo = max(a[i][0], b[j][0])
        hi = min(a[i][1], b[j][1])
        if lo < hi:
            out.append((lo, hi))
        if a[i][1] < b[j][1]:
            i += 1
        else:
            j += 1
    return out


@dataclass
class PersistentBoundary:
    r_star: float
    C: float
    kinds: List[Optional[str]]   # adjacent unstable kind for n = 1..n_max


@dataclass
class LimitApproximation:
    theta: float
    e: float
    n_max: int
    s_hat: List[Tuple[float, float]]
    w_prime: List[PersistentBoundary]
    label: str = "APPROXIMATION"

    @property
    def measure(self):
        return float(sum(b - a for a, b in self.s_hat))


def limit_from_levels(intervals: Dict[int, IntervalSet], boundaries: Dict[int, List[BoundaryRecord]],
                      persist_tol: float) -> LimitApproximation:
    """Finite-n stand-ins for the infinite-cycle stable set and its boundary."""
    ns = sorted(intervals)
    n_max = ns[-1]
    s = intervals[ns[0]].pairs()
    for n in ns[1:]:
        s = intersect_intervals(s, intervals[n].pairs())
    persist = []
    for b in boundaries.get(n_max, []):
        kinds = []
        ok = True
        for n in ns:
            near = [c for c in boundaries.get(n, []) if abs(c.r_star - b.r_star) <= persist_tol]
            if not near:
                ok = False
                break
            kinds.append(min(near, key=lambda c: abs(c.r_star - b.r_star)).unstable_kind)
        if ok:
            persist.append(PersistentBoundary(b.r_star, b.C, kinds))
    first = intervals[ns[0]]
    return LimitApproximation(first.theta, first.e, n_max, s, persist)


def limit_sets(theta_grid, e_grid, n_max: int, mu: float, cfg=None, r_range=None,
               K=DEFAULT_K, refine_tol=REFINE_TOL, persist_tol=None, threads=1,
               result: Optional[SweepResult] = None) -> Dict[tuple, LimitApproximation]:
    """Intersections over n = 1..n_max of S_n and persistent W_n points.

    Both products are labelled APPROXIMATION; nothing is claimed about the
    true infinite-cycle limit.
    """
    if n_max < 1:
        raise DomainError("n_max must be >= 1")
    if result is None:
        result = sweep(theta_grid, e_grid, list(range(1, n_max + 1)), mu, cfg, r_range, K,
                       refine_tol, threads)
    ptol = result.manifest.persist_tol if persist_tol is None else persist_tol
    out = {}
    for th in result.manifest.theta_grid:
        for e in result.manifest.e_grid:
            if (th, e, 1) not in result.intervals:
                continue
            ivs = {n: result.intervals[(th, e, n)] for n in range(1, n_max + 1)}
            bds = {n: result.boundaries[(th, e, n)] for n in range(1, n_max + 1)}
            out[(th, e)] = limit_from_levels(ivs, bds, ptol)
    return out


MSTAR_INTERIOR = "interior"
MSTAR_BOUNDARY = "boundary"
MSTAR_COMPLEMENT = "complement"


def mstar_partition(Y1, Y2, e: float, mu: float, n_max: int, cfg=None, threads=1,
                    decimals: int = 12) -> NDArray:
    """Three-way label of periapsis points in the P2-frame position plane.

    Points are grouped into rays by polar angle. Along each ray, points that
    are n_max-stable are ``interior``; unstable points next to an interior
    point are ``boundary`` (grid-resolution stand-in for the limit
    boundary); all other points are ``complement``.
    """
    Y1 = np.asarray(Y1, float).ravel()
    Y2 = np.asarray(Y2, float).ravel()
    r = np.hypot(Y1, Y2)
    th = np.mod(np.arctan2(Y2, Y1), 2 * np.pi)
    outs = classify_many(r, th, e, mu, n_max, cfg, threads=threads)
    stable = np.array([o.stable for o in outs])
    labels = np.where(stable, MSTAR_INTERIOR, MSTAR_COMPLEMENT).astype(object)
    keys = np.round(th, decimals)
    for k in np.unique(keys):
        idx = np.flatnonzero(keys == k)
        idx = idx[np.argsort(r[idx])]
        for p, i in enumerate(idx):
            if stable[i]:
                continue
            nb = [idx[q] for q in (p - 1, p + 1) if 0 <= q < idx.size]
            if any(stable[q] for q in nb):
                labels[i] = MSTAR_BOUNDARY
    return labels

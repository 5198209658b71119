"""CSV/JSON persistence of data products and deterministic SVG figures."""
import csv
import io
import json
import math
import os
from typing import Iterable, List, Optional, Sequence

import numpy as np

from .errors import DomainError
from .integrate import fmt

SCAN_HEADER = ["theta", "e", "n", "mu", "r", "C", "verdict", "kind", "failing_cycle"]
INTERVAL_HEADER = ["theta", "e", "n", "a", "b", "below_resolution", "lower_open", "truncated"]
BOUNDARY_HEADER = ["theta", "e", "n", "r_star", "side", "C", "kind", "width", "iterations",
                   "separated"]
OUTCOME_HEADER = ["r", "theta", "e", "mu", "C", "verdict", "kind", "failing_cycle", "n"]
ITERATE_HEADER = ["k", "r", "rdot", "t_flight", "E2", "C"]
CUT_HEADER = ["branch", "neck", "k", "seed_phase", "r", "rdot", "C"]
ORBIT_HEADER = ["neck", "mu", "C", "period", "y1", "y2", "v1", "v2", "lambda", "residual"]

PRODUCT_KINDS = {
    "scans": SCAN_HEADER,
    "intervals": INTERVAL_HEADER,
    "boundaries": BOUNDARY_HEADER,
    "outcomes": OUTCOME_HEADER,
    "iterates": ITERATE_HEADER,
    "cuts": CUT_HEADER,
    "orbits": ORBIT_HEADER,
}


def cell(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return fmt(v)
    return str(v)


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> int:
    """Write rows with floats at 17 significant digits; returns the row count."""
    n = 0
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([cell(v) for v in row])
            n += 1
    return n


def read_csv(path) -> List[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def detect_kind(path) -> str:
    with open(path, newline="") as fh:
        header = next(csv.reader(fh), None)
    for kind, h in PRODUCT_KINDS.items():
        if header == h:
            return kind
    raise DomainError(f"unrecognised product header in {path}")


# rows -----------------------------------------------------------------------

def outcome_row(r, theta, e, mu, outcome):
    return [r, theta, e, mu, outcome.jacobi, outcome.verdict, outcome.unstable_kind or "",
            outcome.failing_cycle, outcome.n]


def scan_rows(scan):
    for r, o in zip(scan.radii, scan.outcomes):
        yield [scan.theta, scan.e, scan.n, scan.mu, r, o.jacobi, o.verdict,
               o.unstable_kind or "", o.failing_cycle]


def interval_rows(ivs):
    for iv in ivs.intervals:
        yield [ivs.theta, ivs.e, ivs.n, iv.a, iv.b, iv.below_resolution, iv.lower_open,
               iv.truncated]


def boundary_rows(records):
    for b in records:
        yield [b.theta, b.e, b.n, b.r_star, b.side, b.C, b.unstable_kind or "", b.width,
               b.iterations, b.separated]


def write_sweep(result, outdir) -> dict:
    """Write the CSV products and the manifest of a sweep into ``outdir``."""
    os.makedirs(outdir, exist_ok=True)
    keys = result.keys()
    paths = {k: os.path.join(outdir, f"{k}.csv") for k in ("scans", "intervals", "boundaries")}
    write_csv(paths["scans"], SCAN_HEADER,
              (row for k in keys for row in scan_rows(result.scans[k])))
    write_csv(paths["intervals"], INTERVAL_HEADER,
              (row for k in keys for row in interval_rows(result.intervals[k])))
    write_csv(paths["boundaries"], BOUNDARY_HEADER,
              (row for k in keys for row in boundary_rows(result.boundaries[k])))
    paths["manifest"] = write_manifest(result.manifest, outdir)
    log = os.path.join(outdir, "errors.log")
    if result.errors:
        with open(log, "w") as fh:
            fh.write("\n".join(result.errors) + "\n")
        paths["errors"] = log
    elif os.path.exists(log):
        os.remove(log)
    return paths


def write_manifest(manifest, outdir) -> str:
    path = os.path.join(outdir, "manifest.json")
    with open(path, "w") as fh:
        json.dump(manifest.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def read_manifest(path):
    from .sweep import SweepManifest
    with open(path) as fh:
        return SweepManifest.from_dict(json.load(fh))


# SVG ------------------------------------------------------------------------

W, H, PAD = 640, 640, 56


class _Canvas:
    def __init__(self, xlim, ylim, xlabel, ylabel, title):
        self.xlim = xlim
        self.ylim = ylim
        self.buf = io.StringIO()
        self.buf.write(f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
                       f'viewBox="0 0 {W} {H}">\n')
        self.buf.write(f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>\n')
        self._axes(xlabel, ylabel, title)

    def px(self, x, y):
        (x0, x1), (y0, y1) = self.xlim, self.ylim
        u = PAD + (x - x0) / (x1 - x0) * (W - 2 * PAD)
        v = H - PAD - (y - y0) / (y1 - y0) * (H - 2 * PAD)
        return u, v

    def _axes(self, xlabel, ylabel, title):
        b = self.buf
        b.write(f'<rect x="{PAD}" y="{PAD}" width="{W - 2 * PAD}" height="{H - 2 * PAD}" '
                'fill="none" stroke="black" stroke-width="1"/>\n')
        for i in range(5):
            fx = self.xlim[0] + i * (self.xlim[1] - self.xlim[0]) / 4
            fy = self.ylim[0] + i * (self.ylim[1] - self.ylim[0]) / 4
            u, _ = self.px(fx, self.ylim[0])
            _, v = self.px(self.xlim[0], fy)
            b.write(f'<text x="{u:.2f}" y="{H - PAD + 18}" font-size="11" '
                    f'text-anchor="middle">{fx:.4g}</text>\n')
            b.write(f'<text x="{PAD - 6}" y="{v + 4:.2f}" font-size="11" '
                    f'text-anchor="end">{fy:.4g}</text>\n')
        b.write(f'<text x="{W / 2}" y="{H - 14}" font-size="13" text-anchor="middle">'
                f'{xlabel}</text>\n')
        b.write(f'<text x="16" y="{H / 2}" font-size="13" text-anchor="middle" '
                f'transform="rotate(-90 16 {H / 2})">{ylabel}</text>\n')
        b.write(f'<text x="{W / 2}" y="{PAD - 18}" font-size="14" text-anchor="middle">'
                f'{title}</text>\n')

    def dot(self, x, y, color="#1f4e9c", rad=1.6):
        u, v = self.px(x, y)
        self.buf.write(f'<circle cx="{u:.2f}" cy="{v:.2f}" r="{rad}" fill="{color}"/>\n')

    def segment(self, x0, y0, x1, y1, color="#1f4e9c"):
        u0, v0 = self.px(x0, y0)
        u1, v1 = self.px(x1, y1)
        self.buf.write(f'<line x1="{u0:.2f}" y1="{v0:.2f}" x2="{u1:.2f}" y2="{v1:.2f}" '
                       f'stroke="{color}" stroke-width="1.5"/>\n')

    def text(self):
        return self.buf.getvalue() + "</svg>\n"


_PALETTE = ["#1f4e9c", "#c0392b", "#1e8449", "#7d3c98", "#b9770e", "#117a65", "#34495e"]


def _limits(vals, default):
    vals = np.asarray(vals, float)
    vals = vals[np.isfinite(vals)]
    if vals.size == 0:
        return default
    lo, hi = float(vals.min()), float(vals.max())
    if hi - lo < 1e-12:
        lo, hi = lo - 0.5, hi + 0.5
    pad = 0.05 * (hi - lo)
    return lo - pad, hi + pad


def _square(xs, ys, default):
    lim = _limits(np.concatenate([np.abs(xs), np.abs(ys)]) if len(xs) else [], default)
    m = max(abs(lim[0]), abs(lim[1]))
    return (-m, m), (-m, m)


def svg_from_rows(kind: str, rows: List[dict]) -> str:
    """Render a product table; output depends only on the rows."""
    if kind == "boundaries":
        xs = [float(r["r_star"]) * math.cos(float(r["theta"])) for r in rows]
        ys = [float(r["r_star"]) * math.sin(float(r["theta"])) for r in rows]
        xl, yl = _square(xs, ys, (-0.1, 0.1))
        cv = _Canvas(xl, yl, "Y1", "Y2", "boundary points")
        es = sorted({r["e"] for r in rows}, key=float)
        for x, y, r in zip(xs, ys, rows):
            cv.dot(x, y, _PALETTE[es.index(r["e"]) % len(_PALETTE)])
        return cv.text()
    if kind == "intervals":
        segs = []
        for r in rows:
            th = float(r["theta"])
            a, b = float(r["a"]), float(r["b"])
            segs.append((a * math.cos(th), a * math.sin(th), b * math.cos(th), b * math.sin(th)))
        pts = np.array(segs).reshape(-1, 4)
        xl, yl = _square(np.concatenate([pts[:, 0], pts[:, 2]]),
                         np.concatenate([pts[:, 1], pts[:, 3]]), (-0.1, 0.1))
        cv = _Canvas(xl, yl, "Y1", "Y2", "stable intervals")
        for s in segs:
            cv.segment(*s)
        return cv.text()
    if kind in ("iterates", "cuts"):
        xs = [float(r["r"]) for r in rows]
        ys = [float(r["rdot"]) for r in rows]
        cv = _Canvas(_limits(xs, (0.0, 0.1)), _limits(ys, (-0.1, 0.1)), "r", "rdot",
                     "section iterates" if kind == "iterates" else "manifold cuts")
        groups = sorted({r.get("k", "") for r in rows}, key=lambda s: (len(s), s))
        for x, y, r in zip(xs, ys, rows):
            g = groups.index(r.get("k", "")) if kind == "cuts" else 0
            cv.dot(x, y, _PALETTE[g % len(_PALETTE)])
        return cv.text()
    if kind == "scans":
        xs = [float(r["r"]) for r in rows]
        ys = [float(r["theta"]) for r in rows]
        cv = _Canvas(_limits(xs, (0.0, 0.1)), _limits(ys, (0.0, 2 * math.pi)), "r", "theta",
                     "scan verdicts")
        for x, y, r in zip(xs, ys, rows):
            cv.dot(x, y, _PALETTE[0] if r["verdict"] == "stable" else _PALETTE[1], 1.2)
        return cv.text()
    raise DomainError(f"unknown product kind {kind!r}")


def plot_product(path, kind: Optional[str] = None, out: Optional[str] = None) -> str:
    """SVG of a CSV product; ``kind`` is detected from the header when omitted."""
    if not os.path.exists(path):
        raise DomainError(f"product not found: {path}")
    kind = kind or detect_kind(path)
    if kind not in PRODUCT_KINDS:
        raise DomainError(f"unknown product kind {kind!r}")
    svg = svg_from_rows(kind, read_csv(path))
    if out:
        with open(out, "w") as fh:
            fh.write(svg)
    return svg

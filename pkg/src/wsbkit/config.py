"""Run configuration: INI files with sections, or a sweep manifest JSON."""
import configparser
import json
import math
import os
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .errors import DomainError
from .integrate import IntegratorConfig
from .sweep import DEFAULT_K, REFINE_TOL, SweepManifest, default_scan_range, make_manifest


def _floats(text) -> List[float]:
    out = []
    for tok in str(text).replace(";", ",").split(","):
        tok = tok.strip()
        if not tok:
            continue
        out.append(float(eval_angle(tok)))
    return out


def eval_angle(tok: str) -> float:
    """Parse a float that may be written as a multiple of ``pi`` (``3pi/2``, ``pi``)."""
    t = tok.strip().lower().replace(" ", "")
    if "pi" not in t:
        return float(t)
    num, _, den = t.partition("/")
    coef = num.replace("*", "").replace("pi", "")
    c = 1.0 if coef in ("", "+") else (-1.0 if coef == "-" else float(coef))
    return c * math.pi / (float(den) if den else 1.0)


@dataclass
class RunConfig:
    mu: float
    theta_grid: List[float]
    e_grid: List[float]
    n_list: List[int]
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    r_range: Optional[Tuple[float, float]] = None
    K: int = DEFAULT_K
    refine_tol: float = REFINE_TOL
    refine: bool = True
    C_a: Optional[float] = None
    output: str = "wsb_out"
    seed: int = 0

    def __post_init__(self):
        self.validate()

    def validate(self):
        if not (0.0 < self.mu < 0.5):
            raise DomainError("mu must lie in (0, 0.5)")
        if not self.theta_grid or not self.e_grid:
            raise DomainError("theta and e grids must be nonempty")
        if any(not (0.0 <= e < 1.0) for e in self.e_grid):
            raise DomainError("eccentricities must lie in [0, 1)")
        if any(n < 1 for n in self.n_list):
            raise DomainError("cycle counts must be >= 1")
        if list(self.n_list) != sorted(self.n_list):
            raise DomainError("n list must be sorted")
        if self.K < 2:
            raise DomainError("K must be >= 2")
        if not self.refine_tol > 0:
            raise DomainError("refine_tol must be positive")
        if self.r_range is not None and not (0 < self.r_range[0] < self.r_range[1]):
            raise DomainError("r range must satisfy 0 < lo < hi")

    def manifest(self) -> SweepManifest:
        m = make_manifest(self.mu, self.theta_grid, self.e_grid, self.n_list, self.integrator,
                          self.r_range or default_scan_range(self.mu), self.K, self.refine_tol)
        m.notes = m.notes + [f"refine={int(self.refine)}", f"seed={self.seed}"]
        if self.C_a is not None:
            m.notes.append(f"C_a={self.C_a!r}")
        return m


def load_ini(path) -> RunConfig:
    cp = configparser.ConfigParser()
    if not cp.read(path):
        raise DomainError(f"cannot read config {path}")
    if not cp.has_section("run"):
        raise DomainError("config needs a [run] section")
    run = cp["run"]
    integ = {}
    if cp.has_section("integrator"):
        for k, v in cp["integrator"].items():
            integ[k] = float(v)
    sw = cp["sweep"] if cp.has_section("sweep") else {}
    if "theta" in sw:
        theta = _floats(sw["theta"])
    else:
        nth = int(sw.get("n_theta", 180))
        theta = list(np.arange(nth) * (2 * math.pi / nth))
    r_range = None
    if "r_min" in sw or "r_max" in sw:
        lo, hi = default_scan_range(float(run["mu"]))
        r_range = (float(sw.get("r_min", lo)), float(sw.get("r_max", hi)))
    try:
        return RunConfig(
            mu=float(run["mu"]),
            theta_grid=theta,
            e_grid=_floats(sw.get("e", "0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95")),
            n_list=[int(x) for x in _floats(sw.get("n", "1"))],
            integrator=IntegratorConfig(**integ),
            r_range=r_range,
            K=int(sw.get("k", DEFAULT_K)),
            refine_tol=float(sw.get("refine_tol", REFINE_TOL)),
            refine=str(sw.get("refine", "yes")).lower() in ("1", "yes", "true", "on"),
            C_a=float(run["c_a"]) if "c_a" in run else None,
            output=run.get("output", "wsb_out"),
            seed=int(run.get("seed", 0)),
        )
    except (KeyError, TypeError) as exc:
        raise DomainError(f"bad config: {exc}")


def load_manifest_config(path) -> Tuple[RunConfig, SweepManifest]:
    with open(path) as fh:
        man = SweepManifest.from_dict(json.load(fh))
    refine = "refine=0" not in man.notes
    cfg = RunConfig(mu=man.mu, theta_grid=list(man.theta_grid), e_grid=list(man.e_grid),
                    n_list=list(man.n_list), integrator=man.config(),
                    r_range=tuple(man.r_range), K=man.K, refine_tol=man.refine_tol,
                    refine=refine, output=os.path.dirname(os.path.abspath(path)))
    return cfg, man


def load_config(path):
    """(RunConfig, manifest or None) from an INI file or a manifest JSON."""
    if str(path).endswith(".json"):
        return load_manifest_config(path)
    return load_ini(path), None

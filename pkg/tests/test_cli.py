import json

import numpy as np
import pytest

from wsbkit.cli import main
from wsbkit.config import eval_angle, load_ini
from wsbkit.errors import DomainError
from wsbkit.products import (BOUNDARY_HEADER, INTERVAL_HEADER, detect_kind, plot_product,
                             write_csv)

INI = """[run]
mu = 0.00095
output = {out}

[integrator]
rel_tol = 1e-12
abs_tol = 1e-12

[sweep]
theta = 0, pi/2
e = 0.0, 0.4
n = 1, 2
K = 25
r_min = 0.01
r_max = 0.09
refine_tol = 1e-8
"""


@pytest.fixture
def ini(tmp_path):
    p = tmp_path / "run.ini"
    p.write_text(INI.format(out=tmp_path / "out"))
    return p


def test_eval_angle():
    assert eval_angle("3pi/2") == pytest.approx(1.5 * np.pi)
    assert eval_angle("-pi") == pytest.approx(-np.pi)
    assert eval_angle("0.25") == 0.25


def test_load_ini(ini):
    cfg = load_ini(ini)
    assert cfg.n_list == [1, 2] and cfg.K == 25 and cfg.r_range == (0.01, 0.09)
    with pytest.raises(DomainError):
        load_ini(ini.parent / "missing.ini")


def test_lagrange_and_version(capsys):
    assert main(["lagrange", "--mu", "0.01215"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "point,y1,y2,C" and out[1].startswith("L1,")
    assert abs(float(out[1].split(",")[3]) - 3.20034) < 5e-4
    assert main(["version"]) == 0


def test_exit_codes(tmp_path, capsys):
    assert main(["lagrange", "--mu", "0.9"]) == 2
    assert main(["classify", "--mu", "0.01", "--r", "-1", "--theta", "0", "--e", "0"]) == 2
    assert main(["nonsense"]) == 2
    assert main(["plot", str(tmp_path / "nope.csv"), "--out", str(tmp_path / "x.svg")]) == 2
    assert main(["classify", "--mu", "0.01215", "--r", "0.005", "--theta", "0",
                 "--e", "0", "--n", "2"]) == 0
    assert ",stable," in capsys.readouterr().out


def test_sweep_deterministic_across_threads(ini, tmp_path):
    out = tmp_path / "out"
    assert main(["sweep", str(ini), "--threads", "1"]) == 0
    out2 = tmp_path / "out2"
    assert main(["sweep", str(out / "manifest.json"), "--out", str(out2), "--threads", "3"]) == 0
    for name in ("scans.csv", "intervals.csv", "boundaries.csv"):
        assert (out / name).read_bytes() == (out2 / name).read_bytes()
    man = json.loads((out / "manifest.json").read_text())
    assert man["K"] == 25 and man["n_list"] == [1, 2]
    assert detect_kind(out / "boundaries.csv") == "boundaries"


def test_plots(ini, tmp_path):
    out = tmp_path / "out"
    main(["sweep", str(ini)])
    a = tmp_path / "a.svg"
    b = tmp_path / "b.svg"
    assert main(["plot", str(out / "intervals.csv"), "--out", str(a)]) == 0
    assert main(["plot", str(out / "intervals.csv"), "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    n_rows = len((out / "intervals.csv").read_text().splitlines()) - 1
    assert a.read_text().count("<line ") == n_rows


def test_empty_boundaries_plot_has_axes_only(tmp_path):
    p = tmp_path / "b.csv"
    write_csv(p, BOUNDARY_HEADER, [])
    svg = plot_product(p)
    assert "<svg" in svg and "<circle" not in svg and "<text" in svg
    q = tmp_path / "i.csv"
    write_csv(q, INTERVAL_HEADER, [])
    assert "<line" not in plot_product(q)


def test_section_and_manifold_commands(tmp_path, capsys):
    it = tmp_path / "it.csv"
    assert main(["section", "--mu", "0.00095", "--ic", "0.01,0.5,0.2", "--k-max", "3",
                 "--out", str(it)]) == 0
    assert "verdict=bounded" in capsys.readouterr().out
    assert len(it.read_text().splitlines()) == 5
    md = tmp_path / "man"
    assert main(["manifold", "--mu", "0.00095", "--C", "3.037", "--n-seeds", "30",
                 "--k-max", "1", "--out", str(md)]) == 0
    assert (md / "orbit.csv").exists() and (md / "cuts.csv").exists()
    assert main(["section", "--mu", "0.00095"]) == 2


def test_threads_env(ini, monkeypatch):
    monkeypatch.setenv("WSB_THREADS", "many")
    assert main(["sweep", str(ini)]) == 2

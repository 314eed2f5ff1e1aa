import json
import math
from pathlib import Path

import pytest

from poincare_lab.cli import main, run
from poincare_lab.grid import read_field_csv


def _write(tmp_path, text, name="exp.ini"):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_verify_command(tmp_path, capsys):
    cfg = _write(tmp_path, "[run]\ncommand = verify\n")
    assert main([str(cfg), "--out", str(tmp_path / "v")]) == 0
    out = capsys.readouterr().out
    assert "0 failed" in out
    summary = json.loads((tmp_path / "v.json").read_text())
    assert summary["failed"] == 0 and summary["passed"] == summary["total"]
    assert (tmp_path / "v.manifest.txt").read_text().startswith("poincare_lab ")


def test_ratio_command(tmp_path):
    cfg = _write(tmp_path, """
[run]
command = ratio
[exponents]
n = 2
p = 2
q = 2
r = 2
[grid]
m = 128
[ratio]
f = sin
omega = uniform
""")
    assert run(cfg, out=str(tmp_path / "r")) == 0
    rep = json.loads((tmp_path / "r.json").read_text())
    assert set(rep) == {"deficit", "omega_q_norm", "grad_p_norm", "alpha", "ratio"}
    assert abs(rep["ratio"] - 1 / (2 * math.pi)) <= 1e-4
    lines = (tmp_path / "r.csv").read_text().splitlines()
    assert lines[0] == "deficit,omega_q_norm,grad_p_norm,alpha,ratio" and len(lines) == 2


def test_hypothesis_violation_exits_2(tmp_path, capsys):
    cfg = _write(tmp_path, "[run]\ncommand = ratio\n[exponents]\nn = 3\np = 2\nq = 1.5\nr = 2\n")
    assert run(cfg, out=str(tmp_path / "x")) == 2
    assert "q > n/2 failed" in capsys.readouterr().err
    assert not (tmp_path / "x.json").exists()


def test_runtime_errors_exit_1(tmp_path, capsys):
    assert run(tmp_path / "missing.ini") == 1
    bad = _write(tmp_path, "[run]\ncommand = dance\n")
    assert run(bad) == 1
    assert "unknown command" in capsys.readouterr().err
    garbled = _write(tmp_path, "this is not = [ini\n[[", "g.ini")
    assert run(garbled) == 1


def test_argparse_errors_do_not_use_exit_2(tmp_path):
    with pytest.raises(SystemExit) as info:
        main(["a.ini", "--command", "nope"])
    assert info.value.code == 1


def test_command_override(tmp_path):
    cfg = _write(tmp_path, "[run]\ncommand = sweep\n[cover]\nradius = 0.3\nn_points = 60\n")
    assert main([str(cfg), "--command", "cover", "--out", str(tmp_path / "c")]) == 0
    rep = json.loads((tmp_path / "c.json").read_text())
    assert set(rep) == {"k", "edges", "leaf_order"}
    assert len(rep["edges"]) == rep["k"] - 1


def test_cover_from_points_file(tmp_path):
    pts = tmp_path / "circle.csv"
    pts.write_text("# metric=torus\n0\n0.25\n0.5\n0.75\n")
    cfg = _write(tmp_path, f"[run]\ncommand = cover\n[cover]\npoints = {pts}\nradius = 0.3\n")
    assert run(cfg, out=str(tmp_path / "c")) == 0
    rep = json.loads((tmp_path / "c.json").read_text())
    assert rep == {"k": 2, "edges": [[0, 1]], "leaf_order": [0, 1]}
    centers = (tmp_path / "c.csv").read_text().splitlines()
    assert centers == ["ball,point_index,x0", "0,0,0.0", "1,2,0.5"]


def test_lemma1_command(tmp_path):
    cfg = _write(tmp_path, """
[run]
command = lemma1
seed = 3
[exponents]
n = 2
p = 2
q = 2
r = 2
[grid]
m = 33
periodic = false
[lemma1]
f = x
trials = 5
""")
    assert run(cfg, out=str(tmp_path / "l")) == 0
    rep = json.loads((tmp_path / "l.json").read_text())
    assert abs(rep["implied_c"] - 0.25) <= 2e-3
    assert math.isfinite(rep["empirical_c"])
    assert len((tmp_path / "l.csv").read_text().splitlines()) == 1 + 1 + 5


def test_young_command(tmp_path):
    cfg = _write(tmp_path, """
[run]
command = young
[exponents]
n = 2
p = 2
q = 2
r = 2
[grid]
m = 17
periodic = false
[young]
d = 1.4142135623730951
density = point
""")
    assert run(cfg, out=str(tmp_path / "y")) == 0
    rep = json.loads((tmp_path / "y.json").read_text())
    assert set(rep) == {"lhs", "kernel_norm", "rhs", "slack", "n", "q", "d"}
    assert rep["slack"] <= 1.05
    pot = read_field_csv(tmp_path / "y.csv")
    assert pot.grid.m == (17, 17)


def test_coarea_command(tmp_path):
    cfg = _write(tmp_path, "[run]\ncommand = coarea\n[grid]\nm = 8\n[coarea]\nwraps = 2,3\ntrials = 4\nq = 3\n")
    assert run(cfg, out=str(tmp_path / "k")) == 0
    rep = json.loads((tmp_path / "k.json").read_text())
    assert rep["fiber_size"] == 6 and rep["max_rel_error"] <= 1e-12


def test_sweep_command_rows_and_fit(tmp_path):
    cfg = _write(tmp_path, """
[run]
command = sweep
threads = 1
[exponents]
n = 2
p = 2
q = 2
r = inf
[grid]
m = 32
[sweep]
eps = 0.5, 0.25, 0.125, 0.0625
max_freq = 2
budget = 10
""")
    assert run(cfg, out=str(tmp_path / "s")) == 0
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert lines[0] == "eps,omega_q_norm,best_deficit,best_ratio,ascent_iterations,seed"
    assert len(lines) == 5
    footer = json.loads((tmp_path / "s.json").read_text())
    assert set(footer["fit"]) == {"slope", "intercept", "max_abs_residual"}


def test_json_renders_infinity(tmp_path):
    cfg = _write(tmp_path, "[run]\ncommand = ratio\n[exponents]\nn = 2\np = 3\nq = 2\nr = inf\n[grid]\nm = 16\n")
    assert run(cfg, out=str(tmp_path / "i")) == 0
    json.loads((tmp_path / "i.json").read_text())


CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


@pytest.mark.parametrize("name", ["verify", "ratio_sine", "lemma1", "young", "coarea", "cover"])
def test_shipped_configs_run(tmp_path, name):
    assert main([str(CONFIG_DIR / f"{name}.ini"), "--out", str(tmp_path / name)]) == 0
    assert (tmp_path / f"{name}.csv").stat().st_size > 0


def test_threads_env_overrides_config(tmp_path, monkeypatch):
    seen = []
    import poincare_lab.search as search

    real = search.sweep

    def spy(*args, **kwargs):
        seen.append(kwargs["workers"])
        return real(*args, **kwargs)

    monkeypatch.setattr(search, "sweep", spy)
    cfg = _write(tmp_path, """
[run]
command = sweep
threads = 3
[exponents]
n = 2
p = 2
q = 2
r = 2
[grid]
m = 16
[sweep]
eps = 0.5, 0.25, 0.125
max_freq = 2
budget = 5
""")
    assert main([str(cfg), "--out", str(tmp_path / "a")]) == 0
    monkeypatch.setenv("POINCARE_LAB_THREADS", "1")
    assert main([str(cfg), "--out", str(tmp_path / "b")]) == 0
    assert seen == [3, None]

"""Config-driven experiment runner.

Usage::

    poincare-lab CONFIG [--command NAME] [--out PREFIX]

``CONFIG`` is an INI-style ``key = value`` file with sections (see the
README for every key).  A run writes ``PREFIX.csv``, ``PREFIX.json`` and
``PREFIX.manifest.txt``.  The CSV and JSON are fully determined by the
config; wall time lives only in the manifest.

Exit status: 0 on success, 2 when the exponents violate the admissible
region (the message names the failed inequality), 1 on any other error.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from poincare_lab import __version__
from poincare_lab import calculus as calc
from poincare_lab import checks
from poincare_lab import pullback as pb
from poincare_lab import riesz
from poincare_lab import search
from poincare_lab.grid import Grid, ScalarField, field_from_function, make_grid
from poincare_lab.inequality import (
    ExponentConfig,
    HypothesisError,
    lemma1_check,
    ratio_report,
    validate_exponents,
)

COMMANDS = ("verify", "ratio", "lemma1", "young", "coarea", "cover", "sweep")


class ConfigError(ValueError):
    pass


# -- config helpers -----------------------------------------------------------


def _float(text: str) -> float:
    text = text.strip().lower()
    if text in ("inf", "infinity", "oo"):
        return math.inf
    return float(text)


def _floats(text: str) -> list[float]:
    return [_float(v) for v in text.split(",") if v.strip()]


def _ints(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def _bools(text: str) -> list[bool]:
    out = []
    for v in text.split(","):
        v = v.strip().lower()
        if v in ("true", "yes", "1", "on"):
            out.append(True)
        elif v in ("false", "no", "0", "off"):
            out.append(False)
        elif v:
            raise ConfigError(f"not a boolean: {v!r}")
    return out


def _one_or_many(values):
    return values[0] if len(values) == 1 else values


def load_config(path: str | Path) -> configparser.ConfigParser:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        cp.read(path, encoding="utf-8")
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    return cp


def _section(cp, name):
    return cp[name] if cp.has_section(name) else {}


def _exponents(cp) -> ExponentConfig:
    sec = _section(cp, "exponents")
    try:
        n = int(sec["n"])
        p, q, r = (_float(sec[k]) for k in ("p", "q", "r"))
    except KeyError as exc:
        raise ConfigError(f"[exponents] needs key {exc.args[0]!r}") from None
    return validate_exponents(n, p, q, r)


def _grid(cp, n: int, periodic_default: bool = True) -> Grid:
    sec = _section(cp, "grid")
    m = _ints(sec.get("m", "64"))
    lengths = _floats(sec.get("lengths", "1"))
    periodic = _bools(sec.get("periodic", "true" if periodic_default else "false"))
    return make_grid(n, _one_or_many(m), _one_or_many(lengths), _one_or_many(periodic))


# -- output helpers -------------------------------------------------------------


def _fmt(v) -> str:
    if isinstance(v, np.generic):
        v = v.item()
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _json_text(obj) -> str:
    def clean(v):
        if isinstance(v, float) and not math.isfinite(v):
            return "inf" if v > 0 else ("-inf" if v < 0 else "nan")
        if isinstance(v, dict):
            return {k: clean(x) for k, x in v.items()}
        if isinstance(v, (list, tuple)):
            return [clean(x) for x in v]
        if isinstance(v, np.generic):
            return clean(v.item())
        return v

    return json.dumps(clean(obj), indent=2, sort_keys=True) + "\n"


# -- presets --------------------------------------------------------------------


def _density_preset(kind: str, grid: Grid, sec, rng) -> calc.Density:
    if kind == "uniform":
        return search.uniform_density(grid)
    if kind == "bump":
        eps = float(sec.get("eps", "0.25"))
        center = _floats(sec["center"]) if "center" in sec else [L / 2 for L in grid.lengths]
        return search.bump_density(grid, search.BumpSpec(tuple(center), eps))
    if kind == "point":
        return calc.point_mass(grid, tuple(m // 2 for m in grid.m))
    if kind == "random":
        return calc.normalize_density(ScalarField(grid, np.exp(rng.standard_normal(grid.shape))))
    raise ConfigError(f"unknown density preset {kind!r}")


def _box_trial_function(grid: Grid, rng) -> ScalarField:
    # smooth random function on a box: low-order trig terms with random phases
    coef = rng.standard_normal((3, grid.n))
    phase = rng.uniform(0, 2 * np.pi, (3, grid.n))

    def sampler(*xs):
        out = 0.0
        for j in range(3):
            for i, x in enumerate(xs):
                out = out + coef[j, i] * np.sin((j + 1) * np.pi * x / grid.lengths[i] + phase[j, i])
        return out

    return field_from_function(grid, sampler)


# -- commands -------------------------------------------------------------------


def cmd_verify(cp, seed):
    results = checks.run_checks()
    rows = [(name, "pass" if ok else "fail", detail) for name, ok, detail in results]
    passed = sum(ok for _, ok, _ in results)
    for name, status, detail in rows:
        print(f"{status.upper():4s} {name}" + (f"  {detail}" if detail else ""))
    print(f"{passed} passed, {len(results) - passed} failed")
    summary = {"passed": passed, "failed": len(results) - passed, "total": len(results)}
    return _csv_text(("check", "status", "detail"), rows), summary, passed == len(results)


def cmd_ratio(cp, seed):
    cfg = _exponents(cp)
    grid = _grid(cp, cfg.n)
    sec = _section(cp, "ratio")
    rng = np.random.default_rng(seed)
    f_kind = sec.get("f", "sin")
    if f_kind == "sin":
        f = field_from_function(grid, lambda *xs: np.sin(2 * np.pi * xs[0] / grid.lengths[0]))
    elif f_kind == "random":
        f = search.random_field(grid, int(sec.get("max_freq", "4")), seed)
    else:
        raise ConfigError(f"unknown f preset {f_kind!r}")
    omega = _density_preset(sec.get("omega", "uniform"), grid, sec, rng)
    rep = ratio_report(f, omega, cfg)
    keys = ("deficit", "omega_q_norm", "grad_p_norm", "alpha", "ratio")
    print(f"ratio = {rep['ratio']!r}")
    return _csv_text(keys, [[rep[k] for k in keys]]), rep, True


def cmd_lemma1(cp, seed):
    cfg = _exponents(cp)
    grid = _grid(cp, cfg.n, periodic_default=False)
    sec = _section(cp, "lemma1")
    rng = np.random.default_rng(seed)
    f_kind = sec.get("f", "x")
    if f_kind == "x":
        f = field_from_function(grid, lambda *xs: xs[0])
    elif f_kind == "random":
        f = _box_trial_function(grid, rng)
    else:
        raise ConfigError(f"unknown f preset {f_kind!r}")
    omega = _density_preset(sec.get("omega", "uniform"), grid, sec, rng)
    main = lemma1_check(f, omega, cfg)

    rows = [("preset", main.lhs, main.rhs_core, main.implied_c)]
    for i in range(int(sec.get("trials", "0"))):
        rep = lemma1_check(
            _box_trial_function(grid, rng), _density_preset("random", grid, sec, rng), cfg
        )
        rows.append((f"trial{i}", rep.lhs, rep.rhs_core, rep.implied_c))
    out = main.to_dict()
    out["empirical_c"] = max(r[3] for r in rows)
    print(f"implied_c = {main.implied_c!r}, empirical max = {out['empirical_c']!r}")
    return _csv_text(("case", "lhs", "rhs_core", "implied_c"), rows), out, True


def cmd_young(cp, seed):
    cfg = _exponents(cp)
    grid = _grid(cp, cfg.n, periodic_default=False)
    sec = _section(cp, "young")
    rng = np.random.default_rng(seed)
    d = float(sec["d"]) if "d" in sec else grid.diameter
    spec = riesz.RieszKernelSpec(cfg.n, d)
    omega = _density_preset(sec.get("density", "uniform"), grid, sec, rng)
    rep = riesz.young_check(omega, cfg.q, spec)
    pot = riesz.riesz_potential(omega, spec)
    print(f"slack = {rep.slack!r}")
    text = grid.header() + "\n" + "".join(repr(float(v)) + "\n" for v in pot.flat)
    return text, rep.to_dict(), True


def cmd_coarea(cp, seed):
    sec = _section(cp, "coarea")
    gsec = _section(cp, "grid")
    wraps = _ints(sec.get("wraps", "2"))
    n = len(wraps)
    target = make_grid(n, _one_or_many(_ints(gsec.get("m", "16"))), 1.0, True)
    spec = pb.covering_map(target, wraps)
    q = _float(sec.get("q", "2"))
    rng = np.random.default_rng(seed)
    rows = []
    worst = 0.0
    for i in range(int(sec.get("trials", "20"))):
        h = ScalarField(spec.source, rng.random(spec.source.shape))
        f = ScalarField(target, rng.standard_normal(target.shape))
        omega = _density_preset("random", target, sec, rng)
        c = pb.coarea_check(h, spec)
        m = pb.pullback_mean_check(f, omega, spec)
        lq = pb.pullback_lq_check(omega, q, spec)
        expected = spec.fiber_size ** (1 / q - 1)
        errs = (
            abs(c[0] - c[1]) / abs(c[0]),
            abs(m[0] - m[1]) / max(abs(m[1]), float(np.max(np.abs(f.values)))),
            abs(lq[0] / lq[1] - expected) / expected,
        )
        worst = max(worst, *errs)
        rows.append((i, c[0], c[1], m[0], m[1], lq[0] / lq[1], expected))
    header = ("trial", "coarea_lhs", "coarea_rhs", "mean_lifted", "mean_base", "lq_ratio", "lq_expected")
    summary = {"wraps": wraps, "fiber_size": spec.fiber_size, "q": q, "max_rel_error": worst}
    print(f"max relative error = {worst!r}")
    return _csv_text(header, rows), summary, True


def cmd_cover(cp, seed):
    sec = _section(cp, "cover")
    radius = float(sec.get("radius", "0.2"))
    if "points" in sec:
        pts, metric = pb.read_points_csv(sec["points"])
    else:
        rng = np.random.default_rng(seed)
        pts = rng.random((int(sec.get("n_points", "500")), int(sec.get("dim", "2"))))
        metric = sec.get("metric", "torus")
    cover = pb.ball_cover(pts, radius, metric)
    report = pb.spanning_tree(pb.incidence_graph(cover))
    pb.check_tree(report)
    rows = [(j, c, *pts[c]) for j, c in enumerate(cover.centers)]
    header = ("ball", "point_index") + tuple(f"x{i}" for i in range(pts.shape[1]))
    print(f"K = {report.k} balls, {len(report.edges)} tree edges")
    return _csv_text(header, rows), report.to_dict(), True


def cmd_sweep(cp, seed):
    cfg = _exponents(cp)
    grid = _grid(cp, cfg.n)
    sec = _section(cp, "sweep")
    eps = _floats(sec.get("eps", "0.5,0.25,0.125,0.0625,0.03125"))
    center = _floats(sec["center"]) if "center" in sec else None
    # the environment variable wins over the config key
    workers = None
    if not os.environ.get(search.THREADS_ENV):
        workers = int(_section(cp, "run").get("threads", "0")) or None
    records = search.sweep(
        cfg,
        grid,
        eps,
        max_freq=int(sec.get("max_freq", "4")),
        budget=int(sec.get("budget", "200")),
        seed=seed,
        center=center,
        workers=workers,
    )
    rows = [[getattr(r, k) for k in search.SWEEP_COLUMNS] for r in records]
    footer = {"alpha": cfg.alpha, "records": len(records)}
    if len(records) >= 3:
        fit = search.fit_loglog(records, "omega_q_norm", "best_deficit")
        footer["fit"] = fit.to_dict()
        print(f"slope = {fit.slope!r} (alpha = {cfg.alpha!r})")
    return _csv_text(search.SWEEP_COLUMNS, rows), footer, True


HANDLERS = {
    "verify": cmd_verify,
    "ratio": cmd_ratio,
    "lemma1": cmd_lemma1,
    "young": cmd_young,
    "coarea": cmd_coarea,
    "cover": cmd_cover,
    "sweep": cmd_sweep,
}


def run(config_path: str | Path, command: str | None = None, out: str | None = None) -> int:
    """Execute one experiment; returns the process exit status."""
    started = time.perf_counter()
    try:
        cp = load_config(config_path)
        run_sec = _section(cp, "run")
        command = command or run_sec.get("command")
        if command not in HANDLERS:
            raise ConfigError(f"unknown command {command!r}; expected one of {COMMANDS}")
        seed = int(run_sec.get("seed", "0"))
        prefix = Path(out or run_sec.get("out", f"results/{command}"))
        csv_text, payload, ok = HANDLERS[command](cp, seed)
    except HypothesisError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - one exit path for runtime errors
        print(f"error: {exc}", file=sys.stderr)
        return 1

    prefix.parent.mkdir(parents=True, exist_ok=True)
    Path(f"{prefix}.csv").write_text(csv_text, encoding="utf-8")
    Path(f"{prefix}.json").write_text(_json_text(payload), encoding="utf-8")
    echo = io.StringIO()
    cp.write(echo)
    manifest = [
        f"poincare_lab {__version__}",
        f"command = {command}",
        f"config = {config_path}",
        f"wall_time_s = {time.perf_counter() - started:.3f}",
        "",
        echo.getvalue().rstrip(),
        "",
    ]
    Path(f"{prefix}.manifest.txt").write_text("\n".join(manifest), encoding="utf-8")
    return 0 if ok else 1


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        # exit code 2 is reserved for hypothesis violations
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def main(argv=None) -> int:
    parser = _Parser(prog="poincare-lab", description=__doc__.split("\n\n")[0])
    parser.add_argument("config", help="experiment config file")
    parser.add_argument("--command", choices=COMMANDS, help="override [run] command")
    parser.add_argument("--out", help="output path prefix")
    args = parser.parse_args(argv)
    return run(args.config, args.command, args.out)


if __name__ == "__main__":
    sys.exit(main())

"""Built-in invariant suite run by the ``verify`` command.

Each check is a small, fast, deterministic function that raises
``AssertionError`` on failure.  Grids are kept tiny so the whole suite
finishes in a few seconds.
"""

from __future__ import annotations

import math
import traceback
from typing import Callable

import numpy as np

from poincare_lab import calculus as calc
from poincare_lab import inequality as ineq
from poincare_lab import pullback as pb
from poincare_lab import riesz
from poincare_lab import search
from poincare_lab.grid import ScalarField, field_from_function, make_grid

CHECKS: list[tuple[str, Callable[[], None]]] = []


def check(fn):
    CHECKS.append((fn.__name__.removeprefix("check_"), fn))
    return fn


def _close(a, b, rel=1e-12, abs_=0.0):
    assert abs(a - b) <= max(rel * max(abs(a), abs(b)), abs_), f"{a!r} != {b!r}"


def _random_density(grid, rng):
    return calc.normalize_density(ScalarField(grid, np.exp(rng.standard_normal(grid.shape))))


@check
def check_periodic_nodes_half_open():
    g = make_grid(1, 4, 1.0, True)
    assert g.axis_coords(0).max() < 1.0
    b = make_grid(1, 5, 1.0, False)
    assert b.axis_coords(0)[0] == 0.0 and b.axis_coords(0)[-1] == 1.0


@check
def check_weights_sum_to_volume():
    for g in (make_grid(2, [5, 7], [1.0, 2.0], False), make_grid(3, 6, [1.0, 0.5, 2.0], True)):
        _close(float(np.sum(calc.quadrature_weights(g))), g.volume)


@check
def check_norm_monotone_on_unit_volume():
    rng = np.random.default_rng(0)
    g = make_grid(2, 16)
    f = ScalarField(g, rng.standard_normal(g.shape))
    norms = [calc.lp_norm(f, p) for p in (1, 1.5, 2, 3, 7, math.inf)]
    assert all(a <= b * (1 + 1e-12) for a, b in zip(norms, norms[1:])), norms


@check
def check_weighted_mean_bounds_and_linearity():
    rng = np.random.default_rng(1)
    g = make_grid(2, 12)
    for _ in range(10):
        f = ScalarField(g, rng.standard_normal(g.shape))
        om = _random_density(g, rng)
        m = calc.weighted_mean(f, om)
        assert f.values.min() <= m <= f.values.max()
        _close(calc.weighted_mean(3 * f + 2, om), 3 * m + 2, rel=1e-12, abs_=1e-12)


@check
def check_gradient_exact_on_affine():
    g = make_grid(2, [5, 6], [1.0, 2.0], False)
    f = field_from_function(g, lambda x, y: 2 * x - 3 * y + 1)
    comp = calc.gradient(f).components
    assert np.allclose(comp[0], 2, atol=1e-12) and np.allclose(comp[1], -3, atol=1e-12)


@check
def check_gradient_second_order():
    errs = []
    for m in (64, 128):
        g = make_grid(1, m)
        f = field_from_function(g, lambda x: np.sin(2 * np.pi * x))
        exact = 2 * np.pi * np.cos(2 * np.pi * g.axis_coords(0))
        errs.append(np.max(np.abs(calc.gradient(f).components[0] - exact)))
    order = math.log2(errs[0] / errs[1])
    assert 1.8 <= order <= 2.2, order


@check
def check_hypothesis_boundaries():
    ineq.validate_exponents(3, 1.5, 2, 2)  # p = n/(n-1)
    ineq.validate_exponents(3, 2, 2, 6)  # 1/r = 1/p - 1/n
    try:
        ineq.validate_exponents(3, 2, 1.5, 2)  # q = n/2
    except ineq.HypothesisError as exc:
        assert exc.code == "q_too_small"
    else:
        raise AssertionError("q = n/2 accepted")


@check
def check_alpha_times_t():
    for n, p in ((2, 2.0), (2, 3.5), (3, 1.5), (3, 4.0)):
        cfg = ineq.validate_exponents(n, p, n, math.inf if p >= n else n * p / (n - p))
        _close(cfg.alpha * cfg.t, 1.0)


@check
def check_ratio_affine_invariance():
    rng = np.random.default_rng(2)
    g = make_grid(2, 16)
    cfg = ineq.validate_exponents(2, 2.5, 3, 4)
    f = search.random_field(g, 3, 5)
    om = _random_density(g, rng)
    base = ineq.ratio(f, om, cfg)
    for a, b in ((-3, -1), (0.5, 4), (7, 0)):
        _close(ineq.ratio(a * f + b, om, cfg), base)


@check
def check_deficit_coarse_bound():
    rng = np.random.default_rng(3)
    g = make_grid(2, 16)
    f = search.random_field(g, 2, 1)
    om = _random_density(g, rng)
    for r in (1.5, 2, math.inf):
        vol_term = 1.0 if math.isinf(r) else g.volume ** (1 / r)
        bound = 2 * calc.lp_norm(f - calc.mean(f), math.inf) * vol_term
        assert ineq.deficit(f, om, r) <= bound


@check
def check_riesz_positive_and_monotone():
    # the potential is linear, so compare unnormalized masses c * omega
    rng = np.random.default_rng(4)
    g = make_grid(2, 9, 1.0, False)
    spec = riesz.RieszKernelSpec(2, g.diameter)
    v1 = rng.random(g.shape)
    v2 = v1 + rng.random(g.shape)
    lifted = []
    for v in (v1, v2):
        field = ScalarField(g, v)
        pot = riesz.riesz_potential(calc.normalize_density(field), spec)
        assert np.all(pot.values >= 0)
        lifted.append(pot.values * calc.integral(field))
    assert np.all(lifted[0] <= lifted[1] * (1 + 1e-12))


@check
def check_kernel_norm_blows_up():
    spec = riesz.RieszKernelSpec(2, 1.0)
    vals = [riesz.kernel_lr_norm(spec, 2 - 10.0**-k) for k in range(1, 5)]
    assert all(a < b for a, b in zip(vals, vals[1:])), vals


@check
def check_young_slack():
    rng = np.random.default_rng(5)
    g = make_grid(2, 17, 1.0, False)
    spec = riesz.RieszKernelSpec(2, math.sqrt(2))
    for om in (_random_density(g, rng), calc.point_mass(g, (8, 8))):
        assert riesz.young_check(om, 2, spec).slack <= 1.05


@check
def check_coarea_and_pullback_identities():
    rng = np.random.default_rng(6)
    tgt = make_grid(2, 8)
    spec = pb.covering_map(tgt, (2, 3))
    h = ScalarField(spec.source, rng.random(spec.source.shape))
    lhs, rhs = pb.coarea_check(h, spec)
    _close(lhs, rhs)
    f = ScalarField(tgt, rng.standard_normal(tgt.shape))
    om = _random_density(tgt, rng)
    a, b = pb.pullback_mean_check(f, om, spec)
    _close(a, b, abs_=1e-14)
    up, down = pb.pullback_lq_check(om, 3, spec)
    _close(up / down, 6 ** (1 / 3 - 1))
    _close(calc.integral(pb.pullback_density(om, spec).base), 1.0)


@check
def check_cover_and_tree():
    rng = np.random.default_rng(7)
    cover = pb.ball_cover(rng.random((200, 2)), 0.25, "torus")
    cover.validate()
    report = pb.spanning_tree(pb.incidence_graph(cover))
    pb.check_tree(report)


@check
def check_bump_scaling():
    g = make_grid(2, 64)
    norms = [calc.lp_norm(search.bump_density(g, search.BumpSpec((0.5, 0.5), e)), 2)
             for e in (0.25, 0.125)]
    assert abs(norms[1] / norms[0] - 2) <= 0.1


@check
def check_fit_exact_power_law():
    recs = [{"x": x, "y": x**0.5} for x in (1.0, 10.0, 100.0)]
    fit = search.fit_loglog(recs, "x", "y")
    _close(fit.slope, 0.5, abs_=1e-12)


@check
def check_ascent_trace_monotone():
    g = make_grid(2, 16)
    cfg = ineq.validate_exponents(2, 2, 2, 2)
    om = search.bump_density(g, search.BumpSpec((0.5, 0.5), 0.25))
    _, trace = search.maximize_deficit(om, cfg, 2, 30, 0)
    assert all(a <= b for a, b in zip(trace, trace[1:]))


def run_checks() -> list[tuple[str, bool, str]]:
    results = []
    for name, fn in CHECKS:
        try:
            fn()
        except Exception as exc:  # noqa: BLE001 - report every failure
            detail = "".join(traceback.format_exception_only(type(exc), exc)).strip()
            results.append((name, False, detail))
        else:
            results.append((name, True, ""))
    return results

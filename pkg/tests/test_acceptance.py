"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -s`` or
``python3 tests/test_acceptance.py``.
"""

import math
import sys
import time

import numpy as np
import pytest

from oracles import LINE_LEVEL, PREDICTED_LMIN, brute_force_interval_matrices, brute_force_page_matrices, poschl_teller_bottom
from openbook.catalog import interval_graph, loop_line_graph, real_line_graph, square_book, star_book, star_graph, torus_book, triangle_graph
from openbook.discretization import assemble_graph_operators, average_transverse, discretize
from openbook.experiments import (
    WidthProblem,
    book_ground_state,
    check_sweep,
    decay_fit,
    detect_lmin,
    large_width_bound_check,
    omega_monotonicity_scan,
    sweep_widths,
    trial_function,
)
from openbook.functionals import Params, evaluate, lumped_power, nehari_project
from openbook.solvers import best_report, graph_ground_state, linearized_smallest_eig, spectral_bottom
from openbook.topology import Attachment, Binding, Book, Page, rescaled_product_book, truncate_book

TOL = 1e-8
P3 = Params(1.0, 3.0)


def verdict(capsys, number, title, ok, detail, elapsed, limit):
    fast = elapsed < limit
    line = (
        f"criterion {number} [{'PASS' if ok and fast else 'FAIL'}] {title}: {detail} "
        f"({elapsed:.1f} s, limit {limit:g} s)"
    )
    with capsys.disabled():
        print("\n" + line)
    assert ok, line
    assert fast, line


class Timer:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0


def test_criterion_1_nehari_projection(capsys):
    with Timer() as t:
        ops = discretize(truncate_book(star_book(3, 1.0), 2.0), 0.1)
        params = Params(1.0, 3.0, 1.7)
        rng = np.random.default_rng(2024)
        worst_nehari = worst_scale = 0.0
        for _ in range(50):
            u = rng.standard_normal(ops.n)
            v = nehari_project(u, ops, params)
            rep = evaluate(v, ops, params)
            worst_nehari = max(worst_nehari, abs(rep.nehari) / rep.np1)
            for s in (0.5, 2.0, 10.0):
                w = nehari_project(s * u, ops, params)
                worst_scale = max(worst_scale, np.max(np.abs(w - v)) / np.max(np.abs(v)))
    ok = worst_nehari < 1e-10 and worst_scale < 1e-12
    verdict(capsys, 1, "Nehari projection", ok,
            f"max |I|/np1 = {worst_nehari:.1e} (< 1e-10), max scale defect = {worst_scale:.1e} (< 1e-12)", t.elapsed, 5)


def test_criterion_2_spectral_bottom(capsys):
    with Timer() as t:
        torus = spectral_bottom(discretize(torus_book(), 0.05), 1)[0][0]
        tri = spectral_bottom(assemble_graph_operators(triangle_graph(), 0.01), 1)[0][0]
        lam2 = spectral_bottom(assemble_graph_operators(interval_graph(1.0), 1e-3), 2)[0][1]
    rel = abs(lam2 - math.pi**2) / math.pi**2
    ok = abs(torus) < 1e-8 and abs(tri) < 1e-8 and rel < 1e-2
    verdict(capsys, 2, "spectral bottom", ok,
            f"torus {torus:.1e}, 3-edge graph {tri:.1e}, interval lam2 = {lam2:.6f} (rel err {rel:.1e})", t.elapsed, 10)


def test_criterion_3_line_soliton_level(capsys):
    with Timer() as t:
        ops = assemble_graph_operators(loop_line_graph(40.0), 0.01)
        _, reps = graph_ground_state(ops, P3, tol=TOL)
        best = best_report(reps, TOL)
    rel = abs(best.level - LINE_LEVEL) / LINE_LEVEL
    ok = best.converged and rel < 1e-2
    verdict(capsys, 3, "line-soliton level", ok, f"level {best.level:.8f} vs 4/3 (rel err {rel:.1e})", t.elapsed, 30)


@pytest.fixture(scope="module")
def transition():
    t0 = time.perf_counter()
    graph = loop_line_graph(40.0)
    problem = WidthProblem(graph, 1.0, 3.0, 0.1, max_width=3.0, tol=TOL)
    records = sweep_widths(graph, P3, [0.5, 1.0, 1.5, 2.0, 2.5, 3.0], 0.1, TOL, seeds=(0,), problem=problem)
    lmin = detect_lmin(graph, P3, (1.5, 2.5), 0.1, TOL, problem=problem)
    lam_fd = poschl_teller_bottom()
    lam_fe = linearized_smallest_eig(problem.v0, problem.g_ops, P3)
    return {
        "records": records, "lmin": lmin, "lam_fd": lam_fd, "lam_fe": lam_fe,
        "elapsed": time.perf_counter() - t0,
    }


def test_criterion_4_plateau_and_transition(capsys, transition):
    recs = transition["records"]
    level0 = recs[0].level
    plateau = recs[1:4]
    above = recs[4:]
    lmin = transition["lmin"]
    checks = {
        "plateau within 1%": all(abs(r.level - level0) <= 1e-2 * level0 for r in plateau),
        "plateau fraction < 1e-6": all(r.transverse_fraction < 1e-6 for r in plateau),
        "strictly decreasing above": all(b.level < a.level for a, b in zip(above, above[1:])) and above[0].level < level0,
        "fraction > 1e-3 above": all(r.transverse_fraction > 1e-3 for r in above),
        "L_min within 5%": abs(lmin.estimate - PREDICTED_LMIN) <= 0.05 * PREDICTED_LMIN,
        "oracle eigenvalue -3": abs(transition["lam_fd"] + 3.0) < 1e-2 and abs(transition["lam_fe"] + 3.0) < 1e-2,
        "cross-check": lmin.cross_check,
    }
    failed = [k for k, v in checks.items() if not v]
    detail = (
        f"L_min = {lmin.estimate:.4f} in [{lmin.bracket[0]:.4f}, {lmin.bracket[1]:.4f}] vs pi/sqrt(3) = "
        f"{PREDICTED_LMIN:.4f}; lam1 FD {transition['lam_fd']:.5f}, FE {transition['lam_fe']:.5f}; "
        f"levels {[round(r.level, 6) for r in recs]}" + (f"; failed: {failed}" if failed else "")
    )
    verdict(capsys, 4, "plateau and transition", not failed, detail, transition["elapsed"], 600)


def test_criterion_5_monotonicity(capsys, transition):
    with Timer() as t:
        line_rows = omega_monotonicity_scan(real_line_graph(), 3.0, [0.25, 1.0, 4.0], 0.02, TOL, seeds=(0,))
        book_rows = omega_monotonicity_scan(square_book(), 3.0, [0.25, 1.0, 4.0], 0.05, TOL, seeds=(0,))
    sweep = check_sweep(transition["records"], TOL)
    ok = all(r["increasing"] for r in line_rows + book_rows) and sweep["nonincreasing"] and sweep["below_plateau"]
    detail = (
        f"line {[round(r['level'], 6) for r in line_rows]}, square {[round(r['level'], 6) for r in book_rows]}, "
        f"sweep {sweep}"
    )
    verdict(capsys, 5, "monotonicity suites", ok, detail, t.elapsed, 300)


def test_criterion_6_decay(capsys):
    with Timer() as t:
        levels, fits = [], None
        for T in (30.0, 60.0):
            ops = discretize(truncate_book(star_book(3, 1.0), T), 0.1)
            u, reps = book_ground_state(ops, P3, tol=TOL, seeds=(0,))
            levels.append(best_report(reps, TOL).level)
            if fits is None:
                fits = [decay_fit(u, ops, page, P3) for page in ("e0", "e1", "e2")]
    shift = abs(levels[1] - levels[0])
    ok = all(f.rate >= f.bound - 0.02 for f in fits) and shift < 1e-8
    detail = f"rates {[round(f.rate, 4) for f in fits]} (bound 0.5), level shift on doubling T = {shift:.1e}"
    verdict(capsys, 6, "decay", ok, detail, t.elapsed, 300)


def test_criterion_7_large_width(capsys):
    with Timer() as t:
        graph = loop_line_graph(40.0)
        rep = large_width_bound_check(graph, P3, [10.0, 20.0, 40.0], 0.25, TOL, seeds=(0,))
        # direct evaluation of the trial function on the same mesh
        problem = WidthProblem(graph, 1.0, 3.0, 0.25, max_width=40.0, tol=TOL)
        consts = []
        for row in rep.rows:
            tf = trial_function(problem.v0, problem.ops, row["L"], 3.0)
            consts.append(P3.c_p * lumped_power(tf, problem.ops, 3.0) * math.sqrt(row["L"]))
    ratios = [row["scaled"] / c for row, c in zip(rep.rows, consts)]
    ok = (
        rep.decreasing
        and rep.rows[0]["level"] < rep.level0
        and all(1 / 3 <= r <= 3 for r in ratios)
        and rep.below_trial_level
    )
    detail = (
        f"levels {[round(r['level'], 5) for r in rep.rows]}, level*sqrt(L) {[round(r['scaled'], 4) for r in rep.rows]}, "
        f"trial constants {[round(c, 4) for c in consts]}, ratios {[round(r, 3) for r in ratios]}"
    )
    verdict(capsys, 7, "large-width bound", ok, detail, t.elapsed, 600)


def _small_meshes():
    star = Book(
        pages=tuple(Page(f"p{k}", 1.5, 0.5) for k in range(3)),
        bindings=(Binding("hub", 0.5),) + tuple(Binding(f"{s}{k}", 1.5 if s in "SN" else 0.5) for k in range(3) for s in "SNE"),
        attachments=tuple(Attachment(f"p{k}", "W", "hub") for k in range(3))
        + tuple(Attachment(f"p{k}", s, f"{s}{k}") for k in range(3) for s in "SNE"),
    )
    flipped = Book(
        pages=(Page("P", 1.0, 1.0),),
        bindings=(Binding("C", 1.0), Binding("W", 1.0), Binding("E", 1.0)),
        attachments=(Attachment("P", "S", "C"), Attachment("P", "N", "C", "reversed"),
                     Attachment("P", "W", "W"), Attachment("P", "E", "E")),
    )
    return [
        (square_book(), 1 / 3),
        (square_book(2.0, 1.0), 0.5),
        (torus_book(), 1 / 3),
        (flipped, 0.5),
        (star, 0.5),
        (truncate_book(star_book(3, 0.5), 1.0), 0.5),
    ]


def test_criterion_8_assembly_oracle(capsys):
    with Timer() as t:
        worst, cells = 0.0, []
        for book, h in _small_meshes():
            ops = discretize(book, h)
            n_cells = sum((nx - 1) * (ny - 1) for nx, ny in ops.plan.dims.values())
            cells.append(n_cells)
            K, M = brute_force_page_matrices(ops)
            worst = max(worst, np.abs(ops.K.toarray() - K).max(), np.abs(ops.M.toarray() - M).max())
        for n in (2, 5, 10):
            ops = assemble_graph_operators(interval_graph(1.0), 1.0 / (n - 1))
            K, M = brute_force_interval_matrices(n, 1.0)
            worst = max(worst, np.abs(ops.K.toarray() - K).max(), np.abs(ops.M.toarray() - M).max())
    ok = worst <= 1e-12 and max(cells) <= 9
    verdict(capsys, 8, "assembly oracle", ok, f"max entry difference {worst:.1e} on meshes with {cells} cells", t.elapsed, 1)


def test_criterion_9_averaging(capsys):
    with Timer() as t:
        meshes = [
            discretize(rescaled_product_book(loop_line_graph(3.0)), 0.25, transverse_h=0.1),
            discretize(rescaled_product_book(star_graph(3, 1.0)), 0.2, transverse_h=0.2),
            discretize(rescaled_product_book(triangle_graph()), 0.25, transverse_h=0.125),
        ]
        rng = np.random.default_rng(7)
        worst = np.zeros(3)
        q = P3.p + 1
        for k in range(50):
            ops = meshes[k % 3]
            u = rng.standard_normal(ops.n) * (1 + rng.random())
            ut = average_transverse(u, ops)
            d = u - ut
            # the Poincare constant on the unit transverse interval is 1/pi
            ratios = (
                math.pi * math.sqrt(d @ (ops.M @ d)) / math.sqrt(u @ (ops.Ky @ u)),
                math.sqrt(ut @ (ops.Kx @ ut)) / math.sqrt(u @ (ops.Kx @ u)),
                (ops.m @ np.abs(ut) ** q) ** (1 / q) / (ops.m @ np.abs(u) ** q) ** (1 / q),
            )
            worst = np.maximum(worst, ratios)
    ok = bool(np.all(worst <= 1 + 1e-6))
    detail = (
        f"largest ratios over 50 fields: pi * Poincare {worst[0]:.6f}, gradient {worst[1]:.6f}, "
        f"L^(p+1) {worst[2]:.6f} (each <= 1 + 1e-6)"
    )
    verdict(capsys, 9, "averaging estimates", ok, detail, t.elapsed, 5)


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))

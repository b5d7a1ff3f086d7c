"""Parameter sweeps and checks on graph-based and truncated books.

Widths are handled on the reference book ``graph x [0, 1]`` with the
transverse stiffness weighted by ``1 / L**2``; a single mesh serves a whole
sweep so minimizers can warm-start from one width to the next.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .catalog import loop_line_graph
from .discretization import (
    DiscreteOperators,
    assemble_graph_operators,
    average_transverse,
    discretize,
    lift_graph_field,
    node_count,
    page_grid,
)
from .functionals import Params, c_p, evaluate, lumped_power, nehari_project, quadratic_part
from .solvers import (
    SolveReport,
    best_report,
    bump_init,
    graph_ground_state,
    multi_start_ground_state,
    page_center_inits,
)
from .topology import Book, GraphSpec, graph_based_book, rescaled_product_book, truncate_graph

log = logging.getLogger(__name__)

TAU_THRESHOLD = 1e-6


def default_truncation(omega: float) -> float:
    """``(4 / sqrt(omega)) ln(1e8)``: the decay bound leaves a tail below 1e-8."""
    return 4.0 / math.sqrt(omega) * math.log(1e8)


@dataclass
class SweepRecord:
    L: float
    level: float
    transverse_fraction: float
    iterations: int
    residual: float
    converged: bool
    branches: dict = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)


class WidthProblem:
    """Shared discretization of ``graph x [0, 1]`` and its L = 0 reference.

    ``transverse_h`` defaults to ``h / max_width`` so the physical transverse
    spacing never exceeds ``h`` for widths up to ``max_width``.
    """

    def __init__(
        self,
        graph: GraphSpec,
        omega: float,
        p: float,
        h: float,
        max_width: float = 1.0,
        transverse_h: Optional[float] = None,
        T: Optional[float] = None,
        tol: float = 1e-8,
        seeds: Sequence[int] = (0, 1, 2),
    ):
        if not graph.is_compact:
            graph = truncate_graph(graph, T if T is not None else default_truncation(omega))
        self.graph = graph
        self.omega, self.p, self.h, self.tol = omega, p, h, tol
        if transverse_h is None:
            transverse_h = min(h, h / max_width)
        self.ops = discretize(rescaled_product_book(graph), h, transverse_h=transverse_h)
        self.g_ops = self.ops.product.graph_ops
        self.v0, reps = graph_ground_state(self.g_ops, Params(omega, p), tol=tol, seeds=seeds)
        self.graph_reports = reps
        self.lift = lift_graph_field(self.v0, self.ops)
        best = best_report(reps, tol)
        self.reference = SweepRecord(
            0.0, best.level, 0.0, best.iterations, best.equation_residual, best.converged,
            {r.init: r.level for r in reps},
        )

    @property
    def level0(self) -> float:
        return self.reference.level

    def params(self, L: float) -> Params:
        return Params(self.omega, self.p, L)

    def solve(
        self,
        L: float,
        warm: Sequence[tuple[str, np.ndarray]] = (),
        seeds: Sequence[int] = (),
        max_iter: int = 5000,
        ridge_eps: float = 0.1,
    ) -> tuple[np.ndarray, SweepRecord]:
        u, reps = multi_start_ground_state(
            self.ops, self.params(L), seeds=seeds, tol=self.tol, base=self.lift, inits=warm,
            max_iter=max_iter, ridge_eps=ridge_eps, require_converged=False,
        )
        best = best_report(reps, self.tol)
        rec = SweepRecord(
            L, best.level, best.transverse_fraction, best.iterations, best.equation_residual, best.converged,
            {r.init: r.level for r in reps},
        )
        return u, rec


def sweep_widths(
    graph: GraphSpec,
    params: Params,
    widths: Sequence[float],
    h: float,
    tol: float = 1e-8,
    seeds: Sequence[int] = (0,),
    transverse_h: Optional[float] = None,
    T: Optional[float] = None,
    max_iter: int = 5000,
    problem: Optional[WidthProblem] = None,
) -> list[SweepRecord]:
    """Best level over several starts at each width.

    The first record is the L = 0 reference computed on the graph itself;
    the rest follow ``widths`` in order.  Each width starts from the lift,
    the ridge-perturbed lift, the previous width's minimizer and
    ``random(seed)`` fields.
    """
    widths = [float(L) for L in widths]
    if any(L <= 0 for L in widths):
        raise ValueError("widths must be positive")
    if widths != sorted(widths):
        raise ValueError("widths must be ascending")
    if problem is None:
        problem = WidthProblem(graph, params.omega, params.p, h, max(widths), transverse_h, T, tol)
    records = [problem.reference]
    prev = None
    for L in widths:
        warm = [("warm", prev)] if prev is not None else []
        u, rec = problem.solve(L, warm=warm, seeds=seeds, max_iter=max_iter)
        records.append(rec)
        prev = u
        log.info("L=%.6g level=%.12g tau=%.3e conv=%s", L, rec.level, rec.transverse_fraction, rec.converged)
    return records


def check_sweep(records: Sequence[SweepRecord], tol: float = 1e-8) -> dict:
    """Monotonicity findings for a sweep (first record is L = 0)."""
    level0 = records[0].level
    slack = 2 * tol * max(1.0, abs(level0))
    nonincreasing = all(b.level <= a.level + slack for a, b in zip(records, records[1:]))
    below_plateau = all(r.level <= level0 + slack for r in records)
    return {"nonincreasing": nonincreasing, "below_plateau": below_plateau}


@dataclass
class LminResult:
    estimate: float
    bracket: tuple[float, float]
    level0: float
    evidence: list[SweepRecord]
    cross_check: bool
    tau_threshold: float

    def to_dict(self):
        return {
            "L_min": self.estimate,
            "bracket": list(self.bracket),
            "level0": self.level0,
            "cross_check": self.cross_check,
            "tau_threshold": self.tau_threshold,
            "evidence": [r.to_dict() for r in self.evidence],
        }


class BracketError(ValueError):
    pass


def detect_lmin(
    graph: GraphSpec,
    params: Params,
    bracket: tuple[float, float],
    h: float,
    tol: float = 1e-8,
    tau_threshold: float = TAU_THRESHOLD,
    tol_L: float = 0.02,
    transverse_h: Optional[float] = None,
    T: Optional[float] = None,
    max_iter: int = 4000,
    problem: Optional[WidthProblem] = None,
) -> LminResult:
    """Bisect on "the best minimizer has transverse fraction above tau".

    Near the transition the descent slows down, so every start is capped at
    ``max_iter`` and the lowest level wins whether or not it converged.
    """
    lo, hi = map(float, bracket)
    if not 0 < lo < hi:
        raise BracketError(f"bad bracket {bracket}")
    if problem is None:
        problem = WidthProblem(graph, params.omega, params.p, h, hi, transverse_h, T, tol)
    evidence: list[SweepRecord] = []
    warm_2d: dict[float, np.ndarray] = {}

    def probe(L):
        # warm-start from the closest wider width already known to be 2D
        above = sorted(k for k in warm_2d if k > L)
        warm = [("warm", warm_2d[above[0]])] if above else []
        u, rec = problem.solve(L, warm=warm, max_iter=max_iter)
        evidence.append(rec)
        is_2d = rec.transverse_fraction > tau_threshold
        if is_2d:
            warm_2d[L] = u
        return is_2d

    if probe(hi) is not True:
        raise BracketError(f"transverse fraction at L={hi} does not exceed {tau_threshold}")
    if probe(lo) is not False:
        raise BracketError(f"transverse fraction at L={lo} already exceeds {tau_threshold}")
    while hi - lo > tol_L:
        mid = 0.5 * (lo + hi)
        if probe(mid):
            hi = mid
        else:
            lo = mid
    hi_rec = next(r for r in reversed(evidence) if r.L == hi)
    cross = hi_rec.level < problem.level0 - 2 * tol * max(1.0, abs(problem.level0))
    evidence.sort(key=lambda r: r.L)
    return LminResult(0.5 * (lo + hi), (lo, hi), problem.level0, evidence, cross, tau_threshold)


def _operators_for(target, h, T=None, omega=1.0):
    if isinstance(target, DiscreteOperators):
        return target
    if isinstance(target, GraphSpec):
        g = target if target.is_compact else truncate_graph(target, T if T is not None else default_truncation(omega))
        return assemble_graph_operators(g, h)
    from .topology import truncate_book

    book = target if target.is_compact else truncate_book(target, T if T is not None else default_truncation(omega))
    return discretize(book, h)


def generic_inits(ops: DiscreteOperators, omega: float) -> list[tuple[str, np.ndarray]]:
    """Constant field, plus a bump at each page centre (books) or at node 0 (graphs)."""
    inits = [("constant", np.ones(ops.n))]
    if ops.book is not None:
        inits.extend(page_center_inits(ops, omega))
    else:
        inits.append(("bump:0", bump_init(ops, 0, omega)))
    return inits


def book_ground_state(ops: DiscreteOperators, params: Params, tol: float = 1e-8, seeds=(0, 1), max_iter=5000):
    """Multi-start ground state on a book or graph mesh with generic starts.

    The lowest run is returned even when it did not converge; check the
    reports.  On a truncated star the escaped soliton sits in a nearly flat
    valley and can stall just above the tolerance.
    """
    base = None
    if ops.product is not None and params.L is None:
        v, _ = graph_ground_state(
            ops.product.graph_ops, params, tol=tol, seeds=seeds, max_iter=max_iter, require_converged=False
        )
        base = lift_graph_field(v, ops)
    return multi_start_ground_state(
        ops, params, seeds=seeds, tol=tol, base=base, inits=generic_inits(ops, params.omega), max_iter=max_iter,
        require_converged=False,
    )


def omega_monotonicity_scan(
    target: Union[Book, GraphSpec, DiscreteOperators],
    p: float,
    omegas: Sequence[float],
    h: float,
    tol: float = 1e-8,
    seeds: Sequence[int] = (0, 1),
    T: Optional[float] = None,
) -> list[dict]:
    """Ground-state level for each omega; ``increasing`` flags each step.

    A failed strict increase is a finding, reported in the table, not an error.
    """
    omegas = [float(w) for w in omegas]
    if omegas != sorted(omegas):
        raise ValueError("omegas must be ascending")
    # omega <= 0 is left to the solver's spectral-bottom guard
    positive = [w for w in omegas if w > 0]
    # the slowest decay (smallest omega) sets the default truncation
    ops = _operators_for(target, h, T, positive[0] if positive else 1.0)
    rows = []
    for w in omegas:
        _, reps = book_ground_state(ops, Params(w, p), tol=tol, seeds=seeds)
        best = best_report(reps, tol)
        ok = True
        if rows:
            ok = best.level > rows[-1]["level"] + 2 * tol * max(1.0, abs(best.level))
        rows.append({"omega": w, "level": best.level, "converged": best.converged, "increasing": ok})
    return rows


@dataclass
class DecayFit:
    page: str
    axis: str
    window: tuple[float, float]
    rate: float
    bound: float
    margin: float

    def to_dict(self):
        return asdict(self)


class DecayFitError(ValueError):
    pass


FLOOR = 1e-14


def decay_fit(
    u: np.ndarray,
    ops: DiscreteOperators,
    page_id: str,
    params: Params,
    axis: Optional[str] = None,
    core_margin: Optional[float] = None,
) -> DecayFit:
    """Least-squares exponential rate of ``max |u|`` along a truncated axis.

    The window starts past the profile maximum (by ``core_margin``, default
    ``2 / sqrt(omega)``) and at least 10 % of the page away from both ends;
    it is shortened where the profile drops below ``1e-14 * max|u|``.
    """
    page = ops.book.page(page_id)
    if not page.truncated:
        raise DecayFitError(f"page {page_id!r} has no truncated axis")
    axis = axis or page.truncated[0]
    if axis not in page.truncated:
        raise DecayFitError(f"page {page_id!r} was not truncated along {axis!r}")
    grid = np.abs(page_grid(u, ops, page_id))
    hx, hy = ops.plan.spacings[page_id]
    if axis == "x":
        prof, step, T = grid.max(axis=1), hx, page.lx
    else:
        prof, step, T = grid.max(axis=0), hy, page.ly
    s = np.arange(len(prof)) * step
    scale = float(np.max(np.abs(u))) if np.any(u) else 0.0
    floor = FLOOR * scale if scale > 0 else FLOOR
    if core_margin is None:
        core_margin = 2.0 / math.sqrt(params.omega)
    x0 = max(0.1 * T, s[int(np.argmax(prof))] + core_margin)
    x1 = 0.9 * T
    sel = (s >= x0) & (s <= x1)
    if scale == 0.0 or not np.any(sel) or prof[sel][0] < floor:
        raise DecayFitError(f"page {page_id!r}: profile is at the numerical floor in the window")
    below = np.nonzero(sel & (prof < floor))[0]
    if below.size:
        x1 = s[below[0] - 1]
        sel = (s >= x0) & (s <= x1)
    if x1 - x0 < 0.1 * T or sel.sum() < 3:
        raise DecayFitError(f"page {page_id!r}: fit window [{x0:.3g}, {x1:.3g}] too short above the numerical floor")
    slope = np.polyfit(s[sel], np.log(prof[sel]), 1)[0]
    rate = -float(slope)
    bound = math.sqrt(params.omega) / 2
    return DecayFit(page_id, axis, (float(x0), float(x1)), rate, bound, rate - bound)


def reference_line_level(omega: float, p: float, T: Optional[float] = None, h: float = 0.01, tol: float = 1e-8) -> float:
    """Ground-state level on a periodic line of length T (the strip level per unit width)."""
    if T is None:
        T = default_truncation(omega)
    if math.exp(-math.sqrt(omega) * T / 4) >= 1e-8:
        raise ValueError(f"T={T} is too short: need exp(-sqrt(omega) T / 4) < 1e-8")
    g_ops = assemble_graph_operators(loop_line_graph(T), h)
    _, reps = graph_ground_state(g_ops, Params(omega, p), tol=tol)
    return best_report(reps, tol).level


def strip_width(book: Book) -> float:
    """Largest finite width among pages that were infinite in one direction."""
    widths = []
    for page in book.pages:
        ax = set(page.truncated)
        if ax == {"x"}:
            widths.append(page.ly)
        elif ax == {"y"}:
            widths.append(page.lx)
    if not widths:
        raise ValueError("book has no truncated half-strip pages")
    return max(widths)


@dataclass
class ExistenceReport:
    level: float
    strip_level: float
    strip_width: float
    status: str  # "satisfied" | "inconclusive" | "violated"
    level_converged: bool
    strip_converged: bool

    @property
    def satisfied(self) -> bool:
        return self.status == "satisfied"

    def to_dict(self):
        d = asdict(self)
        d["satisfied"] = self.satisfied
        return d


def strip_level(width: float, params: Params, h: float, T: float, tol: float = 1e-8, seeds=(0,)) -> tuple[float, bool]:
    """Physical ground-state level on a periodic strip ``[0, T) x [0, width]``."""
    ops = discretize(graph_based_book(loop_line_graph(T), width), h)
    v, _ = graph_ground_state(ops.product.graph_ops, Params(params.omega, params.p), tol=tol)
    _, reps = multi_start_ground_state(
        ops, Params(params.omega, params.p), seeds=seeds, tol=tol, base=lift_graph_field(v, ops),
        require_converged=False,
    )
    best = best_report(reps, tol)
    return best.level, best.converged


def existence_report(
    book: Book, params: Params, h: float, tol: float = 1e-8, seeds=(0, 1), T_strip: Optional[float] = None
) -> ExistenceReport:
    """Compare the level of a truncated book with the widest half-strip's strip level.

    A truncated level strictly below the strip level shows the runaway
    exclusion condition holds.  Differences within ``4 tol`` (relative) are
    inconclusive.
    """
    width = strip_width(book)
    if T_strip is None:
        T_strip = 2 * max(max(p.lx, p.ly) for p in book.pages if p.truncated)
    ops = discretize(book, h)
    _, reps = book_ground_state(ops, Params(params.omega, params.p), tol=tol, seeds=seeds)
    best = best_report(reps, tol)
    s_inf, s_conv = strip_level(width, params, h, T_strip, tol)
    band = 4 * tol * max(1.0, abs(s_inf))
    if abs(best.level - s_inf) < band:
        status = "inconclusive"
    elif best.level < s_inf:
        status = "satisfied"
    else:
        status = "violated"
    return ExistenceReport(best.level, s_inf, width, status, best.converged, s_conv)


def trial_function(v: np.ndarray, ops: DiscreteOperators, L: float, p: float, w: Callable = None) -> np.ndarray:
    """``lam v(x) w(gamma y)`` on ``graph x [0, 1]`` with ``gamma = L``, ``lam = L^(1/(2(p+1)))``.

    ``w`` is supported in ``[0, 1]``; the default is ``sin(pi t)^2``.
    """
    if w is None:
        w = _default_w
    pm = ops.product
    y = pm.y_index / (pm.ny - 1)
    t = L * y
    wy = np.where(t <= 1.0, w(np.clip(t, 0.0, 1.0)), 0.0)
    lam = L ** (1.0 / (2 * (p + 1)))
    return lam * v[pm.x_index] * wy


def _default_w(t):
    return np.sin(np.pi * t) ** 2


def trial_function_constant(v: np.ndarray, g_ops: DiscreteOperators, p: float, w: Callable = None, n_quad: int = 20001) -> float:
    """``c_p ||v||_{p+1}^{p+1} ||w||_{p+1}^{p+1}``, the coefficient of ``L^{-1/2}``."""
    if w is None:
        w = _default_w
    t = np.linspace(0.0, 1.0, n_quad)
    wq = np.abs(w(t)) ** (p + 1)
    w_norm = float(np.sum((wq[1:] + wq[:-1]) * 0.5 * np.diff(t)))
    return c_p(p) * lumped_power(v, g_ops, p) * w_norm


@dataclass
class LargeWidthReport:
    rows: list  # dicts with L, level, scaled, test_level, test_nehari
    constant: float
    decreasing: bool
    spread: float
    below_plateau: bool
    below_trial_level: bool
    level0: float

    def to_dict(self):
        return asdict(self)


def large_width_bound_check(
    graph: GraphSpec,
    params: Params,
    widths: Sequence[float],
    h: float,
    tol: float = 1e-8,
    seeds: Sequence[int] = (0, 1),
    transverse_h: Optional[float] = None,
    T: Optional[float] = None,
    max_iter: int = 5000,
) -> LargeWidthReport:
    """Check the ``L^{-1/2}`` decay of the level for large widths.

    For every width the computed level is compared with the Nehari-projected
    level of the explicit test function (an upper bound by construction).
    """
    problem = WidthProblem(graph, params.omega, params.p, h, max(widths), transverse_h, T, tol)
    records = sweep_widths(graph, params, widths, h, tol, seeds, max_iter=max_iter, problem=problem)
    level0 = records[0].level
    const = trial_function_constant(problem.v0, problem.g_ops, params.p)
    rows = []
    for rec in records[1:]:
        P = problem.params(rec.L)
        tf = trial_function(problem.v0, problem.ops, rec.L, params.p)
        rep = evaluate(tf, problem.ops, P)
        proj = nehari_project(tf, problem.ops, P)
        rows.append({
            "L": rec.L,
            "level": rec.level,
            "scaled": rec.level * math.sqrt(rec.L),
            "trial_level": params.c_p * lumped_power(proj, problem.ops, params.p),
            "trial_nehari": rep.nehari,
            "converged": rec.converged,
        })
    levels = [r["level"] for r in rows]
    scaled = [r["scaled"] for r in rows]
    return LargeWidthReport(
        rows=rows,
        constant=const,
        decreasing=all(b < a for a, b in zip(levels, levels[1:])),
        spread=max(scaled) / min(scaled),
        below_plateau=all(lv < level0 for lv in levels),
        below_trial_level=all(r["level"] <= r["trial_level"] for r in rows),
        level0=level0,
    )


def averaging_defect(u: np.ndarray, ops: DiscreteOperators) -> float:
    """``||u - avg(u)||_2 / ||u||_2`` for a field on a graph-based mesh."""
    d = u - average_transverse(u, ops)
    return math.sqrt(float(d @ (ops.M @ d)) / float(u @ (ops.M @ u)))

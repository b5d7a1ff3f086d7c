"""Spectral bottom, Nehari-projected ground-state descent, linearization."""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .discretization import DiscreteOperators, lift_graph_field, transverse_profile
from .functionals import Params, evaluate, nehari_project, transverse_fraction

log = logging.getLogger(__name__)

DENSE_LIMIT = 1500
# level increase tolerated as round-off when accepting a step
ROUNDOFF = 1e-14


class SolverError(RuntimeError):
    pass


class SpectralBottomError(SolverError):
    """omega does not lie above the spectral bottom."""


class NoConvergence(SolverError):
    def __init__(self, message, reports=()):
        super().__init__(message)
        self.reports = list(reports)


def spectral_bottom(ops: DiscreteOperators, k: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """The ``k`` smallest eigenpairs of ``K v = lam M v``.

    Eigenvalues ascend; columns of the returned vector array are
    M-orthonormal.
    """
    n = ops.n
    if not 1 <= k < n:
        raise ValueError(f"need 1 <= k < {n}, got {k}")
    return _smallest_pairs(ops.K, ops.M, k)


def _smallest_pairs(A, B, k, lower=None):
    n = A.shape[0]
    if n <= DENSE_LIMIT:
        vals, vecs = sla.eigh(A.toarray(), B.toarray(), subset_by_index=[0, k - 1])
    else:
        # shift strictly below the spectrum so shift-invert picks the bottom
        sigma = -1.0 if lower is None else lower
        v0 = np.random.default_rng(0).standard_normal(n)
        try:
            vals, vecs = spla.eigsh(A.tocsc(), k=k, M=B.tocsc(), sigma=sigma, which="LM", v0=v0, tol=1e-12)
        except (spla.ArpackError, RuntimeError) as exc:
            raise SolverError(f"eigensolver failed: {exc}") from exc
        order = np.argsort(vals)
        vals, vecs = vals[order], vecs[:, order]
    norms = np.sqrt(np.einsum("ij,ij->j", vecs, B @ vecs))
    vecs = vecs / norms
    for j in range(vecs.shape[1]):
        if vecs[np.argmax(np.abs(vecs[:, j])), j] < 0:
            vecs[:, j] *= -1
    return vals, vecs


@dataclass
class SolveReport:
    level: float
    action: float
    nehari_residual: float
    equation_residual: float
    iterations: int
    converged: bool
    transverse_fraction: Optional[float] = None
    init: str = ""
    history: list = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("history")
        return d


class _Preconditioner:
    """Factorization of ``K_L + omega M``."""

    def __init__(self, ops: DiscreteOperators, params: Params):
        if params.L is not None:
            if not ops.has_split:
                raise ValueError("a width L needs graph-based operators with an x/y split")
            A = ops.Kx + ops.Ky / params.L**2 + params.omega * ops.M
        else:
            A = ops.K + params.omega * ops.M
        self.A = A.tocsc()
        self._solve = spla.factorized(self.A)

    def __call__(self, b):
        return self._solve(b)


def _check_omega(ops: DiscreteOperators, params: Params):
    if ops.kirchhoff:
        if params.omega <= 0:
            raise SpectralBottomError(
                f"omega={params.omega} must be positive: the spectral bottom is 0 under Kirchhoff conditions"
            )
    else:
        bottom = spectral_bottom(ops, 1)[0][0]
        if params.omega <= -bottom:
            raise SpectralBottomError(f"omega={params.omega} is at or below minus the spectral bottom {bottom:.6g}")


def ground_state(
    ops: DiscreteOperators,
    params: Params,
    init: np.ndarray,
    tol: float = 1e-8,
    max_iter: int = 5000,
    label: str = "",
    precond: Optional[_Preconditioner] = None,
    keep_history: bool = False,
) -> tuple[np.ndarray, SolveReport]:
    """Minimize the action on the Nehari manifold.

    Preconditioned steepest descent: with ``A = K_L + omega M`` and
    ``g = A^{-1} grad S(u)``, try ``u <- pi(u - alpha g)`` with backtracking on
    the level, starting from ``alpha = 1``.  Stops once both the relative
    level change and the relative ``A``-norm of ``g`` drop below ``tol``.
    """
    _check_omega(ops, params)
    p = params.p
    A = precond if precond is not None else _Preconditioner(ops, params)
    cp = params.c_p
    m = ops.m

    def level_of(v):
        return cp * float(m @ np.abs(v) ** (p + 1))

    u = nehari_project(np.asarray(init, dtype=float), ops, params)
    S = level_of(u)
    history = [S] if keep_history else []
    rel_change = math.inf
    converged = False
    res = math.inf
    it = 0
    alpha = 1.0
    for it in range(1, max_iter + 1):
        w = A(m * np.abs(u) ** (p - 1) * u)
        g = u - w
        Au = A.A @ u
        res = math.sqrt(max(float(g @ (A.A @ g)), 0.0) / float(u @ Au))
        if res < tol and rel_change < tol:
            converged = True
            it -= 1
            break
        alpha = min(1.0, 2.0 * alpha)
        accepted = False
        while alpha >= 1e-6:
            v = nehari_project(u - alpha * g, ops, params)
            Sv = level_of(v)
            if Sv <= S + ROUNDOFF * abs(S):
                accepted = True
                break
            alpha *= 0.5
        if not accepted:
            break
        rel_change = abs(S - Sv) / abs(Sv)
        u, S = v, Sv
        if keep_history:
            history.append(S)

    if float(m @ u) < 0:
        u = -u
    rep = evaluate(u, ops, params)
    nehari_rel = abs(rep.nehari) / max(rep.np1, 1e-300)
    report = SolveReport(
        level=rep.level,
        action=rep.action,
        nehari_residual=nehari_rel,
        equation_residual=res,
        iterations=it,
        converged=converged,
        transverse_fraction=transverse_fraction(u, ops) if ops.has_split else None,
        init=label,
        history=history,
    )
    log.debug("ground state %s: level=%.12g it=%d res=%.2e conv=%s", label, report.level, it, res, converged)
    return u, report


def equation_residual(u: np.ndarray, ops: DiscreteOperators, params: Params) -> float:
    """Relative preconditioned residual of ``(K_L + omega M) u = m |u|^{p-1} u``."""
    A = _Preconditioner(ops, params)
    g = u - A(ops.m * np.abs(u) ** (params.p - 1) * u)
    return math.sqrt(float(g @ (A.A @ g)) / float(u @ (A.A @ u)))


# -- initial guesses ---------------------------------------------------------

def bump_init(ops: DiscreteOperators, node: int, omega: float = 1.0) -> np.ndarray:
    """Screened Green's function ``(K + omega M)^{-1} M e_node``, scaled to max 1."""
    e = np.zeros(ops.n)
    e[node] = 1.0
    u = spla.spsolve((ops.K + max(omega, 1e-3) * ops.M).tocsc(), ops.M @ e)
    return u / np.max(np.abs(u))


def random_init(ops: DiscreteOperators, seed: int, omega: float = 1.0, noise: float = 0.05) -> np.ndarray:
    """A bump at a random node plus small random noise."""
    rng = np.random.default_rng(seed)
    u = bump_init(ops, int(rng.integers(ops.n)), omega)
    return u + noise * rng.standard_normal(ops.n) * np.abs(u)


def ridge_init(base: np.ndarray, ops: DiscreteOperators, eps: float = 0.1) -> np.ndarray:
    """``base * (1 + eps cos(pi y))``: a lift perturbed by the first transverse mode."""
    return base * (1.0 + eps * transverse_profile(ops, 1))


def page_center_node(ops: DiscreteOperators, page_id: str) -> int:
    table = ops.dofmap.tables[page_id]
    nx, ny = table.shape
    node = table[nx // 2, ny // 2]
    if node < 0:
        raise ValueError(f"page {page_id!r} center carries Dirichlet data")
    return int(node)


def page_center_inits(ops: DiscreteOperators, omega: float = 1.0) -> list[tuple[str, np.ndarray]]:
    return [(f"center:{p.id}", bump_init(ops, page_center_node(ops, p.id), omega)) for p in ops.book.pages]


def _better(a: SolveReport, b: SolveReport, tol: float) -> bool:
    """Is ``a`` preferred to ``b``?

    Every run ends on the Nehari set, so a clearly lower level wins even when
    unconverged.  Within the tie slack a converged run wins, then the smaller
    transverse fraction.
    """
    slack = 2 * tol * max(1.0, abs(a.level), abs(b.level))
    if abs(a.level - b.level) > slack:
        return a.level < b.level
    if a.converged != b.converged:
        return a.converged
    return (a.transverse_fraction or 0.0) < (b.transverse_fraction or 0.0)


def multi_start_ground_state(
    ops: DiscreteOperators,
    params: Params,
    seeds: Sequence[int] = (0, 1, 2),
    tol: float = 1e-8,
    base: Optional[np.ndarray] = None,
    inits: Sequence[tuple[str, np.ndarray]] = (),
    max_iter: int = 5000,
    ridge_eps: float = 0.1,
    require_converged: bool = True,
) -> tuple[np.ndarray, list[SolveReport]]:
    """Run ground_state from several starts and keep the lowest level.

    Starts, in order: ``lift`` (``base``), ``ridge`` (``base`` times
    ``1 + eps cos(pi y)``, graph-based books only), the explicit ``inits``,
    then ``random(seed)`` for each seed.  Runs are ranked by level, with
    convergence breaking ties.  ``NoConvergence`` is raised when the selected
    run did not converge, unless ``require_converged=False``.
    """
    starts: list[tuple[str, np.ndarray]] = []
    if base is not None:
        starts.append(("lift", base))
        if ops.product is not None:
            starts.append(("ridge", ridge_init(base, ops, ridge_eps)))
    starts.extend(inits)
    starts.extend((f"random({s})", random_init(ops, s, params.omega)) for s in seeds)
    if not starts:
        raise ValueError("no initial guesses")

    precond = _Preconditioner(ops, params)
    best_u, best, reports = None, None, []
    for label, u0 in starts:
        u, rep = ground_state(ops, params, u0, tol=tol, max_iter=max_iter, label=label, precond=precond)
        reports.append(rep)
        if best is None or _better(rep, best, tol):
            best_u, best = u, rep
    if require_converged and not best.converged:
        raise NoConvergence(f"lowest run ({best.init}) did not converge", reports)
    return best_u, reports


def best_report(reports: Sequence[SolveReport], tol: float = 1e-8) -> SolveReport:
    best = None
    for r in reports:
        if best is None or _better(r, best, tol):
            best = r
    return best


def graph_ground_state(
    g_ops: DiscreteOperators,
    params: Params,
    tol: float = 1e-8,
    seeds: Sequence[int] = (0, 1, 2),
    max_iter: int = 5000,
    require_converged: bool = True,
) -> tuple[np.ndarray, list[SolveReport]]:
    """Ground state of the 1D graph problem (``L`` is ignored)."""
    p1 = Params(params.omega, params.p)
    inits = [("bump:0", bump_init(g_ops, 0, params.omega))]
    return multi_start_ground_state(
        g_ops, p1, seeds=seeds, tol=tol, inits=inits, max_iter=max_iter, require_converged=require_converged
    )


def lifted_ground_state(ops: DiscreteOperators, params: Params, tol: float = 1e-8, **kw):
    """Solve on the graph underlying a graph-based mesh and lift the result."""
    v, reps = graph_ground_state(ops.product.graph_ops, params, tol=tol, **kw)
    return lift_graph_field(v, ops), v, reps


# -- linearization -----------------------------------------------------------

def linearized_operator(u: np.ndarray, ops: DiscreteOperators, params: Params) -> sp.csr_matrix:
    """``K + omega M - p diag(m |u|^{p-1})`` on a graph mesh."""
    return (ops.K + params.omega * ops.M - sp.diags(params.p * ops.m * np.abs(u) ** (params.p - 1))).tocsr()


def linearized_smallest_eig(u: np.ndarray, ops: DiscreteOperators, params: Params) -> float:
    """Smallest eigenvalue of the linearized operator relative to ``M``."""
    Lp = linearized_operator(u, ops, params)
    # diag(m) <= 3 M for linear elements, so this shift sits below the spectrum
    lower = params.omega - 3 * params.p * float(np.max(np.abs(u))) ** (params.p - 1) - 1.0
    vals, _ = _smallest_pairs(Lp, ops.M, 1, lower=lower)
    return float(vals[0])


def predicted_width(lam1: float) -> Optional[float]:
    """Width at which ``cos(pi y / L)`` destabilizes the lifted state, if any."""
    if lam1 >= 0:
        return None
    return math.pi / math.sqrt(-lam1)

"""Conforming bilinear finite elements on open books.

Every page carries a tensor grid; grid nodes lying on a binding are merged
across all incident pages, so discrete functions are single valued on
bindings and the Kirchhoff flux balance is a natural condition of the
assembled quadratic form.  Graph-based books additionally keep the x/y
stiffness split and a map to the 1D graph discretization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .topology import Book, BookError, GraphSpec, validate_book

_SIDE_NODES = {
    # side -> function (nx, ny) -> list of local (i, j) along the side parameter
    "S": lambda nx, ny: [(i, 0) for i in range(nx)],
    "N": lambda nx, ny: [(i, ny - 1) for i in range(nx)],
    "W": lambda nx, ny: [(0, j) for j in range(ny)],
    "E": lambda nx, ny: [(nx - 1, j) for j in range(ny)],
}


class MeshError(ValueError):
    pass


def node_count(length: float, h: float) -> int:
    """``ceil(length / h) + 1`` with a guard against round-off in the ratio."""
    return max(2, math.ceil(length / h - 1e-9) + 1)


@dataclass(frozen=True)
class MeshPlan:
    h: float
    transverse_h: float
    node_counts: dict  # binding id -> node count
    dims: dict  # page id -> (nx, ny)
    spacings: dict  # page id -> (hx, hy)


def plan_mesh(book: Book, h: float, transverse_h: Optional[float] = None) -> MeshPlan:
    """Choose per-page grid sizes.

    ``transverse_h`` only applies to graph-based books, where it sets the
    spacing along the transverse (y) axis of every page.
    """
    if not h > 0:
        raise MeshError(f"mesh size must be positive, got {h}")
    if not book.is_compact:
        raise MeshError("book is not compact; truncate it first")
    report = validate_book(book)
    if not report.ok:
        raise BookError(str(report))
    hy_target = h
    if book.product is not None and transverse_h is not None:
        if not transverse_h > 0:
            raise MeshError(f"transverse mesh size must be positive, got {transverse_h}")
        hy_target = transverse_h

    dims, spacings, counts = {}, {}, {}
    for p in book.pages:
        nx, ny = node_count(p.lx, h), node_count(p.ly, hy_target)
        dims[p.id] = (nx, ny)
        spacings[p.id] = (p.lx / (nx - 1), p.ly / (ny - 1))
    for a in book.attachments:
        nx, ny = dims[a.page]
        n = nx if a.side in ("S", "N") else ny
        prev = counts.setdefault(a.binding, n)
        if prev != n:
            raise MeshError(f"binding {a.binding!r}: incident sides need {prev} and {n} nodes")
    return MeshPlan(h, hy_target, counts, dims, spacings)


class _UnionFind:
    def __init__(self, n):
        self.parent = np.arange(n)

    def find(self, a):
        parent = self.parent
        root = a
        while parent[root] != root:
            root = parent[root]
        while parent[a] != root:
            parent[a], a = root, parent[a]
        return root

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            # smaller index wins so numbering stays deterministic
            if ra < rb:
                self.parent[rb] = ra
            else:
                self.parent[ra] = rb

    def roots(self):
        return np.array([self.find(k) for k in range(len(self.parent))])


@dataclass
class DofMap:
    """Global numbering of grid nodes.

    ``tables[page]`` is an ``(nx, ny)`` array of global ids; nodes carrying
    Dirichlet data have id -1.  ``binding_nodes[b]`` lists the global ids along
    binding ``b`` in its own parametrization.
    """

    n_dofs: int
    tables: dict
    binding_nodes: dict
    n_constrained: int = 0


def build_dofs(book: Book, plan: MeshPlan) -> DofMap:
    offsets, total = {}, 0
    for p in book.pages:
        nx, ny = plan.dims[p.id]
        offsets[p.id] = total
        total += nx * ny
    b_offsets = {}
    for b in book.bindings:
        b_offsets[b.id] = total
        total += plan.node_counts.get(b.id, 0)

    uf = _UnionFind(total)
    for a in book.attachments:
        nx, ny = plan.dims[a.page]
        side_nodes = _SIDE_NODES[a.side](nx, ny)
        n = len(side_nodes)
        for k, (i, j) in enumerate(side_nodes):
            kb = k if a.orientation == "forward" else n - 1 - k
            uf.union(offsets[a.page] + i * ny + j, b_offsets[a.binding] + kb)
    roots = uf.roots()

    constrained_roots = set()
    for b in book.bindings:
        if b.dirichlet:
            start = b_offsets[b.id]
            constrained_roots.update(roots[start:start + plan.node_counts[b.id]].tolist())

    # number free classes by first appearance in page order, row-major
    page_total = b_offsets[book.bindings[0].id] if book.bindings else total
    ids = {}
    for k in range(page_total):
        r = roots[k]
        if r not in ids and r not in constrained_roots:
            ids[r] = len(ids)

    def gid(k):
        return ids.get(roots[k], -1)

    tables = {}
    for p in book.pages:
        nx, ny = plan.dims[p.id]
        off = offsets[p.id]
        tables[p.id] = np.array([gid(off + k) for k in range(nx * ny)], dtype=np.int64).reshape(nx, ny)
    binding_nodes = {
        b.id: np.array([gid(b_offsets[b.id] + k) for k in range(plan.node_counts.get(b.id, 0))], dtype=np.int64)
        for b in book.bindings
    }

    # a cell whose corners collapse cannot carry a bilinear element
    for p in book.pages:
        t = tables[p.id]
        r = roots[offsets[p.id]:offsets[p.id] + t.size].reshape(t.shape)
        corners = np.stack([r[:-1, :-1], r[1:, :-1], r[:-1, 1:], r[1:, 1:]], axis=-1).reshape(-1, 4)
        distinct = np.array([len(set(c)) for c in corners.tolist()])
        if np.any(distinct < 4):
            culprits = sorted({a.binding for a in book.attachments if a.page == p.id})
            raise MeshError(
                f"contradictory identification on page {p.id!r} (cells collapse); "
                f"check orientation/resolution of binding(s) {', '.join(culprits)}"
            )
    return DofMap(len(ids), tables, binding_nodes, n_constrained=len(constrained_roots))


def stiffness_1d(n: int, h: float) -> sp.csr_matrix:
    d = np.full(n, 2.0)
    d[0] = d[-1] = 1.0
    off = -np.ones(n - 1)
    return sp.diags([off, d, off], [-1, 0, 1], format="csr") / h


def mass_1d(n: int, h: float) -> sp.csr_matrix:
    d = np.full(n, 4.0)
    d[0] = d[-1] = 2.0
    off = np.ones(n - 1)
    return sp.diags([off, d, off], [-1, 0, 1], format="csr") * (h / 6.0)


def _scatter(ids: np.ndarray, n_dofs: int) -> sp.csr_matrix:
    """Global x local selection matrix; local nodes with id -1 are dropped."""
    ids = np.asarray(ids).ravel()
    keep = ids >= 0
    cols = np.nonzero(keep)[0]
    return sp.csr_matrix((np.ones(len(cols)), (ids[keep], cols)), shape=(n_dofs, len(ids)))


@dataclass
class ProductMap:
    """Links a graph-based book's 2D dofs to ``(graph dof, transverse index)``."""

    graph_ops: "DiscreteOperators"
    x_index: np.ndarray
    y_index: np.ndarray
    ny: int
    width: float
    # transverse trapezoid weights normalized to sum 1
    weights: np.ndarray


@dataclass
class DiscreteOperators:
    K: sp.csr_matrix
    M: sp.csr_matrix
    m: np.ndarray  # lumped mass (row sums of M)
    Kx: Optional[sp.csr_matrix] = None
    Ky: Optional[sp.csr_matrix] = None
    book: Optional[Book] = None
    plan: Optional[MeshPlan] = None
    dofmap: Optional[DofMap] = None
    graph: Optional[GraphSpec] = None
    edge_nodes: dict = field(default_factory=dict)  # 1D only: edge id -> global ids
    edge_spacing: dict = field(default_factory=dict)
    product: Optional[ProductMap] = None
    kirchhoff: bool = True

    @property
    def n(self) -> int:
        return self.K.shape[0]

    @property
    def has_split(self) -> bool:
        return self.Kx is not None and self.Ky is not None


def assemble_operators(book: Book, plan: MeshPlan, dofs: DofMap) -> DiscreteOperators:
    n = dofs.n_dofs
    Kx = sp.csr_matrix((n, n))
    Ky = sp.csr_matrix((n, n))
    M = sp.csr_matrix((n, n))
    for p in book.pages:
        nx, ny = plan.dims[p.id]
        hx, hy = plan.spacings[p.id]
        kx, mx = stiffness_1d(nx, hx), mass_1d(nx, hx)
        ky, my = stiffness_1d(ny, hy), mass_1d(ny, hy)
        S = _scatter(dofs.tables[p.id], n)
        Kx = Kx + S @ sp.kron(kx, my) @ S.T
        Ky = Ky + S @ sp.kron(mx, ky) @ S.T
        M = M + S @ sp.kron(mx, my) @ S.T
    Kx, Ky, M = (A.tocsr() for A in (Kx, Ky, M))
    K = (Kx + Ky).tocsr()
    m = np.asarray(M.sum(axis=1)).ravel()
    ops = DiscreteOperators(
        K=K, M=M, m=m, book=book, plan=plan, dofmap=dofs, kirchhoff=not book.has_dirichlet
    )
    if book.product is not None:
        ops.Kx, ops.Ky = Kx, Ky
        ops.product = _product_map(book, plan, dofs)
    return ops


def assemble_graph_operators(graph: GraphSpec, h: float) -> DiscreteOperators:
    """Piecewise-linear elements on a compact metric graph."""
    if not h > 0:
        raise MeshError(f"mesh size must be positive, got {h}")
    problems = graph.check()
    if problems:
        raise BookError("; ".join(problems))
    if not graph.is_compact:
        raise MeshError("graph has infinite edges; truncate it first")

    counts = {e.id: node_count(e.length, h) for e in graph.edges}
    offsets, total = {}, 0
    for e in graph.edges:
        offsets[e.id] = total
        total += counts[e.id]
    v_off = {v: total + k for k, v in enumerate(graph.vertices)}
    uf = _UnionFind(total + len(graph.vertices))
    for e in graph.edges:
        uf.union(offsets[e.id], v_off[e.source])
        uf.union(offsets[e.id] + counts[e.id] - 1, v_off[e.target])
    roots = uf.roots()
    constrained = {roots[v_off[v]] for v in graph.dirichlet}
    ids = {}
    for k in range(total):
        if roots[k] not in ids and roots[k] not in constrained:
            ids[roots[k]] = len(ids)
    n = len(ids)

    K = sp.csr_matrix((n, n))
    M = sp.csr_matrix((n, n))
    edge_nodes, spacing = {}, {}
    for e in graph.edges:
        ne = counts[e.id]
        he = e.length / (ne - 1)
        gids = np.array([ids.get(roots[offsets[e.id] + k], -1) for k in range(ne)], dtype=np.int64)
        for k in range(ne - 1):
            if gids[k] >= 0 and gids[k] == gids[k + 1]:
                raise MeshError(f"edge {e.id!r} is too short for mesh size {h}")
        edge_nodes[e.id], spacing[e.id] = gids, he
        S = _scatter(gids, n)
        K = K + S @ stiffness_1d(ne, he) @ S.T
        M = M + S @ mass_1d(ne, he) @ S.T
    K, M = K.tocsr(), M.tocsr()
    m = np.asarray(M.sum(axis=1)).ravel()
    return DiscreteOperators(
        K=K, M=M, m=m, graph=graph, edge_nodes=edge_nodes, edge_spacing=spacing,
        kirchhoff=not graph.dirichlet,
    )


def _product_map(book: Book, plan: MeshPlan, dofs: DofMap) -> ProductMap:
    info = book.product
    g_ops = assemble_graph_operators(info.graph, plan.h)
    n = dofs.n_dofs
    x_index = np.full(n, -1, dtype=np.int64)
    y_index = np.full(n, -1, dtype=np.int64)
    ny_all = {plan.dims[p.id][1] for p in book.pages}
    if len(ny_all) != 1:
        raise MeshError("graph-based book pages disagree on the transverse node count")
    ny = ny_all.pop()
    for p in book.pages:
        table = dofs.tables[p.id]
        gids = g_ops.edge_nodes.get(p.id)
        if gids is None or len(gids) != table.shape[0]:
            raise MeshError(f"page {p.id!r} does not match the graph mesh")
        for i in range(table.shape[0]):
            for j in range(ny):
                g2 = table[i, j]
                if g2 < 0:
                    if gids[i] >= 0:
                        raise MeshError(f"page {p.id!r}: Dirichlet data not transverse-uniform")
                    continue
                if gids[i] < 0:
                    raise MeshError(f"page {p.id!r}: Dirichlet data not transverse-uniform")
                if x_index[g2] >= 0 and (x_index[g2] != gids[i] or y_index[g2] != j):
                    raise MeshError(f"page {p.id!r}: 2D node identification does not match the graph")
                x_index[g2], y_index[g2] = gids[i], j
    if np.any(x_index < 0) or n != g_ops.n * ny:
        raise MeshError("graph-based book mesh is not a product mesh")
    hy = info.width / (ny - 1)
    w = np.full(ny, hy)
    w[0] = w[-1] = hy / 2
    return ProductMap(g_ops, x_index, y_index, ny, info.width, w / info.width)


def discretize(book: Book, h: float, transverse_h: Optional[float] = None) -> DiscreteOperators:
    plan = plan_mesh(book, h, transverse_h)
    return assemble_operators(book, plan, build_dofs(book, plan))


def lift_graph_field(v: np.ndarray, ops: DiscreteOperators) -> np.ndarray:
    """Extend a graph field constantly in the transverse direction."""
    if ops.product is None:
        raise MeshError("operators are not from a graph-based book")
    v = np.asarray(v, dtype=float)
    if v.shape != (ops.product.graph_ops.n,):
        raise MeshError(f"graph field has {v.shape} entries, mesh expects {ops.product.graph_ops.n}")
    return v[ops.product.x_index]


def graph_average(u: np.ndarray, ops: DiscreteOperators) -> np.ndarray:
    """Transverse quadrature average, as a field on the graph mesh."""
    if ops.product is None:
        raise MeshError("operators are not from a graph-based book")
    pm = ops.product
    out = np.zeros(pm.graph_ops.n)
    np.add.at(out, pm.x_index, pm.weights[pm.y_index] * u)
    return out


def average_transverse(u: np.ndarray, ops: DiscreteOperators) -> np.ndarray:
    return lift_graph_field(graph_average(u, ops), ops)


def transverse_profile(ops: DiscreteOperators, k: int = 1) -> np.ndarray:
    """Nodal values of ``cos(k pi y / width)`` on a graph-based mesh."""
    pm = ops.product
    if pm is None:
        raise MeshError("operators are not from a graph-based book")
    y = pm.y_index / (pm.ny - 1)
    return np.cos(k * np.pi * y)


def page_grid(u: np.ndarray, ops: DiscreteOperators, page_id: str) -> np.ndarray:
    """Values of ``u`` on the page grid; Dirichlet nodes read as 0."""
    table = ops.dofmap.tables[page_id]
    vals = np.zeros(table.shape)
    mask = table >= 0
    vals[mask] = u[table[mask]]
    return vals

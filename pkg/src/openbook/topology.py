"""Open books: rectangular pages glued along bindings.

A page is the rectangle ``[0, lx] x [0, ly]`` (either side may be ``math.inf``).
Its sides are named after the compass::

    S: y = 0,  parametrized by x, length lx      (always present)
    N: y = ly, parametrized by x, length lx      (present iff ly < inf)
    W: x = 0,  parametrized by y, length ly      (always present)
    E: x = lx, parametrized by y, length ly      (present iff lx < inf)

Each present side is attached to exactly one binding.  A binding attached to
two opposite sides of the same page turns the page into a cylinder (or a torus
when both pairs are identified); two consecutive sides may never share a
binding.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field, replace
from typing import Optional

INF = math.inf

SIDES = ("S", "N", "W", "E")
OPPOSITE = {"S": "N", "N": "S", "W": "E", "E": "W"}
_SIDE_ALIASES = {
    "s": "S", "south": "S",
    "n": "N", "north": "N",
    "w": "W", "west": "W",
    "e": "E", "east": "E",
}


def normalize_side(side: str) -> str:
    try:
        return _SIDE_ALIASES[side.strip().lower()]
    except KeyError:
        raise ValueError(f"unknown side {side!r}") from None


@dataclass(frozen=True)
class Binding:
    id: str
    length: float
    # Homogeneous Dirichlet data; only created by truncation.
    dirichlet: bool = False


@dataclass(frozen=True)
class Page:
    id: str
    lx: float
    ly: float
    # Axes ("x" and/or "y") that were infinite before truncate_book.
    truncated: tuple[str, ...] = ()

    def has_side(self, side: str) -> bool:
        if side == "N":
            return math.isfinite(self.ly)
        if side == "E":
            return math.isfinite(self.lx)
        return True

    def side_length(self, side: str) -> float:
        return self.lx if side in ("S", "N") else self.ly

    def present_sides(self) -> tuple[str, ...]:
        return tuple(s for s in SIDES if self.has_side(s))


@dataclass(frozen=True)
class Attachment:
    page: str
    side: str
    binding: str
    orientation: str = "forward"

    def __post_init__(self):
        object.__setattr__(self, "side", normalize_side(self.side))
        if self.orientation not in ("forward", "reversed"):
            raise ValueError(f"orientation must be 'forward' or 'reversed', got {self.orientation!r}")


@dataclass(frozen=True)
class Edge:
    id: str
    source: str
    target: Optional[str]
    length: float


@dataclass(frozen=True)
class GraphSpec:
    """Metric graph.  Infinite edges have ``target=None``."""

    vertices: tuple[str, ...]
    edges: tuple[Edge, ...]
    dirichlet: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "vertices", tuple(self.vertices))
        object.__setattr__(self, "edges", tuple(self.edges))
        object.__setattr__(self, "dirichlet", tuple(self.dirichlet))

    def check(self) -> list[str]:
        problems = []
        known = set(self.vertices)
        if len(known) != len(self.vertices):
            problems.append("duplicate vertex id")
        if len({e.id for e in self.edges}) != len(self.edges):
            problems.append("duplicate edge id")
        for e in self.edges:
            if not e.length > 0:
                problems.append(f"edge {e.id}: length must be positive")
            if e.source not in known:
                problems.append(f"edge {e.id}: unknown vertex {e.source!r}")
            if e.target is None:
                if math.isfinite(e.length):
                    problems.append(f"edge {e.id}: finite edge needs two endpoints")
            elif e.target not in known:
                problems.append(f"edge {e.id}: unknown vertex {e.target!r}")
            elif not math.isfinite(e.length):
                problems.append(f"edge {e.id}: infinite edge must have a single endpoint")
        for v in self.dirichlet:
            if v not in known:
                problems.append(f"dirichlet vertex {v!r} is not declared")
        return problems

    def is_connected(self) -> bool:
        if not self.vertices:
            return False
        adj = defaultdict(set)
        for e in self.edges:
            if e.target is not None:
                adj[e.source].add(e.target)
                adj[e.target].add(e.source)
        seen = {self.vertices[0]}
        stack = [self.vertices[0]]
        while stack:
            v = stack.pop()
            for w in adj[v] - seen:
                seen.add(w)
                stack.append(w)
        return len(seen) == len(self.vertices)

    @property
    def is_compact(self) -> bool:
        return all(math.isfinite(e.length) for e in self.edges)


@dataclass(frozen=True)
class ProductInfo:
    """Records that a book is ``graph x [0, width]`` with page x along the edge."""

    graph: GraphSpec
    width: float


@dataclass(frozen=True)
class Book:
    pages: tuple[Page, ...]
    bindings: tuple[Binding, ...]
    attachments: tuple[Attachment, ...]
    product: Optional[ProductInfo] = None

    def __post_init__(self):
        object.__setattr__(self, "pages", tuple(self.pages))
        object.__setattr__(self, "bindings", tuple(self.bindings))
        object.__setattr__(self, "attachments", tuple(self.attachments))

    def page(self, pid: str) -> Page:
        for p in self.pages:
            if p.id == pid:
                return p
        raise KeyError(pid)

    def binding(self, bid: str) -> Binding:
        for b in self.bindings:
            if b.id == bid:
                return b
        raise KeyError(bid)

    def attachments_of(self, pid: str) -> dict[str, Attachment]:
        return {a.side: a for a in self.attachments if a.page == pid}

    @property
    def is_compact(self) -> bool:
        return all(math.isfinite(b.length) for b in self.bindings) and all(
            math.isfinite(p.lx) and math.isfinite(p.ly) for p in self.pages
        )

    @property
    def has_dirichlet(self) -> bool:
        return any(b.dirichlet for b in self.bindings)

    @property
    def area(self) -> float:
        return sum(p.lx * p.ly for p in self.pages)


@dataclass(frozen=True)
class Violation:
    kind: str
    subject: str
    message: str

    def __str__(self):
        return f"{self.kind}: {self.message}"


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def kinds(self) -> set[str]:
        return {v.kind for v in self.violations}

    def __str__(self):
        if self.ok:
            return "ok"
        return "; ".join(str(v) for v in self.violations)


class BookError(ValueError):
    """Raised when a book cannot be used for the requested operation."""


def validate_book(book: Book) -> ValidationReport:
    out: list[Violation] = []

    def bad(kind, subject, message):
        out.append(Violation(kind, subject, message))

    pages = {}
    for p in book.pages:
        if p.id in pages:
            bad("duplicate id", p.id, f"page id {p.id!r} used twice")
        pages[p.id] = p
        if not (p.lx > 0 and p.ly > 0):
            bad("nonpositive length", p.id, f"page {p.id!r} has nonpositive side ({p.lx}, {p.ly})")
    bindings = {}
    for b in book.bindings:
        if b.id in bindings:
            bad("duplicate id", b.id, f"binding id {b.id!r} used twice")
        bindings[b.id] = b
        if not b.length > 0:
            bad("nonpositive length", b.id, f"binding {b.id!r} has nonpositive length {b.length}")

    by_page_side: dict[tuple[str, str], list[Attachment]] = defaultdict(list)
    incident: dict[str, int] = defaultdict(int)
    for a in book.attachments:
        where = f"{a.page}.{a.side}"
        if a.page not in pages:
            bad("unknown page", where, f"attachment references unknown page {a.page!r}")
            continue
        if a.binding not in bindings:
            bad("unknown binding", where, f"attachment {where} references unknown binding {a.binding!r}")
            continue
        page = pages[a.page]
        incident[a.binding] += 1
        by_page_side[(a.page, a.side)].append(a)
        if not page.has_side(a.side):
            bad("infinite side", where, f"page {a.page!r} has no side {a.side} (the opposite side is at infinity)")
            continue
        side_len = page.side_length(a.side)
        if side_len != bindings[a.binding].length:
            bad(
                "length mismatch",
                where,
                f"side {where} has length {side_len} but binding {a.binding!r} has length {bindings[a.binding].length}",
            )

    for p in book.pages:
        for s in p.present_sides():
            n = len(by_page_side.get((p.id, s), []))
            if n == 0:
                bad("unattached side", f"{p.id}.{s}", f"side {s} of page {p.id!r} has no binding")
            elif n > 1:
                bad("multiply attached side", f"{p.id}.{s}", f"side {s} of page {p.id!r} has {n} bindings")
        sides = book.attachments_of(p.id)
        for s1, s2 in (("S", "W"), ("S", "E"), ("N", "W"), ("N", "E")):
            if s1 in sides and s2 in sides and sides[s1].binding == sides[s2].binding:
                bad(
                    "conical page",
                    p.id,
                    f"binding {sides[s1].binding!r} is attached to consecutive sides {s1},{s2} of page {p.id!r}",
                )

    for b in book.bindings:
        if incident[b.id] == 0:
            bad("orphan binding", b.id, f"binding {b.id!r} has no incident page")
    return ValidationReport(out)


def _page_adjacency(book: Book) -> dict[str, set[str]]:
    by_binding = defaultdict(set)
    for a in book.attachments:
        by_binding[a.binding].add(a.page)
    adj = {p.id: set() for p in book.pages}
    for pages in by_binding.values():
        for pid in pages:
            adj[pid] |= pages - {pid}
    return adj


def sub_book(book: Book, page_ids) -> Book:
    keep = set(page_ids)
    attachments = tuple(a for a in book.attachments if a.page in keep)
    used = {a.binding for a in attachments}
    return Book(
        pages=tuple(p for p in book.pages if p.id in keep),
        bindings=tuple(b for b in book.bindings if b.id in used),
        attachments=attachments,
    )


def connected_components(book: Book) -> list[Book]:
    adj = _page_adjacency(book)
    seen: set[str] = set()
    comps = []
    for p in book.pages:
        if p.id in seen:
            continue
        comp = {p.id}
        stack = [p.id]
        while stack:
            q = stack.pop()
            for r in adj[q] - comp:
                comp.add(r)
                stack.append(r)
        seen |= comp
        comps.append(sub_book(book, comp))
    return comps


def is_connected(book: Book) -> bool:
    return len(connected_components(book)) == 1


def min_binding_length(book: Book) -> float:
    """Half of min(shortest binding, 1); a positive number at most 1/2."""
    if not book.bindings:
        raise BookError("book has no bindings")
    return 0.5 * min(min(b.length for b in book.bindings), 1.0)


def compact_core(book: Book) -> Book:
    finite = {b.id for b in book.bindings if math.isfinite(b.length)}
    keep = []
    for p in book.pages:
        atts = book.attachments_of(p.id)
        if math.isfinite(p.lx) and math.isfinite(p.ly) and all(a.binding in finite for a in atts.values()):
            keep.append(p.id)
    return sub_book(book, keep)


def graph_based_book(graph: GraphSpec, L: float) -> Book:
    """Build ``graph x [0, L]``: one ``length x L`` page per edge.

    Vertex ``v`` becomes the transverse binding ``v:<v>`` (length L) glued to the
    W side of outgoing and the E side of incoming edges; edge ``e`` gets private
    lateral bindings ``e:<e>:S`` and ``e:<e>:N``.
    """
    if not L > 0:
        raise BookError(f"width must be positive, got {L}")
    problems = graph.check()
    if problems:
        raise BookError("; ".join(problems))
    if not graph.is_connected():
        raise BookError("graph is not connected")

    pages, bindings, atts = [], [], []
    for v in graph.vertices:
        bindings.append(Binding(f"v:{v}", L, dirichlet=v in graph.dirichlet))
    for e in graph.edges:
        pages.append(Page(e.id, e.length, L))
        bindings.append(Binding(f"e:{e.id}:S", e.length))
        bindings.append(Binding(f"e:{e.id}:N", e.length))
        atts.append(Attachment(e.id, "S", f"e:{e.id}:S"))
        atts.append(Attachment(e.id, "N", f"e:{e.id}:N"))
        atts.append(Attachment(e.id, "W", f"v:{e.source}"))
        if e.target is not None:
            atts.append(Attachment(e.id, "E", f"v:{e.target}"))
    return Book(tuple(pages), tuple(bindings), tuple(atts), product=ProductInfo(graph, L))


def truncate_graph(graph: GraphSpec, T: float, far_side: str = "dirichlet") -> GraphSpec:
    """Cut every infinite edge at length T, ending it at a fresh vertex."""
    if not T > 0:
        raise BookError(f"truncation length must be positive, got {T}")
    vertices = list(graph.vertices)
    dirichlet = list(graph.dirichlet)
    edges = []
    for e in graph.edges:
        if math.isfinite(e.length):
            edges.append(e)
            continue
        far = f"{e.id}:far"
        vertices.append(far)
        if far_side == "dirichlet":
            dirichlet.append(far)
        edges.append(Edge(e.id, e.source, far, T))
    return GraphSpec(tuple(vertices), tuple(edges), tuple(dirichlet))


def truncate_book(book: Book, T: float, far_side: str = "dirichlet") -> Book:
    """Replace every infinite length by T.

    Infinite bindings become length-T bindings.  The far side created on each
    truncated axis gets a fresh private binding ``<page>:far:<axis>``; with
    ``far_side="dirichlet"`` (default) it carries homogeneous Dirichlet data,
    with ``far_side="neumann"`` it is left free.
    """
    if not T > 0:
        raise BookError(f"truncation length must be positive, got {T}")
    if far_side not in ("dirichlet", "neumann"):
        raise ValueError(f"far_side must be 'dirichlet' or 'neumann', got {far_side!r}")
    if book.is_compact:
        return book

    def cut(x):
        return x if math.isfinite(x) else T

    bindings = [replace(b, length=cut(b.length)) for b in book.bindings]
    pages, atts = [], list(book.attachments)
    for p in book.pages:
        axes = tuple(ax for ax, ln in (("x", p.lx), ("y", p.ly)) if not math.isfinite(ln))
        new = replace(p, lx=cut(p.lx), ly=cut(p.ly), truncated=tuple(sorted(set(p.truncated) | set(axes))))
        pages.append(new)
        for ax in axes:
            side = "E" if ax == "x" else "N"
            bid = f"{p.id}:far:{ax}"
            bindings.append(Binding(bid, new.side_length(side), dirichlet=far_side == "dirichlet"))
            atts.append(Attachment(p.id, side, bid))
    product = None
    if book.product is not None:
        product = ProductInfo(truncate_graph(book.product.graph, T, far_side), book.product.width)
    return Book(tuple(pages), tuple(bindings), tuple(atts), product=product)


def rescaled_product_book(graph: GraphSpec) -> Book:
    """``graph x [0, 1]``, the reference domain for width-dependent problems."""
    return graph_based_book(graph, 1.0)

"""Ready-made books and graphs used throughout the experiments."""

from __future__ import annotations

import math

from .topology import INF, Attachment, Binding, Book, Edge, GraphSpec, Page, graph_based_book


def torus_book(a: float = 1.0, b: float = 1.0) -> Book:
    """Single page with both pairs of opposite sides identified."""
    return Book(
        pages=(Page("P1", a, b),),
        bindings=(Binding("B0", a), Binding("B1", b)),
        attachments=(
            Attachment("P1", "S", "B0"),
            Attachment("P1", "N", "B0"),
            Attachment("P1", "W", "B1"),
            Attachment("P1", "E", "B1"),
        ),
    )


def square_book(a: float = 1.0, b: float | None = None) -> Book:
    b = a if b is None else b
    return Book(
        pages=(Page("P1", a, b),),
        bindings=tuple(Binding(f"B{s}", a if s in "SN" else b) for s in "SNWE"),
        attachments=tuple(Attachment("P1", s, f"B{s}") for s in "SNWE"),
    )


def half_plane_book() -> Book:
    """Two quarter planes glued along one half-line."""
    return Book(
        pages=(Page("Q1", INF, INF), Page("Q2", INF, INF)),
        bindings=(Binding("B0", INF), Binding("B1", INF), Binding("B2", INF)),
        attachments=(
            Attachment("Q1", "W", "B0"),
            Attachment("Q2", "W", "B0"),
            Attachment("Q1", "S", "B1"),
            Attachment("Q2", "S", "B2"),
        ),
    )


def loop_line_graph(T: float) -> GraphSpec:
    """A loop of length T: the periodic truncation of the real line."""
    return GraphSpec(("v0",), (Edge("e0", "v0", "v0", T),))


def real_line_graph() -> GraphSpec:
    """Two half-lines glued at a degree-two vertex."""
    return GraphSpec(("v0",), (Edge("left", "v0", None, INF), Edge("right", "v0", None, INF)))


def interval_graph(length: float = 1.0) -> GraphSpec:
    return GraphSpec(("a", "b"), (Edge("e0", "a", "b", length),))


def star_graph(n: int = 3, length: float = INF) -> GraphSpec:
    if math.isfinite(length):
        vertices = ("c",) + tuple(f"t{k}" for k in range(n))
        edges = tuple(Edge(f"e{k}", "c", f"t{k}", length) for k in range(n))
    else:
        vertices = ("c",)
        edges = tuple(Edge(f"e{k}", "c", None, INF) for k in range(n))
    return GraphSpec(vertices, edges)


def triangle_graph(length: float = 1.0) -> GraphSpec:
    return GraphSpec(
        ("a", "b", "c"),
        (Edge("ab", "a", "b", length), Edge("bc", "b", "c", length), Edge("ca", "c", "a", length)),
    )


def tadpole_graph(loop: float = 2 * math.pi, tail: float = INF) -> GraphSpec:
    if math.isfinite(tail):
        return GraphSpec(("v0", "t"), (Edge("loop", "v0", "v0", loop), Edge("tail", "v0", "t", tail)))
    return GraphSpec(("v0",), (Edge("loop", "v0", "v0", loop), Edge("tail", "v0", None, INF)))


def dumbbell_graph(loop: float = 2 * math.pi, bar: float = 2.0) -> GraphSpec:
    return GraphSpec(
        ("a", "b"),
        (Edge("la", "a", "a", loop), Edge("bar", "a", "b", bar), Edge("lb", "b", "b", loop)),
    )


def star_book(n: int = 3, L: float = 1.0) -> Book:
    return graph_based_book(star_graph(n), L)


def tadpole_book(L: float = 1.0, loop: float = 2 * math.pi) -> Book:
    return graph_based_book(tadpole_graph(loop), L)


def dumbbell_book(L: float = 1.0) -> Book:
    return graph_based_book(dumbbell_graph(), L)


def strip_book(L: float = 1.0) -> Book:
    """Infinite straight strip: two half-strips glued along their width-L binding."""
    return graph_based_book(real_line_graph(), L)

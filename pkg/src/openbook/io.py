"""JSON book/graph specifications, result serialization and field dumps.

Floats are written with ``repr`` (shortest round-trip form, at most 17
significant digits) so identical runs produce byte-identical files.
Infinite lengths are spelled ``"inf"``.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any, Union

import numpy as np

from .discretization import DiscreteOperators, page_grid
from .topology import (
    Attachment,
    Binding,
    Book,
    BookError,
    Edge,
    GraphSpec,
    Page,
    ProductInfo,
    normalize_side,
    validate_book,
)


class SpecError(ValueError):
    """Schema violation; ``path`` addresses the offending JSON node."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


def fmt_float(x: float) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(x)


def _length(value, path):
    if isinstance(value, str):
        if value.strip().lower() in ("inf", "infinity", "+inf"):
            return math.inf
        raise SpecError(path, f"expected a number or \"inf\", got {value!r}")
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SpecError(path, f"expected a number or \"inf\", got {value!r}")
    if not value > 0:
        raise SpecError(path, f"length must be positive, got {value}")
    return float(value)


def _field(obj, key, path, kind=str, required=True, default=None):
    if not isinstance(obj, dict):
        raise SpecError(path, "expected an object")
    if key not in obj:
        if required:
            raise SpecError(f"{path}.{key}", "missing required field")
        return default
    val = obj[key]
    if kind is str and not isinstance(val, str):
        raise SpecError(f"{path}.{key}", f"expected a string, got {val!r}")
    if kind is list and not isinstance(val, list):
        raise SpecError(f"{path}.{key}", "expected an array")
    if kind is bool and not isinstance(val, bool):
        raise SpecError(f"{path}.{key}", "expected true or false")
    return val


def _parse_graph(doc: dict, path: str = "$") -> GraphSpec:
    vertices = _field(doc, "vertices", path, list)
    for i, v in enumerate(vertices):
        if not isinstance(v, str):
            raise SpecError(f"{path}.vertices[{i}]", f"expected a string, got {v!r}")
    known = set(vertices)
    edges = []
    for i, e in enumerate(_field(doc, "edges", path, list)):
        ep = f"{path}.edges[{i}]"
        eid = _field(e, "id", ep)
        src = _field(e, "from", ep)
        tgt = e.get("to") if isinstance(e, dict) else None
        length = _length(_field(e, "length", ep, kind=None), f"{ep}.length")
        if src not in known:
            raise SpecError(f"{ep}.from", f"unknown vertex {src!r}")
        if tgt is not None and tgt not in known:
            raise SpecError(f"{ep}.to", f"unknown vertex {tgt!r}")
        if tgt is None and math.isfinite(length):
            raise SpecError(f"{ep}.to", "finite edges need two endpoints")
        if tgt is not None and math.isinf(length):
            raise SpecError(f"{ep}.to", "infinite edges have a single endpoint; omit \"to\"")
        edges.append(Edge(eid, src, tgt, length))
    dirichlet = _field(doc, "dirichlet", path, list, required=False, default=[])
    for i, v in enumerate(dirichlet):
        if v not in known:
            raise SpecError(f"{path}.dirichlet[{i}]", f"unknown vertex {v!r}")
    g = GraphSpec(tuple(vertices), tuple(edges), tuple(dirichlet))
    problems = g.check()
    if problems:
        raise SpecError(path, "; ".join(problems))
    return g


def _parse_book(doc: dict, path: str = "$") -> Book:
    pages = []
    for i, p in enumerate(_field(doc, "pages", path, list)):
        pp = f"{path}.pages[{i}]"
        truncated = _field(p, "truncated", pp, list, required=False, default=[])
        pages.append(Page(
            _field(p, "id", pp),
            _length(_field(p, "lx", pp, kind=None), f"{pp}.lx"),
            _length(_field(p, "ly", pp, kind=None), f"{pp}.ly"),
            tuple(truncated),
        ))
    bindings = []
    for i, b in enumerate(_field(doc, "bindings", path, list)):
        bp = f"{path}.bindings[{i}]"
        bindings.append(Binding(
            _field(b, "id", bp),
            _length(_field(b, "length", bp, kind=None), f"{bp}.length"),
            _field(b, "dirichlet", bp, bool, required=False, default=False),
        ))
    page_ids = {p.id for p in pages}
    binding_ids = {b.id for b in bindings}
    atts = []
    for i, a in enumerate(_field(doc, "attachments", path, list)):
        ap = f"{path}.attachments[{i}]"
        page = _field(a, "page", ap)
        binding = _field(a, "binding", ap)
        if page not in page_ids:
            raise SpecError(f"{ap}.page", f"unknown page {page!r}")
        if binding not in binding_ids:
            raise SpecError(f"{ap}.binding", f"unknown binding {binding!r}")
        try:
            side = normalize_side(_field(a, "side", ap))
        except ValueError as exc:
            raise SpecError(f"{ap}.side", str(exc)) from None
        orientation = _field(a, "orientation", ap, required=False, default="forward")
        if orientation not in ("forward", "reversed"):
            raise SpecError(f"{ap}.orientation", f"expected \"forward\" or \"reversed\", got {orientation!r}")
        atts.append(Attachment(page, side, binding, orientation))
    product = None
    if isinstance(doc, dict) and "product" in doc:
        prod = doc["product"]
        product = ProductInfo(
            _parse_graph(_field(prod, "graph", f"{path}.product", kind=None), f"{path}.product.graph"),
            _length(_field(prod, "width", f"{path}.product", kind=None), f"{path}.product.width"),
        )
    return Book(tuple(pages), tuple(bindings), tuple(atts), product=product)


def parse_book_spec(text: str) -> Union[Book, GraphSpec]:
    """Parse a JSON book or graph document.

    Books are validated; validation failures raise ``BookError`` listing all
    violations.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError("$", f"malformed JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise SpecError("$", "expected a JSON object")
    if "pages" in doc:
        book = _parse_book(doc)
        report = validate_book(book)
        if not report.ok:
            raise BookError(str(report))
        return book
    if "vertices" in doc:
        return _parse_graph(doc)
    raise SpecError("$", "expected a book (\"pages\") or a graph (\"vertices\")")


def _len_out(x):
    return "inf" if math.isinf(x) else x


def graph_to_dict(g: GraphSpec) -> dict:
    d: dict[str, Any] = {"vertices": list(g.vertices), "edges": []}
    for e in g.edges:
        ed = {"id": e.id, "from": e.source}
        if e.target is not None:
            ed["to"] = e.target
        ed["length"] = _len_out(e.length)
        d["edges"].append(ed)
    if g.dirichlet:
        d["dirichlet"] = list(g.dirichlet)
    return d


def book_to_dict(book: Book) -> dict:
    pages = []
    for p in book.pages:
        pd = {"id": p.id, "lx": _len_out(p.lx), "ly": _len_out(p.ly)}
        if p.truncated:
            pd["truncated"] = list(p.truncated)
        pages.append(pd)
    bindings = []
    for b in book.bindings:
        bd = {"id": b.id, "length": _len_out(b.length)}
        if b.dirichlet:
            bd["dirichlet"] = True
        bindings.append(bd)
    d = {
        "pages": pages,
        "bindings": bindings,
        "attachments": [
            {"page": a.page, "side": a.side, "binding": a.binding, "orientation": a.orientation}
            for a in book.attachments
        ],
    }
    if book.product is not None:
        d["product"] = {"graph": graph_to_dict(book.product.graph), "width": book.product.width}
    return d


def serialize_spec(obj: Union[Book, GraphSpec]) -> str:
    d = book_to_dict(obj) if isinstance(obj, Book) else graph_to_dict(obj)
    return dumps(d)


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else fmt_float(x)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dumps(obj) -> str:
    """Deterministic JSON: sorted keys are not imposed, insertion order is."""
    return json.dumps(_plain(obj), indent=2, allow_nan=False) + "\n"


CSV_COLUMNS = ("L", "level", "transverse_fraction", "iterations", "residual", "converged")


def sweep_csv(records) -> str:
    lines = [",".join(CSV_COLUMNS)]
    for r in records:
        lines.append(",".join((
            fmt_float(r.L),
            fmt_float(r.level),
            fmt_float(r.transverse_fraction),
            str(int(r.iterations)),
            fmt_float(r.residual),
            "true" if r.converged else "false",
        )))
    return "\n".join(lines) + "\n"


def read_sweep_csv(text: str) -> list[dict]:
    lines = text.strip().splitlines()
    header = lines[0].split(",")
    if tuple(header) != CSV_COLUMNS:
        raise ValueError(f"unexpected header {header}")
    rows = []
    for line in lines[1:]:
        vals = line.split(",")
        rows.append({
            "L": float(vals[0]),
            "level": float(vals[1]),
            "transverse_fraction": float(vals[2]),
            "iterations": int(vals[3]),
            "residual": float(vals[4]),
            "converged": vals[5] == "true",
        })
    return rows


def field_page_csv(u: np.ndarray, ops: DiscreteOperators, page_id: str) -> str:
    """One page of a field: header line, metadata line, then ``nx`` rows of ``ny`` values."""
    nx, ny = ops.plan.dims[page_id]
    hx, hy = ops.plan.spacings[page_id]
    grid = page_grid(u, ops, page_id)
    lines = ["page_id,nx,ny,hx,hy", f"{page_id},{nx},{ny},{fmt_float(hx)},{fmt_float(hy)}"]
    lines.extend(",".join(fmt_float(x) for x in row) for row in grid)
    return "\n".join(lines) + "\n"


def read_field_page_csv(text: str) -> tuple[dict, np.ndarray]:
    lines = text.strip().splitlines()
    if lines[0] != "page_id,nx,ny,hx,hy":
        raise ValueError("not a field dump")
    pid, nx, ny, hx, hy = lines[1].split(",")
    grid = np.array([[float(x) for x in line.split(",")] for line in lines[2:]])
    meta = {"page_id": pid, "nx": int(nx), "ny": int(ny), "hx": float(hx), "hy": float(hy)}
    if grid.shape != (meta["nx"], meta["ny"]):
        raise ValueError(f"grid shape {grid.shape} does not match header")
    return meta, grid


def dump_field(u: np.ndarray, ops: DiscreteOperators, directory: Path) -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    out = []
    for p in ops.book.pages:
        safe = "".join(c if c.isalnum() or c in "-_." else "_" for c in p.id)
        path = directory / f"field_{safe}.csv"
        path.write_text(field_page_csv(u, ops, p.id))
        out.append(path)
    return out

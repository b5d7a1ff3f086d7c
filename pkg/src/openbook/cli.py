"""Command-line entry point: ``openbook <command> --input spec.json ...``.

Commands: spectrum, solve, sweep, lmin, decay, report.  Exit codes: 0 on
success, 2 on invalid input or configuration, 3 when a solve did not
converge, 4 on I/O failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import experiments as ex
from .discretization import MeshError, assemble_graph_operators, discretize, lift_graph_field
from .functionals import NehariError, Params
from .io import SpecError, dump_field, dumps, parse_book_spec, sweep_csv
from .solvers import (
    NoConvergence,
    SolverError,
    best_report,
    graph_ground_state,
    multi_start_ground_state,
    spectral_bottom,
)
from .topology import BookError, GraphSpec, graph_based_book, rescaled_product_book, truncate_book, truncate_graph

EXIT_OK, EXIT_INVALID, EXIT_NOCONV, EXIT_IO = 0, 2, 3, 4
COMMANDS = ("spectrum", "solve", "sweep", "lmin", "decay", "report")

log = logging.getLogger("openbook")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    input: Path
    omega: float = 1.0
    p: float = 3.0
    L: Optional[float] = None
    widths: tuple[float, ...] = ()
    bracket: Optional[tuple[float, float]] = None
    h: float = 0.1
    transverse_h: Optional[float] = None
    tol: float = 1e-8
    T: Optional[float] = None
    seeds: tuple[int, ...] = (0,)
    k: int = 3
    out: Optional[Path] = None

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        checks = [
            (self.omega > 0, "omega must be positive"),
            (self.p > 1, "p must exceed 1"),
            (self.h > 0, "h must be positive"),
            (self.tol > 0, "tol must be positive"),
            (self.L is None or self.L > 0, "L must be positive"),
            (self.T is None or self.T > 0, "truncation length must be positive"),
            (self.k >= 1, "k must be at least 1"),
            (list(self.widths) == sorted(self.widths), "widths must be ascending"),
            (all(w > 0 for w in self.widths), "widths must be positive"),
        ]
        if self.bracket is not None:
            checks.append((0 < self.bracket[0] < self.bracket[1], "bracket must satisfy 0 < lo < hi"))
        for ok, msg in checks:
            if not ok:
                raise ConfigError(msg)
        if self.command == "sweep" and not self.widths:
            raise ConfigError("sweep needs --widths")
        if self.command == "lmin" and self.bracket is None:
            raise ConfigError("lmin needs --bracket")

    @property
    def params(self) -> Params:
        return Params(self.omega, self.p, self.L)


def parse_widths(text: str) -> tuple[float, ...]:
    """``a:b:n`` (n evenly spaced values) or a comma-separated list."""
    try:
        if ":" in text:
            a, b, n = text.split(":")
            n = int(n)
            if n < 1:
                raise ValueError
            return tuple(float(x) for x in np.linspace(float(a), float(b), n))
        return tuple(float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a:b:n or a comma list, got {text!r}") from None


def parse_bracket(text: str) -> tuple[float, float]:
    try:
        lo, hi = (float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected lo,hi, got {text!r}") from None
    return lo, hi


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="openbook", description="Ground states of the NLS on open books.")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--input", required=True, type=Path, help="JSON book or graph specification")
    parser.add_argument("--omega", type=float, default=1.0)
    parser.add_argument("--p", type=float, default=3.0, help="nonlinearity exponent")
    parser.add_argument("--L", type=float, default=None, help="width for a graph-based book")
    parser.add_argument("--widths", type=parse_widths, default=(), help="a:b:n or comma list")
    parser.add_argument("--bracket", type=parse_bracket, default=None, help="lo,hi")
    parser.add_argument("--h", type=float, default=0.1, help="mesh size")
    parser.add_argument("--transverse-h", type=float, default=None, help="transverse mesh size on [0, 1]")
    parser.add_argument("--tol", type=float, default=1e-8)
    parser.add_argument("--truncate", type=float, default=None, metavar="T", help="truncation length of infinite sides")
    parser.add_argument("--seed", type=int, default=0, help="first random seed")
    parser.add_argument("--starts", type=int, default=1, help="number of random starts")
    parser.add_argument("--k", type=int, default=3, help="eigenpairs for spectrum")
    parser.add_argument("--out", type=Path, default=None, help="output file (stdout when omitted)")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    return RunConfig(
        command=ns.command, input=ns.input, omega=ns.omega, p=ns.p, L=ns.L, widths=tuple(ns.widths),
        bracket=ns.bracket, h=ns.h, transverse_h=ns.transverse_h, tol=ns.tol, T=ns.truncate,
        seeds=tuple(range(ns.seed, ns.seed + max(ns.starts, 0))), k=ns.k, out=ns.out,
    )


def _truncation(cfg: RunConfig) -> float:
    return cfg.T if cfg.T is not None else ex.default_truncation(cfg.omega)


def _compact_graph(g: GraphSpec, cfg: RunConfig) -> GraphSpec:
    return g if g.is_compact else truncate_graph(g, _truncation(cfg))


def _operators(spec, cfg: RunConfig):
    """Mesh for a book (truncated if needed), a graph, or a graph widened by ``--L``."""
    if isinstance(spec, GraphSpec):
        g = _compact_graph(spec, cfg)
        if cfg.L is None:
            return assemble_graph_operators(g, cfg.h), Params(cfg.omega, cfg.p)
        ops = discretize(rescaled_product_book(g), cfg.h, transverse_h=cfg.transverse_h or min(cfg.h, cfg.h / cfg.L))
        return ops, cfg.params
    book = spec if spec.is_compact else truncate_book(spec, _truncation(cfg))
    if cfg.L is not None:
        raise ConfigError("--L applies to graph inputs only")
    return discretize(book, cfg.h), Params(cfg.omega, cfg.p)


def _need_graph(spec, cfg):
    if not isinstance(spec, GraphSpec):
        raise ConfigError(f"{cfg.command} needs a graph specification")
    return spec


def _need_book(spec, cfg):
    if isinstance(spec, GraphSpec):
        return graph_based_book(spec, cfg.L if cfg.L is not None else 1.0)
    return spec


def _write(cfg: RunConfig, text: str, path: Optional[Path] = None):
    path = path or cfg.out
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def cmd_spectrum(spec, cfg: RunConfig) -> int:
    ops, _ = _operators(spec, cfg)
    vals, _ = spectral_bottom(ops, cfg.k)
    _write(cfg, dumps({"n_dofs": ops.n, "h": cfg.h, "eigenvalues": [float(v) for v in vals]}))
    return EXIT_OK


def cmd_solve(spec, cfg: RunConfig) -> int:
    ops, params = _operators(spec, cfg)
    if ops.product is not None and params.L is not None:
        v, _ = graph_ground_state(ops.product.graph_ops, params, tol=cfg.tol, seeds=cfg.seeds)
        u, reps = multi_start_ground_state(
            ops, params, seeds=cfg.seeds, tol=cfg.tol, base=lift_graph_field(v, ops), require_converged=False
        )
    else:
        u, reps = multi_start_ground_state(
            ops, params, seeds=cfg.seeds, tol=cfg.tol, inits=ex.generic_inits(ops, params.omega),
            require_converged=False,
        )
    best = best_report(reps, cfg.tol)
    doc = {"params": {"omega": params.omega, "p": params.p, "L": params.L}, "h": cfg.h, "n_dofs": ops.n}
    doc["result"] = best.to_dict()
    doc["starts"] = [{"init": r.init, "level": r.level, "converged": r.converged} for r in reps]
    _write(cfg, dumps(doc))
    if cfg.out is not None and ops.book is not None:
        dump_field(u, ops, Path(cfg.out).parent)
    return EXIT_OK if best.converged else EXIT_NOCONV


def cmd_sweep(spec, cfg: RunConfig) -> int:
    g = _need_graph(spec, cfg)
    records = ex.sweep_widths(
        g, Params(cfg.omega, cfg.p), cfg.widths, cfg.h, cfg.tol, cfg.seeds, cfg.transverse_h, _truncation(cfg)
    )
    _write(cfg, sweep_csv(records))
    return EXIT_OK if all(r.converged for r in records) else EXIT_NOCONV


def cmd_lmin(spec, cfg: RunConfig) -> int:
    g = _need_graph(spec, cfg)
    res = ex.detect_lmin(
        g, Params(cfg.omega, cfg.p), cfg.bracket, cfg.h, cfg.tol, transverse_h=cfg.transverse_h, T=_truncation(cfg)
    )
    doc = res.to_dict()
    evidence = sweep_csv(res.evidence)
    if cfg.out is not None:
        ev_path = Path(cfg.out).with_name(Path(cfg.out).stem + "_evidence.csv")
        doc["evidence_csv"] = ev_path.name
        ev_path.write_text(evidence)
    _write(cfg, dumps(doc))
    return EXIT_OK


def cmd_decay(spec, cfg: RunConfig) -> int:
    book = _need_book(spec, cfg)
    if book.is_compact:
        raise ConfigError("decay needs a book with infinite sides")
    tb = truncate_book(book, _truncation(cfg))
    ops = discretize(tb, cfg.h)
    params = Params(cfg.omega, cfg.p)
    u, reps = ex.book_ground_state(ops, params, tol=cfg.tol, seeds=cfg.seeds)
    best = best_report(reps, cfg.tol)
    fits = []
    for page in tb.pages:
        for axis in page.truncated:
            try:
                fits.append(ex.decay_fit(u, ops, page.id, params, axis).to_dict())
            except ex.DecayFitError as exc:
                fits.append({"page": page.id, "axis": axis, "error": str(exc)})
    _write(cfg, dumps({"T": _truncation(cfg), "level": best.level, "converged": best.converged, "fits": fits}))
    return EXIT_OK if best.converged else EXIT_NOCONV


def cmd_report(spec, cfg: RunConfig) -> int:
    book = _need_book(spec, cfg)
    if book.is_compact:
        raise ConfigError("report needs a book with infinite sides")
    tb = truncate_book(book, _truncation(cfg))
    rep = ex.existence_report(tb, Params(cfg.omega, cfg.p), cfg.h, cfg.tol, seeds=cfg.seeds)
    _write(cfg, dumps(rep.to_dict()))
    return EXIT_OK if rep.level_converged and rep.strip_converged else EXIT_NOCONV


HANDLERS = {
    "spectrum": cmd_spectrum,
    "solve": cmd_solve,
    "sweep": cmd_sweep,
    "lmin": cmd_lmin,
    "decay": cmd_decay,
    "report": cmd_report,
}


def run(cfg: RunConfig) -> int:
    try:
        text = Path(cfg.input).read_text(encoding="utf-8")
    except OSError as exc:
        print(f"error: cannot read {cfg.input}: {exc.strerror}", file=sys.stderr)
        return EXIT_IO
    try:
        spec = parse_book_spec(text)
        return HANDLERS[cfg.command](spec, cfg)
    except (SpecError, BookError, ConfigError, MeshError, ex.BracketError, ex.DecayFitError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (NoConvergence, NehariError, SolverError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NOCONV
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = config_from_args(ns)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())

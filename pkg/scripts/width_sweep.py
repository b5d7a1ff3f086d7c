"""Ground-state level versus page width over a truncated line, with the critical width.

    python3 scripts/width_sweep.py --h 0.1 --out sweep.csv
"""

import argparse
import math
from pathlib import Path

import numpy as np

from openbook.catalog import loop_line_graph
from openbook.experiments import WidthProblem, detect_lmin, sweep_widths
from openbook.functionals import Params
from openbook.io import sweep_csv


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--T", type=float, default=40.0, help="length of the periodic line")
    ap.add_argument("--h", type=float, default=0.1)
    ap.add_argument("--tol", type=float, default=1e-8)
    ap.add_argument("--widths", type=str, default="0.25:3.0:12", help="start:stop:count")
    ap.add_argument("--no-lmin", action="store_true", help="skip the bisection for the critical width")
    ap.add_argument("--out", type=Path, default=None)
    args = ap.parse_args()

    a, b, n = args.widths.split(":")
    widths = [float(w) for w in np.linspace(float(a), float(b), int(n))]
    graph = loop_line_graph(args.T)
    params = Params(1.0, 3.0)
    problem = WidthProblem(graph, 1.0, 3.0, args.h, max_width=max(widths), tol=args.tol)
    records = sweep_widths(graph, params, widths, args.h, args.tol, problem=problem)
    text = sweep_csv(records)
    if args.out:
        args.out.write_text(text)
    print(text, end="")

    if not args.no_lmin:
        res = detect_lmin(graph, params, (1.5, 2.5), args.h, args.tol, problem=problem)
        lo, hi = res.bracket
        print(f"critical width {res.estimate:.4f} in [{lo:.4f}, {hi:.4f}]; "
              f"linear prediction pi/sqrt(3) = {math.pi / math.sqrt(3):.4f}")


if __name__ == "__main__":
    main()

"""Level times sqrt(width) for wide books over a truncated line."""

import argparse

from openbook.catalog import loop_line_graph
from openbook.experiments import large_width_bound_check
from openbook.functionals import Params


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--T", type=float, default=40.0)
    ap.add_argument("--h", type=float, default=0.25)
    ap.add_argument("--widths", type=float, nargs="+", default=[10.0, 20.0, 40.0])
    args = ap.parse_args()

    rep = large_width_bound_check(loop_line_graph(args.T), Params(1.0, 3.0), args.widths, args.h)
    print(f"level at zero width {rep.level0:.6f}; trial constant {rep.constant:.4f}")
    print("L,level,level*sqrt(L),trial_level,converged")
    for r in rep.rows:
        print(f"{r['L']:g},{r['level']:.6f},{r['scaled']:.4f},{r['trial_level']:.6f},{r['converged']}")
    print(f"decreasing={rep.decreasing} below_plateau={rep.below_plateau} below_trial={rep.below_trial_level}")


if __name__ == "__main__":
    main()

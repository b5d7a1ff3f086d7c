"""Exponential decay along the ends of a truncated star book, plus the strip comparison."""

import argparse

from openbook.catalog import star_book, tadpole_book
from openbook.discretization import discretize
from openbook.experiments import book_ground_state, decay_fit, existence_report
from openbook.functionals import Params
from openbook.topology import truncate_book


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--T", type=float, default=30.0)
    ap.add_argument("--h", type=float, default=0.1)
    ap.add_argument("--omega", type=float, default=1.0)
    args = ap.parse_args()
    params = Params(args.omega, 3.0)

    book = truncate_book(star_book(3, 1.0), args.T)
    ops = discretize(book, args.h)
    u, _ = book_ground_state(ops, params, seeds=(0,))
    for page in ("e0", "e1", "e2"):
        fit = decay_fit(u, ops, page, params)
        print(f"{page}: rate {fit.rate:.4f} (lower bound {fit.bound:.2f}) on x in [{fit.window[0]:.1f}, {fit.window[1]:.1f}]")

    for name, b in (("star", book), ("tadpole", truncate_book(tadpole_book(1.0), args.T))):
        rep = existence_report(b, params, args.h, seeds=(0,))
        print(f"{name}: level {rep.level:.6f}, strip level {rep.strip_level:.6f} -> {rep.status}")


if __name__ == "__main__":
    main()

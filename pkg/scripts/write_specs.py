"""Write the catalog geometries as JSON specs for the command line.

    python3 scripts/write_specs.py specs/
"""

import argparse
from pathlib import Path

from openbook.catalog import loop_line_graph, square_book, star_book, tadpole_book, torus_book, triangle_graph
from openbook.io import serialize_spec

CATALOG = {
    "torus": torus_book(),
    "square": square_book(),
    "star3": star_book(3, 1.0),
    "tadpole": tadpole_book(1.0),
    "triangle_graph": triangle_graph(),
    "line40_graph": loop_line_graph(40.0),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("outdir", type=Path)
    args = ap.parse_args()
    args.outdir.mkdir(parents=True, exist_ok=True)
    for name, obj in CATALOG.items():
        path = args.outdir / f"{name}.json"
        path.write_text(serialize_spec(obj))
        print(path)


if __name__ == "__main__":
    main()

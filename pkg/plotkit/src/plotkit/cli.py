"""One command-line script per figure kind."""

from __future__ import annotations

import argparse
import sys

from .figures import FigureSpec, PlotError, render


def _main(kind: str, argv=None) -> int:
    parser = argparse.ArgumentParser(prog=f"plotkit-{kind.replace('_', '-')}")
    parser.add_argument("inputs", nargs="+",
                        help="diagnostics CSV(s), or one snapshot for phase-space")
    parser.add_argument("output", help="image file to write (png/pdf/svg)")
    parser.add_argument("--columns", nargs="*", default=[],
                        help="explicit CSV columns to plot")
    parser.add_argument("--yscale", choices=("linear", "log", "symlog"))
    parser.add_argument("--title")
    args = parser.parse_args(argv)
    try:
        path = render(FigureSpec(inputs=args.inputs, kind=kind, output=args.output,
                                 columns=args.columns, yscale=args.yscale,
                                 title=args.title))
    except PlotError as exc:
        print(f"error (plot): {exc}", file=sys.stderr)
        return 2
    print(path)
    return 0


def field_mode_main(argv=None) -> int:
    return _main("field_mode", argv)


def l2_main(argv=None) -> int:
    return _main("l2", argv)


def balances_main(argv=None) -> int:
    return _main("balances", argv)


def boundary_max_main(argv=None) -> int:
    return _main("boundary_max", argv)


def phase_space_main(argv=None) -> int:
    return _main("phase_space", argv)


if __name__ == "__main__":
    sys.exit(_main(sys.argv[1], sys.argv[2:]))

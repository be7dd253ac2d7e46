"""Otto-cycle figure: entropy and internal energy through the four strokes.

Series mapping: panel (a) plots column S, panel (b) column U, both against t,
with stroke boundaries marked. Input: one `ottoqed otto` bundle CSV.
"""

from __future__ import annotations

import argparse
import sys

from .bundles import BundleError, load_bundle
from .render import FigureSpec, PanelSpec, SeriesSpec, render


def build_spec(csv_path: str, downsample: int = 1) -> FigureSpec:
    df = load_bundle(csv_path)
    panels = [
        PanelSpec(df, (SeriesSpec("S", "S"),),
                  ylabel=r"$S(t)$", title="entropy", mark_strokes=True,
                  source=str(csv_path)),
        PanelSpec(df, (SeriesSpec("U", "U"),),
                  ylabel=r"$U(t)$  [$\hbar\omega$]", title="internal energy",
                  mark_strokes=True, source=str(csv_path)),
    ]
    return FigureSpec(panels, ncols=1, downsample=downsample)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="Render the Otto-cycle S(t)/U(t) figure")
    parser.add_argument("--csv", required=True, help="ottoqed otto bundle CSV")
    parser.add_argument("--out", required=True, help="output image path (.png/.pdf)")
    parser.add_argument("--downsample", type=int, default=1,
                        help="plot every k-th row (recorded in the margin)")
    args = parser.parse_args(argv)
    try:
        spec = build_spec(args.csv, args.downsample)
        path = render(spec, args.out)
    except (BundleError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

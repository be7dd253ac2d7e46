"""Work-stroke figure family: W(t) plus averaged quantum vs classical power.

Series mapping: panel (a) plots column W of the first bundle; each further
panel overlays P_av (black) and P_c_av (red) of one bundle. Inputs: one or
more `ottoqed stroke` bundle CSVs (e.g. on-resonance first, then detuned).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .bundles import BundleError, load_bundle
from .render import FigureSpec, PanelSpec, SeriesSpec, render

POWER_SERIES = (
    SeriesSpec("P_av", r"$P_{av}$", color="black"),
    SeriesSpec("P_c_av", r"$P^{c}_{av}$", color="red"),
)


def build_spec(csv_paths: list[str], downsample: int = 1) -> FigureSpec:
    frames = [(p, load_bundle(p)) for p in csv_paths]
    first_path, first = frames[0]
    panels = [
        PanelSpec(first, (SeriesSpec("W", "W"),),
                  ylabel=r"$W(t)$  [$\hbar\omega$]", title="extracted work",
                  source=str(first_path)),
    ]
    for path, df in frames:
        panels.append(
            PanelSpec(df, POWER_SERIES,
                      ylabel=r"$P$  [$\hbar\omega^2$]",
                      title=Path(path).stem, zero_line=True, source=str(path))
        )
    return FigureSpec(panels, ncols=2, downsample=downsample)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        description="Render W(t) and P_av vs P_c_av panels from stroke bundles"
    )
    parser.add_argument("--csv", required=True, action="append",
                        help="stroke bundle CSV (repeat for extra panels)")
    parser.add_argument("--out", required=True, help="output image path")
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

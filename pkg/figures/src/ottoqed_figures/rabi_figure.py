"""Rabi-model figure: sideband vs ADCE work extraction and their powers.

Series mapping: (a) column W of the sideband-regime bundle, (b) column W of
the ADCE bundle, (c)/(d) P_av (black) and P_c_av (red) of each. Inputs: the
`ottoqed rabi` bundles for the two regimes.
"""

from __future__ import annotations

import argparse
import sys

from .bundles import BundleError, load_bundle
from .render import FigureSpec, PanelSpec, SeriesSpec, render
from .power_figure import POWER_SERIES


def build_spec(jc_csv: str, adce_csv: str, downsample: int = 1) -> FigureSpec:
    jc = load_bundle(jc_csv)
    adce = load_bundle(adce_csv)
    w_label = r"$W(t)$  [$\hbar\omega$]"
    p_label = r"$P$  [$\hbar\omega^2$]"
    panels = [
        PanelSpec(jc, (SeriesSpec("W", "W"),), ylabel=w_label,
                  title="sideband regime", source=str(jc_csv)),
        PanelSpec(adce, (SeriesSpec("W", "W"),), ylabel=w_label,
                  title="ADCE regime", source=str(adce_csv)),
        PanelSpec(jc, POWER_SERIES, ylabel=p_label, title="sideband powers",
                  zero_line=True, source=str(jc_csv)),
        PanelSpec(adce, POWER_SERIES, ylabel=p_label, title="ADCE powers",
                  zero_line=True, source=str(adce_csv)),
    ]
    return FigureSpec(panels, ncols=2, downsample=downsample)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        description="Render the sideband-vs-ADCE work and power figure"
    )
    parser.add_argument("--jc", required=True, help="sideband-regime rabi bundle CSV")
    parser.add_argument("--adce", required=True, help="ADCE-regime rabi bundle CSV")
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument("--downsample", type=int, default=1,
                        help="plot every k-th row (recorded in the margin)")
    args = parser.parse_args(argv)
    try:
        spec = build_spec(args.jc, args.adce, args.downsample)
        path = render(spec, args.out)
    except (BundleError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

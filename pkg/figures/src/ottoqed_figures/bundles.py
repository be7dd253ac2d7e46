"""Loading and validation of ottoqed CSV bundles.

A bundle CSV carries the fixed header
``t,stroke,U,S,W,Q_a,Q_f,P_inst,P_av,P_c_av,pop_*`` with one row per retained
sample; the cumulative columns (W, Q_a, Q_f) and the averaged powers restart
at each stroke boundary. Rendering never mutates or reinterprets the data.
"""

from __future__ import annotations

import json
from pathlib import Path

import pandas as pd

BASE_COLUMNS = ("t", "stroke", "U", "S", "W", "Q_a", "Q_f", "P_inst", "P_av", "P_c_av")


class BundleError(ValueError):
    """The CSV bundle cannot be used for rendering."""


class EmptyBundleError(BundleError):
    """The CSV holds no data rows."""


class MissingColumnError(BundleError):
    """A referenced column is absent; carries the missing names."""

    def __init__(self, path, missing):
        self.missing = tuple(missing)
        super().__init__(f"{path}: missing column(s) {', '.join(self.missing)}")


def load_bundle(path: str | Path) -> pd.DataFrame:
    """Read a bundle CSV; rejects empty inputs and malformed headers."""
    path = Path(path)
    if not path.exists():
        raise BundleError(f"bundle not found: {path}")
    if path.stat().st_size == 0:
        raise EmptyBundleError(f"{path}: file is empty")
    df = pd.read_csv(path)
    if len(df) == 0:
        raise EmptyBundleError(f"{path}: no data rows")
    require_columns(df, BASE_COLUMNS, path)
    return df


def require_columns(df: pd.DataFrame, columns, path="bundle") -> None:
    missing = [c for c in columns if c not in df.columns]
    if missing:
        raise MissingColumnError(path, missing)


def load_summary(path: str | Path) -> dict:
    """Read the JSON summary written alongside the CSV."""
    path = Path(path)
    if not path.exists():
        raise BundleError(f"summary not found: {path}")
    return json.loads(path.read_text())


def stroke_boundaries(df: pd.DataFrame) -> list[tuple[str, float, float]]:
    """(label, t_start, t_end) for each contiguous stroke segment."""
    out = []
    for label, chunk in df.groupby((df["stroke"] != df["stroke"].shift()).cumsum()):
        out.append((chunk["stroke"].iloc[0], float(chunk["t"].iloc[0]),
                    float(chunk["t"].iloc[-1])))
    return out

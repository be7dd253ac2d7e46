"""Figure rendering for ottoqed result bundles (CSV time series + JSON summary)."""

__version__ = "0.1.0"

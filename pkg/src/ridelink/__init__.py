"""ridelink: batch analytics linking ride-hailing trips to a public-transit network.

The package is a staged pipeline: ingest trip CSVs, plan transit alternatives,
classify each trip's relationship to transit, aggregate onto a hexagonal grid,
assemble per-cell features, fit an ordered-boosting regressor, and explain it
with Shapley attributions, partial-dependence curves and threshold sweeps.
"""

__version__ = "0.1.0"

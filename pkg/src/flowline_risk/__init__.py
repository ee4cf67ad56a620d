"""Flowline spill-risk analysis.

Library for merging heterogeneous flowline datasets spatially, attributing
spills to lines, turning merged records into a design matrix, and running
supervised and unsupervised risk models with oracle-checked numerics. The
`flowline-risk` command drives the same stages end to end.
"""

from . import (
    config,
    crs,
    evaluation,
    features,
    figures,
    geometry,
    ingest,
    matcher,
    ml,
    numerics,
    pipeline,
    report,
    spatial_index,
    synth,
)

__version__ = "0.1.0"

__all__ = [
    "config",
    "crs",
    "evaluation",
    "features",
    "figures",
    "geometry",
    "ingest",
    "matcher",
    "ml",
    "numerics",
    "pipeline",
    "report",
    "spatial_index",
    "synth",
    "__version__",
]

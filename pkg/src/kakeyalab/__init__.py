"""kakeyalab: desk-scale experiments with curved tube families.

Subpackages cover curve families and geodesic charts (curves), finite
delta-separated sets and the discretization pipeline (deltasets), sparse
tube-grid rasterization (raster, with an optional compiled kernel), wedge
volumes and multilinear tube integrals (kakeya), cap covers and the
broad/narrow decomposition (broadnarrow), box-counting dimension
(dimension), the constant-curvature sharpness constructions (sharpness),
and the experiment driver (cli).
"""

from . import (
    broadnarrow,
    curves,
    deltasets,
    dimension,
    errors,
    kakeya,
    raster,
    serialize,
    sharpness,
)

__all__ = [
    "broadnarrow",
    "curves",
    "deltasets",
    "dimension",
    "errors",
    "kakeya",
    "raster",
    "serialize",
    "sharpness",
]
__version__ = "0.1.0"

"""Land-engraved-area comparison pipeline.

Takes 3D surface scans of fired-bullet lands through crosscut selection,
groove trimming, LOESS detrending, maximized lagged correlation, cyclic
phase scoring, clustering and variogram analysis, and packs the results
into a versioned JSON bundle served over HTTP for interactive review.
"""

__version__ = "0.1.0"

from .backend import backend_name

__all__ = ["backend_name", "__version__"]

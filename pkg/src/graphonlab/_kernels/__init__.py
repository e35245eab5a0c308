"""Hot numeric kernels with a compiled core and a NumPy fallback.

The Cython extension accelerates the pairwise slice-distance scans, the
only O(n^3) loops that BLAS cannot absorb. Set ``GRAPHONLAB_PURE=1`` to
force the NumPy implementation.
"""

import os

from . import _fallback

if os.environ.get("GRAPHONLAB_PURE"):
    BACKEND = "numpy"
    pairwise_l1 = _fallback.pairwise_l1
    twin_pairs = _fallback.twin_pairs
    min_pair_distance = _fallback.min_pair_distance
else:
    try:
        from ._core import min_pair_distance, pairwise_l1, twin_pairs

        BACKEND = "compiled"
    except ImportError:
        BACKEND = "numpy"
        pairwise_l1 = _fallback.pairwise_l1
        twin_pairs = _fallback.twin_pairs
        min_pair_distance = _fallback.min_pair_distance

__all__ = ["BACKEND", "pairwise_l1", "twin_pairs", "min_pair_distance"]

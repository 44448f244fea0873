"""Backend selection for the mining kernels.

The compiled ``_ckernels`` extension is used when it imports; otherwise the
numpy versions in ``_pykernels``. Set ``SEMZSL_PURE_PYTHON=1`` to force the
fallback.
"""
import os

from . import _pykernels

KIND_SIMILAR = _pykernels.KIND_SIMILAR
KIND_DISSIMILAR = _pykernels.KIND_DISSIMILAR

_impl = _pykernels
if not os.environ.get("SEMZSL_PURE_PYTHON"):
    try:
        from . import _ckernels as _impl
    except ImportError:
        pass

BACKEND = "cython" if _impl is not _pykernels else "numpy"
pair_cosines = _impl.pair_cosines
select_hardest = _impl.select_hardest

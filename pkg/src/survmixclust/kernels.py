"""Hot-loop dispatch.

The Cython extension ``survmixclust._kernels`` is used when it was built;
otherwise the numpy implementations in ``survmixclust._pykernels`` are used.
Setting ``SURVMIXCLUST_PURE_PYTHON=1`` forces the fallback.
"""

import os

from . import _pykernels

if os.environ.get("SURVMIXCLUST_PURE_PYTHON", "").strip() not in ("", "0"):
    _impl = _pykernels
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels
        BACKEND = "python"

gaussian_kernel_sum = _impl.gaussian_kernel_sum
concordance_counts = _impl.concordance_counts

__all__ = ["BACKEND", "gaussian_kernel_sum", "concordance_counts"]

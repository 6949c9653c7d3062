"""Hot numerical kernels with a compiled core and a numpy fallback.

The compiled extension is used when it imports cleanly. Setting the
environment variable ``LIPBATCH_PURE_PYTHON=1`` forces the numpy fallback.
``BACKEND`` reports which one is active.
"""

import os

from lipbatch.kernels import _pykernels

BACKEND = "python"
_impl = _pykernels

if not os.environ.get("LIPBATCH_PURE_PYTHON"):
    try:
        from lipbatch.kernels import _ckernels
    except ImportError:
        _ckernels = None
    else:
        _impl = _ckernels
        BACKEND = "cython"
else:
    _ckernels = None

eq_cross = _impl.eq_cross
gp_predict = _impl.gp_predict
mean_grad_hess = _impl.mean_grad_hess
log_penalizers = _impl.log_penalizers


def available_backends():
    """Map backend name to module for every backend that imports."""
    out = {"python": _pykernels}
    if _ckernels is not None:
        out["cython"] = _ckernels
    return out

"""Import-time choice between the compiled kernels and the numpy fallback.

Set ``PROBMORPH_PURE_PYTHON=1`` to force the fallback.
"""
import os

if os.environ.get("PROBMORPH_PURE_PYTHON", "") not in ("", "0"):
    from . import _pykernels as kernels
    BACKEND = "python"
else:
    try:
        from . import _ckernels as kernels
        BACKEND = "cython"
    except ImportError:
        from . import _pykernels as kernels
        BACKEND = "python"

ndtr_diff = kernels.ndtr_diff
normal_ball_logweights = kernels.normal_ball_logweights
cloud_ball_masses = kernels.cloud_ball_masses
stick_scan = kernels.stick_scan

__all__ = ["BACKEND", "kernels", "ndtr_diff", "normal_ball_logweights",
           "cloud_ball_masses", "stick_scan"]

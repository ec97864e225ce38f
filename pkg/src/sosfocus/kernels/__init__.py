"""Kernel backend selection.

The compiled Cython extension is preferred; the NumPy fallback is used when
it is missing or when SOSFOCUS_PURE is set in the environment (handy for
benchmarking the two against each other).
"""

import os

if os.environ.get("SOSFOCUS_PURE"):
    from . import _fallback as backend
    COMPILED = False
else:
    try:
        from . import _das as backend
        COMPILED = True
    except ImportError:
        from . import _fallback as backend
        COMPILED = False

das_sum = backend.das_sum
delay_gather = backend.delay_gather
deposit_pulses = backend.deposit_pulses

__all__ = ["das_sum", "delay_gather", "deposit_pulses", "COMPILED"]

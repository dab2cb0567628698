"""Kernel backend selection.

``SIFTSHADOW_NUMBA=0`` (or ``false``/``no``/``off``) forces the pure-numpy
kernels; anything else tries numba first and falls back to numpy if the
import fails.  ``benchmarks/bench_kernels.py`` times the two side by side.
"""

import os

_flag = os.environ.get("SIFTSHADOW_NUMBA", "1").strip().lower()
NUMBA_REQUESTED = _flag not in {"0", "false", "no", "off"}

if NUMBA_REQUESTED:
    try:
        from . import _kernels_numba as kernels

        USING_NUMBA = True
    except ImportError:  # numba missing or broken
        from . import _kernels_numpy as kernels

        USING_NUMBA = False
else:
    from . import _kernels_numpy as kernels

    USING_NUMBA = False

"""Kernel selection: compiled ``_ext`` if importable, else the numpy fallback.

Set ``PIECEABLE_KERNELS=python`` to force the fallback.
"""

from __future__ import annotations

import os

from . import _kernels as python_kernels

compiled_kernels = None
if os.environ.get("PIECEABLE_KERNELS", "").lower() != "python":
    try:
        from . import _ext as compiled_kernels
    except ImportError:
        compiled_kernels = None

kernels = compiled_kernels if compiled_kernels is not None else python_kernels
name = "compiled" if compiled_kernels is not None else "python"

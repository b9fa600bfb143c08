"""Hot scoring kernels with a compiled core and a NumPy fallback.

The Cython extension (`_fast`) is used when it was built at install time;
otherwise the NumPy implementation (`_py`) is selected. Set
``REQUERY_KERNEL=python`` to force the fallback (used by the kernel
comparison benchmark).
"""

import os

if os.environ.get("REQUERY_KERNEL", "").lower() == "python":
    from . import _py as impl

    BACKEND = "python"
else:
    try:
        from . import _fast as impl  # type: ignore[attr-defined]

        BACKEND = "native"
    except ImportError:
        from . import _py as impl

        BACKEND = "python"

bm25_accumulate = impl.bm25_accumulate
dot_rows = impl.dot_rows

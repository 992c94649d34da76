"""Kernel backend selection.

The compiled Cython module is preferred; the pure-Python module is the
fallback.  Set ``BERGERHOPF_PURE=1`` to force the fallback (used by the
benchmark and for debugging).
"""

import os

from ._pycore import MAX_EXPONENT, PACK_BITS, PACK_MASK, pack, unpack

if os.environ.get("BERGERHOPF_PURE"):
    from . import _pycore as _impl
else:
    try:
        from . import _core as _impl  # type: ignore[attr-defined]
    except ImportError:
        from . import _pycore as _impl

mul_terms = _impl.mul_terms
eval_terms = _impl.eval_terms
BACKEND = "compiled" if _impl.__name__.endswith("_core") else "python"


def backends():
    """Return the available kernel modules keyed by name."""
    out = {}
    from . import _pycore

    out["python"] = _pycore
    try:
        from . import _core  # type: ignore[attr-defined]

        out["compiled"] = _core
    except ImportError:
        pass
    return out

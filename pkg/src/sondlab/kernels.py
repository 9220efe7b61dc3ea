"""Backend selection for the hot RK4 loops.

The compiled ``_kernels`` extension is used when it imports; otherwise the
pure-Python ``_kernels_py`` module is used. Setting ``SONDLAB_PURE_PYTHON=1``
forces the fallback.
"""

import os
from types import ModuleType

from . import _kernels_py

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

_BACKENDS = {"python": _kernels_py}
if _compiled is not None:
    _BACKENDS["cython"] = _compiled

if os.environ.get("SONDLAB_PURE_PYTHON", "").strip() not in ("", "0") or _compiled is None:
    _active = _kernels_py
else:
    _active = _compiled


def backend() -> ModuleType:
    return _active


def backend_name() -> str:
    return _active.NAME


def available() -> list:
    return list(_BACKENDS)


def get(name: str) -> ModuleType:
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ValueError(f"kernel backend {name!r} not available; have {available()}") from None


def use(name: str) -> ModuleType:
    """Switch the active backend (process-wide); returns the previous one."""
    global _active
    previous = _active
    _active = get(name)
    return previous

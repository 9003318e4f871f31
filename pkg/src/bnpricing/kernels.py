"""Backend selection for the hot kernels.

The compiled Cython module is used when it imports; otherwise the pure-Python
reference implementation takes over.  Setting ``BNPRICING_PURE_PYTHON=1``
forces the fallback.
"""
import importlib
import os

_FORCE_PURE = os.environ.get("BNPRICING_PURE_PYTHON", "") not in ("", "0")


def get_backend(name: str | None = None):
    """Return a kernel module: ``"cython"``, ``"python"`` or ``None`` for the default."""
    if name is None:
        return active
    if name == "cython":
        return importlib.import_module("bnpricing._ckernels")
    if name == "python":
        return importlib.import_module("bnpricing._pykernels")
    raise ValueError(f"unknown backend {name!r}")


def compiled_available() -> bool:
    try:
        get_backend("cython")
    except ImportError:
        return False
    return True


if _FORCE_PURE:
    from bnpricing import _pykernels as active
else:
    try:
        from bnpricing import _ckernels as active
    except ImportError:  # extension not built
        from bnpricing import _pykernels as active

BACKEND = active.NAME

"""Kernel backend selection.

The compiled ``_ckernels`` extension is used when it imports; otherwise the
numpy implementation in ``_pykernels`` is used.  Library code always goes
through ``_backend.kernels`` so that ``use()`` switches every caller.
"""
from contextlib import contextmanager

from detflow import _pykernels

try:
    from detflow import _ckernels
except ImportError:  # extension not built
    _ckernels = None

_AVAILABLE = {"python": _pykernels}
if _ckernels is not None:
    _AVAILABLE["cython"] = _ckernels

kernels = _ckernels if _ckernels is not None else _pykernels
name = "cython" if _ckernels is not None else "python"


def available():
    return sorted(_AVAILABLE)


def set_backend(which):
    global kernels, name
    try:
        kernels = _AVAILABLE[which]
    except KeyError:
        raise ValueError(f"backend {which!r} not available; have {available()}") from None
    name = which


@contextmanager
def use(which):
    previous = name
    set_backend(which)
    try:
        yield kernels
    finally:
        set_backend(previous)

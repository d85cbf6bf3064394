"""Hot inner loops, compiled when possible.

The Cython module ``_ckernels`` is used when it has been built; otherwise
the pure-Python ``_pykernels`` fallback is selected at import.  Set
``CICDEC_BACKEND=python`` to force the fallback.
"""
import importlib
import os

from . import _pykernels

NATIVE, RIPPLE, MCLA = 0, 1, 2
ADDER_CODES = {"native": NATIVE, "ripple": RIPPLE, "mcla": MCLA}

_NAMES = ("add_unsigned", "cic_integrate", "cic_comb", "sd2_modulate", "fir_decimate2")


def available_backends():
    out = ["python"]
    try:
        importlib.import_module(f"{__name__}._ckernels")
    except ImportError:
        pass
    else:
        out.insert(0, "cython")
    return out


def get_backend(name):
    """Return the kernel module for ``"cython"`` or ``"python"``."""
    if name == "python":
        return _pykernels
    if name == "cython":
        return importlib.import_module(f"{__name__}._ckernels")
    raise ValueError(f"unknown kernel backend {name!r}")


def _select():
    forced = os.environ.get("CICDEC_BACKEND", "").strip().lower()
    if forced:
        return forced, get_backend(forced)
    try:
        return "cython", get_backend("cython")
    except ImportError:
        return "python", _pykernels


BACKEND, _impl = _select()

add_unsigned = _impl.add_unsigned
cic_integrate = _impl.cic_integrate
cic_comb = _impl.cic_comb
sd2_modulate = _impl.sd2_modulate
fir_decimate2 = _impl.fir_decimate2

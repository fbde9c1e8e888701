"""Backend selection for the batched circuit kernels.

The compiled extension is used when it was built; otherwise the numpy
implementation is loaded. Set ``VPCIRCUIT_BACKEND=python`` to force the
fallback.
"""

import os

from . import _kernels_py

BACKENDS = {"python": _kernels_py}

try:
    from . import _kernels as _kernels_c
except ImportError:  # extension not built
    _kernels_c = None
else:
    BACKENDS["cython"] = _kernels_c


def get_backend(name=None):
    if name is None:
        name = os.environ.get("VPCIRCUIT_BACKEND") or ("cython" if _kernels_c else "python")
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"kernel backend {name!r} unavailable; have {sorted(BACKENDS)}") from None


_active = get_backend()
BACKEND = "cython" if _active is _kernels_c else "python"


def set_backend(name):
    global _active, BACKEND
    _active = get_backend(name)
    BACKEND = name


def forward_batch(*args):
    return _active.forward_batch(*args)


def backward_batch(*args):
    return _active.backward_batch(*args)

"""Batched gate-contraction kernels with a compiled core and a numpy fallback.

States are passed as C-contiguous ``(B, D**n)`` complex128 arrays: each row is
one flattened amplitude tensor with mode 0 as the slowest axis.  The compiled
extension (``cvqode._kernels``) is used when it was built; otherwise, or when
``CVQODE_KERNELS=python`` is set, the pure-numpy implementations below are
used.  Both produce the same results up to floating-point reassociation.
"""

from __future__ import annotations

import os

import numpy as np

try:
    from cvqode import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

__all__ = [
    "apply_mode",
    "apply_diag",
    "apply_pair",
    "available_backends",
    "get_backend",
    "set_backend",
]


def _as_rows(states: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(states, dtype=np.complex128)


def _mode_split(mode: int, num_modes: int, cutoff: int) -> tuple[int, int]:
    return cutoff**mode, cutoff ** (num_modes - mode - 1)


# -- numpy fallback ---------------------------------------------------------


def _np_apply_mode(gate, states, mode, num_modes, cutoff):
    outer, inner = _mode_split(mode, num_modes, cutoff)
    t = states.reshape(-1, cutoff, inner)
    out = np.matmul(gate, t)
    return out.reshape(states.shape)


def _np_apply_diag(diag, states, mode, num_modes, cutoff):
    outer, inner = _mode_split(mode, num_modes, cutoff)
    t = states.reshape(states.shape[0], outer, cutoff, inner)
    return (t * diag[None, None, :, None]).reshape(states.shape)


def _np_apply_pair(gate, states, mode_a, mode_b, num_modes, cutoff):
    shape = (states.shape[0],) + (cutoff,) * num_modes
    t = states.reshape(shape)
    u4 = gate.reshape(cutoff, cutoff, cutoff, cutoff)
    out = np.tensordot(u4, t, axes=([2, 3], [mode_a + 1, mode_b + 1]))
    # tensordot puts the two gate output axes first
    out = np.moveaxis(out, [0, 1], [mode_a + 1, mode_b + 1])
    return np.ascontiguousarray(out).reshape(states.shape)


# -- compiled core ------------------------------------------------------------


def _c_apply_mode(gate, states, mode, num_modes, cutoff):
    outer, inner = _mode_split(mode, num_modes, cutoff)
    return _compiled.apply_mode(gate, states, outer, cutoff, inner)


def _c_apply_diag(diag, states, mode, num_modes, cutoff):
    outer, inner = _mode_split(mode, num_modes, cutoff)
    return _compiled.apply_diag(diag, states, outer, cutoff, inner)


def _c_apply_pair(gate, states, mode_a, mode_b, num_modes, cutoff):
    strides = [cutoff ** (num_modes - m - 1) for m in range(num_modes)]
    last = max(mode_a, mode_b)
    rows, cols = np.nonzero(gate)  # row-major order, i.e. sorted by row
    vals = np.ascontiguousarray(gate[rows, cols])
    indptr = np.zeros(gate.shape[0] + 1, dtype=np.intp)
    np.cumsum(np.bincount(rows, minlength=gate.shape[0]), out=indptr[1:])
    ia, ib = np.divmod(np.arange(gate.shape[0]), cutoff)
    ja, jb = np.divmod(cols, cutoff)
    row_off = np.ascontiguousarray(ia * strides[mode_a] + ib * strides[mode_b], dtype=np.intp)
    col_off = np.ascontiguousarray(ja * strides[mode_a] + jb * strides[mode_b], dtype=np.intp)
    bases = np.zeros(1, dtype=np.intp)
    for m in range(last):
        if m not in (mode_a, mode_b):
            bases = (bases[:, None] + np.arange(cutoff, dtype=np.intp)[None, :] * strides[m]).ravel()
    return _compiled.apply_sparse(vals, indptr, row_off, col_off, bases, states, strides[last])


_BACKENDS = {
    "python": (_np_apply_mode, _np_apply_diag, _np_apply_pair),
}
if _compiled is not None:
    _BACKENDS["compiled"] = (_c_apply_mode, _c_apply_diag, _c_apply_pair)

_active = "python"


def available_backends() -> list[str]:
    return sorted(_BACKENDS)


def get_backend() -> str:
    return _active


def set_backend(name: str) -> None:
    """Select the kernel implementation ("compiled" or "python")."""
    global _active
    if name not in _BACKENDS:
        raise ValueError(f"unknown or unavailable kernel backend {name!r}; have {available_backends()}")
    _active = name


def apply_mode(gate: np.ndarray, states: np.ndarray, mode: int, num_modes: int, cutoff: int) -> np.ndarray:
    """Apply a single-mode ``(D, D)`` matrix to axis ``mode`` of every row."""
    gate = np.ascontiguousarray(gate, dtype=np.complex128)
    return _BACKENDS[_active][0](gate, _as_rows(states), mode, num_modes, cutoff)


def apply_diag(diag: np.ndarray, states: np.ndarray, mode: int, num_modes: int, cutoff: int) -> np.ndarray:
    """Apply a diagonal single-mode gate given by its length-``D`` diagonal."""
    diag = np.ascontiguousarray(diag, dtype=np.complex128)
    return _BACKENDS[_active][1](diag, _as_rows(states), mode, num_modes, cutoff)


def apply_pair(
    gate: np.ndarray, states: np.ndarray, mode_a: int, mode_b: int, num_modes: int, cutoff: int
) -> np.ndarray:
    """Apply a two-mode ``(D**2, D**2)`` matrix indexed ``(i_a * D + i_b)``."""
    gate = np.ascontiguousarray(gate, dtype=np.complex128)
    return _BACKENDS[_active][2](gate, _as_rows(states), mode_a, mode_b, num_modes, cutoff)


_env = os.environ.get("CVQODE_KERNELS", "").strip().lower()
if _env:
    set_backend(_env)
elif _compiled is not None:
    set_backend("compiled")

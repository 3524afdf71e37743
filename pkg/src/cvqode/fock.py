"""Truncated Fock-space operators, CV gates and multi-mode pure states.

Gates are exponentials of *truncated* generators, ``U(t) = exp(t G)`` with
``G`` anti-Hermitian on the ``D``-dimensional space, so every gate is exactly
unitary at any cutoff and ``dU/dt = G U`` holds for the simulated model.
Exponentials are taken through a cached eigendecomposition of ``H = -i G``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from cvqode import kernels

__all__ = [
    "InvalidCutoffError",
    "FockState",
    "ladder_matrices",
    "quadrature_matrices",
    "number_matrix",
    "displacement_generator",
    "squeeze_generator",
    "beamsplitter_generator",
    "displacement_gate",
    "rotation_gate",
    "squeeze_gate",
    "beamsplitter_gate",
    "kerr_gate",
    "apply_gate",
    "expectation",
]

HERMITIAN_TOL = 1e-12


class InvalidCutoffError(ValueError):
    pass


def _check_cutoff(cutoff: int) -> int:
    if int(cutoff) != cutoff or cutoff < 2:
        raise InvalidCutoffError(f"cutoff must be an integer >= 2, got {cutoff!r}")
    return int(cutoff)


def _readonly(m: np.ndarray) -> np.ndarray:
    m.setflags(write=False)
    return m


@lru_cache(maxsize=None)
def _ladder(cutoff: int) -> tuple[np.ndarray, np.ndarray]:
    a = np.diag(np.sqrt(np.arange(1, cutoff, dtype=float)), k=1).astype(np.complex128)
    return _readonly(a), _readonly(a.conj().T.copy())


def ladder_matrices(cutoff: int) -> tuple[np.ndarray, np.ndarray]:
    """Return the truncated annihilation and creation matrices ``(a, a_dag)``.

    ``a[k-1, k] = sqrt(k)``; the truncation makes ``[a, a_dag]`` equal the
    identity except for the corner entry ``-(D-1)``.
    """
    a, ad = _ladder(_check_cutoff(cutoff))
    return a.copy(), ad.copy()


def quadrature_matrices(cutoff: int) -> tuple[np.ndarray, np.ndarray]:
    """Position and momentum matrices ``X = (a_dag + a)/sqrt2``, ``P = i(a_dag - a)/sqrt2``."""
    a, ad = _ladder(_check_cutoff(cutoff))
    return (ad + a) / np.sqrt(2), 1j * (ad - a) / np.sqrt(2)


def number_matrix(cutoff: int) -> np.ndarray:
    cutoff = _check_cutoff(cutoff)
    return np.diag(np.arange(cutoff, dtype=float)).astype(np.complex128)


def displacement_generator(cutoff: int) -> np.ndarray:
    """Generator of real displacements, ``a_dag - a``."""
    a, ad = _ladder(_check_cutoff(cutoff))
    return ad - a


def squeeze_generator(cutoff: int) -> np.ndarray:
    """Generator of squeezing, ``(a a - a_dag a_dag) / 2``."""
    a, ad = _ladder(_check_cutoff(cutoff))
    return 0.5 * (a @ a - ad @ ad)


def beamsplitter_generator(cutoff: int) -> np.ndarray:
    """Two-mode generator ``a1 a2_dag - a1_dag a2`` on the ``D**2`` product space.

    With ``U = exp(theta G)`` this gives ``U^dag x1 U = cos(theta) x1 - sin(theta) x2``.
    """
    a, ad = _ladder(_check_cutoff(cutoff))
    eye = np.eye(cutoff)
    a1, a2 = np.kron(a, eye), np.kron(eye, a)
    return a1 @ a2.conj().T - a1.conj().T @ a2


@lru_cache(maxsize=None)
def _eig_displacement(cutoff: int) -> tuple[np.ndarray, np.ndarray]:
    lam, vec = np.linalg.eigh(-1j * displacement_generator(cutoff))
    return _readonly(lam), _readonly(vec)


def _eig_blocks(gen: np.ndarray, labels: np.ndarray) -> list[tuple[np.ndarray, np.ndarray, np.ndarray]]:
    blocks = []
    for label in np.unique(labels):
        idx = np.flatnonzero(labels == label)
        lam, vec = np.linalg.eigh(-1j * gen[np.ix_(idx, idx)])
        blocks.append((idx, lam, vec))
    return blocks


@lru_cache(maxsize=None)
def _squeeze_blocks(cutoff: int):
    # the generator changes occupancy by 2, so it conserves parity
    return _eig_blocks(squeeze_generator(cutoff), np.arange(cutoff) % 2)


@lru_cache(maxsize=None)
def _bs_blocks(cutoff: int):
    # the generator conserves n1 + n2
    n1, n2 = np.divmod(np.arange(cutoff * cutoff), cutoff)
    return _eig_blocks(beamsplitter_generator(cutoff), n1 + n2)


def _block_expi(blocks, dim: int, t: float) -> np.ndarray:
    u = np.zeros((dim, dim), dtype=np.complex128)
    for idx, lam, vec in blocks:
        u[np.ix_(idx, idx)] = _expi(lam, vec, t)
    return u


def _expi(lam: np.ndarray, vec: np.ndarray, t: float) -> np.ndarray:
    return (vec * np.exp(1j * t * lam)) @ vec.conj().T


def displacement_gate(alpha: complex, cutoff: int) -> np.ndarray:
    """``exp(alpha a_dag - conj(alpha) a)`` on the truncated space."""
    cutoff = _check_cutoff(cutoff)
    alpha = complex(alpha)
    if alpha.imag == 0.0:
        lam, vec = _eig_displacement(cutoff)
        return _expi(lam, vec, alpha.real)
    a, ad = _ladder(cutoff)
    lam, vec = np.linalg.eigh(-1j * (alpha * ad - alpha.conjugate() * a))
    return _expi(lam, vec, 1.0)


def rotation_gate(phi: float, cutoff: int) -> np.ndarray:
    """``exp(-i phi n)``: maps ``X -> cos(phi) X + sin(phi) P`` under conjugation."""
    cutoff = _check_cutoff(cutoff)
    return np.diag(np.exp(-1j * phi * np.arange(cutoff)))


def squeeze_gate(r: float, cutoff: int) -> np.ndarray:
    """``exp(r (a a - a_dag a_dag) / 2)``; exactly zero between even and odd occupancies."""
    cutoff = _check_cutoff(cutoff)
    return _block_expi(_squeeze_blocks(cutoff), cutoff, float(r))


def beamsplitter_gate(theta: float, cutoff: int) -> np.ndarray:
    """Phaseless beamsplitter on two modes, exactly block diagonal in total occupancy."""
    cutoff = _check_cutoff(cutoff)
    return _block_expi(_bs_blocks(cutoff), cutoff * cutoff, float(theta))


def kerr_gate(kappa: float, cutoff: int) -> np.ndarray:
    cutoff = _check_cutoff(cutoff)
    k = np.arange(cutoff)
    return np.diag(np.exp(1j * kappa * k * k))


@dataclass(frozen=True)
class FockState:
    """Pure state of ``num_modes`` qumodes truncated at ``cutoff`` photons per mode.

    ``amplitudes`` has shape ``(cutoff,) * num_modes``.  Gate application
    returns a new state; instances are never mutated.
    """

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=np.complex128)
        if amps.ndim < 1 or len(set(amps.shape)) != 1:
            raise ValueError(f"amplitude tensor must have equal axes, got shape {amps.shape}")
        _check_cutoff(amps.shape[0])
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def vacuum(cls, num_modes: int, cutoff: int) -> "FockState":
        if num_modes < 1:
            raise ValueError("num_modes must be >= 1")
        amps = np.zeros((_check_cutoff(cutoff),) * num_modes, dtype=np.complex128)
        amps[(0,) * num_modes] = 1.0
        return cls(amps)

    @property
    def num_modes(self) -> int:
        return self.amplitudes.ndim

    @property
    def cutoff(self) -> int:
        return self.amplitudes.shape[0]

    def norm_squared(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def _rows(self) -> np.ndarray:
        return self.amplitudes.reshape(1, -1)


def _normalize_modes(modes, num_modes: int) -> tuple[int, ...]:
    modes = (modes,) if np.isscalar(modes) else tuple(modes)
    if len(modes) not in (1, 2):
        raise ValueError(f"gates act on one or two modes, got {modes}")
    for m in modes:
        if int(m) != m or not 0 <= m < num_modes:
            raise IndexError(f"mode index {m} out of range for {num_modes} modes")
    if len(set(modes)) != len(modes):
        raise ValueError(f"duplicate mode indices {modes}")
    return tuple(int(m) for m in modes)


def apply_gate(state: FockState, gate: np.ndarray, modes: int | Sequence[int]) -> FockState:
    """Contract ``gate`` against the axes of ``state`` named by ``modes``."""
    modes = _normalize_modes(modes, state.num_modes)
    d = state.cutoff
    gate = np.asarray(gate)
    need = d ** len(modes)
    if gate.shape != (need, need):
        raise ValueError(f"gate of shape {gate.shape} does not match {len(modes)} mode(s) at cutoff {d}")
    if len(modes) == 1:
        out = kernels.apply_mode(gate, state._rows(), modes[0], state.num_modes, d)
    else:
        out = kernels.apply_pair(gate, state._rows(), modes[0], modes[1], state.num_modes, d)
    return FockState(out.reshape(state.amplitudes.shape))


def expectation(state: FockState, observable: np.ndarray, mode: int) -> float:
    """``<psi| O_mode |psi>`` for a Hermitian single-mode observable."""
    observable = np.asarray(observable)
    (mode,) = _normalize_modes(mode, state.num_modes)
    if observable.shape != (state.cutoff, state.cutoff):
        raise ValueError(f"observable shape {observable.shape} does not match cutoff {state.cutoff}")
    if np.abs(observable - observable.conj().T).max() > HERMITIAN_TOL:
        raise ValueError("observable is not Hermitian")
    rows = state._rows()
    val = np.vdot(rows, kernels.apply_mode(observable, rows, mode, state.num_modes, state.cutoff))
    return float(val.real)

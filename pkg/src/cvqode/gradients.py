"""Exact input/parameter derivatives of the network output.

Forward-mode propagation: alongside the state ``psi`` we carry ``d psi/dx``
and, for every circuit parameter ``t_k``, ``d psi/dt_k`` and
``d^2 psi/(dx dt_k)``.  A gate ``U = exp(t G)`` maps every carried tensor by
``U``; its own parameter slot additionally picks up ``G U psi`` and
``G U dpsi/dx``.  All parameters and all evaluation points are propagated in
one batch, which is what the kernels in :mod:`cvqode.kernels` are built for.

Slots are ordered by gate application order, so before gate ``k`` only slots
``0..k`` can be nonzero and the rest are skipped.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from cvqode import fock, kernels
from cvqode.network import (
    ACTIVATIONS,
    NetworkConfig,
    NetworkParams,
    circuit_program,
    forward,
    param_count,
)

__all__ = [
    "DualState",
    "GradientBundle",
    "NonGaussianCircuitError",
    "batch_gradients",
    "evaluate_with_gradients",
    "propagate_dual",
    "finite_difference_grad",
    "parameter_shift_displacement",
]


class NonGaussianCircuitError(ValueError):
    pass


@dataclass
class DualState:
    """A state with its derivatives w.r.t. the input and one parameter."""

    psi: np.ndarray
    d_x: np.ndarray
    d_theta: np.ndarray
    d_xtheta: np.ndarray


@dataclass
class GradientBundle:
    y: float | np.ndarray
    dy_dx: float | np.ndarray
    dy_dtheta: np.ndarray
    d2y_dxdtheta: np.ndarray


def _gate_and_generator(kind: str, value: float, cutoff: int):
    """Return ``(gate, generator, diagonal)`` for one parameterized gate."""
    if kind == "rotation":
        k = np.arange(cutoff)
        return np.exp(-1j * value * k), -1j * k.astype(np.complex128), True
    if kind == "kerr":
        k2 = np.arange(cutoff) ** 2
        return np.exp(1j * value * k2), 1j * k2.astype(np.complex128), True
    if kind == "displacement":
        return fock.displacement_gate(value, cutoff), fock.displacement_generator(cutoff), False
    if kind == "squeeze":
        return fock.squeeze_gate(value, cutoff), fock.squeeze_generator(cutoff), False
    if kind == "beamsplitter":
        return fock.beamsplitter_gate(value, cutoff), _bs_generator(cutoff), False
    raise ValueError(f"unknown gate kind {kind!r}")


_BS_GEN: dict[int, np.ndarray] = {}


def _bs_generator(cutoff: int) -> np.ndarray:
    if cutoff not in _BS_GEN:
        _BS_GEN[cutoff] = fock.beamsplitter_generator(cutoff)
    return _BS_GEN[cutoff]


def _apply(op, rows, modes, diagonal, num_modes, cutoff):
    if diagonal:
        return kernels.apply_diag(op, rows, modes[0], num_modes, cutoff)
    if len(modes) == 1:
        return kernels.apply_mode(op, rows, modes[0], num_modes, cutoff)
    return kernels.apply_pair(op, rows, modes[0], modes[1], num_modes, cutoff)


def _encode(xs: np.ndarray, config: NetworkConfig) -> tuple[np.ndarray, np.ndarray]:
    """Encoded states and their x-derivatives, each ``(P, D**n)``."""
    d, n, s = config.cutoff, config.num_modes, config.input_scale
    lam, vec = fock._eig_displacement(d)
    # column 0 of exp(s x G) for every point
    cols = np.einsum("ij,pj,j->pi", vec, np.exp(1j * s * np.outer(xs, lam)), vec[0].conj())
    psi = cols
    for _ in range(n - 1):
        psi = np.einsum("pi,pj->pij", psi, cols).reshape(len(xs), -1)
    gen = fock.displacement_generator(d)
    dx = np.zeros_like(psi)
    for m in range(n):
        dx += kernels.apply_mode(gen, psi, m, n, d)
    return psi, s * dx


def _propagate(xs, flat: np.ndarray, config: NetworkConfig):
    """Run the batched dual propagation; returns the slot buffer and program."""
    d, n = config.cutoff, config.num_modes
    program = circuit_program(config)
    npts, width = len(xs), d**n
    buf = np.zeros((len(program) + 1, npts, 2, width), dtype=np.complex128)
    buf[0, :, 0], buf[0, :, 1] = _encode(np.asarray(xs, dtype=float), config)
    for k, spec in enumerate(program):
        gate, gen, diagonal = _gate_and_generator(spec.kind, flat[spec.index], d)
        active = buf[: k + 1].reshape(-1, width)
        buf[: k + 1] = _apply(gate, active, spec.modes, diagonal, n, d).reshape(buf[: k + 1].shape)
        buf[k + 1] = _apply(gen, buf[0].reshape(-1, width), spec.modes, diagonal, n, d).reshape(npts, 2, width)
    return buf, program


def batch_gradients(xs, params: NetworkParams | np.ndarray, config: NetworkConfig) -> GradientBundle:
    """Output and derivatives at every point of ``xs`` in one propagation.

    Returns arrays: ``y``, ``dy_dx`` of shape ``(P,)`` and ``dy_dtheta``,
    ``d2y_dxdtheta`` of shape ``(P, M_p)`` in flat-parameter order.
    """
    flat = params.flatten() if isinstance(params, NetworkParams) else np.asarray(params, dtype=float)
    if flat.shape != (param_count(config),):
        raise ValueError(f"expected {param_count(config)} parameters, got {flat.shape}")
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    d, n = config.cutoff, config.num_modes
    buf, program = _propagate(xs, flat, config)
    xq, _ = fock.quadrature_matrices(d)
    base = buf[0].reshape(-1, d**n)
    obs = np.zeros_like(base)
    for m in range(n):
        obs += kernels.apply_mode(xq, base, m, n, d)
    obs = obs.reshape(len(xs), 2, -1)
    o_psi, o_dx = obs[:, 0], obs[:, 1]
    psi, dx = buf[0, :, 0], buf[0, :, 1]

    y = np.einsum("ps,ps->p", psi.conj(), o_psi).real
    y_x = 2.0 * np.einsum("ps,ps->p", dx.conj(), o_psi).real
    th, xth = buf[1:, :, 0], buf[1:, :, 1]
    y_t = 2.0 * np.einsum("kps,ps->pk", th.conj(), o_psi).real
    y_xt = 2.0 * (np.einsum("kps,ps->pk", xth.conj(), o_psi) + np.einsum("kps,ps->pk", th.conj(), o_dx)).real

    order = np.array([spec.index for spec in program])
    dy_dt = np.empty_like(y_t)
    d2y = np.empty_like(y_xt)
    dy_dt[:, order] = y_t
    d2y[:, order] = y_xt

    sigma, dsigma, d2sigma = ACTIVATIONS[config.activation]
    if config.activation != "identity":
        s1, s2 = dsigma(y), d2sigma(y)
        d2y = s2[:, None] * y_x[:, None] * dy_dt + s1[:, None] * d2y
        dy_dt = s1[:, None] * dy_dt
        y_x = s1 * y_x
        y = sigma(y)
    return GradientBundle(y, y_x, dy_dt, d2y)


def evaluate_with_gradients(x: float, params: NetworkParams, config: NetworkConfig) -> GradientBundle:
    """``y``, ``dy/dx``, ``dy/dtheta`` and ``d2y/(dx dtheta)`` at a single input."""
    b = batch_gradients([x], params, config)
    return GradientBundle(float(b.y[0]), float(b.dy_dx[0]), b.dy_dtheta[0], b.d2y_dxdtheta[0])


def propagate_dual(x: float, params: NetworkParams, config: NetworkConfig, index: int) -> DualState:
    """Final state and derivative tensors for flat parameter ``index``."""
    program = circuit_program(config)
    slot = 1 + [spec.index for spec in program].index(index)
    buf, _ = _propagate([x], params.flatten(), config)
    shape = (config.cutoff,) * config.num_modes
    return DualState(
        psi=buf[0, 0, 0].reshape(shape),
        d_x=buf[0, 0, 1].reshape(shape),
        d_theta=buf[slot, 0, 0].reshape(shape),
        d_xtheta=buf[slot, 0, 1].reshape(shape),
    )


def finite_difference_grad(x: float, params: NetworkParams, config: NetworkConfig, h: float = 1e-4) -> GradientBundle:
    """Central-difference oracle built only on :func:`cvqode.network.forward`."""
    if h <= 0:
        raise ValueError("step h must be positive")
    flat = params.flatten()

    def f(xv, vec):
        return forward(xv, NetworkParams.unflatten(config, vec), config)

    y = f(x, flat)
    dy_dx = (f(x + h, flat) - f(x - h, flat)) / (2 * h)
    dy_dt = np.empty(len(flat))
    d2y = np.empty(len(flat))
    for k in range(len(flat)):
        up, dn = flat.copy(), flat.copy()
        up[k] += h
        dn[k] -= h
        dy_dt[k] = (f(x, up) - f(x, dn)) / (2 * h)
        d2y[k] = (f(x + h, up) - f(x + h, dn) - f(x - h, up) + f(x - h, dn)) / (4 * h * h)
    return GradientBundle(y, dy_dx, dy_dt, d2y)


def parameter_shift_displacement(
    x: float, params: NetworkParams, config: NetworkConfig, mode: int, shift: float
) -> float:
    """Two-point shift estimate of dy/d(encoding amplitude of ``mode``).

    Exact for any ``shift`` when the circuit is Gaussian and the activation is
    the identity, because the output is then affine in displacements.
    """
    if shift <= 0:
        raise ValueError("shift must be positive")
    if any(np.any(layer.kappa != 0) for layer in params.layers):
        raise NonGaussianCircuitError("parameter-shift rule is only exact for Gaussian circuits (all Kerr strengths zero)")
    up = np.zeros(config.num_modes)
    up[mode] = shift
    return (forward(x, params, config, up) - forward(x, params, config, -up)) / (2 * shift)

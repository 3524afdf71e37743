"""Hybrid CV quantum network: displacement encoding, QNN layers, quadrature readout.

One layer applies, on every mode, D(alpha) -> U1(phi1, theta1) -> S(r) ->
U2(phi2, theta2) -> K(kappa).  An interferometer is a rectangular mesh of
phaseless beamsplitters followed by one rotation per mode.  The network output
is ``sigma(sum_i <x_i>)`` after the input has been displaced onto every mode.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from cvqode import fock
from cvqode.fock import FockState

__all__ = [
    "NetworkConfig",
    "LayerParams",
    "NetworkParams",
    "GateSpec",
    "ACTIVATIONS",
    "param_count",
    "init_params",
    "mesh_pairs",
    "circuit_program",
    "encode_input",
    "interferometer",
    "apply_layer",
    "forward",
]

TWO_PI = 2.0 * np.pi

# activation: (value, first derivative, second derivative)
ACTIVATIONS = {
    "identity": (lambda y: y, lambda y: 1.0, lambda y: 0.0),
    "tanh": (np.tanh, lambda y: 1.0 - np.tanh(y) ** 2, lambda y: -2.0 * np.tanh(y) * (1.0 - np.tanh(y) ** 2)),
}


@dataclass(frozen=True)
class NetworkConfig:
    num_modes: int = 2
    num_layers: int = 1
    cutoff: int = 10
    activation: str = "identity"
    input_scale: float = 1.0

    def __post_init__(self):
        if self.num_modes < 1:
            raise ValueError(f"num_modes must be >= 1, got {self.num_modes}")
        if self.num_layers < 1:
            raise ValueError(f"num_layers must be >= 1, got {self.num_layers}")
        if self.cutoff < 2:
            raise ValueError(f"cutoff must be >= 2, got {self.cutoff}")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"activation must be one of {sorted(ACTIVATIONS)}, got {self.activation!r}")

    @property
    def num_beamsplitters(self) -> int:
        return self.num_modes * (self.num_modes - 1) // 2

    @property
    def layer_size(self) -> int:
        return self.num_modes * (self.num_modes + 4)


def param_count(config: NetworkConfig) -> int:
    """Number of trainable scalars, ``n (n + 4) L``."""
    return config.layer_size * config.num_layers


# field order is also the flattening order
_FIELDS = ("alpha", "phi1", "theta1", "r", "phi2", "theta2", "kappa")
_ANGLES = ("phi1", "theta1", "phi2", "theta2")


@dataclass
class LayerParams:
    alpha: np.ndarray
    phi1: np.ndarray
    theta1: np.ndarray
    r: np.ndarray
    phi2: np.ndarray
    theta2: np.ndarray
    kappa: np.ndarray

    def __post_init__(self):
        for name in _FIELDS:
            setattr(self, name, np.atleast_1d(np.asarray(getattr(self, name), dtype=float)))
        n, nb = len(self.alpha), len(self.theta1)
        if nb != n * (n - 1) // 2 or len(self.theta2) != nb:
            raise ValueError(f"expected {n * (n - 1) // 2} beamsplitter angles per interferometer for {n} modes")
        for name in ("phi1", "r", "phi2", "kappa"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"{name} must have length {n}")

    @classmethod
    def zeros(cls, num_modes: int) -> "LayerParams":
        nb = num_modes * (num_modes - 1) // 2
        sizes = dict(alpha=num_modes, phi1=num_modes, theta1=nb, r=num_modes, phi2=num_modes, theta2=nb, kappa=num_modes)
        return cls(**{k: np.zeros(v) for k, v in sizes.items()})

    @property
    def num_modes(self) -> int:
        return len(self.alpha)

    def flatten(self) -> np.ndarray:
        return np.concatenate([getattr(self, name) for name in _FIELDS])

    def canonical(self) -> "LayerParams":
        """Copy with every angle wrapped into [0, 2pi); for reporting only."""
        vals = {name: getattr(self, name).copy() for name in _FIELDS}
        for name in _ANGLES:
            vals[name] = np.mod(vals[name], TWO_PI)
        return LayerParams(**vals)


@dataclass
class NetworkParams:
    layers: list[LayerParams] = field(default_factory=list)

    def flatten(self) -> np.ndarray:
        if not self.layers:
            return np.zeros(0)
        return np.concatenate([layer.flatten() for layer in self.layers])

    @classmethod
    def unflatten(cls, config: NetworkConfig, vector) -> "NetworkParams":
        vector = np.asarray(vector, dtype=float)
        if vector.shape != (param_count(config),):
            raise ValueError(f"expected {param_count(config)} parameters, got shape {vector.shape}")
        n, nb = config.num_modes, config.num_beamsplitters
        sizes = dict(alpha=n, phi1=n, theta1=nb, r=n, phi2=n, theta2=nb, kappa=n)
        layers, pos = [], 0
        for _ in range(config.num_layers):
            vals = {}
            for name in _FIELDS:
                vals[name] = vector[pos : pos + sizes[name]].copy()
                pos += sizes[name]
            layers.append(LayerParams(**vals))
        return cls(layers)

    @classmethod
    def zeros(cls, config: NetworkConfig) -> "NetworkParams":
        return cls([LayerParams.zeros(config.num_modes) for _ in range(config.num_layers)])


def init_params(config: NetworkConfig, seed: int = 0) -> NetworkParams:
    """Random initial parameters from numpy's PCG64 generator seeded with ``seed``.

    Displacements, squeezings and Kerr strengths are drawn from N(0, 0.1);
    rotation and beamsplitter angles from U[0, 2pi).  Draw order follows the
    flattening order, layer by layer.
    """
    rng = np.random.default_rng(seed)
    n, nb = config.num_modes, config.num_beamsplitters
    layers = []
    for _ in range(config.num_layers):
        layers.append(
            LayerParams(
                alpha=rng.normal(0.0, 0.1, n),
                phi1=rng.uniform(0.0, TWO_PI, n),
                theta1=rng.uniform(0.0, TWO_PI, nb),
                r=rng.normal(0.0, 0.1, n),
                phi2=rng.uniform(0.0, TWO_PI, n),
                theta2=rng.uniform(0.0, TWO_PI, nb),
                kappa=rng.normal(0.0, 0.1, n),
            )
        )
    return NetworkParams(layers)


def mesh_pairs(num_modes: int) -> list[tuple[int, int]]:
    """Mode pairs of the rectangular beamsplitter mesh, in application order.

    Alternates the even pairs (0,1), (2,3), ... with the odd pairs (1,2),
    (3,4), ... until n(n-1)/2 beamsplitters have been placed.
    """
    total = num_modes * (num_modes - 1) // 2
    even = [(i, i + 1) for i in range(0, num_modes - 1, 2)]
    odd = [(i, i + 1) for i in range(1, num_modes - 1, 2)]
    pairs: list[tuple[int, int]] = []
    column = 0
    while len(pairs) < total:
        pairs.extend((even, odd)[column % 2][: total - len(pairs)])
        column += 1
    return pairs


class GateSpec(NamedTuple):
    kind: str  # displacement | rotation | squeeze | beamsplitter | kerr
    modes: tuple[int, ...]
    index: int  # position of the gate's parameter in the flat vector


def circuit_program(config: NetworkConfig) -> list[GateSpec]:
    """Parameterized gates of the whole network in application order."""
    n, nb = config.num_modes, config.num_beamsplitters
    pairs = mesh_pairs(n)
    program = []
    for layer in range(config.num_layers):
        base = layer * config.layer_size
        alpha, phi1, theta1 = base, base + n, base + 2 * n
        r = theta1 + nb
        phi2, theta2 = r + n, r + 2 * n
        kappa = theta2 + nb
        program += [GateSpec("displacement", (m,), alpha + m) for m in range(n)]
        program += [GateSpec("beamsplitter", p, theta1 + k) for k, p in enumerate(pairs)]
        program += [GateSpec("rotation", (m,), phi1 + m) for m in range(n)]
        program += [GateSpec("squeeze", (m,), r + m) for m in range(n)]
        program += [GateSpec("beamsplitter", p, theta2 + k) for k, p in enumerate(pairs)]
        program += [GateSpec("rotation", (m,), phi2 + m) for m in range(n)]
        program += [GateSpec("kerr", (m,), kappa + m) for m in range(n)]
    return program


GATES = {
    "displacement": fock.displacement_gate,
    "rotation": fock.rotation_gate,
    "squeeze": fock.squeeze_gate,
    "beamsplitter": fock.beamsplitter_gate,
    "kerr": fock.kerr_gate,
}


def encode_input(x: float, state: FockState, config: NetworkConfig, shifts=None) -> FockState:
    """Displace every mode by ``input_scale * x`` (plus an optional per-mode shift)."""
    for m in range(state.num_modes):
        amp = config.input_scale * x + (0.0 if shifts is None else shifts[m])
        state = fock.apply_gate(state, fock.displacement_gate(amp, state.cutoff), m)
    return state


def interferometer(state: FockState, phi, theta) -> FockState:
    n, d = state.num_modes, state.cutoff
    phi, theta = np.atleast_1d(phi), np.atleast_1d(theta)
    if len(phi) != n or len(theta) != n * (n - 1) // 2:
        raise ValueError(f"interferometer on {n} modes needs {n} rotations and {n * (n - 1) // 2} beamsplitters")
    for t, pair in zip(theta, mesh_pairs(n)):
        state = fock.apply_gate(state, fock.beamsplitter_gate(t, d), pair)
    for m in range(n):
        state = fock.apply_gate(state, fock.rotation_gate(phi[m], d), m)
    return state


def apply_layer(state: FockState, p: LayerParams) -> FockState:
    if p.num_modes != state.num_modes:
        raise ValueError(f"layer for {p.num_modes} modes applied to a {state.num_modes}-mode state")
    d = state.cutoff
    for m in range(state.num_modes):
        state = fock.apply_gate(state, fock.displacement_gate(p.alpha[m], d), m)
    state = interferometer(state, p.phi1, p.theta1)
    for m in range(state.num_modes):
        state = fock.apply_gate(state, fock.squeeze_gate(p.r[m], d), m)
    state = interferometer(state, p.phi2, p.theta2)
    for m in range(state.num_modes):
        state = fock.apply_gate(state, fock.kerr_gate(p.kappa[m], d), m)
    return state


def output_state(x: float, params: NetworkParams, config: NetworkConfig, shifts=None) -> FockState:
    state = encode_input(x, FockState.vacuum(config.num_modes, config.cutoff), config, shifts)
    for layer in params.layers:
        state = apply_layer(state, layer)
    return state


def forward(x: float, params: NetworkParams, config: NetworkConfig, shifts=None) -> float:
    """Network output ``sigma(sum_i <x_i>)`` at input ``x``.

    ``shifts`` adds a fixed extra displacement per mode to the encoding; it is
    used by the parameter-shift check and is ``None`` in normal use.
    """
    if len(params.layers) != config.num_layers:
        raise ValueError(f"expected {config.num_layers} layers, got {len(params.layers)}")
    state = output_state(x, params, config, shifts)
    xq, _ = fock.quadrature_matrices(config.cutoff)
    total = sum(fock.expectation(state, xq, m) for m in range(config.num_modes))
    return float(ACTIVATIONS[config.activation][0](total))

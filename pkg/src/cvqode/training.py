"""Collocation loss for an IVP, its exact parameter gradient, and Adam training."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from cvqode.gradients import batch_gradients
from cvqode.network import NetworkConfig, NetworkParams, init_params, param_count
from cvqode.problems import IVProblem

__all__ = [
    "NonFiniteError",
    "TrainingDiverged",
    "CollocationGrid",
    "TrainConfig",
    "TrainState",
    "make_grid",
    "ode_loss",
    "ode_loss_grad",
    "adam_step",
    "train",
]

log = logging.getLogger(__name__)

DIVERGENCE_LIMIT = 1e6


class NonFiniteError(ArithmeticError):
    def __init__(self, message: str, x: float | None = None):
        super().__init__(message)
        self.x = x


class TrainingDiverged(RuntimeError):
    """Raised when the loss blows up; ``state`` holds everything up to that point."""

    def __init__(self, message: str, state: "TrainState"):
        super().__init__(message)
        self.state = state


@dataclass(frozen=True)
class CollocationGrid:
    points: np.ndarray

    def __len__(self) -> int:
        return len(self.points)


def make_grid(domain, N: int = 20) -> CollocationGrid:
    """``N`` evenly spaced points covering ``domain`` including both ends."""
    if N < 2:
        raise ValueError(f"grid needs at least 2 points, got {N}")
    a, b = map(float, domain)
    if not a < b:
        raise ValueError(f"domain must satisfy a < b, got {domain}")
    i = np.arange(N)
    return CollocationGrid(a + i * (b - a) / (N - 1))


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.02
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-5
    max_steps: int = 1000
    seed: int = 0
    grid_size: int = 20
    snapshot_steps: tuple[int, ...] = (0, 20, 100)

    def __post_init__(self):
        if not self.learning_rate >= 0:
            raise ValueError(f"learning_rate must be non-negative, got {self.learning_rate}")
        for name in ("adam_beta1", "adam_beta2"):
            if not 0 < getattr(self, name) < 1:
                raise ValueError(f"{name} must lie in (0, 1)")
        if not self.adam_eps > 0:
            raise ValueError("adam_eps must be positive")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        if self.grid_size < 2:
            raise ValueError("grid_size must be >= 2")
        if any(s < 0 for s in self.snapshot_steps):
            raise ValueError("snapshot steps must be non-negative")


@dataclass
class TrainState:
    """Optimizer state.  ``loss_history[k]`` is the loss at the parameters
    reached after ``k`` updates; ``snapshots[k]`` are the grid predictions
    at those same parameters."""

    params: np.ndarray
    m: np.ndarray
    v: np.ndarray
    step: int = 0
    loss_history: list[float] = field(default_factory=list)
    snapshots: dict[int, np.ndarray] = field(default_factory=dict)
    best_step: int = -1
    best_loss: float = float("inf")
    best_params: np.ndarray | None = None
    last_params: np.ndarray | None = None

    @classmethod
    def initial(cls, params: np.ndarray) -> "TrainState":
        params = np.asarray(params, dtype=float).copy()
        return cls(params, np.zeros_like(params), np.zeros_like(params))


def ode_loss(y_fn: Callable[[float], tuple[float, float]], problem: IVProblem, grid: CollocationGrid) -> float:
    """Squared initial-value mismatch plus squared ODE residuals on the grid.

    ``y_fn(x)`` returns ``(y(x), y'(x))``.  The initial term is evaluated at
    ``x0`` itself, whether or not ``x0`` is a grid point.
    """
    y_init, _ = y_fn(problem.x0)
    if not np.isfinite(y_init):
        raise NonFiniteError(f"non-finite network output at x={problem.x0}", problem.x0)
    loss = (y_init - problem.y0) ** 2
    for x in grid.points:
        y, dy = y_fn(x)
        if not (np.isfinite(y) and np.isfinite(dy)):
            raise NonFiniteError(f"non-finite network output at x={x}", x)
        loss += (dy - problem.rhs(x, y)) ** 2
    return float(loss)


def ode_loss_grad(params, problem: IVProblem, grid: CollocationGrid, config: NetworkConfig):
    """Loss and its exact gradient over the flat parameter vector.

    Uses one batched propagation over ``x0`` and all grid points.
    """
    loss, grad, _ = _loss_grad_predict(params, problem, grid, config)
    return loss, grad


def _loss_grad_predict(params, problem, grid, config):
    xs = np.concatenate([[problem.x0], grid.points])
    b = batch_gradients(xs, params, config)
    if not (np.all(np.isfinite(b.y)) and np.all(np.isfinite(b.dy_dx))):
        bad = xs[~(np.isfinite(b.y) & np.isfinite(b.dy_dx))][0]
        raise NonFiniteError(f"non-finite network output at x={bad}", bad)
    init_res = b.y[0] - problem.y0
    y, dy = b.y[1:], b.dy_dx[1:]
    pts = grid.points
    f = np.array([problem.rhs(x, v) for x, v in zip(pts, y)])
    fy = np.array([problem.rhs_dy(x, v) for x, v in zip(pts, y)])
    res = dy - f
    loss = init_res**2 + np.sum(res**2)
    grad = 2.0 * init_res * b.dy_dtheta[0]
    grad += 2.0 * np.einsum("i,ik->k", res, b.d2y_dxdtheta[1:] - fy[:, None] * b.dy_dtheta[1:])
    return float(loss), grad, y


def adam_step(state: TrainState, grad, config: TrainConfig) -> TrainState:
    """One bias-corrected Adam update with ``eps`` added to the denominator."""
    grad = np.asarray(grad, dtype=float)
    if grad.shape != state.params.shape:
        raise ValueError(f"gradient shape {grad.shape} does not match parameters {state.params.shape}")
    if not np.all(np.isfinite(grad)):
        bad = np.flatnonzero(~np.isfinite(grad)).tolist()
        raise NonFiniteError(f"non-finite gradient components at indices {bad}")
    b1, b2 = config.adam_beta1, config.adam_beta2
    t = state.step + 1
    m = b1 * state.m + (1 - b1) * grad
    v = b2 * state.v + (1 - b2) * grad * grad
    m_hat = m / (1 - b1**t)
    v_hat = v / (1 - b2**t)
    params = state.params - config.learning_rate * m_hat / (np.sqrt(v_hat) + config.adam_eps)
    return replace(
        state,
        params=params,
        m=m,
        v=v,
        step=t,
        loss_history=list(state.loss_history),
        snapshots=dict(state.snapshots),
    )


def predict(params, grid_points, config: NetworkConfig) -> np.ndarray:
    return np.asarray(batch_gradients(grid_points, params, config).y, dtype=float)


def train(
    problem: IVProblem,
    net_config: NetworkConfig,
    train_config: TrainConfig,
    initial_params: NetworkParams | None = None,
    callback: Callable[[int, float], None] | None = None,
) -> TrainState:
    """Minimize the collocation loss with Adam for ``max_steps`` steps.

    Grid predictions are stored for every requested snapshot step below
    ``max_steps`` and always for the last step.  The best-loss parameters
    are tracked.  Raises :class:`TrainingDiverged` if the loss exceeds
    ``DIVERGENCE_LIMIT`` or stops being finite.
    """
    grid = make_grid(problem.domain, train_config.grid_size)
    params = initial_params if initial_params is not None else init_params(net_config, train_config.seed)
    state = TrainState.initial(params.flatten())
    wanted = {s for s in train_config.snapshot_steps if s < train_config.max_steps}
    wanted.add(train_config.max_steps - 1)
    for k in range(train_config.max_steps):
        try:
            loss, grad, y_grid = _loss_grad_predict(state.params, problem, grid, net_config)
        except NonFiniteError as exc:
            raise TrainingDiverged(f"step {k}: {exc}", state) from exc
        if not np.isfinite(loss) or loss > DIVERGENCE_LIMIT:
            raise TrainingDiverged(f"step {k}: loss {loss!r} exceeds divergence limit", state)
        state.loss_history.append(loss)
        state.last_params = state.params.copy()
        if loss < state.best_loss:
            state.best_loss, state.best_step, state.best_params = loss, k, state.params.copy()
        if k in wanted:
            state.snapshots[k] = y_grid.copy()
        if callback is not None:
            callback(k, loss)
        if k % 100 == 0:
            log.debug("step %d loss %.6e", k, loss)
        try:
            state = adam_step(state, grad, train_config)
        except NonFiniteError as exc:
            raise TrainingDiverged(f"step {k}: {exc}", state) from exc
    return state

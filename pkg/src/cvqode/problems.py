"""Initial value problems used in the experiments and a classical RK4 reference."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

__all__ = [
    "IVProblem",
    "ReferenceSolution",
    "IntegrationError",
    "linear_problem",
    "riccati_problem",
    "stiff_problem",
    "PROBLEMS",
    "rk4_solve",
    "reference_solution",
]


class IntegrationError(ArithmeticError):
    def __init__(self, message: str, x: float):
        super().__init__(message)
        self.x = x


@dataclass(frozen=True)
class IVProblem:
    """``y'(x) = f(x, y)``, ``y(x0) = y0`` on ``domain``."""

    name: str
    rhs: Callable[[float, float], float]
    rhs_dy: Callable[[float, float], float]
    x0: float
    y0: float
    domain: tuple[float, float]
    exact: Optional[Callable[[float], float]] = None

    def __post_init__(self):
        a, b = self.domain
        if not a < b:
            raise ValueError(f"domain must satisfy a < b, got {self.domain}")
        if not a <= self.x0 <= b:
            raise ValueError(f"x0={self.x0} lies outside the domain {self.domain}")


@dataclass(frozen=True)
class ReferenceSolution:
    xs: np.ndarray
    ys: np.ndarray
    method: str  # "analytic" or "rk4"


def linear_problem(domain=(-1.0, 1.0)) -> IVProblem:
    """``y' = -2 x y``, ``y(0) = 1``; solution ``exp(-x^2)``."""
    return IVProblem(
        name="linear",
        rhs=lambda x, y: -2.0 * x * y,
        rhs_dy=lambda x, y: -2.0 * x,
        x0=0.0,
        y0=1.0,
        domain=tuple(domain),
        exact=lambda x: np.exp(-np.square(x)),
    )


def riccati_problem(domain=(-1.0, 1.0)) -> IVProblem:
    """``y' = x^2 + y^2 - 1``, ``y(0) = 0``; no closed form is used."""
    return IVProblem(
        name="riccati",
        rhs=lambda x, y: x * x + y * y - 1.0,
        rhs_dy=lambda x, y: 2.0 * y,
        x0=0.0,
        y0=0.0,
        domain=tuple(domain),
    )


def stiff_problem(domain=(0.0, 1.0)) -> IVProblem:
    """``y' = -2 y``, ``y(0) = 1/2``; solution ``exp(-2x) / 2``."""
    return IVProblem(
        name="stiff",
        rhs=lambda x, y: -2.0 * y,
        rhs_dy=lambda x, y: -2.0,
        x0=0.0,
        y0=0.5,
        domain=tuple(domain),
        exact=lambda x: 0.5 * np.exp(-2.0 * np.asarray(x)),
    )


PROBLEMS = {"linear": linear_problem, "riccati": riccati_problem, "stiff": stiff_problem}


def _rk4_segment(f, x, y, x_end, steps):
    h = (x_end - x) / steps
    for i in range(steps):
        k1 = f(x, y)
        k2 = f(x + h / 2, y + h * k1 / 2)
        k3 = f(x + h / 2, y + h * k2 / 2)
        k4 = f(x + h, y + h * k3)
        y = y + h * (k1 + 2 * k2 + 2 * k3 + k4) / 6
        x = x + h if i < steps - 1 else x_end
        if not np.isfinite(y):
            raise IntegrationError(f"RK4 solution became non-finite near x={x}", x)
    return y


def _march(f, x0, y0, targets, substeps):
    # targets ordered away from x0
    out, x, y = [], x0, y0
    for t in targets:
        if t != x:
            y = _rk4_segment(f, x, y, t, substeps)
            x = t
        out.append(y)
    return out


def rk4_solve(problem: IVProblem, grid, substeps: int = 100) -> ReferenceSolution:
    """Classical RK4 from ``x0`` outward to every grid point.

    Each interval between consecutive points (including the partial interval
    from ``x0`` to its neighbouring grid points) is covered by ``substeps``
    uniform steps.
    """
    if substeps < 1:
        raise ValueError("substeps must be >= 1")
    xs = np.asarray(grid, dtype=float)
    if xs.ndim != 1 or len(xs) < 1 or np.any(np.diff(xs) <= 0):
        raise ValueError("grid must be a strictly increasing 1-D array")
    right = xs[xs >= problem.x0]
    left = xs[xs < problem.x0][::-1]
    with np.errstate(over="ignore", invalid="ignore"):  # blow-up is reported below
        ys_right = _march(problem.rhs, problem.x0, problem.y0, right, substeps)
        ys_left = _march(problem.rhs, problem.x0, problem.y0, left, substeps)
    ys = np.array(ys_left[::-1] + ys_right, dtype=float)
    return ReferenceSolution(xs, ys, "rk4")


def reference_solution(problem: IVProblem, grid, substeps: int = 100) -> ReferenceSolution:
    """Analytic values where a closed form exists, RK4 otherwise."""
    xs = np.asarray(grid, dtype=float)
    if problem.exact is not None:
        return ReferenceSolution(xs, np.asarray(problem.exact(xs), dtype=float), "analytic")
    return rk4_solve(problem, xs, substeps)

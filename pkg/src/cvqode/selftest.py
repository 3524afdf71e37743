"""Built-in health checks for the gate library and the gradient engine.

Each check compares a gate against the quadrature map it is meant to
implement, on the part of the truncated space where that map is resolvable.
Gate constructors can be overridden, which is how the mutation tests make
sure a wrong sign convention is actually caught.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np

from cvqode import fock
from cvqode.gradients import evaluate_with_gradients, finite_difference_grad
from cvqode.network import NetworkConfig, init_params

__all__ = ["CheckResult", "run_selftest", "format_table", "heisenberg_defect"]

GateFactory = Callable[[float, int], np.ndarray]

DEFAULT_GATES: dict[str, GateFactory] = {
    "displacement": fock.displacement_gate,
    "rotation": fock.rotation_gate,
    "squeeze": fock.squeeze_gate,
    "beamsplitter": fock.beamsplitter_gate,
    "kerr": fock.kerr_gate,
}


@dataclass(frozen=True)
class CheckResult:
    name: str
    error: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.error) and self.error <= self.tolerance)


def heisenberg_defect(u: np.ndarray, op: np.ndarray, expected: np.ndarray, keep: np.ndarray) -> float:
    """``max |P (U^dag op U - expected) P|`` with ``P`` the projector onto ``keep``."""
    diff = u.conj().T @ op @ u - expected
    return float(np.max(np.abs(diff[np.ix_(keep, keep)])))


def _two_mode_quadratures(d: int):
    x, p = fock.quadrature_matrices(d)
    eye = np.eye(d)
    return np.kron(x, eye), np.kron(eye, x)


def _unitarity(gates, d=10) -> float:
    worst = 0.0
    grid = np.linspace(-1.0, 1.0, 9)
    angles = np.linspace(0.0, 2 * np.pi, 9)
    for kind, values in [
        ("displacement", grid),
        ("squeeze", grid),
        ("kerr", grid),
        ("rotation", angles),
        ("beamsplitter", angles),
    ]:
        for v in values:
            u = gates[kind](v, d)
            worst = max(worst, np.max(np.abs(u.conj().T @ u - np.eye(len(u)))))
    return float(worst)


def _rotation(gates, d=12, phi=0.7) -> float:
    x, p = fock.quadrature_matrices(d)
    u = gates["rotation"](phi, d)
    return heisenberg_defect(u, x, np.cos(phi) * x + np.sin(phi) * p, np.arange(d))


def _beamsplitter(gates, d=6) -> float:
    x1, x2 = _two_mode_quadratures(d)
    n1, n2 = np.divmod(np.arange(d * d), d)
    keep = np.flatnonzero(n1 + n2 <= d - 2)
    worst = 0.0
    for theta in (0.4, np.pi / 2):
        u = gates["beamsplitter"](theta, d)
        c, s = np.cos(theta), np.sin(theta)
        worst = max(
            worst,
            heisenberg_defect(u, x1, c * x1 - s * x2, keep),
            heisenberg_defect(u, x2, s * x1 + c * x2, keep),
        )
    return worst


def _displacement(gates, d=20, alpha=0.3) -> float:
    x, _ = fock.quadrature_matrices(d)
    u = gates["displacement"](alpha, d)
    return heisenberg_defect(u, x, x + np.sqrt(2) * alpha * np.eye(d), np.arange(d - 10))


def _squeeze(gates, d=20) -> float:
    x, _ = fock.quadrature_matrices(d)
    worst = 0.0
    for r, target in ((0.5, np.exp(-1.0) / 2), (-0.5, np.e / 2)):
        col = gates["squeeze"](r, d)[:, 0]
        var = np.real(col.conj() @ x @ x @ col)
        worst = max(worst, abs(var - target) / max(1.0, target))
    return worst


def _kerr(gates, d=10) -> float:
    k = np.arange(d)
    worst = 0.0
    for kappa in (-0.7, 0.1, 1.3):
        worst = max(worst, np.max(np.abs(gates["kerr"](kappa, d) - np.diag(np.exp(1j * kappa * k * k)))))
    return float(worst)


def _commutator(d=10) -> float:
    a, ad = fock.ladder_matrices(d)
    expected = np.eye(d)
    expected[-1, -1] = -(d - 1)
    return float(np.max(np.abs(a @ ad - ad @ a - expected)))


def _gradients() -> float:
    config = NetworkConfig(num_modes=2, num_layers=1, cutoff=10)
    params = init_params(config, seed=3)
    a = evaluate_with_gradients(0.7, params, config)
    b = finite_difference_grad(0.7, params, config, h=1e-4)
    av = np.r_[a.dy_dx, a.dy_dtheta]
    bv = np.r_[b.dy_dx, b.dy_dtheta]
    return float(np.max(np.abs(av - bv) / np.maximum(np.abs(bv), 1e-2)))


def run_selftest(overrides: Mapping[str, GateFactory] | None = None) -> list[CheckResult]:
    gates = dict(DEFAULT_GATES)
    if overrides:
        unknown = set(overrides) - set(gates)
        if unknown:
            raise KeyError(f"unknown gate kinds {sorted(unknown)}")
        gates.update(overrides)
    return [
        CheckResult("unitarity (all gates, D=10)", _unitarity(gates), 1e-12),
        CheckResult("rotation: U^dag X U = cos X + sin P", _rotation(gates), 1e-12),
        CheckResult("beamsplitter: quadrature mixing, n1+n2 <= D-2", _beamsplitter(gates), 1e-12),
        CheckResult("displacement: X -> X + sqrt2 alpha, n <= D-10", _displacement(gates), 1e-6),
        CheckResult("squeeze: vacuum X variance", _squeeze(gates), 1e-3),
        CheckResult("kerr: diagonal exp(i kappa k^2)", _kerr(gates), 1e-15),
        CheckResult("ladder commutator", _commutator(), 1e-14),
        CheckResult("gradients vs finite differences", _gradients(), 1e-5),
    ]


def format_table(results: list[CheckResult]) -> str:
    width = max(len(r.name) for r in results)
    lines = [f"{'check':<{width}}  {'error':>10}  {'tol':>8}  result"]
    for r in results:
        lines.append(f"{r.name:<{width}}  {r.error:10.2e}  {r.tolerance:8.0e}  {'PASS' if r.passed else 'FAIL'}")
    return "\n".join(lines)

"""Wall-clock estimate for training on CV hardware with parameter-shift gradients.

Times are expressed in units of ``T_m``, the duration of one circuit pass plus
measurement.  One optimizer step costs ``4 n^2 (n + 4) L M_mu N`` such passes:
a factor 4 from nesting two-point shifts (input and parameter), ``n`` input
encodings, ``n (n + 4)`` parameters per layer, ``M_mu`` shots per expectation
value and ``N`` collocation points.  The alternative form ``4 n M_p L M_mu N``
with ``M_p = n (n + 4) L`` counts the layers twice for ``L > 1``; the two
agree at ``L = 1`` and the per-layer form is the one implemented.
"""

from __future__ import annotations

from dataclasses import dataclass

__all__ = ["HardwareEstimate", "estimate_step", "estimate_total", "estimate"]

DEFAULT_STEPS = 400


def _positive_int(name: str, value) -> int:
    if isinstance(value, bool) or int(value) != value or value < 1:
        raise ValueError(f"{name} must be a positive integer, got {value!r}")
    return int(value)


def estimate_step(n: int, L: int, N: int, M_mu: int) -> int:
    n = _positive_int("n", n)
    L = _positive_int("L", L)
    N = _positive_int("N", N)
    M_mu = _positive_int("M_mu", M_mu)
    return 4 * n * n * (n + 4) * L * M_mu * N


def estimate_total(n: int, L: int, N: int, M_mu: int, steps: int = DEFAULT_STEPS) -> int:
    return _positive_int("steps", steps) * estimate_step(n, L, N, M_mu)


@dataclass(frozen=True)
class HardwareEstimate:
    n: int
    L: int
    N: int
    M_mu: int
    steps: int
    t_step_in_Tm: int
    t_total_in_Tm: int


def estimate(n: int, L: int, N: int, M_mu: int, steps: int = DEFAULT_STEPS) -> HardwareEstimate:
    t_step = estimate_step(n, L, N, M_mu)
    return HardwareEstimate(n, L, N, M_mu, steps, t_step, estimate_total(n, L, N, M_mu, steps))

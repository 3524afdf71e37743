"""Compare the compiled and numpy kernel backends.

    python benchmarks/bench_kernels.py [--repeat N]

Times each kernel on the batch shapes the gradient engine produces (slot
buffer of a two-mode, two-layer network over 21 points at D = 10) and one
full loss/gradient evaluation of the linear problem.
"""

import argparse
import timeit

import numpy as np

from cvqode import fock, kernels
from cvqode.network import NetworkConfig, init_params
from cvqode.problems import linear_problem
from cvqode.training import make_grid, ode_loss_grad


def cases(cutoff=10, modes=2, rows=21 * 2 * 25):
    rng = np.random.default_rng(0)
    states = rng.normal(size=(rows, cutoff**modes)) + 1j * rng.normal(size=(rows, cutoff**modes))
    disp = fock.displacement_gate(0.3, cutoff)
    sq = fock.squeeze_gate(0.2, cutoff)
    diag = np.exp(1j * 0.1 * np.arange(cutoff) ** 2)
    bs = fock.beamsplitter_gate(0.7, cutoff)
    return {
        "dense, mode 0": lambda: kernels.apply_mode(disp, states, 0, modes, cutoff),
        "dense, mode 1": lambda: kernels.apply_mode(disp, states, 1, modes, cutoff),
        "squeeze, mode 0": lambda: kernels.apply_mode(sq, states, 0, modes, cutoff),
        "diagonal": lambda: kernels.apply_diag(diag, states, 1, modes, cutoff),
        "beamsplitter": lambda: kernels.apply_pair(bs, states, 0, 1, modes, cutoff),
    }


def loss_step():
    cfg = NetworkConfig(num_modes=2, num_layers=2, cutoff=10)
    p = linear_problem()
    grid = make_grid(p.domain, 20)
    flat = init_params(cfg, 0).flatten()
    return lambda: ode_loss_grad(flat, p, grid, cfg)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    backends = kernels.available_backends()
    if "compiled" not in backends:
        print("compiled extension not built; only the numpy backend is available")
    work = {**cases(), "ode_loss_grad (linear, L=2)": loss_step()}
    saved = kernels.get_backend()
    print(f"{'case':<30}" + "".join(f"{b:>14}" for b in backends) + ("      speedup" if len(backends) > 1 else ""))
    try:
        for name, fn in work.items():
            times = []
            for b in backends:
                kernels.set_backend(b)
                fn()  # warm caches
                number = 3
                times.append(min(timeit.repeat(fn, number=number, repeat=args.repeat)) / number)
            row = f"{name:<30}" + "".join(f"{t * 1e3:>11.3f} ms" for t in times)
            if len(times) == 2:
                row += f"{times[1] / times[0]:>12.2f}x"
            print(row)
    finally:
        kernels.set_backend(saved)


if __name__ == "__main__":
    main()

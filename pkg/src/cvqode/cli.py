"""Command-line front end.

    cvqode train <config-or-preset> [--output-dir DIR]
    cvqode estimate-cost [--n N] [--layers L] [--points N] [--shots M] [--steps S] [--tm SECONDS ...]
    cvqode selftest
    cvqode evaluate <run.json> --at X [--at X ...] [--best]

Exit status: 0 on success, 1 for configuration or usage errors, 2 for
numerical failures (divergence, failed self-checks).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from cvqode import __version__, cost, kernels, selftest
from cvqode.config import ConfigError, RunConfig, load_config
from cvqode.network import NetworkParams, forward
from cvqode.problems import reference_solution
from cvqode.training import TrainingDiverged, make_grid, predict, train

__all__ = ["main", "cmd_train", "cmd_estimate_cost", "cmd_selftest", "cmd_evaluate", "OUTPUT_ENV"]

log = logging.getLogger("cvqode")

OUTPUT_ENV = "CVQODE_OUTPUT_DIR"
EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2


def _fmt(v) -> str:
    return "%.17g" % v


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([r if isinstance(r, (int, np.integer)) else _fmt(r) for r in row])


def _output_dir(cfg: RunConfig, override: str | None) -> Path:
    if override:
        return Path(override)
    if cfg.output_dir:
        return Path(cfg.output_dir)
    base = os.environ.get(OUTPUT_ENV)
    return Path(base) if base else Path("runs") / cfg.problem


def cmd_train(config: str | RunConfig, output_dir: str | None = None) -> int:
    """Train from a config file or preset name and write CSV/JSON artifacts."""
    try:
        cfg = config if isinstance(config, RunConfig) else load_config(config)
        net_cfg, train_cfg = cfg.network_config(), cfg.train_config()
        problem = cfg.make_problem()
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    out = _output_dir(cfg, output_dir)
    out.mkdir(parents=True, exist_ok=True)
    grid = make_grid(problem.domain, train_cfg.grid_size)
    ref = reference_solution(problem, grid.points)

    def progress(step, loss):
        if step % 100 == 0:
            log.info("step %5d  loss %.6e", step, loss)

    t0 = time.perf_counter()
    status, message = EXIT_OK, None
    try:
        state = train(problem, net_cfg, train_cfg, callback=progress)
    except TrainingDiverged as exc:
        state, status, message = exc.state, EXIT_NUMERIC, str(exc)
        print(f"training diverged: {exc}", file=sys.stderr)
    elapsed = time.perf_counter() - t0

    snapshots = dict(state.snapshots)
    if state.best_params is not None and state.best_step not in snapshots:
        snapshots[state.best_step] = predict(state.best_params, grid.points, net_cfg)

    _write_csv(out / "loss.csv", ["step", "loss"], enumerate(state.loss_history))
    for step, ys in sorted(snapshots.items()):
        _write_csv(out / f"solution_{step}.csv", ["x", "y_pred", "y_ref"], zip(grid.points, ys, ref.ys))

    final_step = max(snapshots) if snapshots else None
    record = {
        "version": __version__,
        "kernel_backend": kernels.get_backend(),
        "config": cfg.to_dict(),
        "status": "diverged" if status else "completed",
        "message": message,
        "grid": grid.points.tolist(),
        "reference": {"method": ref.method, "y": ref.ys.tolist()},
        "loss_history": state.loss_history,
        "snapshots": {str(k): np.asarray(v).tolist() for k, v in sorted(snapshots.items())},
        "final_step": final_step,
        "final_loss": state.loss_history[-1] if state.loss_history else None,
        "final_max_abs_error": (
            float(np.max(np.abs(snapshots[final_step] - ref.ys))) if final_step is not None else None
        ),
        "best_step": state.best_step,
        "best_loss": state.best_loss if state.best_params is not None else None,
        "best_max_abs_error": (
            float(np.max(np.abs(snapshots[state.best_step] - ref.ys))) if state.best_params is not None else None
        ),
        "best_params": state.best_params.tolist() if state.best_params is not None else None,
        "final_params": state.last_params.tolist() if state.last_params is not None else None,
        "wall_clock_seconds": elapsed,
    }
    (out / "run.json").write_text(json.dumps(record, indent=1) + "\n")
    if status == EXIT_OK:
        print(
            f"{cfg.problem}: {len(state.loss_history)} steps, loss {state.loss_history[0]:.4e} -> "
            f"{state.loss_history[-1]:.4e}, max error {record['final_max_abs_error']:.4e} ({elapsed:.1f} s) -> {out}"
        )
    return status


def cmd_estimate_cost(n=2, layers=1, points=20, shots=100, steps=cost.DEFAULT_STEPS, tm=()) -> int:
    est = cost.estimate(n, layers, points, shots, steps)
    print(f"n={est.n} L={est.L} N={est.N} M_mu={est.M_mu} steps={est.steps}")
    print(f"T_step = {est.t_step_in_Tm} T_m")
    print(f"T_c    = {est.t_total_in_Tm} T_m")
    for t in tm:
        print(f"T_m = {t:g} s: T_step = {est.t_step_in_Tm * t:g} s, T_c = {est.t_total_in_Tm * t:g} s "
              f"({est.t_total_in_Tm * t / 3600:.4g} h)")
    return EXIT_OK


def cmd_selftest(overrides=None) -> int:
    results = selftest.run_selftest(overrides)
    print(selftest.format_table(results))
    return EXIT_OK if all(r.passed for r in results) else EXIT_NUMERIC


def cmd_evaluate(run_json: str, xs, best: bool = False) -> int:
    try:
        record = json.loads(Path(run_json).read_text())
        cfg = RunConfig(**{**record["config"], "domain": tuple(record["config"]["domain"]) if record["config"]["domain"] else None,
                           "snapshot_steps": tuple(record["config"]["snapshot_steps"])})
        key = "best_params" if best else "final_params"
        if record.get(key) is None:
            raise ConfigError(f"{run_json}: record has no {key}")
        net_cfg = cfg.network_config()
        params = NetworkParams.unflatten(net_cfg, record[key])
    except (OSError, KeyError, TypeError, json.JSONDecodeError, ConfigError, ValueError) as exc:
        print(f"cannot load run record: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    problem = cfg.make_problem()
    print("x,y_pred" + (",y_exact" if problem.exact else ""))
    for x in xs:
        row = [x, forward(x, params, net_cfg)]
        if problem.exact:
            row.append(float(problem.exact(x)))
        print(",".join(_fmt(v) for v in row))
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    # usage errors share the config-error exit code; 2 is reserved for numerics
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _positive(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="cvqode", description="CV quantum neural networks as IVP trial functions")
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true", help="log training progress")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    t = sub.add_parser("train", help="train on a config file or shipped preset")
    t.add_argument("config", help="path to a config file, or one of: linear, riccati, stiff")
    t.add_argument("--output-dir", help=f"artifact directory (default: config, then ${OUTPUT_ENV}, then runs/<problem>)")

    c = sub.add_parser("estimate-cost", help="hardware wall-clock estimate in units of T_m")
    c.add_argument("--n", type=_positive, default=2, help="modes")
    c.add_argument("--layers", type=_positive, default=1)
    c.add_argument("--points", type=_positive, default=20, help="collocation points")
    c.add_argument("--shots", type=_positive, default=100, help="measurements per expectation value")
    c.add_argument("--steps", type=_positive, default=cost.DEFAULT_STEPS, help="optimizer steps")
    c.add_argument("--tm", type=float, action="append", default=[], help="hypothetical T_m in seconds (repeatable)")

    sub.add_parser("selftest", help="gate algebra and gradient checks")

    e = sub.add_parser("evaluate", help="evaluate a trained network from run.json")
    e.add_argument("run_json")
    e.add_argument("--at", type=float, action="append", required=True, help="input x (repeatable)")
    e.add_argument("--best", action="store_true", help="use the lowest-loss parameters")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    if args.command == "train":
        return cmd_train(args.config, args.output_dir)
    if args.command == "estimate-cost":
        return cmd_estimate_cost(args.n, args.layers, args.points, args.shots, args.steps, args.tm)
    if args.command == "selftest":
        return cmd_selftest()
    return cmd_evaluate(args.run_json, args.at, args.best)


if __name__ == "__main__":
    sys.exit(main())

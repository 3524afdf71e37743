"""Run configuration files.

A run is described by an INI file with four sections::

    [problem]
    name = linear
    domain = -1, 1          ; optional, defaults to the problem's own

    [network]
    num_modes = 2
    num_layers = 2
    cutoff = 10
    activation = identity
    input_scale = 1.0

    [training]
    learning_rate = 0.02
    adam_eps = 1e-5
    max_steps = 1000
    seed = 0
    grid_size = 20
    snapshot_steps = 0, 20, 100, 999

    [output]
    output_dir = runs/linear

Every key is optional except ``[problem] name``.  Unknown sections or keys
are rejected.  Presets shipped with the package can be referred to by name.
"""

from __future__ import annotations

import configparser
from dataclasses import asdict, dataclass
from importlib import resources
from pathlib import Path

from cvqode.network import ACTIVATIONS, NetworkConfig
from cvqode.problems import PROBLEMS, IVProblem
from cvqode.training import TrainConfig

__all__ = ["ConfigError", "RunConfig", "load_config", "parse_config", "preset_names", "resolve_config_path"]


class ConfigError(ValueError):
    """Invalid run configuration; the message names the offending field."""


_SCHEMA = {
    "problem": {"name": str, "domain": "interval"},
    "network": {
        "num_modes": int,
        "num_layers": int,
        "cutoff": int,
        "activation": str,
        "input_scale": float,
    },
    "training": {
        "learning_rate": float,
        "adam_eps": float,
        "adam_beta1": float,
        "adam_beta2": float,
        "max_steps": int,
        "seed": int,
        "grid_size": int,
        "snapshot_steps": "intlist",
    },
    "output": {"output_dir": str},
}


@dataclass(frozen=True)
class RunConfig:
    problem: str = "linear"
    domain: tuple[float, float] | None = None
    num_modes: int = 2
    num_layers: int = 1
    cutoff: int = 10
    activation: str = "identity"
    input_scale: float = 1.0
    learning_rate: float = 0.02
    adam_eps: float = 1e-5
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    max_steps: int = 1000
    seed: int = 0
    grid_size: int = 20
    snapshot_steps: tuple[int, ...] = (0, 20, 100)
    output_dir: str | None = None

    def __post_init__(self):
        if self.problem not in PROBLEMS:
            raise ConfigError(f"[problem] name: unknown problem {self.problem!r}; choose from {sorted(PROBLEMS)}")
        if self.activation not in ACTIVATIONS:
            raise ConfigError(f"[network] activation: unknown activation {self.activation!r}; choose from {sorted(ACTIVATIONS)}")
        if self.domain is not None:
            a, b = self.domain
            if not a < b:
                raise ConfigError(f"[problem] domain: need a < b, got {a}, {b}")
        checks = [
            ("network", "num_modes", self.num_modes >= 1, ">= 1"),
            ("network", "num_layers", self.num_layers >= 1, ">= 1"),
            ("network", "cutoff", self.cutoff >= 2, ">= 2"),
            ("training", "learning_rate", self.learning_rate > 0, "> 0"),
            ("training", "adam_eps", self.adam_eps > 0, "> 0"),
            ("training", "adam_beta1", 0 < self.adam_beta1 < 1, "in (0, 1)"),
            ("training", "adam_beta2", 0 < self.adam_beta2 < 1, "in (0, 1)"),
            ("training", "max_steps", self.max_steps >= 1, ">= 1"),
            ("training", "grid_size", self.grid_size >= 2, ">= 2"),
            ("training", "snapshot_steps", all(s >= 0 for s in self.snapshot_steps), "non-negative"),
        ]
        for section, key, ok, rule in checks:
            if not ok:
                raise ConfigError(f"[{section}] {key}: must be {rule}, got {getattr(self, key)!r}")
        ivp = self.make_problem()
        if not ivp.domain[0] <= ivp.x0 <= ivp.domain[1]:
            raise ConfigError(f"[problem] domain: initial point x0={ivp.x0} lies outside {ivp.domain}")

    def make_problem(self) -> IVProblem:
        factory = PROBLEMS[self.problem]
        if self.domain is None:
            return factory()
        try:
            return factory(self.domain)
        except ValueError as exc:
            raise ConfigError(f"[problem] domain: {exc}") from None

    def network_config(self) -> NetworkConfig:
        return NetworkConfig(self.num_modes, self.num_layers, self.cutoff, self.activation, self.input_scale)

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            learning_rate=self.learning_rate,
            adam_beta1=self.adam_beta1,
            adam_beta2=self.adam_beta2,
            adam_eps=self.adam_eps,
            max_steps=self.max_steps,
            seed=self.seed,
            grid_size=self.grid_size,
            snapshot_steps=self.snapshot_steps,
        )

    def to_dict(self) -> dict:
        d = asdict(self)
        d["domain"] = list(self.domain) if self.domain is not None else None
        d["snapshot_steps"] = list(self.snapshot_steps)
        return d


def _parse(section: str, key: str, kind, raw: str):
    where = f"[{section}] {key}"
    try:
        if kind == "interval":
            parts = [float(p) for p in raw.replace(",", " ").split()]
            if len(parts) != 2:
                raise ValueError("expected two numbers")
            return tuple(parts)
        if kind == "intlist":
            return tuple(int(p) for p in raw.replace(",", " ").split())
        if kind is int:
            return int(raw)
        if kind is float:
            return float(raw)
        return raw.strip()
    except ValueError as exc:
        raise ConfigError(f"{where}: cannot parse {raw!r} ({exc})") from None


_KEY_TO_FIELD = {("problem", "name"): "problem"}


def parse_config(text: str, source: str = "<string>") -> RunConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"), interpolation=None)
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from None
    values = {}
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"[{section}]: unknown section; expected one of {sorted(_SCHEMA)}")
        for key, raw in parser.items(section):
            if key not in _SCHEMA[section]:
                raise ConfigError(f"[{section}] {key}: unknown key; expected one of {sorted(_SCHEMA[section])}")
            values[_KEY_TO_FIELD.get((section, key), key)] = _parse(section, key, _SCHEMA[section][key], raw)
    if "problem" not in values:
        raise ConfigError("[problem] name: required")
    return RunConfig(**values)


def preset_names() -> list[str]:
    root = resources.files("cvqode") / "presets"
    return sorted(p.name[: -len(".preset")] for p in root.iterdir() if p.name.endswith(".preset"))


def resolve_config_path(name_or_path: str):
    """A filesystem path, or the name of a shipped preset (with or without ``.preset``)."""
    path = Path(name_or_path)
    if path.is_file():
        return path
    stem = path.name[: -len(".preset")] if path.name.endswith(".preset") else path.name
    if path.parent == Path(".") and stem in preset_names():
        return resources.files("cvqode") / "presets" / f"{stem}.preset"
    raise ConfigError(f"config {name_or_path!r}: no such file or preset (presets: {', '.join(preset_names())})")


def load_config(name_or_path: str) -> RunConfig:
    source = resolve_config_path(name_or_path)
    return parse_config(source.read_text(), str(name_or_path))

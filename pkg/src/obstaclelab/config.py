"""Experiment configuration: ``key = value`` files overridable from the command line."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path

EXPERIMENTS = ("delta", "lostesso", "ratio", "capacity")

DEFAULT_GRID_SIZES = {
    "delta": (33, 65, 129),
    "lostesso": (33, 65, 129),
    "ratio": (33, 65, 129),
    "capacity": (16, 32, 64, 128, 256),
}


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str = "delta"
    grid_sizes: tuple[int, ...] = ()
    k: float = 0.35
    y: tuple[float, float] = (0.5, 0.5)
    z: tuple[float, float] = (0.25, 0.25)
    coefficients: str = "identity"
    radii: tuple[float, ...] = tuple(2.0**-j for j in range(2, 11))
    seed: int = 0
    output: str = "report.csv"
    omega: float = 1.8
    density: str = "sine(1.0)"
    obstacle_shift: float = 0.1
    disk_radius: float = 0.2

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}; choose from {', '.join(EXPERIMENTS)}")
        if not self.grid_sizes:
            object.__setattr__(self, "grid_sizes", DEFAULT_GRID_SIZES[self.experiment])
        sizes = self.grid_sizes
        if any(b <= a for a, b in zip(sizes[:-1], sizes[1:])):
            raise ValueError("grid sizes must be strictly increasing")
        if self.k <= 0:
            raise ValueError("k must be positive")
        for name in ("y", "z"):
            p = getattr(self, name)
            if len(p) != 2 or not all(0.0 < c < 1.0 for c in p):
                raise ValueError(f"{name} must be a point strictly inside the unit square")
        if any(b >= a for a, b in zip(self.radii[:-1], self.radii[1:])) or min(self.radii) <= 0:
            raise ValueError("radii must be positive and strictly decreasing")

    def with_overrides(self, **values) -> "ExperimentConfig":
        return dataclasses.replace(self, **values)

    def items(self):
        for f in dataclasses.fields(self):
            yield f.name, getattr(self, f.name)


KEY_HELP = {
    "experiment": "delta | lostesso | ratio | capacity",
    "grid_sizes": "comma-separated subdivisions per side, strictly increasing",
    "k": "obstacle level: psi = -k in the delta experiment",
    "y": "atom location x,y of the singular negative datum",
    "z": "atom location x,y of tau in the lostesso obstacle",
    "coefficients": "identity | scalar:c | checker:c1:c2 | skew:c:s | matrix:a11:a12:a21:a22",
    "radii": "comma-separated decreasing radii, or ladder:J0:J1 for 2^-J0 .. 2^-J1",
    "seed": "random seed",
    "output": "report path (CSV with '#' metadata header)",
    "omega": "projected SOR relaxation parameter",
    "density": "regular density expression, e.g. sine(1.0) or constant(2)",
    "obstacle_shift": "constant c in the lostesso obstacle psi = -u_tau - c",
    "disk_radius": "radius of the node disk in the capacity experiment",
}


def _parse_floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.replace(",", " ").split())


def parse_value(key: str, text: str):
    text = text.strip()
    if key in ("experiment", "coefficients", "output", "density"):
        return text
    if key == "grid_sizes":
        return tuple(int(v) for v in text.replace(",", " ").split())
    if key == "seed":
        return int(text)
    if key in ("y", "z"):
        return _parse_floats(text)
    if key == "radii":
        if text.startswith("ladder:"):
            _, j0, j1 = text.split(":")
            return tuple(2.0 ** -j for j in range(int(j0), int(j1) + 1))
        return _parse_floats(text)
    if key in ("k", "omega", "obstacle_shift", "disk_radius"):
        return float(text)
    raise KeyError(key)


def parse_config_text(text: str) -> dict:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip().replace("-", "_")
        if not sep:
            raise ValueError(f"line {lineno}: expected 'key = value'")
        if key not in KEY_HELP:
            raise ValueError(f"line {lineno}: unknown key {key!r}")
        values[key] = parse_value(key, value)
    return values


def load_config(path: str | Path | None = None, **overrides) -> ExperimentConfig:
    values = {}
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise FileNotFoundError(f"config file {p} not found")
        values.update(parse_config_text(p.read_text()))
    values.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig(**values)


def format_config(cfg: ExperimentConfig) -> str:
    lines = []
    for key, value in cfg.items():
        if isinstance(value, tuple):
            value = ",".join(repr(v) for v in value)
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"

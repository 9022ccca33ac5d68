"""Flat ``block.key = value`` experiment configuration files.

Blank lines and lines starting with ``#`` are ignored.  Lists are comma
separated; covariance matrices are given row-major.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .model import GaussianMeanModel, build_toeplitz_cov

REFERENCE_THETA1 = (0.24, 0.37, 0.24, 0.38, 0.30, 0.32, 0.35, 0.30, 0.26, 0.24)


class ConfigError(ValueError):
    pass


def parse_kv(text: str) -> dict[str, str]:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def _floats(value: str) -> list[float]:
    return [float(v) for v in value.replace(";", ",").split(",") if v.strip()]


def _bool(value: str) -> bool:
    v = value.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {value!r}")


def parse_phi_grid(spec: str) -> np.ndarray:
    """``start:stop:step`` (stop excluded) or a comma list, in degrees."""
    if ":" in spec:
        parts = [float(p) for p in spec.split(":")]
        if len(parts) != 3 or parts[2] <= 0:
            raise ConfigError(f"bad phi grid {spec!r}; expected start:stop:step")
        return np.arange(parts[0], parts[1], parts[2])
    return np.array(_floats(spec))


@dataclass
class ExperimentConfig:
    n_sensors: int = 10
    rho: float | None = 0.3
    cov: np.ndarray | None = None
    theta1: tuple[float, ...] = REFERENCE_THETA1
    cov_known: bool = True
    L: int = 20

    target_edges: int = 20
    side: float = 100.0
    network_seed: int = 1
    network_file: Path | None = None

    n_it: int = 20

    n_trials: int = 10_000
    base_seed: int = 2020

    directory: Path = Path(".")
    grid_size: int = 201

    statistics: tuple[str, ...] = ("glr", "lmp")
    distributed: bool = True
    reference_node: int = 0

    deflection_rho: tuple[float, ...] = (0.0, 0.3, 0.5, 0.8)
    deflection_phi: str = "0:360:1"
    deflection_norm: float = 1.0

    source: Path | None = field(default=None, repr=False)

    def model(self) -> GaussianMeanModel:
        theta1 = np.asarray(self.theta1, dtype=float)
        cov = self.cov if self.cov is not None else build_toeplitz_cov(self.rho, self.n_sensors)
        return GaussianMeanModel(np.zeros(self.n_sensors), theta1, cov, self.cov_known)

    def with_updates(self, **kwargs) -> "ExperimentConfig":
        return replace(self, **kwargs).validated()

    def validated(self) -> "ExperimentConfig":
        n = self.n_sensors
        if n < 1:
            raise ConfigError("model.n_sensors must be >= 1")
        if len(self.theta1) != n:
            raise ConfigError(f"model.theta1 has {len(self.theta1)} entries, expected {n}")
        if self.cov is None and (self.rho is None or not abs(self.rho) < 1):
            raise ConfigError("model.rho must satisfy |rho| < 1 when no covariance is given")
        if self.L < 1:
            raise ConfigError("model.L must be >= 1")
        if not self.cov_known and self.L < n + 1 and "glr" in self.statistics:
            raise ConfigError("unknown-covariance GLR needs model.L >= n_sensors + 1")
        if self.n_it < 1:
            raise ConfigError("consensus.n_it must be >= 1")
        if self.n_trials < 1:
            raise ConfigError("mc.n_trials must be >= 1")
        if self.grid_size < 2:
            raise ConfigError("output.grid_size must be >= 2")
        if not set(self.statistics) <= {"glr", "lmp"} or not self.statistics:
            raise ConfigError("experiment.statistics must list glr and/or lmp")
        if not 0 <= self.reference_node < n:
            raise ConfigError("experiment.reference_node out of range")
        if self.network_file is not None and not Path(self.network_file).exists():
            raise FileNotFoundError(str(self.network_file))
        try:
            self.model()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        return self


_KEYS = {
    "model.n_sensors": ("n_sensors", int),
    "model.rho": ("rho", float),
    "model.cov": ("cov", _floats),
    "model.theta1": ("theta1", lambda v: tuple(_floats(v))),
    "model.cov_known": ("cov_known", _bool),
    "model.L": ("L", int),
    "network.target_edges": ("target_edges", int),
    "network.side": ("side", float),
    "network.seed": ("network_seed", int),
    "network.file": ("network_file", Path),
    "consensus.n_it": ("n_it", int),
    "mc.n_trials": ("n_trials", int),
    "mc.base_seed": ("base_seed", int),
    "output.directory": ("directory", Path),
    "output.grid_size": ("grid_size", int),
    "experiment.statistics": ("statistics", lambda v: tuple(s.strip().lower() for s in v.split(",") if s.strip())),
    "experiment.distributed": ("distributed", _bool),
    "experiment.reference_node": ("reference_node", int),
    "deflection.rho": ("deflection_rho", lambda v: tuple(_floats(v))),
    "deflection.phi": ("deflection_phi", str),
    "deflection.norm_theta1": ("deflection_norm", float),
}


def config_from_mapping(values: dict[str, str], base_dir: Path | None = None) -> ExperimentConfig:
    kwargs = {}
    for key, raw in values.items():
        if key not in _KEYS:
            raise ConfigError(f"unknown config key {key!r}")
        name, conv = _KEYS[key]
        try:
            kwargs[name] = conv(raw)
        except ValueError as exc:
            raise ConfigError(f"{key}: {exc}") from exc
    if "cov" in kwargs:
        flat = np.asarray(kwargs["cov"], dtype=float)
        n = int(round(np.sqrt(flat.size)))
        if n * n != flat.size:
            raise ConfigError("model.cov must have a square number of entries")
        kwargs["cov"] = flat.reshape(n, n)
        kwargs["rho"] = None
    if "n_sensors" not in kwargs and "theta1" in kwargs:
        kwargs["n_sensors"] = len(kwargs["theta1"])
    if base_dir is not None and kwargs.get("network_file") is not None:
        path = kwargs["network_file"]
        kwargs["network_file"] = path if path.is_absolute() else base_dir / path
    return ExperimentConfig(**kwargs).validated()


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    cfg = config_from_mapping(parse_kv(path.read_text()), base_dir=path.parent)
    cfg.source = path
    return cfg

"""Experiment configuration: built-in defaults, JSON files and flag overrides."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Any

from .montecarlo import McConfig, default_workers

EXPERIMENTS = (
    "hardening",
    "block-interference",
    "one-ring-interference",
    "moment-validate",
    "scaling-diagnostic",
)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment run. Spreads are in degrees, phi/phi0 in radians."""

    experiment: str
    m: tuple[int, ...] = (16, 32, 64, 128, 256, 512)
    d_rank: tuple[int, ...] = tuple(range(1, 100))
    k_factor: float = 0.5
    phi: float = math.pi / 3
    phi0: tuple[float, ...] = (math.pi / 4, 3 * math.pi / 4)
    spacing: float = 0.5
    spread1_deg: tuple[float, ...] = (1.0, 5.0, 10.0, 20.0, 40.0)
    spread2_deg: tuple[float, ...] = tuple(float(x) for x in range(1, 91))
    scenarios: tuple[int, ...] = (1, 2, 3)
    specs: int = 50
    k_range: tuple[float, float] = (0.0, 10.0)
    trials: int = 2000
    seed: int = 1
    workers: int = 1
    basis_draws: int = 32
    out: str | None = None

    def __post_init__(self) -> None:
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, list):
                object.__setattr__(self, f.name, tuple(value))
        validate(self)

    @property
    def mc(self) -> McConfig:
        return McConfig(self.trials, self.seed, self.workers)

    def to_dict(self) -> dict[str, Any]:
        return {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(self).items()}

    def canonical(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


# per-experiment departures from the dataclass defaults
EXPERIMENT_DEFAULTS: dict[str, dict[str, Any]] = {
    "hardening": {},
    "block-interference": {"m": (100,), "scenarios": (1, 2)},
    "one-ring-interference": {"m": (100,)},
    "moment-validate": {"m": (16,), "trials": 1_000_000},
    "scaling-diagnostic": {"m": (32, 64, 128, 256, 512), "phi0": (math.pi / 3, math.pi / 3)},
}

_TUPLE_FIELDS = {"m", "d_rank", "phi0", "spread1_deg", "spread2_deg", "scenarios", "k_range"}
_INT_ITEMS = {"m", "d_rank", "scenarios"}
_INT_FIELDS = {"specs", "trials", "seed", "workers", "basis_draws"}
_FLOAT_FIELDS = {"k_factor", "phi", "spacing"}


def _coerce(name: str, value: Any) -> Any:
    try:
        if name in _TUPLE_FIELDS:
            if isinstance(value, (str, int, float)):
                value = [value]
            items = list(value)
            if name in _INT_ITEMS:
                out = []
                for v in items:
                    if isinstance(v, float) and not v.is_integer():
                        raise ConfigError(f"{name}: {v!r} is not an integer")
                    out.append(int(v))
                return tuple(out)
            return tuple(float(v) for v in items)
        if name in _INT_FIELDS:
            if isinstance(value, float) and not value.is_integer():
                raise ConfigError(f"{name}: {value!r} is not an integer")
            return int(value)
        if name in _FLOAT_FIELDS:
            return float(value)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{name}: cannot interpret {value!r}") from exc
    return value


def build_config(experiment: str | None = None, file_values: dict | None = None, overrides: dict | None = None) -> ExperimentConfig:
    """Merge built-in defaults, then file values, then flag overrides (flags win)."""
    file_values = dict(file_values or {})
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
    exp = overrides.pop("experiment", None) or experiment or file_values.get("experiment")
    if exp not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {exp!r}; choose one of {', '.join(EXPERIMENTS)}")
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = (set(file_values) | set(overrides)) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    merged: dict[str, Any] = {"workers": default_workers()}
    merged.update(EXPERIMENT_DEFAULTS[exp])
    merged.update(file_values)
    merged.update(overrides)
    merged["experiment"] = exp
    values = {k: _coerce(k, v) for k, v in merged.items()}
    return ExperimentConfig(**values)


def load_config_file(path: str | Path) -> dict[str, Any]:
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return data


def validate(cfg: ExperimentConfig) -> None:
    if cfg.experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {cfg.experiment!r}")
    for name in ("m", "d_rank", "phi0", "spread1_deg", "spread2_deg", "scenarios"):
        if len(getattr(cfg, name)) == 0:
            raise ConfigError(f"{name} must not be empty")
    if any(m < 2 for m in cfg.m):
        raise ConfigError(f"every M must be >= 2, got {list(cfg.m)}")
    if not cfg.k_factor >= 0:
        raise ConfigError(f"k_factor must be >= 0, got {cfg.k_factor!r}")
    if len(cfg.k_range) != 2 or not 0 <= cfg.k_range[0] <= cfg.k_range[1]:
        raise ConfigError(f"k_range must be [lo, hi] with 0 <= lo <= hi, got {list(cfg.k_range)}")
    if math.isinf(cfg.k_range[1]) and cfg.k_range[0] != cfg.k_range[1]:
        raise ConfigError("an infinite k_range is only allowed as [inf, inf] (pure LoS)")
    if not (cfg.spacing > 0 and math.isfinite(cfg.spacing)):
        raise ConfigError(f"spacing must be a positive number, got {cfg.spacing!r}")
    for name in ("phi", "spacing"):
        if not math.isfinite(getattr(cfg, name)):
            raise ConfigError(f"{name} must be finite")
    for name in ("trials", "workers", "basis_draws", "specs"):
        if getattr(cfg, name) < 1:
            raise ConfigError(f"{name} must be >= 1, got {getattr(cfg, name)}")
    if not 0 <= cfg.seed < 2**64:
        raise ConfigError("seed must be a 64-bit unsigned integer")
    for name in ("spread1_deg", "spread2_deg"):
        bad = [s for s in getattr(cfg, name) if not 0 < s <= 180]
        if bad:
            raise ConfigError(f"{name} values must lie in (0, 180] degrees, got {bad}")

    exp = cfg.experiment
    if exp in ("hardening", "scaling-diagnostic"):
        bad = [s for s in cfg.scenarios if s not in (1, 2, 3)]
        if bad:
            raise ConfigError(f"coupling scenarios must be 1, 2 or 3, got {bad}")
    if exp == "block-interference":
        bad = [s for s in cfg.scenarios if s not in (1, 2)]
        if bad:
            raise ConfigError(f"block scenarios must be 1 or 2, got {bad}")
    if exp in ("block-interference", "one-ring-interference") and len(cfg.m) != 1:
        raise ConfigError(f"{exp} takes exactly one M (e.g. --m 100), got {list(cfg.m)}")
    if exp == "block-interference":
        m = cfg.m[0]
        bad = [d for d in cfg.d_rank if not 1 <= d <= m - 1]
        if bad:
            raise ConfigError(f"d_rank values must lie in [1, {m - 1}] for M={m}, got {bad}")
    if exp in ("one-ring-interference", "scaling-diagnostic") and len(cfg.phi0) != 2:
        raise ConfigError(f"{exp} needs two phi0 values (one per user), got {list(cfg.phi0)}")
    if exp == "scaling-diagnostic":
        ms = sorted(set(cfg.m))
        if len(ms) < 3:
            raise ConfigError("scaling-diagnostic needs at least 3 distinct M values")
        if ms[-1] < 10 * ms[0]:
            raise ConfigError(f"scaling-diagnostic M values must span a decade, got {ms[0]}..{ms[-1]}")

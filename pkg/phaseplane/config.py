"""
Experiment configuration.

A config is a JSON object with the sections `grid`, `sampling`, `universe`,
`values` and `ensemble` plus a few top-level exponents. Missing fields take
their defaults. `PHASEPLANE_SEED`, `PHASEPLANE_SEEDS` and `PHASEPLANE_OUT`
override the seed, the seed count and the output directory.
"""

import dataclasses
import hashlib
import json
import math
import os
from dataclasses import dataclass, field
from typing import Any, Dict, Mapping, Optional, Tuple

from phaseplane.geometry import DyadicGrid, Universe
from phaseplane.operators import OPERATORS
from phaseplane.paths import get_path, set_path
from phaseplane.utils import ConfigError, is_power_of_two
from phaseplane.values import KIND_TAGS, MAX_DIM, ValueSpace, make_space

ENV_OVERRIDES = {
    "PHASEPLANE_SEED": ("ensemble.seed", int),
    "PHASEPLANE_SEEDS": ("ensemble.seed_count", int),
    "PHASEPLANE_OUT": ("output_dir", str),
}


@dataclass(frozen=True)
class GridConfig:
    t: float = 0.0
    r: float = 1.0
    t_freq: float = 0.0

    def build(self) -> DyadicGrid:
        return DyadicGrid(t=self.t, r=self.r, t_freq=self.t_freq)


@dataclass(frozen=True)
class SamplingConfig:
    L: float = 512.0
    N: int = 16384


@dataclass(frozen=True)
class UniverseConfig:
    k_min: int = -2
    k_max: int = 2
    time_min: float = -32.0
    time_max: float = 32.0
    freq_min: float = 0.0
    freq_max: float = 4.0

    def build(self) -> Universe:
        return Universe(**dataclasses.asdict(self))


@dataclass(frozen=True)
class ValueConfig:
    kind: str = "hilbert"
    dim: int = 4
    p: float = 2.0

    def build(self) -> ValueSpace:
        return make_space(self.kind, dim=self.dim, p=self.p)


@dataclass(frozen=True)
class EnsembleConfig:
    seed: int = 0
    seed_count: int = 100
    sizes: Tuple[int, ...] = (1, 2, 4)
    tree_count: int = 4
    tiles_per_tree: int = 4
    threads: int = 1


@dataclass(frozen=True)
class ExperimentConfig:
    """
    Everything a command needs.

    Use `load_config()` or `ExperimentConfig.from_dict()`; both validate.
    """

    grid: GridConfig = field(default_factory=GridConfig)
    sampling: SamplingConfig = field(default_factory=SamplingConfig)
    universe: UniverseConfig = field(default_factory=UniverseConfig)
    values: ValueConfig = field(default_factory=ValueConfig)
    ensemble: EnsembleConfig = field(default_factory=EnsembleConfig)
    q: float = 2.0
    alpha: float = 0.9
    p_list: Tuple[float, ...] = (1.25, 2.0, 4.0)
    K: float = 16.0
    maximal_level: int = 3
    frequency_bound: float = 1.0
    operators: Tuple[str, ...] = ("S", "Sstar", "M")
    periodic_samples: int = 1024
    output_dir: str = "phaseplane-out"

    @staticmethod
    def from_dict(raw: Mapping[str, Any]) -> "ExperimentConfig":
        if not isinstance(raw, Mapping):
            raise TypeError(f"`raw` must be a mapping but was: {type(raw)}")
        config = _build(ExperimentConfig, raw, prefix="")
        validate(config)
        return config

    def to_dict(self) -> dict:
        return _to_plain(dataclasses.asdict(self))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def digest(self) -> str:
        """sha256 of the canonical JSON form."""
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    def with_changes(self, **changes) -> "ExperimentConfig":
        """Copy with dot-path changes, e.g. `with_changes(**{"ensemble.seed": 3})`."""
        raw = self.to_dict()
        for path, value in changes.items():
            set_path(raw, path, value, make_missing=False)
        return ExperimentConfig.from_dict(raw)


def _to_plain(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {k: _to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_to_plain(v) for v in obj]
    return obj


def _convert(value: Any, annotation: Any, path: str) -> Any:
    try:
        if annotation in (float, "float"):
            if isinstance(value, bool):
                raise TypeError
            return float(value)
        if annotation in (int, "int"):
            if isinstance(value, bool) or (isinstance(value, float) and not value.is_integer()):
                raise TypeError
            return int(value)
        if annotation in (str, "str"):
            if not isinstance(value, str):
                raise TypeError
            return value
        if annotation in (Tuple[int, ...], "Tuple[int, ...]"):
            return tuple(_convert(v, int, path) for v in value)
        if annotation in (Tuple[float, ...], "Tuple[float, ...]"):
            return tuple(_convert(v, float, path) for v in value)
        if annotation in (Tuple[str, ...], "Tuple[str, ...]"):
            if isinstance(value, str):
                raise TypeError
            return tuple(_convert(v, str, path) for v in value)
    except (TypeError, ValueError):
        raise ConfigError(path, f"cannot interpret {value!r} as {annotation}") from None
    raise ConfigError(path, f"unsupported field type {annotation}")


def _build(cls, raw: Mapping[str, Any], prefix: str):
    fields = {f.name: f for f in dataclasses.fields(cls)}
    unknown = sorted(set(raw) - set(fields))
    if unknown:
        raise ConfigError(prefix + unknown[0], "unknown field")
    kwargs = {}
    for name, f in fields.items():
        if name not in raw:
            continue
        path = prefix + name
        value = raw[name]
        section = f.default_factory
        if section is not dataclasses.MISSING and dataclasses.is_dataclass(section):
            if not isinstance(value, Mapping):
                raise ConfigError(path, "must be a section (JSON object)")
            kwargs[name] = _build(section, value, path + ".")
        else:
            kwargs[name] = _convert(value, f.type, path)
    return cls(**kwargs)


def _require(condition: bool, path: str, message: str) -> None:
    if not condition:
        raise ConfigError(path, message)


def validate(config: ExperimentConfig) -> None:
    """
    Check every field against the preconditions of the code that uses it.

    Raises
    ------
    ConfigError
        Naming the first failing field.
    """
    _require(math.isfinite(config.grid.r) and config.grid.r > 0, "grid.r", "must be positive")
    _require(math.isfinite(config.grid.t), "grid.t", "must be finite")
    _require(math.isfinite(config.grid.t_freq), "grid.t_freq", "must be finite")

    L, N = config.sampling.L, config.sampling.N
    _require(is_power_of_two(N), "sampling.N", "must be a power of two")
    _require(math.isfinite(L) and L >= 40, "sampling.L", "must be at least 40")

    u = config.universe
    _require(u.k_min <= u.k_max, "universe.k_min", "must not exceed `universe.k_max`")
    _require(u.time_min < u.time_max, "universe.time_min", "must be below `universe.time_max`")
    _require(u.freq_min < u.freq_max, "universe.freq_min", "must be below `universe.freq_max`")
    _require(
        -L <= u.time_min and u.time_max <= L,
        "universe.time_max",
        f"time window must lie inside the sample window [-{L:g}, {L:g})",
    )
    _require(
        N / (4 * L) > max(abs(u.freq_min), abs(u.freq_max)),
        "universe.freq_max",
        f"frequency window must stay below the Nyquist frequency {N / (4 * L):g}",
    )

    v = config.values
    _require(v.kind in KIND_TAGS, "values.kind", f"must be one of {tuple(KIND_TAGS)}")
    _require(1 <= v.dim <= MAX_DIM, "values.dim", f"must be in [1, {MAX_DIM}]")
    _require(v.p > 1, "values.p", "must be in (1, inf]")

    _require(1 < config.q < math.inf, "q", "must be in (1, inf)")
    _require(0 < config.alpha < 1, "alpha", "must be in (0, 1)")
    _require(len(config.p_list) > 0, "p_list", "must not be empty")
    for p in config.p_list:
        _require(1 < p < math.inf, "p_list", f"exponent {p} must be in (1, inf)")
    _require(config.K > 0, "K", "must be positive")
    _require(config.maximal_level >= 0, "maximal_level", "must be non-negative")
    _require(config.frequency_bound > 0, "frequency_bound", "must be positive")
    _require(len(config.operators) > 0, "operators", "must not be empty")
    for name in config.operators:
        _require(name in OPERATORS, "operators", f"must be names from {tuple(OPERATORS)}")
    _require(is_power_of_two(config.periodic_samples), "periodic_samples", "must be a power of two")

    e = config.ensemble
    _require(e.seed >= 0, "ensemble.seed", "must be non-negative")
    _require(e.seed_count >= 1, "ensemble.seed_count", "must be positive")
    _require(len(e.sizes) > 0 and all(s >= 1 for s in e.sizes), "ensemble.sizes", "must be positive")
    _require(e.tree_count >= 1, "ensemble.tree_count", "must be positive")
    _require(e.tiles_per_tree >= 1, "ensemble.tiles_per_tree", "must be positive")
    _require(e.threads >= 1 or e.threads == -1, "ensemble.threads", "must be positive or -1")


def apply_env(raw: dict, environ: Optional[Mapping[str, str]] = None) -> dict:
    """Apply the `PHASEPLANE_*` overrides to a raw config mapping (in place)."""
    environ = os.environ if environ is None else environ
    for name, (path, kind) in ENV_OVERRIDES.items():
        if name in environ:
            try:
                value = kind(environ[name])
            except ValueError:
                raise ConfigError(path, f"cannot interpret ${name}={environ[name]!r}") from None
            set_path(raw, path, value)
    return raw


def load_config(
    path: Optional[str] = None,
    overrides: Optional[Dict[str, Any]] = None,
    environ: Optional[Mapping[str, str]] = None,
) -> ExperimentConfig:
    """
    Read a JSON config (or start from defaults), then apply the environment
    and the dot-path `overrides` (command-line flags win), then validate.
    """
    raw: dict = {}
    if path is not None:
        try:
            with open(path, "r", encoding="utf-8") as handle:
                raw = json.load(handle)
        except OSError as e:
            raise ConfigError("<file>", f"cannot read {path}: {e.strerror}") from None
        except json.JSONDecodeError as e:
            raise ConfigError("<file>", f"invalid JSON in {path}: {e}") from None
        if not isinstance(raw, dict):
            raise ConfigError("<file>", "the config must be a JSON object")
    apply_env(raw, environ)
    for dotted, value in (overrides or {}).items():
        if value is not None:
            set_path(raw, dotted, value)
    return ExperimentConfig.from_dict(raw)


def describe(config: ExperimentConfig, paths) -> Dict[str, Any]:
    """The values at the dot-`paths` of `config` (for report headers)."""
    return {p: get_path(config, p, default="raise") for p in paths}

"""Flat ``key = value`` configuration files.

Blank lines and ``#`` comments are ignored. Every key is optional; missing
keys take the defaults below, which reproduce the 100-machine reference
setup. Unknown keys are rejected.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from .maze import MazeScenarioConfig
from .metrics import FixedBaseline
from .network import SimConfig
from .social import DecayParams, Weights

DEFAULT_THRESHOLDS = tuple(round(i * 0.05, 2) for i in range(21))
DEFAULT_SEEDS = tuple(range(1, 21))


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SweepSettings:
    thresholds: tuple[float, ...] = DEFAULT_THRESHOLDS
    seeds: tuple[int, ...] = DEFAULT_SEEDS
    baseline: FixedBaseline = field(default_factory=FixedBaseline)
    time_average: bool = False
    workers: int = 1


@dataclass(frozen=True)
class Config:
    sim: SimConfig = field(default_factory=SimConfig)
    sweep: SweepSettings = field(default_factory=SweepSettings)
    maze: MazeScenarioConfig = field(default_factory=MazeScenarioConfig)


def parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def parse_float_list(text: str) -> tuple[float, ...]:
    values = tuple(float(tok) for tok in text.split(",") if tok.strip())
    if not values:
        raise ValueError("expected at least one number")
    return values


def parse_seed_list(text: str) -> tuple[int, ...]:
    """Comma-separated seeds; ``a..b`` expands to an inclusive range."""
    seeds: list[int] = []
    for tok in (t.strip() for t in text.split(",")):
        if not tok:
            continue
        if ".." in tok:
            lo, hi = (int(v) for v in tok.split(".."))
            if hi < lo:
                raise ValueError(f"empty seed range {tok!r}")
            seeds.extend(range(lo, hi + 1))
        else:
            seeds.append(int(tok))
    if not seeds:
        raise ValueError("expected at least one seed")
    for s in seeds:
        if not 0 <= s < 2**64:
            raise ValueError(f"seed {s} is not an unsigned 64-bit integer")
    return tuple(seeds)


def _optional_int(text: str) -> int | None:
    return None if text.strip().lower() in ("", "none", "unlimited") else int(text)


_KEYS: dict[str, tuple[str, Callable[[str], object]]] = {
    # key: (section.field, parser)
    "machines": ("sim.machine_count", int),
    "subspaces": ("sim.subspace_count", int),
    "interest_universe": ("sim.interest_universe", int),
    "interests_per_machine": ("sim.interests_per_machine", int),
    "w_interest": ("weights.interest", float),
    "w_spatial": ("weights.spatial", float),
    "w_neighbor": ("weights.neighbor", float),
    "decay_rate": ("decay.rate", float),
    "threshold": ("decay.threshold", float),
    "visibility": ("sim.visibility", str),
    "adhoc_range": ("sim.adhoc_range", int),
    "p_move": ("sim.p_move", float),
    "p_interest": ("sim.p_interest", float),
    "steps": ("sim.steps", int),
    "seed": ("sim.seed", int),
    "decay_scaled": ("sim.decay_scaled", parse_bool),
    "refractory": ("sim.refractory", int),
    "thresholds": ("sweep.thresholds", parse_float_list),
    "seeds": ("sweep.seeds", parse_seed_list),
    "baseline_degree": ("sweep.baseline_degree", int),
    "time_average": ("sweep.time_average", parse_bool),
    "workers": ("sweep.workers", int),
    "maze": ("maze.maze", str),
    "radio_range": ("maze.radio_range", int),
    "max_steps": ("maze.max_steps", int),
    "share_mode": ("maze.share_mode", str),
    "share_cap": ("maze.share_cap", _optional_int),
    "explore": ("maze.explore", str),
}

KNOWN_KEYS = tuple(_KEYS)


def parse_config_text(text: str, source: str = "<config>") -> Config:
    values: dict[str, dict[str, object]] = {s: {} for s in ("sim", "weights", "decay", "sweep", "maze")}
    seen: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _KEYS:
            raise ConfigError(f"{source}:{lineno}: unknown field {key!r}")
        if key in seen:
            raise ConfigError(f"{source}:{lineno}: field {key!r} already set on line {seen[key]}")
        seen[key] = lineno
        target, parser = _KEYS[key]
        try:
            parsed = parser(value)
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: field {key!r}: {exc}") from None
        section, name = target.split(".")
        values[section][name] = parsed

    try:
        weights = Weights(**values["weights"])
        decay = DecayParams(**values["decay"])
        sim = SimConfig(weights=weights, decay=decay, **values["sim"])
        sw = dict(values["sweep"])
        baseline = FixedBaseline(sw.pop("baseline_degree", FixedBaseline().degree))
        if baseline.degree > sim.machine_count - 1:
            raise ValueError(
                f"FixedBaseline: degree {baseline.degree} exceeds machines - 1 = {sim.machine_count - 1}"
            )
        for c_th in sw.get("thresholds", ()):
            if not 0.0 <= c_th <= 1.0:
                raise ValueError(f"SweepSettings: threshold {c_th} outside [0, 1]")
        if sw.get("workers", 1) < 1:
            raise ValueError("SweepSettings: workers must be >= 1")
        sweep = SweepSettings(baseline=baseline, **sw)
        maze = MazeScenarioConfig(seed=sim.seed, **values["maze"])
    except ValueError as exc:
        raise ConfigError(f"{source}: invalid configuration: {exc}") from None
    return Config(sim=sim, sweep=sweep, maze=maze)


def parse_config(path: str | Path) -> Config:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config_text(text, str(path))

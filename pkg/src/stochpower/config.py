"""Run configuration: one YAML file with five blocks.

Every error names the offending key and the line it sits on (or the line of
its enclosing block when the key is missing).
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .channel import FiniteMarkovProcess, IidIntervalProcess
from .game import GameConfig, default_power_cap
from .strategies import MECHANISMS

__all__ = ["ConfigError", "RunConfig", "load_config", "parse_config"]


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


SCHEMA = {
    "game": {"K": True, "R": True, "sigma2": True, "p_max": False, "lambda": True},
    "channel": {"type": True, "states": False, "transition": False, "eta_min": False,
                "eta_max": False, "seed": False},
    "strategy": {"mechanisms": False, "policy": False, "smu": False},
    "analysis": {"grid": False, "budget": False, "T": False, "seeds": False, "K_range": False,
                 "minmax_grid": False, "mc_samples": False},
    "output": {"directory": False, "trace": False},
}
SMU_OPTIONS = {"selection"}


@dataclass
class StrategyConfig:
    mechanisms: tuple[str, ...] = MECHANISMS
    policy: str = "smu"
    selection: str = "auto"


@dataclass
class AnalysisConfig:
    grid: int = 6
    budget: int = 10_000_000
    T: int = 100_000
    seeds: list[int] = field(default_factory=lambda: list(range(16)))
    K_range: tuple[int, int] = (2, 6)
    minmax_grid: int = 101
    mc_samples: int = 1_000_000


@dataclass
class OutputConfig:
    directory: Path = Path("out")
    trace: bool = False


@dataclass
class RunConfig:
    game: GameConfig
    process: FiniteMarkovProcess | IidIntervalProcess
    strategy: StrategyConfig
    analysis: AnalysisConfig
    output: OutputConfig
    digest: str

    @property
    def K_values(self) -> list[int]:
        lo, hi = self.analysis.K_range
        return list(range(lo, hi + 1))


def _lines(node, prefix=()):
    """Map key paths to 1-based line numbers from a composed YAML tree."""
    out = {}
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            path = prefix + (k.value,)
            out[path] = k.start_mark.line + 1
            out.update(_lines(v, path))
    return out


def parse_config(text: str) -> RunConfig:
    try:
        tree = yaml.compose(text)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(f"YAML syntax error: {getattr(exc, 'problem', exc)}",
                          mark.line + 1 if mark else None) from None
    if not isinstance(data, dict):
        raise ConfigError("config must be a mapping of blocks", 1)
    lines = _lines(tree)

    for block, value in data.items():
        if block not in SCHEMA:
            raise ConfigError(f"unknown block '{block}' (expected one of {sorted(SCHEMA)})", lines[(block,)])
        if not isinstance(value, dict):
            raise ConfigError(f"block '{block}' must be a mapping", lines[(block,)])
        for key in value:
            if key not in SCHEMA[block]:
                raise ConfigError(f"unknown key '{block}.{key}'", lines[(block, key)])
    for block, keys in SCHEMA.items():
        for key, required in keys.items():
            if required and key not in data.get(block, {}):
                raise ConfigError(f"missing required key '{block}.{key}'", lines.get((block,)))

    def get(block, key, default=None):
        return data.get(block, {}).get(key, default)

    def line(block, key=None):
        return lines.get((block, key) if key else (block,), lines.get((block,)))

    def number(block, key, kind=float, default=None, check=None, what=""):
        raw = get(block, key, default)
        if raw is None:
            return None
        try:
            if isinstance(raw, bool) or not isinstance(raw, (int, float)):
                raise TypeError
            val = kind(raw)
            if kind is int and val != raw:
                raise ValueError
        except (TypeError, ValueError):
            raise ConfigError(f"'{block}.{key}' must be {kind.__name__}, got {raw!r}", line(block, key)) from None
        if check is not None and not check(val):
            raise ConfigError(f"'{block}.{key}' must be {what}, got {raw!r}", line(block, key))
        return val

    K = number("game", "K", int, check=lambda v: v >= 1, what=">= 1")
    R = get("game", "R")
    if isinstance(R, list):
        if len(R) != K:
            raise ConfigError(f"'game.R' lists {len(R)} rates for K={K}", line("game", "R"))
        if not all(isinstance(r, (int, float)) and r > 0 for r in R):
            raise ConfigError("'game.R' entries must be > 0", line("game", "R"))
    else:
        R = number("game", "R", check=lambda v: v > 0, what="> 0")
    sigma2 = number("game", "sigma2", check=lambda v: v > 0, what="> 0")
    lam = number("game", "lambda", check=lambda v: 0 < v < 1, what="in (0, 1)")
    p_max = number("game", "p_max", check=lambda v: v > 0, what="> 0")

    kind = get("channel", "type")
    seed = number("channel", "seed", int, default=0)
    try:
        if kind == "markov":
            for key in ("states", "transition"):
                if get("channel", key) is None:
                    raise ConfigError(f"missing required key 'channel.{key}' for a markov channel", line("channel"))
            process = FiniteMarkovProcess(get("channel", "states"), get("channel", "transition"), K, seed)
        elif kind == "iid":
            for key in ("eta_min", "eta_max"):
                if get("channel", key) is None:
                    raise ConfigError(f"missing required key 'channel.{key}' for an iid channel", line("channel"))
            process = IidIntervalProcess(get("channel", "eta_min"), get("channel", "eta_max"), K, seed)
        else:
            raise ConfigError(f"'channel.type' must be 'markov' or 'iid', got {kind!r}", line("channel", "type"))
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"channel: {exc}", line("channel")) from None

    try:
        probe = GameConfig(K, R, sigma2, 1.0, lam)
        if p_max is None:
            p_max = default_power_cap(sigma2, probe.a, process.gain_bounds[0])
        game = GameConfig(K, R, sigma2, p_max, lam)
    except ValueError as exc:
        raise ConfigError(f"game: {exc}", line("game")) from None

    mechanisms = get("strategy", "mechanisms", list(MECHANISMS))
    allowed = set(MECHANISMS) | {"nash"}
    if not isinstance(mechanisms, list) or not all(m in allowed for m in mechanisms):
        raise ConfigError(f"'strategy.mechanisms' must list names from {sorted(allowed)}", line("strategy", "mechanisms"))
    policy = get("strategy", "policy", "smu")
    if policy not in allowed | {"grim_smu"}:
        raise ConfigError(f"'strategy.policy' must be one of {sorted(allowed | {'grim_smu'})}",
                          line("strategy", "policy"))
    smu_opts = get("strategy", "smu", {}) or {}
    if not isinstance(smu_opts, dict) or set(smu_opts) - SMU_OPTIONS:
        raise ConfigError(f"'strategy.smu' accepts only {sorted(SMU_OPTIONS)}", line("strategy", "smu"))
    selection = smu_opts.get("selection", "auto")
    if selection not in ("auto", "exhaustive"):
        raise ConfigError("'strategy.smu.selection' must be 'auto' or 'exhaustive'", line("strategy", "smu"))
    strategy = StrategyConfig(tuple(mechanisms), policy, selection)

    seeds_raw = get("analysis", "seeds", 16)
    if isinstance(seeds_raw, list):
        if not seeds_raw or not all(isinstance(s, int) for s in seeds_raw):
            raise ConfigError("'analysis.seeds' must be a non-empty list of integers", line("analysis", "seeds"))
        seeds = list(seeds_raw)
    else:
        n = number("analysis", "seeds", int, check=lambda v: v >= 1, what=">= 1")
        seeds = [seed + j for j in range(n)]
    K_range = get("analysis", "K_range", [2, 6])
    if (not isinstance(K_range, list) or len(K_range) != 2
            or not all(isinstance(k, int) and k >= 1 for k in K_range) or K_range[0] > K_range[1]):
        raise ConfigError("'analysis.K_range' must be [lo, hi] with 1 <= lo <= hi", line("analysis", "K_range"))
    analysis = AnalysisConfig(
        grid=number("analysis", "grid", int, 6, lambda v: v >= 2, ">= 2"),
        budget=number("analysis", "budget", int, 10_000_000, lambda v: v >= 1, ">= 1"),
        T=number("analysis", "T", int, 100_000, lambda v: v >= 1, ">= 1"),
        seeds=seeds,
        K_range=(K_range[0], K_range[1]),
        minmax_grid=number("analysis", "minmax_grid", int, 101, lambda v: v >= 2, ">= 2"),
        mc_samples=number("analysis", "mc_samples", int, 1_000_000, lambda v: v >= 2, ">= 2"),
    )
    trace = get("output", "trace", False)
    if not isinstance(trace, bool):
        raise ConfigError("'output.trace' must be true or false", line("output", "trace"))
    output = OutputConfig(Path(str(get("output", "directory", "out"))), trace)
    digest = hashlib.sha256(text.encode()).hexdigest()
    return RunConfig(game, process, strategy, analysis, output, digest)


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text)

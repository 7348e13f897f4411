"""Run configuration and its flat ``section.key = value`` text format.

Example::

    # rate-0.9 DCT model
    model.arch = dct
    model.layers = 256
    model.embed = 128
    model.rate = 0.9
    optim.lr = 0.001
    schedule.steps = 2000
    seed = 1

Blank lines and ``#`` comments are ignored.  Every key must exist; unknown
keys and malformed values are errors.
"""
from __future__ import annotations

import dataclasses
import typing
from dataclasses import dataclass, field
from pathlib import Path

from .model import ModelSpec


class ConfigError(ValueError):
    pass


@dataclass
class ModelSection:
    arch: str = "dct"
    layers: tuple[int, ...] = (1840, 1840, 400)
    embed: int = 400
    rate: float = 0.0
    corner: str = "high"
    budget: str = "diagonal"
    slow_rate: float = 0.0
    backward: str = "recompute"
    dtype: str = "float64"


@dataclass
class OptimSection:
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    clip_norm: float = 0.0


@dataclass
class ScheduleSection:
    batch_size: int = 128
    bptt: int = 200
    steps: int = 1000
    eval_interval: int = 100
    eval_batch_size: int = 16
    # 0 evaluates the whole validation split
    eval_chars: int = 0


@dataclass
class DropoutSection:
    ff: float = 0.0
    recurrent: float = 0.0
    output: float = 0.0


@dataclass
class DataSection:
    path: str = "enwik8"
    split: tuple[float, ...] = (90.0, 5.0, 5.0)
    # 0 reads the whole file
    limit: int = 0


@dataclass
class RunSection:
    dir: str = "runs/default"


@dataclass
class TrainConfig:
    model: ModelSection = field(default_factory=ModelSection)
    optim: OptimSection = field(default_factory=OptimSection)
    schedule: ScheduleSection = field(default_factory=ScheduleSection)
    dropout: DropoutSection = field(default_factory=DropoutSection)
    data: DataSection = field(default_factory=DataSection)
    run: RunSection = field(default_factory=RunSection)
    seed: int = 0

    def model_spec(self, vocab: int) -> ModelSpec:
        m = self.model
        return ModelSpec(arch=m.arch, vocab=vocab, embed=m.embed, layers=tuple(m.layers),
                         rate=m.rate, corner=m.corner, budget=m.budget,
                         slow_rate=m.slow_rate, backward=m.backward)

    def validate(self) -> "TrainConfig":
        try:
            self.model_spec(vocab=1)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.model.dtype not in ("float64", "float32"):
            raise ConfigError(f"model.dtype must be float64 or float32, got {self.model.dtype!r}")
        for key in ("ff", "recurrent", "output"):
            p = getattr(self.dropout, key)
            if not 0.0 <= p < 1.0:
                raise ConfigError(f"dropout.{key} must lie in [0, 1)")
        s = self.schedule
        if min(s.batch_size, s.bptt, s.eval_interval, s.eval_batch_size) < 1 or s.steps < 0:
            raise ConfigError("schedule sizes must be positive")
        if self.optim.lr <= 0:
            raise ConfigError("optim.lr must be positive")
        return self

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def to_text(self) -> str:
        lines = []
        for key, value in flatten(self.to_dict()):
            if isinstance(value, (list, tuple)):
                value = ",".join(str(v) for v in value)
            lines.append(f"{key} = {value}")
        return "\n".join(lines) + "\n"


def flatten(d: dict, prefix: str = ""):
    for key, value in d.items():
        if isinstance(value, dict):
            yield from flatten(value, f"{prefix}{key}.")
        else:
            yield f"{prefix}{key}", value


def _convert(raw: str, typ, key: str):
    try:
        if typ is int:
            return int(raw)
        if typ is float:
            return float(raw)
        if typ is str:
            return raw
        origin = typing.get_origin(typ)
        if origin is tuple:
            (inner, _) = typing.get_args(typ)
            parts = [p.strip() for p in raw.split(",") if p.strip()]
            return tuple(inner(p) for p in parts)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {raw!r} as {getattr(typ, '__name__', typ)}") from None
    raise ConfigError(f"{key}: unsupported type {typ}")


def _set(cfg: TrainConfig, key: str, raw: str):
    parts = key.split(".")
    target = cfg
    for part in parts[:-1]:
        if not dataclasses.is_dataclass(target) or part not in {f.name for f in dataclasses.fields(target)}:
            raise ConfigError(f"unknown config key {key!r}")
        target = getattr(target, part)
    name = parts[-1]
    if not dataclasses.is_dataclass(target):
        raise ConfigError(f"unknown config key {key!r}")
    hints = typing.get_type_hints(type(target))
    if name not in hints or dataclasses.is_dataclass(getattr(target, name)):
        raise ConfigError(f"unknown config key {key!r}")
    setattr(target, name, _convert(raw, hints[name], key))


def parse_config(text: str) -> TrainConfig:
    cfg = TrainConfig()
    seen = set()
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key in seen:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        seen.add(key)
        _set(cfg, key, raw)
    return cfg.validate()


def load_config(path) -> TrainConfig:
    return parse_config(Path(path).read_text())


def config_from_dict(d: dict) -> TrainConfig:
    cfg = TrainConfig()
    for key, value in flatten(d):
        if isinstance(value, (list, tuple)):
            value = ",".join(str(v) for v in value)
        _set(cfg, key, str(value))
    return cfg.validate()

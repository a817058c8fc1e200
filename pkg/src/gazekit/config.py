"""Run configuration: dataclass defaults plus TOML overrides.

Every tunable named in the design docs lives here (dead-band tau, crop
offset, frame stride, zone mapping band, k, conv widths, seeds, ...).
A config file is TOML with one table per section; unknown keys fail fast.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib  # py >= 3.11
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class LocalizerConfig:
    eye_pad_frac: float = 0.3
    crop_offset: int = 5  # Eq.-style half-height offset, px
    adaptive_window: int = 15
    adaptive_c: float = 5.0
    canny_low: float = 50.0
    canny_high: float = 150.0
    canny_sigma: float = 1.0
    hough_r_min: int = 3
    hough_r_max: int = 20
    hough_vote_frac: float = 0.6
    jesorsky_mode: str = "worst-eye"  # or "signed-diff" (audit form)


@dataclass(frozen=True)
class HeuristicConfig:
    tau: float = 2.0  # center dead-band, degrees
    roll_limit: float = 10.0  # |roll| gate, degrees
    smoothing_window: int = 5
    corner_mode: str = "outer"  # or "inner"
    zone_map_band: float = 2.0  # dead band for mapping external angular labels


@dataclass(frozen=True)
class NetConfig:
    input_size: int = 128  # one of 32, 64, 128
    in_channels: int = 3
    conv_widths: tuple[int, ...] = (32, 64, 64, 128, 128)
    n_capsules: int = 32
    capsule_dim: int = 8
    fc_dims: tuple[int, int] = (1024, 512)
    n_classes: int = 3
    bn_momentum: float = 0.99
    seed: int = 0


# Small widths so toy runs finish in seconds on a CPU.
TOY_NET = NetConfig(
    input_size=32,
    conv_widths=(8, 16, 16, 32, 32),
    n_capsules=8,
    capsule_dim=4,
    fc_dims=(64, 32),
)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 20
    lr: float = 0.001
    decay: float = 1e-6  # per-epoch: lr_eff(k) = lr / (1 + decay * k)
    momentum: float = 0.0
    batch_size: int = 64
    seed: int = 0
    use_smoothed_labels: bool = True
    stop_at_val_acc: float | None = None


@dataclass(frozen=True)
class AdaptConfig:
    lr: float = 0.0001
    epochs: int = 15
    momentum: float = 0.0
    decay: float = 1e-6
    batch_size: int = 64
    head_dim: int = 256
    knn_k: int = 14
    augment: bool = True  # linear probing only
    seed: int = 0


@dataclass(frozen=True)
class PipelineConfig:
    frame_stride: int = 3
    split_ratio: float = 0.7
    split_seed: int = 0
    synth_image_size: int = 128
    synth_noise_sigma: float = 4.0
    synth_seed: int = 0
    workers: int = 1


@dataclass(frozen=True)
class Config:
    localizer: LocalizerConfig = field(default_factory=LocalizerConfig)
    heuristic: HeuristicConfig = field(default_factory=HeuristicConfig)
    net: NetConfig = field(default_factory=NetConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    adapt: AdaptConfig = field(default_factory=AdaptConfig)
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)


_SECTIONS = {f.name: f.type for f in dataclasses.fields(Config)}


def _build_section(cls, table: dict, section: str):
    known = {f.name: f for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in table.items():
        if key not in known:
            raise ConfigError(f"unknown key '{key}' in section [{section}]")
        if isinstance(value, list):
            value = tuple(value)
        kwargs[key] = value
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"bad section [{section}]: {exc}") from exc


def load_config(path: str | Path | None) -> Config:
    """Load a TOML config file; missing sections/keys keep their defaults."""
    if path is None:
        return Config()
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    with open(path, "rb") as fh:
        data = tomllib.load(fh)
    sections = {}
    defaults = Config()
    for name in _SECTIONS:
        table = data.pop(name, None)
        if table is None:
            sections[name] = getattr(defaults, name)
        else:
            sections[name] = _build_section(type(getattr(defaults, name)), table, name)
    if data:
        raise ConfigError(f"unknown config sections: {sorted(data)}")
    return Config(**sections)


def config_as_dict(cfg: Config) -> dict:
    return dataclasses.asdict(cfg)

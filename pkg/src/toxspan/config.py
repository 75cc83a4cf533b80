"""Run configuration: plain-text ``key=value`` files with section prefixes
(``model.``, ``vat.``, ``train.``, ``data.``); every key has a default and
command-line overrides win over file values.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields

from .model import ModelConfig
from .vat import VatConfig


@dataclass
class TrainConfig:
    model: ModelConfig = field(default_factory=ModelConfig)
    vat: VatConfig = field(default_factory=VatConfig)
    # train.*
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    epochs: int = 3
    batch_size: int = 32
    clip_norm: float = 5.0
    seed: int = 0
    # data.*
    train_path: str = ""
    unlabeled_path: str = ""
    val_path: str = ""
    test_path: str = ""
    checkpoint_path: str = "model.ckpt"
    report_path: str = ""
    val_fraction: float = 0.15
    min_freq: int = 1

    def validate(self) -> None:
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        self.vat.validate()


_TRAIN_KEYS = {
    "learning_rate", "beta1", "beta2", "adam_eps", "epochs", "batch_size",
    "clip_norm", "seed",
}
_DATA_KEYS = {
    "train": "train_path",
    "unlabeled": "unlabeled_path",
    "val": "val_path",
    "test": "test_path",
    "checkpoint": "checkpoint_path",
    "report": "report_path",
    "val_fraction": "val_fraction",
    "min_freq": "min_freq",
}


def _coerce(raw: str, target_type: type):
    if target_type is bool:
        lowered = raw.strip().lower()
        if lowered in ("true", "1", "yes"):
            return True
        if lowered in ("false", "0", "no"):
            return False
        raise ValueError(f"expected a boolean, got {raw!r}")
    return target_type(raw)


def parse_config_text(text: str) -> dict[str, str]:
    """Parse ``key=value`` lines; ``#`` comments and blank lines allowed."""
    values: dict[str, str] = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ValueError(f"config line {line_no}: expected key=value, got {line!r}")
        key, raw = stripped.split("=", 1)
        values[key.strip()] = raw.strip()
    return values


def apply_overrides(cfg: TrainConfig, overrides: dict[str, str]) -> TrainConfig:
    """Set dotted keys on a TrainConfig in place; unknown keys error."""
    model_fields = {f.name: f.type for f in fields(ModelConfig)}
    vat_fields = {f.name: f.type for f in fields(VatConfig)}

    def field_type(obj, name):
        for f in fields(obj):
            if f.name == name:
                return type(getattr(obj, name))
        raise KeyError(name)

    for key, raw in overrides.items():
        section, _, name = key.partition(".")
        try:
            if section == "model" and name in model_fields:
                setattr(cfg.model, name, _coerce(raw, field_type(cfg.model, name)))
            elif section == "vat" and name in vat_fields:
                setattr(cfg.vat, name, _coerce(raw, field_type(cfg.vat, name)))
            elif section == "train" and name in _TRAIN_KEYS:
                setattr(cfg, name, _coerce(raw, field_type(cfg, name)))
            elif section == "data" and name in _DATA_KEYS:
                attr = _DATA_KEYS[name]
                setattr(cfg, attr, _coerce(raw, field_type(cfg, attr)))
            else:
                raise KeyError(key)
        except KeyError:
            raise ValueError(f"unknown config key {key!r}") from None
        except ValueError as exc:
            raise ValueError(f"config key {key!r}: {exc}") from None
    return cfg


def load_config(path: str | None = None, overrides: dict[str, str] | None = None) -> TrainConfig:
    """Defaults, then file values, then overrides."""
    cfg = TrainConfig()
    if path:
        with open(path, encoding="utf-8") as fh:
            apply_overrides(cfg, parse_config_text(fh.read()))
    if overrides:
        apply_overrides(cfg, overrides)
    return cfg


def dump_config(cfg: TrainConfig) -> str:
    """Deterministic ``key=value`` listing that round-trips through
    ``parse_config_text``/``apply_overrides``."""

    def fmt(value) -> str:
        if isinstance(value, bool):
            return "true" if value else "false"
        return str(value)

    items: list[tuple[str, str]] = []
    for f in fields(ModelConfig):
        items.append((f"model.{f.name}", fmt(getattr(cfg.model, f.name))))
    for f in fields(VatConfig):
        items.append((f"vat.{f.name}", fmt(getattr(cfg.vat, f.name))))
    for name in sorted(_TRAIN_KEYS):
        items.append((f"train.{name}", fmt(getattr(cfg, name))))
    for name, attr in _DATA_KEYS.items():
        items.append((f"data.{name}", fmt(getattr(cfg, attr))))
    return "\n".join(f"{key}={value}" for key, value in sorted(items))

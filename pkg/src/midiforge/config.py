"""Configuration for midiforge.

Handles:
- config.yaml parsing (hyphenated keys, one section per concern)
- Environment variable overrides (MIDIFORGE_CONFIG, MIDIFORGE_SEED)
- Rendering the default file with full-scale values noted inline
"""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass, field
from typing import Any

import yaml

from midiforge.errors import ConfigError
from midiforge.remi import VocabConfig

CONFIG_ENV = "MIDIFORGE_CONFIG"
SEED_ENV = "MIDIFORGE_SEED"


class TrainMode:
    PRETRAIN = "pretrain"
    FINETUNE = "finetune"

    ALL = (PRETRAIN, FINETUNE)


class EncoderKind:
    TOY = "toy"
    PRECOMPUTED = "precomputed"

    ALL = (TOY, PRECOMPUTED)


@dataclass
class ModelConfig:
    """Decoder shape. Defaults are the desk-scale toy model."""
    layers: int = 2
    heads: int = 2
    model_dim: int = 64
    feedforward_dim: int = 256
    vocab_size: int = 0  # 0: taken from the vocabulary
    context_length: int = 256
    encoder_dim: int = 64
    dropout: float = 0.0

    def __post_init__(self) -> None:
        if self.layers < 1 or self.heads < 1:
            raise ConfigError("layers and heads must be positive")
        if self.model_dim % self.heads:
            raise ConfigError(f"model_dim {self.model_dim} is not divisible by heads {self.heads}")
        if self.context_length < 2:
            raise ConfigError("context_length must be at least 2")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError("dropout must be in [0, 1)")

    @classmethod
    def toy(cls, **overrides: Any) -> ModelConfig:
        return cls(**overrides)

    @classmethod
    def full_scale(cls, **overrides: Any) -> ModelConfig:
        values = dict(
            layers=18, heads=8, model_dim=768, feedforward_dim=3072,
            context_length=2048, encoder_dim=768, dropout=0.1,
        )
        values.update(overrides)
        return cls(**values)


@dataclass
class TrainingConfig:
    mode: str = TrainMode.PRETRAIN
    batch_size: int = 4
    accumulation_steps: int = 4
    warmup_steps: int = 20
    total_steps: int = 200
    pretrain_lr: float = 1e-4
    finetune_lr: float = 1e-6
    learning_rate: float | None = None  # overrides the mode default
    seed: int = 0
    train_encoder: bool = False

    def __post_init__(self) -> None:
        if self.mode not in TrainMode.ALL:
            raise ConfigError(f"mode must be one of {TrainMode.ALL}, got {self.mode!r}")
        if self.batch_size < 1 or self.accumulation_steps < 1:
            raise ConfigError("batch_size and accumulation_steps must be positive")
        if self.total_steps < 1 or not 0 <= self.warmup_steps <= self.total_steps:
            raise ConfigError("need 0 <= warmup_steps <= total_steps and total_steps >= 1")

    @property
    def base_lr(self) -> float:
        if self.learning_rate is not None:
            return self.learning_rate
        return self.pretrain_lr if self.mode == TrainMode.PRETRAIN else self.finetune_lr


@dataclass
class EncoderConfig:
    kind: str = EncoderKind.TOY
    embeddings: str = ""
    buckets: int = 4096

    def __post_init__(self) -> None:
        if self.kind not in EncoderKind.ALL:
            raise ConfigError(f"encoder kind must be one of {EncoderKind.ALL}, got {self.kind!r}")


@dataclass
class SamplingConfig:
    max_tokens: int = 256
    temperature: float = 1.0
    top_k: int = 40
    seed: int = 0


@dataclass
class ForgeConfig:
    model: ModelConfig = field(default_factory=ModelConfig)
    training: TrainingConfig = field(default_factory=TrainingConfig)
    vocabulary: VocabConfig = field(default_factory=VocabConfig)
    encoder: EncoderConfig = field(default_factory=EncoderConfig)
    sampling: SamplingConfig = field(default_factory=SamplingConfig)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> ForgeConfig:
        if not isinstance(data, dict):
            raise ConfigError("config root must be a mapping")
        sections = {f.name: f.type for f in dataclasses.fields(cls)}
        unknown = set(data) - set(sections)
        if unknown:
            raise ConfigError(f"unknown config sections: {sorted(unknown)}")
        built: dict[str, Any] = {}
        for name, section_cls in _SECTION_TYPES.items():
            raw = data.get(name) or {}
            if not isinstance(raw, dict):
                raise ConfigError(f"config section {name!r} must be a mapping")
            values = _section_values(name, raw, section_cls)
            try:
                if section_cls is VocabConfig:
                    built[name] = VocabConfig.from_dict(values)
                else:
                    built[name] = section_cls(**values)
            except (TypeError, ValueError) as e:
                if isinstance(e, ConfigError):
                    raise
                raise ConfigError(f"invalid {name} config: {e}") from e
        return cls(**built)

    @classmethod
    def load(cls, path: str | None = None) -> ForgeConfig:
        """Load config.yaml; falls back to $MIDIFORGE_CONFIG, then defaults."""
        path = path or os.environ.get(CONFIG_ENV) or None
        if not path:
            return cls()
        try:
            with open(path, encoding="utf-8") as f:
                data = yaml.safe_load(f) or {}
        except OSError as e:
            raise ConfigError(f"cannot read config {path}: {e}") from e
        except yaml.YAMLError as e:
            raise ConfigError(f"invalid YAML in {path}: {e}") from e
        return cls.from_dict(data)

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {}
        for name in _SECTION_TYPES:
            section = getattr(self, name)
            values = section.to_dict() if isinstance(section, VocabConfig) else dataclasses.asdict(section)
            out[name] = {key.replace("_", "-"): value for key, value in values.items()}
        return out

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as f:
            f.write(render_config(self))


_SECTION_TYPES: dict[str, type] = {
    "model": ModelConfig,
    "training": TrainingConfig,
    "vocabulary": VocabConfig,
    "encoder": EncoderConfig,
    "sampling": SamplingConfig,
}


def _section_values(name: str, raw: dict[str, Any], section_cls: type) -> dict[str, Any]:
    types = {f.name: f.type for f in dataclasses.fields(section_cls)}
    values = {}
    for key, value in raw.items():
        attr = str(key).replace("-", "_")
        if attr not in types:
            raise ConfigError(f"unknown key {key!r} in config section {name!r}")
        values[attr] = _coerce(name, key, types[attr], value)
    return values


def _coerce(section: str, key: str, type_name: Any, value: Any) -> Any:
    # YAML reads "1e-4" as a string; numeric fields are cast here.
    casts = {"int": int, "float": float, "float | None": float}
    cast = casts.get(str(type_name))
    if cast is None or value is None or isinstance(value, bool):
        return value
    try:
        return cast(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{section}.{key} must be a number, got {value!r}") from None


def resolve_seed(seed: int | None, config: ForgeConfig, default: int | None = None) -> int:
    """--seed, then $MIDIFORGE_SEED, then default or the config's training seed."""
    if seed is not None:
        return seed
    env = os.environ.get(SEED_ENV)
    if env:
        try:
            return int(env)
        except ValueError:
            raise ConfigError(f"{SEED_ENV} must be an integer, got {env!r}") from None
    return config.training.seed if default is None else default


# Full-scale values shown next to the toy defaults in rendered files.
FULL_SCALE_NOTES = {
    ("model", "layers"): "full scale: 18",
    ("model", "heads"): "full scale: 8",
    ("model", "model-dim"): "full scale: 768",
    ("model", "feedforward-dim"): "full scale: 3072",
    ("model", "vocab-size"): "0 = size of the vocabulary",
    ("model", "context-length"): "full scale: 2048",
    ("model", "encoder-dim"): "full scale: 768 (Flan-T5 base)",
    ("training", "mode"): "pretrain | finetune",
    ("training", "batch-size"): "full scale: 4",
    ("training", "accumulation-steps"): "full scale: 4",
    ("training", "warmup-steps"): "full scale: 20000",
    ("training", "pretrain-lr"): "full scale: 1e-4",
    ("training", "finetune-lr"): "full scale: 1e-6",
    ("training", "learning-rate"): "null = mode default",
    ("training", "train-encoder"): "full scale: false (frozen encoder)",
    ("encoder", "kind"): "toy | precomputed",
    ("encoder", "embeddings"): "embedding file for the precomputed encoder",
}


def render_config(config: ForgeConfig | None = None) -> str:
    """YAML text for a config, with full-scale values as comments."""
    config = config or ForgeConfig()
    lines = ["# midiforge configuration. Active values are desk-scale defaults."]
    for section, values in config.to_dict().items():
        lines.append("")
        lines.append(f"{section}:")
        for key, value in values.items():
            rendered = yaml.safe_dump(value, default_flow_style=True, width=10_000).strip()
            if rendered.endswith("\n..."):
                rendered = rendered[: -len("\n...")]
            note = FULL_SCALE_NOTES.get((section, key))
            lines.append(f"  {key}: {rendered}" + (f"  # {note}" if note else ""))
    return "\n".join(lines) + "\n"

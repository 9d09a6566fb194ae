"""Validated configuration models for semlogue."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Any, Dict, Optional

from ..config.settings import (
    CorpusDefaults,
    EmbeddingDefaults,
    LossDefaults,
    MetricDefaults,
    ModelDefaults,
    TrainingDefaults,
)
from ..utils.exceptions import ValidationError


def _check_unit(name: str, value: float) -> None:
    if not (0.0 <= value <= 1.0):
        raise ValidationError(f"{name} must lie in [0, 1], got {value}")


def _known_fields(cls: type, data: Dict[str, Any]) -> Dict[str, Any]:
    names = set(cls.__dataclass_fields__)  # type: ignore[attr-defined]
    unknown = sorted(set(data) - names)
    if unknown:
        raise ValidationError(f"Unknown {cls.__name__} keys: {', '.join(unknown)}")
    return dict(data)


@dataclass
class ModelConfig:
    """Shape of the micro transformer."""

    vocab_size: int
    embed_dim: int = ModelDefaults.EMBED_DIM
    encoder_layers: int = ModelDefaults.ENCODER_LAYERS
    decoder_layers: int = ModelDefaults.DECODER_LAYERS
    heads: int = ModelDefaults.HEADS
    ff_dim: int = ModelDefaults.FF_DIM
    max_source_length: int = ModelDefaults.MAX_SOURCE_LENGTH
    max_target_length: int = ModelDefaults.MAX_TARGET_LENGTH
    architecture: str = ModelDefaults.ARCHITECTURE
    dtype: str = ModelDefaults.DTYPE
    seed: int = ModelDefaults.INIT_SEED

    def __post_init__(self) -> None:
        """Validate model shape after initialization."""
        if self.vocab_size < 1:
            raise ValidationError("vocab_size must be positive")
        if self.embed_dim < 1 or self.heads < 1 or self.ff_dim < 1:
            raise ValidationError("embed_dim, heads and ff_dim must be positive")
        if self.embed_dim % self.heads != 0:
            raise ValidationError(f"embed_dim ({self.embed_dim}) must be divisible by heads ({self.heads})")
        if self.max_source_length < 1 or self.max_target_length < 1:
            raise ValidationError("maximum lengths must be at least 1")
        if self.encoder_layers < 0 or self.decoder_layers < 1:
            raise ValidationError("need at least one decoder layer and a non-negative encoder depth")
        if self.architecture not in ModelDefaults.ARCHITECTURES:
            raise ValidationError(f"architecture must be one of {ModelDefaults.ARCHITECTURES}")
        if self.architecture == "encoder-decoder" and self.encoder_layers < 1:
            raise ValidationError("encoder-decoder architecture needs at least one encoder layer")
        if self.dtype not in ModelDefaults.DTYPES:
            raise ValidationError(f"dtype must be one of {ModelDefaults.DTYPES}")

    @property
    def is_decoder_only(self) -> bool:
        return self.architecture == "decoder-only"

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> ModelConfig:
        return cls(**_known_fields(cls, data))


@dataclass
class ContanicWeights:
    """Weights of context relevance and semantic similarity in the Contanic score."""

    alpha: float = LossDefaults.ALPHA
    beta: float = LossDefaults.BETA

    def __post_init__(self) -> None:
        _check_unit("alpha", self.alpha)
        _check_unit("beta", self.beta)
        if self.alpha + self.beta <= 0:
            raise ValidationError("alpha + beta must be positive")

    def semantic_only(self) -> ContanicWeights:
        """The same weights with the context term switched off."""
        return ContanicWeights(alpha=0.0, beta=self.beta)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> ContanicWeights:
        return cls(**_known_fields(cls, data))


@dataclass
class DialuationWeights:
    """Weights of context relevance and semantic similarity in Dialuation."""

    delta_c: float = MetricDefaults.DELTA_C
    delta_ss: float = MetricDefaults.DELTA_SS

    def __post_init__(self) -> None:
        if self.delta_c < 0 or self.delta_ss < 0:
            raise ValidationError("delta_c and delta_ss must be non-negative")
        if self.delta_c + self.delta_ss <= 0:
            raise ValidationError("delta_c + delta_ss must be positive")

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> DialuationWeights:
        return cls(**_known_fields(cls, data))


@dataclass
class LossConfig:
    """Loss variant and its hyperparameters."""

    variant: str = LossDefaults.VARIANT
    lambda_: float = LossDefaults.LAMBDA
    sigma: float = LossDefaults.SIGMA
    weights: ContanicWeights = field(default_factory=ContanicWeights)
    bse_hidden: int = LossDefaults.BSE_HIDDEN

    def __post_init__(self) -> None:
        if self.variant not in LossDefaults.VARIANTS:
            raise ValidationError(f"Unknown loss variant '{self.variant}'; choose from {LossDefaults.VARIANTS}")
        _check_unit("lambda", self.lambda_)
        _check_unit("sigma", self.sigma)
        if self.bse_hidden < 1:
            raise ValidationError("bse_hidden must be positive")

    @property
    def needs_scores(self) -> bool:
        """Whether the variant needs greedy decoding and Contanic per batch."""
        return self.variant != "ce"

    @property
    def uses_estimator(self) -> bool:
        return self.variant in ("semantic-reinforcement", "semtextuallogue")

    @property
    def effective_weights(self) -> ContanicWeights:
        """Contanic weights the variant actually scores with."""
        if self.variant in ("weighted-semantic-ce", "semantic-reinforcement"):
            return self.weights.semantic_only()
        return self.weights

    def to_dict(self) -> Dict[str, Any]:
        return {
            "variant": self.variant,
            "lambda": self.lambda_,
            "sigma": self.sigma,
            "weights": self.weights.to_dict(),
            "bse_hidden": self.bse_hidden,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> LossConfig:
        data = dict(data)
        if "lambda" in data:
            data["lambda_"] = data.pop("lambda")
        if isinstance(data.get("weights"), dict):
            data["weights"] = ContanicWeights.from_dict(data["weights"])
        return cls(**_known_fields(cls, data))


@dataclass
class ProviderConfig:
    """Embedding provider selection."""

    kind: str = EmbeddingDefaults.KIND
    dim: int = EmbeddingDefaults.HASHED_DIM
    endpoint: Optional[str] = None
    timeout: float = EmbeddingDefaults.TIMEOUT
    max_batch: int = EmbeddingDefaults.MAX_BATCH
    retries: int = EmbeddingDefaults.RETRIES
    strip_tags: bool = EmbeddingDefaults.STRIP_TAGS

    def __post_init__(self) -> None:
        if self.kind not in EmbeddingDefaults.KINDS:
            raise ValidationError(f"provider kind must be one of {EmbeddingDefaults.KINDS}")
        if self.dim <= 0:
            raise ValidationError("provider dim must be positive")
        if self.kind == "remote" and not self.endpoint:
            raise ValidationError("remote provider requires an endpoint URL")
        if self.timeout <= 0 or self.max_batch < 1 or self.retries < 0:
            raise ValidationError("timeout and max_batch must be positive, retries non-negative")

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> ProviderConfig:
        return cls(**_known_fields(cls, data))


@dataclass
class CorpusConfig:
    """Corpus preparation settings."""

    context_window: int = CorpusDefaults.CONTEXT_WINDOW
    vocab_max_size: int = CorpusDefaults.VOCAB_MAX_SIZE
    min_freq: int = CorpusDefaults.MIN_FREQ
    split_seed: int = TrainingDefaults.SEED

    def __post_init__(self) -> None:
        if self.context_window < 0:
            raise ValidationError("context_window must be non-negative")
        if self.vocab_max_size < 1 or self.min_freq < 1:
            raise ValidationError("vocab_max_size and min_freq must be positive")

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> CorpusConfig:
        return cls(**_known_fields(cls, data))


@dataclass
class TrainConfig:
    """Training loop settings."""

    learning_rate: float = TrainingDefaults.LEARNING_RATE
    batch_size: int = TrainingDefaults.BATCH_SIZE
    epochs: int = TrainingDefaults.EPOCHS
    seed: int = TrainingDefaults.SEED
    clip_norm: Optional[float] = TrainingDefaults.CLIP_NORM
    max_steps: Optional[int] = None
    decode_margin: int = TrainingDefaults.DECODE_MARGIN
    weight_decay: float = TrainingDefaults.WEIGHT_DECAY
    shuffle: bool = True
    validate_every_epoch: bool = True
    progress: bool = False

    def __post_init__(self) -> None:
        if self.learning_rate <= 0 or self.batch_size < 1 or self.epochs < 1:
            raise ValidationError("learning_rate, batch_size and epochs must be positive")
        if self.clip_norm is not None and self.clip_norm <= 0:
            raise ValidationError("clip_norm must be positive when set")
        if self.max_steps is not None and self.max_steps < 1:
            raise ValidationError("max_steps must be positive when set")
        if self.decode_margin < 0 or self.weight_decay < 0:
            raise ValidationError("decode_margin and weight_decay must be non-negative")

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> TrainConfig:
        return cls(**_known_fields(cls, data))


@dataclass
class ExperimentConfig:
    """Everything a run needs; round-trips through the JSON config file."""

    model: Dict[str, Any] = field(default_factory=dict)
    train: TrainConfig = field(default_factory=TrainConfig)
    loss: LossConfig = field(default_factory=LossConfig)
    provider: ProviderConfig = field(default_factory=ProviderConfig)
    corpus: CorpusConfig = field(default_factory=CorpusConfig)
    evaluation: DialuationWeights = field(default_factory=DialuationWeights)

    def model_config(self, vocab_size: int) -> ModelConfig:
        """Model config with the vocabulary size fixed by the corpus."""
        data = dict(self.model)
        data["vocab_size"] = vocab_size
        return ModelConfig.from_dict(data)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "model": dict(self.model),
            "train": self.train.to_dict(),
            "loss": self.loss.to_dict(),
            "provider": self.provider.to_dict(),
            "corpus": self.corpus.to_dict(),
            "evaluation": self.evaluation.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> ExperimentConfig:
        _known_fields(cls, data)
        model = dict(data.get("model", {}))
        model.pop("vocab_size", None)
        shape_check = dict(model, vocab_size=1)
        ModelConfig.from_dict(shape_check)
        return cls(
            model=model,
            train=TrainConfig.from_dict(data.get("train", {})),
            loss=LossConfig.from_dict(data.get("loss", {})),
            provider=ProviderConfig.from_dict(data.get("provider", {})),
            corpus=CorpusConfig.from_dict(data.get("corpus", {})),
            evaluation=DialuationWeights.from_dict(data.get("evaluation", {})),
        )

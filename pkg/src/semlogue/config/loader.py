"""Effective experiment configuration: JSON file, dataset preset, then flag overrides."""

import argparse
import json
import logging
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Tuple

from ..models.configs import ExperimentConfig
from ..utils.exceptions import FileOperationError, ValidationError
from .settings import LossDefaults

logger = logging.getLogger(__name__)

# Flag (argparse dest) -> (key path inside the config, type)
OVERRIDES: Dict[str, Tuple[Tuple[str, ...], type]] = {
    "learning_rate": (("train", "learning_rate"), float),
    "batch_size": (("train", "batch_size"), int),
    "epochs": (("train", "epochs"), int),
    "seed": (("train", "seed"), int),
    "clip_norm": (("train", "clip_norm"), float),
    "max_steps": (("train", "max_steps"), int),
    "decode_margin": (("train", "decode_margin"), int),
    "weight_decay": (("train", "weight_decay"), float),
    "loss": (("loss", "variant"), str),
    "lambda_": (("loss", "lambda"), float),
    "sigma": (("loss", "sigma"), float),
    "alpha": (("loss", "weights", "alpha"), float),
    "beta": (("loss", "weights", "beta"), float),
    "bse_hidden": (("loss", "bse_hidden"), int),
    "provider": (("provider", "kind"), str),
    "provider_dim": (("provider", "dim"), int),
    "endpoint": (("provider", "endpoint"), str),
    "timeout": (("provider", "timeout"), float),
    "max_batch": (("provider", "max_batch"), int),
    "retries": (("provider", "retries"), int),
    "context_window": (("corpus", "context_window"), int),
    "vocab_max_size": (("corpus", "vocab_max_size"), int),
    "min_freq": (("corpus", "min_freq"), int),
    "split_seed": (("corpus", "split_seed"), int),
    "delta_c": (("evaluation", "delta_c"), float),
    "delta_ss": (("evaluation", "delta_ss"), float),
    "embed_dim": (("model", "embed_dim"), int),
    "encoder_layers": (("model", "encoder_layers"), int),
    "decoder_layers": (("model", "decoder_layers"), int),
    "heads": (("model", "heads"), int),
    "ff_dim": (("model", "ff_dim"), int),
    "max_source_length": (("model", "max_source_length"), int),
    "max_target_length": (("model", "max_target_length"), int),
    "architecture": (("model", "architecture"), str),
    "model_seed": (("model", "seed"), int),
}


def flag_name(dest: str) -> str:
    """``lambda_`` -> ``--lambda``, ``learning_rate`` -> ``--learning-rate``."""
    return "--" + dest.rstrip("_").replace("_", "-")


def add_override_arguments(parser: argparse.ArgumentParser) -> None:
    """Register every config override flag (default None = not given) and ``--preset``."""
    group = parser.add_argument_group("config overrides")
    for dest, (path, kind) in OVERRIDES.items():
        group.add_argument(flag_name(dest), dest=dest, type=kind, default=None, help=f"sets {'.'.join(path)}")
    group.add_argument("--preset", choices=sorted(LossDefaults.PRESETS), default=None, help="dataset alpha/beta preset")


def _set(data: Dict[str, Any], path: Tuple[str, ...], value: Any) -> None:
    node = data
    for key in path[:-1]:
        node = node.setdefault(key, {})
        if not isinstance(node, dict):
            raise ValidationError(f"config key {'.'.join(path[:-1])} must be an object")
    node[path[-1]] = value


def read_config_file(path: Optional[Path]) -> Dict[str, Any]:
    if path is None:
        return {}
    path = Path(path)
    if not path.exists():
        raise FileOperationError(f"Config file not found: {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ValidationError(f"Config file {path} is not valid JSON: {e}") from e
    except OSError as e:
        raise FileOperationError(f"Failed to read config file {path}: {e}") from e
    if not isinstance(data, dict):
        raise ValidationError(f"Config file {path} must hold a JSON object")
    return data


def apply_overrides(data: Dict[str, Any], overrides: Mapping[str, Any], preset: Optional[str] = None) -> Dict[str, Any]:
    """Preset first, then every non-None override; returns a new dict."""
    merged = json.loads(json.dumps(data))
    if preset is not None:
        if preset not in LossDefaults.PRESETS:
            raise ValidationError(f"Unknown preset '{preset}'")
        for key, value in LossDefaults.PRESETS[preset].items():
            _set(merged, ("loss", "weights", key), value)
    for dest, value in overrides.items():
        if value is None or dest not in OVERRIDES:
            continue
        _set(merged, OVERRIDES[dest][0], value)
    return merged


def load_config(
    path: Optional[Path] = None, overrides: Optional[Mapping[str, Any]] = None, preset: Optional[str] = None
) -> ExperimentConfig:
    """Effective config; flags win over the preset, which wins over the file."""
    data = apply_overrides(read_config_file(path), overrides or {}, preset)
    config = ExperimentConfig.from_dict(data)
    logger.info(f"Effective config: {json.dumps(config.to_dict(), sort_keys=True)}")
    return config


def overrides_from_args(args: argparse.Namespace) -> Dict[str, Any]:
    return {dest: getattr(args, dest, None) for dest in OVERRIDES}

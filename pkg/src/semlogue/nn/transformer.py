"""Micro transformer dialogue generator."""

from __future__ import annotations

import copy
import logging
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from ..autodiff import Tensor, as_tensor, no_grad
from ..config.settings import SpecialTokens
from ..models.configs import ModelConfig
from ..utils.exceptions import ValidationError
from .layers import DecoderLayer, Embedding, EncoderLayer, Linear, sinusoidal_table
from .module import Module

logger = logging.getLogger(__name__)

TokenBatch = Sequence[Sequence[int]]


def pad_batch(sequences: TokenBatch, minimum: int = 1) -> Tuple[np.ndarray, np.ndarray]:
    """Right-pad to the batch maximum; returns (ids [B, L], keep [B, L])."""
    length = max([len(s) for s in sequences] + [minimum])
    ids = np.full((len(sequences), length), SpecialTokens.PAD_ID, dtype=np.int64)
    keep = np.zeros((len(sequences), length), dtype=bool)
    for row, sequence in enumerate(sequences):
        ids[row, : len(sequence)] = sequence
        keep[row, : len(sequence)] = True
    return ids, keep


def _positions(keep: np.ndarray) -> np.ndarray:
    # Real tokens are numbered 0, 1, ... regardless of where padding sits
    return np.maximum(np.cumsum(keep, axis=1) - 1, 0)


class DialogueTransformer(Module):
    """
    Encoder-decoder (or decoder-only) transformer over a word vocabulary.

    Sources longer than ``max_source_length`` keep their most recent tokens and
    bump ``truncation_count`` once per sequence per call. Target-side inputs always start with the
    begin-of-sequence token.
    """

    def __init__(self, config: ModelConfig) -> None:
        super().__init__()
        self.config = config
        self.dtype = np.dtype(config.dtype)
        self.truncation_count = 0
        rng = np.random.default_rng(config.seed)
        dim = config.embed_dim

        self.embedding = self.add_module("embedding", Embedding(config.vocab_size, dim, rng, self.dtype))
        self.encoder_layers: List[EncoderLayer] = []
        if not config.is_decoder_only:
            for i in range(config.encoder_layers):
                layer = EncoderLayer(dim, config.heads, config.ff_dim, rng, self.dtype)
                self.encoder_layers.append(self.add_module(f"encoder.{i}", layer))
        self.decoder_layers: List[DecoderLayer] = []
        for i in range(config.decoder_layers):
            layer = DecoderLayer(dim, config.heads, config.ff_dim, rng, self.dtype, cross=not config.is_decoder_only)
            self.decoder_layers.append(self.add_module(f"decoder.{i}", layer))
        self.projection = self.add_module("projection", Linear(dim, config.vocab_size, rng, self.dtype))

        table_length = config.max_source_length + config.max_target_length + 1
        self._position_table = sinusoidal_table(table_length, dim, self.dtype)
        logger.debug(f"Built {config.architecture} transformer with {self.num_parameters()} parameters")

    # ------------------------------------------------------------------
    # Input preparation
    # ------------------------------------------------------------------
    def _truncate_sources(self, sources: TokenBatch) -> List[List[int]]:
        limit = self.config.max_source_length
        out = []
        for source in sources:
            source = list(source)
            if len(source) > limit:
                self.truncation_count += 1
                logger.debug(f"Source of {len(source)} tokens truncated to the last {limit}")
                source = source[-limit:]
            out.append(source)
        return out

    def _check_prefixes(self, prefixes: TokenBatch) -> List[List[int]]:
        out = []
        for prefix in prefixes:
            if not prefix or prefix[0] != SpecialTokens.BOS_ID:
                raise ValidationError("target prefix must start with the begin-of-sequence token")
            out.append(list(prefix)[: self.config.max_target_length])
        return out

    def _embed(self, ids: np.ndarray, keep: np.ndarray) -> Tensor:
        return self.embedding(ids) + as_tensor(self._position_table[_positions(keep)])

    # ------------------------------------------------------------------
    # Forward passes
    # ------------------------------------------------------------------
    def encode(self, sources: TokenBatch) -> Tensor:
        """Hidden states [batch, src_len, embed_dim]; pad keys are masked out."""
        hidden, _ = self._encode(sources)
        return hidden

    def _encode(self, sources: TokenBatch) -> Tuple[Tensor, np.ndarray]:
        ids, keep = pad_batch(self._truncate_sources(sources))
        x = self._embed(ids, keep)
        if self.config.is_decoder_only:
            attend = keep[:, None, :] & np.tril(np.ones((ids.shape[1], ids.shape[1]), dtype=bool))[None]
            for layer in self.decoder_layers:
                x = layer(x, attend)
            return x, keep
        for layer in self.encoder_layers:
            x = layer(x, keep[:, None, :])
        return x, keep

    def _target_logits(self, sources: TokenBatch, prefixes: TokenBatch) -> Tensor:
        prefixes = self._check_prefixes(prefixes)
        target_ids, target_keep = pad_batch(prefixes)
        length = target_ids.shape[1]
        causal = np.tril(np.ones((length, length), dtype=bool))[None]

        if self.config.is_decoder_only:
            source_ids, source_keep = pad_batch(self._truncate_sources(sources))
            ids = np.concatenate([source_ids, target_ids], axis=1)
            keep = np.concatenate([source_keep, target_keep], axis=1)
            total = ids.shape[1]
            attend = keep[:, None, :] & np.tril(np.ones((total, total), dtype=bool))[None]
            x = self._embed(ids, keep)
            for layer in self.decoder_layers:
                x = layer(x, attend)
            x = x[:, source_ids.shape[1] :, :]
        else:
            memory, memory_keep = self._encode(sources)
            x = self._embed(target_ids, target_keep)
            attend = target_keep[:, None, :] & causal
            for layer in self.decoder_layers:
                x = layer(x, attend, memory, memory_keep[:, None, :])
        return self.projection(x)

    def forward_teacher_forced(self, sources: TokenBatch, gold_prefixes: TokenBatch) -> Tensor:
        """
        Per-step next-token distributions [batch, tgt_len, vocab].

        Step t conditions on the source and gold_prefixes[:t+1] only.
        """
        if len(sources) != len(gold_prefixes):
            raise ValidationError("sources and prefixes must have the same batch size")
        return self._target_logits(sources, gold_prefixes).softmax(axis=-1)

    def generate_greedy(self, sources: TokenBatch, max_len: Union[int, Sequence[int]]) -> List[List[int]]:
        """
        Argmax decoding without bos/eos in the result.

        ``max_len`` is one bound or one per example. Ties go to the lowest token
        id (numpy argmax returns the first maximum).
        """
        limits = [int(max_len)] * len(sources) if isinstance(max_len, (int, np.integer)) else [int(m) for m in max_len]
        if len(limits) != len(sources):
            raise ValidationError("one max_len per source is required")
        if any(m > self.config.max_target_length for m in limits):
            raise ValidationError(f"max_len exceeds max target length {self.config.max_target_length}")

        # Truncate once so a long source counts once, not once per decoding step
        sources = self._truncate_sources(sources)

        outputs: List[List[int]] = [[] for _ in sources]
        active = [m > 0 for m in limits]
        with no_grad():
            while any(active):
                rows = [i for i, a in enumerate(active) if a]
                prefixes = [[SpecialTokens.BOS_ID] + outputs[i] for i in rows]
                logits = self._target_logits([sources[i] for i in rows], prefixes).data
                for slot, i in enumerate(rows):
                    token = int(np.argmax(logits[slot, len(prefixes[slot]) - 1]))
                    if token == SpecialTokens.EOS_ID:
                        active[i] = False
                        continue
                    outputs[i].append(token)
                    if len(outputs[i]) >= limits[i]:
                        active[i] = False
        return outputs

    def pooled_source_states(self, sources: TokenBatch) -> np.ndarray:
        """Mean of the source hidden states over non-pad positions, [batch, embed_dim]."""
        with no_grad():
            hidden, keep = self._encode(sources)
        weights = keep.astype(self.dtype)
        counts = np.maximum(weights.sum(axis=1, keepdims=True), 1.0)
        return (hidden.data * weights[..., None]).sum(axis=1) / counts

    def snapshot(self) -> "DialogueTransformer":
        """Detached deep copy; its parameters never require grad."""
        clone = copy.deepcopy(self)
        for tensor in clone.parameters():
            tensor.requires_grad = False
        return clone


def teacher_forcing_pair(gold: Sequence[int], max_target_length: Optional[int] = None) -> Tuple[List[int], List[int]]:
    """(prefix, targets) = ([bos] + gold, gold + [eos]), truncated on the right."""
    prefix = [SpecialTokens.BOS_ID] + list(gold)
    targets = list(gold) + [SpecialTokens.EOS_ID]
    if max_target_length is not None:
        prefix, targets = prefix[:max_target_length], targets[:max_target_length]
    return prefix, targets


__all__ = ["DialogueTransformer", "pad_batch", "teacher_forcing_pair"]

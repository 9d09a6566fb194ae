"""Word-level vocabulary with fixed reserved ids."""

from __future__ import annotations

import hashlib
import json
from typing import Any, Dict, Iterable, List, Sequence

from ..config.settings import SpecialTokens
from ..utils.exceptions import ValidationError


class Vocab:
    """
    Bijective token/id map.

    Ids 0..k are the reserved tokens in ``SpecialTokens.RESERVED`` order; every
    other token follows. Unknown tokens encode to the unk id.
    """

    def __init__(self, tokens: Sequence[str]) -> None:
        reserved = list(SpecialTokens.RESERVED)
        if list(tokens[: len(reserved)]) != reserved:
            raise ValidationError("vocabulary must start with the reserved tokens in order")
        self.tokens: List[str] = list(tokens)
        self.token_to_id: Dict[str, int] = {}
        for index, token in enumerate(self.tokens):
            if token in self.token_to_id:
                raise ValidationError(f"duplicate vocabulary token {token!r}")
            self.token_to_id[token] = index

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: object) -> bool:
        return token in self.token_to_id

    @property
    def reserved_count(self) -> int:
        return len(SpecialTokens.RESERVED)

    @property
    def hash(self) -> str:
        """Content hash used to refuse checkpoints built on another vocabulary."""
        payload = json.dumps(self.tokens, ensure_ascii=False).encode("utf-8")
        return hashlib.sha256(payload).hexdigest()

    def id_of(self, token: str) -> int:
        return self.token_to_id.get(token, SpecialTokens.UNK_ID)

    def encode(self, tokens: Iterable[str]) -> List[int]:
        return [self.id_of(t) for t in tokens]

    def decode(self, ids: Iterable[int], skip_special: bool = True) -> List[str]:
        """Map ids back to tokens; pad/bos/eos are dropped when ``skip_special``."""
        hidden = {SpecialTokens.PAD_ID, SpecialTokens.BOS_ID, SpecialTokens.EOS_ID}
        out = []
        for i in ids:
            i = int(i)
            if not 0 <= i < len(self.tokens):
                raise ValidationError(f"token id {i} outside vocabulary of size {len(self.tokens)}")
            if skip_special and i in hidden:
                continue
            out.append(self.tokens[i])
        return out

    def to_dict(self) -> Dict[str, Any]:
        return {"tokens": list(self.tokens), "hash": self.hash}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> Vocab:
        vocab = cls(data["tokens"])
        expected = data.get("hash")
        if expected and expected != vocab.hash:
            raise ValidationError("vocabulary hash does not match its token list")
        return vocab

    @classmethod
    def reserved_only(cls) -> Vocab:
        return cls(list(SpecialTokens.RESERVED))

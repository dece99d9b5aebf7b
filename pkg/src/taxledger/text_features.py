"""Text branch: tokenizer and the 768-d hashed baseline embedder.

The baseline replaces a pretrained multilingual transformer while keeping
its 768-dimensional interface, so the fusion head downstream keeps the
same shape whether vectors are hashed locally or loaded from a sidecar
file of externally precomputed embeddings.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from . import sidecar
from .rng import fnv1a64, splitmix64

TEXT_DIM = 768
MAX_SEQ_LEN = 64

_SIGN_SALT = 0x5DEECE66D9F4A7C1

# Single-character-token ranges: CJK ideographs, kana, Hangul. Scripts
# without word delimiters otherwise come through as long runs, which is
# acceptable for a hashed baseline.
_CJK_RANGES = (
    (0x3040, 0x30FF),    # hiragana, katakana
    (0x3400, 0x4DBF),    # CJK extension A
    (0x4E00, 0x9FFF),    # CJK unified ideographs
    (0xAC00, 0xD7AF),    # Hangul syllables
    (0xF900, 0xFAFF),    # CJK compatibility ideographs
    (0x20000, 0x2A6DF),  # CJK extension B
)


def _is_cjk(ch: str) -> bool:
    cp = ord(ch)
    return any(lo <= cp <= hi for lo, hi in _CJK_RANGES)


def _is_word_char(ch: str) -> bool:
    return ch == "_" or ch.isalnum()


@dataclass(frozen=True)
class TokenSequence:
    """At most 64 lowercase NFC tokens."""

    tokens: tuple[str, ...]

    def __post_init__(self) -> None:
        norm = tuple(
            unicodedata.normalize("NFC", t.lower()) for t in self.tokens[:MAX_SEQ_LEN]
        )
        object.__setattr__(self, "tokens", norm)

    def __len__(self) -> int:
        return len(self.tokens)


class TextSource(Enum):
    HASHED_BASELINE = "hashed_baseline"
    PRECOMPUTED = "precomputed"


@dataclass(frozen=True)
class TextVector:
    values: np.ndarray
    source: TextSource

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.shape != (TEXT_DIM,):
            raise sidecar.DimensionError(int(vals.size), TEXT_DIM)
        object.__setattr__(self, "values", vals)


def tokenize(text: str) -> TokenSequence:
    """Unicode-aware segmentation into at most 64 lowercase NFC tokens.

    Runs of letters/digits/underscore form tokens; CJK characters are
    emitted one per token; everything else is a separator.
    """
    normalized = unicodedata.normalize("NFC", unicodedata.normalize("NFC", text).lower())
    tokens: list[str] = []
    current: list[str] = []
    for ch in normalized:
        if _is_cjk(ch):
            if current:
                tokens.append("".join(current))
                current = []
            tokens.append(ch)
        elif _is_word_char(ch):
            current.append(ch)
        else:
            if current:
                tokens.append("".join(current))
                current = []
        if len(tokens) >= MAX_SEQ_LEN:
            break
    if current and len(tokens) < MAX_SEQ_LEN:
        tokens.append("".join(current))
    return TokenSequence(tuple(tokens[:MAX_SEQ_LEN]))


def _gram_contribution(gram: str) -> tuple[int, float]:
    h = fnv1a64(gram.encode("utf-8"))
    index = h % TEXT_DIM
    sign = 1.0 if (splitmix64(h ^ _SIGN_SALT) >> 63) == 0 else -1.0
    return index, sign


def embed_hashed(tokens: TokenSequence) -> TextVector:
    """Signed feature hashing of unigrams + adjacent bigrams into 768 buckets.

    The result is L2-normalised; an empty sequence maps to the zero vector.
    Hashes are fixed 64-bit FNV-1a, so vectors are bit-reproducible.
    """
    values = np.zeros(TEXT_DIM, dtype=np.float64)
    toks = tokens.tokens
    for tok in toks:
        idx, sign = _gram_contribution(tok)
        values[idx] += sign
    for a, b in zip(toks, toks[1:]):
        idx, sign = _gram_contribution(a + "\x1f" + b)
        values[idx] += sign
    norm = float(np.linalg.norm(values))
    if norm > 0.0:
        values /= norm
    return TextVector(values=values, source=TextSource.HASHED_BASELINE)


def load_text_embedding(path: Path | str, post_id: str) -> TextVector:
    """A precomputed 768-d vector from a sidecar file."""
    values = sidecar.load_vector(path, post_id, TEXT_DIM)
    return TextVector(values=values, source=TextSource.PRECOMPUTED)

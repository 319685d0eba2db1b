"""Text normalization and greedy WordPiece tokenization.

The vocabulary follows the standard clinical-BERT vocab.txt layout: one
token per line, token id = zero-based line number, continuation pieces
prefixed with ##.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass, field
from pathlib import Path

CLS = "[CLS]"
SEP = "[SEP]"
UNK = "[UNK]"
PAD = "[PAD]"
SPECIAL_TOKENS = (CLS, SEP, UNK, PAD)
CONTINUATION = "##"

# Longest vocab entry the greedy scan will try; bounds pathological inputs.
MAX_MATCH_CHARS = 100


class VocabularyError(ValueError):
    """Vocabulary file violates the layout contract."""


def _is_punctuation(ch: str) -> bool:
    # ASCII symbol ranges count as punctuation alongside Unicode P* so that
    # hyphens, slashes etc. split consistently.
    cp = ord(ch)
    if 33 <= cp <= 47 or 58 <= cp <= 64 or 91 <= cp <= 96 or 123 <= cp <= 126:
        return True
    return unicodedata.category(ch).startswith("P")


def _is_control(ch: str) -> bool:
    if ch in ("\t", "\n", "\r"):
        return False  # treated as whitespace
    return unicodedata.category(ch) in ("Cc", "Cf")


def normalize(text: str, strip_accents: bool = False) -> str:
    """Canonical lowercase form: NFC, control characters dropped,
    punctuation split into standalone tokens, whitespace collapsed."""
    text = unicodedata.normalize("NFC", text)
    if strip_accents:
        text = "".join(
            ch for ch in unicodedata.normalize("NFD", text) if unicodedata.category(ch) != "Mn"
        )
        text = unicodedata.normalize("NFC", text)
    out: list[str] = []
    for ch in text.lower():
        if _is_control(ch):
            continue
        if _is_punctuation(ch):
            out.append(f" {ch} ")
        elif ch.isspace():
            out.append(" ")
        else:
            out.append(ch)
    return " ".join("".join(out).split())


@dataclass(frozen=True)
class Vocabulary:
    """Immutable subword vocabulary with the four special tokens."""

    entries: tuple[str, ...]
    index: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        index: dict[str, int] = {}
        for i, token in enumerate(self.entries):
            if not token:
                raise VocabularyError(f"empty token at id {i}")
            if token in index:
                raise VocabularyError(f"duplicate token {token!r} at ids {index[token]} and {i}")
            index[token] = i
        for special in SPECIAL_TOKENS:
            if special not in index:
                raise VocabularyError(f"vocabulary is missing required token {special}")
        object.__setattr__(self, "index", index)

    @classmethod
    def load(cls, path: str | Path) -> "Vocabulary":
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().split("\n")
        if lines and lines[-1] == "":
            lines.pop()  # trailing newline only; interior blanks would shift ids
        for i, line in enumerate(lines):
            if not line:
                raise VocabularyError(f"{path}:{i + 1}: empty vocabulary line")
        return cls(tuple(lines))

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, token: str) -> bool:
        return token in self.index

    def id_of(self, token: str) -> int:
        return self.index[token]

    def token_of(self, token_id: int) -> str:
        return self.entries[token_id]


@dataclass(frozen=True)
class TokenSequence:
    """Fixed-length encoded sequence: [CLS] body [SEP] then trailing pads."""

    ids: tuple[int, ...]
    tokens: tuple[str, ...]
    attention_mask: tuple[int, ...]
    max_len: int

    def real_tokens(self) -> tuple[str, ...]:
        """Tokens between [CLS] and [SEP]."""
        n_real = sum(self.attention_mask)
        return self.tokens[1 : n_real - 1]


def wordpiece(word: str, vocab: Vocabulary) -> list[str]:
    """Greedy longest-match-first subword split of a single word.

    Non-initial pieces must exist in their ##-prefixed form. If at any
    point no vocabulary entry matches, the whole word collapses to [UNK].
    """
    if any(ch.isspace() for ch in word):
        raise ValueError(f"wordpiece input must be a single word, got {word!r}")
    if not word:
        return []
    pieces: list[str] = []
    start = 0
    while start < len(word):
        end = min(len(word), start + MAX_MATCH_CHARS)
        piece = None
        while end > start:
            candidate = word[start:end]
            if start > 0:
                candidate = CONTINUATION + candidate
            if candidate in vocab:
                piece = candidate
                break
            end -= 1
        if piece is None:
            return [UNK]
        pieces.append(piece)
        start = end
    return pieces


def tokenize(text: str, vocab: Vocabulary) -> list[str]:
    """normalize + per-word wordpiece, without specials or padding."""
    tokens: list[str] = []
    for word in normalize(text).split():
        tokens.extend(wordpiece(word, vocab))
    return tokens


def encode(text: str, vocab: Vocabulary, max_len: int = 128) -> TokenSequence:
    """Encode text to exactly max_len positions:
    [CLS] subwords [SEP] [PAD]..., truncating subwords to max_len - 2."""
    if max_len < 3:
        raise ValueError(f"max_len must be >= 3, got {max_len}")
    body = tokenize(text, vocab)
    if len(body) > max_len - 2:
        body = body[: max_len - 2]
    tokens = [CLS, *body, SEP]
    mask = [1] * len(tokens)
    while len(tokens) < max_len:
        tokens.append(PAD)
        mask.append(0)
    ids = tuple(vocab.id_of(tok) for tok in tokens)
    return TokenSequence(ids=ids, tokens=tuple(tokens), attention_mask=tuple(mask), max_len=max_len)


def detokenize(tokens: list[str] | tuple[str, ...]) -> str:
    """Rejoin wordpiece output into space-separated words (specials skipped)."""
    words: list[str] = []
    for tok in tokens:
        if tok in SPECIAL_TOKENS:
            continue
        if tok.startswith(CONTINUATION) and words:
            words[-1] += tok[len(CONTINUATION):]
        else:
            words.append(tok)
    return " ".join(words)

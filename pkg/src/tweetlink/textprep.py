"""Deterministic text normalization and the three long-text strategies.

`clean` applies a fixed, ordered rule list so the same raw text always maps
to the same normalized string (and cleaning twice changes nothing). Tokens
are whitespace-delimited units after cleaning; no subword model is involved
because downstream encoders consume feature vectors, not token ids.
"""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass

from .errors import EmptyInputError, MalformedLineError

TokenSeq = list[str]
LemmaMap = dict[str, str]

_URL_RE = re.compile(r"(?:^|(?<=\s))(?:https?://|www\.)\S*")
_MENTION_RE = re.compile(r"(?:^|(?<=\s))@\S+")
_ALIAS_RE = re.compile(r":[a-z0-9_]+:")

# Common emoji blocks; modifiers that only alter a neighboring glyph are
# always dropped, never aliased.
_EMOJI_RANGES = (
    (0x1F300, 0x1F5FF),
    (0x1F600, 0x1F64F),
    (0x1F680, 0x1F6FF),
    (0x1F900, 0x1F9FF),
    (0x1FA70, 0x1FAFF),
    (0x2600, 0x26FF),
    (0x2700, 0x27BF),
    (0x1F1E6, 0x1F1FF),
)
_EMOJI_MODIFIERS = {0xFE0E, 0xFE0F, 0x200D}


@dataclass(frozen=True)
class CleaningConfig:
    min_word_len: int = 3
    emoji_mode: str = "drop"  # "drop" | "alias"
    strip_hashes: bool = True

    def __post_init__(self):
        if self.min_word_len < 1:
            raise ValueError("min_word_len must be >= 1")
        if self.emoji_mode not in ("drop", "alias"):
            raise ValueError(f"unknown emoji_mode {self.emoji_mode!r}")


@dataclass(frozen=True)
class ChunkingConfig:
    content_len: int
    bos: str = "<s>"
    eos: str = "</s>"
    pad: str = "<pad>"
    truncate_limit: int = 512
    header_len: int = 256
    part_len: int = 256

    def __post_init__(self):
        if min(self.content_len, self.truncate_limit, self.header_len, self.part_len) < 1:
            raise ValueError("all chunking lengths must be >= 1")
        if len({self.bos, self.eos, self.pad}) != 3:
            raise ValueError("bos/eos/pad sentinels must be pairwise distinct")


def _is_emoji(ch: str) -> bool:
    cp = ord(ch)
    return any(lo <= cp <= hi for lo, hi in _EMOJI_RANGES)


def _emoji_alias(ch: str) -> str:
    name = unicodedata.name(ch, "emoji").lower()
    name = re.sub(r"[^a-z0-9]+", "_", name).strip("_")
    return f" :{name or 'emoji'}: "


def _handle_emoji(text: str, mode: str) -> str:
    out = []
    for ch in text:
        if ord(ch) in _EMOJI_MODIFIERS:
            continue
        if _is_emoji(ch):
            if mode == "alias":
                out.append(_emoji_alias(ch))
        else:
            out.append(ch)
    return "".join(out)


def _filter_chars(segment: str, keep_hash: bool) -> str:
    # Drops digits, punctuation and symbols; keeps letters and whitespace.
    # With keep_hash, a token-leading '#' survives so hashtags stay marked.
    out = []
    token_start = True
    for ch in segment:
        if ch.isalpha():
            out.append(ch)
            token_start = False
        elif ch.isspace():
            out.append(ch)
            token_start = True
        elif keep_hash and ch == "#" and token_start:
            out.append(ch)
            token_start = False
    return "".join(out)


def _strip_digits_punct(text: str, keep_hash: bool) -> str:
    # ':name:' emoji aliases pass through untouched.
    parts = []
    pos = 0
    for m in _ALIAS_RE.finditer(text):
        parts.append(_filter_chars(text[pos : m.start()], keep_hash))
        parts.append(m.group())
        pos = m.end()
    parts.append(_filter_chars(text[pos:], keep_hash))
    return "".join(parts)


def clean(text: str, cfg: CleaningConfig = CleaningConfig()) -> str:
    """Normalize raw text with the fixed rule order.

    lowercase -> drop URLs -> drop @-mentions -> strip '#' (optional) ->
    emoji per mode -> drop digits/punctuation -> drop short words ->
    collapse whitespace.
    """
    t = text.lower()
    t = _URL_RE.sub(" ", t)
    t = _MENTION_RE.sub(" ", t)
    if cfg.strip_hashes:
        t = t.replace("#", "")
    t = _handle_emoji(t, cfg.emoji_mode)
    t = _strip_digits_punct(t, keep_hash=not cfg.strip_hashes)
    words = [w for w in t.split() if len(w) >= cfg.min_word_len]
    return " ".join(words)


def tokenize_lemmatize(text: str, lemmas: LemmaMap | None = None) -> TokenSeq:
    """Whitespace-split cleaned text, mapping each token through the lemma table."""
    lemmas = lemmas or {}
    return [lemmas.get(tok, tok) for tok in text.split()]


def load_lemmas(path) -> LemmaMap:
    """Read a token<TAB>lemma table."""
    table: LemmaMap = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            cols = line.split("\t")
            if len(cols) != 2 or not cols[0] or not cols[1]:
                raise MalformedLineError(str(path), line_no, "expected 'token<TAB>lemma'")
            table[cols[0]] = cols[1]
    return table


def truncate(tokens: TokenSeq, limit: int) -> TokenSeq:
    if limit < 1:
        raise ValueError("limit must be >= 1")
    return tokens[:limit]


def chunk(tokens: TokenSeq, cfg: ChunkingConfig) -> list[TokenSeq]:
    """Split into sentinel-wrapped chunks of identical length.

    Every chunk is [bos, <content_len tokens>, eos], the last one padded out
    with the pad sentinel, so chunk embeddings can be averaged elementwise.
    """
    if not tokens:
        raise EmptyInputError("cannot chunk an empty token sequence")
    chunks = []
    for start in range(0, len(tokens), cfg.content_len):
        body = tokens[start : start + cfg.content_len]
        body = body + [cfg.pad] * (cfg.content_len - len(body))
        chunks.append([cfg.bos, *body, cfg.eos])
    return chunks


def augment_split(tokens: TokenSeq, cfg: ChunkingConfig) -> tuple[TokenSeq, list[TokenSeq]]:
    """Header (first header_len tokens) plus consecutive part_len pieces.

    Concatenating header and parts reproduces the input exactly; each piece
    later forms its own positive training pair.
    """
    if not tokens:
        raise EmptyInputError("cannot split an empty token sequence")
    header = tokens[: cfg.header_len]
    rest = tokens[cfg.header_len :]
    parts = [rest[i : i + cfg.part_len] for i in range(0, len(rest), cfg.part_len)]
    return header, parts

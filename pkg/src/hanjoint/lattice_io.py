"""Vocabularies, emission lattices, and their on-disk formats.

A vocabulary is a UTF-8 text file, one token per line, with the CTC blank
pinned to index 0 and a single ``"|"`` word-delimiter token somewhere in the
list.  An emission lattice is an F x V matrix of per-frame scores, either
raw logits or log-probabilities (``normalized=True`` means each row's
probabilities sum to 1).

Lattices ship in two interchangeable formats:

* binary ("CTCL" v1): magic ``CTCL``, version byte 1, flags byte (bit 0 =
  normalized, bits 1-7 must be zero), F and V as little-endian uint32, then
  F*V little-endian float32 values in row-major order;
* text: a header line ``F V [norm|raw]`` followed by F lines of V
  space-separated decimals.

Values are stored as 32-bit floats on disk and widened to float64 in memory.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import hangul
from .errors import (
    BadMagic,
    BlankInLabel,
    DimensionMismatch,
    DuplicateToken,
    HanjointError,
    MissingBlank,
    MissingDelimiter,
    NonFiniteScore,
    OutOfVocabulary,
    TruncatedFile,
)

BLANK_TOKEN = "<ctc_blank>"
DELIMITER_TOKEN = "|"
BLANK_INDEX = 0

_MAGIC = b"CTCL"
_VERSION = 1
_FLAG_NORMALIZED = 0x01

ROW_SUM_TOL = 1e-6


@dataclass(frozen=True)
class Vocabulary:
    """Ordered token inventory with blank at index 0 and a word delimiter."""

    tokens: tuple[str, ...]
    delimiter_index: int = field(init=False)
    _index: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.tokens or self.tokens[0] != BLANK_TOKEN:
            raise MissingBlank(f"token {BLANK_TOKEN!r} must sit at index 0")
        index: dict[str, int] = {}
        for i, tok in enumerate(self.tokens):
            if not tok:
                raise HanjointError(f"empty token at line {i + 1}")
            if tok in index:
                raise DuplicateToken(tok, i + 1)
            index[tok] = i
        if DELIMITER_TOKEN not in index:
            raise MissingDelimiter(f"no {DELIMITER_TOKEN!r} token present")
        object.__setattr__(self, "delimiter_index", index[DELIMITER_TOKEN])
        object.__setattr__(self, "_index", index)

    @property
    def size(self) -> int:
        return len(self.tokens)

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self._index

    def index_of(self, token: str) -> int | None:
        return self._index.get(token)

    @classmethod
    def from_units(cls, units: list[str]) -> "Vocabulary":
        """Build a vocabulary from content units, prepending blank and delimiter."""
        return cls((BLANK_TOKEN, DELIMITER_TOKEN, *units))

    @classmethod
    def load(cls, path: str | Path) -> "Vocabulary":
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        return cls(tuple(lines))

    def save(self, path: str | Path) -> None:
        Path(path).write_text("\n".join(self.tokens) + "\n", encoding="utf-8")


load_vocab = Vocabulary.load


@dataclass
class EmissionLattice:
    """F x V per-frame score matrix (float64 in memory)."""

    scores: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        scores = np.asarray(self.scores, dtype=np.float64)
        if scores.ndim != 2:
            raise DimensionMismatch(f"lattice must be 2-D, got shape {scores.shape}")
        self.scores = scores
        bad = np.argwhere(~np.isfinite(scores))
        if bad.size:
            frame, index = map(int, bad[0])
            raise NonFiniteScore(frame, index)
        if self.normalized and scores.shape[0]:
            sums = np.exp(scores).sum(axis=1)
            off = np.abs(sums - 1.0)
            worst = int(np.argmax(off))
            if off[worst] > ROW_SUM_TOL:
                raise HanjointError(
                    f"row {worst} marked normalized but probabilities sum to {sums[worst]!r}"
                )

    @property
    def frames(self) -> int:
        return self.scores.shape[0]

    @property
    def vocab_size(self) -> int:
        return self.scores.shape[1]


@dataclass
class Utterance:
    """One utterance: an id, optional reference text, and per-level lattices."""

    id: str
    reference: str | None = None
    syllable_lattice: EmissionLattice | None = None
    grapheme_lattice: EmissionLattice | None = None

    def __post_init__(self):
        if self.syllable_lattice is None and self.grapheme_lattice is None:
            raise HanjointError(f"utterance {self.id!r} carries no lattice")


def normalize(lattice: EmissionLattice) -> EmissionLattice:
    """Log-softmax each row; idempotent on already-normalized lattices."""
    scores = lattice.scores
    if scores.shape[0] == 0:
        return EmissionLattice(scores.copy(), normalized=True)
    shifted = scores - scores.max(axis=1, keepdims=True)
    log_z = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    return EmissionLattice(shifted - log_z, normalized=True)


def _parse_binary(data: bytes, path: str) -> EmissionLattice:
    if len(data) < 4 or data[:4] != _MAGIC:
        raise BadMagic(f"{path}: expected magic {_MAGIC!r}")
    if len(data) < 14:
        raise TruncatedFile(f"{path}: header incomplete")
    version, flags = data[4], data[5]
    if version != _VERSION:
        raise BadMagic(f"{path}: unsupported version {version}")
    if flags & ~_FLAG_NORMALIZED:
        raise BadMagic(f"{path}: reserved flag bits set: {flags:#04x}")
    frames, vocab = struct.unpack_from("<II", data, 6)
    body = data[14:]
    expected = frames * vocab * 4
    if len(body) < expected:
        raise TruncatedFile(f"{path}: need {expected} payload bytes, found {len(body)}")
    if len(body) > expected:
        raise DimensionMismatch(f"{path}: {len(body) - expected} trailing bytes")
    values = np.frombuffer(body, dtype="<f4", count=frames * vocab)
    scores = values.astype(np.float64).reshape(frames, vocab)
    try:
        return EmissionLattice(scores, normalized=bool(flags & _FLAG_NORMALIZED))
    except NonFiniteScore:
        raise
    except HanjointError as exc:
        raise HanjointError(f"{path}: {exc}") from exc


def _parse_text(text: str, path: str) -> EmissionLattice:
    lines = text.splitlines()
    if not lines:
        raise TruncatedFile(f"{path}: empty file")
    head = lines[0].split()
    if len(head) not in (2, 3):
        raise DimensionMismatch(f"{path}: header must be 'F V [norm|raw]'")
    try:
        frames, vocab = int(head[0]), int(head[1])
    except ValueError as exc:
        raise DimensionMismatch(f"{path}: bad header {lines[0]!r}") from exc
    normalized = False
    if len(head) == 3:
        if head[2] not in ("norm", "raw"):
            raise DimensionMismatch(f"{path}: unknown mode {head[2]!r}")
        normalized = head[2] == "norm"
    rows = [ln for ln in lines[1:] if ln.strip()]
    if len(rows) < frames:
        raise TruncatedFile(f"{path}: expected {frames} rows, found {len(rows)}")
    if len(rows) > frames:
        raise DimensionMismatch(f"{path}: expected {frames} rows, found {len(rows)}")
    scores = np.empty((frames, vocab), dtype=np.float64)
    for f, line in enumerate(rows):
        parts = line.split()
        if len(parts) != vocab:
            raise DimensionMismatch(f"{path}: row {f} has {len(parts)} values, expected {vocab}")
        for v, part in enumerate(parts):
            try:
                value = float(part)
            except ValueError as exc:
                raise DimensionMismatch(f"{path}: row {f} value {part!r}") from exc
            if not math.isfinite(value):
                raise NonFiniteScore(f, v)
            scores[f, v] = value
    try:
        return EmissionLattice(scores, normalized=normalized)
    except HanjointError as exc:
        raise HanjointError(f"{path}: {exc}") from exc


def load_lattice(path: str | Path, format: str = "auto") -> EmissionLattice:
    """Read a lattice file.  ``format`` is ``binary``, ``text``, or ``auto``
    (sniff the magic bytes)."""
    data = Path(path).read_bytes()
    if format == "auto":
        format = "binary" if data[:4] == _MAGIC else "text"
    if format == "binary":
        return _parse_binary(data, str(path))
    if format == "text":
        return _parse_text(data.decode("utf-8"), str(path))
    raise ValueError(f"unknown lattice format {format!r}")


def save_lattice(lattice: EmissionLattice, path: str | Path, format: str = "binary") -> None:
    path = Path(path)
    if format == "binary":
        flags = _FLAG_NORMALIZED if lattice.normalized else 0
        header = _MAGIC + bytes([_VERSION, flags])
        header += struct.pack("<II", lattice.frames, lattice.vocab_size)
        body = lattice.scores.astype("<f4").tobytes()
        path.write_bytes(header + body)
    elif format == "text":
        mode = "norm" if lattice.normalized else "raw"
        lines = [f"{lattice.frames} {lattice.vocab_size} {mode}"]
        for row in lattice.scores:
            lines.append(" ".join(repr(float(x)) for x in row))
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    else:
        raise ValueError(f"unknown lattice format {format!r}")


def text_to_units(text: str, level: str) -> list[str]:
    """Split text into the unit sequence of a modeling level; spaces become
    the word boundary marker at both levels."""
    if level == "syllable":
        return list(text)
    if level == "grapheme":
        return hangul.decompose_text(text)
    raise ValueError(f"unknown level {level!r}")


def text_to_tokens(text: str, vocab: Vocabulary, level: str) -> list[int]:
    """Map text to vocabulary indices.  Raises :class:`OutOfVocabulary` with
    the offending unit and its position in the unit sequence."""
    tokens: list[int] = []
    for pos, unit in enumerate(text_to_units(text, level)):
        if unit == " ":
            tokens.append(vocab.delimiter_index)
            continue
        idx = vocab.index_of(unit)
        if idx is None:
            raise OutOfVocabulary(unit, pos)
        tokens.append(idx)
    return tokens


def tokens_to_units(tokens: list[int], vocab: Vocabulary) -> list[str]:
    units: list[str] = []
    for tok in tokens:
        if tok == BLANK_INDEX:
            raise BlankInLabel("blank index in token sequence")
        units.append(" " if tok == vocab.delimiter_index else vocab.tokens[tok])
    return units


def tokens_to_text(tokens: list[int], vocab: Vocabulary, level: str = "syllable") -> str:
    """Inverse of :func:`text_to_tokens`; grapheme sequences are composed
    back into syllable blocks."""
    units = tokens_to_units(tokens, vocab)
    if level == "grapheme":
        return hangul.compose_jamo(units)
    return "".join(units)

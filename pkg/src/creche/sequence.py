"""Finite-alphabet sequences: encoding raw bytes and concatenating sources."""
from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

POLICIES = ("identity", "dense", "letters")
MAX_ALPHABET = 1 << 16


@dataclass(frozen=True)
class SymbolSequence:
    """An encoded string over ``{0, ..., alphabet_size - 1}``.

    ``labels`` optionally records the raw byte each symbol id stands for, so
    the sequence can be decoded and merged with other labelled sequences.
    """

    symbols: np.ndarray
    alphabet_size: int
    labels: Optional[bytes] = field(default=None, compare=False)

    def __post_init__(self):
        symbols = np.ascontiguousarray(self.symbols, dtype=np.int64)
        if symbols.ndim != 1:
            raise ValueError("symbols must be one-dimensional")
        if symbols.size < 2:
            raise ValueError(f"sequence needs at least 2 symbols, got {symbols.size}")
        if not 1 <= self.alphabet_size <= MAX_ALPHABET:
            raise ValueError(f"alphabet_size {self.alphabet_size} out of range")
        if symbols.min() < 0 or symbols.max() >= self.alphabet_size:
            raise ValueError("symbol outside declared alphabet")
        if self.labels is not None and len(self.labels) != self.alphabet_size:
            raise ValueError("labels must name every symbol id")
        symbols.setflags(write=False)
        object.__setattr__(self, "symbols", symbols)

    @property
    def n(self) -> int:
        return int(self.symbols.size)

    def __len__(self) -> int:
        return self.n

    def __eq__(self, other):
        if not isinstance(other, SymbolSequence):
            return NotImplemented
        return self.alphabet_size == other.alphabet_size and np.array_equal(
            self.symbols, other.symbols
        )

    def __hash__(self):
        return hash((self.alphabet_size, self.symbols.tobytes()))


def from_symbols(symbols: Sequence[int], alphabet_size: Optional[int] = None) -> SymbolSequence:
    """Wrap an explicit array of symbol ids; alphabet defaults to ``max + 1``."""
    arr = np.asarray(symbols, dtype=np.int64)
    if arr.size == 0:
        raise ValueError("empty input")
    if alphabet_size is None:
        alphabet_size = int(arr.max()) + 1
    return SymbolSequence(arr, alphabet_size)


def from_string(text: str, policy: str = "dense") -> SymbolSequence:
    """Convenience for tests and examples: encode an ASCII string."""
    return encode_bytes(text.encode("ascii"), policy)


def encode_bytes(raw: bytes, policy: str = "identity") -> SymbolSequence:
    """Encode a byte string.

    Policies:

    ``identity``
        symbol id = byte value, alphabet of 256.
    ``dense``
        the distinct bytes present, in sorted order, become ``0..k-1``.
    ``letters``
        ASCII letters are lowercased and everything else is dropped; the
        alphabet is the fixed 26 letters ``a..z``.
    """
    if policy not in POLICIES:
        raise ValueError(f"unknown encoding policy {policy!r}; choose from {POLICIES}")
    if len(raw) == 0:
        raise ValueError("empty input")
    data = np.frombuffer(bytes(raw), dtype=np.uint8)

    if policy == "identity":
        return SymbolSequence(data.astype(np.int64), 256, labels=bytes(range(256)))

    if policy == "dense":
        present, symbols = np.unique(data, return_inverse=True)
        return SymbolSequence(symbols.astype(np.int64), int(present.size), labels=present.tobytes())

    lowered = np.frombuffer(bytes(raw).lower(), dtype=np.uint8)
    keep = lowered[(lowered >= ord("a")) & (lowered <= ord("z"))]
    if keep.size == 0:
        raise ValueError("no letters in input")
    return SymbolSequence(
        (keep - ord("a")).astype(np.int64), 26, labels=bytes(range(ord("a"), ord("z") + 1))
    )


def decode(seq: SymbolSequence) -> bytes:
    if seq.labels is None:
        raise ValueError("sequence carries no byte labels")
    table = np.frombuffer(seq.labels, dtype=np.uint8)
    return table[seq.symbols].tobytes()


def read_source(path: Union[str, Path], policy: str = "identity") -> SymbolSequence:
    """Read a file (or standard input for ``-``) as raw bytes and encode it."""
    if str(path) == "-":
        raw = sys.stdin.buffer.read()
    else:
        raw = Path(path).read_bytes()
    return encode_bytes(raw, policy)


def change_index(n: int, gamma: float) -> int:
    """Split point ``round(n * gamma)`` with ties rounding up."""
    if not 0.0 < gamma < 1.0:
        raise ValueError(f"gamma must lie in (0, 1), got {gamma}")
    c = math.floor(n * gamma + 0.5)
    if not 1 <= c <= n - 1:
        raise ValueError(f"change index {c} degenerate for n={n}, gamma={gamma}")
    return c


def concatenate(left: SymbolSequence, right: SymbolSequence) -> tuple[SymbolSequence, int]:
    """Join two sequences; returns the joined sequence and ``len(left)``.

    When both sides carry byte labels the two alphabets are merged so that
    equal bytes get equal ids. Otherwise ids are taken as already shared and
    the alphabet is the larger of the two.
    """
    if left.labels is not None and right.labels is not None and left.labels != right.labels:
        union = np.union1d(
            np.frombuffer(left.labels, dtype=np.uint8), np.frombuffer(right.labels, dtype=np.uint8)
        )
        remap_l = np.searchsorted(union, np.frombuffer(left.labels, dtype=np.uint8))
        remap_r = np.searchsorted(union, np.frombuffer(right.labels, dtype=np.uint8))
        symbols = np.concatenate([remap_l[left.symbols], remap_r[right.symbols]])
        joined = SymbolSequence(symbols, int(union.size), labels=union.tobytes())
    else:
        labels = left.labels if left.labels == right.labels else None
        joined = SymbolSequence(
            np.concatenate([left.symbols, right.symbols]),
            max(left.alphabet_size, right.alphabet_size),
            labels=labels,
        )
    return joined, left.n

"""Match lengths, match-position sets and sampled match targets.

Everything is driven by a suffix array and its LCP array. For position ``i``
let ``h_i`` be the longest common prefix of suffix ``i`` with any other
suffix. The match length is ``L_i = h_i + 1``: the shortest window at ``i``
seen nowhere else, where a window running off the end of the string matches
nothing. The match-position set ``S_i`` is every other suffix sharing the
first ``h_i`` symbols with suffix ``i``; in suffix-array order that is one
contiguous block of ranks around ``rank[i]``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .sequence import SymbolSequence
from .sources import Seed, make_rng

_DIGIT = 16
_DIGIT_MASK = (1 << _DIGIT) - 1


def _radix_argsort(keys: list[np.ndarray]) -> np.ndarray:
    """Stable lexicographic argsort of non-negative integer keys, most significant first.

    LSD radix over 16-bit digits; numpy sorts 16-bit integers with a linear
    radix sort when ``kind="stable"``.
    """
    n = keys[0].size
    order = np.arange(n, dtype=np.int64)
    for key in reversed(keys):
        top = int(key.max()) if n else 0
        shift = 0
        while True:
            digit = ((key[order] >> shift) & _DIGIT_MASK).astype(np.uint16)
            order = order[np.argsort(digit, kind="stable")]
            shift += _DIGIT
            if top >> shift == 0:
                break
    return order


def suffix_array(symbols: np.ndarray) -> np.ndarray:
    """Suffix array by prefix doubling.

    Each round ranks suffixes by their first ``2k`` symbols using the ranks
    for ``k``; a round costs O(n) radix passes and at most ``log2(n)`` rounds
    are needed (fewer when the longest repeat is short).
    """
    s = np.asarray(symbols)
    n = s.size
    if n == 0:
        return np.empty(0, dtype=np.int64)
    _, rank = np.unique(s, return_inverse=True)
    rank = rank.astype(np.int64).ravel()
    sa = _radix_argsort([rank])
    if n == 1:
        return sa
    k = 1
    while True:
        second = np.zeros(n, dtype=np.int64)
        second[: n - k] = rank[k:] + 1
        sa = _radix_argsort([rank, second])
        r1, r2 = rank[sa], second[sa]
        bump = np.empty(n, dtype=np.int64)
        bump[0] = 0
        bump[1:] = (r1[1:] != r1[:-1]) | (r2[1:] != r2[:-1])
        new_rank = np.empty(n, dtype=np.int64)
        new_rank[sa] = np.cumsum(bump)
        rank = new_rank
        if rank[sa[-1]] == n - 1 or k >= n:
            return sa
        k *= 2


def lcp_array(symbols: np.ndarray, sa: np.ndarray) -> np.ndarray:
    """Kasai's linear-time LCP: ``lcp[r]`` is the LCP of suffixes ``sa[r-1]`` and ``sa[r]``.

    ``lcp[0]`` is 0.
    """
    s = np.asarray(symbols).tolist()
    sa_l = np.asarray(sa).tolist()
    n = len(s)
    rank = [0] * n
    for r, p in enumerate(sa_l):
        rank[p] = r
    lcp = [0] * n
    h = 0
    for i in range(n):
        r = rank[i]
        if r == 0:
            h = 0
            continue
        j = sa_l[r - 1]
        while i + h < n and j + h < n and s[i + h] == s[j + h]:
            h += 1
        lcp[r] = h
        if h:
            h -= 1
    return np.asarray(lcp, dtype=np.int64)


def _sparse_min_table(a: np.ndarray) -> list[np.ndarray]:
    table = [a]
    width = 1
    while 2 * width <= a.size:
        prev = table[-1]
        table.append(np.minimum(prev[:-width], prev[width:]))
        width *= 2
    return table


@dataclass(frozen=True)
class MatchProfile:
    """Suffix structures and match lengths of one sequence. Immutable once built."""

    symbols: np.ndarray
    sa: np.ndarray
    rank: np.ndarray
    lcp: np.ndarray
    match_lengths: np.ndarray

    @property
    def n(self) -> int:
        return int(self.symbols.size)

    @cached_property
    def rank_intervals(self) -> tuple[np.ndarray, np.ndarray]:
        """Inclusive rank block ``[lo[i], hi[i]]`` of suffixes sharing ``L[i]-1`` symbols with ``i``."""
        n = self.n
        need = self.match_lengths - 1
        r = self.rank
        table = _sparse_min_table(self.lcp)
        lo = r.copy()
        hi = r.copy()
        for k in range(len(table) - 1, -1, -1):
            width = 1 << k
            st = table[k]
            # extend right over lcp[hi+1 .. hi+width]
            ok = hi + width <= n - 1
            idx = np.where(ok, hi + 1, 0)
            ok &= st[np.minimum(idx, st.size - 1)] >= need
            hi = np.where(ok, hi + width, hi)
            # extend left over lcp[lo-width+1 .. lo]
            ok = lo - width >= 0
            idx = np.where(ok, lo - width + 1, 0)
            ok &= st[np.minimum(idx, st.size - 1)] >= need
            lo = np.where(ok, lo - width, lo)
        return lo, hi

    @property
    def match_set_sizes(self) -> np.ndarray:
        lo, hi = self.rank_intervals
        return hi - lo


def compute_match_lengths(x: SymbolSequence | np.ndarray) -> MatchProfile:
    symbols = x.symbols if isinstance(x, SymbolSequence) else np.asarray(x, dtype=np.int64)
    n = symbols.size
    if n < 2:
        raise ValueError("match lengths need n >= 2")
    sa = suffix_array(symbols)
    rank = np.empty(n, dtype=np.int64)
    rank[sa] = np.arange(n, dtype=np.int64)
    lcp = lcp_array(symbols, sa)
    with_next = np.zeros(n, dtype=np.int64)
    with_next[:-1] = lcp[1:]
    longest = np.maximum(lcp[rank], with_next[rank])
    for arr in (sa, rank, lcp, longest):
        arr.setflags(write=False)
    return MatchProfile(
        symbols=symbols, sa=sa, rank=rank, lcp=lcp, match_lengths=longest + 1
    )


def match_position_set(profile: MatchProfile, i: int) -> np.ndarray:
    """Sorted positions ``j != i`` whose window of length ``L[i]-1`` equals the one at ``i``."""
    if not 0 <= i < profile.n:
        raise IndexError(f"position {i} out of range for n={profile.n}")
    lo, hi = profile.rank_intervals
    block = profile.sa[lo[i] : hi[i] + 1]
    return np.sort(block[block != i])


def sample_match_targets(profile: MatchProfile, seed: Seed = None) -> np.ndarray:
    """One target per position, uniform on its match-position set, independent across positions."""
    rng = make_rng(seed)
    lo, hi = profile.rank_intervals
    pick = lo + rng.integers(0, hi - lo)
    # skip over the position's own rank
    pick += pick >= profile.rank
    return profile.sa[pick]


def estimate_entropy(profile: MatchProfile) -> float:
    """Entropy in bits per symbol, ``n log2(n) / sum(L)``."""
    n = profile.n
    if n < 16:
        raise ValueError("entropy estimate needs n >= 16")
    return n * math.log2(n) / float(profile.match_lengths.sum())

"""Synthetic IID and first-order Markov sources, plus seeding helpers."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Mapping, Optional, Union

import numpy as np

from .sequence import SymbolSequence

PROB_TOL = 1e-12

Seed = Union[int, np.random.Generator, np.random.SeedSequence, None]


def make_rng(seed: Seed = None, trial: Optional[int] = None) -> np.random.Generator:
    """Return a PCG64 generator.

    With ``trial`` given, the stream is derived from ``(seed, trial)`` so that
    trial ``k`` of a run draws the same numbers however trials are scheduled.
    """
    if isinstance(seed, np.random.Generator):
        if trial is not None:
            raise ValueError("cannot derive a trial stream from a live Generator")
        return seed
    if trial is None:
        return np.random.default_rng(seed)
    if isinstance(seed, np.random.SeedSequence):
        entropy = seed.entropy
    else:
        entropy = 0 if seed is None else int(seed)
    return np.random.default_rng(np.random.SeedSequence(entropy, spawn_key=(int(trial),)))


def _check_probs(p: np.ndarray, what: str) -> np.ndarray:
    p = np.asarray(p, dtype=np.float64)
    if p.ndim != 1 or p.size == 0:
        raise ValueError(f"{what} must be a non-empty vector")
    if np.any(p < 0) or abs(p.sum() - 1.0) > PROB_TOL:
        raise ValueError(f"{what} is not a probability vector: {p.tolist()}")
    return p


@dataclass(frozen=True)
class IidSource:
    probs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "probs", _check_probs(self.probs, "probs"))

    @property
    def alphabet_size(self) -> int:
        return int(self.probs.size)


@dataclass(frozen=True)
class MarkovSource:
    """Row-stochastic ``transition`` matrix; ``initial=None`` means start stationary."""

    transition: np.ndarray
    initial: Optional[np.ndarray] = None

    def __post_init__(self):
        P = np.asarray(self.transition, dtype=np.float64)
        if P.ndim != 2 or P.shape[0] != P.shape[1] or P.shape[0] == 0:
            raise ValueError("transition must be a square matrix")
        if np.any(P < 0) or np.any(np.abs(P.sum(axis=1) - 1.0) > PROB_TOL):
            raise ValueError("transition matrix is not row-stochastic")
        object.__setattr__(self, "transition", P)
        if self.initial is not None:
            init = _check_probs(self.initial, "initial")
            if init.size != P.shape[0]:
                raise ValueError("initial vector does not match the matrix size")
            object.__setattr__(self, "initial", init)

    @property
    def alphabet_size(self) -> int:
        return int(self.transition.shape[0])


def sample_iid(src: IidSource, n: int, seed: Seed = None) -> SymbolSequence:
    if n < 1:
        raise ValueError("n must be positive")
    rng = make_rng(seed)
    symbols = rng.choice(src.alphabet_size, size=n, p=src.probs)
    return _wrap(symbols, src.alphabet_size)


def stationary_distribution(src: MarkovSource, tol: float = 1e-13, max_iter: int = 100_000) -> np.ndarray:
    """Stationary vector by power iteration started from state 0.

    Raises ``ValueError`` if the iteration has not settled after ``max_iter``
    steps (periodic or badly mixing chains).
    """
    P = src.transition
    k = P.shape[0]
    pi = np.zeros(k)
    pi[0] = 1.0
    for _ in range(max_iter):
        nxt = pi @ P
        nxt /= nxt.sum()
        if np.max(np.abs(nxt - pi)) < tol:
            return nxt
        pi = nxt
    raise ValueError("power iteration did not converge; chain may be periodic or reducible")


def sample_markov(src: MarkovSource, n: int, seed: Seed = None) -> SymbolSequence:
    if n < 1:
        raise ValueError("n must be positive")
    rng = make_rng(seed)
    init = src.initial if src.initial is not None else stationary_distribution(src)
    k = src.alphabet_size
    cum = np.cumsum(src.transition, axis=1)
    cum[:, -1] = 1.0
    state = int(rng.choice(k, p=init))
    u = rng.random(n)
    # successor of every state for every uniform draw; the walk is then a lookup
    succ = np.stack([np.searchsorted(cum[s], u, side="right") for s in range(k)])
    np.minimum(succ, k - 1, out=succ)
    table = succ.tolist()
    out = [state]
    for t in range(1, n):
        state = table[state][t]
        out.append(state)
    return _wrap(np.asarray(out, dtype=np.int64), k)


def _wrap(symbols: np.ndarray, k: int) -> SymbolSequence:
    # SymbolSequence needs n >= 2; report it as a sampling error
    if symbols.size < 2:
        raise ValueError("sampled sequences must have length >= 2")
    return SymbolSequence(symbols, k)


def source_from_config(cfg: Mapping[str, Any]) -> Union[IidSource, MarkovSource]:
    """Build a source from a JSON-style mapping.

    ``{"kind": "iid", "probs": [...]}`` or
    ``{"kind": "markov", "transition": [[...], ...], "initial": [...]}``.
    """
    kind = cfg.get("kind", "iid")
    if kind == "iid":
        return IidSource(np.asarray(cfg["probs"], dtype=float))
    if kind == "markov":
        init = cfg.get("initial")
        return MarkovSource(
            np.asarray(cfg["transition"], dtype=float),
            None if init is None else np.asarray(init, dtype=float),
        )
    raise ValueError(f"unknown source kind {kind!r}")


def sample_source(src: Union[IidSource, MarkovSource], n: int, seed: Seed = None) -> SymbolSequence:
    if isinstance(src, IidSource):
        return sample_iid(src, n, seed)
    return sample_markov(src, n, seed)

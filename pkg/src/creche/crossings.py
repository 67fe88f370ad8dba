"""Crossing counts of a match graph and the CRECHE change-point estimate."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Union

import numpy as np

# slack for the floating-point envelope check only; counts are checked exactly
ENVELOPE_ATOL = 1e-12


def count_crossings(targets: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Left-right and right-left crossing counts at every cut ``j = 0..n-1``.

    ``c_lr[j] = #{k : k < j <= T[k]}`` and ``c_rl[j] = #{k : T[k] < j <= k}``.
    Each edge adds one to a contiguous run of cuts, so both arrays come from
    a difference array and a prefix sum.
    """
    T = np.asarray(targets, dtype=np.int64)
    n = T.size
    if n and (T.min() < 0 or T.max() >= n):
        raise ValueError("targets must lie in 0..n-1")
    k = np.arange(n, dtype=np.int64)

    fwd = T > k
    diff = np.bincount(k[fwd] + 1, minlength=n + 1) - np.bincount(T[fwd] + 1, minlength=n + 1)
    c_lr = np.cumsum(diff[:n])

    back = T < k
    diff = np.bincount(T[back] + 1, minlength=n + 1) - np.bincount(k[back] + 1, minlength=n + 1)
    c_rl = np.cumsum(diff[:n])
    return c_lr.astype(np.int64), c_rl.astype(np.int64)


@dataclass(frozen=True)
class CrossingCurves:
    """Counts and normalised curves indexed by cut ``j``.

    All arrays have length ``n``. The ``psi`` arrays are evaluated on
    ``j = 1..n-1`` and hold NaN at ``j = 0``, where the right-left curve is
    undefined.
    """

    n: int
    c_lr: np.ndarray
    c_rl: np.ndarray
    psi_lr: np.ndarray
    psi_rl: np.ndarray
    psi: np.ndarray

    @property
    def j(self) -> np.ndarray:
        return np.arange(1, self.n)

    def envelope_violations(self) -> int:
        """Number of cuts breaking the deterministic count and curve bounds."""
        n = self.n
        j = np.arange(n)
        bad = (self.c_lr < 0) | (self.c_lr > j) | (self.c_rl < 0) | (self.c_rl > n - j)
        jj = j[1:].astype(float)
        plr, prl = self.psi_lr[1:], self.psi_rl[1:]
        bad_psi = (
            (plr < -jj / n - ENVELOPE_ATOL)
            | (plr > jj**2 / (n * (n - jj)) + ENVELOPE_ATOL)
            | (prl < -(n - jj) / n - ENVELOPE_ATOL)
            | (prl > (n - jj) ** 2 / (n * jj) + ENVELOPE_ATOL)
            | (self.psi[1:] != np.maximum(plr, prl))
        )
        return int(bad.sum() + bad_psi.sum())


@dataclass(frozen=True)
class ChangePointEstimate:
    j_star: int
    gamma_hat: float
    psi_min: float


def normalize(c_lr: np.ndarray, c_rl: np.ndarray, n: Optional[int] = None) -> CrossingCurves:
    c_lr = np.asarray(c_lr, dtype=np.int64)
    c_rl = np.asarray(c_rl, dtype=np.int64)
    if n is None:
        n = c_lr.size
    if c_lr.size != n or c_rl.size != n or n < 2:
        raise ValueError("count arrays must both have length n >= 2")
    j = np.arange(1, n, dtype=np.float64)
    psi_lr = np.full(n, np.nan)
    psi_rl = np.full(n, np.nan)
    psi_lr[1:] = c_lr[1:] / (n - j) - j / n
    psi_rl[1:] = c_rl[1:] / j - (n - j) / n
    psi = np.maximum(psi_lr, psi_rl)
    return CrossingCurves(n=n, c_lr=c_lr, c_rl=c_rl, psi_lr=psi_lr, psi_rl=psi_rl, psi=psi)


def crossing_curves(targets: np.ndarray) -> CrossingCurves:
    c_lr, c_rl = count_crossings(targets)
    return normalize(c_lr, c_rl)


def creche_estimate(curves: CrossingCurves) -> ChangePointEstimate:
    """Arg-min of ``psi`` over ``j = 1..n-1``; the smallest ``j`` wins ties."""
    j_star = int(np.argmin(curves.psi[1:])) + 1
    return ChangePointEstimate(
        j_star=j_star, gamma_hat=j_star / curves.n, psi_min=float(curves.psi[j_star])
    )


CSV_COLUMNS = ("j", "c_lr", "c_rl", "psi_lr", "psi_rl", "psi")


def curve_rows(curves: CrossingCurves, extra: Optional[dict[str, np.ndarray]] = None) -> Iterable[list]:
    extra = extra or {}
    for j in range(1, curves.n):
        row = [
            j,
            int(curves.c_lr[j]),
            int(curves.c_rl[j]),
            repr(float(curves.psi_lr[j])),
            repr(float(curves.psi_rl[j])),
            repr(float(curves.psi[j])),
        ]
        row.extend(_cell(col[j]) for col in extra.values())
        yield row


def _cell(v):
    if isinstance(v, (np.integer, int, np.bool_, bool)):
        return int(v)
    return repr(float(v))


def write_curves_csv(
    curves: CrossingCurves,
    path: Union[str, Path],
    extra: Optional[dict[str, np.ndarray]] = None,
) -> None:
    """Write one row per cut ``j = 1..n-1``; ``extra`` adds named length-``n`` columns."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(CSV_COLUMNS) + list((extra or {}).keys()))
        w.writerows(curve_rows(curves, extra))

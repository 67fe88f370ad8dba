"""Graph Model B: piecewise-uniform match targets and their closed-form theory.

Positions ``0..c-1`` form the left block and ``c..n-1`` the right block. A
left position targets the left block at density ``1/(n dL)`` and the right
block at ``aL/(n dL)``; right positions mirror this with ``aR`` and ``dR``.
``dL = g + (1-g) aL`` and ``dR = g aR + (1-g)``.

The theory oracle evaluates the mean curves of the normalised crossing
processes, the variances of their martingale transforms, and the constant in
the root-n consistency bound. All formulas take the real ``n * gamma``; the
sampler uses the integer split ``c``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .crossings import CrossingCurves
from .sequence import change_index
from .sources import Seed, make_rng


@dataclass(frozen=True)
class ModelBParams:
    n: int
    gamma: float
    alpha_l: float
    alpha_r: float

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("n must be at least 2")
        for name in ("alpha_l", "alpha_r"):
            a = getattr(self, name)
            if not 0.0 <= a <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {a}")
        if not 0.0 < self.gamma < 1.0:
            raise ValueError(f"gamma must lie in (0, 1), got {self.gamma}")
        if self.n * self.gamma < 1 or self.n * (1 - self.gamma) < 1:
            raise ValueError("both blocks must contain at least one position")

    @property
    def delta_l(self) -> float:
        return self.gamma + (1 - self.gamma) * self.alpha_l

    @property
    def delta_r(self) -> float:
        return self.gamma * self.alpha_r + (1 - self.gamma)

    @property
    def c(self) -> int:
        return change_index(self.n, self.gamma)

    def mirrored(self) -> "ModelBParams":
        """Parameters of the position-reversed model: blocks and alphas swap."""
        return replace(self, gamma=1 - self.gamma, alpha_l=self.alpha_r, alpha_r=self.alpha_l)


def row_probabilities(params: ModelBParams) -> tuple[np.ndarray, np.ndarray]:
    """Target distributions ``(left_row, right_row)`` over ``0..n-1``, normalised over the integer split."""
    n, c = params.n, params.c
    left = np.concatenate([np.ones(c), np.full(n - c, params.alpha_l)])
    right = np.concatenate([np.full(c, params.alpha_r), np.ones(n - c)])
    return left / left.sum(), right / right.sum()


def sample_model_b(params: ModelBParams, seed: Seed = None) -> np.ndarray:
    """Independent targets ``T_0..T_{n-1}``; self-loops are allowed."""
    rng = make_rng(seed)
    n, c = params.n, params.c
    stay_l = c / (c + (n - c) * params.alpha_l)
    stay_r = (n - c) / ((n - c) + c * params.alpha_r)
    same = np.empty(n, dtype=bool)
    same[:c] = rng.random(c) < stay_l
    same[c:] = rng.random(n - c) < stay_r
    # u picks a position inside whichever block was chosen
    u = rng.random(n)
    in_left = np.empty(n, dtype=bool)
    in_left[:c] = same[:c]
    in_left[c:] = ~same[c:]
    left_pick = np.minimum((u * c).astype(np.int64), c - 1)
    right_pick = c + np.minimum((u * (n - c)).astype(np.int64), n - c - 1)
    return np.where(in_left, left_pick, right_pick)


def sample_uniform_targets(n: int, seed: Seed = None) -> np.ndarray:
    """Null model: every target uniform on ``0..n-1``."""
    return make_rng(seed).integers(0, n, size=n)


@dataclass(frozen=True)
class TheoryCurves:
    """Closed-form curves on ``j = 0..n-1`` (entries outside a formula's range are NaN)."""

    params: ModelBParams
    mean_lr_1: np.ndarray
    mean_lr_2: np.ndarray
    mean_rl_1: np.ndarray
    mean_rl_2: np.ndarray
    var_z_lr: np.ndarray
    var_z_rl: np.ndarray
    d_min_lr: float
    d_min_rl: float

    @property
    def mean_lr(self) -> np.ndarray:
        """Piecewise mean of ``psi_lr``: first branch before the split, second from it on."""
        c = self.params.c
        return np.concatenate([self.mean_lr_1[:c], self.mean_lr_2[c:]])

    @property
    def mean_rl(self) -> np.ndarray:
        c = self.params.c
        return np.concatenate([self.mean_rl_1[:c], self.mean_rl_2[c:]])


def d_min(params: ModelBParams) -> tuple[float, float]:
    g, aL, aR = params.gamma, params.alpha_l, params.alpha_r
    return (
        -(g**2) * (1 - aL) / params.delta_l,
        -((1 - g) ** 2) * (1 - aR) / params.delta_r,
    )


def theory_curves(params: ModelBParams) -> TheoryCurves:
    n, g = params.n, params.gamma
    aL, aR, dL, dR = params.alpha_l, params.alpha_r, params.delta_l, params.delta_r
    c = params.c
    ng = n * g
    j = np.arange(n, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        mean_lr_1 = -(j**2) / (n * (n - j)) * ((1 - g) * (1 - aL) / dL)
        mean_lr_2 = g * aL / dL - g / dR + (j / n) * (g * (1 - aR) / dR)
        mean_rl_1 = (1 - g) * aR / dR - (1 - g) / dL + ((n - j) / n) * ((1 - g) * (1 - aL) / dL)
        mean_rl_2 = -((n - j) ** 2) / (n * j) * (g * (1 - aR) / dR)

        var_lr_left = j**2 / (n**2 * dL**2 * (n * dL - j))
        var_lr_right = aL * g * (aL * j + g * (1 - aL) * n) / (dL**2 * n * (n - j)) + (j - ng) * (
            j - (1 - aR) * ng
        ) / (dR**2 * n**2 * (n - j))
        var_rl_right = (n - j) ** 2 / (n**2 * dR**2 * (j - ng * (1 - aR)))
        # left of the split: the right-side formula of the other process under reversal
        g2 = 1 - g
        jr = n - j
        var_rl_left = aR * g2 * (aR * jr + g2 * (1 - aR) * n) / (dR**2 * n * (n - jr)) + (
            jr - n * g2
        ) * (jr - (1 - aL) * n * g2) / (dL**2 * n**2 * (n - jr))

    var_z_lr = np.where(j < c, var_lr_left, var_lr_right)
    var_z_rl = np.where(j < c, var_rl_left, var_rl_right)
    var_z_lr[0] = np.nan
    var_z_rl[0] = np.nan
    mean_rl_2[0] = np.nan
    lr_min, rl_min = d_min(params)
    return TheoryCurves(
        params=params,
        mean_lr_1=mean_lr_1,
        mean_lr_2=mean_lr_2,
        mean_rl_1=mean_rl_1,
        mean_rl_2=mean_rl_2,
        var_z_lr=var_z_lr,
        var_z_rl=var_z_rl,
        d_min_lr=lr_min,
        d_min_rl=rl_min,
    )


def z_transform_lr(curves: CrossingCurves, theory: TheoryCurves) -> np.ndarray:
    """Martingale transform of ``psi_lr``; NaN at ``j = 0``."""
    p = theory.params
    n, c = p.n, p.c
    j = np.arange(n, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = (n - j) / (n * p.delta_l - j)
        left = scale * (curves.psi_lr - theory.mean_lr_1)
    right = curves.psi_lr - theory.mean_lr_2
    return np.where(j < c, left, right)


def z_transform_rl(curves: CrossingCurves, theory: TheoryCurves) -> np.ndarray:
    """Time-reversed martingale transform of ``psi_rl``.

    The right-block scale is ``j / (j - n g (1 - aR))``, the reciprocal
    success probability of the right-left binomial.
    """
    p = theory.params
    n, c = p.n, p.c
    j = np.arange(n, dtype=np.float64)
    left = curves.psi_rl - theory.mean_rl_1
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = j / (j - n * p.gamma * (1 - p.alpha_r))
        right = scale * (curves.psi_rl - theory.mean_rl_2)
    return np.where(j < c, left, right)


def simulate_inar(
    N: int, beta: float, steps: int, seed: Seed = None, n_paths: Optional[int] = None
) -> np.ndarray:
    """Binomially thinned INAR(1) paths ``Y_0..Y_steps`` with ``Y_0 = 0``.

    ``Y_{j+1} = Bin(Y_j, (N-j-1)/(N-j)) + Bern(beta (N-j-1)/N)``. Returns
    shape ``(steps+1,)``, or ``(n_paths, steps+1)`` when ``n_paths`` is given.
    """
    if not 0.0 < beta <= 1.0:
        raise ValueError(f"beta must lie in (0, 1], got {beta}")
    if not 0 <= steps < N:
        raise ValueError(f"need 0 <= steps < N, got steps={steps}, N={N}")
    rng = make_rng(seed)
    m = 1 if n_paths is None else int(n_paths)
    Y = np.zeros((m, steps + 1), dtype=np.int64)
    y = np.zeros(m, dtype=np.int64)
    for j in range(steps):
        keep = (N - j - 1) / (N - j)
        y = rng.binomial(y, keep) + (rng.random(m) < beta * (N - j - 1) / N)
        Y[:, j + 1] = y
    return Y[0] if n_paths is None else Y


def inar_z(Y: np.ndarray, N: int, beta: float) -> np.ndarray:
    j = np.arange(Y.shape[-1], dtype=np.float64)
    return Y / (N - j) - beta * j / N


def inar_w(Y: np.ndarray, N: int, beta: float, d: float = 1.0) -> np.ndarray:
    j = np.arange(Y.shape[-1], dtype=np.float64)
    return (1 + d / (N - j)) ** Y / (1 + d * beta / N) ** j


def consistency_constant(params: ModelBParams) -> float:
    """Constant ``K`` of the bound ``P(|g_hat - g| >= s/sqrt(n)) <= K/s^2``.

    The closed form assumes the left-right minimum is the larger one; when it
    is not, the reversed model (``g -> 1-g``, alphas swapped) is used. Returns
    ``inf`` where the formula degenerates (``aL`` of 0 or 1).
    """
    lr_min, rl_min = d_min(params)
    if lr_min < rl_min:
        params = params.mirrored()
    g, aL, aR = params.gamma, params.alpha_l, params.alpha_r
    dL, dR = params.delta_l, params.delta_r
    if aL <= 0.0 or aL >= 1.0 or aR >= 1.0:
        return math.inf
    t1 = (aL / (1 - g) + aR / (1 - g)) * dL**2 / (g**6 * (1 - aL) ** 2)
    t2 = (aL + g**2 * (1 - aL) * (1 - g)) ** 2 / (
        aL * (1 - g**2) ** 2 * (1 - g) ** 3 * (1 - aL) ** 2
    )
    t3 = (g + aL) / (g**2 * (1 - aL) * (1 - g * (1 - g))) * dR**2 / (
        g**2 * (1 - aR) ** 2 * (1 - (1 - g) ** 2) ** 2
    )
    return t1 + t2 + t3


def consistency_bound(params: ModelBParams, s: float) -> float:
    if s <= 0:
        raise ValueError("s must be positive")
    K = consistency_constant(params)
    return min(1.0, K / s**2)

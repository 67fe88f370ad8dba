import math

import numpy as np
import pytest

from creche.crossings import crossing_curves
from creche.modelb import (
    ModelBParams,
    consistency_bound,
    consistency_constant,
    d_min,
    inar_w,
    inar_z,
    row_probabilities,
    sample_model_b,
    simulate_inar,
    theory_curves,
    z_transform_lr,
    z_transform_rl,
)

BASE = ModelBParams(n=10_000, gamma=0.4, alpha_l=0.2, alpha_r=0.2)


def exact_moments(params):
    """Exact mean/variance of psi_lr, psi_rl at every cut from independent Bernoulli edges."""
    n, c = params.n, params.c
    left = np.r_[np.ones(c), np.full(n - c, params.alpha_l)]
    right = np.r_[np.full(c, params.alpha_r), np.ones(n - c)]
    left /= left.sum()
    right /= right.sum()
    tail_l = np.cumsum(left[::-1])[::-1]  # P(T >= j)
    tail_r = np.cumsum(right[::-1])[::-1]
    head_l, head_r = 1 - tail_l, 1 - tail_r  # P(T < j)
    j = np.arange(n)
    mean_lr, var_lr, mean_rl, var_rl = (np.zeros(n) for _ in range(4))
    for jj in range(1, n):
        ks = np.arange(jj)
        p = np.where(ks < c, tail_l[jj], tail_r[jj])
        mean_lr[jj], var_lr[jj] = p.sum(), (p * (1 - p)).sum()
        ks = np.arange(jj, n)
        q = np.where(ks < c, head_l[jj], head_r[jj])
        mean_rl[jj], var_rl[jj] = q.sum(), (q * (1 - q)).sum()
    with np.errstate(divide="ignore", invalid="ignore"):
        return (
            mean_lr / (n - j) - j / n,
            var_lr / (n - j) ** 2,
            mean_rl / j - (n - j) / n,
            var_rl / j**2,
        )


def test_derived_deltas():
    assert BASE.delta_l == pytest.approx(0.52)
    assert BASE.delta_r == pytest.approx(0.68)
    assert BASE.c == 4000


def test_row_distributions_sum_to_one():
    for p in (BASE, ModelBParams(1001, 0.3, 0.0, 0.7), ModelBParams(50, 0.5, 1.0, 1.0)):
        left, right = row_probabilities(p)
        assert abs(left.sum() - 1) < 1e-9 and abs(right.sum() - 1) < 1e-9
    left, right = row_probabilities(BASE)
    n, dL, dR = BASE.n, BASE.delta_l, BASE.delta_r
    np.testing.assert_allclose(left[:4000], 1 / (n * dL))
    np.testing.assert_allclose(left[4000:], 0.2 / (n * dL))
    np.testing.assert_allclose(right[:4000], 0.2 / (n * dR))
    np.testing.assert_allclose(right[4000:], 1 / (n * dR))


@pytest.mark.parametrize(
    "kw", [dict(gamma=0.0), dict(gamma=1.0), dict(alpha_l=-0.1), dict(alpha_r=1.5), dict(n=10, gamma=0.01)]
)
def test_invalid_params(kw):
    base = dict(n=100, gamma=0.4, alpha_l=0.2, alpha_r=0.2)
    base.update(kw)
    with pytest.raises(ValueError):
        ModelBParams(**base)


def test_zero_cross_probability_stays_in_block():
    p = ModelBParams(1000, 0.3, 0.0, 0.0)
    for seed in range(5):
        T = sample_model_b(p, seed)
        assert np.all(T[: p.c] < p.c) and np.all(T[p.c :] >= p.c)


def test_null_reduction_is_uniform():
    p = ModelBParams(200, 0.3, 1.0, 1.0)
    T = np.concatenate([sample_model_b(p, s) for s in range(500)])
    counts = np.bincount(T, minlength=200)
    expected = T.size / 200
    chi2 = ((counts - expected) ** 2 / expected).sum()
    # 199 dof: mean 199, sd ~ 20
    assert chi2 < 199 + 5 * 20


def test_cross_probability_matches_row_sum():
    p = BASE
    hits, total = 0, 0
    for seed in range(250):
        T = sample_model_b(p, seed)[: p.c]
        hits += int(np.sum(T >= p.c))
        total += T.size
    target = (1 - p.gamma) * p.alpha_l / p.delta_l
    assert target == pytest.approx(0.12 / 0.52)
    assert abs(hits / total - target) <= 3 * math.sqrt(target * (1 - target) / total)


def test_sampler_deterministic():
    np.testing.assert_array_equal(sample_model_b(BASE, 3), sample_model_b(BASE, 3))


def test_theory_continuity_and_minimum():
    th = theory_curves(BASE)
    c = BASE.c
    assert th.mean_lr_1[c] == pytest.approx(th.d_min_lr, abs=1e-12)
    assert th.mean_lr_2[c] == pytest.approx(th.d_min_lr, abs=1e-12)
    assert th.d_min_lr == pytest.approx(-0.16 * 0.8 / 0.52)
    assert th.d_min_lr == pytest.approx(-0.246153846, abs=1e-8)
    assert th.mean_rl_1[c] == pytest.approx(th.d_min_rl, abs=1e-12)
    assert th.mean_rl_2[c] == pytest.approx(th.d_min_rl, abs=1e-12)
    assert th.d_min_rl == pytest.approx(-(0.6**2) * 0.8 / 0.68)
    assert int(np.nanargmin(th.mean_lr)) == c
    assert int(np.nanargmin(th.mean_rl)) == c


def test_theory_means_vanish_in_null_model():
    th = theory_curves(ModelBParams(1000, 0.37, 1.0, 1.0))
    for arr in (th.mean_lr_1, th.mean_lr_2, th.mean_rl_1, th.mean_rl_2[1:]):
        np.testing.assert_allclose(arr, 0.0, atol=1e-15)


@pytest.mark.parametrize(
    "params",
    [ModelBParams(400, 0.4, 0.2, 0.2), ModelBParams(500, 0.3, 0.5, 0.1), ModelBParams(300, 0.5, 0.05, 0.9)],
)
def test_theory_matches_exact_moments(params):
    mlr, vlr, mrl, vrl = exact_moments(params)
    th = theory_curves(params)
    n, c = params.n, params.c
    j = np.arange(1, n)
    np.testing.assert_allclose(th.mean_lr[j], mlr[j], rtol=1e-9, atol=1e-12)
    np.testing.assert_allclose(th.mean_rl[j], mrl[j], rtol=1e-9, atol=1e-12)
    jf = j.astype(float)
    # the unused branch of each np.where may divide by zero
    with np.errstate(divide="ignore", invalid="ignore"):
        scale_lr = np.where(j < c, (n - jf) / (n * params.delta_l - jf), 1.0)
        scale_rl = np.where(j < c, 1.0, jf / (jf - n * params.gamma * (1 - params.alpha_r)))
    np.testing.assert_allclose(th.var_z_lr[j], scale_lr**2 * vlr[j], rtol=1e-9, atol=1e-15)
    np.testing.assert_allclose(th.var_z_rl[j], scale_rl**2 * vrl[j], rtol=1e-9, atol=1e-15)


def test_variance_at_split_closed_form():
    th = theory_curves(BASE)
    g, aL, dL, n = 0.4, 0.2, 0.52, 10_000
    assert th.var_z_lr[BASE.c] == pytest.approx(g**2 * aL / (dL**2 * (1 - g) * n), rel=1e-9)


def test_z_reduces_to_psi_in_null_model():
    p = ModelBParams(500, 0.4, 1.0, 1.0)
    curves = crossing_curves(sample_model_b(p, 1))
    th = theory_curves(p)
    np.testing.assert_allclose(z_transform_lr(curves, th)[1:], curves.psi_lr[1:], atol=1e-12)
    np.testing.assert_allclose(z_transform_rl(curves, th)[1:], curves.psi_rl[1:], atol=1e-12)


def test_z_lr_mean_and_variance_at_split():
    p = BASE
    th = theory_curves(p)
    c = p.c
    zs = np.array([z_transform_lr(crossing_curves(sample_model_b(p, 1000 + s)), th)[c] for s in range(10_000)])
    var = th.var_z_lr[c]
    assert abs(zs.mean()) <= 3 * math.sqrt(var / zs.size)
    assert abs(zs.var(ddof=1) / var - 1) <= 0.10


# ----------------------------------------------------------------- INAR(1)

N, BETA = 500, 0.7


@pytest.fixture(scope="module")
def inar_paths():
    return simulate_inar(N, BETA, N - 1, seed=77, n_paths=20_000)


def test_inar_single_path_shape():
    y = simulate_inar(20, 0.5, 10, seed=1)
    assert y.shape == (11,) and y[0] == 0
    np.testing.assert_array_equal(y, simulate_inar(20, 0.5, 10, seed=1))


@pytest.mark.parametrize("kw", [dict(beta=0.0), dict(beta=1.2), dict(steps=20), dict(steps=25)])
def test_inar_validation(kw):
    args = dict(N=20, beta=0.5, steps=5)
    args.update(kw)
    with pytest.raises(ValueError):
        simulate_inar(**args)


def test_inar_binomial_marginals(inar_paths):
    Y = inar_paths
    for j in (1, 50, 125, 250, 375, 450, 499):
        p = BETA * (N - j) / N
        mean, var = j * p, j * p * (1 - p)
        assert abs(Y[:, j].mean() - mean) <= 3 * math.sqrt(var / Y.shape[0])
        if var > 0.5:
            assert abs(Y[:, j].var(ddof=1) / var - 1) <= 0.10


def test_inar_z_is_martingale(inar_paths):
    Z = inar_z(inar_paths, N, BETA)
    assert np.all(Z[:, 0] == 0)
    for j in (10, 100, 250, 400, 490):
        # regress increments on the current value: both coefficients should vanish
        x, dz = Z[:, j], Z[:, j + 1] - Z[:, j]
        X = np.column_stack([np.ones_like(x), x])
        coef, *_ = np.linalg.lstsq(X, dz, rcond=None)
        resid = dz - X @ coef
        cov = np.linalg.inv(X.T @ X) * resid.var(ddof=2)
        se = np.sqrt(np.diag(cov))
        assert np.all(np.abs(coef) <= 3 * se)


def test_inar_w_has_unit_mean(inar_paths):
    W = inar_w(inar_paths, N, BETA, d=1.0)
    assert np.all(W[:, 0] == 1.0)
    for j in (10, 100, 250, 400, 499):
        w = W[:, j]
        assert abs(w.mean() - 1) <= 3 * w.std(ddof=1) / math.sqrt(w.size)


# ------------------------------------------------------------ consistency K


def test_bound_is_probability():
    for p in (BASE, ModelBParams(1000, 0.7, 0.3, 0.1), ModelBParams(1000, 0.5, 1.0, 1.0), ModelBParams(1000, 0.2, 0.0, 0.0)):
        for s in (0.5, 2, 8, 100):
            assert 0 < consistency_bound(p, s) <= 1


def test_reference_constant():
    # hand evaluation of the three terms at gamma=0.4, alpha=0.2
    g, a = 0.4, 0.2
    dL, dR = g + (1 - g) * a, g * a + 1 - g
    t1 = (2 * a / (1 - g)) * dL**2 / (g**6 * (1 - a) ** 2)
    t2 = (a + g**2 * (1 - a) * (1 - g)) ** 2 / (a * (1 - g**2) ** 2 * (1 - g) ** 3 * (1 - a) ** 2)
    t3 = (g + a) / (g**2 * (1 - a) * (1 - g * (1 - g))) * dR**2 / (g**2 * (1 - a) ** 2 * (1 - (1 - g) ** 2) ** 2)
    assert consistency_constant(BASE) == pytest.approx(t1 + t2 + t3)
    assert consistency_constant(BASE) == pytest.approx(140.69, abs=0.01)


def test_constant_blows_up_as_alpha_vanishes():
    # K is not monotone in alpha overall; the 1/alpha term dominates only near zero
    Ks = [consistency_constant(ModelBParams(10_000, 0.6, a, a)) for a in (1e-3, 1e-5, 1e-7)]
    assert all(x < y for x, y in zip(Ks, Ks[1:]))
    assert Ks[-1] > 1e5
    assert consistency_constant(ModelBParams(10_000, 0.6, 0.0, 0.0)) == math.inf


def test_mirror_reduction_used_when_rl_minimum_is_higher():
    # symmetric alphas with gamma < 1/2 put the left-right minimum above the right-left one
    p = ModelBParams(10_000, 0.3, 0.2, 0.2)
    lr, rl = d_min(p)
    assert lr > rl
    q = p.mirrored()
    lr_q, rl_q = d_min(q)
    assert lr_q == pytest.approx(rl) and rl_q == pytest.approx(lr)
    assert consistency_constant(q) == pytest.approx(consistency_constant(p))

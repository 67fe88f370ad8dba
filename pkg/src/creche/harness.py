"""Monte Carlo experiment runner.

Every trial draws from its own generator derived from ``(master seed, trial
index)`` and results are reduced in trial order, so outputs do not depend on
how many worker threads ran the trials.
"""
from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Callable, Mapping, Optional, Sequence, TypeVar, Union

import numpy as np

from . import __version__
from .crossings import CrossingCurves, ChangePointEstimate, creche_estimate, crossing_curves, write_curves_csv
from .matchengine import compute_match_lengths, sample_match_targets
from .modelb import (
    ModelBParams,
    consistency_bound,
    consistency_constant,
    sample_model_b,
    sample_uniform_targets,
    theory_curves,
    z_transform_lr,
    z_transform_rl,
)
from .sequence import SymbolSequence, change_index, concatenate, encode_bytes
from .sources import make_rng, sample_source, source_from_config

R = TypeVar("R")

EXPERIMENT_KINDS = ("null", "model-b", "graph-a-synthetic", "graph-a-text")


def run_trials(
    fn: Callable[[int, np.random.Generator], R], trials: int, seed: int, threads: int = 1
) -> list[R]:
    """Call ``fn(trial, rng)`` for each trial and return results in trial order."""
    if trials < 1:
        raise ValueError("trials must be >= 1")

    def one(t: int) -> R:
        return fn(t, make_rng(seed, trial=t))

    if threads <= 1:
        return [one(t) for t in range(trials)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(one, range(trials)))


def binomial_sigma(p: float, trials: int) -> float:
    return math.sqrt(max(p * (1 - p), 0.0) / trials)


# ---------------------------------------------------------------- null model


@dataclass
class NullBandReport:
    n: int
    alpha: float
    s: float
    trials: int
    exceed_count: int
    exceed_freq: float
    bound: float
    mc_sigma: float
    fixed_j: int
    fixed_var_theory: float
    fixed_var: float
    fixed_skew: float
    endpoint_delta: float
    endpoint_freq: float
    envelope_violations: int
    scaled_fixed: np.ndarray = field(repr=False)

    def summary(self) -> dict:
        d = asdict(self)
        d.pop("scaled_fixed")
        return d


def _skew(x: np.ndarray) -> float:
    d = x - x.mean()
    return float(np.mean(d**3) / np.mean(d**2) ** 1.5)


def run_null_band_check(
    n: int,
    alpha: float,
    s: float,
    trials: int,
    seed: int,
    threads: int = 1,
    fixed_fraction: float = 0.5,
    endpoint_delta: float = 0.9,
) -> NullBandReport:
    """Uniform targets; compare the sup of ``|psi_lr|`` on ``j <= n(1-alpha)`` with the Doob bound.

    Also records ``sqrt(n) psi_lr(j)`` at ``j = n * fixed_fraction`` (limit
    variance ``f^2/(1-f)``) and how often the sup over every cut reaches
    ``endpoint_delta``.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    cut = math.floor(n * (1 - alpha))
    j_fix = math.floor(n * fixed_fraction)
    threshold = s / math.sqrt(n)

    def trial(_t: int, rng: np.random.Generator):
        curves = crossing_curves(sample_uniform_targets(n, rng))
        plr = np.abs(curves.psi_lr[1:])
        return (
            float(plr[:cut].max()),
            float(curves.psi_lr[j_fix]),
            float(plr.max()),
            curves.envelope_violations(),
        )

    res = run_trials(trial, trials, seed, threads)
    sup_band = np.array([r[0] for r in res])
    fixed = np.array([r[1] for r in res]) * math.sqrt(n)
    sup_all = np.array([r[2] for r in res])
    bound = (1 - alpha) ** 2 / (alpha * s**2)
    exceed = int(np.sum(sup_band >= threshold))
    f = j_fix / n
    return NullBandReport(
        n=n,
        alpha=alpha,
        s=s,
        trials=trials,
        exceed_count=exceed,
        exceed_freq=exceed / trials,
        bound=bound,
        mc_sigma=binomial_sigma(min(bound, 1.0), trials),
        fixed_j=j_fix,
        fixed_var_theory=f**2 / (1 - f),
        fixed_var=float(np.var(fixed, ddof=1)),
        fixed_skew=_skew(fixed),
        endpoint_delta=endpoint_delta,
        endpoint_freq=float(np.mean(sup_all >= endpoint_delta)),
        envelope_violations=int(sum(r[3] for r in res)),
        scaled_fixed=fixed,
    )


# ------------------------------------------------------------------- model B


@dataclass
class ConsistencyRow:
    s: float
    exceed_count: int
    exceed_freq: float
    bound: float
    within_bound: bool


@dataclass
class ConsistencyReport:
    params: ModelBParams
    trials: int
    K: float
    rows: list[ConsistencyRow]
    error_count: int
    error_freq: float
    envelope_violations: int
    j_stars: np.ndarray = field(repr=False)

    def summary(self) -> dict:
        return {
            "params": asdict(self.params),
            "trials": self.trials,
            "K": self.K,
            "rows": [asdict(r) for r in self.rows],
            "error_count": self.error_count,
            "error_freq": self.error_freq,
            "envelope_violations": self.envelope_violations,
        }


def model_b_trial(params: ModelBParams, rng: np.random.Generator) -> tuple[CrossingCurves, ChangePointEstimate]:
    curves = crossing_curves(sample_model_b(params, rng))
    return curves, creche_estimate(curves)


def run_model_b_consistency(
    params: ModelBParams,
    s_grid: Sequence[float],
    trials: int,
    seed: int,
    threads: int = 1,
) -> ConsistencyReport:
    """Empirical ``P(|g_hat - g| >= s/sqrt(n))`` against ``min(1, K/s^2)`` for each ``s``.

    ``error_count`` counts trials whose arg-min is not exactly the split.
    """

    def trial(_t: int, rng: np.random.Generator):
        curves, est = model_b_trial(params, rng)
        return est.j_star, curves.envelope_violations()

    res = run_trials(trial, trials, seed, threads)
    j_stars = np.array([r[0] for r in res], dtype=np.int64)
    dev = np.abs(j_stars / params.n - params.gamma)
    rows = []
    for s in s_grid:
        cnt = int(np.sum(dev >= s / math.sqrt(params.n)))
        b = consistency_bound(params, s)
        rows.append(ConsistencyRow(s=float(s), exceed_count=cnt, exceed_freq=cnt / trials, bound=b, within_bound=cnt / trials <= b))
    errors = int(np.sum(j_stars != params.c))
    return ConsistencyReport(
        params=params,
        trials=trials,
        K=consistency_constant(params),
        rows=rows,
        error_count=errors,
        error_freq=errors / trials,
        envelope_violations=int(sum(r[1] for r in res)),
        j_stars=j_stars,
    )


@dataclass
class ModelBSamples:
    """Per-trial values at a fixed grid of cuts; arrays have shape ``(trials, len(js))``."""

    params: ModelBParams
    js: np.ndarray
    c_lr: np.ndarray
    c_rl: np.ndarray
    z_lr: np.ndarray
    z_rl: np.ndarray
    envelope_violations: int


def collect_model_b_samples(
    params: ModelBParams, js: Sequence[int], trials: int, seed: int, threads: int = 1
) -> ModelBSamples:
    theory = theory_curves(params)
    js = np.asarray(js, dtype=np.int64)

    def trial(_t: int, rng: np.random.Generator):
        curves = crossing_curves(sample_model_b(params, rng))
        return (
            curves.c_lr[js],
            curves.c_rl[js],
            z_transform_lr(curves, theory)[js],
            z_transform_rl(curves, theory)[js],
            curves.envelope_violations(),
        )

    res = run_trials(trial, trials, seed, threads)
    return ModelBSamples(
        params=params,
        js=js,
        c_lr=np.stack([r[0] for r in res]),
        c_rl=np.stack([r[1] for r in res]),
        z_lr=np.stack([r[2] for r in res]),
        z_rl=np.stack([r[3] for r in res]),
        envelope_violations=int(sum(r[4] for r in res)),
    )


# ------------------------------------------------------------------- graph A


def detect(x: SymbolSequence, seed=None) -> tuple[CrossingCurves, ChangePointEstimate]:
    """Full pipeline on one sequence: match targets, crossings, estimate."""
    profile = compute_match_lengths(x)
    targets = sample_match_targets(profile, seed)
    curves = crossing_curves(targets)
    return curves, creche_estimate(curves)


@dataclass
class ExperimentSpec:
    """Parameters of one experiment run, loadable from a JSON document.

    ``left``/``right`` are source configs (see ``source_from_config``);
    ``right`` may be omitted for a no-change run. Text runs use ``file_a``,
    ``file_b`` and ``policy`` instead.
    """

    kind: str
    n: int = 10_000
    gamma: Optional[float] = None
    trials: int = 100
    seed: int = 0
    left: Optional[dict] = None
    right: Optional[dict] = None
    alpha: float = 0.5
    s: float = 3.0
    alpha_l: float = 0.2
    alpha_r: float = 0.2
    s_grid: list = field(default_factory=lambda: [2.0, 4.0, 8.0])
    bin_width: float = 0.01
    file_a: Optional[str] = None
    file_b: Optional[str] = None
    policy: str = "identity"
    out: Optional[str] = None

    def __post_init__(self):
        if self.kind not in EXPERIMENT_KINDS:
            raise ValueError(f"unknown experiment kind {self.kind!r}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.kind == "graph-a-text":
            for f in (self.file_a, self.file_b):
                if f is None or not Path(f).is_file():
                    raise ValueError(f"text experiment input {f!r} does not exist")
        if self.kind == "graph-a-synthetic" and self.left is None:
            raise ValueError("synthetic experiment needs a left source")
        if self.kind == "graph-a-synthetic" and self.right is not None and self.gamma is None:
            raise ValueError("a two-source experiment needs gamma")

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "ExperimentSpec":
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown experiment spec keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_json(cls, path: Union[str, Path]) -> "ExperimentSpec":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass
class TrialSummary:
    gamma_hats: np.ndarray
    psi_mins: np.ndarray
    j_stars: np.ndarray
    bin_width: float
    histogram: np.ndarray
    mean_psi: np.ndarray
    envelope_violations: int
    true_gamma: Optional[float] = None

    @property
    def trials(self) -> int:
        return int(self.j_stars.size)

    @property
    def mode(self) -> float:
        """Centre of the fullest histogram bin (ties go to the smaller value)."""
        k = int(np.argmax(self.histogram))
        return (k + 0.5) * self.bin_width

    def summary(self) -> dict:
        return {
            "trials": self.trials,
            "true_gamma": self.true_gamma,
            "mode": self.mode,
            "mean_gamma_hat": float(self.gamma_hats.mean()),
            "gamma_hats": [float(g) for g in self.gamma_hats],
            "psi_mins": [float(p) for p in self.psi_mins],
            "envelope_violations": self.envelope_violations,
        }


def gamma_histogram(gamma_hats: np.ndarray, bin_width: float) -> np.ndarray:
    nbins = int(round(1.0 / bin_width))
    idx = np.clip(np.floor(np.asarray(gamma_hats) / bin_width).astype(np.int64), 0, nbins - 1)
    return np.bincount(idx, minlength=nbins)


def synthetic_sequence(spec: ExperimentSpec, rng: np.random.Generator) -> SymbolSequence:
    left = source_from_config(spec.left)
    if spec.right is None:
        return sample_source(left, spec.n, rng)
    c = change_index(spec.n, spec.gamma)
    right = source_from_config(spec.right)
    x, _ = concatenate(sample_source(left, c, rng), sample_source(right, spec.n - c, rng))
    return x


def run_graph_a_experiment(spec: ExperimentSpec, threads: int = 1) -> TrialSummary:
    """Repeated Graph Model A trials on freshly sampled synthetic sources."""

    def trial(_t: int, rng: np.random.Generator):
        x = synthetic_sequence(spec, rng)
        curves, est = detect(x, rng)
        return est, curves.psi[1:], curves.envelope_violations()

    res = run_trials(trial, spec.trials, spec.seed, threads)
    n = spec.n
    mean_psi = np.zeros(n - 1)
    for r in res:
        mean_psi += r[1]
    mean_psi /= len(res)
    gh = np.array([r[0].gamma_hat for r in res])
    return TrialSummary(
        gamma_hats=gh,
        psi_mins=np.array([r[0].psi_min for r in res]),
        j_stars=np.array([r[0].j_star for r in res], dtype=np.int64),
        bin_width=spec.bin_width,
        histogram=gamma_histogram(gh, spec.bin_width),
        mean_psi=mean_psi,
        envelope_violations=int(sum(r[2] for r in res)),
        true_gamma=None if spec.right is None else change_index(n, spec.gamma) / n,
    )


@dataclass
class TextResult:
    n: int
    alphabet_size: int
    change_index: int
    true_gamma: float
    estimate: ChangePointEstimate
    curves: CrossingCurves = field(repr=False)

    def summary(self) -> dict:
        return {
            "n": self.n,
            "alphabet_size": self.alphabet_size,
            "change_index": self.change_index,
            "true_gamma": self.true_gamma,
            **asdict(self.estimate),
        }


def run_text_experiment(
    file_a: Union[str, Path],
    file_b: Union[str, Path],
    policy: str = "identity",
    seed: int = 0,
    curve_path: Optional[Union[str, Path]] = None,
) -> TextResult:
    """Concatenate two texts, run the pipeline and mark the true join in the curve CSV."""
    raw_a = Path(file_a).read_bytes()
    raw_b = Path(file_b).read_bytes()
    a = encode_bytes(raw_a, policy)
    b = encode_bytes(raw_b, policy)
    # encode both together so the two halves share one symbol table
    x, c = concatenate(a, b)
    curves, est = detect(x, seed)
    if curve_path is not None:
        marker = np.zeros(x.n, dtype=np.int64)
        marker[c] = 1
        write_curves_csv(curves, curve_path, extra={"true_change": marker})
    return TextResult(
        n=x.n, alphabet_size=x.alphabet_size, change_index=c, true_gamma=c / x.n, estimate=est, curves=curves
    )


# ------------------------------------------------------------------ artifacts


def write_json(obj: Any, path: Union[str, Path]) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def manifest(spec: Mapping[str, Any], results: Mapping[str, Any]) -> dict:
    return {
        "spec": dict(spec),
        "seed": spec.get("seed"),
        "versions": {"creche": __version__, "numpy": np.__version__},
        "results": dict(results),
    }


def write_histogram_csv(summary: TrialSummary, path: Union[str, Path]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["bin_lo", "bin_hi", "count"])
        for k, cnt in enumerate(summary.histogram):
            w.writerow([repr(k * summary.bin_width), repr((k + 1) * summary.bin_width), int(cnt)])


def write_mean_curve_csv(summary: TrialSummary, path: Union[str, Path]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["j", "mean_psi"])
        for j, v in enumerate(summary.mean_psi, start=1):
            w.writerow([j, repr(float(v))])


def write_consistency_csv(report: ConsistencyReport, path: Union[str, Path]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["s", "exceed_count", "exceed_freq", "bound", "within_bound"])
        for r in report.rows:
            w.writerow([repr(r.s), r.exceed_count, repr(r.exceed_freq), repr(r.bound), int(r.within_bound)])


def write_model_b_curve_csv(params: ModelBParams, seed: int, path: Union[str, Path]) -> ChangePointEstimate:
    """One Model B sample with the theory mean curves alongside, for overlay plots."""
    curves, est = model_b_trial(params, make_rng(seed))
    th = theory_curves(params)
    write_curves_csv(curves, path, extra={"mean_lr": th.mean_lr, "mean_rl": th.mean_rl})
    return est


def run_experiment(spec: ExperimentSpec, out_dir: Optional[Union[str, Path]] = None, threads: int = 1) -> dict:
    """Dispatch on ``spec.kind``; write CSV artifacts and ``manifest.json`` when ``out_dir`` is set.

    Returns the manifest.
    """
    out = Path(out_dir) if out_dir is not None else (Path(spec.out) if spec.out else None)
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    spec_dict = {k: v for k, v in asdict(spec).items() if k != "out"}

    if spec.kind == "null":
        rep = run_null_band_check(spec.n, spec.alpha, spec.s, spec.trials, spec.seed, threads)
        results = rep.summary()
        if out is not None:
            curves = crossing_curves(sample_uniform_targets(spec.n, make_rng(spec.seed)))
            write_curves_csv(curves, out / "curve.csv")
    elif spec.kind == "model-b":
        params = ModelBParams(spec.n, spec.gamma if spec.gamma is not None else 0.4, spec.alpha_l, spec.alpha_r)
        rep = run_model_b_consistency(params, spec.s_grid, spec.trials, spec.seed, threads)
        results = rep.summary()
        if out is not None:
            write_consistency_csv(rep, out / "consistency.csv")
            write_model_b_curve_csv(params, spec.seed, out / "curve.csv")
    elif spec.kind == "graph-a-synthetic":
        summ = run_graph_a_experiment(spec, threads)
        results = summ.summary()
        if out is not None:
            write_histogram_csv(summ, out / "histogram.csv")
            write_mean_curve_csv(summ, out / "mean_curve.csv")
    else:
        curve = out / "curve.csv" if out is not None else None
        res = run_text_experiment(spec.file_a, spec.file_b, spec.policy, spec.seed, curve)
        results = res.summary()

    man = manifest(spec_dict, results)
    if out is not None:
        write_json(man, out / "manifest.json")
    return man

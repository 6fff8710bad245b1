"""Generative simulation and the three benchmark harnesses.

Simulation draws ground-truth participant parameters from the population
(second-stage) distributions, generates gamma-noise datasets over an
intensity grid, and supports outlier injection.  The harnesses reproduce the
threshold-accuracy, shift-detection-power, and repetitions-per-intensity
design studies at configurable (desk) scale.

Every draw derives its generator from ``SeedSequence(seed, spawn_key=(d,))``
so arbitrary subsets of draws reproduce exactly, and draws can fan out over
a process pool with a deterministic, draw-ordered merge.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr, ndtri

from . import curves
from .curves import CurveKind
from .data import MepDataset, from_rows
from .errors import (
    AllDrawsDiscardedError,
    GridMismatchError,
    InvalidHyperparametersError,
    MepfitError,
)
from .evaluate import decide_within, wilcoxon_signed_rank
from .hierarchy import HierarchyMode, ModelSpec, Pooling, PriorConfig, build
from .neldermead import NelderMeadConfig, nelder_mead_fit
from .nuts import NutsConfig
from .posterior import point_estimate, sample_posterior

ALL_METHODS = ("HB", "nHB", "ML", "NM")


# -- population and ground truth ------------------------------------------------


@dataclass(frozen=True)
class PopulationParams:
    """Population-level (second-stage) parameters used to simulate participants.

    Thresholds follow a zero-truncated normal; every other parameter is
    log-normal with a per-muscle location and a shared log-scale sd.
    Zero scales are allowed and collapse the distribution to its location.
    """

    kind: CurveKind
    muscles: tuple[str, ...]
    mu_a: tuple[float, ...]
    sigma_a: float
    mu_log: dict[str, tuple[float, ...]]
    sigma_log: dict[str, float]

    def theta_names(self) -> tuple[str, ...]:
        return tuple(n for n in curves.PARAM_NAMES[self.kind] if n != "a") + ("c1", "c2")

    def validate(self) -> None:
        if self.sigma_a < 0 or not np.isfinite(self.sigma_a):
            raise InvalidHyperparametersError("sigma_a must be finite and >= 0")
        if len(self.mu_a) != len(self.muscles):
            raise InvalidHyperparametersError("mu_a needs one entry per muscle")
        for name in self.theta_names():
            if name not in self.mu_log or name not in self.sigma_log:
                raise InvalidHyperparametersError(f"population missing parameter {name!r}")
            if len(self.mu_log[name]) != len(self.muscles):
                raise InvalidHyperparametersError(f"mu_log[{name!r}] needs one entry per muscle")
            if self.sigma_log[name] < 0 or not np.isfinite(self.sigma_log[name]):
                raise InvalidHyperparametersError(f"sigma_log[{name!r}] must be finite and >= 0")
        if any(m <= 0 for m in self.mu_a) and self.sigma_a == 0:
            raise InvalidHyperparametersError("degenerate thresholds must be positive")

    def to_dict(self) -> dict:
        return {
            "curve": self.kind.value,
            "muscles": list(self.muscles),
            "mu_a": list(self.mu_a),
            "sigma_a": self.sigma_a,
            "mu_log": {k: list(v) for k, v in self.mu_log.items()},
            "sigma_log": dict(self.sigma_log),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PopulationParams":
        return cls(
            kind=CurveKind.from_name(d["curve"]),
            muscles=tuple(d["muscles"]),
            mu_a=tuple(float(v) for v in d["mu_a"]),
            sigma_a=float(d["sigma_a"]),
            mu_log={k: tuple(float(x) for x in v) for k, v in d["mu_log"].items()},
            sigma_log={k: float(v) for k, v in d["sigma_log"].items()},
        )


@dataclass
class GroundTruth:
    kind: CurveKind
    participants: list[str]
    muscles: list[str]
    params: dict[str, np.ndarray]  # name -> (P, M)

    def threshold(self) -> np.ndarray:
        return self.params["a"]


@dataclass
class Draw:
    index: int
    truth: GroundTruth
    dataset: MepDataset
    seed: int
    source: str = "population-level"


@dataclass
class DrawSet:
    seed: int
    source: str
    draws: list[Draw]


def _truncnorm0_sample(loc, scale, u):
    """Inverse-CDF draws from Normal(loc, scale) truncated to (0, inf)."""
    if scale == 0.0:
        return np.broadcast_to(np.asarray(loc, dtype=float), u.shape).copy()
    p0 = ndtr((0.0 - np.asarray(loc)) / scale)
    return loc + scale * ndtri(p0 + u * (1.0 - p0))


def simulate_participants(pop: PopulationParams, n: int, rng) -> GroundTruth:
    """Draw ``n`` participants' parameters from the population distributions.

    The RNG stream is consumed in a fixed order: threshold uniforms first,
    then one normal block per remaining parameter in canonical order.
    """
    pop.validate()
    m = len(pop.muscles)
    u = rng.random(size=(n, m))
    a = _truncnorm0_sample(np.asarray(pop.mu_a), pop.sigma_a, u)
    params = {"a": a}
    for name in pop.theta_names():
        z = rng.standard_normal(size=(n, m))
        params[name] = np.exp(np.asarray(pop.mu_log[name]) + pop.sigma_log[name] * z)
    labels = [f"P{i + 1:03d}" for i in range(n)]
    return GroundTruth(
        kind=pop.kind, participants=labels, muscles=list(pop.muscles), params=params
    )


def simulate_grid(truth: GroundTruth, intensities, repetitions: int, rng) -> np.ndarray:
    """MEP sizes shaped (participants, intensities, repetitions, muscles)."""
    x = np.asarray(intensities, dtype=float)
    P, M = truth.params["a"].shape
    mu = np.empty((P, x.size, repetitions, M))
    for p in range(P):
        for m in range(M):
            cp = {name: truth.params[name][p, m] for name in curves.PARAM_NAMES[truth.kind]}
            mu[p, :, :, m] = curves.eval_arrays(truth.kind, x, **cp)[:, None]
    flat_mu = mu.reshape(-1)
    c1 = np.repeat(truth.params["c1"][:, None, None, :], x.size, axis=1)
    c1 = np.repeat(c1, repetitions, axis=2).reshape(-1)
    c2 = np.repeat(truth.params["c2"][:, None, None, :], x.size, axis=1)
    c2 = np.repeat(c2, repetitions, axis=2).reshape(-1)
    beta = 1.0 / c1 + 1.0 / (c2 * flat_mu)
    y = rng.gamma(shape=flat_mu * beta, scale=1.0 / beta)
    return y.reshape(mu.shape)


def grid_to_dataset(
    truth: GroundTruth, intensities, y: np.ndarray, condition: str | None = None,
    condition_order=None,
) -> MepDataset:
    x = np.asarray(intensities, dtype=float)
    P, nx, reps, M = y.shape
    rows_p, rows_m, rows_c, rows_x, rows_y = [], [], [], [], []
    for p in range(P):
        for ix in range(nx):
            for r in range(reps):
                for m in range(M):
                    rows_p.append(truth.participants[p])
                    rows_m.append(truth.muscles[m])
                    rows_x.append(x[ix])
                    rows_y.append(y[p, ix, r, m])
                    if condition is not None:
                        rows_c.append(condition)
    return from_rows(
        participants=rows_p,
        muscles=rows_m,
        intensity=rows_x,
        mep_size=rows_y,
        conditions=rows_c if condition is not None else None,
        condition_order=condition_order,
    )


def simulate_dataset(truth: GroundTruth, intensities, repetitions: int, rng) -> MepDataset:
    """Long-format dataset: gamma draws at each (participant, intensity, rep, muscle)."""
    y = simulate_grid(truth, intensities, repetitions, rng)
    return grid_to_dataset(truth, intensities, y)


def make_draws(
    pop: PopulationParams, n_draws: int, n_participants: int, intensities,
    repetitions: int, seed: int,
) -> DrawSet:
    """Materialized ground-truth + dataset pairs with per-draw seeds."""
    draws = []
    for d in range(n_draws):
        rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(d,)))
        truth = simulate_participants(pop, n_participants, rng)
        dataset = simulate_dataset(truth, intensities, repetitions, rng)
        draws.append(Draw(index=d, truth=truth, dataset=dataset, seed=seed))
    return DrawSet(seed=seed, source="population-level", draws=draws)


def inject_outliers(dataset: MepDataset, fraction: float, high: float, rng):
    """Replace a random fraction of sizes with Uniform(0, high) draws.

    Returns (contaminated dataset, boolean outlier mask).
    """
    n = dataset.n_obs
    n_out = int(round(fraction * n))
    idx = rng.choice(n, size=n_out, replace=False)
    y = dataset.mep_size.copy()
    repl = rng.uniform(0.0, high, size=n_out)
    y[idx] = np.maximum(repl, 1e-6)
    mask = np.zeros(n, dtype=bool)
    mask[idx] = True
    out = MepDataset(
        participants=dataset.participants,
        muscles=dataset.muscles,
        conditions=dataset.conditions,
        groups=dataset.groups,
        participant_idx=dataset.participant_idx.copy(),
        muscle_idx=dataset.muscle_idx.copy(),
        condition_idx=None if dataset.condition_idx is None else dataset.condition_idx.copy(),
        group_of_participant=dataset.group_of_participant,
        intensity=dataset.intensity.copy(),
        mep_size=y,
        units=dataset.units,
    )
    return out, mask


# -- threshold estimation methods -------------------------------------------------


@dataclass(frozen=True)
class HarnessConfig:
    """Sampler/optimizer settings for the benchmark harnesses."""

    hb: NutsConfig = field(
        default_factory=lambda: NutsConfig(chains=2, warmup=400, draws=400, seed=0)
    )
    per_cell: NutsConfig = field(
        default_factory=lambda: NutsConfig(chains=1, warmup=300, draws=300, seed=0)
    )
    nm: NelderMeadConfig = field(default_factory=NelderMeadConfig)
    priors: PriorConfig = field(default_factory=PriorConfig)


def _estimate_thresholds_joint(dataset, kind, priors, cfg, pooling):
    spec = ModelSpec(kind=kind, mode=HierarchyMode.DEFAULT, pooling=pooling)
    graph = build(spec, dataset, priors)
    samples, _ = sample_posterior(graph, cfg, with_diagnostics=False)
    a_mean = point_estimate(samples, "a")
    return {graph.cell_labels[j]: float(a_mean[j]) for j in range(graph.n_cells)}


def _cell_masks(dataset):
    has_cond = dataset.conditions is not None
    keys = {}
    for i in range(dataset.n_obs):
        key = (
            dataset.participants[dataset.participant_idx[i]],
            dataset.conditions[dataset.condition_idx[i]] if has_cond else None,
            dataset.muscles[dataset.muscle_idx[i]],
        )
        keys.setdefault(key, []).append(i)
    return keys


def _estimate_thresholds_per_cell(dataset, kind, priors, cfg, pooling):
    """Independent per-cell fits; identical posteriors to a joint unpooled fit."""
    out = {}
    for key, rows in sorted(_cell_masks(dataset).items(), key=lambda kv: kv[0]):
        participant, condition, muscle = key
        rows = np.asarray(rows, dtype=np.intp)
        sub = from_rows(
            participants=[participant] * rows.size,
            muscles=[muscle] * rows.size,
            intensity=dataset.intensity[rows],
            mep_size=dataset.mep_size[rows],
        )
        spec = ModelSpec(kind=kind, mode=HierarchyMode.DEFAULT, pooling=pooling)
        graph = build(spec, sub, priors)
        samples, _ = sample_posterior(graph, cfg, with_diagnostics=False)
        label = (participant, muscle) if condition is None else (participant, condition, muscle)
        out[label] = float(point_estimate(samples, "a")[0])
    return out


def _estimate_thresholds_nm(dataset, kind, nm_cfg, rng):
    out = {}
    for key, rows in sorted(_cell_masks(dataset).items(), key=lambda kv: kv[0]):
        participant, condition, muscle = key
        rows = np.asarray(rows, dtype=np.intp)
        params, _cost = nelder_mead_fit(
            dataset.intensity[rows], dataset.mep_size[rows], kind, nm_cfg, rng
        )
        label = (participant, muscle) if condition is None else (participant, condition, muscle)
        out[label] = float(params.a)
    return out


def estimate_thresholds(dataset, kind, method: str, harness: HarnessConfig, rng=None,
                        seed: int = 0):
    """Threshold point estimates per cell label for one method."""
    if method == "HB":
        cfg = _reseed(harness.hb, seed)
        return _estimate_thresholds_joint(dataset, kind, harness.priors, cfg, Pooling.HIERARCHICAL)
    if method == "nHB":
        cfg = _reseed(harness.per_cell, seed)
        return _estimate_thresholds_per_cell(dataset, kind, harness.priors, cfg, Pooling.NONE)
    if method == "ML":
        cfg = _reseed(harness.per_cell, seed)
        return _estimate_thresholds_per_cell(dataset, kind, harness.priors, cfg, Pooling.UNIFORM)
    if method == "NM":
        if rng is None:
            rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(97,)))
        return _estimate_thresholds_nm(dataset, kind, harness.nm, rng)
    raise ValueError(f"unknown method {method!r}")


def _reseed(cfg: NutsConfig, seed: int) -> NutsConfig:
    return NutsConfig(
        chains=cfg.chains,
        warmup=cfg.warmup,
        draws=cfg.draws,
        target_accept=cfg.target_accept,
        max_tree_depth=cfg.max_tree_depth,
        seed=seed,
        init_jitter=cfg.init_jitter,
    )


# -- accuracy benchmark -------------------------------------------------------------


@dataclass
class AccuracyResult:
    method: str
    n_values: list[int]
    errors: np.ndarray  # (len(n_values), n_draws); NaN where the fit failed
    failures: int = 0

    def e_mean(self) -> np.ndarray:
        return np.nanmean(self.errors, axis=1)

    def e_se(self) -> np.ndarray:
        d = np.sum(~np.isnan(self.errors), axis=1)
        return np.nanstd(self.errors, axis=1, ddof=1) / np.sqrt(np.maximum(d, 1))


def paired_difference(res_a: AccuracyResult, res_b: AccuracyResult, n_index: int = -1):
    """Mean and SE of the per-draw error difference (a - b) at one n."""
    diff = res_a.errors[n_index] - res_b.errors[n_index]
    diff = diff[~np.isnan(diff)]
    return float(diff.mean()), float(diff.std(ddof=1) / np.sqrt(diff.size))


def _accuracy_draw(args):
    (d, pop_dict, n_participants, n_intensities, methods, harness, seed) = args
    pop = PopulationParams.from_dict(pop_dict)
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(d,)))
    truth = simulate_participants(pop, n_participants, rng)
    x = np.linspace(0.0, 100.0, n_intensities)
    dataset = simulate_dataset(truth, x, 1, rng)
    true_a = truth.params["a"]  # (P, M)
    out = {}
    for method in methods:
        try:
            est = estimate_thresholds(
                dataset, pop.kind, method, harness, seed=seed * 1000003 + d
            )
            err = np.empty((n_participants, len(pop.muscles)))
            for p, plabel in enumerate(truth.participants):
                for m, mlabel in enumerate(truth.muscles):
                    err[p, m] = abs(est[(plabel, mlabel)] - true_a[p, m])
            out[method] = err.mean(axis=1)  # per participant
        except MepfitError:
            out[method] = None
    return d, out


def accuracy_benchmark(
    pop: PopulationParams,
    n_draws: int,
    n_participants: int,
    n_intensities: int,
    methods=("HB", "nHB", "NM"),
    harness: HarnessConfig | None = None,
    n_values=None,
    seed: int = 0,
    workers: int = 1,
) -> dict[str, AccuracyResult]:
    """Mean absolute threshold error per method over simulated draws."""
    harness = harness or HarnessConfig()
    n_values = list(n_values or [n_participants])
    args = [
        (d, pop.to_dict(), n_participants, n_intensities, tuple(methods), harness, seed)
        for d in range(n_draws)
    ]
    results = {
        m: AccuracyResult(m, n_values, np.full((len(n_values), n_draws), np.nan))
        for m in methods
    }
    for d, per_method in _run_draws(_accuracy_draw, args, workers):
        for method, per_participant in per_method.items():
            if per_participant is None:
                results[method].failures += 1
                continue
            for i, n in enumerate(n_values):
                results[method].errors[i, d] = float(np.mean(per_participant[:n]))
    return results


# -- power benchmark -------------------------------------------------------------


@dataclass
class PowerResult:
    method: str
    scenario: str
    indicators: np.ndarray  # (valid draws,) of 0/1, NaN where the fit failed
    n_participants: int
    discarded: int
    attempted: int
    failures: int = 0

    def pi(self) -> float:
        v = self.indicators[~np.isnan(self.indicators)]
        return float(v.mean()) if v.size else float("nan")

    def se(self) -> float:
        v = self.indicators[~np.isnan(self.indicators)]
        if v.size == 0:
            return float("nan")
        p = v.mean()
        return float(np.sqrt(p * (1.0 - p) / v.size))


def _power_draw(args):
    (d, pop_dict, n_participants, shift_mu, shift_sd, n_intensities,
     methods, harness, seed, alpha) = args
    pop = PopulationParams.from_dict(pop_dict)
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(d,)))
    pre = simulate_participants(pop, n_participants, rng)
    post = simulate_participants(pop, n_participants, rng)
    delta = rng.normal(shift_mu, shift_sd, size=pre.params["a"].shape)
    a_post = pre.params["a"] + delta
    if np.any(a_post <= 0.0):
        return d, None  # discarded draw
    post.params["a"] = a_post

    x = np.linspace(0.0, 100.0, n_intensities)
    y_pre = simulate_grid(pre, x, 1, rng)
    y_post = simulate_grid(post, x, 1, rng)
    ds_pre = grid_to_dataset(pre, x, y_pre, condition="pre", condition_order=["pre", "post"])
    ds_post = grid_to_dataset(post, x, y_post, condition="post", condition_order=["pre", "post"])
    dataset = _concat_datasets(ds_pre, ds_post)

    out = {}
    for method in methods:
        try:
            if method == "HB":
                spec = ModelSpec(
                    kind=pop.kind,
                    mode=HierarchyMode.WITHIN_PARTICIPANT,
                    pooling=Pooling.HIERARCHICAL,
                )
                graph = build(spec, dataset, harness.priors)
                cfg = _reseed(harness.hb, seed * 1000003 + d)
                samples, _ = sample_posterior(graph, cfg, with_diagnostics=False)
                outcome = decide_within(samples, side="negative")
                out[method] = 1.0 if all(c.reject for c in outcome.cells) else 0.0
            else:
                est = estimate_thresholds(
                    dataset, pop.kind, method, harness, seed=seed * 1000003 + d
                )
                diffs = []
                for p in pre.participants:
                    for m in pre.muscles:
                        diffs.append(est[(p, "post", m)] - est[(p, "pre", m)])
                p_value = wilcoxon_signed_rank(np.asarray(diffs), alternative="less")
                out[method] = 1.0 if p_value < alpha else 0.0
        except MepfitError:
            out[method] = float("nan")
    return d, out


def _concat_datasets(a: MepDataset, b: MepDataset) -> MepDataset:
    fa, fb = a.to_frame(), b.to_frame()
    merged = np.concatenate
    return from_rows(
        participants=list(fa["participant"]) + list(fb["participant"]),
        muscles=list(fa["muscle"]) + list(fb["muscle"]),
        intensity=merged([a.intensity, b.intensity]),
        mep_size=merged([a.mep_size, b.mep_size]),
        conditions=list(fa["condition"]) + list(fb["condition"]),
        condition_order=a.conditions,
    )


def power_benchmark(
    pop: PopulationParams,
    n_valid_draws: int,
    n_participants: int,
    shift_mu: float,
    shift_sd: float = 2.5,
    n_intensities: int = 24,
    methods=("HB", "nHB", "NM"),
    harness: HarnessConfig | None = None,
    seed: int = 0,
    workers: int = 1,
    alpha: float = 0.05,
    max_attempts: int | None = None,
) -> dict[str, PowerResult]:
    """Rejection rate of the no-shift hypothesis per method.

    Simulates draws until ``n_valid_draws`` survive the validity rule (a
    draw is discarded when any participant's post-intervention threshold is
    negative); the HB model uses the 95% HDI rule on the shift location,
    the baselines a one-sided signed-rank test at ``alpha``.
    """
    harness = harness or HarnessConfig()
    scenario = "null" if shift_mu == 0.0 else "shift"
    max_attempts = max_attempts or (4 * n_valid_draws + 32)
    # First pass: find which draw indices are valid (cheap, no fitting).
    valid_ids = []
    discarded = 0
    for d in range(max_attempts):
        rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(d,)))
        pre = simulate_participants(pop, n_participants, rng)
        post = simulate_participants(pop, n_participants, rng)
        delta = rng.normal(shift_mu, shift_sd, size=pre.params["a"].shape)
        if np.any(pre.params["a"] + delta <= 0.0):
            discarded += 1
            continue
        valid_ids.append(d)
        if len(valid_ids) == n_valid_draws:
            break
    if not valid_ids:
        raise AllDrawsDiscardedError("every simulated draw had a negative post threshold")

    args = [
        (d, pop.to_dict(), n_participants, shift_mu, shift_sd, n_intensities,
         tuple(methods), harness, seed, alpha)
        for d in valid_ids
    ]
    indicators = {m: np.full(len(valid_ids), np.nan) for m in methods}
    failures = {m: 0 for m in methods}
    position = {d: i for i, d in enumerate(valid_ids)}
    for d, per_method in _run_draws(_power_draw, args, workers):
        if per_method is None:
            continue
        for method, ind in per_method.items():
            if np.isnan(ind):
                failures[method] += 1
            indicators[method][position[d]] = ind
    return {
        m: PowerResult(
            method=m,
            scenario=scenario,
            indicators=indicators[m],
            n_participants=n_participants,
            discarded=discarded,
            attempted=len(valid_ids) + discarded,
            failures=failures[m],
        )
        for m in methods
    }


# -- repetition design benchmark ------------------------------------------------------


@dataclass(frozen=True)
class DesignGrid:
    repetitions: tuple[int, ...] = (1, 4, 8)
    totals: tuple[int, ...] = (32, 40, 48, 56, 64)
    base_intensities: int = 64
    base_repetitions: int = 8

    def cells(self):
        out = []
        for r in self.repetitions:
            for t in self.totals:
                if t % r != 0:
                    raise GridMismatchError(f"repetitions {r} do not divide total {t}")
                if t // r > self.base_intensities or r > self.base_repetitions:
                    raise GridMismatchError(f"design ({r}, {t}) exceeds the base grid")
                out.append((r, t))
        return out


def subsample_indices(n_base: int, n_unique: int) -> np.ndarray:
    """Equispaced subsample of ``n_unique`` indices from ``range(n_base)``."""
    return np.unique(np.round(np.linspace(0, n_base - 1, n_unique)).astype(int))


def _repetition_draw(args):
    (d, pop_dict, n_participants, grid_cells, harness, seed) = args
    pop = PopulationParams.from_dict(pop_dict)
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(d,)))
    truth = simulate_participants(pop, n_participants, rng)
    x = np.linspace(0.0, 100.0, 64)
    y = simulate_grid(truth, x, 8, rng)
    true_a = truth.params["a"]
    out = {}
    for r, t in grid_cells:
        idx = subsample_indices(64, t // r)
        sub = grid_to_dataset(truth, x[idx], y[:, idx, :r, :])
        try:
            est = estimate_thresholds(
                sub, pop.kind, "HB", HarnessConfig(hb=harness.hb, priors=harness.priors),
                seed=seed * 1000003 + d,
            )
            errs = [
                abs(est[(p, m)] - true_a[pi, mi])
                for pi, p in enumerate(truth.participants)
                for mi, m in enumerate(truth.muscles)
            ]
            out[(r, t)] = float(np.mean(errs))
        except MepfitError:
            out[(r, t)] = None
    return d, out


def repetition_design_benchmark(
    pop: PopulationParams,
    n_draws: int,
    grid: DesignGrid,
    n_participants: int = 8,
    harness: HarnessConfig | None = None,
    seed: int = 0,
    workers: int = 1,
) -> dict[tuple[int, int], AccuracyResult]:
    """HB threshold error for each (repetitions, total pulses) design."""
    harness = harness or HarnessConfig()
    cells = grid.cells()
    args = [
        (d, pop.to_dict(), n_participants, cells, harness, seed) for d in range(n_draws)
    ]
    results = {
        cell: AccuracyResult(f"r={cell[0]},T={cell[1]}", [n_participants],
                             np.full((1, n_draws), np.nan))
        for cell in cells
    }
    for d, per_cell in _run_draws(_repetition_draw, args, workers):
        for cell, err in per_cell.items():
            if err is None:
                results[cell].failures += 1
            else:
                results[cell].errors[0, d] = err
    return results


# -- worker pool -----------------------------------------------------------------


def _run_draws(fn, args, workers: int):
    """Run draw workers, yielding results in deterministic draw order."""
    if workers <= 1:
        for a in args:
            yield fn(a)
        return
    with ProcessPoolExecutor(max_workers=workers) as pool:
        yield from pool.map(fn, args, chunksize=1)

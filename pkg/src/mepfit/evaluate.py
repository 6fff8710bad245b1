"""Posterior summarization and decision procedures.

Highest-density intervals, Pareto-smoothed importance-sampling leave-one-out
cross-validation (ELPD scores and pairwise model comparison), the HDI
decision rules for the within/between comparison models, and the one-sided
Wilcoxon signed-rank baseline.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .errors import (
    AllZeroDifferencesError,
    InsufficientDrawsError,
    MismatchedObservationsError,
    NonFiniteLikelihoodError,
    UnknownGroupError,
    WrongModelModeError,
)


# -- highest density interval -------------------------------------------------


@dataclass(frozen=True)
class HdiInterval:
    lower: float
    upper: float
    mass: float
    multimodal: bool = False

    @property
    def width(self) -> float:
        return self.upper - self.lower


def hdi(draws, mass: float = 0.95) -> HdiInterval:
    """Shortest contiguous interval containing ``ceil(mass * n)`` draws.

    Ties between equally short windows resolve to the leftmost window.  A
    heuristic multimodality flag is set when some excluded draw sits in a
    region of higher estimated density than the thinnest part of the
    included window (the interval is still the single shortest window).
    """
    x = np.sort(np.asarray(draws, dtype=float).reshape(-1))
    n = x.size
    if n < 20:
        raise InsufficientDrawsError("hdi requires at least 20 draws")
    if not (0.0 < mass < 1.0):
        raise ValueError("mass must be in (0, 1)")
    span = int(math.ceil(mass * n))
    if span >= n:
        return HdiInterval(float(x[0]), float(x[-1]), mass, False)
    widths = x[span - 1 :] - x[: n - span + 1]
    i = int(np.argmin(widths))
    lower, upper = float(x[i]), float(x[i + span - 1])

    # k-nearest-spacing density estimate for the multimodality flag.
    k = max(3, int(0.1 * n))
    lo_idx = np.maximum(np.arange(n) - k, 0)
    hi_idx = np.minimum(np.arange(n) + k, n - 1)
    spread = x[hi_idx] - x[lo_idx]
    with np.errstate(divide="ignore"):
        density = np.where(spread > 0, (hi_idx - lo_idx) / np.maximum(spread, 1e-300), np.inf)
    inside = slice(i, i + span)
    min_inside = density[inside].min()
    outside = np.ones(n, dtype=bool)
    outside[inside] = False
    multimodal = bool(np.any(density[outside] > min_inside))
    return HdiInterval(lower, upper, mass, multimodal)


# -- PSIS-LOO ------------------------------------------------------------------


@dataclass
class ElpdResult:
    label: str
    pointwise: np.ndarray
    pareto_k: np.ndarray
    elpd: float
    se: float

    @property
    def n_obs(self) -> int:
        return int(self.pointwise.shape[0])

    def worst_k(self) -> float:
        finite = self.pareto_k[np.isfinite(self.pareto_k)]
        return float(finite.max()) if finite.size else float("-inf")

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "elpd": float(self.elpd),
            "se": float(self.se),
            "pointwise": [float(v) for v in self.pointwise],
            "pareto_k": [float(v) for v in self.pareto_k],
        }


def fit_generalized_pareto(exceedances: np.ndarray) -> tuple[float, float]:
    """Shape (k) and scale of a generalized Pareto fit to sorted exceedances.

    Quantile-grid profile-likelihood estimate with a weak prior pulling the
    shape toward 1/2; the scale comes from the pre-regularized shape.
    """
    x = np.sort(np.asarray(exceedances, dtype=float))
    n = x.size
    prior_bs = 3.0
    m_grid = 30 + int(np.floor(np.sqrt(n)))
    jj = np.arange(1.0, m_grid + 1.0)
    quart = x[int(np.floor(n / 4.0 + 0.5)) - 1]
    if quart <= 0.0:
        quart = max(x[-1] * 1e-9, 1e-300)
    bs = 1.0 - np.sqrt(m_grid / (jj - 0.5))
    bs /= prior_bs * quart
    bs += 1.0 / x[-1]
    ks = np.log1p(-bs[:, None] * x[None, :]).mean(axis=1)
    ls = n * (np.log(-bs / ks) - ks - 1.0)
    weights = 1.0 / np.exp(ls - ls[:, None]).sum(axis=1)
    b = float(np.sum(bs * weights))
    k = float(np.log1p(-b * x).mean())
    sigma = -k / b
    k_reg = (n * k + 5.0) / (n + 10.0)
    return k_reg, sigma


def _gpd_quantile(p, k, sigma):
    if abs(k) < 1e-12:
        return -sigma * np.log1p(-p)
    return sigma / k * (np.expm1(-k * np.log1p(-p)))


def smooth_importance_weights(log_weights: np.ndarray, tail_frac: float = 0.2):
    """Pareto-smooth one vector of log importance weights.

    The largest ``tail_frac`` of the weights is replaced by expected order
    statistics of a generalized Pareto fit to the tail; weights are then
    truncated at the pre-normalization maximum and renormalized to sum to
    one.  Returns (normalized log weights, tail shape k).
    """
    lw = np.asarray(log_weights, dtype=float).copy()
    s = lw.size
    lw -= lw.max()
    n_tail = int(np.ceil(tail_frac * s))
    k = float("inf")
    if n_tail >= 5 and n_tail < s:
        order = np.argsort(lw)
        tail_ids = order[s - n_tail :]
        cutoff = lw[order[s - n_tail - 1]]
        exceed = np.expm1(lw[tail_ids] - cutoff) * np.exp(cutoff)
        if exceed.max() > 0.0 and np.ptp(exceed) > 0.0:
            k, sigma = fit_generalized_pareto(exceed)
            if np.isfinite(k) and sigma > 0.0:
                probs = (np.arange(1.0, n_tail + 1.0) - 0.5) / n_tail
                smoothed = _gpd_quantile(probs, k, sigma) + np.exp(cutoff)
                ranks = np.argsort(lw[tail_ids])
                new_tail = np.empty(n_tail)
                new_tail[ranks] = np.log(smoothed)
                lw[tail_ids] = np.minimum(new_tail, 0.0)
        else:
            k = float("-inf")  # constant tail: smoothing is a no-op
    total = _logsumexp(lw)
    return lw - total, k


def _logsumexp(v):
    m = np.max(v)
    if not np.isfinite(m):
        return m
    return m + np.log(np.sum(np.exp(v - m)))


def psis_loo(samples, graph, label: str | None = None) -> ElpdResult:
    """PSIS-LOO expected log pointwise predictive density for a fitted model.

    Pointwise log-likelihoods are recomputed from the posterior draws of the
    per-cell parameters; importance ratios are smoothed per observation by a
    generalized-Pareto fit to their largest 20%.
    """
    c, d = samples.n_chains, samples.n_draws
    n = graph.n_obs
    loglik = np.empty((c * d, n))
    row = 0
    names = list(graph.param_names) + ["c1", "c2"]
    if graph.spec.mixture:
        names += ["p_outlier", "sigma_outlier"]
    stacked = {name: samples.stacked(name) for name in names}
    for s in range(c * d):
        cp = {name: stacked[name][s] for name in names}
        loglik[row] = graph.pointwise_loglik(cp)
        row += 1
    if not np.all(np.isfinite(loglik)):
        raise NonFiniteLikelihoodError("non-finite pointwise log-likelihood")

    pointwise = np.empty(n)
    pareto_k = np.empty(n)
    for i in range(n):
        lw, k = smooth_importance_weights(-loglik[:, i])
        pointwise[i] = _logsumexp(lw + loglik[:, i])
        pareto_k[i] = k
    elpd = float(pointwise.sum())
    se = float(np.sqrt(n * np.var(pointwise, ddof=1))) if n > 1 else 0.0
    return ElpdResult(
        label=label or graph.spec.kind.value,
        pointwise=pointwise,
        pareto_k=pareto_k,
        elpd=elpd,
        se=se,
    )


@dataclass(frozen=True)
class CompareRow:
    rank: int
    label: str
    elpd: float
    se: float
    delta_mu: float
    delta_sem: float
    worst_pareto_k: float


def compare(results: list[ElpdResult]) -> list[CompareRow]:
    """Rank models by total ELPD; pairwise differences are against the best.

    ``delta_mu`` is the summed pointwise ELPD difference from the best model
    and ``delta_sem`` its standard error (sqrt(n * var of the pointwise
    differences)); the best model has both equal to zero.
    """
    if not results:
        raise MismatchedObservationsError("nothing to compare")
    n = results[0].n_obs
    for r in results:
        if r.n_obs != n:
            raise MismatchedObservationsError(
                "all models must be scored on the same observations"
            )
    ranked = sorted(results, key=lambda r: -r.elpd)
    best = ranked[0]
    rows = []
    for rank, r in enumerate(ranked):
        diff = best.pointwise - r.pointwise
        delta_mu = float(diff.sum())
        delta_sem = float(np.sqrt(n * np.var(diff, ddof=1))) if (n > 1 and r is not best) else 0.0
        if r is best:
            delta_mu = 0.0
        rows.append(
            CompareRow(
                rank=rank,
                label=r.label,
                elpd=r.elpd,
                se=r.se,
                delta_mu=delta_mu,
                delta_sem=delta_sem,
                worst_pareto_k=r.worst_k(),
            )
        )
    return rows


# -- hypothesis decisions -------------------------------------------------------


@dataclass(frozen=True)
class HypothesisCell:
    label: str
    hdi: HdiInterval
    prob_side: float
    reject: bool


@dataclass(frozen=True)
class HypothesisOutcome:
    side: str
    mass: float
    cells: list[HypothesisCell]
    baseline: str | None = None

    def to_dict(self) -> dict:
        return {
            "side": self.side,
            "mass": self.mass,
            "baseline": self.baseline,
            "cells": [
                {
                    "label": c.label,
                    "hdi_lower": c.hdi.lower,
                    "hdi_upper": c.hdi.upper,
                    "prob_side": c.prob_side,
                    "reject": c.reject,
                }
                for c in self.cells
            ],
        }


def _side_checks(side: str):
    if side == "negative":
        return (lambda iv: iv.upper < 0.0), (lambda draws: float(np.mean(draws < 0.0)))
    if side == "positive":
        return (lambda iv: iv.lower > 0.0), (lambda draws: float(np.mean(draws > 0.0)))
    raise ValueError("side must be 'negative' or 'positive'")


def decide_within(samples, side: str = "negative", mass: float = 0.95,
                  baseline: str | None = None) -> HypothesisOutcome:
    """HDI decision on the condition-level shift locations of a within fit.

    Rejects the no-shift hypothesis for a (condition, muscle) cell when the
    HDI of its shift-location posterior lies entirely on ``side`` of zero.
    """
    try:
        draws = samples.stacked("mu_a_delta")
    except Exception as exc:
        raise WrongModelModeError(
            "samples do not come from a within-participant comparison fit"
        ) from exc
    labels = samples.labels["mu_a_delta"]
    on_side, prob = _side_checks(side)
    cells = []
    for j, lab in enumerate(labels):
        iv = hdi(draws[:, j], mass)
        cells.append(
            HypothesisCell(
                label=lab, hdi=iv, prob_side=prob(draws[:, j]), reject=bool(on_side(iv))
            )
        )
    return HypothesisOutcome(side=side, mass=mass, cells=cells, baseline=baseline)


def decide_between(samples, group1: str, group2: str, side: str = "positive",
                   mass: float = 0.95) -> HypothesisOutcome:
    """HDI decision on draw-wise group-location differences, per muscle."""
    try:
        draws = samples.stacked("mu_a_g")
    except Exception as exc:
        raise WrongModelModeError(
            "samples do not come from a between-groups comparison fit"
        ) from exc
    if group1 == group2:
        raise UnknownGroupError("groups must differ")
    labels = samples.labels["mu_a_g"]
    per_muscle: dict[str, dict[str, int]] = {}
    for j, lab in enumerate(labels):
        group, muscle = lab.strip("[]").split(",", 1)
        per_muscle.setdefault(muscle, {})[group] = j
    on_side, prob = _side_checks(side)
    cells = []
    for muscle in sorted(per_muscle):
        cols = per_muscle[muscle]
        if group1 not in cols or group2 not in cols:
            raise UnknownGroupError(
                f"groups {group1!r}/{group2!r} not both present for muscle {muscle!r}"
            )
        diff = draws[:, cols[group1]] - draws[:, cols[group2]]
        iv = hdi(diff, mass)
        cells.append(
            HypothesisCell(
                label=f"[{group1}-{group2},{muscle}]",
                hdi=iv,
                prob_side=prob(diff),
                reject=bool(on_side(iv)),
            )
        )
    return HypothesisOutcome(side=side, mass=mass, cells=cells)


# -- Wilcoxon signed-rank test ---------------------------------------------------


def _signed_rank_statistic(diffs: np.ndarray):
    """(W+, doubled midranks of |d|, tie counts) after zero removal."""
    d = np.asarray(diffs, dtype=float)
    d = d[d != 0.0]
    if d.size == 0:
        raise AllZeroDifferencesError("all differences are zero")
    absd = np.abs(d)
    order = np.argsort(absd, kind="stable")
    ranks = np.empty(d.size)
    sorted_abs = absd[order]
    i = 0
    pos = 1
    tie_counts = []
    while i < d.size:
        j = i
        while j < d.size and sorted_abs[j] == sorted_abs[i]:
            j += 1
        tie_counts.append(j - i)
        mid = 0.5 * (pos + (pos + (j - i) - 1))
        ranks[order[i:j]] = mid
        pos += j - i
        i = j
    w_plus = float(ranks[d > 0].sum())
    return w_plus, ranks, tie_counts


def _exact_signed_rank_p(w_plus: float, ranks: np.ndarray, alternative: str) -> float:
    # Doubled midranks are integers, so subset sums enumerate exactly.
    r2 = np.rint(2.0 * ranks).astype(np.int64)
    w2 = int(round(2.0 * w_plus))
    half = len(r2) // 2
    first, second = r2[:half], r2[half:]

    def subset_sums(values):
        sums = np.zeros(1, dtype=np.int64)
        for v in values:
            sums = np.concatenate([sums, sums + v])
        return sums

    sums_a = subset_sums(first)
    sums_b = np.sort(subset_sums(second))
    total = sums_a.size * sums_b.size
    if alternative == "less":
        counts = np.searchsorted(sums_b, w2 - sums_a, side="right")
    elif alternative == "greater":
        counts = sums_b.size - np.searchsorted(sums_b, w2 - sums_a, side="left")
    else:
        raise ValueError("alternative must be 'less' or 'greater'")
    return float(counts.sum()) / float(total)


def wilcoxon_signed_rank(differences, alternative: str = "less",
                         exact_limit: int = 25) -> float:
    """One-sided Wilcoxon signed-rank p-value.

    ``alternative='less'`` tests for negative differences (small positive-rank
    sum).  Zeros are dropped; ties get midranks.  Exact enumeration of all
    2^n sign assignments (with the observed tied ranks) up to
    ``exact_limit`` non-zero differences, then a normal approximation with
    continuity and tie corrections.
    """
    w_plus, ranks, tie_counts = _signed_rank_statistic(differences)
    n = ranks.size
    if n <= exact_limit:
        return _exact_signed_rank_p(w_plus, ranks, alternative)
    mean = n * (n + 1) / 4.0
    var = n * (n + 1) * (2 * n + 1) / 24.0
    var -= sum(t**3 - t for t in tie_counts) / 48.0
    sd = math.sqrt(var)
    if alternative == "less":
        return float(ndtr((w_plus + 0.5 - mean) / sd))
    if alternative == "greater":
        return float(ndtr((mean - w_plus + 0.5) / sd))
    raise ValueError("alternative must be 'less' or 'greater'")

"""Convergence diagnostics: rank-normalized split R-hat and bulk ESS."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri
from scipy.stats import rankdata

from .errors import InsufficientDrawsError


def _split_chains(x: np.ndarray) -> np.ndarray:
    """(chains, draws) -> (2*chains, draws//2), dropping a trailing odd draw."""
    c, n = x.shape
    half = n // 2
    return np.concatenate([x[:, :half], x[:, half : 2 * half]], axis=0)


def _rank_normalize(x: np.ndarray) -> np.ndarray:
    flat = rankdata(x.reshape(-1), method="average")
    z = ndtri((flat - 0.375) / (flat.size + 0.25))
    return z.reshape(x.shape)


def split_rhat(draws: np.ndarray) -> float:
    """Rank-normalized split R-hat of one parameter, draws shaped (chains, n)."""
    x = _split_chains(np.asarray(draws, dtype=float))
    if np.allclose(x, x.reshape(-1)[0]):
        return 1.0
    z = _rank_normalize(x)
    m, n = z.shape
    chain_means = z.mean(axis=1)
    w = float(np.mean(np.var(z, axis=1, ddof=1)))
    b = n * float(np.var(chain_means, ddof=1))
    var_plus = (n - 1) / n * w + b / n
    if w <= 0.0:
        return 1.0
    return float(np.sqrt(var_plus / w))


def _autocovariance(x: np.ndarray) -> np.ndarray:
    """Biased autocovariance of each row via FFT; x shaped (chains, n)."""
    m, n = x.shape
    centered = x - x.mean(axis=1, keepdims=True)
    size = int(2 ** np.ceil(np.log2(2 * n)))
    f = np.fft.rfft(centered, n=size, axis=1)
    acov = np.fft.irfft(f * np.conj(f), n=size, axis=1)[:, :n].real
    return acov / n


def ess_bulk(draws: np.ndarray) -> float:
    """Bulk effective sample size (rank-normalized split chains, Geyer pairs)."""
    x = _split_chains(np.asarray(draws, dtype=float))
    if np.allclose(x, x.reshape(-1)[0]):
        return float(x.size)
    z = _rank_normalize(x)
    m, n = z.shape
    acov = _autocovariance(z)
    chain_var = acov[:, 0] * n / (n - 1)
    w = float(np.mean(chain_var))
    b = n * float(np.var(z.mean(axis=1), ddof=1)) if m > 1 else 0.0
    var_plus = (n - 1) / n * w + b / n
    if var_plus <= 0.0:
        return float(x.size)

    rho = 1.0 - (w - acov.mean(axis=0)) / var_plus
    rho[0] = 1.0
    # Geyer initial monotone positive sequence over lag pairs.
    pair_sums = []
    prev_pair = np.inf
    t = 1
    while t + 1 < n:
        pair = rho[t] + rho[t + 1]
        if pair < 0.0:
            break
        pair = min(pair, prev_pair)
        prev_pair = pair
        pair_sums.append(pair)
        t += 2
    tau = 1.0 + 2.0 * float(sum(pair_sums))
    tau = max(tau, 1.0 / np.log10(x.size + 10.0))
    ess = x.size / tau
    return float(min(ess, float(x.size)))


@dataclass
class Diagnostics:
    """Per-parameter convergence summaries plus sampler adaptation state."""

    rhat: dict[str, np.ndarray]
    ess: dict[str, np.ndarray]
    divergences: int
    step_size: list[float]
    inv_mass: list[list[float]]

    def worst_rhat(self) -> float:
        values = [float(np.max(v)) for v in self.rhat.values() if v.size]
        return max(values) if values else 1.0

    def min_ess(self) -> float:
        values = [float(np.min(v)) for v in self.ess.values() if v.size]
        return min(values) if values else 0.0

    def to_dict(self) -> dict:
        return {
            "rhat": {k: [float(x) for x in v] for k, v in self.rhat.items()},
            "ess": {k: [float(x) for x in v] for k, v in self.ess.items()},
            "divergences": int(self.divergences),
            "step_size": [float(s) for s in self.step_size],
            "inv_mass": [[float(x) for x in m] for m in self.inv_mass],
            "worst_rhat": self.worst_rhat(),
            "min_ess": self.min_ess(),
        }


def compute_diagnostics(samples) -> Diagnostics:
    """Diagnostics for a :class:`~mepfit.posterior.PosteriorSamples`."""
    if samples.n_chains < 2:
        raise InsufficientDrawsError("diagnostics require >= 2 chains")
    if samples.n_draws < 4:
        raise InsufficientDrawsError("diagnostics require >= 4 draws per chain")
    rhat = {}
    ess = {}
    for name in samples.entry_order:
        arr = samples.entries[name]  # (chains, draws, size)
        size = arr.shape[2]
        rhat[name] = np.array([split_rhat(arr[:, :, j]) for j in range(size)])
        ess[name] = np.array([ess_bulk(arr[:, :, j]) for j in range(size)])
    return Diagnostics(
        rhat=rhat,
        ess=ess,
        divergences=int(samples.stats["divergent"].sum()),
        step_size=list(samples.step_size),
        inv_mass=[list(m) for m in samples.inv_mass],
    )

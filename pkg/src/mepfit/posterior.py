"""Posterior sample container, high-level sampling entry point, serialization.

Draws are stored in constrained space as named blocks shaped
(chains, draws, block size): every sampled block of the model layout plus the
derived per-cell parameters (``a``, ``b``, ..., ``c1``, ``c2``).  The CSV
serialization has one row per chain x draw and one column per scalar
parameter, named ``block[labels...]``, followed by per-draw sampler stats.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .diagnostics import Diagnostics, compute_diagnostics
from .errors import UnknownParameterError
from .hierarchy import ModelGraph
from .nuts import ChainResult, NutsConfig, nuts_sample

_STAT_COLUMNS = ("divergent", "tree_depth", "n_leapfrog", "energy", "accept_stat", "step_size")


@dataclass
class PosteriorSamples:
    entry_order: list[str]
    entries: dict[str, np.ndarray]          # name -> (chains, draws, size)
    labels: dict[str, tuple[str, ...]]      # name -> per-element labels
    stats: dict[str, np.ndarray]            # name -> (chains, draws)
    step_size: list[float] = field(default_factory=list)
    inv_mass: list[np.ndarray] = field(default_factory=list)

    @property
    def n_chains(self) -> int:
        first = self.entries[self.entry_order[0]]
        return first.shape[0]

    @property
    def n_draws(self) -> int:
        first = self.entries[self.entry_order[0]]
        return first.shape[1]

    def get(self, name: str) -> np.ndarray:
        if name not in self.entries:
            raise UnknownParameterError(f"no parameter block named {name!r}")
        return self.entries[name]

    def stacked(self, name: str) -> np.ndarray:
        """Draws pooled over chains: (chains*draws, size)."""
        arr = self.get(name)
        return arr.reshape(-1, arr.shape[2])

    def column_names(self) -> list[str]:
        cols = []
        for name in self.entry_order:
            cols.extend(f"{name}{lab}" for lab in self.labels[name])
        return cols

    def to_frame(self) -> pd.DataFrame:
        c, d = self.n_chains, self.n_draws
        data = {
            "chain": np.repeat(np.arange(c), d),
            "draw": np.tile(np.arange(d), c),
        }
        for name in self.entry_order:
            arr = self.entries[name]
            for j, lab in enumerate(self.labels[name]):
                data[f"{name}{lab}"] = arr[:, :, j].reshape(-1)
        for stat in _STAT_COLUMNS:
            if stat in self.stats:
                data[f"stat_{stat}"] = self.stats[stat].reshape(-1)
        return pd.DataFrame(data)

    def to_csv(self, path) -> None:
        frame = self.to_frame()
        frame.to_csv(path, index=False, lineterminator="\n")

    @classmethod
    def from_csv(cls, path) -> "PosteriorSamples":
        frame = pd.read_csv(path)
        chains = int(frame["chain"].max()) + 1
        draws = int(frame["draw"].max()) + 1
        entry_order: list[str] = []
        entries: dict[str, list] = {}
        labels: dict[str, list] = {}
        stats: dict[str, np.ndarray] = {}
        for col in frame.columns:
            if col in ("chain", "draw"):
                continue
            if col.startswith("stat_"):
                stats[col[5:]] = frame[col].to_numpy().reshape(chains, draws)
                continue
            if "[" in col:
                name, lab = col.split("[", 1)
                lab = "[" + lab
            else:
                name, lab = col, ""
            if name not in entries:
                entry_order.append(name)
                entries[name] = []
                labels[name] = []
            entries[name].append(frame[col].to_numpy(dtype=float).reshape(chains, draws))
            labels[name].append(lab)
        stacked = {
            name: np.stack(cols, axis=2) for name, cols in entries.items()
        }
        step = []
        if "step_size" in stats:
            step = [float(stats["step_size"][c, 0]) for c in range(chains)]
        return cls(
            entry_order=entry_order,
            entries=stacked,
            labels={k: tuple(v) for k, v in labels.items()},
            stats=stats,
            step_size=step,
            inv_mass=[],
        )


def point_estimate(samples: PosteriorSamples, name: str) -> np.ndarray:
    """Posterior mean (constrained space) per element of a named block."""
    arr = samples.get(name)
    return arr.mean(axis=(0, 1))


def assemble_samples(graph: ModelGraph, chains: list[ChainResult]) -> PosteriorSamples:
    """Constrain raw chain positions into named posterior blocks."""
    c = len(chains)
    d = chains[0].positions.shape[0]
    block_names = [b.name for b in graph.layout.blocks]
    entry_order = list(block_names)
    labels = {b.name: b.labels for b in graph.layout.blocks}
    derived = graph.derived_info()
    for name, labs in derived:
        entry_order.append(name)
        labels[name] = labs

    entries = {
        name: np.empty((c, d, len(labels[name]))) for name in entry_order
    }
    for ci, chain in enumerate(chains):
        for di in range(d):
            vals = graph.constrain(chain.positions[di])
            cp = graph.cell_params(vals)
            for name in block_names:
                entries[name][ci, di, :] = vals[name]
            for name, _ in derived:
                entries[name][ci, di, :] = cp[name]

    stats = {
        "divergent": np.stack([ch.divergent for ch in chains]).astype(float),
        "tree_depth": np.stack([ch.tree_depth for ch in chains]).astype(float),
        "n_leapfrog": np.stack([ch.n_leapfrog for ch in chains]).astype(float),
        "energy": np.stack([ch.energy for ch in chains]),
        "accept_stat": np.stack([ch.accept_stat for ch in chains]),
        "step_size": np.stack(
            [np.full(d, ch.step_size) for ch in chains]
        ),
    }
    return PosteriorSamples(
        entry_order=entry_order,
        entries=entries,
        labels=labels,
        stats=stats,
        step_size=[ch.step_size for ch in chains],
        inv_mass=[ch.inv_mass for ch in chains],
    )


def sample_posterior(
    graph: ModelGraph, cfg: NutsConfig, with_diagnostics: bool = True
) -> tuple[PosteriorSamples, Diagnostics | None]:
    """Run the sampler on a model graph and return named posterior draws."""
    chains = nuts_sample(graph, cfg)
    samples = assemble_samples(graph, chains)
    diag = None
    if with_diagnostics and cfg.chains >= 2 and cfg.draws >= 4:
        diag = compute_diagnostics(samples)
    return samples, diag

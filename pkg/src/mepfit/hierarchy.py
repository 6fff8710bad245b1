"""Joint log-posterior assembly for the recruitment-curve models.

Three comparison modes share one machinery:

* default        -- exchangeable cells, one per (participant[, condition],
                    muscle) combination, partially pooled toward per-muscle
                    population locations.
* within         -- repeat-measurement comparison: each cell's threshold is
                    a participant-level fixed component plus, for non-baseline
                    conditions, a shift component whose condition-level
                    locations are themselves partially pooled.
* between        -- group comparison: thresholds pool toward group-level
                    locations, which pool toward a common population location.

Pooling variants: ``hierarchical`` is the full model; ``none`` keeps the same
participant-level priors with fixed constants (no pooling); ``uniform`` uses
flat priors inside fixed bounds (the maximum-likelihood-style baseline).

Positive parameters are sampled on the log scale.  Partially pooled log-scale
parameters use a non-centered parameterization (standard-normal latent times
scale plus location).  Thresholds keep the natural (additive) scale with a
zero-truncated normal population distribution, matching how shifts and group
differences are defined.

The graph exposes the joint log density and its analytic gradient over a flat
unconstrained vector; both are exercised against finite differences in the
test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from . import curves
from .curves import CurveKind
from .densities import halfnormal_lp, normal_lp, std_normal_lp, truncnorm0_lp
from .errors import (
    DataError,
    EmptyDataError,
    InconsistentSpecError,
    LengthMismatchError,
)
from .observation import gamma_loglik_grads, mixture_loglik_grads
from .transforms import BoundedLogitTransform, IdentityTransform, LogTransform
from .data import MepDataset


class HierarchyMode(Enum):
    DEFAULT = "default"
    WITHIN_PARTICIPANT = "within"
    BETWEEN_GROUPS = "between"


class Pooling(Enum):
    HIERARCHICAL = "hierarchical"
    NONE = "none"
    UNIFORM = "uniform"


@dataclass(frozen=True)
class ModelSpec:
    """Which model to build: curve function, comparison mode, pooling, mixture."""

    kind: CurveKind = CurveKind.RECTIFIED_LOGISTIC
    mode: HierarchyMode = HierarchyMode.DEFAULT
    pooling: Pooling = Pooling.HIERARCHICAL
    mixture: bool = False
    mixture_cap_p: float = 0.05
    mixture_sigma_cap: float | None = None  # None: max observed size per muscle

    def to_dict(self) -> dict:
        return {
            "curve": self.kind.value,
            "mode": self.mode.value,
            "pooling": self.pooling.value,
            "mixture": self.mixture,
            "mixture_cap_p": self.mixture_cap_p,
            "mixture_sigma_cap": self.mixture_sigma_cap,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ModelSpec":
        return cls(
            kind=CurveKind.from_name(d.get("curve", "rectified_logistic")),
            mode=HierarchyMode(d.get("mode", "default")),
            pooling=Pooling(d.get("pooling", "hierarchical")),
            mixture=bool(d.get("mixture", False)),
            mixture_cap_p=float(d.get("mixture_cap_p", 0.05)),
            mixture_sigma_cap=d.get("mixture_sigma_cap"),
        )


# Default location hyperpriors for the log-scale parameters, Normal(loc, scale)
# on log theta.  Weakly informative for TMS-like data (intensities in % of
# maximum stimulator output, sizes in mV).
_DEFAULT_LOG_LOC: dict[str, tuple[float, float]] = {
    "b": (math.log(0.15), 1.5),
    "L": (math.log(0.05), 1.5),
    "ell": (math.log(0.1), 1.5),
    "H": (math.log(2.0), 1.5),
    "v": (0.0, 1.5),
    "c1": (0.0, 1.5),
    "c2": (math.log(0.3), 1.5),
}

_DEFAULT_LOG_SCALE_SCALE: dict[str, float] = {
    "b": 1.0,
    "L": 1.0,
    "ell": 1.0,
    "H": 1.0,
    "v": 1.0,
    "c1": 1.0,
    "c2": 1.0,
}


@dataclass(frozen=True)
class PriorConfig:
    """All prior and hyperprior constants, serialized alongside every fit.

    * threshold location hyperprior: zero-truncated Normal(a_loc, a_loc_scale);
    * every pooled scale gets a half-normal hyperprior (``a_scale_scale`` of
      ``None`` resolves to half the observed intensity range);
    * log-scale parameter locations get Normal hyperpriors (``log_loc``),
      their pooled scales half-normal hyperpriors (``log_scale_scale``);
    * the shift-location hyperprior is a wide Normal centered at zero, the
      proper stand-in for a flat prior symmetric about zero;
    * ``uniform_*`` are the flat-prior bounds of the maximum-likelihood
      baseline.
    """

    a_loc: float = 50.0
    a_loc_scale: float = 50.0
    a_scale_scale: float | None = None
    log_loc: dict = field(default_factory=lambda: dict(_DEFAULT_LOG_LOC))
    log_scale_scale: dict = field(default_factory=lambda: dict(_DEFAULT_LOG_SCALE_SCALE))
    shift_loc_scale: float = 100.0
    shift_scale_scale: float = 10.0
    uniform_a_lo: float = 0.0
    uniform_a_hi: float = 150.0
    uniform_log_lo: float = math.log(1e-4)
    uniform_log_hi: float = math.log(1e4)

    def resolved(self, dataset: MepDataset) -> "PriorConfig":
        if self.a_scale_scale is not None:
            return self
        span = float(dataset.intensity.max() - dataset.intensity.min())
        return replace(self, a_scale_scale=max(5.0, 0.5 * span))

    def to_dict(self) -> dict:
        return {
            "a_loc": self.a_loc,
            "a_loc_scale": self.a_loc_scale,
            "a_scale_scale": self.a_scale_scale,
            "log_loc": {k: list(v) for k, v in self.log_loc.items()},
            "log_scale_scale": dict(self.log_scale_scale),
            "shift_loc_scale": self.shift_loc_scale,
            "shift_scale_scale": self.shift_scale_scale,
            "uniform_a_lo": self.uniform_a_lo,
            "uniform_a_hi": self.uniform_a_hi,
            "uniform_log_lo": self.uniform_log_lo,
            "uniform_log_hi": self.uniform_log_hi,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PriorConfig":
        kwargs = dict(d)
        if "log_loc" in kwargs:
            kwargs["log_loc"] = {k: tuple(v) for k, v in kwargs["log_loc"].items()}
        return cls(**kwargs)


@dataclass(frozen=True)
class Block:
    """One named slice of the flat unconstrained vector."""

    name: str
    offset: int
    size: int
    transform: object
    labels: tuple[str, ...]  # one per element, e.g. "[S01,APB]"; "" for scalars

    @property
    def sl(self) -> slice:
        return slice(self.offset, self.offset + self.size)


class ParameterLayout:
    """Ordered blocks covering the unconstrained vector exactly once."""

    def __init__(self, blocks: list[Block]):
        self.blocks = blocks
        self.by_name = {b.name: b for b in blocks}
        self.dim = sum(b.size for b in blocks)

    def names(self) -> list[str]:
        return [b.name for b in self.blocks]

    def split(self, z: np.ndarray) -> dict[str, np.ndarray]:
        return {b.name: z[b.sl] for b in self.blocks}

    def column_names(self) -> list[str]:
        cols = []
        for b in self.blocks:
            cols.extend(f"{b.name}{lab}" for lab in b.labels)
        return cols


def reconstruct_thresholds(a_fixed: np.ndarray, a_delta: np.ndarray) -> np.ndarray:
    """Thresholds per (participant, condition, muscle) from the decomposition.

    ``a_fixed`` has shape (P, M); ``a_delta`` has shape (P, C-1, M) holding
    the shift of each non-baseline condition from the fixed component.
    Returns shape (P, C, M) where condition 0 is the baseline.
    """
    a_fixed = np.asarray(a_fixed, dtype=float)
    a_delta = np.asarray(a_delta, dtype=float)
    P, M = a_fixed.shape
    C = a_delta.shape[1] + 1
    out = np.empty((P, C, M))
    out[:, 0, :] = a_fixed
    out[:, 1:, :] = a_fixed[:, None, :] + a_delta
    return out


def _labels(parts: list[tuple]) -> tuple[str, ...]:
    return tuple("[" + ",".join(str(p) for p in t) + "]" for t in parts)


class ModelGraph:
    """Immutable model: layout, joint log density, gradient, and helpers."""

    def __init__(self, spec: ModelSpec, data: MepDataset, priors: PriorConfig):
        if data.n_obs == 0:
            raise EmptyDataError("cannot build a model on an empty dataset")
        if np.any(data.mep_size <= 0.0) or not np.all(np.isfinite(data.mep_size)):
            raise DataError("MEP sizes must be finite and > 0")
        if not np.all(np.isfinite(data.intensity)):
            raise DataError("intensities must be finite")

        self.spec = spec
        self.data = data
        self.priors = priors.resolved(data)
        self.kind = spec.kind
        self.param_names = curves.GRAD_PARAM_ORDER[spec.kind]
        self.theta_names = tuple(n for n in self.param_names if n != "a") + ("c1", "c2")

        mode, pooling = spec.mode, spec.pooling
        if mode is HierarchyMode.WITHIN_PARTICIPANT:
            if data.conditions is None or len(data.conditions) < 2:
                raise InconsistentSpecError(
                    "within-participant comparison requires >= 2 conditions"
                )
        if mode is HierarchyMode.BETWEEN_GROUPS:
            if data.groups is None or len(data.groups) < 2:
                raise InconsistentSpecError(
                    "between-groups comparison requires >= 2 groups"
                )

        self._index_cells()
        self._build_layout()

        self.y = data.mep_size.astype(float)
        self.x = data.intensity.astype(float)
        self.log_y = np.log(self.y)
        self.n_obs = data.n_obs

        if spec.mixture:
            caps = np.empty(self.n_muscles)
            for m in range(self.n_muscles):
                mask = data.muscle_idx == m
                caps[m] = float(self.y[mask].max()) if np.any(mask) else float(self.y.max())
            if spec.mixture_sigma_cap is not None:
                caps[:] = float(spec.mixture_sigma_cap)
            self.mixture_sigma_caps = caps
        else:
            self.mixture_sigma_caps = None

    # -- structure ---------------------------------------------------------

    def _index_cells(self):
        data = self.data
        has_cond = data.conditions is not None
        seen: dict[tuple, int] = {}
        cells: list[tuple] = []
        cell_index = np.empty(data.n_obs, dtype=np.intp)
        for i in range(data.n_obs):
            key = (
                int(data.participant_idx[i]),
                int(data.condition_idx[i]) if has_cond else -1,
                int(data.muscle_idx[i]),
            )
            if key not in seen:
                seen[key] = len(cells)
                cells.append(key)
            cell_index[i] = seen[key]
        # Deterministic cell order: sort by (participant, condition, muscle).
        order = sorted(range(len(cells)), key=lambda j: cells[j])
        rank = np.empty(len(cells), dtype=np.intp)
        for new_pos, old_pos in enumerate(order):
            rank[old_pos] = new_pos
        self.cells = [cells[j] for j in order]
        self.cell_index = rank[cell_index]
        self.n_cells = len(self.cells)
        self.n_muscles = len(data.muscles)
        self.muscle_of_cell = np.array([c[2] for c in self.cells], dtype=np.intp)
        self.muscle_of_obs = data.muscle_idx.astype(np.intp)

        self.cell_labels = []
        for p, c, m in self.cells:
            parts = [data.participants[p]]
            if c >= 0:
                parts.append(data.conditions[c])
            parts.append(data.muscles[m])
            self.cell_labels.append(tuple(parts))

        if self.spec.mode is HierarchyMode.WITHIN_PARTICIPANT:
            fixed_keys = sorted({(p, m) for p, c, m in self.cells})
            fixed_pos = {k: i for i, k in enumerate(fixed_keys)}
            self.fixed_keys = fixed_keys
            self.n_fixed = len(fixed_keys)
            self.fixed_of_cell = np.array(
                [fixed_pos[(p, m)] for p, c, m in self.cells], dtype=np.intp
            )
            self.muscle_of_fixed = np.array([m for _, m in fixed_keys], dtype=np.intp)
            delta_cells = [j for j, (p, c, m) in enumerate(self.cells) if c > 0]
            self.cells_of_delta = np.array(delta_cells, dtype=np.intp)
            self.n_delta = len(delta_cells)
            n_shift = len(self.data.conditions) - 1
            self.n_shift_levels = n_shift * self.n_muscles
            self.cm_of_delta = np.array(
                [
                    (self.cells[j][1] - 1) * self.n_muscles + self.cells[j][2]
                    for j in delta_cells
                ],
                dtype=np.intp,
            )

        if self.spec.mode is HierarchyMode.BETWEEN_GROUPS:
            g_of_p = self.data.group_of_participant
            if np.any(g_of_p < 0):
                raise InconsistentSpecError("every participant needs a group label")
            self.n_groups = len(self.data.groups)
            self.gm_of_cell = np.array(
                [g_of_p[p] * self.n_muscles + m for p, c, m in self.cells],
                dtype=np.intp,
            )

    def _build_layout(self):
        spec, priors = self.spec, self.priors
        data = self.data
        M = self.n_muscles
        K = self.n_cells
        log_tr = LogTransform()
        id_tr = IdentityTransform()

        muscle_labels = _labels([(m,) for m in data.muscles])
        cell_labels = _labels(self.cell_labels)

        blocks: list[Block] = []
        offset = 0

        def add(name, size, transform, labels):
            nonlocal offset
            blocks.append(Block(name, offset, size, transform, labels))
            offset += size

        if spec.pooling is Pooling.HIERARCHICAL:
            if spec.mode is HierarchyMode.BETWEEN_GROUPS:
                gm_labels = _labels(
                    [(g, m) for g in data.groups for m in data.muscles]
                )
                add("mu_mu_a", 1, log_tr, ("",))
                add("sigma_mu_a", 1, log_tr, ("",))
                add("mu_a_g", self.n_groups * M, log_tr, gm_labels)
            else:
                add("mu_a", M, log_tr, muscle_labels)
            add("sigma_a", 1, log_tr, ("",))
            if spec.mode is HierarchyMode.WITHIN_PARTICIPANT:
                fixed_labels = _labels(
                    [(data.participants[p], data.muscles[m]) for p, m in self.fixed_keys]
                )
                add("a_fixed", self.n_fixed, log_tr, fixed_labels)
                cm_labels = _labels(
                    [
                        (c, m)
                        for c in data.conditions[1:]
                        for m in data.muscles
                    ]
                )
                add("mu_mu_a_delta", 1, id_tr, ("",))
                add("sigma_mu_a_delta", 1, log_tr, ("",))
                add("z_mu_a_delta", self.n_shift_levels, id_tr, cm_labels)
                add("sigma_a_delta", 1, log_tr, ("",))
                delta_labels = _labels(
                    [self.cell_labels[j] for j in self.cells_of_delta]
                )
                add("z_a_delta", self.n_delta, id_tr, delta_labels)
            else:
                add("a", K, log_tr, cell_labels)
            for name in self.theta_names:
                add(f"mu_log_{name}", M, id_tr, muscle_labels)
                add(f"sigma_log_{name}", 1, log_tr, ("",))
            for name in self.theta_names:
                add(f"z_{name}", K, id_tr, cell_labels)
        elif spec.pooling is Pooling.NONE:
            add("a", K, log_tr, cell_labels)
            for name in self.theta_names:
                add(f"log_{name}", K, id_tr, cell_labels)
        else:  # UNIFORM
            add("a", K, BoundedLogitTransform(priors.uniform_a_lo, priors.uniform_a_hi), cell_labels)
            log_tr_bounds = BoundedLogitTransform(priors.uniform_log_lo, priors.uniform_log_hi)
            for name in self.theta_names:
                add(f"log_{name}", K, log_tr_bounds, cell_labels)

        if spec.mixture:
            add("p_outlier", 1, BoundedLogitTransform(0.0, spec.mixture_cap_p), ("",))
            add("sigma_outlier", M, log_tr, muscle_labels)

        self.layout = ParameterLayout(blocks)
        self.dim = self.layout.dim

    # -- constrained values --------------------------------------------------

    def constrain(self, z: np.ndarray) -> dict[str, np.ndarray]:
        """Constrained value of every sampled block."""
        z = self._check_z(z)
        return {
            b.name: b.transform.constrain(z[b.sl]) for b in self.layout.blocks
        }

    def unconstrain(self, params: dict[str, np.ndarray]) -> np.ndarray:
        """Inverse of :meth:`constrain`; validates positivity and bounds."""
        z = np.empty(self.dim)
        for b in self.layout.blocks:
            if b.name not in params:
                raise LengthMismatchError(f"missing block {b.name!r}")
            v = np.asarray(params[b.name], dtype=float).reshape(-1)
            if v.shape[0] != b.size:
                raise LengthMismatchError(
                    f"block {b.name!r} expects {b.size} values, got {v.shape[0]}"
                )
            z[b.sl] = b.transform.unconstrain(v)
        return z

    def cell_params(self, vals: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
        """Per-cell curve and observation parameters derived from block values.

        Returns arrays of length ``n_cells`` keyed by parameter name, plus
        mode-specific derived quantities (e.g. ``mu_a_delta`` and the
        reconstructed per-cell ``a`` in the within mode).
        """
        spec = self.spec
        out: dict[str, np.ndarray] = {}
        if spec.pooling is Pooling.HIERARCHICAL:
            for name in self.theta_names:
                log_theta = (
                    vals[f"mu_log_{name}"][self.muscle_of_cell]
                    + vals[f"sigma_log_{name}"] * vals[f"z_{name}"]
                )
                out[name] = np.exp(np.clip(log_theta, -300.0, 300.0))
            if spec.mode is HierarchyMode.WITHIN_PARTICIPANT:
                mu_a_delta = (
                    vals["mu_mu_a_delta"]
                    + vals["sigma_mu_a_delta"] * vals["z_mu_a_delta"]
                )
                a_delta = (
                    mu_a_delta[self.cm_of_delta]
                    + vals["sigma_a_delta"] * vals["z_a_delta"]
                )
                a = vals["a_fixed"][self.fixed_of_cell].copy()
                a[self.cells_of_delta] += a_delta
                out["mu_a_delta"] = mu_a_delta
                out["a_delta"] = a_delta
                out["a"] = a
            else:
                out["a"] = vals["a"]
        else:
            out["a"] = vals["a"]
            for name in self.theta_names:
                out[name] = np.exp(np.clip(vals[f"log_{name}"], -300.0, 300.0))
        if spec.mixture:
            out["p_outlier"] = vals["p_outlier"]
            out["sigma_outlier"] = vals["sigma_outlier"]
        return out

    # -- densities -----------------------------------------------------------

    def _check_z(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        if z.shape != (self.dim,):
            raise LengthMismatchError(
                f"expected vector of length {self.dim}, got shape {z.shape}"
            )
        return z

    def log_joint(self, z) -> float:
        return self.log_joint_grad(z)[0]

    def log_joint_grad(self, z) -> tuple[float, np.ndarray]:
        """Joint log density (likelihood, priors, Jacobians) and its gradient."""
        z = self._check_z(z)
        spec = self.spec
        layout = self.layout
        lp = 0.0
        grad = np.zeros(self.dim)
        gv_flat = np.zeros(self.dim)

        zb: dict[str, np.ndarray] = {}
        vals: dict[str, np.ndarray] = {}
        gv: dict[str, np.ndarray] = {}
        with np.errstate(over="ignore", under="ignore"):
            for b in layout.blocks:
                z_b = z[b.sl]
                v = b.transform.constrain(z_b)
                lj, dlj = b.transform.log_jacobian(z_b, v)
                lp += lj
                grad[b.sl] += dlj
                zb[b.name] = z_b
                vals[b.name] = v
                gv[b.name] = gv_flat[b.sl]

            lp += self._likelihood(vals, zb, gv)
            lp += self._priors(vals, gv)

            for b in layout.blocks:
                grad[b.sl] += gv[b.name] * b.transform.dv_dz(zb[b.name], vals[b.name])
        return lp, grad

    def _likelihood(self, vals, zb, gv) -> float:
        spec = self.spec
        cp = self.cell_params(vals)
        idx = self.cell_index
        gathered = {name: cp[name][idx] for name in self.param_names}
        mu, curve_grads = curves.grad_arrays(self.kind, self.x, **gathered)
        c1 = cp["c1"][idx]
        c2 = cp["c2"][idx]

        if spec.mixture:
            sigma_o = vals["sigma_outlier"][self.muscle_of_obs]
            ll, d_mu, d_c1, d_c2, d_p, d_sig = mixture_loglik_grads(
                self.y, self.log_y, mu, c1, c2, float(vals["p_outlier"][0]), sigma_o
            )
            gv["p_outlier"] += d_p.sum()
            gv["sigma_outlier"] += np.bincount(
                self.muscle_of_obs, weights=d_sig, minlength=self.n_muscles
            )
        else:
            ll, d_mu, d_c1, d_c2 = gamma_loglik_grads(self.y, self.log_y, mu, c1, c2)

        K = self.n_cells
        d_cells: dict[str, np.ndarray] = {}
        for name in self.param_names:
            d_cells[name] = np.bincount(idx, weights=d_mu * curve_grads[name], minlength=K)
        d_cells["c1"] = np.bincount(idx, weights=d_c1, minlength=K)
        d_cells["c2"] = np.bincount(idx, weights=d_c2, minlength=K)

        self._chain_cells_to_blocks(d_cells, cp, vals, gv)
        return float(ll.sum())

    def _chain_cells_to_blocks(self, d_cells, cp, vals, gv):
        spec = self.spec
        if spec.pooling is Pooling.HIERARCHICAL:
            for name in self.theta_names:
                d_log_theta = d_cells[name] * cp[name]
                gv[f"z_{name}"] += d_log_theta * vals[f"sigma_log_{name}"]
                gv[f"mu_log_{name}"] += np.bincount(
                    self.muscle_of_cell, weights=d_log_theta, minlength=self.n_muscles
                )
                gv[f"sigma_log_{name}"] += float(np.dot(d_log_theta, vals[f"z_{name}"]))
            d_a = d_cells["a"]
            if spec.mode is HierarchyMode.WITHIN_PARTICIPANT:
                gv["a_fixed"] += np.bincount(
                    self.fixed_of_cell, weights=d_a, minlength=self.n_fixed
                )
                d_delta = d_a[self.cells_of_delta]
                gv["z_a_delta"] += d_delta * vals["sigma_a_delta"]
                gv["sigma_a_delta"] += float(np.dot(d_delta, vals["z_a_delta"]))
                d_mu_delta = np.bincount(
                    self.cm_of_delta, weights=d_delta, minlength=self.n_shift_levels
                )
                gv["z_mu_a_delta"] += d_mu_delta * vals["sigma_mu_a_delta"]
                gv["sigma_mu_a_delta"] += float(np.dot(d_mu_delta, vals["z_mu_a_delta"]))
                gv["mu_mu_a_delta"] += float(d_mu_delta.sum())
            else:
                gv["a"] += d_a
        else:
            gv["a"] += d_cells["a"]
            for name in self.theta_names:
                gv[f"log_{name}"] += d_cells[name] * cp[name]

    def derived_info(self) -> list[tuple[str, tuple[str, ...]]]:
        """Names and element labels of the derived (non-sampled) quantities."""
        cell_labels = _labels(self.cell_labels)
        out = [(name, cell_labels) for name in self.theta_names]
        if self.spec.mode is HierarchyMode.WITHIN_PARTICIPANT:
            data = self.data
            cm_labels = _labels(
                [(c, m) for c in data.conditions[1:] for m in data.muscles]
            )
            delta_labels = _labels([self.cell_labels[j] for j in self.cells_of_delta])
            out += [
                ("a", cell_labels),
                ("a_delta", delta_labels),
                ("mu_a_delta", cm_labels),
            ]
        elif self.spec.pooling is not Pooling.HIERARCHICAL:
            pass  # "a" is already a sampled block with cell labels
        return out

    def _priors(self, vals, gv) -> float:
        spec, priors = self.spec, self.priors
        lp = 0.0
        if spec.pooling is Pooling.HIERARCHICAL:
            for name in self.theta_names:
                s, d = std_normal_lp(vals[f"z_{name}"])
                lp += s
                gv[f"z_{name}"] += d
                loc, scale = priors.log_loc[name]
                s, d_x, _, _ = normal_lp(vals[f"mu_log_{name}"], loc, scale)
                lp += s
                gv[f"mu_log_{name}"] += d_x
                s, d_x, _ = halfnormal_lp(
                    vals[f"sigma_log_{name}"], priors.log_scale_scale[name]
                )
                lp += s
                gv[f"sigma_log_{name}"] += d_x

            sigma_a = vals["sigma_a"]
            s, d_x, _ = halfnormal_lp(sigma_a, priors.a_scale_scale)
            lp += s
            gv["sigma_a"] += d_x

            if spec.mode is HierarchyMode.BETWEEN_GROUPS:
                mu_a_g = vals["mu_a_g"]
                s, d_x, d_loc, d_scale = truncnorm0_lp(
                    vals["a"], mu_a_g[self.gm_of_cell], sigma_a
                )
                lp += s
                gv["a"] += d_x
                gv["mu_a_g"] += np.bincount(
                    self.gm_of_cell, weights=d_loc, minlength=self.n_groups * self.n_muscles
                )
                gv["sigma_a"] += float(d_scale.sum())
                s, d_x, d_loc, d_scale = truncnorm0_lp(
                    mu_a_g, vals["mu_mu_a"], vals["sigma_mu_a"]
                )
                lp += s
                gv["mu_a_g"] += d_x
                gv["mu_mu_a"] += float(d_loc.sum())
                gv["sigma_mu_a"] += float(d_scale.sum())
                s, d_x, _, _ = truncnorm0_lp(vals["mu_mu_a"], priors.a_loc, priors.a_loc_scale)
                lp += s
                gv["mu_mu_a"] += d_x
                s, d_x, _ = halfnormal_lp(vals["sigma_mu_a"], priors.a_scale_scale)
                lp += s
                gv["sigma_mu_a"] += d_x
            elif spec.mode is HierarchyMode.WITHIN_PARTICIPANT:
                s, d_x, d_loc, d_scale = truncnorm0_lp(
                    vals["a_fixed"], vals["mu_a"][self.muscle_of_fixed], sigma_a
                )
                lp += s
                gv["a_fixed"] += d_x
                gv["mu_a"] += np.bincount(
                    self.muscle_of_fixed, weights=d_loc, minlength=self.n_muscles
                )
                gv["sigma_a"] += float(d_scale.sum())
                s, d_x, _, _ = truncnorm0_lp(vals["mu_a"], priors.a_loc, priors.a_loc_scale)
                lp += s
                gv["mu_a"] += d_x

                s, d = std_normal_lp(vals["z_a_delta"])
                lp += s
                gv["z_a_delta"] += d
                s, d = std_normal_lp(vals["z_mu_a_delta"])
                lp += s
                gv["z_mu_a_delta"] += d
                s, d_x, _, _ = normal_lp(vals["mu_mu_a_delta"], 0.0, priors.shift_loc_scale)
                lp += s
                gv["mu_mu_a_delta"] += d_x
                s, d_x, _ = halfnormal_lp(vals["sigma_a_delta"], priors.shift_scale_scale)
                lp += s
                gv["sigma_a_delta"] += d_x
                s, d_x, _ = halfnormal_lp(vals["sigma_mu_a_delta"], priors.shift_scale_scale)
                lp += s
                gv["sigma_mu_a_delta"] += d_x
            else:
                s, d_x, d_loc, d_scale = truncnorm0_lp(
                    vals["a"], vals["mu_a"][self.muscle_of_cell], sigma_a
                )
                lp += s
                gv["a"] += d_x
                gv["mu_a"] += np.bincount(
                    self.muscle_of_cell, weights=d_loc, minlength=self.n_muscles
                )
                gv["sigma_a"] += float(d_scale.sum())
                s, d_x, _, _ = truncnorm0_lp(vals["mu_a"], priors.a_loc, priors.a_loc_scale)
                lp += s
                gv["mu_a"] += d_x
        elif spec.pooling is Pooling.NONE:
            s, d_x, _, _ = truncnorm0_lp(vals["a"], priors.a_loc, priors.a_loc_scale)
            lp += s
            gv["a"] += d_x
            for name in self.theta_names:
                loc, scale = priors.log_loc[name]
                s, d_x, _, _ = normal_lp(vals[f"log_{name}"], loc, scale)
                lp += s
                gv[f"log_{name}"] += d_x
        else:
            # Uniform priors contribute a constant inside their bounds.
            pass

        if spec.mixture:
            # p_outlier ~ Uniform(0, cap): constant density.
            s, d_x, _ = halfnormal_lp(vals["sigma_outlier"], self.mixture_sigma_caps)
            lp += s
            gv["sigma_outlier"] += d_x
        return lp

    # -- pointwise likelihood and initialization -------------------------------

    def pointwise_loglik(self, cp: dict[str, np.ndarray]) -> np.ndarray:
        """Per-observation log-likelihood for one draw of cell parameters."""
        idx = self.cell_index
        gathered = {name: np.asarray(cp[name])[idx] for name in self.param_names}
        mu = curves.eval_arrays(self.kind, self.x, **gathered)
        c1 = np.asarray(cp["c1"])[idx]
        c2 = np.asarray(cp["c2"])[idx]
        if self.spec.mixture:
            sigma_o = np.asarray(cp["sigma_outlier"])[self.muscle_of_obs]
            ll, *_ = mixture_loglik_grads(
                self.y, self.log_y, mu, c1, c2, float(np.asarray(cp["p_outlier"]).reshape(-1)[0]), sigma_o
            )
        else:
            ll, *_ = gamma_loglik_grads(self.y, self.log_y, mu, c1, c2)
        return ll

    def initial_params(self) -> dict[str, np.ndarray]:
        """A sensible starting point in constrained space (before jitter)."""
        spec, priors = self.spec, self.priors
        data = self.data
        mid = 0.5 * float(data.intensity.min() + data.intensity.max())
        mid = max(mid, 1.0)
        vals: dict[str, np.ndarray] = {}
        if spec.pooling is Pooling.HIERARCHICAL:
            if spec.mode is HierarchyMode.BETWEEN_GROUPS:
                vals["mu_mu_a"] = np.array([mid])
                vals["sigma_mu_a"] = np.array([0.5 * priors.a_scale_scale])
                vals["mu_a_g"] = np.full(self.n_groups * self.n_muscles, mid)
            else:
                vals["mu_a"] = np.full(self.n_muscles, mid)
            vals["sigma_a"] = np.array([0.5 * priors.a_scale_scale])
            if spec.mode is HierarchyMode.WITHIN_PARTICIPANT:
                vals["a_fixed"] = np.full(self.n_fixed, mid)
                vals["mu_mu_a_delta"] = np.array([0.0])
                vals["sigma_mu_a_delta"] = np.array([0.5 * priors.shift_scale_scale])
                vals["z_mu_a_delta"] = np.zeros(self.n_shift_levels)
                vals["sigma_a_delta"] = np.array([0.5 * priors.shift_scale_scale])
                vals["z_a_delta"] = np.zeros(self.n_delta)
            else:
                vals["a"] = np.full(self.n_cells, mid)
            for name in self.theta_names:
                loc, _ = priors.log_loc[name]
                vals[f"mu_log_{name}"] = np.full(self.n_muscles, loc)
                vals[f"sigma_log_{name}"] = np.array(
                    [0.5 * priors.log_scale_scale[name]]
                )
                vals[f"z_{name}"] = np.zeros(self.n_cells)
        else:
            if spec.pooling is Pooling.UNIFORM:
                a0 = min(max(mid, priors.uniform_a_lo + 1.0), priors.uniform_a_hi - 1.0)
            else:
                a0 = mid
            vals["a"] = np.full(self.n_cells, a0)
            for name in self.theta_names:
                loc, _ = priors.log_loc[name]
                if spec.pooling is Pooling.UNIFORM:
                    loc = min(max(loc, priors.uniform_log_lo + 0.5), priors.uniform_log_hi - 0.5)
                vals[f"log_{name}"] = np.full(self.n_cells, loc)
        if spec.mixture:
            vals["p_outlier"] = np.array([0.5 * spec.mixture_cap_p])
            vals["sigma_outlier"] = 0.5 * self.mixture_sigma_caps.copy()
        return vals

    def initial_position(self, rng, jitter: float = 0.1) -> np.ndarray:
        z = self.unconstrain(self.initial_params())
        return z + jitter * rng.standard_normal(self.dim)


def build(spec: ModelSpec, data: MepDataset, priors: PriorConfig | None = None) -> ModelGraph:
    """Assemble the model graph for a spec and dataset."""
    return ModelGraph(spec, data, priors or PriorConfig())

"""Multi-start Nelder-Mead least-squares curve fitting.

The derivative-free baseline: minimize the residual sum of squares between
observed MEP sizes and a recruitment curve.  The simplex runs in a
transformed space (threshold on the natural scale, every other parameter on
the log scale) so the curve parameters stay positive by construction.
Restarts draw the threshold uniformly over the observed intensity range and
the remaining parameters log-uniformly inside the flat-prior bounds; the
lowest-cost restart wins.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import curves
from .curves import CurveKind, CurveParams
from .errors import DataError, DegenerateDataError


@dataclass(frozen=True)
class NelderMeadConfig:
    restarts: int = 100
    max_iter: int = 500
    cost_tol: float = 1e-10
    simplex_scale: float = 0.25
    log_lo: float = math.log(1e-4)
    log_hi: float = math.log(1e4)

    def __post_init__(self):
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")


def _nelder_mead(cost, u0, scale, max_iter, cost_tol):
    """Plain Nelder-Mead; returns (best point, best cost)."""
    n = u0.size
    simplex = np.tile(u0, (n + 1, 1))
    for i in range(n):
        simplex[i + 1, i] += max(scale, scale * abs(u0[i]))
    values = np.array([cost(p) for p in simplex])

    for _ in range(max_iter):
        order = np.argsort(values, kind="stable")
        simplex = simplex[order]
        values = values[order]
        if values[-1] - values[0] <= cost_tol * (abs(values[0]) + cost_tol):
            break
        centroid = simplex[:-1].mean(axis=0)
        # Reflection.
        xr = centroid + (centroid - simplex[-1])
        fr = cost(xr)
        if fr < values[0]:
            # Expansion.
            xe = centroid + 2.0 * (centroid - simplex[-1])
            fe = cost(xe)
            if fe < fr:
                simplex[-1], values[-1] = xe, fe
            else:
                simplex[-1], values[-1] = xr, fr
        elif fr < values[-2]:
            simplex[-1], values[-1] = xr, fr
        else:
            # Contraction (outside if the reflected point improved the worst).
            if fr < values[-1]:
                xc = centroid + 0.5 * (xr - centroid)
            else:
                xc = centroid + 0.5 * (simplex[-1] - centroid)
            fc = cost(xc)
            if fc < min(fr, values[-1]):
                simplex[-1], values[-1] = xc, fc
            else:
                # Shrink toward the best vertex.
                simplex[1:] = simplex[0] + 0.5 * (simplex[1:] - simplex[0])
                values[1:] = [cost(p) for p in simplex[1:]]
    best = int(np.argmin(values))
    return simplex[best], float(values[best])


def nelder_mead_fit(
    x,
    y,
    kind: CurveKind,
    cfg: NelderMeadConfig,
    rng,
) -> tuple[CurveParams, float]:
    """Best-of-restarts least-squares fit of one recruitment curve."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    names = curves.PARAM_NAMES[kind]
    arity = len(names)
    if x.size < arity + 1:
        raise DataError(f"need at least {arity + 1} observations to fit {kind.value}")
    x_lo, x_hi = float(x.min()), float(x.max())
    if x_hi == x_lo:
        raise DegenerateDataError("all intensities identical; curve not identifiable")

    def unpack(u):
        values = [u[0]] + [math.exp(t) for t in u[1:]]
        return {name: val for name, val in zip(names, values)}

    def cost(u):
        p = unpack(u)
        if not all(np.isfinite(v) and v > 0.0 for v in p.values()):
            return np.inf
        mu = curves.eval_arrays(kind, x, **p)
        r = y - mu
        return float(np.dot(r, r))

    best_u, best_cost = None, np.inf
    for _ in range(cfg.restarts):
        u0 = np.empty(arity)
        u0[0] = rng.uniform(x_lo, x_hi)
        u0[1:] = rng.uniform(cfg.log_lo, cfg.log_hi, size=arity - 1)
        u, c = _nelder_mead(cost, u0, cfg.simplex_scale, cfg.max_iter, cfg.cost_tol)
        if c < best_cost:
            best_u, best_cost = u, c
    params = CurveParams(**unpack(best_u))
    return params, best_cost

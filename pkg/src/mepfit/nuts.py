"""No-U-Turn sampler with dual-averaging and diagonal mass adaptation.

Multinomial variant: the next state is drawn from the whole trajectory tree
with weights proportional to the canonical density, using progressive
(biased toward the newer half) sampling while the tree doubles.  Trajectory
growth stops at a sub-tree U-turn, a divergence (energy error above 1000),
or the maximum tree depth.

Warmup interleaves dual-averaging step-size adaptation with expanding
windows that estimate a diagonal mass matrix from the warmup draws, then
freezes both.  Chains run sequentially, each on an independent generator
spawned from the seed, so results are bitwise reproducible.

The sampler only requires a target exposing ``dim`` and
``log_joint_grad(z) -> (float, ndarray)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import AllDivergentError, NonFiniteGradientError

_DIVERGENCE_ENERGY = 1000.0


@dataclass(frozen=True)
class NutsConfig:
    chains: int = 4
    warmup: int = 1000
    draws: int = 1000
    target_accept: float = 0.8
    max_tree_depth: int = 10
    seed: int = 0
    init_jitter: float = 0.1

    def __post_init__(self):
        if self.chains < 1 or self.draws < 1 or self.warmup < 0:
            raise ValueError("chains and draws must be >= 1, warmup >= 0")
        if not (0.0 < self.target_accept < 1.0):
            raise ValueError("target_accept must be in (0, 1)")
        if not (1 <= self.max_tree_depth <= 15):
            raise ValueError("max_tree_depth must be in [1, 15]")

    def to_dict(self) -> dict:
        return {
            "chains": self.chains,
            "warmup": self.warmup,
            "draws": self.draws,
            "target_accept": self.target_accept,
            "max_tree_depth": self.max_tree_depth,
            "seed": self.seed,
            "init_jitter": self.init_jitter,
        }


@dataclass
class ChainResult:
    positions: np.ndarray  # (draws, dim) unconstrained
    divergent: np.ndarray
    tree_depth: np.ndarray
    n_leapfrog: np.ndarray
    energy: np.ndarray
    accept_stat: np.ndarray
    step_size: float
    inv_mass: np.ndarray


def leapfrog(z, r, grad, eps, inv_mass, target):
    """One leapfrog step; returns (z', r', lp', grad')."""
    r_half = r + 0.5 * eps * grad
    z_new = z + eps * (inv_mass * r_half)
    lp_new, grad_new = target.log_joint_grad(z_new)
    if not np.isfinite(lp_new) or not np.all(np.isfinite(grad_new)):
        return z_new, r_half, -np.inf, np.zeros_like(grad_new)
    r_new = r_half + 0.5 * eps * grad_new
    return z_new, r_new, lp_new, grad_new


def _kinetic(r, inv_mass):
    return 0.5 * float(np.dot(r, inv_mass * r))


class _Tree:
    """Sub-trajectory summary used while doubling."""

    __slots__ = (
        "z_minus", "r_minus", "grad_minus",
        "z_plus", "r_plus", "grad_plus",
        "z_prop", "lp_prop", "grad_prop", "h_prop",
        "log_w", "divergent", "turning", "sum_alpha", "n_alpha", "n_leapfrog",
    )


def _build_tree(target, rng, z, r, grad, direction, depth, eps, inv_mass, h0):
    if depth == 0:
        z1, r1, lp1, grad1 = leapfrog(z, r, grad, direction * eps, inv_mass, target)
        h1 = -lp1 + _kinetic(r1, inv_mass) if np.isfinite(lp1) else np.inf
        energy_error = h1 - h0
        tree = _Tree()
        tree.z_minus = tree.z_plus = tree.z_prop = z1
        tree.r_minus = tree.r_plus = r1
        tree.grad_minus = tree.grad_plus = tree.grad_prop = grad1
        tree.lp_prop = lp1
        tree.h_prop = h1
        tree.divergent = (not np.isfinite(h1)) or energy_error > _DIVERGENCE_ENERGY
        tree.turning = False
        tree.log_w = -energy_error if np.isfinite(energy_error) else -np.inf
        alpha = np.exp(min(0.0, -energy_error)) if np.isfinite(energy_error) else 0.0
        tree.sum_alpha = alpha
        tree.n_alpha = 1
        tree.n_leapfrog = 1
        return tree

    first = _build_tree(target, rng, z, r, grad, direction, depth - 1, eps, inv_mass, h0)
    if first.divergent or first.turning:
        return first
    if direction > 0:
        z_edge, r_edge, grad_edge = first.z_plus, first.r_plus, first.grad_plus
    else:
        z_edge, r_edge, grad_edge = first.z_minus, first.r_minus, first.grad_minus
    second = _build_tree(
        target, rng, z_edge, r_edge, grad_edge, direction, depth - 1, eps, inv_mass, h0
    )

    first.n_leapfrog += second.n_leapfrog
    first.sum_alpha += second.sum_alpha
    first.n_alpha += second.n_alpha
    if direction > 0:
        first.z_plus, first.r_plus, first.grad_plus = second.z_plus, second.r_plus, second.grad_plus
    else:
        first.z_minus, first.r_minus, first.grad_minus = second.z_minus, second.r_minus, second.grad_minus

    if second.divergent or second.turning:
        first.divergent = second.divergent
        first.turning = second.turning
        return first

    # Multinomial draw between the two halves.
    total = np.logaddexp(first.log_w, second.log_w)
    if np.isfinite(second.log_w) and rng.random() < np.exp(second.log_w - total):
        first.z_prop = second.z_prop
        first.lp_prop = second.lp_prop
        first.grad_prop = second.grad_prop
        first.h_prop = second.h_prop
    first.log_w = total
    first.turning = _is_turning(
        first.z_minus, first.r_minus, first.z_plus, first.r_plus, inv_mass
    )
    return first


def _is_turning(z_minus, r_minus, z_plus, r_plus, inv_mass):
    dz = z_plus - z_minus
    return (
        float(np.dot(dz, inv_mass * r_minus)) <= 0.0
        or float(np.dot(dz, inv_mass * r_plus)) <= 0.0
    )


def _transition(target, rng, z, lp, grad, eps, inv_mass, max_depth):
    mass_sd = 1.0 / np.sqrt(inv_mass)
    r0 = mass_sd * rng.standard_normal(z.shape[0])
    h0 = -lp + _kinetic(r0, inv_mass)

    z_minus = z_plus = z
    r_minus = r_plus = r0
    grad_minus = grad_plus = grad
    z_prop, lp_prop, grad_prop, h_prop = z, lp, grad, h0
    log_w = 0.0
    sum_alpha = 0.0
    n_alpha = 0
    n_leapfrog = 0
    divergent = False
    depth = 0

    while depth < max_depth:
        direction = 1 if rng.random() < 0.5 else -1
        if direction > 0:
            tree = _build_tree(
                target, rng, z_plus, r_plus, grad_plus, 1, depth, eps, inv_mass, h0
            )
            z_plus, r_plus, grad_plus = tree.z_plus, tree.r_plus, tree.grad_plus
        else:
            tree = _build_tree(
                target, rng, z_minus, r_minus, grad_minus, -1, depth, eps, inv_mass, h0
            )
            z_minus, r_minus, grad_minus = tree.z_minus, tree.r_minus, tree.grad_minus

        sum_alpha += tree.sum_alpha
        n_alpha += tree.n_alpha
        n_leapfrog += tree.n_leapfrog

        if tree.divergent:
            divergent = True
            break
        if tree.turning:
            break

        # Biased progressive sampling: favor the newer half of the trajectory.
        if np.isfinite(tree.log_w) and (
            tree.log_w >= log_w or rng.random() < np.exp(tree.log_w - log_w)
        ):
            z_prop, lp_prop, grad_prop, h_prop = (
                tree.z_prop, tree.lp_prop, tree.grad_prop, tree.h_prop,
            )
        log_w = np.logaddexp(log_w, tree.log_w)
        depth += 1

        if _is_turning(z_minus, r_minus, z_plus, r_plus, inv_mass):
            break

    accept_stat = sum_alpha / n_alpha if n_alpha > 0 else 0.0
    return z_prop, lp_prop, grad_prop, {
        "divergent": divergent,
        "tree_depth": depth,
        "n_leapfrog": n_leapfrog,
        "energy": h_prop,
        "accept_stat": accept_stat,
    }


def find_reasonable_step_size(target, rng, z, lp, grad, inv_mass):
    """Step-size init heuristic: double/halve until the one-step acceptance
    probability crosses 1/2."""
    eps = 1.0
    mass_sd = 1.0 / np.sqrt(inv_mass)
    r0 = mass_sd * rng.standard_normal(z.shape[0])
    h0 = -lp + _kinetic(r0, inv_mass)

    def log_ratio(eps):
        z1, r1, lp1, grad1 = leapfrog(z, r0, grad, eps, inv_mass, target)
        if not np.isfinite(lp1):
            return -np.inf
        return h0 - (-lp1 + _kinetic(r1, inv_mass))

    lr = log_ratio(eps)
    direction = 1.0 if lr > np.log(0.5) else -1.0
    for _ in range(60):
        eps = eps * (2.0 ** direction)
        lr = log_ratio(eps)
        if direction > 0 and not (lr > np.log(0.5)):
            break
        if direction < 0 and not (lr <= np.log(0.5)):
            break
        if eps > 1e7 or eps < 1e-10:
            break
    return float(np.clip(eps, 1e-10, 1e7))


@dataclass
class _DualAveraging:
    target: float
    mu: float = 0.0
    log_eps_bar: float = 0.0
    h_bar: float = 0.0
    count: int = 1
    gamma: float = 0.05
    t0: float = 10.0
    kappa: float = 0.75

    def restart(self, eps: float):
        self.mu = float(np.log(10.0 * eps))
        self.log_eps_bar = 0.0
        self.h_bar = 0.0
        self.count = 1

    def update(self, accept_stat: float) -> float:
        frac = 1.0 / (self.count + self.t0)
        self.h_bar = (1.0 - frac) * self.h_bar + frac * (self.target - accept_stat)
        log_eps = self.mu - np.sqrt(self.count) / self.gamma * self.h_bar
        eta = self.count ** (-self.kappa)
        self.log_eps_bar = eta * log_eps + (1.0 - eta) * self.log_eps_bar
        self.count += 1
        return float(np.exp(log_eps))

    def adapted(self) -> float:
        return float(np.exp(self.log_eps_bar))


def _adaptation_schedule(warmup: int):
    """(step-size-only init, list of slow-window lengths, terminal buffer)."""
    if warmup < 20:
        return warmup, [], 0
    if warmup < 150:
        init = int(0.15 * warmup)
        term = int(0.10 * warmup)
        return init, [warmup - init - term], term
    init, term, base = 75, 50, 25
    slow_total = warmup - init - term
    windows = []
    w = base
    while sum(windows) + w < slow_total:
        windows.append(w)
        w *= 2
    windows.append(slow_total - sum(windows))
    return init, windows, term


class _Welford:
    def __init__(self, dim):
        self.n = 0
        self.mean = np.zeros(dim)
        self.m2 = np.zeros(dim)

    def push(self, x):
        self.n += 1
        delta = x - self.mean
        self.mean += delta / self.n
        self.m2 += delta * (x - self.mean)

    def variance(self):
        if self.n < 2:
            return np.ones_like(self.mean)
        var = self.m2 / (self.n - 1)
        # Shrink toward a small diagonal so early windows stay stable.
        w = self.n / (self.n + 5.0)
        return w * var + (1.0 - w) * 1e-3


def run_chain(target, cfg: NutsConfig, rng, z0=None) -> ChainResult:
    dim = target.dim
    if z0 is None:
        if hasattr(target, "initial_position"):
            z = np.asarray(target.initial_position(rng, cfg.init_jitter), dtype=float)
        else:
            z = cfg.init_jitter * rng.standard_normal(dim)
    else:
        z = np.asarray(z0, dtype=float).copy()

    lp, grad = target.log_joint_grad(z)
    if not np.isfinite(lp) or not np.all(np.isfinite(grad)):
        raise NonFiniteGradientError("log density or gradient not finite at the initial point")

    inv_mass = np.ones(dim)
    eps = find_reasonable_step_size(target, rng, z, lp, grad, inv_mass)
    da = _DualAveraging(target=cfg.target_accept)
    da.restart(eps)

    init_buf, slow_windows, term_buf = _adaptation_schedule(cfg.warmup)
    boundaries = []
    acc = init_buf
    for w in slow_windows:
        acc += w
        boundaries.append(acc)
    welford = _Welford(dim) if slow_windows else None
    window_i = 0

    for it in range(cfg.warmup):
        z, lp, grad, stats = _transition(
            target, rng, z, lp, grad, eps, inv_mass, cfg.max_tree_depth
        )
        eps = da.update(stats["accept_stat"])
        in_slow = slow_windows and init_buf <= it < boundaries[-1]
        if in_slow:
            welford.push(z)
        if window_i < len(boundaries) and it + 1 == boundaries[window_i]:
            inv_mass = welford.variance()
            welford = _Welford(dim)
            window_i += 1
            eps = da.adapted()
            da.restart(eps)
    if cfg.warmup > 0:
        eps = da.adapted()

    positions = np.empty((cfg.draws, dim))
    divergent = np.zeros(cfg.draws, dtype=bool)
    tree_depth = np.zeros(cfg.draws, dtype=np.int64)
    n_leapfrog = np.zeros(cfg.draws, dtype=np.int64)
    energy = np.zeros(cfg.draws)
    accept_stat = np.zeros(cfg.draws)
    for it in range(cfg.draws):
        z, lp, grad, stats = _transition(
            target, rng, z, lp, grad, eps, inv_mass, cfg.max_tree_depth
        )
        positions[it] = z
        divergent[it] = stats["divergent"]
        tree_depth[it] = stats["tree_depth"]
        n_leapfrog[it] = stats["n_leapfrog"]
        energy[it] = stats["energy"]
        accept_stat[it] = stats["accept_stat"]

    return ChainResult(
        positions=positions,
        divergent=divergent,
        tree_depth=tree_depth,
        n_leapfrog=n_leapfrog,
        energy=energy,
        accept_stat=accept_stat,
        step_size=eps,
        inv_mass=inv_mass,
    )


def nuts_sample(target, cfg: NutsConfig, z0=None) -> list[ChainResult]:
    """Run ``cfg.chains`` chains sequentially on independent RNG streams.

    Raises ``AllDivergentError`` if every post-warmup transition of every
    chain diverged.
    """
    results = []
    for chain in range(cfg.chains):
        rng = np.random.default_rng(
            np.random.SeedSequence(entropy=cfg.seed, spawn_key=(chain,))
        )
        results.append(run_chain(target, cfg, rng, z0=z0))
    if all(r.divergent.all() for r in results):
        raise AllDivergentError("every post-warmup transition diverged")
    return results

"""Gamma observation model for MEP size, and its outlier-mixture extension.

MEP size ``y`` given an expected size ``mu`` follows a gamma distribution in
shape-rate form with shape ``mu * beta`` and rate ``beta``, where the rate is
a linear function of ``1 / mu`` with positive weights ``1/c1`` and ``1/c2``.
The mean is therefore exactly ``mu`` and the variance ``mu / beta`` grows
with ``mu`` (heteroskedastic spread).

The mixture extension replaces the gamma with a two-component mixture of the
gamma and a broad half-normal; the discrete component indicator is
marginalized analytically so the density stays differentiable, and the
posterior responsibility of the half-normal component is exposed as a
per-observation outlier probability.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InvalidParamsError
from .special import digamma, gammaln

_LOG_HALF_NORMAL_CONST = 0.5 * np.log(2.0 / np.pi)


@dataclass(frozen=True)
class ObservationParams:
    """Positive scale constants of the rate function beta = 1/c1 + 1/(c2*mu)."""

    c1: float
    c2: float

    def __post_init__(self):
        if not (self.c1 > 0.0 and self.c2 > 0.0):
            raise InvalidParamsError("c1 and c2 must be > 0")


@dataclass(frozen=True)
class MixtureConfig:
    """Caps for the mixture's learnable parameters.

    ``cap_p_outlier`` bounds the outlier probability (typically 0.01-0.05).
    ``cap_sigma_outlier`` scales the half-normal prior on the outlier spread
    and should reflect the expected range of outlying MEP sizes.
    """

    cap_p_outlier: float = 0.05
    cap_sigma_outlier: float = 10.0

    def __post_init__(self):
        if not (0.0 < self.cap_p_outlier < 1.0):
            raise InvalidParamsError("cap_p_outlier must be in (0, 1)")
        if not self.cap_sigma_outlier > 0.0:
            raise InvalidParamsError("cap_sigma_outlier must be > 0")


@dataclass(frozen=True)
class MixtureParams:
    """Realized mixture parameters: outlier weight and half-normal scale."""

    p_outlier: float
    sigma_outlier: float

    def __post_init__(self):
        if not (0.0 <= self.p_outlier <= 1.0):
            raise InvalidParamsError("p_outlier must be in [0, 1]")
        if not self.sigma_outlier > 0.0:
            raise InvalidParamsError("sigma_outlier must be > 0")


def rate(mu, obs: ObservationParams):
    """Gamma rate beta = 1/c1 + 1/(c2*mu); strictly positive for mu > 0."""
    mu = np.asarray(mu, dtype=float)
    if np.any(mu <= 0.0):
        raise DomainError("expected MEP size mu must be > 0")
    out = 1.0 / obs.c1 + 1.0 / (obs.c2 * mu)
    if out.ndim == 0:
        return float(out)
    return out


def gamma_logpdf(y, mu, obs: ObservationParams):
    """Log density of Gamma(shape = mu*beta, rate = beta) at y > 0."""
    y = np.asarray(y, dtype=float)
    mu = np.asarray(mu, dtype=float)
    if np.any(y <= 0.0):
        raise DomainError("MEP size y must be > 0")
    if np.any(mu <= 0.0):
        raise DomainError("expected MEP size mu must be > 0")
    ll, _, _, _ = gamma_loglik_grads(y, np.log(y), mu, obs.c1, obs.c2)
    if ll.ndim == 0:
        return float(ll)
    return ll


def halfnormal_logpdf(y, sigma):
    """Log density of a half-normal with scale sigma on (0, inf)."""
    y = np.asarray(y, dtype=float)
    if np.any(y <= 0.0):
        raise DomainError("half-normal support is y > 0")
    out = _LOG_HALF_NORMAL_CONST - np.log(sigma) - 0.5 * (y / sigma) ** 2
    if out.ndim == 0:
        return float(out)
    return out


def mixture_logpdf(y, mu, obs: ObservationParams, mix: MixtureParams):
    """Log density of the gamma + half-normal mixture, via log-sum-exp."""
    lg = gamma_logpdf(y, mu, obs)
    if mix.p_outlier == 0.0:
        return lg
    lh = halfnormal_logpdf(y, mix.sigma_outlier)
    if mix.p_outlier == 1.0:
        return lh
    out = np.logaddexp(
        np.log1p(-mix.p_outlier) + lg, np.log(mix.p_outlier) + lh
    )
    if np.ndim(out) == 0:
        return float(out)
    return out


def outlier_probability(y, mu, obs: ObservationParams, mix: MixtureParams):
    """Posterior responsibility of the half-normal (outlier) component."""
    lg = gamma_logpdf(y, mu, obs)
    if mix.p_outlier == 0.0:
        return np.zeros_like(np.asarray(y, dtype=float)) if np.ndim(y) else 0.0
    if mix.p_outlier == 1.0:
        return np.ones_like(np.asarray(y, dtype=float)) if np.ndim(y) else 1.0
    lh = halfnormal_logpdf(y, mix.sigma_outlier)
    lg_w = np.log1p(-mix.p_outlier) + lg
    lh_w = np.log(mix.p_outlier) + lh
    out = np.exp(lh_w - np.logaddexp(lg_w, lh_w))
    if np.ndim(out) == 0:
        return float(out)
    return out


def sample(mu, obs: ObservationParams, mix: MixtureParams | None, rng):
    """Draw MEP sizes at expected size ``mu`` (scalar or array).

    With a mixture, component membership is Bernoulli(p_outlier) per
    observation.  The RNG stream is consumed in a fixed order (component
    uniforms, then gamma draws, then half-normal magnitudes) so that seeded
    runs are exactly reproducible.
    """
    mu = np.asarray(mu, dtype=float)
    if np.any(mu <= 0.0):
        raise DomainError("expected MEP size mu must be > 0")
    beta = 1.0 / obs.c1 + 1.0 / (obs.c2 * mu)
    shape = mu * beta
    if mix is None or mix.p_outlier == 0.0:
        out = rng.gamma(shape=shape, scale=1.0 / beta)
    else:
        is_outlier = rng.random(size=mu.shape) < mix.p_outlier
        body = rng.gamma(shape=shape, scale=1.0 / beta)
        tail = np.abs(rng.normal(0.0, mix.sigma_outlier, size=mu.shape))
        out = np.where(is_outlier, tail, body)
    if out.ndim == 0:
        return float(out)
    return out


# -- gradient kernels for the model log-density ------------------------------


def gamma_loglik_grads(y, log_y, mu, c1, c2):
    """Gamma log-likelihood and its partials w.r.t. (mu, c1, c2).

    All inputs may broadcast; no domain validation (hot path).  ``log_y``
    is passed in because callers precompute it once per dataset.
    """
    beta = 1.0 / c1 + 1.0 / (c2 * mu)
    alpha = mu / c1 + 1.0 / c2
    log_beta = np.log(beta)
    ll = alpha * log_beta - gammaln(alpha) + (alpha - 1.0) * log_y - beta * y
    g_alpha = log_beta - digamma(alpha) + log_y
    g_beta = alpha / beta - y
    d_mu = g_alpha / c1 - g_beta / (c2 * mu * mu)
    d_c1 = -(g_alpha * mu + g_beta) / (c1 * c1)
    d_c2 = -(g_alpha + g_beta / mu) / (c2 * c2)
    return ll, d_mu, d_c1, d_c2


def mixture_loglik_grads(y, log_y, mu, c1, c2, p_outlier, sigma_outlier):
    """Mixture log-likelihood and partials w.r.t. (mu, c1, c2, p, sigma).

    The gamma-component partials come back already weighted by the gamma
    responsibility; the ``p`` and ``sigma`` partials are per-observation.
    """
    lg, d_mu, d_c1, d_c2 = gamma_loglik_grads(y, log_y, mu, c1, c2)
    lh = _LOG_HALF_NORMAL_CONST - np.log(sigma_outlier) - 0.5 * (y / sigma_outlier) ** 2
    lg_w = np.log1p(-p_outlier) + lg
    lh_w = np.log(p_outlier) + lh
    ll = np.logaddexp(lg_w, lh_w)
    r_g = np.exp(lg_w - ll)
    r_h = np.exp(lh_w - ll)
    d_p = -r_g / (1.0 - p_outlier) + r_h / p_outlier
    d_sigma = r_h * (-1.0 + (y / sigma_outlier) ** 2) / sigma_outlier
    return ll, r_g * d_mu, r_g * d_c1, r_g * d_c2, d_p, d_sigma

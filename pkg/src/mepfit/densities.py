"""Prior log-density terms with analytic gradients.

Every function returns the summed log density plus elementwise partials with
respect to the value and (where applicable) the location and scale, so the
model graph can accumulate gradients for sampled hyperparameters.
"""

from __future__ import annotations

import numpy as np
from scipy.special import log_ndtr

_HALF_LOG_2PI = 0.5 * np.log(2.0 * np.pi)
_LOG_2 = float(np.log(2.0))
_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


def normal_lp(x, loc, scale):
    """Normal log density. Returns (sum, d_x, d_loc, d_scale)."""
    z = (x - loc) / scale
    lp = -_HALF_LOG_2PI - np.log(scale) - 0.5 * z * z
    d_x = -z / scale
    d_scale = (z * z - 1.0) / scale
    return float(np.sum(lp)), d_x, -d_x, d_scale


def std_normal_lp(x):
    """Standard normal log density. Returns (sum, d_x)."""
    lp = -_HALF_LOG_2PI - 0.5 * x * x
    return float(np.sum(lp)), -x


def halfnormal_lp(x, scale):
    """Half-normal log density on (0, inf). Returns (sum, d_x, d_scale)."""
    z = x / scale
    lp = _LOG_2 - _HALF_LOG_2PI - np.log(scale) - 0.5 * z * z
    d_x = -x / (scale * scale)
    d_scale = (z * z - 1.0) / scale
    return float(np.sum(lp)), d_x, d_scale


def truncnorm0_lp(x, loc, scale):
    """Normal truncated to (0, inf), log density at x > 0.

    The normalizer log(Phi(loc/scale)) depends on loc and scale, so its
    gradient (the inverse Mills ratio) is included in d_loc / d_scale.
    Returns (sum, d_x, d_loc, d_scale).
    """
    z = (x - loc) / scale
    t = loc / scale
    log_phi_t = log_ndtr(t)
    lp = -_HALF_LOG_2PI - np.log(scale) - 0.5 * z * z - log_phi_t
    # phi(t) / Phi(t), computed in log space for stability in the tail.
    mills = np.exp(-_HALF_LOG_2PI - 0.5 * t * t - log_phi_t)
    d_x = -z / scale
    d_loc = z / scale - mills / scale
    d_scale = (z * z - 1.0) / scale + mills * loc / (scale * scale)
    return float(np.sum(lp)), d_x, d_loc, d_scale


def normal_cdf(x):
    """Standard normal CDF."""
    return np.exp(log_ndtr(x))


def normal_pdf(x):
    """Standard normal density."""
    return _INV_SQRT_2PI * np.exp(-0.5 * x * x)

"""Bijections between unconstrained sampler space and constrained parameters.

Each transform maps an unconstrained real vector ``z`` to a constrained
value ``v`` and reports the log-Jacobian terms the joint density needs.
The ``log`` transform clips its argument at +/-300 before exponentiation so
that absurdly large sampler excursions saturate instead of overflowing; the
clip is far outside any parameter range the models can express.
"""

from __future__ import annotations

import numpy as np

from .errors import ConstraintViolationError
from .special import logit, sigmoid

_CLIP = 300.0


class LogTransform:
    """v = exp(z); enforces strict positivity."""

    tag = "log"

    def constrain(self, z):
        return np.exp(np.clip(z, -_CLIP, _CLIP))

    def unconstrain(self, v):
        v = np.asarray(v, dtype=float)
        if np.any(v <= 0.0) or not np.all(np.isfinite(v)):
            raise ConstraintViolationError("log-transform values must be finite and > 0")
        return np.log(v)

    def log_jacobian(self, z, v):
        # d v / d z = v, so log|J| = sum(z); gradient of log|J| w.r.t. z is 1.
        return float(np.sum(np.clip(z, -_CLIP, _CLIP))), np.ones_like(z)

    def dv_dz(self, z, v):
        return v


class IdentityTransform:
    tag = "identity"

    def constrain(self, z):
        return z

    def unconstrain(self, v):
        v = np.asarray(v, dtype=float)
        if not np.all(np.isfinite(v)):
            raise ConstraintViolationError("values must be finite")
        return v.copy()

    def log_jacobian(self, z, v):
        return 0.0, np.zeros_like(z)

    def dv_dz(self, z, v):
        return np.ones_like(z)


class BoundedLogitTransform:
    """v = lo + (hi - lo) * sigmoid(z); open interval (lo, hi)."""

    tag = "bounded-logit"

    def __init__(self, lo: float, hi: float):
        if not hi > lo:
            raise ValueError("requires hi > lo")
        self.lo = float(lo)
        self.hi = float(hi)
        self._width = float(hi - lo)
        self._log_width = float(np.log(self._width))

    def constrain(self, z):
        return self.lo + self._width * sigmoid(z)

    def unconstrain(self, v):
        v = np.asarray(v, dtype=float)
        if np.any(v <= self.lo) or np.any(v >= self.hi):
            raise ConstraintViolationError(
                f"values must lie strictly inside ({self.lo}, {self.hi})"
            )
        return logit((v - self.lo) / self._width)

    def log_jacobian(self, z, v):
        s = sigmoid(z)
        with np.errstate(divide="ignore"):
            lj = self._log_width + np.log(s) + np.log1p(-s)
        return float(np.sum(lj)), 1.0 - 2.0 * s

    def dv_dz(self, z, v):
        s = sigmoid(z)
        return self._width * s * (1.0 - s)

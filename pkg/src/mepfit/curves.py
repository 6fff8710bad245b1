"""Recruitment-curve function family.

Four non-decreasing curve shapes mapping stimulation intensity to expected
MEP size:

* ``rectified_linear``   -- offset plus rectified linear growth; has a
  threshold parameter but no saturation.
* ``logistic4``          -- Boltzmann sigmoid; symmetric about its midpoint,
  whose location is the ``a`` parameter (the S50).
* ``logistic5``          -- generalized logistic with asymmetry parameter
  ``v``; reduces to ``logistic4`` at ``v = 1``.
* ``rectified_logistic`` -- saturating sigmoid with an explicit threshold
  ``a`` and inflection-shape parameter ``ell``.

All evaluations are overflow-safe for exponents ``b * (x - a)`` of magnitude
up to at least 1e4.  At the rectification point of the rectified kinds the
parameter gradient is defined as the sub-threshold one-sided limit (zero for
everything except the offset).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import InvalidParamsError, OutOfRangeError, UnsupportedKindError
from .special import log_expm1, sigmoid, softplus

_LOG2 = float(np.log(2.0))


class CurveKind(Enum):
    RECTIFIED_LINEAR = "rectified_linear"
    LOGISTIC4 = "logistic4"
    LOGISTIC5 = "logistic5"
    RECTIFIED_LOGISTIC = "rectified_logistic"

    @classmethod
    def from_name(cls, name: str) -> "CurveKind":
        for kind in cls:
            if kind.value == name:
                return kind
        raise InvalidParamsError(f"unknown curve kind: {name!r}")


#: Canonical parameter order per kind.
PARAM_NAMES: dict[CurveKind, tuple[str, ...]] = {
    CurveKind.RECTIFIED_LINEAR: ("a", "b", "L"),
    CurveKind.LOGISTIC4: ("a", "b", "L", "H"),
    CurveKind.LOGISTIC5: ("a", "b", "L", "H", "v"),
    CurveKind.RECTIFIED_LOGISTIC: ("a", "b", "L", "ell", "H"),
}

#: Kinds with an upper asymptote L + H.
SATURATING = frozenset(
    {CurveKind.LOGISTIC4, CurveKind.LOGISTIC5, CurveKind.RECTIFIED_LOGISTIC}
)


@dataclass(frozen=True)
class CurveParams:
    """Parameter bundle; only the fields of the bound kind may be set.

    ``a`` is the threshold for the rectified kinds and the S50 for the
    logistic kinds.  ``L`` is the offset, ``L + H`` the saturation, ``b``
    the growth rate, ``ell`` the inflection-shape parameter of
    ``rectified_logistic`` and ``v`` the asymmetry of ``logistic5``.
    """

    a: float | None = None
    b: float | None = None
    L: float | None = None
    H: float | None = None
    ell: float | None = None
    v: float | None = None

    def validate(self, kind: CurveKind) -> None:
        required = PARAM_NAMES[kind]
        for name in required:
            value = getattr(self, name)
            if value is None:
                raise InvalidParamsError(f"{kind.value} requires parameter {name!r}")
            if not np.isfinite(value) or value <= 0.0:
                raise InvalidParamsError(
                    f"parameter {name!r} must be finite and > 0, got {value!r}"
                )
        for name in ("a", "b", "L", "H", "ell", "v"):
            if name not in required and getattr(self, name) is not None:
                raise InvalidParamsError(
                    f"parameter {name!r} is not used by {kind.value}"
                )

    def as_array(self, kind: CurveKind) -> np.ndarray:
        return np.array([getattr(self, n) for n in PARAM_NAMES[kind]], dtype=float)

    @classmethod
    def from_array(cls, kind: CurveKind, values) -> "CurveParams":
        names = PARAM_NAMES[kind]
        if len(values) != len(names):
            raise InvalidParamsError(
                f"{kind.value} takes {len(names)} parameters, got {len(values)}"
            )
        return cls(**dict(zip(names, map(float, values))))


# -- vectorized kernels -----------------------------------------------------
#
# These operate on raw arrays (broadcasting) and are shared between the
# public single-curve API and the model log-density hot path.


def _dsig(u):
    # s * (1 - s) evaluated symmetrically; stable in both tails.
    e = np.exp(-np.abs(u))
    return e / (1.0 + e) ** 2


def eval_rectified_linear(x, a, b, L):
    return L + np.maximum(0.0, b * (x - a))


def eval_logistic4(x, a, b, L, H):
    return L + H * sigmoid(b * (x - a))


def eval_logistic5(x, a, b, L, H, v):
    w = log_expm1(v * _LOG2)
    q = w - b * (x - a)
    return L + H * np.exp(-softplus(q) / v)


def eval_rectified_logistic(x, a, b, L, ell, H):
    u = b * (x - a) - (np.log(H) - np.log(ell))
    inner = -ell + (H + ell) * sigmoid(u)
    return L + np.maximum(0.0, inner)


def grad_rectified_linear(x, a, b, L):
    active = x > a
    mu = L + np.where(active, b * (x - a), 0.0)
    d_a = np.where(active, -b, 0.0)
    d_b = np.where(active, x - a, 0.0)
    d_L = np.ones_like(mu)
    return mu, (d_a, d_b, d_L)


def grad_logistic4(x, a, b, L, H):
    t = b * (x - a)
    s = sigmoid(t)
    ds = _dsig(t)
    mu = L + H * s
    d_a = -b * H * ds
    d_b = (x - a) * H * ds
    d_L = np.ones_like(mu)
    d_H = s
    return mu, (d_a, d_b, d_L, d_H)


def grad_logistic5(x, a, b, L, H, v):
    w = log_expm1(v * _LOG2)
    t = b * (x - a)
    q = w - t
    sp = softplus(q)
    sq = sigmoid(q)
    g = np.exp(-sp / v)
    mu = L + H * g
    core = H * g * sq / v
    d_a = -b * core
    d_b = (x - a) * core
    d_L = np.ones_like(mu)
    d_H = g
    dw_dv = _LOG2 / (-np.expm1(-v * _LOG2))
    d_v = H * g * (sp / v**2 - sq * dw_dv / v)
    return mu, (d_a, d_b, d_L, d_H, d_v)


def grad_rectified_logistic(x, a, b, L, ell, H):
    u = b * (x - a) - (np.log(H) - np.log(ell))
    s = sigmoid(u)
    ds = _dsig(u)
    inner = -ell + (H + ell) * s
    active = (x > a) & (inner > 0.0)
    mu = L + np.where(active, inner, 0.0)
    dint = (H + ell) * ds
    zero = np.zeros_like(mu)
    d_a = np.where(active, -b * dint, zero)
    d_b = np.where(active, (x - a) * dint, zero)
    d_L = np.ones_like(mu)
    d_ell = np.where(active, -1.0 + s + dint / ell, zero)
    d_H = np.where(active, s - dint / H, zero)
    return mu, (d_a, d_b, d_L, d_ell, d_H)


_EVAL = {
    CurveKind.RECTIFIED_LINEAR: eval_rectified_linear,
    CurveKind.LOGISTIC4: eval_logistic4,
    CurveKind.LOGISTIC5: eval_logistic5,
    CurveKind.RECTIFIED_LOGISTIC: eval_rectified_logistic,
}

_GRAD = {
    CurveKind.RECTIFIED_LINEAR: grad_rectified_linear,
    CurveKind.LOGISTIC4: grad_logistic4,
    CurveKind.LOGISTIC5: grad_logistic5,
    CurveKind.RECTIFIED_LOGISTIC: grad_rectified_logistic,
}

# Gradients are returned in *kernel argument order*, which differs from
# PARAM_NAMES only for rectified_logistic (ell before H).
GRAD_PARAM_ORDER: dict[CurveKind, tuple[str, ...]] = {
    CurveKind.RECTIFIED_LINEAR: ("a", "b", "L"),
    CurveKind.LOGISTIC4: ("a", "b", "L", "H"),
    CurveKind.LOGISTIC5: ("a", "b", "L", "H", "v"),
    CurveKind.RECTIFIED_LOGISTIC: ("a", "b", "L", "ell", "H"),
}


def eval_arrays(kind: CurveKind, x, **params):
    """Vectorized evaluation from raw parameter arrays (no validation)."""
    args = [params[n] for n in GRAD_PARAM_ORDER[kind]]
    return _EVAL[kind](x, *args)


def grad_arrays(kind: CurveKind, x, **params):
    """Vectorized (mu, gradients) from raw parameter arrays (no validation).

    Returns gradients as a dict keyed by parameter name.
    """
    names = GRAD_PARAM_ORDER[kind]
    args = [params[n] for n in names]
    mu, grads = _GRAD[kind](x, *args)
    return mu, dict(zip(names, grads))


# -- public single-curve API -------------------------------------------------


def eval(kind: CurveKind, params: CurveParams, x):
    """Expected MEP size at intensity ``x`` (scalar or array)."""
    params.validate(kind)
    x = np.asarray(x, dtype=float)
    out = eval_arrays(kind, x, **{n: getattr(params, n) for n in PARAM_NAMES[kind]})
    if out.ndim == 0:
        return float(out)
    return out


def grad_params(kind: CurveKind, params: CurveParams, x):
    """Partial derivatives of ``eval`` with respect to each present parameter.

    At the rectification point the sub-threshold one-sided derivative is
    returned.  Result maps parameter name to derivative (scalar or array,
    matching ``x``).
    """
    params.validate(kind)
    x = np.asarray(x, dtype=float)
    _, grads = grad_arrays(
        kind, x, **{n: getattr(params, n) for n in PARAM_NAMES[kind]}
    )
    if x.ndim == 0:
        return {n: float(g) for n, g in grads.items()}
    return grads


def s50(kind: CurveKind, params: CurveParams) -> float:
    """Intensity producing half the saturation height above the offset."""
    params.validate(kind)
    if kind is CurveKind.RECTIFIED_LINEAR:
        raise UnsupportedKindError("rectified_linear does not saturate; S50 undefined")
    if kind is CurveKind.RECTIFIED_LOGISTIC:
        return params.a + (np.log(params.H + 2.0 * params.ell) - np.log(params.ell)) / params.b
    # For both logistic kinds the midpoint is the a parameter itself.
    return params.a


def inverse(kind: CurveKind, params: CurveParams, y_target: float) -> float:
    """Intensity at which the curve passes through ``y_target``.

    ``y_target`` must lie strictly between the offset and the saturation
    (for ``rectified_linear``, strictly above the offset).
    """
    params.validate(kind)
    y = float(y_target)
    a, b, L = params.a, params.b, params.L
    if kind is CurveKind.RECTIFIED_LINEAR:
        if y <= L:
            raise OutOfRangeError(f"target {y} not above offset {L}")
        return a + (y - L) / b
    H = params.H
    if not (L < y < L + H):
        raise OutOfRangeError(
            f"target {y} outside open interval ({L}, {L + H})"
        )
    if kind is CurveKind.LOGISTIC4:
        t = np.log(y - L) - np.log(L + H - y)
    elif kind is CurveKind.LOGISTIC5:
        v = params.v
        ln_ratio = np.log1p((L + H - y) / (y - L))
        t = log_expm1(v * _LOG2) - log_expm1(v * ln_ratio)
    else:  # rectified_logistic
        ell = params.ell
        u = np.log(y - L + ell) - np.log(L + H - y)
        t = u + np.log(H) - np.log(ell)
    return a + float(t) / b

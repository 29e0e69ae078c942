"""Levy alpha-stable sampling and closed-form Cauchy/Gaussian densities.

Parameterization is S_alpha(scale, beta, location) with characteristic
function ``exp(i*loc*t - scale**alpha * |t|**alpha)`` in the symmetric case.

.. note::
   At ``alpha == 2`` this gives ``S_2(scale) = N(0, 2 * scale**2)``, i.e. the
   variance is *twice* the squared scale.  A textbook ``N(0, s**2)`` therefore
   corresponds to stable scale ``s / sqrt(2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .exceptions import ParameterError

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


@dataclass(frozen=True)
class StableParams:
    alpha: float
    beta: float = 0.0
    scale: float = 1.0
    location: float = 0.0

    def __post_init__(self):
        check_stable_params(self.alpha, self.beta, self.scale)
        if self.alpha == 2.0 and self.beta != 0.0:
            # skewness has no effect on the Gaussian member
            object.__setattr__(self, "beta", 0.0)


def check_stable_params(alpha, beta=0.0, scale=1.0):
    if not (0.0 < alpha <= 2.0) or not math.isfinite(alpha):
        raise ParameterError(f"alpha must lie in (0, 2], got {alpha!r}")
    if not (-1.0 <= beta <= 1.0):
        raise ParameterError(f"beta must lie in [-1, 1], got {beta!r}")
    if not (scale > 0.0) or not math.isfinite(scale):
        raise ParameterError(f"scale must be positive and finite, got {scale!r}")


def cms_transform(alpha, beta, u, w):
    """Chambers-Mallows-Stuck map from (uniform, exponential) to S_alpha(1, beta, 0).

    ``u`` are Uniform(0, 1) variates and ``w`` Exp(1) variates.  The
    symmetric Cauchy case only uses ``u``.
    """
    u = np.asarray(u, dtype=float)
    v = math.pi * (u - 0.5)
    if alpha == 1.0 and beta == 0.0:
        return np.tan(v)
    w = np.asarray(w, dtype=float)
    if alpha == 1.0:
        half_pi = 0.5 * math.pi
        bv = half_pi + beta * v
        return (bv * np.tan(v) - beta * np.log(half_pi * w * np.cos(v) / bv)) / half_pi
    zeta = beta * math.tan(0.5 * math.pi * alpha)
    b = math.atan(zeta) / alpha
    s = (1.0 + zeta * zeta) ** (0.5 / alpha)
    av = alpha * (v + b)
    return (
        s
        * np.sin(av)
        / np.cos(v) ** (1.0 / alpha)
        * (np.cos(v - av) / w) ** ((1.0 - alpha) / alpha)
    )


def sample_stable(params, rng, size=None):
    """Draw from S_alpha(scale, beta, location).

    Parameters
    ----------
    params : StableParams
    rng : numpy.random.Generator
    size : int or tuple, optional
        Output shape; ``None`` returns a Python float.
    """
    if not isinstance(params, StableParams):
        raise ParameterError("params must be a StableParams instance")
    a, b, c, mu = params.alpha, params.beta, params.scale, params.location
    u = rng.random(size)
    if a == 1.0 and b == 0.0:
        z = cms_transform(a, b, u, None)
        out = mu + c * z
    else:
        w = rng.standard_exponential(size)
        z = cms_transform(a, b, u, w)
        if a == 1.0:
            out = c * z + (2.0 / math.pi) * b * c * math.log(c) + mu
        else:
            out = c * z + mu
    if size is None:
        return float(out)
    return out


def cauchy_logpdf(x, location=0.0, scale=1.0):
    if not scale > 0.0:
        raise ParameterError(f"Cauchy scale must be positive, got {scale!r}")
    d = np.asarray(x, dtype=float) - location
    out = math.log(scale / math.pi) - np.log(scale * scale + d * d)
    return float(out) if np.ndim(out) == 0 else out


def gaussian_logpdf(x, location=0.0, stddev=1.0):
    if not stddev > 0.0:
        raise ParameterError(f"stddev must be positive, got {stddev!r}")
    z = (np.asarray(x, dtype=float) - location) / stddev
    out = -0.5 * z * z - math.log(stddev) - _LOG_SQRT_2PI
    return float(out) if np.ndim(out) == 0 else out


def cauchy_cdf(x, location=0.0, scale=1.0):
    if not scale > 0.0:
        raise ParameterError(f"Cauchy scale must be positive, got {scale!r}")
    out = 0.5 + np.arctan((np.asarray(x, dtype=float) - location) / scale) / math.pi
    return float(out) if np.ndim(out) == 0 else out


def stable_gaussian_cdf(x, location=0.0, scale=1.0):
    """CDF of S_2(scale, 0, location), i.e. N(location, 2 * scale**2)."""
    if not scale > 0.0:
        raise ParameterError(f"scale must be positive, got {scale!r}")
    out = ndtr((np.asarray(x, dtype=float) - location) / (math.sqrt(2.0) * scale))
    return float(out) if np.ndim(out) == 0 else out

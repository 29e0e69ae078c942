"""Cauchy, Gaussian and total-variation difference priors.

All densities are unnormalized.  Each prior is a product over *increments*
``d = x[a] - x[b]`` between lattice neighbours; with a zero boundary the
first site along every axis is also tied to a phantom neighbour fixed at 0.
An axis with a single site contributes no increments, so a one-row lattice
behaves exactly like a 1D grid.

Increment laws, with ``s`` the direction scale from :func:`scale_for_direction`:

* Cauchy:   ``log s - log(s**2 + d**2)``
* Gaussian: ``-d**2 / (4 s**2)``  (stable convention, ``Var d = 2 s**2``)
* TV:       ``-reg * |d|``
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.sparse import csr_matrix

from . import _kernels
from .exceptions import DimensionError, ParameterError
from .grids import Grid1D, Lattice2D
from .stable_dist import check_stable_params

FAMILIES = ("cauchy", "gaussian", "tv")
BOUNDARIES = ("zero", "free")
_FAMILY_CODE = {"cauchy": _kernels.CAUCHY, "gaussian": _kernels.GAUSSIAN, "tv": _kernels.TV}


@dataclass(frozen=True)
class PriorModel:
    """Difference prior specification.

    ``reg`` is lambda for Cauchy, sigma for Gaussian and the weight for TV.
    ``h`` is the step along rows (and the only step in 1D), ``h_prime`` the
    step between rows.
    """

    family: str
    reg: float
    h: float = 1.0
    h_prime: float = 1.0
    boundary: str = "free"

    def __post_init__(self):
        fam = self.family.lower()
        object.__setattr__(self, "family", fam)
        if fam not in FAMILIES:
            raise ParameterError(f"unknown prior family {self.family!r}; expected one of {FAMILIES}")
        if self.boundary not in BOUNDARIES:
            raise ParameterError(f"unknown boundary {self.boundary!r}; expected one of {BOUNDARIES}")
        if not (self.reg > 0 and math.isfinite(self.reg)):
            raise ParameterError(f"regularization scale must be positive, got {self.reg!r}")
        if not (self.h > 0 and self.h_prime > 0):
            raise ParameterError("lattice steps must be positive")

    @property
    def alpha(self):
        return {"cauchy": 1.0, "gaussian": 2.0}.get(self.family)

    @property
    def code(self):
        return _FAMILY_CODE[self.family]


@dataclass(frozen=True)
class ModalityReport:
    classification: str
    second_derivative_at_zero: float
    modes: tuple


@dataclass(frozen=True)
class DifferenceEdges:
    """Increment list ``x[a] - x[b]`` (``b == -1`` means the zero boundary).

    ``site_ptr``/``site_edges`` give, CSR style, the edges touching each site.
    """

    a: np.ndarray
    b: np.ndarray
    scale: np.ndarray
    direction: np.ndarray  # 0 along rows, 1 between rows
    site_ptr: np.ndarray
    site_edges: np.ndarray
    n_sites: int

    @property
    def n_edges(self):
        return self.a.size

    def differences(self, x):
        x = np.asarray(x, dtype=float)
        xb = np.where(self.b >= 0, x[np.maximum(self.b, 0)], 0.0)
        return x[self.a] - xb

    def matrix(self):
        """Sparse difference matrix L with ``L @ x == differences(x)``."""
        rows = np.arange(self.n_edges)
        inner = self.b >= 0
        r = np.concatenate([rows, rows[inner]])
        c = np.concatenate([self.a, self.b[inner]])
        v = np.concatenate([np.ones(self.n_edges), -np.ones(int(inner.sum()))])
        return csr_matrix((v, (r, c)), shape=(self.n_edges, self.n_sites))


def scale_for_direction(alpha, reg, h_along, h_perp):
    """Stable scale of an increment taken along a lattice axis.

    ``reg * h_along**(1/alpha) * h_perp**(-(alpha-1)/alpha)``; gives
    ``reg * h_along`` for Cauchy and ``reg * sqrt(h_along / h_perp)`` for
    the Gaussian.
    """
    check_stable_params(alpha, 0.0, reg)
    if not (h_along > 0 and h_perp > 0):
        raise ParameterError("lattice steps must be positive")
    if alpha == 1.0:
        return reg * h_along
    if alpha == 2.0:
        return reg * math.sqrt(h_along / h_perp)
    return reg * h_along ** (1.0 / alpha) * h_perp ** (-(alpha - 1.0) / alpha)


def _normalize_shape(shape):
    shape = tuple(int(s) for s in shape)
    if len(shape) == 1:
        return (1, shape[0]), True
    if len(shape) == 2:
        return shape, False
    raise DimensionError(f"only 1D and 2D layouts are supported, got shape {shape}")


@lru_cache(maxsize=64)
def difference_edges(shape, prior):
    """Increments of ``prior`` on a 1D ``(n,)`` or 2D ``(ny, nx)`` layout."""
    (ny, nx), is_1d = _normalize_shape(shape)
    n = nx * ny
    if n < 2:
        raise DimensionError("a difference prior needs at least two sites")
    if prior.family == "tv":
        s_row = s_col = 1.0
    elif is_1d:
        s_row = prior.reg * prior.h ** (1.0 / prior.alpha)
        s_col = s_row
    else:
        s_row = scale_for_direction(prior.alpha, prior.reg, prior.h, prior.h_prime)
        s_col = scale_for_direction(prior.alpha, prior.reg, prior.h_prime, prior.h)

    idx = np.arange(n).reshape(ny, nx)
    a_list, b_list, dirs = [], [], []
    if nx > 1:
        a_list.append(idx[:, 1:].ravel())
        b_list.append(idx[:, :-1].ravel())
        dirs.append(np.zeros(ny * (nx - 1), dtype=np.int64))
        if prior.boundary == "zero":
            a_list.append(idx[:, 0])
            b_list.append(np.full(ny, -1))
            dirs.append(np.zeros(ny, dtype=np.int64))
    if ny > 1:
        a_list.append(idx[1:, :].ravel())
        b_list.append(idx[:-1, :].ravel())
        dirs.append(np.ones((ny - 1) * nx, dtype=np.int64))
        if prior.boundary == "zero":
            a_list.append(idx[0, :])
            b_list.append(np.full(nx, -1))
            dirs.append(np.ones(nx, dtype=np.int64))
    a = _kernels.as_index(np.concatenate(a_list))
    b = _kernels.as_index(np.concatenate(b_list))
    direction = np.concatenate(dirs)
    scale = np.where(direction == 0, s_row, s_col).astype(float)

    # CSR incidence: for every site the edges it appears in
    ends = np.concatenate([a, b])
    eids = np.concatenate([np.arange(a.size), np.arange(b.size)])
    keep = ends >= 0
    ends, eids = ends[keep], eids[keep]
    order = np.argsort(ends, kind="stable")
    site_edges = _kernels.as_index(eids[order])
    site_ptr = _kernels.as_index(np.concatenate([[0], np.cumsum(np.bincount(ends, minlength=n))]))
    for arr in (a, b, scale, direction, site_ptr, site_edges):
        arr.setflags(write=False)
    return DifferenceEdges(a, b, scale, direction, site_ptr, site_edges, n)


def _edge_terms(d, edges, prior):
    if prior.family == "cauchy":
        s = edges.scale
        return np.log(s) - np.log(s * s + d * d)
    if prior.family == "gaussian":
        return -d * d / (4.0 * edges.scale ** 2)
    return -prior.reg * np.abs(d)


def log_prior(values, shape, prior):
    """Unnormalized log prior of a flat value vector on ``shape``."""
    values = np.asarray(values, dtype=float).reshape(-1)
    edges = difference_edges(tuple(shape), prior)
    if values.size != edges.n_sites:
        raise DimensionError(f"expected {edges.n_sites} values, got {values.size}")
    return float(np.sum(_edge_terms(edges.differences(values), edges, prior)))


def log_prior_1d(x, prior):
    values = x.values if isinstance(x, Grid1D) else np.asarray(x, dtype=float)
    if values.ndim != 1 or values.size < 2:
        raise DimensionError("a 1D difference prior needs at least two points")
    return log_prior(values, (values.size,), prior)


def log_prior_2d(x, prior):
    if isinstance(x, Lattice2D):
        values, shape = x.values, x.shape
    else:
        img = np.asarray(x, dtype=float)
        if img.ndim != 2:
            raise DimensionError("expected a 2D image or a Lattice2D")
        values, shape = img.ravel(), img.shape
    return log_prior(values, shape, prior)


def log_prior_gradient(values, shape, prior):
    """Gradient of :func:`log_prior` (Cauchy and Gaussian only)."""
    edges = difference_edges(tuple(shape), prior)
    d = edges.differences(values)
    if prior.family == "cauchy":
        psi = -2.0 * d / (edges.scale ** 2 + d * d)
    elif prior.family == "gaussian":
        psi = -d / (2.0 * edges.scale ** 2)
    else:
        raise ParameterError("the TV prior is not differentiable")
    g = np.bincount(edges.a, weights=psi, minlength=edges.n_sites)
    inner = edges.b >= 0
    g -= np.bincount(edges.b[inner], weights=psi[inner], minlength=edges.n_sites)
    return g


def delta_log_prior(x, site, new_value, prior):
    """``log_prior(x with x[site] = new_value) - log_prior(x)`` from local terms.

    ``x`` may be a Grid1D, a Lattice2D, or a 1D/2D array.
    """
    if isinstance(x, Grid1D):
        values, shape = x.values, (x.n,)
    elif isinstance(x, Lattice2D):
        values, shape = x.values, x.shape
    else:
        arr = np.asarray(x, dtype=float)
        values, shape = arr.reshape(-1), arr.shape
    values = np.ascontiguousarray(values, dtype=float)
    site = int(site)
    if not 0 <= site < values.size:
        raise IndexError(f"site {site} out of range for {values.size} sites")
    e = difference_edges(tuple(shape), prior)
    delta = float(new_value) - values[site]
    return _kernels.site_delta_prior(
        values, site, delta, prior.code, float(prior.reg),
        e.a, e.b, e.scale, e.site_ptr, e.site_edges,
    )


def conditional_site_density(a, x):
    """Unnormalized Cauchy density of a middle value between neighbours -a and a."""
    x = np.asarray(x, dtype=float)
    out = 1.0 / ((1.0 + (x - a) ** 2) * (1.0 + (x + a) ** 2))
    return float(out) if out.ndim == 0 else out


def analyze_modality(a):
    """Classify the conditional density by the sign of its curvature at 0.

    The denominator expands to ``(1+a^2)^2 + 2(1-a^2) x^2 + x^4``, so
    ``D''(0) = 4 (a^2 - 1) / (1 + a^2)^4`` and the stationary points solve
    ``x (x^2 + 1 - a^2) = 0``.
    """
    a2 = float(a) * float(a)
    d2 = 4.0 * (a2 - 1.0) / (1.0 + a2) ** 4
    if a2 < 1.0:
        return ModalityReport("unimodal", d2, (0.0,))
    if a2 == 1.0:
        return ModalityReport("flat", d2, (0.0,))
    m = math.sqrt(a2 - 1.0)
    return ModalityReport("bimodal", d2, (-m, m))

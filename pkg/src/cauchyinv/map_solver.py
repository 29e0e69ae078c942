"""MAP estimation by iteratively reweighted Gauss-Newton steps.

Each Cauchy term ``log(s^2 + d^2)`` of the negative log posterior is
majorized at the current increment ``d0`` by the quadratic
``log(s^2 + d0^2) + (d^2 - d0^2) / (s^2 + d0^2)``.  The surrogate is convex,
so the step system

    (A^T A / sigma_e^2 + L^T diag(c) L) p = -grad

with ``c = 2 / (s^2 + d0^2)`` (``1 / (2 s^2)`` for the Gaussian prior) is
symmetric positive definite and solved with conjugate gradients.  A
backtracking line search keeps the objective monotone.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.linalg import LinearOperator, cg

from .exceptions import DimensionError, DivergenceError, InitializationError, ParameterError
from .priors import difference_edges, log_prior, log_prior_gradient

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class MapConfig:
    max_iters: int = 100
    grad_tol: float = 1e-6
    shrink: float = 0.5
    max_backtracks: int = 30
    armijo: float = 1e-4
    linear_solver_tol: float = 1e-10
    linear_solver_maxiter: int = 5000

    def __post_init__(self):
        if self.max_iters < 1 or self.max_backtracks < 1 or self.linear_solver_maxiter < 1:
            raise ParameterError("iteration limits must be positive")
        if not (self.grad_tol > 0 and self.linear_solver_tol > 0):
            raise ParameterError("tolerances must be positive")
        if not 0.0 < self.shrink < 1.0:
            raise ParameterError("line-search shrink factor must lie in (0, 1)")


@dataclass
class MapResult:
    x: np.ndarray
    trace: list = field(default_factory=list)
    grad_inf: float = math.inf
    iterations: int = 0
    converged: bool = False

    def __iter__(self):
        # allows ``x_map, trace = map_estimate(...)``
        return iter((self.x, self.trace))


def _check(x, post):
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.size != post.n_sites:
        raise DimensionError(f"expected {post.n_sites} values, got {x.size}")
    return x


def negative_log_posterior(x, post):
    """``||m - A x||^2 / (2 sigma_e^2) - log_prior(x)`` without constants."""
    x = _check(x, post)
    out = 0.0
    if post.has_likelihood:
        r = post.residual(x)
        out += 0.5 * post.noise.inv_var * float(r @ r)
    if post.prior is not None:
        out -= log_prior(x, post.shape, post.prior)
    return out


def negative_log_posterior_gradient(x, post):
    x = _check(x, post)
    g = np.zeros(post.n_sites)
    if post.has_likelihood:
        g -= post.noise.inv_var * (post.operator.matrix.T @ post.residual(x))
    if post.prior is not None:
        g -= log_prior_gradient(x, post.shape, post.prior)
    return g


def _curvature_weights(x, post, edges):
    fam = post.prior.family
    if fam == "cauchy":
        d = edges.differences(x)
        return 2.0 / (edges.scale ** 2 + d * d)
    if fam == "gaussian":
        return 1.0 / (2.0 * edges.scale ** 2)
    raise ParameterError("MAP estimation supports the Cauchy and Gaussian priors only")


def map_estimate(post, init, cfg=None):
    """Minimize the negative log posterior from ``init``.

    Returns a :class:`MapResult`; it unpacks as ``(x_map, trace)`` where
    ``trace[k]`` is the objective after ``k`` iterations.
    """
    cfg = cfg or MapConfig()
    if post.prior is not None and post.prior.family == "tv":
        raise ParameterError("the TV prior is not differentiable; MAP is not offered for it")
    x = _check(init, post).copy()
    f = negative_log_posterior(x, post)
    if not math.isfinite(f):
        raise InitializationError(f"objective is not finite at the initial point ({f})")
    trace = [f]
    A = post.operator.matrix if post.has_likelihood else None
    inv_var = post.noise.inv_var if post.has_likelihood else 0.0
    edges = difference_edges(post.shape, post.prior) if post.prior is not None else None
    L = edges.matrix() if edges is not None else None
    AT = A.T.tocsr() if A is not None else None
    n = post.n_sites

    result = MapResult(x, trace)
    for it in range(1, cfg.max_iters + 1):
        g = negative_log_posterior_gradient(x, post)
        result.grad_inf = float(np.max(np.abs(g)))
        if result.grad_inf < cfg.grad_tol:
            result.converged = True
            break
        c = _curvature_weights(x, post, edges) if edges is not None else None

        def hess(v, c=c):
            out = np.zeros(n)
            if A is not None:
                out += inv_var * (AT @ (A @ v))
            if L is not None:
                out += L.T @ (c * (L @ v))
            return out

        H = LinearOperator((n, n), matvec=hess, dtype=float)
        p, info = cg(H, -g, rtol=cfg.linear_solver_tol, atol=0.0, maxiter=cfg.linear_solver_maxiter)
        if info < 0 or not np.all(np.isfinite(p)):
            raise DivergenceError("inner conjugate-gradient solve failed", trace)
        slope = float(g @ p)
        if slope >= 0:
            # inexact inner solve: fall back to steepest descent
            p, slope = -g, -float(g @ g)
        step = 1.0
        for _ in range(cfg.max_backtracks):
            x_new = x + step * p
            f_new = negative_log_posterior(x_new, post)
            if not math.isfinite(f_new):
                raise DivergenceError(f"objective became {f_new} at iteration {it}", trace)
            if f_new <= f + cfg.armijo * step * slope:
                break
            step *= cfg.shrink
        else:
            log.info("line search stalled at iteration %d; stopping", it)
            result.iterations = it - 1
            break
        x, f = x_new, f_new
        trace.append(f)
        result.x = x
        result.iterations = it
    else:
        g = negative_log_posterior_gradient(x, post)
        result.grad_inf = float(np.max(np.abs(g)))
        result.converged = result.grad_inf < cfg.grad_tol
    result.x = x
    return result

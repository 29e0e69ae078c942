"""Realizations of alpha-stable random walks and of 2D difference priors."""

from __future__ import annotations

import dataclasses

import numpy as np

from .exceptions import ParameterError
from .grids import Grid1D, Lattice2D
from .samplers import Posterior, scmh_run
from .stable_dist import StableParams, sample_stable

__all__ = ["Grid1D", "Lattice2D", "simulate_walk_1d", "prior_chain_2d", "sample_prior_2d"]


def simulate_walk_1d(alpha, beta, h, n, rng):
    """Walk started at 0 with iid increments S_alpha(h**(1/alpha), beta, 0)."""
    if n < 1:
        raise ParameterError("walk needs at least one point")
    if not h > 0:
        raise ParameterError("step h must be positive")
    params = StableParams(alpha, beta, h ** (1.0 / alpha), 0.0)
    steps = sample_stable(params, rng, size=n - 1)
    values = np.concatenate([[0.0], np.cumsum(steps)])
    return Grid1D(n, h, values)


def prior_chain_2d(prior, nx, ny, sweeps, seed, thin=1, burn_in_fraction=0.5, **kwargs):
    """Prior-only single-site MH chain on an ``ny x nx`` lattice with zero boundary."""
    if sweeps < 1:
        raise ParameterError("sweeps must be at least 1")
    zero_prior = dataclasses.replace(prior, boundary="zero")
    post = Posterior(None, None, None, zero_prior, (ny, nx))
    return scmh_run(post, np.zeros(nx * ny), sweeps, thin, burn_in_fraction, seed, **kwargs)


def sample_prior_2d(prior, nx, ny, sweeps, seed, **kwargs):
    """Approximate prior draw: final state of :func:`prior_chain_2d` started at 0."""
    chain = prior_chain_2d(prior, nx, ny, sweeps, seed, thin=sweeps, **kwargs)
    return Lattice2D(nx, ny, prior.h, prior.h_prime, chain.state.copy())

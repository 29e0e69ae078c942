"""Single-component Metropolis-Hastings for difference-prior posteriors.

Each sweep visits every site once, proposes ``x_k + sigma_k * z`` with
``z ~ N(0, 1)`` and accepts with probability ``min(1, exp(dlogpost))``.  The
proposal is symmetric, so no Hastings correction enters.  The likelihood
change is evaluated from the cached residual ``m - A x`` and one operator
column; the prior change from the at most four increments touching the site.

Proposal scales are tuned during burn-in only: every ``adapt_every`` sweeps
a site whose window acceptance exceeded 0.5 has its scale multiplied by 1.5,
one below 0.25 has it divided by 1.5.  A site's window restarts only when its
scale changes.  After burn-in the kernel is fixed.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .exceptions import DimensionError, EmptyChainError, InitializationError, ParameterError
from .forward_models import NoiseModel, SparseOperator, apply
from .priors import PriorModel, difference_edges, log_prior

log = logging.getLogger(__name__)

CHECKPOINT_FORMAT = "cauchyinv-chain"
CHECKPOINT_VERSION = 1


@dataclass
class Posterior:
    """``p(x | m) ~ p(x) p(m | x)`` for ``m = A x + e``.

    ``operator`` and ``data`` may be ``None`` for prior-only sampling;
    ``prior`` may be ``None`` to sample the likelihood alone.  ``shape`` is
    the layout of the unknown: ``(n,)`` or ``(ny, nx)``.
    """

    operator: SparseOperator | None
    data: np.ndarray | None
    noise: NoiseModel | None
    prior: PriorModel | None
    shape: tuple

    def __post_init__(self):
        self.shape = tuple(int(s) for s in self.shape)
        if self.operator is not None:
            if self.data is None or self.noise is None:
                raise ParameterError("a likelihood needs data and a noise model")
            self.data = np.asarray(self.data, dtype=float)
            if self.operator.n_cols != self.n_sites:
                raise DimensionError(
                    f"operator has {self.operator.n_cols} columns but layout {self.shape} "
                    f"has {self.n_sites} sites"
                )
            if self.data.shape != (self.operator.n_rows,):
                raise DimensionError("data length must equal the operator row count")
            if not np.all(np.isfinite(self.data)):
                raise ParameterError("data must be finite")

    @property
    def n_sites(self):
        return int(np.prod(self.shape))

    @property
    def has_likelihood(self):
        return self.operator is not None

    def residual(self, x):
        return self.data - apply(self.operator, x)

    def log_likelihood(self, x):
        if not self.has_likelihood:
            return 0.0
        r = self.residual(x)
        return -0.5 * self.noise.inv_var * float(r @ r)

    def log_prior(self, x):
        if self.prior is None:
            return 0.0
        return log_prior(x, self.shape, self.prior)

    def log_posterior(self, x):
        return self.log_prior(x) + self.log_likelihood(x)


def delta_log_likelihood(residual, op, site, delta, noise):
    """Change of ``-||m - A x||^2 / (2 s^2)`` when ``x[site] += delta``.

    ``residual`` must equal ``m - A x``.  Returns ``(value, (rows, new_entries))``
    where the second item is what the residual becomes on acceptance.
    """
    site = int(site)
    if not 0 <= site < op.n_cols:
        raise IndexError(f"site {site} out of range for {op.n_cols} columns")
    rows, vals = op.column(site)
    old = residual[rows]
    new = old - vals * delta
    value = -0.5 * noise.inv_var * float(np.sum(new * new - old * old))
    return value, (rows, new)


def adapt_proposals(sigmas, accepts, proposals, low=0.25, high=0.5, factor=1.5):
    """One tuning step of the per-site proposal scales from window counts."""
    sigmas = np.asarray(sigmas, dtype=float)
    rate = np.asarray(accepts, dtype=float) / np.maximum(np.asarray(proposals, dtype=float), 1.0)
    out = sigmas.copy()
    seen = np.asarray(proposals) > 0
    out[seen & (rate > high)] *= factor
    out[seen & (rate < low)] /= factor
    return out


@dataclass
class Chain:
    """Record of a single-component MH run.

    ``samples`` holds the state after every ``thin``-th sweep;
    ``accept_counts``/``propose_counts`` are per-site totals collected after
    the tuning phase.
    """

    samples: np.ndarray
    burn_in: int
    thin: int
    accept_counts: np.ndarray
    propose_counts: np.ndarray
    proposal_sigmas: np.ndarray
    seed: int | None
    shape: tuple = ()
    sweeps_done: int = 0
    total_sweeps: int = 0
    burn_in_fraction: float = 0.5
    adapt_every: int = 50
    scan: str = "raster"
    state: np.ndarray | None = None
    max_drift: float = 0.0
    rng_states: list = field(default_factory=list)
    window_accepts: np.ndarray | None = None
    window_proposals: np.ndarray | None = None
    residual: np.ndarray | None = None

    @property
    def complete(self):
        return self.sweeps_done >= self.total_sweeps

    @property
    def n_stored(self):
        return self.samples.shape[0]

    def acceptance_rates(self):
        return self.accept_counts / np.maximum(self.propose_counts, 1)

    def retained(self):
        return self.samples[self.burn_in:]


def cm_estimate(chain):
    """Ensemble mean of the samples kept after burn-in."""
    kept = chain.retained()
    if kept.shape[0] == 0:
        raise EmptyChainError("no samples retained after burn-in")
    return kept.mean(axis=0)


def default_proposal_sigmas(post):
    """Rough per-site conditional standard deviations used as starting scales."""
    n = post.n_sites
    prec = np.zeros(n)
    if post.has_likelihood:
        sq = post.operator.matrix.multiply(post.operator.matrix).sum(axis=0)
        prec += post.noise.inv_var * np.asarray(sq).ravel()
    if post.prior is not None:
        edges = difference_edges(post.shape, post.prior)
        fam = post.prior.family
        if fam == "cauchy":
            c = 2.0 / edges.scale ** 2
        elif fam == "gaussian":
            c = 1.0 / (2.0 * edges.scale ** 2)
        else:
            c = np.full(edges.n_edges, post.prior.reg ** 2)
        prec += np.bincount(edges.a, weights=c, minlength=n)
        inner = edges.b >= 0
        prec += np.bincount(edges.b[inner], weights=c[inner], minlength=n)
    prec[prec <= 0] = 1.0
    return 2.4 / np.sqrt(prec)


def _streams(seed):
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return [np.random.Generator(np.random.PCG64(s)) for s in ss.spawn(3)]


def _kernel_args(post):
    if post.has_likelihood:
        op = post.operator
        lik = (True, op.col_ptr, op.row_idx, op.vals, post.noise.inv_var)
    else:
        z = np.zeros(1, dtype=np.int64)
        lik = (False, np.zeros(post.n_sites + 1, dtype=np.int64), z, np.zeros(1), 0.0)
    if post.prior is not None:
        e = difference_edges(post.shape, post.prior)
        pri = (post.prior.code, float(post.prior.reg), e.a, e.b, e.scale, e.site_ptr, e.site_edges)
    else:
        zi = np.zeros(1, dtype=np.int64)
        pri = (_kernels.NONE, 0.0, zi, zi, np.ones(1), np.zeros(post.n_sites + 1, dtype=np.int64), zi)
    return lik, pri


def scmh_run(
    post,
    init=None,
    sweeps=1000,
    thin=10,
    burn_in_fraction=0.5,
    seed=0,
    *,
    adapt_every=50,
    proposal_sigmas=None,
    scan="raster",
    check_every=1000,
    drift_tol=1e-8,
    resume_from=None,
    stop_at=None,
):
    """Single-component Metropolis-Hastings over ``post``.

    Parameters
    ----------
    post : Posterior
    init : array_like
        Starting state (flattened to the layout size).  Ignored when resuming.
    sweeps : int
        Total number of full passes over the sites.
    thin : int
        Store the state after every ``thin``-th sweep.
    burn_in_fraction : float
        Fraction of stored samples discarded by :func:`cm_estimate`; proposal
        tuning runs over the same fraction of sweeps.
    seed : int or numpy.random.SeedSequence
        Seeds three independent streams (proposals, acceptance draws, scan order).
    scan : {"raster", "random"}
        Fixed raster order or a fresh random permutation every sweep.
    check_every : int
        Every this many sweeps the cached residual and the incrementally
        tracked log posterior are compared with a full recomputation; the
        largest relative discrepancy is kept in ``Chain.max_drift`` and the
        run aborts if it exceeds ``drift_tol``.
    resume_from : Chain, optional
        Continue an interrupted run (see :func:`load_checkpoint`).
    stop_at : int, optional
        Return early after this many sweeps (for checkpointing).
    """
    if resume_from is None:
        if sweeps < 1 or thin < 1:
            raise ParameterError("sweeps and thin must be at least 1")
        if not 0.0 <= burn_in_fraction < 1.0:
            raise ParameterError("burn_in_fraction must lie in [0, 1)")
        if scan not in ("raster", "random"):
            raise ParameterError(f"unknown scan order {scan!r}")
        x = np.array(init if init is not None else np.zeros(post.n_sites), dtype=float).reshape(-1)
        if x.size != post.n_sites:
            raise DimensionError(f"init has {x.size} entries, layout needs {post.n_sites}")
        sig = default_proposal_sigmas(post) if proposal_sigmas is None else proposal_sigmas
        sig = np.broadcast_to(np.asarray(sig, dtype=float), (post.n_sites,)).copy()
        if np.any(sig <= 0):
            raise ParameterError("proposal scales must be positive")
        streams = _streams(seed)
        n = post.n_sites
        chain = Chain(
            samples=np.empty((0, n)), burn_in=0, thin=int(thin),
            accept_counts=np.zeros(n, dtype=np.int64), propose_counts=np.zeros(n, dtype=np.int64),
            proposal_sigmas=sig, seed=seed if isinstance(seed, int) else None, shape=post.shape,
            sweeps_done=0, total_sweeps=int(sweeps), burn_in_fraction=float(burn_in_fraction),
            adapt_every=int(adapt_every), scan=scan, state=x,
            window_accepts=np.zeros(n, dtype=np.int64), window_proposals=np.zeros(n, dtype=np.int64),
        )
    else:
        chain = resume_from
        if tuple(chain.shape) != post.shape:
            raise DimensionError("checkpoint layout does not match the posterior")
        streams = _streams(0)
        for g, st in zip(streams, chain.rng_states):
            g.bit_generator.state = st
        x = np.array(chain.state, dtype=float)

    n = post.n_sites
    lp = post.log_posterior(x)
    if not math.isfinite(lp):
        raise InitializationError(f"log posterior is not finite at the initial state ({lp})")
    if not post.has_likelihood:
        residual = np.zeros(1)
    elif chain.residual is not None and chain.residual.shape == (post.operator.n_rows,):
        residual = np.array(chain.residual, dtype=float)
    else:
        residual = post.residual(x)
    lik, pri = _kernel_args(post)

    total = chain.total_sweeps
    end = total if stop_at is None else min(total, int(stop_at))
    adapt_until = int(chain.burn_in_fraction * total)
    raster = np.arange(n, dtype=np.int64)[None, :]
    g_step, g_acc, g_order = streams
    stored = [chain.samples]
    s = chain.sweeps_done

    while s < end:
        adapting = s < adapt_until
        nxt = end
        if adapting:
            nxt = min(nxt, (s // chain.adapt_every + 1) * chain.adapt_every, adapt_until)
        else:
            nxt = min(nxt, s + 5000)
        if check_every:
            nxt = min(nxt, (s // check_every + 1) * check_every)
        b = nxt - s
        steps = g_step.standard_normal((b, n))
        log_u = -g_acc.standard_exponential((b, n))
        if chain.scan == "random":
            orders = np.argsort(g_order.random((b, n)), axis=1).astype(np.int64)
        else:
            orders = raster
        out = np.empty((b // chain.thin + 1, n))
        acc_c = chain.window_accepts if adapting else chain.accept_counts
        prop_c = chain.window_proposals if adapting else chain.propose_counts
        n_st, change = _kernels.scmh_sweeps(
            x, residual, *lik, *pri, chain.proposal_sigmas, orders, steps, log_u,
            acc_c, prop_c, s, chain.thin, out,
        )
        lp += change
        stored.append(out[:n_st])
        s = nxt
        if adapting and (s % chain.adapt_every == 0 or s == adapt_until):
            new_sig = adapt_proposals(
                chain.proposal_sigmas, chain.window_accepts, chain.window_proposals
            )
            # sites whose scale held keep counting, sharpening their rate estimate
            moved = new_sig != chain.proposal_sigmas
            chain.proposal_sigmas = new_sig
            chain.window_accepts[moved] = 0
            chain.window_proposals[moved] = 0
        if check_every and s % check_every == 0:
            exact = post.log_posterior(x)
            drift = abs(lp - exact) / max(abs(exact), 1.0)
            if post.has_likelihood:
                r_exact = post.residual(x)
                scale = max(float(np.max(np.abs(post.data))), 1.0)
                drift = max(drift, float(np.max(np.abs(residual - r_exact))) / scale)
                residual[:] = r_exact
            chain.max_drift = max(chain.max_drift, drift)
            if drift > drift_tol:
                raise InitializationError(
                    f"incremental log posterior drifted by {drift:.3e} at sweep {s}"
                )
            lp = exact

    chain.samples = np.concatenate(stored, axis=0)
    chain.sweeps_done = s
    chain.state = x
    chain.residual = residual
    chain.rng_states = [g.bit_generator.state for g in streams]
    chain.burn_in = int(chain.burn_in_fraction * (chain.total_sweeps // chain.thin))
    return chain


# -- checkpoints --------------------------------------------------------------


def save_checkpoint(chain, path):
    """Write ``chain`` as an ``.npz`` archive with a JSON header.

    Header keys: ``format``, ``version``, ``shape``, ``sweeps_done``,
    ``total_sweeps``, ``thin``, ``burn_in_fraction``, ``adapt_every``,
    ``scan``, ``seed``, ``max_drift`` and ``rng_states`` (bit-generator
    states of the proposal, acceptance and scan-order streams).  Arrays:
    ``state``, ``samples``, ``proposal_sigmas``, ``accept_counts``,
    ``propose_counts``, ``window_accepts``, ``window_proposals`` and
    ``residual`` (cached ``m - A x``; length 1 for prior-only runs).
    """
    header = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "shape": list(chain.shape),
        "sweeps_done": chain.sweeps_done,
        "total_sweeps": chain.total_sweeps,
        "thin": chain.thin,
        "burn_in_fraction": chain.burn_in_fraction,
        "adapt_every": chain.adapt_every,
        "scan": chain.scan,
        "seed": chain.seed,
        "max_drift": chain.max_drift,
        "rng_states": chain.rng_states,
    }
    with open(path, "wb") as fh:
        np.savez(
            fh,
            header=np.array(json.dumps(header)),
            state=chain.state,
            samples=chain.samples,
            proposal_sigmas=chain.proposal_sigmas,
            accept_counts=chain.accept_counts,
            propose_counts=chain.propose_counts,
            window_accepts=chain.window_accepts,
            window_proposals=chain.window_proposals,
            residual=chain.residual,
        )


def load_checkpoint(path):
    with np.load(path, allow_pickle=False) as z:
        header = json.loads(str(z["header"]))
        if header.get("format") != CHECKPOINT_FORMAT:
            raise ParameterError(f"{path} is not a chain checkpoint")
        arrays = {k: z[k] for k in z.files if k != "header"}
    chain = Chain(
        samples=arrays["samples"],
        burn_in=0,
        thin=header["thin"],
        accept_counts=arrays["accept_counts"],
        propose_counts=arrays["propose_counts"],
        proposal_sigmas=arrays["proposal_sigmas"],
        seed=header["seed"],
        shape=tuple(header["shape"]),
        sweeps_done=header["sweeps_done"],
        total_sweeps=header["total_sweeps"],
        burn_in_fraction=header["burn_in_fraction"],
        adapt_every=header["adapt_every"],
        scan=header["scan"],
        state=arrays["state"],
        max_drift=header["max_drift"],
        rng_states=header["rng_states"],
        window_accepts=arrays["window_accepts"],
        window_proposals=arrays["window_proposals"],
        residual=arrays["residual"],
    )
    chain.burn_in = int(chain.burn_in_fraction * (chain.total_sweeps // chain.thin))
    return chain

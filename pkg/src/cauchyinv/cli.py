"""Command-line driver for the reconstruction experiments.

    cauchyinv prior-realizations --seed 1 --out runs/prior
    cauchyinv deconvolve --config desk.ini --out runs/deconv
    cauchyinv tomo --seed 7 --out runs/tomo

Each run directory gets a ``manifest.ini`` holding the fully resolved
configuration; passing it back with ``--config`` repeats the run exactly.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import fileio, plotting
from .config import KINDS, ConfigError, load_config
from .exceptions import (
    DimensionError,
    DivergenceError,
    EmptyChainError,
    InitializationError,
    ParameterError,
)
from .fbp import fbp_reconstruct
from .forward_models import (
    FanBeamGeometry,
    add_noise,
    apply,
    build_convolution_operator,
    build_fanbeam_operator,
    export_triplets,
)
from .map_solver import MapConfig, map_estimate
from .phantoms import piecewise_signal_1d, shepp_logan
from .priors import PriorModel
from .random_walk import prior_chain_2d, simulate_walk_1d
from .samplers import Posterior, cm_estimate, scmh_run

log = logging.getLogger("cauchyinv")

EXIT_OK, EXIT_IO, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3

TOMO_METHODS = ("fbp", "map_cauchy", "cm_cauchy", "cm_tv", "cm_gaussian")


def _reg(section, family):
    return {"cauchy": section["lambda"], "gaussian": section["sigma"], "tv": section["tv_weight"]}[family]


def _sampler_kwargs(cfg):
    s = cfg["sampler"]
    return dict(
        sweeps=s["sweeps"],
        thin=s["thin"],
        burn_in_fraction=s["burn_in_fraction"],
        adapt_every=s["adapt_every"],
        scan=s["scan"],
    )


def _prepare(out_dir, cfg):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "manifest.ini").write_text(cfg.to_ini())
    return out


def _acceptance_row(label, chain):
    r = chain.acceptance_rates()
    return [label, float(r.min()), float(r.mean()), float(r.max())]


def _rel_l2(a, b):
    return float(np.linalg.norm(a - b) / np.linalg.norm(b))


def run_prior_realizations(cfg, out_dir):
    """1D stable random walks and 2D difference-prior draws."""
    out = _prepare(out_dir, cfg)
    r = cfg["realizations"]
    n = r["n_1d"]
    walks = {}
    for alpha in r["alphas"]:
        h = 1.0 / (n - 1) if n > 1 else 1.0
        g = simulate_walk_1d(alpha, r["beta"], h, n, cfg.rng("walk", alpha))
        walks[f"alpha={alpha:g}"] = g
        fileio.write_columns(out / f"walk_alpha{alpha:g}.csv", {"t": g.t, "value": g.values})

    crop = r["crop"]
    nx, ny = r["nx"] + crop, r["ny"] + crop
    images = {}
    for fam in r["families"]:
        prior = PriorModel(fam, _reg(r, fam))
        kw = _sampler_kwargs(cfg)
        sweeps = kw.pop("sweeps")
        kw.pop("thin")
        chain = prior_chain_2d(prior, nx, ny, sweeps, cfg.seed_sequence("realization", fam), thin=sweeps, **kw)
        # the zero boundary pins the top and left edges; drop that band
        img = chain.state.reshape(ny, nx)[crop:, crop:]
        images[fam] = img
        fileio.write_pgm(out / f"realization_{fam}.pgm", img)

    if cfg["run"]["figures"]:
        plotting.plot_walks(out / "walks.png", walks)
        plotting.plot_realizations(out / "realizations.png", images)
        plotting.plot_modality(out / "modality.png")
    return {"walks": walks, "images": images}


def run_deconvolution(cfg, out_dir):
    """CM estimates of a blurred piecewise-constant signal on several grids."""
    out = _prepare(out_dir, cfg)
    d = cfg["deconvolution"]
    kw = _sampler_kwargs(cfg)
    estimates, errors, acc_rows = {}, [], []
    first_truth = first_data = None
    for n in d["grid_sizes"]:
        truth = piecewise_signal_1d(n)
        op = build_convolution_operator(n, d["kernel_width"])
        m, noise = add_noise(apply(op, truth.values), d["noise_level"], cfg.rng("data", n))
        fileio.write_columns(out / f"truth_n{n}.csv", {"t": truth.t, "value": truth.values})
        fileio.write_columns(out / f"data_n{n}.csv", {"t": truth.t, "value": m})
        if first_truth is None:
            first_truth, first_data = (truth.t, truth.values), (truth.t, m)
        for fam in d["families"]:
            prior = PriorModel(fam, _reg(d, fam), h=truth.h, boundary=d["boundary"])
            post = Posterior(op, m, noise, prior, (n,))
            chain = scmh_run(post, None, seed=cfg.seed_sequence("chain", fam, n), **kw)
            cm = cm_estimate(chain)
            estimates[fam, n] = (truth.t, cm)
            errors.append([fam, n, _rel_l2(cm, truth.values)])
            acc_rows.append(_acceptance_row(f"{fam}_n{n}", chain))
            fileio.write_columns(out / f"cm_{fam}_n{n}.csv", {"t": truth.t, "value": cm})
            log.info("deconvolution %s n=%d error %.4g", fam, n, errors[-1][2])

    fileio.write_csv(out / "errors.csv", ["family", "n", "rel_l2_error"], errors)
    fileio.write_csv(out / "acceptance.csv", ["run", "min", "mean", "max"], acc_rows)

    # pairwise distances after linear interpolation onto the finest grid
    comparison = []
    finest = max(d["grid_sizes"])
    tf = np.linspace(0.0, 1.0, finest)
    for fam in d["families"]:
        sizes = sorted(d["grid_sizes"])
        interp = {n: np.interp(tf, *estimates[fam, n]) for n in sizes}
        for i, a in enumerate(sizes):
            for b in sizes[i + 1:]:
                comparison.append([fam, a, b, _rel_l2(interp[a], interp[b])])
    fileio.write_csv(out / "comparison.csv", ["family", "n_coarse", "n_fine", "rel_l2"], comparison)

    if cfg["run"]["figures"]:
        labels = {f"{fam} CM, n={n}": v for (fam, n), v in estimates.items()}
        plotting.plot_deconvolution(out / "deconvolution.png", first_truth, first_data, labels)
    return {"estimates": estimates, "errors": errors, "comparison": comparison}


def _geometry(t):
    angles = np.linspace(t["angle_start"], t["angle_stop"], t["n_angles"])
    return FanBeamGeometry(
        source_radius=t["source_radius"],
        detector_radius=t["detector_radius"],
        detector_width=t["detector_width"],
        n_detector_pixels=t["n_detector_pixels"],
        angles=angles,
    )


def run_tomography(cfg, out_dir, methods=TOMO_METHODS):
    """Fan-beam reconstructions of the Shepp-Logan phantom by several estimators."""
    out = _prepare(out_dir, cfg)
    t = cfg["tomography"]
    nx, ny = t["nx"], t["ny"]
    geom = _geometry(t)
    truth = shepp_logan(nx, ny, modified=t["modified_phantom"])
    op = build_fanbeam_operator(geom, nx, ny)
    for w in op.warnings:
        log.warning("%s", w)
    m, noise = add_noise(apply(op, truth.values), t["noise_level"], cfg.rng("sinogram"))
    if t["export_operator"]:
        export_triplets(op, out / "operator.txt")
    u = geom.detector_offsets()
    rows = [[a, float(uu), float(v)] for a, prof in zip(geom.angles, m.reshape(geom.n_angles, -1))
            for uu, v in zip(u, prof)]
    fileio.write_csv(out / "sinogram.csv", ["angle_deg", "detector_u", "value"], rows)

    vmin, vmax = float(truth.values.min()), float(truth.values.max())
    images = {"truth": truth.image}
    fileio.write_pgm(out / "truth.pgm", truth.image, vmin, vmax)
    rmse_rows, acc_rows = [], []

    def record(name, x, started):
        elapsed = time.perf_counter() - started
        images[name] = x.reshape(ny, nx)
        fileio.write_pgm(out / f"{name}.pgm", images[name], vmin, vmax)
        rmse = math.sqrt(float(np.mean((x - truth.values) ** 2)))
        rmse_rows.append([name, rmse, elapsed])
        log.info("tomography %s rmse %.4g (%.1f s)", name, rmse, elapsed)

    started = time.perf_counter()
    x_fbp = fbp_reconstruct(m, geom, nx, ny, filter=t["fbp_filter"]).values
    if "fbp" in methods:
        record("fbp", x_fbp, started)
    init = x_fbp if t["init"] == "fbp" else np.zeros(nx * ny)

    def posterior(family):
        prior = PriorModel(family, _reg(t, family), h=truth.h, h_prime=truth.h_prime, boundary=t["boundary"])
        return Posterior(op, m, noise, prior, (ny, nx))

    if "map_cauchy" in methods:
        started = time.perf_counter()
        s = cfg["solver"]
        mc = MapConfig(
            max_iters=s["max_iters"],
            grad_tol=s["grad_tol"],
            shrink=s["shrink"],
            max_backtracks=s["max_backtracks"],
            linear_solver_tol=s["linear_solver_tol"],
        )
        res = map_estimate(posterior("cauchy"), init, mc)
        record("map_cauchy", res.x, started)
        fileio.write_csv(out / "map_trace.csv", ["iteration", "objective"], list(enumerate(res.trace)))

    kw = _sampler_kwargs(cfg)
    for name in ("cm_cauchy", "cm_tv", "cm_gaussian"):
        if name not in methods:
            continue
        fam = name[3:]
        started = time.perf_counter()
        chain = scmh_run(posterior(fam), init, seed=cfg.seed_sequence("chain", fam), **kw)
        record(name, cm_estimate(chain), started)
        acc_rows.append(_acceptance_row(name, chain))

    fileio.write_csv(out / "rmse.csv", ["method", "rmse", "runtime_s"], rmse_rows)
    if acc_rows:
        fileio.write_csv(out / "acceptance.csv", ["run", "min", "mean", "max"], acc_rows)

    coords = (np.arange(nx) + 0.5) * (2.0 / nx) - 1.0
    horizontal = {k: v[ny // 2, :] for k, v in images.items()}
    vertical = {k: v[:, nx // 2] for k, v in images.items()}
    fileio.write_columns(out / "cross_section_horizontal.csv", {"x": coords, **horizontal})
    coords_y = 1.0 - (np.arange(ny) + 0.5) * (2.0 / ny)
    fileio.write_columns(out / "cross_section_vertical.csv", {"y": coords_y, **vertical})

    if cfg["run"]["figures"]:
        plotting.plot_tomography(out / "tomography.png", images, vmin, vmax)
        if nx == ny:
            plotting.plot_cross_sections(out / "cross_sections.png", coords, horizontal, vertical)
    return {"images": images, "rmse": {r[0]: r[1] for r in rmse_rows}}


RUNNERS = {
    "prior-realizations": run_prior_realizations,
    "deconvolve": run_deconvolution,
    "tomo": run_tomography,
    "fbp-only": lambda cfg, out: run_tomography(cfg, out, methods=("fbp",)),
    "map-only": lambda cfg, out: run_tomography(cfg, out, methods=("fbp", "map_cauchy")),
}


def build_parser():
    p = argparse.ArgumentParser(prog="cauchyinv", description="Bayesian inversion experiments with difference priors.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)
    for kind in KINDS:
        s = sub.add_parser(kind, parents=[common])
        s.add_argument("--config", type=Path, help="INI file (a manifest.ini from a previous run works too)")
        s.add_argument("--seed", type=int, help="overrides [run] seed")
        s.add_argument("--out", type=Path, default=Path("."), help="output directory")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = load_config(args.command, args.config, args.seed)
        RUNNERS[args.command](cfg, args.out)
    except (ConfigError, ParameterError, DimensionError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DivergenceError, InitializationError, EmptyChainError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

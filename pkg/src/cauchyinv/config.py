"""Experiment configuration: INI files with typed defaults and run manifests.

A config file holds flat ``key = value`` pairs grouped in sections.  Lists
are comma separated.  Every key has a typed default; unknown sections or keys
are rejected so typos surface as configuration errors.
"""

from __future__ import annotations

import configparser
import copy
import io
import subprocess
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__

KINDS = ("prior-realizations", "deconvolve", "tomo", "fbp-only", "map-only")


class ConfigError(ValueError):
    pass


_COMMON = {
    "run": {"seed": None, "figures": True},
    "sampler": {
        "sweeps": 20000,
        "thin": 10,
        "burn_in_fraction": 0.5,
        "adapt_every": 50,
        "scan": "raster",
    },
}

_SOLVER = {
    "solver": {
        "max_iters": 100,
        "grad_tol": 1e-6,
        "shrink": 0.5,
        "max_backtracks": 30,
        "linear_solver_tol": 1e-8,
    }
}

_TOMOGRAPHY = {
    "tomography": {
        "nx": 64,
        "ny": 64,
        "n_angles": 20,
        "angle_start": -10.0,
        "angle_stop": 190.0,
        "source_radius": 4.0,
        "detector_radius": 2.0,
        "detector_width": 3.0,
        "n_detector_pixels": 200,
        "noise_level": 0.001,
        "modified_phantom": True,
        "boundary": "free",
        "lambda": 0.1,
        "sigma": 0.1,
        "tv_weight": 100.0,
        "fbp_filter": "ram-lak",
        "init": "fbp",
        "export_operator": False,
    }
}

DEFAULTS = {
    "prior-realizations": {
        **_COMMON,
        "realizations": {
            "n_1d": 1000,
            "alphas": (1.0, 2.0),
            "beta": 0.0,
            "nx": 64,
            "ny": 64,
            "crop": 8,
            "families": ("cauchy", "gaussian", "tv"),
            "lambda": 1.0,
            "sigma": 1.0,
            "tv_weight": 64.0,
        },
    },
    "deconvolve": {
        **_COMMON,
        "deconvolution": {
            "grid_sizes": (66, 131, 261, 521),
            "kernel_width": 0.04,
            "noise_level": 0.01,
            "families": ("cauchy",),
            "boundary": "free",
            "lambda": 1.0,
            "sigma": 1.0,
            "tv_weight": 50.0,
        },
    },
    "tomo": {**_COMMON, **_SOLVER, **_TOMOGRAPHY},
    # fbp-only ignores [sampler] and [solver] but accepts them, so one file serves
    # all three tomography commands
    "fbp-only": {**_COMMON, **_SOLVER, **_TOMOGRAPHY},
    "map-only": {**_COMMON, **_SOLVER, **_TOMOGRAPHY},
}

# per-experiment chain lengths
_SWEEPS = {"prior-realizations": 4000, "deconvolve": 200000}


def _convert(text, default, where):
    text = text.strip()
    try:
        if isinstance(default, bool):
            low = text.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            return float(text)
        if isinstance(default, tuple):
            items = [s.strip() for s in text.split(",") if s.strip()]
            proto = default[0] if default else ""
            return tuple(_convert(s, proto, where) for s in items)
        if default is None:  # seed
            return int(text)
        return text
    except ValueError as exc:
        raise ConfigError(f"{where}: cannot parse {text!r}") from exc


def _render(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ", ".join(_render(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def version_string():
    """Package version plus ``git describe`` output when available."""
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty", "--tags"],
            cwd=Path(__file__).resolve().parent,
            capture_output=True, text=True, timeout=5, check=False,
        )
        tag = out.stdout.strip()
    except (OSError, subprocess.SubprocessError):
        tag = ""
    return f"{__version__}+{tag}" if tag else __version__


@dataclass
class ExperimentConfig:
    kind: str
    values: dict = field(default_factory=dict)

    def __getitem__(self, section):
        return self.values[section]

    @property
    def seed(self):
        return self.values["run"]["seed"]

    def seed_sequence(self, *key):
        """Independent, order-free child seed for a named component of the run."""
        words = tuple(zlib.crc32(str(k).encode()) for k in key)
        return np.random.SeedSequence(entropy=self.seed, spawn_key=words)

    def rng(self, *key):
        return np.random.default_rng(self.seed_sequence(*key))

    def to_ini(self, version=None):
        cp = configparser.ConfigParser(interpolation=None)
        cp["manifest"] = {"command": self.kind, "version": version or version_string(), "seed": str(self.seed)}
        for section, entries in self.values.items():
            cp[section] = {k: _render(v) for k, v in entries.items()}
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()


def load_config(kind, path=None, seed=None, overrides=None):
    """Resolve defaults for ``kind``, an optional INI file, then the seed flag."""
    if kind not in KINDS:
        raise ConfigError(f"unknown experiment kind {kind!r}")
    values = copy.deepcopy(DEFAULTS[kind])
    if kind in _SWEEPS:
        values["sampler"]["sweeps"] = _SWEEPS[kind]
    if path is not None:
        cp = configparser.ConfigParser(interpolation=None)
        try:
            with open(path) as fh:
                cp.read_file(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except configparser.Error as exc:
            raise ConfigError(f"malformed config {path}: {exc}") from exc
        for section in cp.sections():
            if section == "manifest":
                continue
            if section not in values:
                raise ConfigError(f"{path}: unknown section [{section}] for {kind}")
            for key, text in cp[section].items():
                if key not in values[section]:
                    raise ConfigError(f"{path}: unknown key {key!r} in [{section}]")
                values[section][key] = _convert(text, DEFAULTS[kind][section][key], f"[{section}] {key}")
    for (section, key), v in (overrides or {}).items():
        values[section][key] = v
    if seed is not None:
        values["run"]["seed"] = int(seed)
    if values["run"]["seed"] is None:
        raise ConfigError("a seed is required: set [run] seed in the config or pass --seed")
    _validate(kind, values)
    return ExperimentConfig(kind, values)


def _validate(kind, v):
    s = v["sampler"]
    if s["sweeps"] < 1 or s["thin"] < 1 or s["adapt_every"] < 1:
        raise ConfigError("[sampler] sweeps, thin and adapt_every must be positive")
    if not 0.0 <= s["burn_in_fraction"] < 1.0:
        raise ConfigError("[sampler] burn_in_fraction must lie in [0, 1)")
    if s["scan"] not in ("raster", "random"):
        raise ConfigError("[sampler] scan must be raster or random")
    for section in ("realizations", "deconvolution", "tomography"):
        if section not in v:
            continue
        sec = v[section]
        for key in ("lambda", "sigma", "tv_weight", "noise_level", "kernel_width"):
            if key in sec and not sec[key] > 0:
                raise ConfigError(f"[{section}] {key} must be positive")
        for fam in sec.get("families", ()):
            if fam not in ("cauchy", "gaussian", "tv"):
                raise ConfigError(f"[{section}] unknown prior family {fam!r}")
        if sec.get("boundary", "free") not in ("free", "zero"):
            raise ConfigError(f"[{section}] boundary must be free or zero")
    if "deconvolution" in v:
        if any(n < 2 for n in v["deconvolution"]["grid_sizes"]):
            raise ConfigError("[deconvolution] grid sizes must be at least 2")
    if "tomography" in v:
        t = v["tomography"]
        if t["nx"] < 2 or t["ny"] < 2 or t["n_angles"] < 1 or t["n_detector_pixels"] < 1:
            raise ConfigError("[tomography] sizes must be positive")
        if t["fbp_filter"] not in ("ram-lak", "hann"):
            raise ConfigError("[tomography] fbp_filter must be ram-lak or hann")
        if t["init"] not in ("fbp", "zero"):
            raise ConfigError("[tomography] init must be fbp or zero")
    if "realizations" in v:
        r = v["realizations"]
        if r["n_1d"] < 1 or r["nx"] < 1 or r["ny"] < 1 or r["crop"] < 0:
            raise ConfigError("[realizations] sizes must be positive")
        if any(not 0 < a <= 2 for a in r["alphas"]):
            raise ConfigError("[realizations] alphas must lie in (0, 2]")

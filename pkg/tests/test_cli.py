import configparser
import subprocess
import sys

import numpy as np
import pytest

from cauchyinv import cli
from cauchyinv.exceptions import DivergenceError
from cauchyinv.fileio import read_csv, read_pgm

SMALL_TOMO = {
    "tomography": {"nx": 16, "ny": 16, "n_angles": 8, "n_detector_pixels": 40},
    "sampler": {"sweeps": 200},
    "solver": {"max_iters": 10},
}


def sections(seed, figures=False, **extra):
    out = {"run": {"seed": seed, "figures": str(figures).lower()}}
    out.update(extra)
    return out


def run(*argv):
    return cli.main([str(a) for a in argv])


def read_manifest(path):
    cp = configparser.ConfigParser(interpolation=None)
    cp.read(path)
    return cp


def tree_bytes(root, mask_runtime=True):
    out = {}
    for p in sorted(root.iterdir()):
        data = p.read_bytes()
        if mask_runtime and p.name == "rmse.csv":
            data = b"\n".join(b",".join(line.split(b",")[:2]) for line in data.splitlines())
        out[p.name] = data
    return out


class TestPriorRealizations:
    def test_outputs(self, tmp_path, ini):
        cfg = ini(sections(1, realizations={"families": "cauchy", "nx": 64, "ny": 64}, sampler={"sweeps": 50}))
        assert run("prior-realizations", "--config", cfg, "--out", tmp_path / "o") == 0
        out = tmp_path / "o"
        for alpha in ("1", "2"):
            header, data = read_csv(out / f"walk_alpha{alpha}.csv")
            assert header == ["t", "value"] and data.shape == (1000, 2)
            assert data[0, 1] == 0.0
        assert (out / "realization_cauchy.pgm").read_text().startswith("P2 64 64\n")
        assert (out / "manifest.ini").exists()

    def test_same_seed_same_bytes_with_figures(self, tmp_path, ini):
        cfg = ini(sections(2, True, realizations={"families": "cauchy, tv", "nx": 12, "ny": 10, "n_1d": 50}, sampler={"sweeps": 30}))
        for d in ("a", "b"):
            assert run("prior-realizations", "--config", cfg, "--out", tmp_path / d) == 0
        a, b = tree_bytes(tmp_path / "a"), tree_bytes(tmp_path / "b")
        assert {"walks.png", "realizations.png", "modality.png"} <= set(a)
        assert a == b

    def test_seed_flag_changes_output(self, tmp_path, ini):
        cfg = ini(sections(2, realizations={"families": "gaussian", "nx": 8, "ny": 8, "n_1d": 20}, sampler={"sweeps": 20}))
        run("prior-realizations", "--config", cfg, "--out", tmp_path / "a")
        run("prior-realizations", "--config", cfg, "--seed", 3, "--out", tmp_path / "b")
        assert read_manifest(tmp_path / "b" / "manifest.ini")["run"]["seed"] == "3"
        assert tree_bytes(tmp_path / "a")["walk_alpha1.csv"] != tree_bytes(tmp_path / "b")["walk_alpha1.csv"]


class TestDeconvolve:
    def test_outputs(self, tmp_path, ini):
        cfg = ini(sections(4, deconvolution={"noise_level": 0.02}, sampler={"sweeps": 100}))
        assert run("deconvolve", "--config", cfg, "--out", tmp_path) == 0
        cms = sorted(p.name for p in tmp_path.glob("cm_*.csv"))
        assert cms == [f"cm_cauchy_n{n}.csv" for n in (131, 261, 521, 66)]
        rows = (tmp_path / "comparison.csv").read_text().splitlines()
        assert rows[0] == "family,n_coarse,n_fine,rel_l2" and len(rows) == 1 + 6
        manifest = read_manifest(tmp_path / "manifest.ini")
        assert float(manifest["deconvolution"]["noise_level"]) == 0.02
        acc = (tmp_path / "acceptance.csv").read_text().splitlines()
        assert acc[0] == "run,min,mean,max" and len(acc) == 5

    def test_figure(self, tmp_path, ini):
        cfg = ini(sections(4, True, deconvolution={"grid_sizes": "21, 41", "families": "cauchy, gaussian"}, sampler={"sweeps": 50}))
        assert run("deconvolve", "--config", cfg, "--out", tmp_path) == 0
        assert (tmp_path / "deconvolution.png").stat().st_size > 0
        errors = (tmp_path / "errors.csv").read_text().splitlines()
        assert errors[0] == "family,n,rel_l2_error" and len(errors) == 5


class TestTomography:
    def test_outputs(self, tmp_path, ini):
        cfg = ini(sections(7, True, **SMALL_TOMO))
        assert run("tomo", "--config", cfg, "--out", tmp_path) == 0
        pgms = sorted(p.stem for p in tmp_path.glob("*.pgm"))
        assert pgms == sorted(["truth", *cli.TOMO_METHODS])
        lines = (tmp_path / "rmse.csv").read_text().splitlines()
        assert lines[0] == "method,rmse,runtime_s"
        assert [l.split(",")[0] for l in lines[1:]] == list(cli.TOMO_METHODS)
        manifest = read_manifest(tmp_path / "manifest.ini")["tomography"]
        assert (float(manifest["source_radius"]), float(manifest["detector_radius"]), float(manifest["detector_width"])) == (4.0, 2.0, 3.0)
        header, h = read_csv(tmp_path / "cross_section_horizontal.csv")
        assert header == ["x", "truth", *cli.TOMO_METHODS] and h.shape == (16, 7)
        header, _ = read_csv(tmp_path / "sinogram.csv")
        assert header == ["angle_deg", "detector_u", "value"]
        _, trace = read_csv(tmp_path / "map_trace.csv")
        assert np.all(np.diff(trace[:, 1]) <= 0)
        for name in ("tomography.png", "cross_sections.png"):
            assert (tmp_path / name).exists()

    def test_truth_pgm_matches_phantom(self, tmp_path, ini):
        cfg = ini(sections(7, **SMALL_TOMO))
        run("fbp-only", "--config", cfg, "--out", tmp_path)
        img, maxval, window = read_pgm(tmp_path / "truth.pgm")
        assert img.shape == (16, 16) and window == (0.0, 1.0)
        assert sorted(p.stem for p in tmp_path.glob("*.pgm")) == ["fbp", "truth"]

    def test_map_only(self, tmp_path, ini):
        cfg = ini(sections(7, **SMALL_TOMO))
        assert run("map-only", "--config", cfg, "--out", tmp_path) == 0
        assert sorted(p.stem for p in tmp_path.glob("*.pgm")) == ["fbp", "map_cauchy", "truth"]

    def test_operator_export(self, tmp_path, ini):
        small = {**SMALL_TOMO, "tomography": {**SMALL_TOMO["tomography"], "export_operator": "true"}}
        run("fbp-only", "--config", ini(sections(7, **small)), "--out", tmp_path)
        assert (tmp_path / "operator.txt").exists()

    def test_rerun_from_manifest(self, tmp_path, ini):
        cfg = ini(sections(8, **SMALL_TOMO))
        run("tomo", "--config", cfg, "--out", tmp_path / "a")
        run("tomo", "--config", tmp_path / "a" / "manifest.ini", "--out", tmp_path / "b")
        assert tree_bytes(tmp_path / "a") == tree_bytes(tmp_path / "b")


class TestExitCodes:
    def test_missing_seed(self, tmp_path, capsys):
        assert run("tomo", "--out", tmp_path) == cli.EXIT_CONFIG
        assert "seed" in capsys.readouterr().err

    def test_unknown_key(self, tmp_path, ini):
        cfg = ini({"run": {"seed": 1}, "tomography": {"n_angels": 3}})
        assert run("tomo", "--config", cfg, "--out", tmp_path) == cli.EXIT_CONFIG

    def test_numeric_failure(self, tmp_path, monkeypatch):
        def boom(cfg, out):
            raise DivergenceError("objective became nan")

        monkeypatch.setitem(cli.RUNNERS, "map-only", boom)
        assert run("map-only", "--seed", 1, "--out", tmp_path) == cli.EXIT_NUMERIC

    def test_unwritable_output(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("")
        code = run("fbp-only", "--seed", 1, "--out", blocker / "sub")
        assert code == cli.EXIT_IO

    def test_module_entry_point(self, tmp_path):
        proc = subprocess.run(
            [sys.executable, "-m", "cauchyinv.cli", "deconvolve", "--out", str(tmp_path)],
            capture_output=True, text=True,
        )
        assert proc.returncode == 2
        assert "seed" in proc.stderr

    def test_verbose_after_subcommand(self):
        args = cli.build_parser().parse_args(["tomo", "-v", "--seed", "2"])
        assert args.verbose and args.seed == 2

    def test_unknown_subcommand(self):
        with pytest.raises(SystemExit):
            cli.build_parser().parse_args(["denoise"])

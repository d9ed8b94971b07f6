import json
import math
import subprocess
import sys

import numpy as np
import pytest
from scipy.special import jn_zeros

from speclab.cli import parse_number, parse_schedule, run


def run_json(argv, capsys):
    code = run(argv)
    out = capsys.readouterr().out
    return code, (json.loads(out) if code == 0 and out.strip() else None)


class TestParsing:
    @pytest.mark.parametrize("text,value", [("1/256", 1 / 256), ("2^-4", 1 / 16), ("0.5", 0.5),
                                            ("1e-3", 1e-3), (3, 3.0)])
    def test_numbers(self, text, value):
        assert parse_number(text) == value

    def test_schedule(self):
        assert parse_schedule("2^-4..2^-10") == [2.0**-k for k in range(4, 11)]
        assert parse_schedule("0.5,0.25") == [0.5, 0.25]
        assert parse_schedule([1, "1/2"]) == [1.0, 0.5]


class TestCommands:
    def test_spectrum_disk(self, capsys):
        code, doc = run_json(["spectrum", "--patch", "flat-disk", "--R", "1", "--dx", "1/256",
                              "--k", "5"], capsys)
        assert code == 0
        mu = doc["eigenvalues"]
        assert len(mu) == 5
        assert mu[0] == pytest.approx(jn_zeros(0, 1)[0] ** 2, rel=1e-2)

    def test_hausdorff_segment(self, capsys):
        code, doc = run_json(["hausdorff", "--set", "segment", "--gauge", "square-log",
                              "--deltas", "2^-4..2^-10"], capsys)
        assert code == 0 and doc["verdict"] == "vanishing"

    def test_model_sinh(self, tmp_path):
        out = tmp_path / "m"
        assert run(["model", "--G", "const:1", "--tmax", "5", "--out", str(out)]) == 0
        data = np.loadtxt(out / "model_h.csv", delimiter=",", skiprows=1)
        t, h = data[1:, 0], data[1:, 1]
        assert np.max(np.abs(h / np.sinh(t) - 1)) <= 1e-6
        manifest = json.loads((out / "manifest.json").read_text())
        assert set(manifest["files"]) == {"model.json", "model_h.csv", "model_dh.csv"}
        assert len(manifest["config_hash"]) == 64

    def test_barta(self, capsys):
        code, doc = run_json(["barta", "--patch", "hyperbolic-disk", "--dx", "1/64"], capsys)
        assert code == 0 and doc["difference"] <= 1e-8 * doc["mu1"]

    def test_persson_plot(self, tmp_path):
        out = tmp_path / "p"
        assert run(["persson", "--dx", "1/64", "--levels", "0,1,2", "--out", str(out)]) == 0
        svg = (out / "persson.svg").read_text()
        assert svg.startswith("<svg") and "<metadata>" in svg
        doc = json.loads((out / "persson.json").read_text())
        assert doc["monotone"]

    def test_surface_export(self, tmp_path):
        out = tmp_path / "s"
        assert run(["surface", "--patch", "andrade", "--V", "2", "--dx", "1/16",
                    "--out", str(out)]) == 0
        header = (out / "grid.csv").read_text().splitlines()[0]
        assert header == "u,v,lambda,x,y,z"

    def test_ballprop(self, capsys):
        code, doc = run_json(["ballprop", "--R", "10", "--dx", "1/16", "--radius", "1",
                              "--centers", "0,4"], capsys)
        assert code == 0 and doc["C"] == pytest.approx(4.0, rel=0.1)

    def test_subharmonic(self, capsys):
        code, doc = run_json(["subharmonic", "--dx", "1/128"], capsys)
        assert code == 0
        assert min(r["min_slack"] for r in doc["report"]) >= -1e-2

    def test_spectrum_export(self, tmp_path):
        out = tmp_path / "e"
        assert run(["spectrum", "--patch", "flat-square", "--dx", "1/40", "--k", "2",
                    "--export", "--out", str(out)]) == 0
        assert (out / "stiffness.mtx").exists() and (out / "mass.csv").exists()


class TestValidation:
    def test_unknown_patch(self, capsys):
        assert run(["spectrum", "--patch", "torus"]) == 1
        assert "patch" in capsys.readouterr().err

    def test_unknown_config_key(self, tmp_path, capsys):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"dx": "1/64", "colour": "red"}))
        assert run(["spectrum", "--config", str(cfg)]) == 1
        assert "colour" in capsys.readouterr().err

    def test_malformed_config_reports_line(self, tmp_path, capsys):
        cfg = tmp_path / "c.json"
        cfg.write_text('{\n  "dx": 0.1,\n  "k": \n}')
        assert run(["spectrum", "--config", str(cfg)]) == 1
        assert "line 4" in capsys.readouterr().err

    @pytest.mark.parametrize("argv", [["spectrum", "--dx", "-1"], ["spectrum", "--k", "0"],
                                      ["hausdorff", "--deltas", "x"],
                                      ["ballprop", "--delta", "1.5"],
                                      ["model", "--G", "zeta:3"], ["nosuch"]])
    def test_rejects(self, argv, capsys):
        assert run(argv) == 1

    def test_coarse_grid_is_input_error(self, capsys):
        assert run(["spectrum", "--dx", "1/8"]) == 1
        assert "fewer than 32" in capsys.readouterr().err

    def test_numerical_failure(self, monkeypatch, capsys):
        import speclab.spectrum as spec

        def fail(*args, **kwargs):
            raise spec.EigenSolverError("no convergence", 1e-3)

        monkeypatch.setattr(spec, "smallest_eigs", fail)
        assert run(["spectrum", "--dx", "1/64"]) == 2
        assert "numerical failure" in capsys.readouterr().err

    def test_flags_override_config(self, tmp_path, capsys):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"dx": "1/64", "k": 3}))
        assert run(["spectrum", "--config", str(cfg), "--k", "2", "--dry-run"]) == 0
        plan = json.loads(capsys.readouterr().out)
        assert plan["config"]["k"] == 2 and plan["config"]["dx"] == 1 / 64
        assert plan["sources"]["k"] == "flag" and plan["sources"]["dx"] == "config"


class TestDeterminism:
    @pytest.mark.parametrize("argv", [["spectrum", "--dx", "1/64", "--k", "3"],
                                      ["hausdorff", "--set", "square", "--gauge", "square",
                                       "--delta0", "1", "--deltas", "2^-2..2^-6", "--seed", "3"]])
    def test_byte_identical(self, argv, tmp_path):
        outs = []
        for i in range(2):
            d = tmp_path / str(i)
            assert run(argv + ["--out", str(d)]) == 0
            outs.append({p.name: p.read_bytes() for p in sorted(d.iterdir())
                         if p.name != "run_meta.json"})
        assert outs[0] == outs[1]

    def test_dry_run_every_subcommand(self, capsys):
        for name in ["model", "subharmonic", "surface", "spectrum", "persson", "barta",
                     "witness", "ballprop", "hausdorff"]:
            assert run([name, "--dry-run"]) == 0
            plan = json.loads(capsys.readouterr().out)
            assert plan["subcommand"] == name


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "speclab", "model", "--tmax", "1", "--dry-run"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and '"tmax": 1.0' in r.stdout

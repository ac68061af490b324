"""Command-line interface: exit codes, output schema, reproducibility."""

import csv
import json
import math

import pytest

from apmi import FlatnessCheckError, NumericalError
from apmi.cli import CSV_HEADER, main
import apmi.cli as cli_module


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def read_csv(path):
    with open(path, newline="") as fh:
        header_line = fh.readline().rstrip("\n")
        fh.seek(0)
        return header_line, list(csv.DictReader(fh))


class TestGenerate:
    def test_mls_degree8(self, capsys, tmp_path):
        base = tmp_path / "mask"
        code, out, err = run(capsys, "generate", "--family", "mls",
                             "--degree", "8", "--out", str(base))
        assert code == 0
        lines = (tmp_path / "mask.txt").read_text().splitlines()
        assert len(lines) == 255
        desc = json.loads((tmp_path / "mask.json").read_text())
        assert desc["rho"] == pytest.approx(128 / 255)
        assert (tmp_path / "mask.manifest.json").exists()

    def test_mura_bad_n_exits_2(self, capsys, tmp_path):
        code, out, err = run(capsys, "generate", "--family", "mura",
                             "--n", "6", "--out", str(tmp_path / "m"))
        assert code == 2
        assert "4d+1" in err

    def test_bernoulli_deterministic(self, capsys, tmp_path):
        argv = ["generate", "--family", "bernoulli", "--n", "250",
                "--p", "0.5", "--seed", "7"]
        run(capsys, *argv, "--out", str(tmp_path / "a"))
        run(capsys, *argv, "--out", str(tmp_path / "b"))
        assert ((tmp_path / "a.txt").read_text()
                == (tmp_path / "b.txt").read_text())

    def test_missing_parameter_exits_2(self, capsys, tmp_path):
        code, _, err = run(capsys, "generate", "--family", "mls",
                           "--out", str(tmp_path / "m"))
        assert code == 2


class TestMi:
    def test_pinhole_ln2(self, capsys):
        code, out, _ = run(capsys, "mi", "--family", "pinhole", "--n", "4",
                           "--W", "0", "--J", "1")
        assert code == 0
        payload = json.loads(out)
        assert payload["per_pixel"] == pytest.approx(math.log(2), rel=1e-11)
        # floats are emitted with 12 significant digits
        assert "0.69314718056" in out

    def test_db_flag_equivalence(self, capsys):
        _, linear, _ = run(capsys, "mi", "--family", "mls", "--degree", "5",
                           "--W", "0.01")
        _, db, _ = run(capsys, "mi", "--family", "mls", "--degree", "5",
                       "--W-db", "-20")
        assert linear == db

    def test_bits(self, capsys):
        _, nats_out, _ = run(capsys, "mi", "--family", "pinhole", "--n", "4",
                             "--W", "0")
        _, bits_out, _ = run(capsys, "mi", "--family", "pinhole", "--n", "4",
                             "--W", "0", "--log-base", "bits")
        nats, bits = json.loads(nats_out), json.loads(bits_out)
        assert bits["per_pixel"] == pytest.approx(
            nats["per_pixel"] / math.log(2), rel=1e-11)
        assert bits["log_base"] == "bits"

    def test_pattern_file_round_trip(self, capsys, tmp_path):
        base = tmp_path / "m"
        run(capsys, "generate", "--family", "mls", "--degree", "4",
            "--out", str(base))
        code, out, _ = run(capsys, "mi", "--pattern-file", str(base) + ".txt",
                           "--W", "0.01")
        assert code == 0
        payload = json.loads(out)
        assert payload["family"] == "mls"
        assert payload["n"] == 15
        assert "per_pixel_excl_dc" in payload

    def test_file_and_family_conflict(self, capsys, tmp_path):
        code, _, err = run(capsys, "mi", "--pattern-file", "x.txt",
                           "--family", "pinhole", "--n", "4", "--W", "0.01")
        assert code == 2
        assert "not both" in err

    def test_missing_pattern_file(self, capsys):
        code, _, err = run(capsys, "mi", "--pattern-file",
                           "/nonexistent/mask.txt", "--W", "0.01")
        assert code == 2

    def test_garbage_pattern_file(self, capsys, tmp_path):
        """A non-numeric mask line is a usage error, not a traceback."""
        path = tmp_path / "garbage.txt"
        path.write_text("0.5\nabc\n0.25\n")
        code, _, err = run(capsys, "mi", "--pattern-file", str(path),
                           "--W", "0.01", "--J", "1")
        assert code == 2
        assert err.startswith("error:") and "not a number" in err

    def test_noise_flag_rules(self, capsys):
        code, _, err = run(capsys, "mi", "--family", "pinhole", "--n", "4",
                           "--W", "0.01", "--W-db", "-20")
        assert code == 2 and "not both" in err
        code, _, err = run(capsys, "mi", "--family", "pinhole", "--n", "4")
        assert code == 2 and "required" in err


class TestPredict:
    def test_flat_iid(self, capsys):
        code, out, _ = run(capsys, "predict", "flat-iid", "--W", "0")
        assert code == 0
        payload = json.loads(out)
        assert payload["value"] == pytest.approx(math.log(1.5), rel=1e-11)
        assert payload["method"] == "closed_form"
        assert "0.405465108108" in out

    def test_bernoulli_iid(self, capsys):
        code, out, _ = run(capsys, "predict", "bernoulli-iid",
                           "--p", "0.5", "--W", "0")
        payload = json.loads(out)
        assert payload["value"] == pytest.approx(0.361328616888, abs=1e-9)
        assert payload["method"] == "quadrature"
        assert payload["est_abs_error"] > 0

    def test_onef_parity_warning(self, capsys):
        code, out, err = run(capsys, "predict", "bernoulli-1f", "--n", "250",
                             "--p", "0.3", "--W", "0.01")
        assert code == 0
        assert "n reduced to 249 (odd-n formula)" in err
        assert json.loads(out)["n"] == 249

    def test_missing_p_exits_2(self, capsys):
        code, _, err = run(capsys, "predict", "bernoulli-1f", "--n", "250",
                           "--W", "0.01")
        assert code == 2
        assert "--p is required" in err
        # the parity warning must not fire before validation
        assert "n reduced" not in err

    def test_unknown_predictor(self, capsys):
        code, _, _ = run(capsys, "predict", "parabolic", "--W", "0")
        assert code == 2

    def test_out_file_with_manifest(self, capsys, tmp_path):
        out_path = tmp_path / "pred.json"
        code, out, err = run(capsys, "predict", "flat-iid", "--W", "0",
                             "--out", str(out_path))
        assert code == 0
        assert json.loads(out_path.read_text()) == json.loads(out)
        manifest = json.loads((tmp_path / "pred.manifest.json").read_text())
        assert manifest["command"] == "predict"
        assert "tool_version" in manifest and "timestamp" in manifest


class TestOptimizeP:
    def test_iid_frozen(self, capsys):
        _, out, _ = run(capsys, "optimize-p", "--W", "1", "--J", "1")
        assert json.loads(out)["p_star"] == pytest.approx(
            math.sqrt(2) - 1, rel=1e-11)
        _, out, _ = run(capsys, "optimize-p", "--W", "0.01", "--J", "1")
        assert "0.0904987562112" in out

    def test_onef(self, capsys):
        code, out, _ = run(capsys, "optimize-p", "--prior", "1f",
                           "--n", "251", "--W", "0.01", "--J", "1")
        assert code == 0
        payload = json.loads(out)
        assert payload["p_star"] == pytest.approx(0.18709, abs=1e-3)
        assert payload["predicted_mi"] > 0

    def test_onef_needs_n(self, capsys):
        code, _, err = run(capsys, "optimize-p", "--prior", "1f",
                           "--W", "0.01")
        assert code == 2
        assert "--n is required" in err


class TestSweep:
    def test_csv_schema_and_determinism(self, capsys, tmp_path):
        argv = ["sweep", "--n", "64", "--trials", "6", "--W", "0.01",
                "--p-grid", "0.3,0.5", "--seed", "9"]
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        code, out, _ = run(capsys, *argv, "--out", str(a))
        assert code == 0
        assert "rows: 2" in out
        run(capsys, *argv, "--out", str(b))
        header, rows = read_csv(a)
        assert header == CSV_HEADER
        assert a.read_text() == b.read_text()
        assert [r["p"] for r in rows] == ["0.3", "0.5"]
        assert rows[0]["n"] == "64"
        assert rows[0]["prior"] == "iid"
        assert float(rows[0]["mi_mean"]) > 0
        manifest = json.loads((tmp_path / "a.manifest.json").read_text())
        assert manifest["master_seed"] == 9
        assert manifest["seed_policy"].startswith("numpy.random.SeedSequence")
        assert manifest["parameters"]["p_grid"] == [0.3, 0.5]

    def test_colon_grid(self, capsys, tmp_path):
        out_csv = tmp_path / "g.csv"
        code, out, _ = run(capsys, "sweep", "--n", "32", "--trials", "4",
                           "--W", "1", "--p-grid", "0.5:0.9:0.2",
                           "--out", str(out_csv))
        assert code == 0
        _, rows = read_csv(out_csv)
        assert [r["p"] for r in rows] == ["0.5", "0.7", "0.9"]

    def test_bad_grid_value(self, capsys, tmp_path):
        code, _, err = run(capsys, "sweep", "--n", "32", "--trials", "4",
                           "--W", "1", "--p-grid", "0.5,1.5",
                           "--out", str(tmp_path / "x.csv"))
        assert code == 2
        assert not (tmp_path / "x.csv").exists()

    def test_empty_grid_rejected(self, capsys, tmp_path):
        """An explicitly empty grid (e.g. unset shell var) is a usage error."""
        code, _, err = run(capsys, "sweep", "--n", "32", "--trials", "4",
                           "--W", "1", "--p-grid", "",
                           "--out", str(tmp_path / "x.csv"))
        assert code == 2 and "empty p grid" in err
        assert not (tmp_path / "x.csv").exists()

    def test_onef_even_n_reduced(self, capsys, tmp_path):
        out_csv = tmp_path / "f.csv"
        code, _, err = run(capsys, "sweep", "--prior", "1f", "--n", "250",
                           "--trials", "2", "--W", "0.01", "--p-grid", "0.5",
                           "--out", str(out_csv))
        assert code == 0
        assert "n reduced to 249 (odd-n formula)" in err
        _, rows = read_csv(out_csv)
        assert rows[0]["n"] == "249"
        manifest = json.loads((tmp_path / "f.manifest.json").read_text())
        assert manifest["parameters"]["n"] == 249
        assert manifest["parameters"]["n_requested"] == 250

    def test_worker_env_default(self, capsys, tmp_path, monkeypatch):
        serial = tmp_path / "serial.csv"
        run(capsys, "sweep", "--n", "32", "--trials", "16", "--W", "1",
            "--p-grid", "0.5", "--seed", "3", "--out", str(serial))
        monkeypatch.setenv("APMI_WORKERS", "2")
        pooled = tmp_path / "pooled.csv"
        code, _, _ = run(capsys, "sweep", "--n", "32", "--trials", "16",
                         "--W", "1", "--p-grid", "0.5", "--seed", "3",
                         "--out", str(pooled))
        assert code == 0
        manifest = json.loads((tmp_path / "pooled.manifest.json").read_text())
        assert manifest["parameters"]["workers"] == 2
        assert serial.read_text() == pooled.read_text()


class TestConfigFile:
    def test_config_supplies_flags(self, capsys, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("W = 0.5\nJ = 2.0\n# comment\n")
        code, out, _ = run(capsys, "mi", "--config", str(cfg),
                           "--family", "pinhole", "--n", "4")
        assert code == 0
        payload = json.loads(out)
        assert payload["W"] == 0.5
        assert payload["J"] == 2.0

    def test_explicit_flag_wins(self, capsys, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("W = 0.5\n")
        _, out, _ = run(capsys, "mi", "--config", str(cfg),
                        "--family", "pinhole", "--n", "4", "--W", "0.01")
        assert json.loads(out)["W"] == 0.01

    def test_unknown_key(self, capsys, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("zoom = 3\n")
        code, _, _ = run(capsys, "mi", "--config", str(cfg),
                         "--family", "pinhole", "--n", "4", "--W", "1")
        assert code == 2

    def test_missing_config_file(self, capsys):
        code, _, _ = run(capsys, "mi", "--config", "/nonexistent.cfg",
                         "--family", "pinhole", "--n", "4", "--W", "1")
        assert code == 2


class TestReproduce:
    def test_fig2_orderings(self, capsys, tmp_path):
        out_csv = tmp_path / "fig2.csv"
        code, _, _ = run(capsys, "reproduce", "fig2", "--points", "5",
                         "--out", str(out_csv))
        assert code == 0
        header, rows = read_csv(out_csv)
        assert header == CSV_HEADER
        assert len(rows) == 15
        by_w = {}
        for r in rows:
            by_w.setdefault(r["W"], {})[r["family"]] = float(r["mi_predicted"])
        assert len(by_w) == 5
        for W, curves in by_w.items():
            assert curves["flat"] >= curves["bernoulli-half"]
            assert curves["bernoulli-pstar"] >= curves["bernoulli-half"] - 1e-15
        # strict separation where shot noise dominates
        smallest = min(by_w, key=float)
        gap = (by_w[smallest]["bernoulli-pstar"]
               - by_w[smallest]["bernoulli-half"])
        assert gap > 0.01
        manifest = json.loads((tmp_path / "fig2.manifest.json").read_text())
        assert len(manifest["parameters"]["W_grid"]) == 5

    def test_fig3_smoke(self, capsys, tmp_path):
        out_csv = tmp_path / "fig3.csv"
        code, _, err = run(capsys, "reproduce", "fig3", "--n", "64",
                           "--trials", "4", "--p-grid", "0.3",
                           "--out", str(out_csv))
        assert code == 0
        assert "n reduced to 63" in err
        manifest = json.loads((tmp_path / "fig3.manifest.json").read_text())
        assert manifest["command"] == "reproduce fig3"
        assert manifest["parameters"]["W"] == 0.01  # figure default

    def test_selftest_passes(self, capsys):
        code, out, _ = run(capsys, "reproduce", "selftest")
        assert code == 0
        assert "checks passed" in out
        assert "FAIL" not in out


class TestExitCodes:
    def test_version(self, capsys):
        code, out, _ = run(capsys, "--version")
        assert code == 0

    def test_no_command(self, capsys):
        code, _, _ = run(capsys)
        assert code == 2

    def test_numerical_failures_exit_3(self, capsys, monkeypatch):
        for exc in (FlatnessCheckError("bad spectrum"),
                    NumericalError("quadrature diverged")):
            monkeypatch.setattr(cli_module, "_dispatch",
                                lambda args, e=exc: (_ for _ in ()).throw(e))
            code, _, err = run(capsys, "predict", "flat-iid", "--W", "0")
            assert code == 3
            assert "error" in err

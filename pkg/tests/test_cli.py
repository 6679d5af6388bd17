import csv
import json

import numpy as np
import pytest

from crystal_qaoa import data_path, fileio
from crystal_qaoa.cli import main
from crystal_qaoa.ising import IsingModel, random_instance


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@pytest.fixture
def small_instances(tmp_path):
    paths = []
    for seed in (0, 1):
        p = tmp_path / f"rand{seed}.json"
        fileio.save_instance(p, random_instance(6, 1.0, seed))
        paths.append(str(p))
    return paths


class TestGenerate:
    def test_lattice_2x2x2(self, tmp_path, capsys):
        out = tmp_path / "fcc32.json"
        assert main(["generate", "--lattice", str(data_path("fcc_2x2x2.json")), "-o", str(out)]) == 0
        assert fileio.load_instance(out).n_sites == 32
        assert "N = 32" in capsys.readouterr().out

    def test_random_deterministic(self, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        for path in (a, b):
            assert main(["generate", "--random", "10", "--seed", "1", "-o", str(path)]) == 0
        assert a.read_bytes() == b.read_bytes()
        assert fileio.load_instance(a).n_sites == 10

    def test_tiny_cutoff_warns(self, tmp_path, caplog):
        spec = fileio.read_json(data_path("fcc_1x1x3.json"))
        spec["cutoff"] = 0.1
        spec["pair_coefficients"] = []
        (tmp_path / "s.json").write_text(json.dumps(spec))
        out = tmp_path / "i.json"
        assert main(["generate", "--lattice", str(tmp_path / "s.json"), "-o", str(out)]) == 0
        assert fileio.load_instance(out).couplings == ()
        assert "no couplings" in caplog.text

    def test_malformed_spec(self, tmp_path, caplog):
        (tmp_path / "bad.json").write_text('{"lattice_constant": 3.8,\n "multipliers": [1, 1]}')
        assert main(["generate", "--lattice", str(tmp_path / "bad.json")]) == 2
        assert "multipliers" in caplog.text


class TestSolveExact:
    def test_constant_model(self, tmp_path):
        fileio.save_instance(tmp_path / "c.json", IsingModel(5, 1.5))
        assert main(["solve-exact", str(tmp_path / "c.json"), "-o", str(tmp_path / "s.json")]) == 0
        d = fileio.read_json(tmp_path / "s.json")
        assert d["degeneracy"] == 32 and d["min_energy"] == 1.5 and d["next_energy"] is None

    def test_af_pair(self, tmp_path):
        fileio.save_instance(tmp_path / "af.json", IsingModel(2, 0.0, [0, 0], ((0, 1, 1.0),)))
        assert main(["solve-exact", str(tmp_path / "af.json"), "--out-dir", str(tmp_path)]) == 0
        d = fileio.read_json(tmp_path / "spectrum_af.json")
        assert d["degeneracy"] == 2 and d["ground_states"] == [[-1, 1], [1, -1]]

    def test_limit_is_resource_error(self, tmp_path, caplog):
        fileio.save_instance(tmp_path / "m.json", random_instance(8, 1.0, 0))
        assert main(["solve-exact", str(tmp_path / "m.json"), "--limit", "6", "--out-dir", str(tmp_path)]) == 3
        assert "limit" in caplog.text

    def test_lattice_spec_input(self, tmp_path):
        assert main(["solve-exact", str(data_path("fcc_1x1x3.json")), "--out-dir", str(tmp_path)]) == 0
        assert fileio.read_json(tmp_path / "spectrum_fcc_1x1x3.json")["n"] == 12


class TestRun:
    def test_fixed_has_no_evaluations(self, tmp_path, small_instances):
        out = tmp_path / "out"
        args = ["run", "--instance", *small_instances, "--strategy", "fixed", "--depths", "1", "3",
                "--shots", "2000", "--out-dir", str(out)]
        assert main(args) == 0
        runs = read_csv(out / "runs.csv")
        assert len(runs) == 4 and {r["evaluations"] for r in runs} == {"0"}
        assert (out / "histogram_rand0_fixed_p3.csv").exists()
        report = fileio.read_json(out / "report_rand1_fixed_p1.json")
        assert report["shots"] == 2000 and 0 <= report["success_rate"] <= 1
        summary = read_csv(out / "summary.csv")
        assert [r["p"] for r in summary] == ["1", "3"]
        assert set(summary[0]) == {"p", "rand0:fixed", "rand1:fixed"}

    def test_random_baseline_is_uniform(self, tmp_path, small_instances):
        out = tmp_path / "out"
        args = ["run", "--instance", small_instances[0], "--strategy", "fixed", "--depths", "1",
                "--random-baseline", "--shots", "64000", "--out-dir", str(out)]
        assert main(args) == 0
        rows = read_csv(out / "histogram_rand0_random_p0.csv")
        assert sum(int(r["count"]) for r in rows) == 64000
        freq = np.array([float(r["frequency"]) for r in rows])
        assert len(rows) == 64
        np.testing.assert_allclose(freq, 1 / 64, atol=5 * np.sqrt(1 / 64 / 64000))

    def test_failed_cell_recorded(self, tmp_path, small_instances, caplog):
        big = tmp_path / "big.json"
        fileio.save_instance(big, random_instance(12, 1.0, 0))
        out = tmp_path / "out"
        args = ["run", "--instance", small_instances[0], str(big), "--strategy", "fixed", "--depths", "2",
                "--max-qubits", "8", "--shots", "500", "--out-dir", str(out)]
        assert main(args) == 1
        runs = {r["instance"]: r for r in read_csv(out / "runs.csv")}
        assert runs["big"]["status"] == "failed" and runs["rand0"]["status"] == "ok"
        assert read_csv(out / "summary.csv")[0]["big:fixed"] == "failed"

    def test_config_file_and_override(self, tmp_path, small_instances):
        cfg = {"instances": small_instances[:1], "strategy": "full-opt", "depths": [2], "shots": 1000,
               "seed": 3, "budget": 30, "out_dir": str(tmp_path / "a")}
        (tmp_path / "cfg.json").write_text(json.dumps(cfg))
        assert main(["run", "--config", str(tmp_path / "cfg.json"), "--out-dir", str(tmp_path / "b")]) == 0
        assert not (tmp_path / "a").exists()
        rep = fileio.read_json(tmp_path / "b" / "report_rand0_full-opt_p2.json")
        assert 0 < rep["evaluations"] <= 30
        assert len(read_csv(tmp_path / "b" / "trace_rand0_full-opt_p2.csv")) == rep["evaluations"]

    def test_unknown_config_field(self, tmp_path, small_instances, caplog):
        (tmp_path / "cfg.json").write_text(json.dumps({"instances": small_instances, "strategy": "fixed",
                                                       "depths": [1], "shot": 10}))
        assert main(["run", "--config", str(tmp_path / "cfg.json")]) == 2
        assert "shot" in caplog.text

    def test_byte_identical_summaries(self, tmp_path, small_instances):
        for d in ("x", "y"):
            args = ["run", "--instance", *small_instances, "--strategy", "linear-ramp", "--depths", "2",
                    "--budget", "25", "--shots", "3000", "--seed", "11", "--random-baseline",
                    "--out-dir", str(tmp_path / d)]
            assert main(args) == 0
        for name in ("summary.csv", "runs.csv", "histogram_rand1_linear-ramp_p2.csv", "binned_rand0_random_p0.csv"):
            assert (tmp_path / "x" / name).read_bytes() == (tmp_path / "y" / name).read_bytes()

    def test_workers_match_serial(self, tmp_path, small_instances):
        for d, w in (("s", "1"), ("w", "2")):
            args = ["run", "--instance", *small_instances, "--strategy", "fixed", "--depths", "1", "2",
                    "--shots", "1000", "--workers", w, "--out-dir", str(tmp_path / d)]
            assert main(args) == 0
        assert (tmp_path / "s" / "summary.csv").read_bytes() == (tmp_path / "w" / "summary.csv").read_bytes()

    def test_transfer_strategy_via_run(self, tmp_path, small_instances):
        out = tmp_path / "out"
        args = ["run", "--instance", small_instances[1], "--strategy", "transfer",
                "--transfer-source", small_instances[0], "--transfer-strategy", "linear-ramp",
                "--depths", "2", "--budget", "20", "--shots", "1000", "--out-dir", str(out)]
        assert main(args) == 0
        rep = fileio.read_json(out / "report_rand1_transfer_p2.json")
        assert rep["source_instance"] == "rand0" and rep["ramp_params"] is not None


class TestTransfer:
    def test_source_equals_target_matches_run(self, tmp_path, small_instances):
        src = small_instances[0]
        assert main(["run", "--instance", src, "--strategy", "full-opt", "--depths", "3", "--budget", "40",
                     "--shots", "4000", "--seed", "5", "--out-dir", str(tmp_path / "run")]) == 0
        assert main(["transfer", "--source", src, "--target", src, "--depths", "3", "--budget", "40",
                     "--shots", "4000", "--seed", "5", "--out-dir", str(tmp_path / "tr")]) == 0
        plain = (tmp_path / "run" / "histogram_rand0_full-opt_p3.csv").read_bytes()
        assert (tmp_path / "tr" / "histogram_rand0_full-opt_p3.csv").read_bytes() == plain
        assert (tmp_path / "tr" / "histogram_rand0_from_rand0_full-opt_p3.csv").read_bytes() == plain
        row = read_csv(tmp_path / "tr" / "transfer_summary.csv")[0]
        assert row["source_success_rate"] == row["target_success_rate"]

    def test_12_to_16(self, tmp_path):
        out = tmp_path / "tr"
        args = ["transfer", "--source", str(data_path("fcc_1x1x3.json")), "--target", str(data_path("fcc_1x2x2.json")),
                "--strategy", "linear-ramp", "--depths", "3", "--budget", "40", "--shots", "20000", "--out-dir", str(out)]
        assert main(args) == 0
        row = read_csv(out / "transfer_summary.csv")[0]
        assert row["target"] == "fcc_1x2x2"
        rep = fileio.read_json(out / "report_fcc_1x2x2_from_fcc_1x1x3_linear-ramp_p3.json")
        assert rep["n"] == 16 and rep["ramp_params"] is not None

    def test_12_to_32_reports_failure(self, tmp_path, caplog):
        out = tmp_path / "tr"
        args = ["transfer", "--source", str(data_path("fcc_1x1x3.json")), "--target", str(data_path("fcc_2x2x2.json")),
                "--strategy", "gamma-only", "--depths", "2", "--budget", "15", "--shots", "1000", "--out-dir", str(out)]
        assert main(args) == 1
        rep = fileio.read_json(out / "report_fcc_2x2x2_from_fcc_1x1x3_gamma-only_p2.json")
        assert rep["status"] == "failed" and rep["n"] == 32 and rep["schedule"]["p"] == 2
        row = read_csv(out / "transfer_summary.csv")[0]
        assert row["target_success_rate"] == "failed" and float(row["source_success_rate"]) > 0

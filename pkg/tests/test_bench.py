import csv
import json

import numpy as np
import pytest
from click.testing import CliRunner

from grpcoll.bench import experiments
from grpcoll.bench.cli import main as cli_main
from grpcoll.bench.reports import SCHEMA_VERSION, ExperimentReport
from grpcoll.errors import InvalidDimensionError
from grpcoll.obfuscation import DpScheme, GrpScheme, NoScheme, derive_seed


class TestReports:
    def _report(self):
        return ExperimentReport(
            experiment="demo",
            config={"seed": 0},
            rows=[{"N": 1, "accuracy": 0.5}, {"N": 2, "accuracy": 0.25, "extra": "x"}],
            seeds={"base": 0},
        )

    def test_json_round_trip(self, tmp_path):
        report = self._report()
        path = report.to_json(tmp_path / "r.json")
        back = ExperimentReport.from_json(path)
        assert back.rows == report.rows
        assert back.config == report.config
        assert back.schema_version == SCHEMA_VERSION

    def test_csv_values_match_json_rows(self, tmp_path):
        report = self._report()
        json_path, csv_path = report.save(tmp_path)
        rows = json.loads(json_path.read_text())["rows"]
        with open(csv_path, newline="") as f:
            csv_rows = list(csv.DictReader(f))
        assert len(csv_rows) == len(rows)
        for jrow, crow in zip(rows, csv_rows):
            for key, value in jrow.items():
                assert crow[key] == str(value)

    def test_csv_union_of_columns(self, tmp_path):
        _, csv_path = self._report().save(tmp_path)
        with open(csv_path, newline="") as f:
            header = next(csv.reader(f))
        assert header == ["N", "accuracy", "extra"]


class TestDeriveSeed:
    def test_deterministic(self):
        assert derive_seed(1, 2, 3) == derive_seed(1, 2, 3)

    def test_path_sensitive(self):
        assert derive_seed(1, 2, 3) != derive_seed(1, 3, 2)
        assert derive_seed(1, 0) != derive_seed(2, 0)


class TestSchemes:
    def test_grp_same_key_both_phases(self):
        from grpcoll.datasets import synth_gaussian_two_class
        from grpcoll.projection import project_dataset

        ds = synth_gaussian_two_class(6, 1.0, 10, seed=0)
        scheme = GrpScheme(k=3, base_seed=4)
        a = scheme.obfuscate(ds, participant=2, phase=0)
        b = scheme.obfuscate(ds, participant=2, phase=1)
        assert np.array_equal(a.vectors, b.vectors)
        key = scheme.key_for(2, 6)
        assert np.array_equal(a.vectors, project_dataset(key, ds).vectors)

    def test_grp_keys_differ_per_participant(self):
        scheme = GrpScheme(k=3, base_seed=4)
        assert not np.array_equal(
            scheme.key_for(0, 6).matrix, scheme.key_for(1, 6).matrix
        )

    def test_dp_noise_differs_per_phase(self):
        from grpcoll.datasets import synth_gaussian_two_class

        ds = synth_gaussian_two_class(4, 1.0, 10, seed=0)
        scheme = DpScheme(scale=1.0, base_seed=0)
        a = scheme.obfuscate(ds, participant=0, phase=0)
        b = scheme.obfuscate(ds, participant=0, phase=1)
        assert not np.array_equal(a.vectors, b.vectors)

    def test_none_identity(self):
        from grpcoll.datasets import synth_gaussian_two_class

        ds = synth_gaussian_two_class(4, 1.0, 10, seed=0)
        out = NoScheme().obfuscate(ds, participant=0)
        assert np.array_equal(out.vectors, ds.vectors)

    def test_output_dims(self):
        assert GrpScheme(k=3, base_seed=0).output_dim(10) == 3
        assert DpScheme(scale=1.0, base_seed=0).output_dim(10) == 10
        assert NoScheme().output_dim(10) == 10


class TestExperiments:
    def test_scaling_toy_reproducible(self):
        a = experiments.exp_scaling("toy2d", [2], seed=3, smoke=True, include_ncl=False)
        b = experiments.exp_scaling("toy2d", [2], seed=3, smoke=True, include_ncl=False)

        def strip_timing(rows):
            return [
                {k: v for k, v in row.items() if not k.endswith("_seconds")}
                for row in rows
            ]

        assert strip_timing(a.rows) == strip_timing(b.rows)

    def test_scaling_has_plain_reference(self):
        report = experiments.exp_scaling("toy2d", [2], seed=0, smoke=True, include_ncl=True)
        assert report.rows[0]["scheme"] == "none" and report.rows[0]["N"] == 1
        modes = [r["mode"] for r in report.rows[1:]]
        assert modes == ["collaborative", "non_collaborative"]

    def test_compression_rejects_rho_below_one(self):
        with pytest.raises(InvalidDimensionError):
            experiments.exp_compression("toy10d", [0.5], N=2, smoke=True)

    def test_dp_records_both_epsilon_conventions(self):
        report = experiments.exp_dp("toy2d", epsilon_list=[100.0], N=1, smoke=True)
        row = report.rows[0]
        assert {"epsilon_l1_diameter", "epsilon_per_element", "noise_scale"} <= set(row)
        sens = report.config["sensitivity_l1_diameter"]
        assert row["noise_scale"] == pytest.approx(sens / 100.0, rel=1e-4)

    def test_condition_trend_fields(self):
        report = experiments.exp_condition(d=10, condition_list=[10.0], seed=0, smoke=True)
        assert report.rows[0]["scheme"] == "none"
        assert report.rows[1]["condition"] == 10.0

    def test_attack_toy(self):
        report = experiments.exp_attack("toy10d", k=5, trials=2000, seed=0, sample_limit=50)
        row = report.rows[0]
        vectors = experiments.load_workload("toy10d", seed=0).train.vectors[:50]
        sq = np.sum(vectors**2, axis=1)
        expected = float(np.mean(sq * (1 + 1 / 10)) / 5)
        assert row["mean_predicted_variance"] == pytest.approx(expected, abs=1e-3)
        assert row["matched_laplace_scale"] == pytest.approx(np.sqrt(expected / 2), abs=1e-3)
        assert row["square_key_recovery_rel_error"] < 1e-8

    def test_overhead_networked_toy(self):
        report = experiments.exp_overhead(N=2, dataset_id="toy2d", seed=0, smoke=True)
        participant_rows = [r for r in report.rows if r["participant"] != "coordinator"]
        coord = report.rows[-1]
        assert len(participant_rows) == 2
        assert coord["bytes_received"] == sum(r["bytes_sent"] for r in participant_rows)
        assert all(r["obfuscation_seconds"] >= 0 for r in participant_rows)
        assert coord["train_seconds"] > 0
        assert 0 <= coord["accuracy"] <= 1


class TestCli:
    def test_gen_data(self, tmp_path):
        runner = CliRunner()
        result = runner.invoke(cli_main, ["gen-data", "--out", str(tmp_path)])
        assert result.exit_code == 0, result.output
        assert (tmp_path / "toy2d.csv").exists()
        assert (tmp_path / "toy10d.csv").exists()
        assert (tmp_path / "synth-images-idx3-ubyte").exists()
        from grpcoll.datasets import load_idx

        ds = load_idx(
            tmp_path / "synth-images-idx3-ubyte", tmp_path / "synth-labels-idx1-ubyte"
        )
        assert len(ds) == 512 and ds.dimension == 784

    def test_exp_condition_cli(self, tmp_path):
        runner = CliRunner()
        result = runner.invoke(
            cli_main,
            ["exp-condition", "--condition", "10", "--smoke", "--out", str(tmp_path)],
        )
        assert result.exit_code == 0, result.output
        assert (tmp_path / "condition-d10.json").exists()
        assert (tmp_path / "condition-d10.csv").exists()

    def test_verify_properties_smoke(self):
        runner = CliRunner()
        result = runner.invoke(cli_main, ["verify-properties", "--trials", "20000"])
        assert result.exit_code == 0, result.output
        assert "PASS" in result.output

    def test_dp_requires_parameter(self):
        runner = CliRunner()
        result = runner.invoke(cli_main, ["exp-dp", "toy2d"])
        assert result.exit_code != 0

import json

import pytest

from agst import save_dataset, two_cluster_bundle
from agst.cli import cli_main


@pytest.fixture
def dataset_dir(tmp_path, monkeypatch):
    """A toy dataset saved under the name 'cora', with tmp_path as cwd."""
    bundle = two_cluster_bundle(n=160, noise_fraction=0.1, seed=0)
    save_dataset(bundle, tmp_path / "cora")
    monkeypatch.chdir(tmp_path)
    return tmp_path


class TestRunCommand:
    def test_happy_path_writes_schema_valid_report(self, dataset_dir, capsys):
        code = cli_main(["run", "--dataset", "cora", "--protocol", "balanced",
                         "--k", "5", "--method", "agst", "--runs", "2"])
        assert code == 0
        report = json.loads((dataset_dir / "report.json").read_text())
        assert set(report) >= {"config", "runs", "mean", "ci95", "wall_ms"}
        assert len(report["runs"]) == 2
        assert {"seed", "accuracy", "iterations"} <= set(report["runs"][0])
        out = capsys.readouterr().out
        assert "accuracy" in out

    def test_k_zero_is_usage_error(self, dataset_dir, capsys):
        code = cli_main(["run", "--dataset", "cora", "--k", "0"])
        assert code == 2
        assert "positive" in capsys.readouterr().err

    def test_unknown_flag_is_usage_error(self, dataset_dir, capsys):
        assert cli_main(["run", "--dataset", "cora", "--frobnicate"]) == 2

    def test_missing_dataset_is_runtime_error(self, tmp_path, monkeypatch, capsys):
        monkeypatch.chdir(tmp_path)
        code = cli_main(["run", "--dataset", "nowhere", "--runs", "1"])
        assert code == 1
        assert "error" in capsys.readouterr().err

    def test_unwritable_output_fails_with_diagnostic(self, dataset_dir, capsys):
        code = cli_main(["run", "--dataset", "cora", "--runs", "1",
                         "--method", "lp-only", "--output", "no/such/dir/report.json"])
        assert code == 1
        assert "error" in capsys.readouterr().err

    def test_method_and_seed_flags_respected(self, dataset_dir):
        code = cli_main(["run", "--dataset", "cora", "--method", "lp-only",
                         "--runs", "3", "--seed", "5", "--output", "lp.json"])
        assert code == 0
        report = json.loads((dataset_dir / "lp.json").read_text())
        assert [r["seed"] for r in report["runs"]] == [5, 6, 7]
        assert report["config"]["method"] == "lp-only"


class TestConfigFile:
    def test_file_values_used_and_flags_override(self, dataset_dir):
        (dataset_dir / "exp.cfg").write_text(
            "runs = 3\nmethod = lp-only\nseed = 9\n# comment\n"
        )
        code = cli_main(["run", "--dataset", "cora", "--config", "exp.cfg"])
        assert code == 0
        report = json.loads((dataset_dir / "report.json").read_text())
        assert len(report["runs"]) == 3
        assert report["config"]["seed"] == 9

        code = cli_main(["run", "--dataset", "cora", "--config", "exp.cfg",
                         "--runs", "2", "--output", "b.json"])
        assert code == 0
        report = json.loads((dataset_dir / "b.json").read_text())
        assert len(report["runs"]) == 2  # explicit flag wins
        assert report["config"]["seed"] == 9

    def test_malformed_config_file(self, dataset_dir, capsys):
        (dataset_dir / "bad.cfg").write_text("runs 3\n")
        code = cli_main(["run", "--dataset", "cora", "--config", "bad.cfg"])
        assert code == 2
        assert "key = value" in capsys.readouterr().err


class TestSweepCommand:
    def test_degenerate_sweep_writes_csv(self, dataset_dir, capsys):
        code = cli_main(["sweep", "--dataset", "cora", "--method", "lp-only",
                         "--runs", "2", "--axis", "steps", "--values", "10",
                         "--output", "sweep.csv"])
        assert code == 0
        lines = (dataset_dir / "sweep.csv").read_text().strip().splitlines()
        assert lines[0] == "axis,value,mean,ci95"
        assert len(lines) == 2

    def test_axis_required(self, dataset_dir):
        assert cli_main(["sweep", "--dataset", "cora", "--values", "1"]) == 2


class TestConvertCommand:
    def test_converts_content_release(self, tmp_path, monkeypatch, capsys):
        monkeypatch.chdir(tmp_path)
        raw = tmp_path / "raw"
        raw.mkdir()
        (raw / "x.content").write_text("a\t1\t0\tml\nb\t0\t1\tdb\nc\t1\t1\tml\n")
        (raw / "x.cites").write_text("a\tb\nb\tc\n")
        code = cli_main(["convert", "--input", "raw", "--output", "out"])
        assert code == 0
        assert "n=3" in capsys.readouterr().out
        from agst import load_dataset

        assert load_dataset(tmp_path / "out").graph.m == 2

    def test_convert_missing_input(self, tmp_path, monkeypatch, capsys):
        monkeypatch.chdir(tmp_path)
        assert cli_main(["convert", "--input", "nope", "--output", "out"]) == 1


class TestGradcheckCommand:
    def test_prints_error_and_passes(self, capsys):
        code = cli_main(["gradcheck", "--instances", "3"])
        out = capsys.readouterr().out
        assert code == 0
        assert "max relative error" in out
        assert "PASS" in out

    def test_impossible_threshold_fails(self, capsys):
        code = cli_main(["gradcheck", "--instances", "2", "--threshold", "0"])
        assert code == 1
        assert "FAIL" in capsys.readouterr().out


class TestEntryPoint:
    def test_no_command_is_usage_error(self):
        assert cli_main([]) == 2

    def test_help_exits_zero(self):
        assert cli_main(["--help"]) == 0

import json

import pytest

from mogalign import MoGParams, make_ground_truth
from mogalign.cli import EXIT_IO, EXIT_OK, EXIT_USAGE, main


class TestExitCodes:
    def test_usage_error_on_unknown_command(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["frobnicate"])
        assert exc.value.code == EXIT_USAGE

    def test_usage_error_on_bad_flag_value(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["kd", "--teacher", "x.json", "--n-final", "many"])
        assert exc.value.code == EXIT_USAGE

    def test_io_error_on_missing_file(self, capsys):
        assert main(["kd", "--teacher", "/nonexistent/teacher.json"]) == EXIT_IO

    def test_io_error_on_bad_json(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        assert main(["kd", "--teacher", str(bad)]) == EXIT_IO


class TestCommands:
    def test_sft_writes_model(self, tmp_path, capsys):
        assert main(["sft", "--out", str(tmp_path)]) == EXIT_OK
        model = MoGParams.load(tmp_path / "sft.json")
        assert model.n_components == 6

    def test_kd_consumes_teacher(self, tmp_path, capsys):
        teacher = tmp_path / "teacher.json"
        make_ground_truth().save(teacher)
        assert main(
            ["kd", "--teacher", str(teacher), "--n-final", "3", "--out", str(tmp_path)]
        ) == EXIT_OK
        assert MoGParams.load(tmp_path / "kd.json").n_components == 3

    def test_align_writes_artifacts(self, tmp_path, capsys):
        init = tmp_path / "init.json"
        make_ground_truth().save(init)
        code = main(
            ["align", "--init", str(init), "--algorithm", "ppo",
             "--iterations", "3", "--out", str(tmp_path)]
        )
        assert code == EXIT_OK
        assert (tmp_path / "aligned.json").exists()
        assert (tmp_path / "train_log.csv").exists()

    def test_pipeline_prints_reports(self, tmp_path, capsys):
        code = main(
            ["pipeline", "--variant", "KA", "--iterations", "3", "--out", str(tmp_path)]
        )
        assert code == EXIT_OK
        out = capsys.readouterr().out
        assert "final:" in out
        assert (tmp_path / "final.json").exists()

    def test_check_grad(self, capsys):
        assert main(["check-grad", "--n", "5"]) == EXIT_OK
        assert "max relative error" in capsys.readouterr().out

    def test_sweep_and_report_and_plot(self, tmp_path, capsys):
        config = tmp_path / "sweep.json"
        config.write_text(
            json.dumps(
                {
                    "algorithm": "ppo",
                    "beta_values": [1.0],
                    "iteration_values": [3],
                    "n_final_values": [4],
                    "n_trials": 1,
                    "metric_samples": 1000,
                }
            )
        )
        out = tmp_path / "sweep_out"
        assert main(["sweep", "--config", str(config), "--out", str(out)]) == EXIT_OK
        assert (out / "results.csv").exists()

        report_dir = tmp_path / "report"
        assert main(
            ["report", "--results", str(out / "results.csv"), "--out", str(report_dir)]
        ) == EXIT_OK
        assert (report_dir / "summary.json").exists()

        fig = tmp_path / "fig.svg"
        assert main(
            ["plot", "--kind", "boxplot", "--results", str(out / "results.csv"),
             "--out", str(fig)]
        ) == EXIT_OK
        assert fig.exists()

    def test_plot_scatter_from_model(self, tmp_path, capsys):
        model = tmp_path / "m.json"
        make_ground_truth().save(model)
        fig = tmp_path / "scatter.svg"
        assert main(
            ["plot", "--kind", "scatter", "--model", str(model), "--out", str(fig)]
        ) == EXIT_OK
        assert fig.exists()

    def test_diagnose_trap(self, tmp_path, capsys):
        ref = tmp_path / "ref.json"
        make_ground_truth().save(ref)
        assert main(["diagnose-trap", "--ref", str(ref), "--n", "50"]) == EXIT_OK
        assert "starvation factor" in capsys.readouterr().out

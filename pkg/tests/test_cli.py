import json

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from locuskit.cli import config
from locuskit.cli.datasets import bundled, generate
from locuskit.cli.io import ingest_csv, read_pgm, write_csv, write_pgm
from locuskit.cli.main import (
    EXIT_NUMERIC,
    EXIT_OK,
    EXIT_VALIDATION,
    main,
    thread_cap,
)
from locuskit.cli.svg import emit_svg
from locuskit.cli.tasks import TASKS
from locuskit.errors import InvalidParameter, ParseError, SchemaMismatch


def last_error(capsys):
    lines = capsys.readouterr().err.strip().splitlines()
    return json.loads(lines[-1])


def read_metrics(out):
    with open(out / "metrics.json", encoding="utf-8") as fh:
        return json.load(fh)


class TestIngestCsv:
    def test_features_only(self, tmp_path):
        path = tmp_path / "points.csv"
        path.write_text("a,b\n1,2\n3,4\n5,6.5\n", encoding="utf-8")
        data = ingest_csv(str(path), "features-only")
        assert (data.N, data.p) == (3, 2)
        assert data.X[2, 1] == 6.5

    def test_features_and_target(self, tmp_path):
        path = tmp_path / "pairs.csv"
        path.write_text("x,y\n0,1\n1,3\n", encoding="utf-8")
        data = ingest_csv(str(path), "features+target")
        assert data.p == 1
        assert_array_equal(data.y, [1.0, 3.0])

    def test_bad_cell_names_its_row(self, tmp_path):
        rows = ["x,y"] + [f"{i},{i}" for i in range(6)] + ["7,oops", "8,8"]
        path = tmp_path / "bad.csv"
        path.write_text("\n".join(rows) + "\n", encoding="utf-8")
        with pytest.raises(ParseError) as err:
            ingest_csv(str(path), "features-only")
        assert err.value.row == 7
        assert err.value.column == "y"

    def test_labels_must_be_integers(self, tmp_path):
        path = tmp_path / "labels.csv"
        path.write_text("x,label\n0,0.5\n1,1\n", encoding="utf-8")
        with pytest.raises(SchemaMismatch):
            ingest_csv(str(path), "features+label")

    def test_sequence_with_a_time_column(self, tmp_path):
        path = tmp_path / "seq.csv"
        path.write_text("t,v1,v2\n0.5,1,0\n1.5,0,1\n", encoding="utf-8")
        seq = ingest_csv(str(path), "sequence")
        assert_array_equal(seq.times, [0.5, 1.5])
        assert seq.p == 2

    def test_unknown_schema(self, tmp_path):
        path = tmp_path / "points.csv"
        path.write_text("a\n1\n", encoding="utf-8")
        with pytest.raises(SchemaMismatch):
            ingest_csv(str(path), "images")

    def test_bundled_two_blobs(self):
        data = ingest_csv(bundled("two-blobs"), "features+label")
        assert data.p == 2
        assert set(np.unique(data.labels)) == {0, 1}


class TestWriteCsv:
    def test_round_trip(self, tmp_path, rng):
        X = rng.standard_normal((20, 3)) * 1e3
        path = tmp_path / "out.csv"
        write_csv(str(path), ["a", "b", "c"], X)
        back = ingest_csv(str(path), "features-only")
        assert np.abs(back.X - X).max() <= 1e-12 * np.abs(X).max()

    def test_pgm_round_trip(self, tmp_path, rng):
        img = rng.integers(0, 256, (4, 7)).astype(float)
        path = tmp_path / "img.pgm"
        write_pgm(str(path), img)
        assert_array_equal(read_pgm(str(path)), img)


class TestEmitSvg:
    def test_single_point(self, tmp_path):
        path = tmp_path / "one.svg"
        emit_svg("scatter", {"points": [[1.0, 2.0]]}, str(path))
        assert path.read_text(encoding="utf-8").count("<circle") == 1

    def test_byte_identical_output(self, tmp_path, rng):
        data = {"points": rng.standard_normal((10, 2)), "labels": np.arange(10) % 3}
        a, b = tmp_path / "a.svg", tmp_path / "b.svg"
        emit_svg("scatter", data, str(a))
        emit_svg("scatter", data, str(b))
        assert a.read_bytes() == b.read_bytes()

    def test_one_polyline_per_trajectory(self, tmp_path, rng):
        paths = [rng.standard_normal((5, 2)) for _ in range(3)]
        path = tmp_path / "paths.svg"
        emit_svg("trajectories", {"trajectories": paths}, str(path))
        assert path.read_text(encoding="utf-8").count("<polyline") == 3

    def test_curve_with_argmin_marker(self, tmp_path):
        path = tmp_path / "curve.svg"
        data = {"x": [0.1, 0.2, 0.4], "y": [3.0, 1.0, np.inf]}
        emit_svg("curve+argmin", data, str(path))
        text = path.read_text(encoding="utf-8")
        assert text.count("<polyline") == 1
        assert text.count("<circle") == 1

    def test_series_of_different_lengths(self, tmp_path, rng):
        series = [rng.standard_normal((3, 2)), rng.standard_normal((7, 2))]
        path = tmp_path / "lines.svg"
        emit_svg("line", {"series": series}, str(path))
        assert path.read_text(encoding="utf-8").count("<polyline") == 2

    def test_ragged_trajectories_over_points(self, tmp_path, rng):
        paths = [rng.standard_normal((n, 2)) for n in (1, 4, 9)]
        data = {"trajectories": paths, "points": rng.standard_normal((6, 2))}
        path = tmp_path / "paths.svg"
        emit_svg("trajectories", data, str(path))
        assert path.read_text(encoding="utf-8").count("<polyline") == 3

    def test_no_series(self, tmp_path):
        with pytest.raises(InvalidParameter):
            emit_svg("line", {"series": []}, str(tmp_path / "x.svg"))

    def test_unknown_kind(self, tmp_path):
        with pytest.raises(InvalidParameter):
            emit_svg("pie", {"points": [[0.0, 0.0]]}, str(tmp_path / "x.svg"))

    def test_empty_data(self, tmp_path):
        with pytest.raises(InvalidParameter):
            emit_svg("scatter", {"points": []}, str(tmp_path / "x.svg"))


class TestConfig:
    def test_derived_seeds_differ_per_task(self):
        a = config.derive_seed(7, "cluster-relax")
        b = config.derive_seed(7, "embed-trimap")
        assert a != b
        assert a == config.derive_seed(7, "cluster-relax")
        assert 0 <= a < 2**64

    def test_command_line_overrides(self, write_config):
        path = write_config({"task": "density-kde", "seed": 1, "output_dir": "x"})
        cfg = config.load_config(path, "density-kde", out="y", seed=5)
        assert (cfg.seed, cfg.output_dir) == (5, "y")

    def test_task_must_match(self, write_config):
        path = write_config({"task": "density-kde"})
        with pytest.raises(config.ConfigValidationError):
            config.load_config(path, "embed-lle")

    def test_thread_cap(self, monkeypatch):
        monkeypatch.setenv("LOCUSKIT_THREADS", "2")
        assert thread_cap() == 2
        monkeypatch.setenv("LOCUSKIT_THREADS", "many")
        assert thread_cap() is None
        monkeypatch.delenv("LOCUSKIT_THREADS")
        assert thread_cap() is None

    def test_generated_datasets_repeat(self):
        a = generate("noisy-sine", 50, 0.1, 3)
        b = generate("noisy-sine", 50, 0.1, 3)
        assert_array_equal(a.y, b.y)


class TestMain:
    def run(self, task, payload, write_config, out, *extra):
        path = write_config(payload)
        return main([task, "--config", path, "--out", str(out), *extra])

    def test_mean_shift_on_two_blobs(self, write_config, tmp_path):
        out = tmp_path / "run"
        payload = {"inputs": {"data": bundled("two-blobs")}}
        code = self.run("cluster-meanshift", payload, write_config, out, "--seed", "7")
        assert code == EXIT_OK
        metrics = read_metrics(out)
        assert metrics["n_clusters"] == 2
        assert metrics["seed"] == 7
        assert (out / "results.csv").exists()
        assert (out / "plot.svg").exists()

    def test_single_element_grid(self, write_config, tmp_path):
        out = tmp_path / "run"
        payload = {"params": {"grid": [0.4]}}
        code = self.run("tune-bandwidth", payload, write_config, out, "--seed", "7")
        assert code == EXIT_OK
        assert read_metrics(out)["h_star"] == 0.4

    def test_missing_input(self, write_config, tmp_path, capsys):
        payload = {"inputs": {"data": str(tmp_path / "missing.csv")}}
        code = self.run("cluster-meanshift", payload, write_config, tmp_path / "o")
        assert code == EXIT_VALIDATION
        assert last_error(capsys)["error"] == "validation"

    def test_unknown_parameter(self, write_config, tmp_path, capsys):
        payload = {"params": {"bandwidth": 2.0}}
        code = self.run("cluster-meanshift", payload, write_config, tmp_path / "o")
        assert code == EXIT_VALIDATION
        assert last_error(capsys)["error"] == "validation"

    def test_stochastic_task_needs_a_seed(self, write_config, tmp_path, capsys):
        code = self.run("embed-trimap", {}, write_config, tmp_path / "o")
        assert code == EXIT_VALIDATION
        error = last_error(capsys)
        assert error["type"] == "ConfigValidationError"
        assert "seed" in error["message"]

    def test_numeric_failure(self, write_config, tmp_path, capsys):
        payload = {"params": {"grid": [1e-7]}}
        code = self.run(
            "tune-bandwidth", payload, write_config, tmp_path / "o", "--seed", "7"
        )
        assert code == EXIT_NUMERIC
        assert last_error(capsys)["error"] == "numeric"

    def test_identical_runs_write_identical_artifacts(self, write_config, tmp_path):
        payload = {"params": {"dataset": "blobs", "n": 60}}
        first, second = tmp_path / "a", tmp_path / "b"
        for out in (first, second):
            code = self.run(
                "cluster-meanshift", payload, write_config, out, "--seed", "11"
            )
            assert code == EXIT_OK
        for name in ("results.csv", "plot.svg"):
            assert (first / name).read_bytes() == (second / name).read_bytes()

    def test_results_round_trip(self, write_config, tmp_path):
        out = tmp_path / "run"
        payload = {"inputs": {"data": bundled("two-blobs")}}
        assert self.run("cluster-meanshift", payload, write_config, out) == EXIT_OK
        results = ingest_csv(str(out / "results.csv"), "features-only")
        blobs = ingest_csv(bundled("two-blobs"), "features+label")
        assert_allclose(results.X[:, :2], blobs.X, rtol=0, atol=1e-12)

    @pytest.mark.parametrize("task", sorted(TASKS))
    def test_help_lists_every_key(self, task, capsys):
        with pytest.raises(SystemExit) as exit_info:
            main([task, "--help"])
        assert exit_info.value.code == 0
        text = capsys.readouterr().out
        schemas = (TASKS[task].params, config.RunConfig, config.KernelSpec)
        for schema in schemas:
            for key in schema.model_fields:
                assert f"  {key} (" in text
        for flag in ("--config", "--out", "--seed"):
            assert flag in text

    @pytest.mark.parametrize("task", sorted(TASKS))
    def test_default_config_runs_end_to_end(self, task, write_config, tmp_path):
        out = tmp_path / "run"
        assert self.run(task, {"seed": 3}, write_config, out) == EXIT_OK
        for name in ("results.csv", "metrics.json", "plot.svg"):
            assert (out / name).exists()
        assert read_metrics(out)["task"] == task

    @pytest.mark.parametrize(
        "argv",
        [
            [],
            ["cluster-meanshift"],
            ["no-such-task", "--config", "x.json"],
            ["cluster-meanshift", "--config", "x.json", "--seed", "seven"],
        ],
    )
    def test_usage_errors_are_json(self, argv, capsys):
        assert main(argv) == EXIT_VALIDATION
        error = last_error(capsys)
        assert error["error"] == "validation"
        assert error["type"] == "ConfigValidationError"

    def test_unexpected_failure_is_json(
        self, write_config, tmp_path, monkeypatch, capsys
    ):
        def broken(cfg):
            raise RuntimeError("boom")

        monkeypatch.setattr("locuskit.cli.main.run_task", broken)
        code = self.run("density-kde", {"seed": 3}, write_config, tmp_path / "o")
        assert code == EXIT_NUMERIC
        error = last_error(capsys)
        assert error["error"] == "numeric"
        assert (error["type"], error["message"]) == ("RuntimeError", "boom")

"""SVG rendering: file naming, determinism, and input validation.

Charts are checked structurally (names, XML header, byte-stable reruns), not
pixel by pixel.
"""

import math

import pytest

from spechmm import (
    ConsistencyCell,
    EmConfig,
    ExperimentConfig,
    MetricsRecord,
    SymmetricHmmSpec,
    ValidationError,
    em_consistency_experiment,
    likelihood_curve,
    random_hmm,
    run_sweep,
    write_metrics_csv,
)
from spechmm.charts import consistency_chart, likelihood_curves_chart, render_charts


@pytest.fixture(scope="module")
def sweep_csv(tmp_path_factory):
    out = tmp_path_factory.mktemp("sweepcsv")
    _, csv_path = run_sweep(ExperimentConfig(
        experiment_id="tinychart", m=2, n=3, hmm_seed=3,
        train_sizes=(50, 200), rank_values=(1, 2), train_length=3,
        test_mode="exhaustive", test_length=3, trials=2, base_seed=77,
        em_ranks=(2,), em_max_iterations=10, em_restarts=2,
        output_dir=str(out),
    ))
    return csv_path


class TestRenderCharts:
    def test_names_and_content(self, sweep_csv, tmp_path):
        paths = render_charts(sweep_csv, tmp_path)
        assert [p.name for p in paths] == [
            "tinychart_l1.svg",
            "tinychart_neg_prop.svg",
            "tinychart_comparison.svg",
        ]
        for p in paths:
            head = p.read_bytes()[:200]
            assert head.startswith(b"<?xml")
            assert b"svg" in head

    def test_byte_identical_rerun(self, sweep_csv, tmp_path):
        first = render_charts(sweep_csv, tmp_path / "a")
        second = render_charts(sweep_csv, tmp_path / "b")
        for p, q in zip(first, second):
            assert p.read_bytes() == q.read_bytes()

    def test_no_date_leak(self, sweep_csv, tmp_path):
        (path,) = render_charts(sweep_csv, tmp_path)[:1]
        assert b"<dc:date>" not in path.read_bytes()

    def test_empty_csv_fails_before_writing(self, tmp_path):
        csv_path = tmp_path / "empty.csv"
        write_metrics_csv([], csv_path)
        with pytest.raises(ValidationError, match="no data rows"):
            render_charts(csv_path, tmp_path / "out")
        assert not (tmp_path / "out").exists()

    def test_mixed_experiment_ids_rejected(self, tmp_path):
        rows = [
            MetricsRecord("a", "spectral", 10, 1, 0, 1, 0.5, 0.0, math.nan, 0.0),
            MetricsRecord("b", "spectral", 10, 1, 0, 2, 0.5, 0.0, math.nan, 0.0),
        ]
        csv_path = tmp_path / "mixed.csv"
        write_metrics_csv(rows, csv_path)
        with pytest.raises(ValidationError, match="multiple experiment ids"):
            render_charts(csv_path, tmp_path / "out")

    def test_single_cell_csv(self, tmp_path):
        rows = [MetricsRecord("solo", "spectral", 10, 1, 0, 1, 0.5, 0.25, math.nan, 0.0)]
        csv_path = tmp_path / "solo.csv"
        write_metrics_csv(rows, csv_path)
        paths = render_charts(csv_path, tmp_path)
        assert len(paths) == 3 and all(p.exists() for p in paths)


class TestLikelihoodChart:
    def test_writes_svg(self, tmp_path):
        curves = [
            likelihood_curve(SymmetricHmmSpec(0.5), [1, 2, 1], grid_size=51),
            likelihood_curve(SymmetricHmmSpec(0.5), [1, 1, 1, 1], grid_size=51),
        ]
        path = likelihood_curves_chart(curves, ["t=3", "t=4"], tmp_path / "curves.svg")
        assert path.read_bytes().startswith(b"<?xml")

    def test_rerun_stable(self, tmp_path):
        curve = likelihood_curve(SymmetricHmmSpec(0.5), [1, 2], grid_size=21)
        a = likelihood_curves_chart([curve], ["x"], tmp_path / "a.svg")
        b = likelihood_curves_chart([curve], ["x"], tmp_path / "b.svg")
        assert a.read_bytes() == b.read_bytes()

    def test_label_mismatch(self, tmp_path):
        curve = likelihood_curve(SymmetricHmmSpec(0.5), [1, 2], grid_size=21)
        with pytest.raises(ValidationError):
            likelihood_curves_chart([curve], ["a", "b"], tmp_path / "x.svg")

    def test_empty(self, tmp_path):
        with pytest.raises(ValidationError):
            likelihood_curves_chart([], [], tmp_path / "x.svg")


class TestConsistencyChart:
    def test_writes_svg(self, tmp_path):
        rows = em_consistency_experiment(
            random_hmm(2, 2, seed=5), [20, 60], 2,
            EmConfig(m_hyper=2, max_iterations=10, restarts=1, seed=3),
            sequence_length=5, base_seed=11,
        )
        path = consistency_chart(rows, tmp_path / "gap.svg")
        assert path.read_bytes().startswith(b"<?xml")

    def test_synthetic_rows(self, tmp_path):
        rows = [
            ConsistencyCell(N=10, trial=0, seed=1, em_loglik=-50.0, true_loglik=-51.0),
            ConsistencyCell(N=10, trial=1, seed=2, em_loglik=-49.0, true_loglik=-50.5),
            ConsistencyCell(N=100, trial=0, seed=3, em_loglik=-500.0, true_loglik=-500.2),
        ]
        path = consistency_chart(rows, tmp_path / "gap.svg")
        assert path.exists()

    def test_empty_rejected(self, tmp_path):
        with pytest.raises(ValidationError):
            consistency_chart([], tmp_path / "gap.svg")

import numpy as np
import pytest

from openmodrec.evaluate import (
    accuracy_per_snr,
    aggregate_from,
    build_report,
    confusion,
    export_features,
    mean_accuracy,
    read_features_csv,
    read_per_snr_csv,
    write_confusion_csv,
    write_per_snr_csv,
    write_report_csv,
)
from openmodrec.network import Architecture, init_model
from openmodrec.numcore import Rng, derive_rng
from openmodrec import svgplot


class TestMeanAccuracy:
    def test_all_correct(self):
        assert mean_accuracy([1, 2, 3], [1, 2, 3]) == 1.0

    def test_three_of_four(self):
        assert mean_accuracy([0, 1, 2, 3], [0, 1, 2, 9]) == 0.75

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            mean_accuracy([], [])

    def test_unknown_true_class_counted_correct_when_rejected(self):
        # open-set convention: true class outside the known set maps to the
        # unknown index; predicting unknown is then a hit
        n = 2
        labels = np.array([0, 1, n, n])
        preds = np.array([0, 1, n, 0])
        assert mean_accuracy(preds, labels) == 0.75


class TestPerSnr:
    def test_single_bin_equals_mean_accuracy(self):
        preds = np.array([0, 1, 0, 1])
        labels = np.array([0, 1, 1, 1])
        snrs = np.full(4, 6.0)
        rows = accuracy_per_snr(preds, labels, snrs)
        assert len(rows) == 1
        assert rows[0].accuracy == mean_accuracy(preds, labels)

    def test_constructed_step_fixture(self):
        # perfect below 0 dB, uniformly wrong-at-rate-(1-1/N) above
        n_classes = 4
        gen = Rng(9, 9).generator()
        labels, preds, snrs = [], [], []
        for snr in (-10.0, -5.0):
            for _ in range(200):
                y = int(gen.integers(0, n_classes))
                labels.append(y)
                preds.append(y)
                snrs.append(snr)
        for snr in (5.0, 10.0):
            for k in range(200):
                labels.append(int(gen.integers(0, n_classes)))
                preds.append(k % n_classes)  # independent of the label
                snrs.append(snr)
        rows = accuracy_per_snr(np.array(preds), np.array(labels), np.array(snrs))
        by_snr = {r.snr_db: r.accuracy for r in rows}
        assert by_snr[-10.0] == 1.0 and by_snr[-5.0] == 1.0
        for snr in (5.0, 10.0):
            assert abs(by_snr[snr] - 1.0 / n_classes) < 0.1

    def test_recomposition_exact(self):
        gen = Rng(10, 1).generator()
        preds = gen.integers(0, 3, 500)
        labels = gen.integers(0, 3, 500)
        snrs = gen.choice([-4.0, 0.0, 8.0], 500)
        rows = accuracy_per_snr(preds, labels, snrs)
        overall = sum(r.accuracy * r.count for r in rows) / sum(r.count for r in rows)
        assert overall == pytest.approx(mean_accuracy(preds, labels), abs=1e-12)

    def test_aggregate_ge_zero(self):
        rows = accuracy_per_snr(
            np.array([0, 0, 0, 1]), np.array([0, 1, 0, 1]), np.array([-5.0, -5.0, 3.0, 3.0])
        )
        assert aggregate_from(rows, 0.0) == 1.0


class TestConfusion:
    def test_perfect_is_diagonal(self):
        labels = np.array([0, 1, 2, 2])
        mat = confusion(labels, labels, 3)
        assert np.array_equal(mat, np.diag([1, 1, 2]))

    def test_everything_unknown_fills_last_column(self):
        n = 3
        labels = np.array([0, 1, 2, 0])
        preds = np.full(4, n)
        mat = confusion(preds, labels, n + 1)
        assert mat[:, n].sum() == 4
        assert mat[:, :n].sum() == 0

    def test_trace_over_total_equals_accuracy(self):
        gen = Rng(11, 2).generator()
        preds = gen.integers(0, 5, 300)
        labels = gen.integers(0, 5, 300)
        mat = confusion(preds, labels, 5)
        assert np.trace(mat) / mat.sum() == pytest.approx(mean_accuracy(preds, labels), abs=1e-12)

    def test_row_sums_are_class_counts(self):
        labels = np.array([0, 0, 1, 2, 2, 2])
        preds = np.array([1, 0, 1, 0, 2, 2])
        mat = confusion(preds, labels, 3)
        assert list(mat.sum(axis=1)) == [2, 1, 3]


class TestReport:
    def test_degenerate_open_equals_close(self):
        gen = Rng(12, 3).generator()
        preds = gen.integers(0, 4, 200)
        labels = gen.integers(0, 4, 200)
        snrs = gen.choice([0.0, 10.0], 200)
        names = ("a", "b", "c", "d")
        close = build_report(preds, labels, snrs, names, open_mode=False)
        open_r = build_report(preds, labels, snrs, names, open_mode=True)
        assert close.accuracy == open_r.accuracy
        assert open_r.unknown_recall is None

    def test_unknown_recall(self):
        preds = np.array([0, 2, 2, 1])
        labels = np.array([0, 2, 2, 2])
        report = build_report(preds, labels, [0.0] * 4, ("a", "b"), open_mode=True)
        assert report.unknown_recall == pytest.approx(2.0 / 3.0)

    def test_csv_round_trip(self, tmp_path):
        gen = Rng(13, 4).generator()
        preds = gen.integers(0, 3, 50)
        labels = gen.integers(0, 3, 50)
        snrs = gen.choice([2.0, 4.0], 50)
        report = build_report(preds, labels, snrs, ("x", "y", "z"))
        write_report_csv(report, tmp_path / "report.csv")
        write_per_snr_csv(report, tmp_path / "per_snr.csv")
        write_confusion_csv(report, tmp_path / "confusion.csv")
        head = (tmp_path / "report.csv").read_text().splitlines()[0]
        assert head == "metric,value"
        rows = read_per_snr_csv(tmp_path / "per_snr.csv")
        assert [r.snr_db for r in rows] == [2.0, 4.0]
        conf_lines = (tmp_path / "confusion.csv").read_text().splitlines()
        assert conf_lines[0] == "row_label,col_label,count"
        assert len(conf_lines) == 1 + 9


class TestExportFeatures:
    def _viz_model(self):
        arch = Architecture(channels="dual", cells=4, n_classes=2, viz_layer=True)
        return init_model(arch, ("BPSK", "WBFM"), seed=50)

    def _frames(self, n=20):
        from openmodrec.siggen import GenConfig, gen_frame

        cfg = GenConfig(classes=("BPSK", "WBFM"), snrs_db=(12.0,))
        return [
            gen_frame("BPSK" if k % 2 else "WBFM", 12.0, derive_rng(51, 1, k), cfg, frame_id=k)
            for k in range(n)
        ]

    def test_row_count_and_schema(self, tmp_path):
        path = tmp_path / "features.csv"
        count = export_features(self._viz_model(), self._frames(20), path)
        assert count == 20
        rows = read_features_csv(path)
        assert len(rows) == 20
        assert {r[2] for r in rows} == {"BPSK", "WBFM"}

    def test_model_without_viz_layer_rejected(self, tmp_path):
        arch = Architecture(channels="dual", cells=4, n_classes=2)
        model = init_model(arch, ("BPSK", "WBFM"), seed=50)
        with pytest.raises(ValueError):
            export_features(model, self._frames(4), tmp_path / "f.csv")

    def test_exported_centroids_near_trained_centers(self, tmp_path):
        from openmodrec.training import TrainConfig, train
        from test_training import _separable_frames

        frames = _separable_frames(per_class=25)
        arch = Architecture(channels="dual", cells=6, n_classes=2, viz_layer=True)
        model = init_model(arch, ("alternating", "steady"), seed=60)
        cfg = TrainConfig(batch_size=16, lr=0.01, lam=0.1, alpha=0.5, epochs=15, seed=60)
        model, centers, _ = train(frames, cfg, model)
        path = tmp_path / "feat.csv"
        export_features(model, frames, path)
        rows = read_features_csv(path)
        for k, name in enumerate(model.classes):
            pts = np.array([(r[0], r[1]) for r in rows if r[2] == name])
            centroid = pts.mean(axis=0)
            spread = pts.std(axis=0).max() + 1e-6
            assert np.linalg.norm(centroid - centers[k]) < max(4 * spread, 0.5)


class TestSvg:
    def test_polyline_vertex_count(self, tmp_path):
        rows = [type("R", (), {"snr_db": float(s), "accuracy": 0.5, "count": 10})() for s in range(5)]
        path = tmp_path / "curve.svg"
        svgplot.render_accuracy_curve(rows, path)
        text = path.read_text()
        assert text.startswith("<svg")
        pts = text.split('points="')[1].split('"')[0].split()
        assert len(pts) == 5

    def test_twelve_bars(self, tmp_path):
        rows = [
            (scenario, mode, 0.5)
            for scenario in ("5v6", "6v8", "8v11", "9v11")
            for mode in ("SL-O", "SL-WF", "CL-WF")
        ]
        path = tmp_path / "bars.svg"
        svgplot.render_bars(rows, path)
        assert path.read_text().count('<rect class="bar"') == 12

    def test_scatter(self, tmp_path):
        pts = [(0.0, 0.0, "a", "a"), (1.0, 2.0, "b", "a"), (-1.0, 0.5, "a", "b")]
        path = tmp_path / "scatter.svg"
        svgplot.render_scatter(pts, path)
        assert path.read_text().count("<circle") == 3

    def test_empty_inputs_no_file(self, tmp_path):
        path = tmp_path / "none.svg"
        with pytest.raises(ValueError):
            svgplot.render_accuracy_curve([], path)
        with pytest.raises(ValueError):
            svgplot.render_bars([], path)
        with pytest.raises(ValueError):
            svgplot.render_scatter([], path)
        assert not path.exists()

    def test_byte_stable(self, tmp_path):
        rows = [type("R", (), {"snr_db": 0.0, "accuracy": 0.25, "count": 4})(),
                type("R", (), {"snr_db": 2.0, "accuracy": 0.75, "count": 4})()]
        svgplot.render_accuracy_curve(rows, tmp_path / "a.svg")
        svgplot.render_accuracy_curve(rows, tmp_path / "b.svg")
        assert (tmp_path / "a.svg").read_bytes() == (tmp_path / "b.svg").read_bytes()

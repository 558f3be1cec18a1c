import math

import numpy as np
import pytest

from conftest import central_diff_max_err
from openmodrec.errors import FormatError, NumericError
from openmodrec.network import Architecture, init_model
from openmodrec.numcore import derive_rng
from openmodrec.siggen import GenConfig, gen_frame
from openmodrec.training import (
    TrainConfig,
    combined_loss,
    load_checkpoint,
    save_checkpoint,
    train,
    update_centers,
)


def _toy_frames(classes=("BPSK", "WBFM"), per_class=30, snr=20.0, seed=123):
    cfg = GenConfig(classes=tuple(classes), snrs_db=(snr,))
    frames = []
    fid = 0
    for c in classes:
        for _ in range(per_class):
            frames.append(gen_frame(c, snr, derive_rng(seed, 1, fid), cfg, frame_id=fid))
            fid += 1
    return frames


class TestCombinedLoss:
    def test_uniform_softmax_loss(self):
        logits = np.zeros((4, 11))
        features = np.zeros((4, 3))
        centers = np.zeros((11, 3))
        labels = np.array([0, 3, 7, 10])
        total, ls, lc, _, _ = combined_loss(logits, features, labels, centers, 0.1)
        assert ls == pytest.approx(math.log(11), abs=1e-12)
        assert lc == 0.0
        assert total == pytest.approx(math.log(11), abs=1e-12)

    def test_features_at_centers(self):
        gen = derive_rng(1, 9, 0).generator()
        centers = gen.standard_normal((3, 4))
        labels = np.array([2, 0, 1])
        features = centers[labels]
        logits = gen.standard_normal((3, 3))
        total, ls, lc, _, dfeat = combined_loss(logits, features, labels, centers, 0.5)
        assert lc == 0.0
        assert total == pytest.approx(ls)
        assert np.all(dfeat == 0)

    def test_lambda_zero_matches_softmax_only(self):
        gen = derive_rng(2, 9, 0).generator()
        logits = gen.standard_normal((5, 4))
        features = gen.standard_normal((5, 6))
        centers = gen.standard_normal((4, 6))
        labels = gen.integers(0, 4, 5)
        total, ls, lc, dlogits, dfeat = combined_loss(logits, features, labels, centers, 0.0)
        assert total == pytest.approx(ls)
        assert np.all(dfeat == 0)

    def test_label_out_of_range(self):
        with pytest.raises(ValueError):
            combined_loss(np.zeros((2, 3)), np.zeros((2, 2)), np.array([0, 3]), np.zeros((3, 2)), 0.1)

    def test_gradients_pass_finite_difference(self):
        gen = derive_rng(3, 9, 0).generator()
        logits0 = gen.standard_normal((4, 3))
        features0 = gen.standard_normal((4, 5))
        centers = gen.standard_normal((3, 5))
        labels = gen.integers(0, 3, 4)
        lam = 0.3
        _, _, _, dlogits, dfeat = combined_loss(logits0, features0, labels, centers, lam)

        def loss_wrt_logits(vec):
            total, *_ = combined_loss(vec.reshape(4, 3), features0, labels, centers, lam)
            return total

        def loss_wrt_features(vec):
            total, *_ = combined_loss(logits0, vec.reshape(4, 5), labels, centers, lam)
            return total

        assert central_diff_max_err(loss_wrt_logits, logits0.ravel(), dlogits.ravel()) < 1e-6
        assert central_diff_max_err(loss_wrt_features, features0.ravel(), dfeat.ravel()) < 1e-6


class TestCenters:
    def test_alpha_zero_no_change(self):
        centers = np.ones((3, 2))
        out = update_centers(centers, np.full((2, 2), 5.0), np.array([0, 1]), 0.0)
        assert np.array_equal(out, centers)

    def test_single_example_quarter_step(self):
        centers = np.zeros((2, 3))
        x = np.array([[4.0, -2.0, 8.0]])
        out = update_centers(centers, x, np.array([1]), 0.5)
        assert np.allclose(out[1], x[0] / 4.0)
        assert np.all(out[0] == 0)

    def test_absent_class_bitwise_unchanged(self):
        gen = derive_rng(4, 9, 0).generator()
        centers = gen.standard_normal((4, 3))
        before = centers.copy()
        out = update_centers(centers, gen.standard_normal((5, 3)), np.array([0, 0, 1, 1, 1]), 0.5)
        assert np.array_equal(out[2], before[2])
        assert np.array_equal(out[3], before[3])

    def test_multiple_examples_hand_formula(self):
        centers = np.array([[1.0, 1.0]])
        feats = np.array([[0.0, 0.0], [2.0, 4.0], [4.0, 2.0]])
        labels = np.zeros(3, dtype=int)
        # delta = (3*c - sum(x)) / (1 + 3)
        delta = (3 * centers[0] - feats.sum(axis=0)) / 4.0
        expected = centers[0] - 0.5 * delta
        out = update_centers(centers, feats, labels, 0.5)
        assert np.allclose(out[0], expected, atol=1e-15)

    def test_alpha_validation(self):
        with pytest.raises(ValueError):
            update_centers(np.zeros((1, 1)), np.zeros((1, 1)), np.array([0]), 1.5)


def _separable_frames(per_class=30, t_len=32, seed=1):
    """Two trivially separable synthetic sequence classes."""
    from openmodrec.siggen import SignalFrame

    frames = []
    for k in range(per_class):
        gen = derive_rng(seed, 1, k).generator()
        steady = 1.0 + 0.05 * gen.standard_normal(t_len)
        frames.append(SignalFrame(samples=steady.astype(complex), label="steady", snr_db=10.0, frame_id=k))
        gen2 = derive_rng(seed, 2, k).generator()
        alt = (1.0 + 0.05 * gen2.standard_normal(t_len)) * ((-1.0) ** np.arange(t_len))
        frames.append(SignalFrame(samples=alt.astype(complex), label="alternating", snr_db=10.0, frame_id=k))
    return frames


class TestTrainLoop:
    def test_two_separable_classes_reach_high_accuracy(self):
        frames = _separable_frames(per_class=30)
        arch = Architecture(channels="dual", cells=8, n_classes=2)
        model = init_model(arch, ("alternating", "steady"), seed=5)
        cfg = TrainConfig(batch_size=16, lr=0.01, lam=0.1, alpha=0.5, epochs=20, seed=5)
        _, _, log = train(frames, cfg, model)
        assert max(e.accuracy for e in log.epochs) >= 0.99

    def test_same_seed_bitwise_identical(self):
        frames = _toy_frames(per_class=8)
        arch = Architecture(channels="iq", cells=4, n_classes=2)
        cfg = TrainConfig(batch_size=8, lr=0.01, epochs=3, seed=9)
        m1 = init_model(arch, ("BPSK", "WBFM"), seed=9)
        m2 = init_model(arch, ("BPSK", "WBFM"), seed=9)
        _, c1, log1 = train(frames, cfg, m1)
        _, c2, log2 = train(frames, cfg, m2)
        assert np.array_equal(c1, c2)
        for a, b in zip(m1.param_arrays().values(), m2.param_arrays().values()):
            assert np.array_equal(a, b)
        assert [(e.loss_s, e.loss_c, e.accuracy) for e in log1.epochs] == [
            (e.loss_s, e.loss_c, e.accuracy) for e in log2.epochs
        ]

    def test_softmax_mode_reports_zero_center_loss(self):
        frames = _toy_frames(per_class=6)
        arch = Architecture(channels="iq", cells=4, n_classes=2)
        model = init_model(arch, ("BPSK", "WBFM"), seed=2)
        cfg = TrainConfig(batch_size=8, epochs=2, seed=2, loss_mode="softmax")
        _, _, log = train(frames, cfg, model)
        assert all(e.loss_c == 0.0 for e in log.epochs)

    def test_unknown_dataset_class_rejected(self):
        frames = _toy_frames(classes=("BPSK", "WBFM", "GFSK"), per_class=2)
        arch = Architecture(channels="iq", cells=4, n_classes=2)
        model = init_model(arch, ("BPSK", "WBFM"), seed=2)
        cfg = TrainConfig(batch_size=4, epochs=1, seed=2)
        with pytest.raises(ValueError, match="GFSK"):
            train(frames, cfg, model)

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_divergence_guard(self):
        frames = _toy_frames(per_class=4)
        arch = Architecture(channels="iq", cells=4, n_classes=2)
        model = init_model(arch, ("BPSK", "WBFM"), seed=3)
        model.out.b[0] = np.inf
        cfg = TrainConfig(batch_size=4, epochs=1, seed=3)
        with pytest.raises(NumericError, match="diverged"):
            train(frames, cfg, model)


class TestCheckpoints:
    def _small_model(self, seed=7):
        arch = Architecture(channels="dual", cells=3, n_classes=2, viz_layer=True)
        return init_model(arch, ("BPSK", "WBFM"), seed=seed)

    def test_round_trip_bitwise(self, tmp_path):
        model = self._small_model()
        centers = derive_rng(7, 9, 0).generator().standard_normal((2, 2))
        path = tmp_path / "ckpt.npz"
        save_checkpoint(path, model, centers, epoch=4)
        loaded, centers2, adam, epoch = load_checkpoint(path)
        assert epoch == 4
        assert adam is None
        assert np.array_equal(centers, centers2)
        assert loaded.classes == model.classes
        for a, b in zip(model.param_arrays().values(), loaded.param_arrays().values()):
            assert np.array_equal(a, b)

    def test_version_mismatch(self, tmp_path):
        model = self._small_model()
        path = tmp_path / "ckpt.npz"
        save_checkpoint(path, model, np.zeros((2, 2)))
        data = dict(np.load(path, allow_pickle=False))
        data["format_version"] = np.int64(99)
        np.savez(path, **data)
        with pytest.raises(FormatError, match="version"):
            load_checkpoint(path)

    def test_resume_matches_straight_run(self, tmp_path):
        frames = _toy_frames(per_class=10)
        arch = Architecture(channels="iq", cells=4, n_classes=2)
        cfg5 = TrainConfig(batch_size=8, lr=0.01, epochs=5, seed=13)

        straight = init_model(arch, ("BPSK", "WBFM"), seed=13)
        straight, centers_s, _ = train(frames, cfg5, straight)

        part = init_model(arch, ("BPSK", "WBFM"), seed=13)
        cfg3 = TrainConfig(batch_size=8, lr=0.01, epochs=3, seed=13)
        out = tmp_path / "run"
        part, centers_p, _ = train(frames, cfg3, part, out_dir=out)
        resumed = init_model(arch, ("BPSK", "WBFM"), seed=13)
        resumed, centers_r, _ = train(frames, cfg5, resumed, resume=out / "checkpoint_0002.npz")

        assert np.array_equal(centers_s, centers_r)
        for a, b in zip(straight.param_arrays().values(), resumed.param_arrays().values()):
            assert np.array_equal(a, b)

    def test_wrong_class_count_at_train_time(self, tmp_path):
        model = self._small_model()
        frames = _toy_frames(classes=("BPSK", "WBFM", "GFSK"), per_class=2)
        with pytest.raises(ValueError):
            train(frames, TrainConfig(epochs=1, batch_size=4), model)

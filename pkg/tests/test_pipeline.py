"""End-to-end pipeline on small synthetic datasets."""

import dataclasses

import numpy as np
import pytest

from spikenet.config import PipelineConfig
from spikenet.errors import StageError
from spikenet.network import ConvLayerConfig, NetworkConfig
from spikenet.pipeline import (
    encode_dataset,
    execute,
    fit_frontend,
    load_datasets,
    run_bench,
    run_eval,
    run_train,
    threshold_grid_search,
)
from spikenet.stdp import StdpConfig
from spikenet.synth import make_idx_digits, make_image_dir
from spikenet.tensor import count_ones, unpack


def tiny_network(c1=8, c2=12, th1=4.0, th2=8.0, steps=8):
    return NetworkConfig(
        layer1=ConvLayerConfig(c1, 5, 1, 2, th1),
        pool1_window=2,
        layer2=ConvLayerConfig(c2, 3, 1, 1, th2),
        pool2_window=3,
        steps=steps,
    )


def tiny_stdp():
    return StdpConfig(a_plus=0.01, a_minus=-0.0075, double_every=40,
                      rate_cap=0.15)


@pytest.fixture(scope="module")
def idx_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("idx")
    make_idx_digits(out, n_train=90, n_test=40, size=16, classes=10, seed=0)
    return out


def tiny_config(idx_dir, **kw):
    base = dict(
        dataset_kind="mnist",
        train_images=str(idx_dir / "train-images-idx3-ubyte"),
        train_labels=str(idx_dir / "train-labels-idx1-ubyte"),
        test_images=str(idx_dir / "t10k-images-idx3-ubyte"),
        test_labels=str(idx_dir / "t10k-labels-idx1-ubyte"),
        mode="log-grey",
        sigmas=(0.471, 1.099),
        cutoff=0.01,
        steps=8,
        network=tiny_network(),
        stdp1=tiny_stdp(),
        stdp2=tiny_stdp(),
        passes=1,
        pca_k=48,
        reg_lambda=1e-4,
        svm_epochs=12,
        seed=5,
    )
    base.update(kw)
    return PipelineConfig(**base)


class TestExecute:
    def test_full_cycle(self, idx_dir):
        result = execute(tiny_config(idx_dir))
        model = result.model
        assert unpack(model.layers[0].weights).shape == (8, 4, 5, 5)
        assert unpack(model.layers[1].weights).shape == (12, 8, 3, 3)
        assert result.accuracy > 0.2  # well above 10-class chance
        assert set(result.timings) == {"preprocess", "train", "features",
                                       "classify"}
        # quantization: persisted weights are all binary by construction
        for layer in model.layers:
            w = unpack(layer.weights)
            assert set(np.unique(w)) <= {0.0, 1.0}

    def test_deterministic_model_bytes(self, idx_dir, tmp_path):
        cfg = tiny_config(idx_dir)
        a = run_train(cfg, tmp_path / "a.spkn")
        b = run_train(cfg, tmp_path / "b.spkn")
        assert (tmp_path / "a.spkn").read_bytes() == (tmp_path / "b.spkn").read_bytes()
        assert a.accuracy == b.accuracy

    def test_seed_changes_model(self, idx_dir, tmp_path):
        cfg = tiny_config(idx_dir)
        run_train(cfg, tmp_path / "a.spkn")
        run_train(cfg, tmp_path / "b.spkn", seed=99)
        assert (tmp_path / "a.spkn").read_bytes() != (tmp_path / "b.spkn").read_bytes()

    def test_eval_matches_training_accuracy(self, idx_dir, tmp_path):
        cfg = tiny_config(idx_dir)
        result = run_train(cfg, tmp_path / "m.spkn")
        acc, timings = run_eval(cfg, tmp_path / "m.spkn")
        assert acc == pytest.approx(result.accuracy)
        assert set(timings) == {"preprocess", "features", "classify"}

    def test_eval_rejects_mismatched_config(self, idx_dir, tmp_path):
        cfg = tiny_config(idx_dir)
        run_train(cfg, tmp_path / "m.spkn")
        other = cfg.with_thresholds(5.0, 9.0)
        with pytest.raises(StageError, match="digest"):
            run_eval(other, tmp_path / "m.spkn")

    def test_stage_error_tagging(self, idx_dir):
        cfg = tiny_config(idx_dir, mode="log-hsv")  # greyscale data: must fail
        with pytest.raises(StageError, match=r"\[preprocess\]"):
            execute(cfg)


class TestBench:
    def test_smoke_two_repeats(self, idx_dir, tmp_path):
        cfg = tiny_config(idx_dir)
        out = tmp_path / "bench.csv"
        stats, rows = run_bench(cfg, repeats=2, out_csv=out)
        assert stats.n == 2
        assert stats.accuracy_sd >= 0.0
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "run,seed,acc,t_preprocess,t_train,t_features," \
                           "t_classify,t_total"
        assert len([l for l in lines if l and not l.startswith("#") and
                    not l.startswith('"#')]) == 3  # header + 2 runs

    def test_totals_equal_stage_sums(self, idx_dir):
        cfg = tiny_config(idx_dir)
        _, rows = run_bench(cfg, repeats=2)
        for row in rows:
            stage_sum = sum(row[3:7])
            assert row[7] == pytest.approx(stage_sum, rel=0.01)

    def test_rejects_single_repeat(self, idx_dir):
        with pytest.raises(ValueError):
            run_bench(tiny_config(idx_dir), repeats=1)


class TestGridSearch:
    def test_wrapper_counts_and_returns(self, idx_dir):
        cfg = tiny_config(idx_dir)
        train, test = load_datasets(cfg)
        calls = []
        import spikenet.pipeline as pl
        original = pl.execute

        def counting(config, **kw):
            calls.append((config.network.layer1.threshold,
                          config.network.layer2.threshold))
            return original(config, **kw)

        pl.execute = counting
        try:
            best = threshold_grid_search([[4.0, 6.0], [8.0]], train.take(40),
                                         test.take(20), cfg)
        finally:
            pl.execute = original
        assert len(calls) == 2
        assert sorted(set(calls)) == [(4.0, 8.0), (6.0, 8.0)]
        assert best in {(4.0, 8.0), (6.0, 8.0)}


class TestImageDirPipeline:
    def test_hsv_channels_and_training(self, tmp_path):
        root = tmp_path / "tree"
        make_image_dir(root, classes=4, instances=7, views=3, size=24, seed=1)
        cfg = PipelineConfig(
            dataset_kind="image-dir",
            data_root=str(root),
            resize=24,
            mode="log-hsv",
            sigmas=(0.471, 1.099),
            cutoff=0.005,
            steps=8,
            network=tiny_network(c1=6, c2=8, th1=6.0, th2=6.0),
            stdp1=tiny_stdp(),
            stdp2=tiny_stdp(),
            train_instances=5,
            pca_k=24,
            reg_lambda=1e-4,
            svm_epochs=10,
        )
        train, test = load_datasets(cfg)
        assert len(train) == 4 * 5 * 3
        frontend = fit_frontend(cfg, train)
        enc = encode_dataset(train.take(2), cfg, frontend)
        assert enc.times.shape[1] == 2 * 2 * 3  # sigmas x polarity x HSV
        result = execute(cfg, train_data=train, test_data=test)
        assert result.accuracy >= 0.25  # 4 classes

    def test_zca_channels(self, tmp_path):
        root = tmp_path / "tree"
        make_image_dir(root, classes=3, instances=7, views=2, size=16, seed=2)
        cfg = PipelineConfig(
            dataset_kind="image-dir",
            data_root=str(root),
            resize=16,
            mode="zca",
            cutoff=0.01,
            zca_epsilon=1e-2,
            steps=8,
            network=tiny_network(c1=6, c2=8, th1=3.0, th2=6.0),
            stdp1=tiny_stdp(),
            stdp2=tiny_stdp(),
            pca_k=12,
        )
        train, test = load_datasets(cfg)
        frontend = fit_frontend(cfg, train)
        enc = encode_dataset(train.take(3), cfg, frontend)
        assert enc.times.shape[1] == 2
        result = execute(cfg, train_data=train, test_data=test)
        assert result.model.zca is not None
        assert result.model.mode == "zca"

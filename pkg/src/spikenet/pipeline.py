"""End-to-end orchestration: train, evaluate, benchmark, grid-search.

A run is: preprocess + encode both splits, train the two conv layers with
STDP (layer 2 sees layer 1 frozen and quantized), extract timed-readout
features, fit PCA, train the classifier, and score the test split. Every
stage is wall-timed and failures carry the stage name. Given one seed the
whole run is deterministic down to the bytes of the saved model.
"""

from __future__ import annotations

import csv
import time
from contextlib import contextmanager
from dataclasses import dataclass

import numpy as np

from . import network as net
from .config import PipelineConfig
from .data import Dataset, load_image_dir, load_mnist, split_by_instance
from .encoding import LatencyMap, rank_order_encode, timed_readout
from .errors import SpikenetError, StageError
from .model_io import (
    LayerModel,
    RffParams,
    TrainedModel,
    load_model,
    save_model,
)
from .pca import pca_fit, pca_transform
from .preprocess import FilterBank, filter_rectify, rgb_to_hsv, zca_apply, zca_fit
from .stats import RunStats
from .stdp import train_layer
from .svm import accuracy, predict, rff_expand, svm_train
from .tensor import unpack


@contextmanager
def _stage(name: str, timings: dict):
    start = time.perf_counter()
    try:
        yield
    except SpikenetError:
        raise
    except Exception as exc:
        raise StageError(name, str(exc)) from exc
    timings[name] = timings.get(name, 0.0) + time.perf_counter() - start


def load_datasets(config: PipelineConfig):
    """Load (train, test) splits according to the config's dataset block."""
    if config.dataset_kind == "mnist":
        train = load_mnist(config.train_images, config.train_labels)
        test = load_mnist(config.test_images, config.test_labels)
    else:
        full = load_image_dir(config.data_root, size=config.resize)
        train, test = split_by_instance(full, config.train_instances,
                                        config.split_seed)
    return train.take(config.limit_train), test.take(config.limit_test)


class EncodedSet:
    """Latency maps for a whole split, stored as one int16 block."""

    def __init__(self, times: np.ndarray, steps: int, labels: np.ndarray):
        self.times = times
        self.steps = steps
        self.labels = labels

    def __len__(self):
        return self.times.shape[0]

    def __getitem__(self, i) -> LatencyMap:
        return LatencyMap(self.times[i], self.steps)

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]


def _luminance(image: np.ndarray) -> np.ndarray:
    return image.max(axis=0) if image.shape[0] > 1 else image[0]


def fit_frontend(config: PipelineConfig, train: Dataset):
    """Build the preprocessing front: a filter bank, or a fitted ZCA model."""
    if config.mode == "zca":
        return zca_fit([_luminance(im) for im in train.images],
                       config.zca_epsilon)
    return FilterBank.from_sigmas(config.sigmas, config.cutoff)


def preprocess_image(image: np.ndarray, config: PipelineConfig, frontend):
    """Image [C,H,W] -> non-negative feature channels for encoding."""
    if config.mode == "zca":
        return zca_apply(frontend, _luminance(image), cutoff=config.cutoff)
    if config.mode == "log-hsv":
        if image.shape[0] != 3:
            raise ValueError(
                f"log-hsv preprocessing needs RGB input, got {image.shape[0]} channels"
            )
        return filter_rectify(rgb_to_hsv(image), frontend)
    if image.shape[0] == 3:
        image = _luminance(image)[None]
    return filter_rectify(image, frontend)


def encode_dataset(dataset: Dataset, config: PipelineConfig, frontend) -> EncodedSet:
    """Preprocess and rank-order encode every image of a split."""
    n = len(dataset)
    times = None
    for i in range(n):
        feats = preprocess_image(dataset.images[i], config, frontend)
        lat = rank_order_encode(feats, config.steps)
        if times is None:
            times = np.empty((n,) + lat.shape, dtype=np.int16)
        times[i] = lat.times
    if times is None:
        raise ValueError("dataset is empty")
    return EncodedSet(times, config.steps, dataset.labels)


class PrefixOutputs:
    """Lazy view of an encoded split pushed through frozen conv+pool stages."""

    def __init__(self, encoded: EncodedSet, stages):
        self.encoded = encoded
        self.stages = stages  # [(float weights, ConvLayerConfig, pool_window)]

    def __len__(self):
        return len(self.encoded)

    def __getitem__(self, i) -> LatencyMap:
        lat = self.encoded[i]
        for weights, cfg, pool in self.stages:
            lat = net.spike_pool(net.if_conv_forward(lat, weights, cfg)[0], pool)
        return lat

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]


def _readout_matrix(prefix: PrefixOutputs) -> np.ndarray:
    """Timed readout of the last stage, flattened per sample (integer-valued)."""
    n = len(prefix)
    steps = prefix.encoded.steps
    dtype = np.uint8 if steps <= 255 else np.uint16
    out = None
    for i in range(n):
        vec = timed_readout(prefix[i]).ravel()
        if out is None:
            out = np.empty((n, vec.size), dtype=dtype)
        out[i] = vec.astype(dtype)
    return out


@dataclass
class RunResult:
    model: TrainedModel
    accuracy: float
    timings: dict
    train_states: tuple
    model_path: str = None

    @property
    def total_time(self) -> float:
        return sum(self.timings.values())


def execute(config: PipelineConfig, *, seed=None, train_data=None,
            test_data=None, log_dir=None) -> RunResult:
    """Run the full train+eval cycle; returns the model and its test accuracy.

    `seed` overrides config.seed (the benchmark protocol trains repeats at
    seed+i). Pre-loaded datasets can be injected (grid search trains on
    subsets); otherwise the config's dataset is loaded from disk.
    """
    seed = config.seed if seed is None else int(seed)
    timings = {}
    if train_data is None or test_data is None:
        with _stage("load", timings):
            train_data, test_data = load_datasets(config)
        timings.pop("load", None)  # data loading is excluded from stage totals

    ncfg = config.network
    with _stage("preprocess", timings):
        frontend = fit_frontend(config, train_data)
        enc_train = encode_dataset(train_data, config, frontend)
        enc_test = encode_dataset(test_data, config, frontend)
        in_channels = enc_train.times.shape[1]
    train_labels = train_data.labels
    test_labels = test_data.labels

    with _stage("train", timings):
        log1 = None if log_dir is None else f"{log_dir}/layer1.csv"
        packed1, state1 = train_layer(
            enc_train, ncfg.layer1, in_channels, config.steps, config.stdp1,
            passes=config.passes, seed=seed, wta_k=ncfg.wta_k,
            wta_radius=ncfg.wta_radius, layer_index=0, log_path=log1,
        )
        w1 = unpack(packed1)
        prefix1 = PrefixOutputs(enc_train, [(w1, ncfg.layer1, ncfg.pool1_window)])
        log2 = None if log_dir is None else f"{log_dir}/layer2.csv"
        packed2, state2 = train_layer(
            prefix1, ncfg.layer2, ncfg.layer1.out_channels, config.steps,
            config.stdp2, passes=config.passes, seed=seed + 1, wta_k=ncfg.wta_k,
            wta_radius=ncfg.wta_radius, layer_index=1, log_path=log2,
        )
        w2 = unpack(packed2)

    stages = [(w1, ncfg.layer1, ncfg.pool1_window),
              (w2, ncfg.layer2, ncfg.pool2_window)]
    with _stage("features", timings):
        x_train = _readout_matrix(PrefixOutputs(enc_train, stages))
        x_test = _readout_matrix(PrefixOutputs(enc_test, stages))
        k = min(config.pca_k, x_train.shape[0] - 1, x_train.shape[1])
        pca = pca_fit(x_train, k)
        z_train = pca_transform(pca, x_train)
        z_test = pca_transform(pca, x_test)
        rff = None
        if config.classifier == "rff":
            rff = RffParams(config.rff_dims, config.rff_gamma, seed + 3)
            z_train = rff_expand(z_train, rff.dims, rff.gamma, rff.seed)
            z_test = rff_expand(z_test, rff.dims, rff.gamma, rff.seed)

    with _stage("classify", timings):
        svm = svm_train(z_train, train_labels, config.reg_lambda,
                        config.svm_epochs, seed + 2)
        acc = accuracy(predict(svm, z_test), test_labels)

    model = TrainedModel(
        config_digest=config.digest(),
        mode=config.mode,
        steps=config.steps,
        resize=config.resize,
        cutoff=config.cutoff,
        sigmas=tuple(config.sigmas),
        zca_epsilon=config.zca_epsilon,
        layers=(
            _layer_model(packed1, ncfg.layer1, in_channels, ncfg.pool1_window),
            _layer_model(packed2, ncfg.layer2, ncfg.layer1.out_channels,
                         ncfg.pool2_window),
        ),
        pca=pca,
        svm=svm,
        zca=frontend if config.mode == "zca" else None,
        rff=rff,
    )
    return RunResult(model, acc, timings, (state1, state2))


def _layer_model(packed, cfg, in_channels, pool):
    return LayerModel(cfg.out_channels, in_channels, cfg.window, cfg.window_w,
                      cfg.stride, cfg.pad, pool, cfg.threshold, packed)


def run_train(config: PipelineConfig, out_path, *, seed=None,
              log_dir=None) -> RunResult:
    """Train per the config and persist the model file."""
    result = execute(config, seed=seed, log_dir=log_dir)
    with _stage("persist", result.timings):
        save_model(out_path, result.model)
    result.model_path = str(out_path)
    return result


def _model_stages(model: TrainedModel):
    stages = []
    for layer in model.layers:
        cfg = net.ConvLayerConfig(layer.out_channels, layer.kh, layer.stride,
                                  layer.pad, layer.threshold, layer.kw)
        stages.append((unpack(layer.weights), cfg, layer.pool_window))
    return stages


def _model_config_view(model: TrainedModel) -> PipelineConfig:
    """Minimal config carrying the model's preprocessing parameters."""
    return PipelineConfig(
        mode=model.mode, sigmas=model.sigmas, cutoff=model.cutoff,
        zca_epsilon=model.zca_epsilon, steps=model.steps, resize=model.resize,
    )


def run_eval(config: PipelineConfig, model_or_path):
    """Evaluate a persisted model on the config's test split.

    Returns (accuracy, timings). The config must carry the digest the model
    was trained with; a mismatch aborts instead of silently evaluating an
    inconsistent pipeline.
    """
    model = model_or_path
    if not isinstance(model, TrainedModel):
        model = load_model(model_or_path)
    if model.config_digest != config.digest():
        raise StageError(
            "eval", "config digest does not match the one stored in the model "
            "(different preprocessing/network/training parameters)"
        )
    timings = {}
    with _stage("load", timings):
        _, test_data = load_datasets(config)
    timings.pop("load", None)
    view = _model_config_view(model)
    with _stage("preprocess", timings):
        frontend = model.zca if model.mode == "zca" else FilterBank.from_sigmas(
            model.sigmas, model.cutoff)
        enc_test = encode_dataset(test_data, view, frontend)
    with _stage("features", timings):
        x_test = _readout_matrix(PrefixOutputs(enc_test, _model_stages(model)))
        z_test = pca_transform(model.pca, x_test)
        if model.rff is not None:
            z_test = rff_expand(z_test, model.rff.dims, model.rff.gamma,
                                model.rff.seed)
    with _stage("classify", timings):
        acc = accuracy(predict(model.svm, z_test), test_data.labels)
    return acc, timings


BENCH_COLUMNS = ("run", "seed", "acc", "t_preprocess", "t_train", "t_features",
                 "t_classify", "t_total")


def run_bench(config: PipelineConfig, repeats: int = 30, out_csv=None):
    """Repeat full train+eval cycles with seeds seed+i; collect statistics.

    Returns (RunStats, rows) where rows follow BENCH_COLUMNS. The CSV, if
    requested, carries one row per run plus a mean/sd summary comment.
    """
    if repeats < 2:
        raise ValueError(f"repeats must be >= 2, got {repeats}")
    stats = RunStats()
    rows = []
    for i in range(repeats):
        result = execute(config, seed=config.seed + i)
        t = result.timings
        total = result.total_time
        rows.append((
            i, config.seed + i, result.accuracy,
            t.get("preprocess", 0.0), t.get("train", 0.0),
            t.get("features", 0.0), t.get("classify", 0.0), total,
        ))
        stats.add(result.accuracy, total)
    if out_csv is not None:
        with open(out_csv, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(BENCH_COLUMNS)
            for row in rows:
                writer.writerow([row[0], row[1]] + [f"{v:.6g}" for v in row[2:]])
            writer.writerow([])
            writer.writerow(["# accuracy mean", f"{stats.accuracy_mean:.6g}",
                             "sd", f"{stats.accuracy_sd:.6g}"])
            writer.writerow(["# time mean", f"{stats.time_mean:.6g}",
                             "sd", f"{stats.time_sd:.6g}"])
    return stats, rows


def threshold_grid_search(candidates_per_layer, train_subset: Dataset,
                          val_subset: Dataset, config: PipelineConfig):
    """Exhaustively evaluate per-layer threshold grids on a train/val split.

    Each combination trains the reduced pipeline on `train_subset` and
    scores `val_subset`; returns the best (threshold1, threshold2) with
    ties preferring smaller thresholds.
    """

    def evaluate(combo):
        cfg = config.with_thresholds(*combo)
        return execute(cfg, train_data=train_subset, test_data=val_subset).accuracy

    return net.grid_search(candidates_per_layer, evaluate)

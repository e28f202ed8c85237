"""The benchmark protocol: repeated runs, mean +/- SD, significance intervals.

Two pipeline variants are each trained and evaluated several times with
seeds seed+i. The per-run accuracies and stage times land in a CSV, and the
two-sample 99.9% mean-difference interval decides whether the variants
actually differ (it is significant only if the interval excludes zero).
"""

import tempfile
from pathlib import Path

from spikenet import ConvLayerConfig, NetworkConfig, PipelineConfig, StdpConfig
from spikenet.pipeline import run_bench
from spikenet.stats import mean_diff_ci
from spikenet.synth import make_idx_digits

work = Path(tempfile.mkdtemp(prefix="spikenet-bench-"))
paths = make_idx_digits(work, n_train=200, n_test=80, size=16, classes=8, seed=3)

stdp = StdpConfig(a_plus=0.01, a_minus=-0.0075, double_every=50, rate_cap=0.15)


def variant(threshold1):
    return PipelineConfig(
        dataset_kind="mnist",
        train_images=str(paths["train_images"]),
        train_labels=str(paths["train_labels"]),
        test_images=str(paths["test_images"]),
        test_labels=str(paths["test_labels"]),
        mode="log-grey",
        sigmas=(0.471, 1.099),
        cutoff=0.01,
        steps=10,
        network=NetworkConfig(
            layer1=ConvLayerConfig(10, 5, 1, 2, threshold1),
            pool1_window=2,
            layer2=ConvLayerConfig(16, 3, 1, 1, 10.0),
            pool2_window=3,
            steps=10,
        ),
        stdp1=stdp,
        stdp2=stdp,
        pca_k=32,
        reg_lambda=1e-4,
        svm_epochs=10,
        seed=0,
    )


repeats = 5  # the published protocol records 30; 5 keeps the demo quick
print(f"benchmarking two variants, {repeats} seeded repeats each...")
stats_a, _ = run_bench(variant(5.0), repeats=repeats, out_csv=work / "a.csv")
stats_b, _ = run_bench(variant(40.0), repeats=repeats, out_csv=work / "b.csv")

print(f"\nvariant A (threshold 5):  acc {stats_a.accuracy_mean:.3f} "
      f"+/- {stats_a.accuracy_sd:.3f} (SD), time {stats_a.time_mean:.1f}s")
print(f"variant B (threshold 40): acc {stats_b.accuracy_mean:.3f} "
      f"+/- {stats_b.accuracy_sd:.3f} (SD), time {stats_b.time_mean:.1f}s")

lo, hi = mean_diff_ci(stats_a, stats_b, level=0.999)
verdict = "significant" if lo > 0 or hi < 0 else "not significant"
print(f"\n99.9% CI for the accuracy difference A-B: [{lo:+.4f}, {hi:+.4f}] "
      f"-> {verdict}")

lo, hi = mean_diff_ci(stats_a, stats_a, level=0.999)
print(f"sanity: CI of a collection against itself contains zero: "
      f"[{lo:+.4f}, {hi:+.4f}]")
print(f"\nper-run CSVs: {work}/a.csv, {work}/b.csv")
print("columns: run, seed, acc, t_preprocess, t_train, t_features, "
      "t_classify, t_total")

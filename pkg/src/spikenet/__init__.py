"""Spiking convolutional network with rank-order coding and STDP learning.

A two-layer integrate-and-fire convolutional network trained one layer at a
time with unsupervised STDP, binarized by quantization, read out through
spike timings, reduced with PCA and classified with a linear max-margin
head. Includes dataset loaders, a benchmark/statistics protocol and a CLI.
"""

from .config import PipelineConfig, load_config, parse_config, preset
from .data import Dataset, load_image_dir, load_mnist, split_by_instance
from .encoding import NONE, LatencyMap, rank_order_encode, raster, timed_readout
from .errors import FormatError, SpikenetError, StageError
from .model_io import LayerModel, RffParams, TrainedModel, load_model, save_model
from .network import (
    ConvLayerConfig,
    NetworkConfig,
    grid_search,
    if_conv_forward,
    select_winners,
    spike_pool,
)
from .pca import PcaModel, pca_fit, pca_transform
from .pipeline import (
    RunResult,
    encode_dataset,
    execute,
    run_bench,
    run_eval,
    run_train,
    threshold_grid_search,
)
from .preprocess import (
    FilterBank,
    ZcaModel,
    filter_rectify,
    log_kernel,
    resize_area,
    rgb_to_hsv,
    zca_apply,
    zca_fit,
)
from .stats import RunStats, mean_diff_ci, normal_quantile
from .stdp import (
    StdpConfig,
    TrainState,
    quantize,
    schedule_step,
    should_stop,
    stdp_update,
    switch_rate_curve,
    train_layer,
)
from .svm import LinearModel, accuracy, predict, rff_expand, svm_train
from .tensor import PackedBits, convolve2d, convolve2d_packed, pack, unpack

__version__ = "0.1.0"

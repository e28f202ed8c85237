"""Pipeline configuration: flat key/value files with sections, plus presets.

Config files use INI syntax. Every field has a default; presets encode the
published MNIST and ETH-80-style settings. The model-defining subset of the
fields is hashed into a digest that trained model files carry, so an eval
run detects configs that do not match the model it was handed.
"""

from __future__ import annotations

import configparser
import hashlib
import io
from dataclasses import dataclass, field, replace

from .network import ConvLayerConfig, NetworkConfig
from .stdp import StdpConfig

MODES = ("log-grey", "log-hsv", "zca")
MNIST_SIGMAS = (0.471, 1.099, 2.042)
ETH80_SIGMAS = (0.45, 0.5, 0.55, 0.95, 1.0, 1.05, 1.95, 2.0, 2.05)


@dataclass(frozen=True)
class PipelineConfig:
    # dataset
    dataset_kind: str = "mnist"          # mnist | image-dir
    train_images: str = "data/mnist/train-images-idx3-ubyte"
    train_labels: str = "data/mnist/train-labels-idx1-ubyte"
    test_images: str = "data/mnist/t10k-images-idx3-ubyte"
    test_labels: str = "data/mnist/t10k-labels-idx1-ubyte"
    data_root: str = ""                  # image-dir root
    limit_train: int = 0                 # 0 = all samples
    limit_test: int = 0
    train_instances: int = 5             # image-dir: train instances per class
    split_seed: int = 0
    resize: int = 64                     # image-dir resize target
    # preprocessing
    mode: str = "log-grey"
    sigmas: tuple = MNIST_SIGMAS
    cutoff: float = 0.01
    zca_epsilon: float = 0.01
    # encoding
    steps: int = 15
    # network
    network: NetworkConfig = field(
        default_factory=lambda: NetworkConfig.preset("small"))
    # stdp (per layer)
    stdp1: StdpConfig = field(default_factory=StdpConfig)
    stdp2: StdpConfig = field(default_factory=StdpConfig)
    passes: int = 1
    # reduction / classifier
    pca_k: int = 256
    classifier: str = "linear"           # linear | rff
    reg_lambda: float = 1e-5
    svm_epochs: int = 20
    rff_dims: int = 4096
    rff_gamma: float = 0.02
    # run
    seed: int = 0

    def __post_init__(self):
        if self.dataset_kind not in ("mnist", "image-dir"):
            raise ValueError(f"unknown dataset kind {self.dataset_kind!r}")
        if self.mode not in MODES:
            raise ValueError(f"unknown preprocessing mode {self.mode!r}; have {MODES}")
        if self.classifier not in ("linear", "rff"):
            raise ValueError(f"unknown classifier {self.classifier!r}")
        if not self.sigmas and self.mode != "zca":
            raise ValueError("at least one sigma is required for LoG modes")
        if self.cutoff < 0 or self.zca_epsilon <= 0:
            raise ValueError("cutoff must be >= 0 and zca_epsilon > 0")
        if self.passes < 1 or self.pca_k < 1 or self.svm_epochs < 1:
            raise ValueError("passes, pca_k and svm_epochs must be >= 1")
        if self.steps != self.network.steps:
            object.__setattr__(
                self, "network", replace(self.network, steps=self.steps))

    @property
    def input_channels(self) -> int:
        """Channels entering conv layer 1 for this preprocessing mode."""
        if self.mode == "zca":
            return 2
        per_input = 2 * len(self.sigmas)
        return per_input * (3 if self.mode == "log-hsv" else 1)

    def with_thresholds(self, threshold1: float, threshold2: float) -> "PipelineConfig":
        net = replace(
            self.network,
            layer1=replace(self.network.layer1, threshold=float(threshold1)),
            layer2=replace(self.network.layer2, threshold=float(threshold2)),
        )
        return replace(self, network=net)

    def digest(self) -> bytes:
        """sha256 over the model-defining fields (not dataset paths/limits)."""
        return hashlib.sha256(self.canonical_text().encode()).digest()

    def canonical_text(self) -> str:
        net = self.network
        parts = [
            f"mode={self.mode}",
            "sigmas=" + ",".join(f"{s:.12g}" for s in self.sigmas),
            f"cutoff={self.cutoff:.12g}",
            f"zca_epsilon={self.zca_epsilon:.12g}",
            f"resize={self.resize}",
            f"steps={self.steps}",
        ]
        for name, layer, pool in (
            ("conv1", net.layer1, net.pool1_window),
            ("conv2", net.layer2, net.pool2_window),
        ):
            parts.append(
                f"{name}={layer.out_channels},{layer.window},{layer.stride},"
                f"{layer.pad},{layer.threshold:.12g},pool={pool}"
            )
        parts.append(f"wta={net.wta_k},{net.wta_radius}")
        for name, s in (("stdp1", self.stdp1), ("stdp2", self.stdp2)):
            parts.append(
                f"{name}={s.a_plus:.12g},{s.a_minus:.12g},{s.lower:.12g},"
                f"{s.upper:.12g},{s.double_every},{s.rate_cap:.12g},"
                f"{s.quantize_at:.12g},{s.init_mean:.12g},{s.init_std:.12g},"
                f"{s.stop_epsilon:.12g},{s.stop_patience},{s.stop_window}"
            )
        parts.append(f"passes={self.passes}")
        parts.append(f"pca_k={self.pca_k}")
        parts.append(
            f"classifier={self.classifier},{self.reg_lambda:.12g},"
            f"{self.svm_epochs},{self.rff_dims},{self.rff_gamma:.12g}"
        )
        parts.append(f"seed={self.seed}")
        return "\n".join(parts)


def _stdp_from_section(sec, base: StdpConfig) -> StdpConfig:
    kwargs = {}
    for key, cast in (
        ("a_plus", float), ("a_minus", float), ("lower", float), ("upper", float),
        ("double_every", int), ("rate_cap", float), ("quantize_at", float),
        ("init_mean", float), ("init_std", float), ("stop_epsilon", float),
        ("stop_patience", int), ("stop_window", int),
    ):
        if key in sec:
            kwargs[key] = cast(sec[key])
    return replace(base, **kwargs) if kwargs else base


def load_config(path) -> PipelineConfig:
    """Parse a config file; unspecified keys keep their preset defaults."""
    parser = configparser.ConfigParser()
    with open(path) as fh:
        parser.read_file(fh)
    return _config_from_parser(parser)


def parse_config(text: str) -> PipelineConfig:
    parser = configparser.ConfigParser()
    parser.read_string(text)
    return _config_from_parser(parser)


def _config_from_parser(parser) -> PipelineConfig:
    kwargs = {}
    if parser.has_section("dataset"):
        sec = parser["dataset"]
        if "kind" in sec:
            kwargs["dataset_kind"] = sec["kind"]
        for key in ("train_images", "train_labels", "test_images", "test_labels",
                    "data_root"):
            if key in sec:
                kwargs[key] = sec[key]
        for key in ("limit_train", "limit_test", "train_instances",
                    "split_seed", "resize"):
            if key in sec:
                kwargs[key] = int(sec[key])
    if parser.has_section("preprocess"):
        sec = parser["preprocess"]
        if "mode" in sec:
            kwargs["mode"] = sec["mode"]
        if "sigmas" in sec:
            kwargs["sigmas"] = tuple(
                float(v) for v in sec["sigmas"].replace(",", " ").split())
        if "cutoff" in sec:
            kwargs["cutoff"] = float(sec["cutoff"])
        if "zca_epsilon" in sec:
            kwargs["zca_epsilon"] = float(sec["zca_epsilon"])
    if parser.has_section("encoding") and "steps" in parser["encoding"]:
        kwargs["steps"] = int(parser["encoding"]["steps"])

    net_kwargs = {}
    if parser.has_section("network"):
        sec = parser["network"]
        channels = NetworkConfig.PRESET_CHANNELS[sec.get("preset", "small")]
        c1 = int(sec.get("channels1", channels[0]))
        c2 = int(sec.get("channels2", channels[1]))
        layer1 = ConvLayerConfig(
            c1, int(sec.get("conv1_window", 5)), int(sec.get("conv1_stride", 1)),
            int(sec.get("conv1_pad", 2)), float(sec.get("conv1_threshold", 10.0)),
        )
        layer2 = ConvLayerConfig(
            c2, int(sec.get("conv2_window", 3)), int(sec.get("conv2_stride", 1)),
            int(sec.get("conv2_pad", 1)), float(sec.get("conv2_threshold", 60.0)),
        )
        net_kwargs = dict(
            layer1=layer1, pool1_window=int(sec.get("pool1_window", 2)),
            layer2=layer2, pool2_window=int(sec.get("pool2_window", 3)),
            steps=kwargs.get("steps", 15),
            wta_k=int(sec.get("wta_k", 5)),
            wta_radius=int(sec.get("wta_radius", 3)),
        )
        kwargs["network"] = NetworkConfig(**net_kwargs)

    base_stdp = StdpConfig()
    if parser.has_section("stdp"):
        base_stdp = _stdp_from_section(parser["stdp"], base_stdp)
        if "passes" in parser["stdp"]:
            kwargs["passes"] = int(parser["stdp"]["passes"])
    stdp1, stdp2 = base_stdp, base_stdp
    if parser.has_section("stdp.layer1"):
        stdp1 = _stdp_from_section(parser["stdp.layer1"], base_stdp)
    if parser.has_section("stdp.layer2"):
        stdp2 = _stdp_from_section(parser["stdp.layer2"], base_stdp)
    kwargs["stdp1"], kwargs["stdp2"] = stdp1, stdp2

    if parser.has_section("pca") and "components" in parser["pca"]:
        kwargs["pca_k"] = int(parser["pca"]["components"])
    if parser.has_section("classifier"):
        sec = parser["classifier"]
        if "kind" in sec:
            kwargs["classifier"] = sec["kind"]
        if "reg_lambda" in sec:
            kwargs["reg_lambda"] = float(sec["reg_lambda"])
        if "epochs" in sec:
            kwargs["svm_epochs"] = int(sec["epochs"])
        if "rff_dims" in sec:
            kwargs["rff_dims"] = int(sec["rff_dims"])
        if "rff_gamma" in sec:
            kwargs["rff_gamma"] = float(sec["rff_gamma"])
    if parser.has_section("run") and "seed" in parser["run"]:
        kwargs["seed"] = int(parser["run"]["seed"])
    return PipelineConfig(**kwargs)


def config_to_text(cfg: PipelineConfig) -> str:
    """Render a config as a file (inverse of parse_config)."""
    net = cfg.network
    out = io.StringIO()

    def section(name, pairs):
        out.write(f"[{name}]\n")
        for key, value in pairs:
            out.write(f"{key} = {value}\n")
        out.write("\n")

    section("dataset", [
        ("kind", cfg.dataset_kind),
        ("train_images", cfg.train_images),
        ("train_labels", cfg.train_labels),
        ("test_images", cfg.test_images),
        ("test_labels", cfg.test_labels),
        ("data_root", cfg.data_root),
        ("limit_train", cfg.limit_train),
        ("limit_test", cfg.limit_test),
        ("train_instances", cfg.train_instances),
        ("split_seed", cfg.split_seed),
        ("resize", cfg.resize),
    ])
    section("preprocess", [
        ("mode", cfg.mode),
        ("sigmas", ", ".join(f"{s:g}" for s in cfg.sigmas)),
        ("cutoff", f"{cfg.cutoff:g}"),
        ("zca_epsilon", f"{cfg.zca_epsilon:g}"),
    ])
    section("encoding", [("steps", cfg.steps)])
    section("network", [
        ("channels1", net.layer1.out_channels),
        ("channels2", net.layer2.out_channels),
        ("conv1_window", net.layer1.window),
        ("conv1_stride", net.layer1.stride),
        ("conv1_pad", net.layer1.pad),
        ("conv1_threshold", f"{net.layer1.threshold:g}"),
        ("pool1_window", net.pool1_window),
        ("conv2_window", net.layer2.window),
        ("conv2_stride", net.layer2.stride),
        ("conv2_pad", net.layer2.pad),
        ("conv2_threshold", f"{net.layer2.threshold:g}"),
        ("pool2_window", net.pool2_window),
        ("wta_k", net.wta_k),
        ("wta_radius", net.wta_radius),
    ])
    def stdp_pairs(s):
        return [
            ("a_plus", f"{s.a_plus:g}"), ("a_minus", f"{s.a_minus:g}"),
            ("lower", f"{s.lower:g}"), ("upper", f"{s.upper:g}"),
            ("double_every", s.double_every), ("rate_cap", f"{s.rate_cap:g}"),
            ("quantize_at", f"{s.quantize_at:g}"),
            ("init_mean", f"{s.init_mean:g}"), ("init_std", f"{s.init_std:g}"),
            ("stop_epsilon", f"{s.stop_epsilon:g}"),
            ("stop_patience", s.stop_patience), ("stop_window", s.stop_window),
        ]
    section("stdp", stdp_pairs(cfg.stdp1) + [("passes", cfg.passes)])
    if cfg.stdp2 != cfg.stdp1:
        section("stdp.layer2", stdp_pairs(cfg.stdp2))
    section("pca", [("components", cfg.pca_k)])
    section("classifier", [
        ("kind", cfg.classifier),
        ("reg_lambda", f"{cfg.reg_lambda:g}"),
        ("epochs", cfg.svm_epochs),
        ("rff_dims", cfg.rff_dims),
        ("rff_gamma", f"{cfg.rff_gamma:g}"),
    ])
    section("run", [("seed", cfg.seed)])
    return out.getvalue()


def preset(name: str) -> PipelineConfig:
    """Published configurations by name.

    mnist-small / mnist-medium / mnist-large: 3-sigma LoG greyscale front,
    cutoff 0.01, 15 steps, rates 4e-4/-3e-4 doubling every 2000 samples up
    to 0.15, one pass. eth80-hsv: HSV input through 9 LoG scales, cutoff
    0.0025, rates 5e-3/-5e-3 doubling every 410 samples up to 0.1, five
    passes. eth80-zca: same but whitening replaces the filter bank.
    """
    mnist_stdp = StdpConfig(a_plus=0.0004, a_minus=-0.0003, double_every=2000,
                            rate_cap=0.15)
    if name in ("mnist-small", "mnist-medium", "mnist-large"):
        # thresholds from a desk-scale grid search over digit data; re-tune
        # with the `grid` command for a new dataset
        size = name.split("-")[1]
        return PipelineConfig(
            dataset_kind="mnist",
            mode="log-grey",
            sigmas=MNIST_SIGMAS,
            cutoff=0.01,
            steps=15,
            network=NetworkConfig.preset(size, threshold1=15.0, threshold2=10.0),
            stdp1=mnist_stdp,
            stdp2=mnist_stdp,
            passes=1,
            pca_k=256,
            classifier="linear",
        )
    eth_stdp = StdpConfig(a_plus=0.005, a_minus=-0.005, double_every=410,
                          rate_cap=0.1)
    if name in ("eth80-hsv", "eth80-zca"):
        return PipelineConfig(
            dataset_kind="image-dir",
            data_root="data/eth80",
            mode="log-hsv" if name == "eth80-hsv" else "zca",
            sigmas=ETH80_SIGMAS,
            cutoff=0.0025,
            resize=64,
            steps=15,
            network=NetworkConfig.preset("medium", threshold1=30.0, threshold2=60.0),
            stdp1=eth_stdp,
            stdp2=eth_stdp,
            passes=5,
            pca_k=256,
            classifier="linear",
        )
    raise ValueError(
        f"unknown preset {name!r}; have mnist-small, mnist-medium, mnist-large, "
        f"eth80-hsv, eth80-zca"
    )

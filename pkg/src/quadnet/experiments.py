"""Experiment drivers: minima surveys, entropy dynamics, rasters, reports.

Every driver is deterministic given its configuration: seeds are assigned
sequentially from a base seed, report entries keep a fixed order, and all
file output uses LF line endings and stable formatting, so repeated runs
produce byte-identical artifacts.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .data import LabeledDataset, gen_taiji, load_idx_files
from .network import (
    DenseQuadraticLayer,
    FlattenLayer,
    MaxPoolLayer,
    Network,
    QuadConvLayer,
    QuadraticNeuron,
    build_mlp,
)
from .spectral import (
    MinimaSurveyRecord,
    frequency_variance,
    good_minima_entropy,
    layer_spectrum,
    signature_witness_pair,
    type_count,
    weighted_generalization_score,
)
from .training import TrainConfig, evaluate, predictions, train

MNIST_DIR_ENV = "QUADNET_MNIST_DIR"
GOOD_MINIMUM_THRESHOLD = 1200 / 1245

# Spectral classification needs an eigendecomposition per unit, so dynamics
# tracking only analyzes layers up to this input size by default.
ANALYZED_INPUT_CAP = 64


def _fmt(v) -> str:
    f = float(v)
    return str(int(f)) if f == int(f) else repr(f)


def write_text(path, text: str):
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


# ---------------------------------------------------------------------------
# Tai Ji CSV
# ---------------------------------------------------------------------------

def taiji_csv(dataset: LabeledDataset) -> str:
    lines = ["x,y,label"]
    for (x, y), label in zip(dataset.x, dataset.labels):
        lines.append(f"{_fmt(x)},{_fmt(y)},{int(label)}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# minima survey
# ---------------------------------------------------------------------------

@dataclass
class SurveyConfig:
    """Recipe for a repeated-training survey of good minima.

    Runs are seeded base_seed, base_seed+1, ... and kept while their training
    accuracy exceeds ``threshold``, until ``target`` runs are kept or
    ``max_attempts`` runs were tried.  The signature key is taken from the
    first hidden layer in simplified mode.
    """

    arch: tuple = (2, 6, 6, 1)
    target: int = 56
    threshold: float = GOOD_MINIMUM_THRESHOLD
    iterations: int = 1000
    lr_schedule: tuple = ((1000, 0.004),)
    base_seed: int = 0
    sigma: float = 0.3
    loss: str = "mse"
    reduction: str = "sum"
    batch_size: int | None = None
    hidden_activation: str = "sigmoid"
    output_activation: str = "sigmoid"
    train_grid: int = 20
    test_grid: int = 50
    eps_rel: float = 1e-6
    max_attempts: int = 0  # 0 -> 40 * target
    workers: int = 1
    top_k: int = 7

    def __post_init__(self):
        self.arch = tuple(int(w) for w in self.arch)
        if not (0 <= self.threshold <= 1):
            raise ValueError("threshold must lie in [0, 1]")
        if self.target < 1:
            raise ValueError("target must be >= 1")
        if self.max_attempts == 0:
            self.max_attempts = 40 * self.target

    def train_config(self, seed: int) -> TrainConfig:
        return TrainConfig(seed=seed, iterations=self.iterations,
                           lr_schedule=self.lr_schedule, batch_size=self.batch_size,
                           init="truncated_gaussian", sigma=self.sigma,
                           loss=self.loss, reduction=self.reduction)


@dataclass
class SurveyReport:
    config: SurveyConfig
    records: list
    attempted: int
    complete: bool

    @property
    def frequency_table(self):
        """(key, count, frequency, mean test accuracy), most frequent first."""
        groups = {}
        for r in self.records:
            groups.setdefault(r.key, []).append(r.test_accuracy)
        total = len(self.records)
        rows = [(key, len(accs), len(accs) / total, float(np.mean(accs)))
                for key, accs in groups.items()]
        rows.sort(key=lambda row: (-row[1], row[0]))
        return rows

    @property
    def distinct_keys(self) -> int:
        return len({r.key for r in self.records})

    def summary(self) -> dict:
        return {
            "entropy_bits": good_minima_entropy(self.records),
            "frequency_variance": frequency_variance(self.records),
            "weighted_generalization": weighted_generalization_score(self.records),
            "distinct_keys": self.distinct_keys,
            "max_possible_keys": type_count(self.arch_hidden_width(), "full"),
        }

    def arch_hidden_width(self) -> int:
        return self.config.arch[1]

    def to_json(self) -> str:
        cfg = asdict(self.config)
        cfg["arch"] = list(self.config.arch)
        cfg["lr_schedule"] = [[n, r] for n, r in self.config.lr_schedule]
        del cfg["workers"]  # execution detail; reports are worker-independent
        split = None
        if self.distinct_keys > self.config.top_k:
            split = top_k_split(self.records, self.config.top_k)
        doc = {
            "config": cfg,
            "runs_attempted": self.attempted,
            "runs_kept": len(self.records),
            "complete": self.complete,
            "records": [
                {"seed": r.seed, "key": list(r.key),
                 "train_accuracy": r.train_accuracy, "test_accuracy": r.test_accuracy}
                for r in self.records
            ],
            "frequency_table": [
                {"key": list(key), "count": count, "frequency": freq,
                 "mean_test_accuracy": mean}
                for key, count, freq, mean in self.frequency_table
            ],
            "summary": self.summary(),
            "top_k_split": split,
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _survey_networks(config: SurveyConfig):
    return build_mlp(config.arch, config.hidden_activation, config.output_activation)


def _survey_run(args):
    config, seed = args
    train_set = gen_taiji(config.train_grid)
    net = _survey_networks(config)
    train(net, train_set, config.train_config(seed))
    train_acc, _ = evaluate(net, train_set)
    if not train_acc > config.threshold:
        return seed, train_acc, None, None
    test_set = gen_taiji(config.test_grid)
    test_acc, _ = evaluate(net, test_set)
    key = layer_spectrum(net.layers[0], "simplified", config.eps_rel).key()
    return seed, train_acc, test_acc, key


def run_survey(config: SurveyConfig) -> SurveyReport:
    """Train seeded networks until ``target`` good minima are recorded.

    The outcome is independent of ``workers``: seeds are always consumed in
    ascending order and results are folded in that order.
    """
    records = []
    attempted = 0
    seeds = iter(range(config.base_seed, config.base_seed + config.max_attempts))

    def fold(result):
        nonlocal attempted
        seed, train_acc, test_acc, key = result
        attempted += 1
        if key is not None:
            records.append(MinimaSurveyRecord(key, train_acc, test_acc, seed))
        return len(records) >= config.target

    if config.workers <= 1:
        for seed in seeds:
            if fold(_survey_run((config, seed))):
                break
    else:
        chunk = max(config.workers * 4, 8)
        done = False
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            while not done:
                batch = [s for s, _ in zip(seeds, range(chunk))]
                if not batch:
                    break
                for result in pool.map(_survey_run, [(config, s) for s in batch]):
                    if fold(result):
                        done = True
                        break
    return SurveyReport(config=config, records=records, attempted=attempted,
                        complete=len(records) >= config.target)


def top_k_split(records, k: int) -> dict:
    """Mean generalization of the k most frequent keys versus the rest.

    Keys are ranked by descending frequency with lexicographic key order as
    the tie-break; each group's value is the unweighted mean of its per-key
    mean test accuracies.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    groups = {}
    for r in records:
        groups.setdefault(r.key, []).append(r.test_accuracy)
    if k >= len(groups):
        raise ValueError(f"k={k} must be smaller than the distinct key count {len(groups)}")
    ranked = sorted(groups.items(), key=lambda kv: (-len(kv[1]), kv[0]))
    per_key = [{"key": list(key), "count": len(accs),
                "frequency": len(accs) / len(records),
                "mean_test_accuracy": float(np.mean(accs))}
               for key, accs in ranked]
    top = ranked[:k]
    rest = ranked[k:]
    top_mean = float(np.mean([np.mean(a) for _, a in top]))
    rest_mean = float(np.mean([np.mean(a) for _, a in rest]))
    return {
        "k": k,
        "top_frequency": sum(len(a) for _, a in top) / len(records),
        "top_mean_generalization": top_mean,
        "rest_mean_generalization": rest_mean,
        "difference": top_mean - rest_mean,
        "per_key": per_key,
    }


def records_from_report_json(doc: dict):
    return [MinimaSurveyRecord(tuple(rec["key"]), rec["train_accuracy"],
                               rec["test_accuracy"], rec["seed"])
            for rec in doc["records"]]


def sharp_vs_flat_json(report_doc: dict, k: int) -> str:
    split = top_k_split(records_from_report_json(report_doc), k)
    return json.dumps(split, indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------------------
# entropy dynamics
# ---------------------------------------------------------------------------

@dataclass
class EntropySeries:
    """Per-layer spectrum entropies sampled during one training run."""

    cadence: int
    layer_indices: list
    entries: list = field(default_factory=list)  # (step, layer_index, entropy_bits)

    def for_layer(self, layer_index: int):
        return [(s, e) for s, li, e in self.entries if li == layer_index]

    def to_csv(self) -> str:
        lines = ["step,layer,entropy_bits"]
        for step, li, ent in self.entries:
            lines.append(f"{step},{li},{repr(float(ent))}")
        return "\n".join(lines) + "\n"


def analyzed_layers(network: Network, input_cap: int = ANALYZED_INPUT_CAP):
    """Indices of quadratic layers small enough to eigendecompose per unit.

    Prefers convolutional layers when any exist (spectra of the feature
    extractors), otherwise all small dense layers.
    """
    quads = network.quadratic_layers()
    convs = [(k, l) for k, l in quads if isinstance(l, QuadConvLayer)]
    chosen = convs if convs else quads
    return [k for k, layer in chosen if layer.w_r.shape[1] <= input_cap]


def run_entropy_dynamics(network: Network, dataset: LabeledDataset, config: TrainConfig,
                         cadence: int, layer_indices=None, eps_rel: float = 1e-6,
                         mode: str = "simplified") -> EntropySeries:
    """Train and record each analyzed layer's type entropy every ``cadence`` steps."""
    if cadence < 1:
        raise ValueError("cadence must be >= 1")
    if layer_indices is None:
        layer_indices = analyzed_layers(network)
    if not layer_indices:
        raise ValueError("no analyzable quadratic layers in this network")
    series = EntropySeries(cadence=cadence, layer_indices=list(layer_indices))

    def hook(step, net):
        if step % cadence == 0:
            for li in series.layer_indices:
                spec = layer_spectrum(net.layers[li], mode, eps_rel)
                series.entries.append((step, li, spec.entropy_bits()))

    train(network, dataset, config, step_hook=hook)
    return series


# ---------------------------------------------------------------------------
# decision-boundary rasters
# ---------------------------------------------------------------------------

def raster_neuron(neuron: QuadraticNeuron, resolution: int) -> np.ndarray:
    """Sign image of a 2-input neuron over [-1, 1]^2; row 0 is y = +1.

    Returns uint8 pixels: 255 where the raw output is positive, 0 elsewhere.
    """
    if neuron.n != 2:
        raise ValueError("rasterization needs a 2-input neuron")
    grid = _grid(resolution)
    p = grid @ neuron.w_r + neuron.b_r
    q = grid @ neuron.w_g + neuron.b_g
    value = p * q + (grid * grid) @ neuron.w_b + neuron.c
    return (value > 0).reshape(resolution, resolution).astype(np.uint8) * 255


def raster_network(network: Network, resolution: int) -> np.ndarray:
    """Predicted-class image of a 2-input binary classifier over [-1, 1]^2."""
    if network.input_shape != (2,):
        raise ValueError("rasterization needs a network with 2 input dimensions")
    if network.output_width > 2:
        raise ValueError("rasterization supports binary classifiers only")
    pred = predictions(network, _grid(resolution))
    return pred.reshape(resolution, resolution).astype(np.uint8) * 255


def _grid(resolution: int) -> np.ndarray:
    if resolution < 2:
        raise ValueError("resolution must be >= 2")
    xs = np.linspace(-1.0, 1.0, resolution)
    ys = np.linspace(1.0, -1.0, resolution)
    gx, gy = np.meshgrid(xs, ys)
    return np.column_stack([gx.ravel(), gy.ravel()])


def pgm_bytes(image: np.ndarray) -> bytes:
    """Binary (P5) PGM encoding of a uint8 image."""
    image = np.asarray(image)
    if image.ndim != 2 or image.dtype != np.uint8:
        raise ValueError("expected a 2-D uint8 image")
    h, w = image.shape
    return f"P5\n{w} {h}\n255\n".encode("ascii") + image.tobytes()


RASTER_PRESETS = {
    "xor": lambda: signature_witness_pair()[0],
    "witness-a": lambda: signature_witness_pair()[0],
    "witness-b": lambda: signature_witness_pair()[1],
    "const-positive": lambda: QuadraticNeuron(
        w_r=np.zeros(2), w_g=np.zeros(2), w_b=np.zeros(2), b_r=0.0, b_g=0.0, c=1.0),
}


def neuron_from_json(doc: dict) -> QuadraticNeuron:
    return QuadraticNeuron(
        w_r=np.asarray(doc["w_r"], dtype=np.float64),
        w_g=np.asarray(doc["w_g"], dtype=np.float64),
        w_b=np.asarray(doc["w_b"], dtype=np.float64),
        b_r=float(doc["b_r"]), b_g=float(doc["b_g"]), c=float(doc["c"]))


# ---------------------------------------------------------------------------
# digit-recognition spectra (MNIST-style IDX data)
# ---------------------------------------------------------------------------

@dataclass
class ImageNetConfig:
    """Desk-scale quadratic conv net and training recipe for IDX digit data."""

    kernels: int = 8
    kernel_size: int = 3
    pool: int = 2
    n_classes: int = 10
    seed: int = 0
    sigma: float = 0.1
    iterations: int = 5000
    batch_size: int = 50
    lr_schedule: tuple = ((2500, 0.05), (97500, 0.02))
    train_subset: int = 10000
    eps_rel: float = 1e-6


def build_image_net(in_shape, config: ImageNetConfig) -> Network:
    """Conv(depthwise quadratic, ReLU) -> max-pool -> dense quadratic softmax."""
    c, h, w = in_shape
    k = config.kernel_size
    conv = QuadConvLayer(c, config.kernels, k, k, stride=1,
                         grouping="depthwise", activation="relu")
    pool = MaxPoolLayer(config.pool, config.pool)
    shape = pool.output_shape(conv.output_shape(in_shape))
    dense_in = int(np.prod(shape))
    return Network(in_shape, [conv, pool, FlattenLayer(),
                              DenseQuadraticLayer(dense_in, config.n_classes, "softmax")])


@dataclass
class ImageSpectrumResult:
    histograms: dict  # layer index -> counts array of length n+1
    train_accuracy: float
    test_accuracy: float
    report: object

    def to_csv(self) -> str:
        lines = ["layer,type,count"]
        for li in sorted(self.histograms):
            for t, count in enumerate(self.histograms[li]):
                lines.append(f"{li},{t},{int(count)}")
        return "\n".join(lines) + "\n"


def spectrum_histogram(layer, eps_rel: float = 1e-6) -> np.ndarray:
    """Counts of simplified types 0..n over a layer's units (n+1 bins)."""
    spec = layer_spectrum(layer, "simplified", eps_rel)
    bins = np.zeros(spec.input_dim + 1, dtype=np.int64)
    for k, count in spec.counts.items():
        bins[k] = count
    return bins


def run_image_spectrum(train_set: LabeledDataset, test_set: LabeledDataset,
                       config: ImageNetConfig) -> ImageSpectrumResult:
    """Train the desk-scale conv net and histogram its conv-layer types."""
    if config.train_subset and len(train_set) > config.train_subset:
        train_set = LabeledDataset(train_set.x[:config.train_subset],
                                   train_set.labels[:config.train_subset],
                                   train_set.n_classes)
    net = build_image_net(train_set.x.shape[1:], config)
    tc = TrainConfig(seed=config.seed, iterations=config.iterations,
                     lr_schedule=config.lr_schedule, batch_size=config.batch_size,
                     init="truncated_gaussian", sigma=config.sigma,
                     loss="cross_entropy", reduction="mean")
    report = train(net, train_set, tc)
    train_acc, _ = evaluate(net, train_set)
    test_acc, _ = evaluate(net, test_set)
    histograms = {li: spectrum_histogram(net.layers[li], config.eps_rel)
                  for li in analyzed_layers(net)}
    return ImageSpectrumResult(histograms, train_acc, test_acc, report)


MNIST_FILES = {
    "train_images": "train-images-idx3-ubyte",
    "train_labels": "train-labels-idx1-ubyte",
    "test_images": "t10k-images-idx3-ubyte",
    "test_labels": "t10k-labels-idx1-ubyte",
}

MNIST_HINT = ("set " + MNIST_DIR_ENV + " to a directory containing the four IDX files "
              "(train-images-idx3-ubyte, train-labels-idx1-ubyte, t10k-images-idx3-ubyte, "
              "t10k-labels-idx1-ubyte, optionally .gz)")


def find_mnist_file(data_dir: str, stem: str) -> str:
    for candidate in (stem, stem + ".gz"):
        path = os.path.join(data_dir, candidate)
        if os.path.exists(path):
            return path
    raise FileNotFoundError(f"missing {stem} in {data_dir}; {MNIST_HINT}")


def load_mnist(data_dir: str | None):
    """(train, test) datasets from an IDX directory (or the env variable)."""
    data_dir = data_dir or os.environ.get(MNIST_DIR_ENV)
    if not data_dir:
        raise FileNotFoundError(f"no data directory given; {MNIST_HINT}")
    train = load_idx_files(find_mnist_file(data_dir, MNIST_FILES["train_images"]),
                           find_mnist_file(data_dir, MNIST_FILES["train_labels"]))
    test = load_idx_files(find_mnist_file(data_dir, MNIST_FILES["test_images"]),
                          find_mnist_file(data_dir, MNIST_FILES["test_labels"]))
    return train, test

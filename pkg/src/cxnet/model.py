"""Hybrid complex/real architecture assembly, training loop, and checkpoints.

The hybrid stack is: complex conv (modulus activation) -> real conv + ReLU
-> max pool -> real conv + ReLU -> flatten -> two hidden dense layers with
ReLU -> dense class head -> softmax cross-entropy. The real-only reference
network drops the complex front end and widens the first conv instead.

Input encodings: "complex" feeds the half spectrum scaled by 1/n (phase
must survive untouched, so no per-bin statistics are applied); "phase" is
raw angles in [-pi, pi]; every other encoding (amplitude, re, im, reim,
time) is standardized per position with training-set statistics.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace

import numpy as np

from . import cvconv, dsp, realnet
from .data import LabeledDataset
from .errors import InvalidConfigError, InvalidInputError, TrainingError

ENCODINGS = ("complex", "amplitude", "phase", "time", "re", "im", "reim")
ARCHS = ("hybrid", "baseline")


@dataclass(frozen=True)
class ModelConfig:
    """Layer hyperparameters plus training settings.

    ``input_len`` is the network input length after encoding (spectrum bins,
    or raw samples for the time encoding).
    """

    input_len: int
    n_classes: int
    arch: str = "hybrid"
    encoding: str = "complex"
    complex_channels: int = 8
    complex_width: int = 2
    conv1_channels: int = 16
    conv2_channels: int = 32
    baseline_channels: int = 32
    conv_width: int = 5
    pool_size: int = 3
    pool_stride: int = 3
    fc: tuple[int, ...] = (128, 32)
    rayleigh_sigma: float | None = None
    seed: int = 0
    lr: float = 1e-3
    batch_size: int = 64
    max_epochs: int = 100
    pad_to: int | None = None
    dtype: str = "float64"  # float32 roughly halves training time

    def __post_init__(self):
        if self.dtype not in ("float32", "float64"):
            raise InvalidConfigError(f"dtype must be float32 or float64, got {self.dtype}")
        if self.n_classes < 2:
            raise InvalidConfigError(f"need at least 2 classes, got {self.n_classes}")
        if self.input_len < 1:
            raise InvalidConfigError(f"input_len must be positive, got {self.input_len}")
        if self.encoding not in ENCODINGS:
            raise InvalidConfigError(f"unknown encoding {self.encoding!r}")
        if self.arch not in ARCHS:
            raise InvalidConfigError(f"unknown arch {self.arch!r}")
        if (self.arch == "hybrid") != (self.encoding == "complex"):
            raise InvalidConfigError("the complex encoding pairs with the hybrid arch only")
        if min(self.complex_width, self.conv_width) < 1 or min(self.fc) < 1:
            raise InvalidConfigError("layer widths must be >= 1")
        if self.batch_size < 1 or self.max_epochs < 1 or self.lr <= 0:
            raise InvalidConfigError("bad training settings")

    @property
    def in_channels(self) -> int:
        return 2 if self.encoding == "reim" else 1


def encoded_length(encoding: str, signal_len: int, pad_to: int | None = None) -> int:
    """Network input length produced by an encoding of a signal of given length."""
    n = signal_len if encoding == "time" else signal_len // 2 + 1
    if pad_to is not None and encoding != "time":
        if pad_to < n:
            raise InvalidConfigError(f"pad_to {pad_to} shorter than spectrum {n}")
        n = pad_to
    return n


def encode_input(signal: dsp.Signal, encoding: str, pad_to: int | None = None) -> np.ndarray:
    """Encode one signal into a (channels, length) network input (unstandardized)."""
    if encoding not in ENCODINGS:
        raise InvalidConfigError(f"unknown encoding {encoding!r}")
    if encoding == "time":
        return signal.samples[None, :].astype(np.float64)
    bins = dsp.half_spectrum(dsp.dft(signal)).bins
    if pad_to is not None:
        if pad_to < bins.size:
            raise InvalidConfigError(f"pad_to {pad_to} shorter than spectrum {bins.size}")
        bins = np.concatenate([bins, np.zeros(pad_to - bins.size, dtype=bins.dtype)])
    if encoding == "complex":
        return (bins / len(signal))[None, :]
    if encoding == "amplitude":
        return np.abs(bins)[None, :]
    if encoding == "phase":
        return np.angle(bins)[None, :]
    if encoding == "re":
        return bins.real[None, :]
    if encoding == "im":
        return bins.imag[None, :]
    return np.stack([bins.real, bins.imag])  # reim


def encode_dataset(signals, encoding: str, pad_to: int | None = None) -> np.ndarray:
    """Encode a list of equal-length signals into an (N, channels, length) array."""
    if not signals:
        raise InvalidInputError("no signals to encode")
    if encoding == "time":
        return np.stack([s.samples for s in signals])[:, None, :]
    # batch all spectra in one transform pass
    samples = np.stack([s.samples for s in signals])
    n = samples.shape[1]
    bins = dsp._fft_raw(samples)[:, : n // 2 + 1]
    if pad_to is not None:
        if pad_to < bins.shape[1]:
            raise InvalidConfigError(f"pad_to {pad_to} shorter than spectrum {bins.shape[1]}")
        bins = np.pad(bins, ((0, 0), (0, pad_to - bins.shape[1])))
    if encoding == "complex":
        return (bins / n)[:, None, :]
    if encoding == "amplitude":
        return np.abs(bins)[:, None, :]
    if encoding == "phase":
        return np.angle(bins)[:, None, :]
    if encoding == "re":
        return bins.real[:, None, :].copy()
    if encoding == "im":
        return bins.imag[:, None, :].copy()
    return np.stack([bins.real, bins.imag], axis=1)


class Standardizer:
    """Per-position input conditioning fit on training data.

    Real encodings (amplitude, re, im, reim, time) get the usual per-position
    standardization. The complex encoding is divided by a positive real scale
    per bin (the RMS modulus of the training bins): phases and relative
    phases pass through exactly, only the per-bin magnitude spread is
    equalized so low-frequency bins cannot drown the rest. Phase encodings
    pass through untouched (rescaling an angle would distort it).
    """

    def __init__(self, encoding: str):
        self.encoding = encoding
        self.mean = None
        self.std = None

    @property
    def active(self) -> bool:
        return self.encoding != "phase"

    def fit(self, x: np.ndarray) -> "Standardizer":
        if self.encoding == "complex":
            self.mean = None
            self.std = np.maximum(np.sqrt(np.mean(np.abs(x) ** 2, axis=0)), 1e-12)
        elif self.active:
            self.mean = x.mean(axis=0)
            self.std = np.maximum(x.std(axis=0), 1e-8)
        return self

    def transform(self, x: np.ndarray) -> np.ndarray:
        if not self.active:
            return x
        if self.std is None:
            raise InvalidInputError("standardizer used before fit")
        if self.encoding == "complex":
            return x / self.std
        return (x - self.mean) / self.std


class ComplexConvBlock:
    """Complex conv + modulus, presenting the real-layer interface."""

    def __init__(self, kernels: np.ndarray, biases: np.ndarray, stride: int = 1, padding="same"):
        self.kernels = np.asarray(kernels, dtype=np.complex128)
        self.biases = np.asarray(biases, dtype=np.complex128)
        self.stride = stride
        self.padding = padding
        self.grad_kernels = np.zeros_like(self.kernels)
        self.grad_biases = np.zeros_like(self.biases)
        self._z = None
        self._cols = None
        self._u = None
        self._y = None

    def _layer(self) -> cvconv.ComplexConvLayer:
        return cvconv.ComplexConvLayer(self.kernels, self.biases, self.stride, self.padding)

    def trainable(self):
        return ["kernels", "biases"]

    def param_count(self) -> int:
        return 2 * (self.kernels.size + self.biases.size)

    def forward(self, z: np.ndarray) -> np.ndarray:
        self._z = z
        self._cols = cvconv.sliding_windows(z, self.kernels.shape[2], self.stride, self.padding)
        self._u, self._y = cvconv.complex_conv_forward(z, self._layer(), cols=self._cols)
        return self._y

    def backward(self, dout: np.ndarray):
        self.grad_kernels, self.grad_biases = cvconv.complex_conv_backward(
            self._z, self._layer(), self._u, self._y, dout, cols=self._cols
        )
        return None  # first layer of the stack: no input gradient needed


class Model:
    """Ordered layer stack plus the config it was built from."""

    def __init__(self, layers: list, layer_names: list[str], config: ModelConfig):
        self.layers = layers
        self.layer_names = layer_names
        self.config = config
        self.standardizer = Standardizer(config.encoding)

    def forward(self, x: np.ndarray) -> np.ndarray:
        for layer in self.layers:
            x = layer.forward(x)
        return x

    def backward(self, dlogits: np.ndarray) -> None:
        grad = dlogits
        for layer in reversed(self.layers):
            grad = layer.backward(grad)

    def predict(self, x: np.ndarray, chunk: int = 1024) -> np.ndarray:
        out = [np.argmax(self.forward(x[i : i + chunk]), axis=1) for i in range(0, len(x), chunk)]
        return np.concatenate(out)

    def named_params(self):
        for name, layer in zip(self.layer_names, self.layers):
            for attr in layer.trainable():
                yield f"{name}.{attr}", layer, attr


def _flatten_length(config: ModelConfig) -> int:
    pooled = realnet.pool_output_length(config.input_len, config.pool_size, config.pool_stride)
    if pooled < 1:
        raise InvalidConfigError("input too short for the pooling stage")
    channels = config.conv2_channels if config.arch == "hybrid" else config.baseline_channels
    return pooled * channels


def build_hybrid(config: ModelConfig, rng: np.random.Generator) -> Model:
    """Complex front end (modulus activation) feeding the real conv/dense tail."""
    if config.arch != "hybrid":
        raise InvalidConfigError("config.arch must be 'hybrid'")
    sigma = config.rayleigh_sigma or cvconv.rayleigh_sigma(1, config.complex_width)
    layers: list = []
    names: list[str] = []

    def add(name, layer):
        names.append(name)
        layers.append(layer)

    add(
        "complex_conv",
        ComplexConvBlock(
            cvconv.init_complex((config.complex_channels, 1, config.complex_width), sigma, rng),
            cvconv.init_complex((config.complex_channels,), sigma, rng),
        ),
    )
    add("conv1", realnet.Conv1d.build(config.complex_channels, config.conv1_channels, config.conv_width, rng))
    add("relu1", realnet.ReLU())
    add("pool", realnet.MaxPool1d(config.pool_size, config.pool_stride))
    add("conv2", realnet.Conv1d.build(config.conv1_channels, config.conv2_channels, config.conv_width, rng))
    add("relu2", realnet.ReLU())
    add("flatten", realnet.Flatten())
    width_in = _flatten_length(config)
    for i, width in enumerate(config.fc, start=1):
        add(f"fc{i}", realnet.Dense.build(width_in, width, rng))
        add(f"relu_fc{i}", realnet.ReLU())
        width_in = width
    add(f"fc{len(config.fc) + 1}", realnet.Dense.build(width_in, config.n_classes, rng))
    return Model(layers, names, config)


def build_baseline_real(config: ModelConfig, rng: np.random.Generator) -> Model:
    """Real-only reference network: two conv layers and the dense tail."""
    if config.arch != "baseline":
        raise InvalidConfigError("config.arch must be 'baseline'")
    layers: list = []
    names: list[str] = []

    def add(name, layer):
        names.append(name)
        layers.append(layer)

    add("conv1", realnet.Conv1d.build(config.in_channels, config.baseline_channels, config.conv_width, rng))
    add("relu1", realnet.ReLU())
    add("pool", realnet.MaxPool1d(config.pool_size, config.pool_stride))
    add("conv2", realnet.Conv1d.build(config.baseline_channels, config.baseline_channels, config.conv_width, rng))
    add("relu2", realnet.ReLU())
    add("flatten", realnet.Flatten())
    width_in = _flatten_length(config)
    for i, width in enumerate(config.fc, start=1):
        add(f"fc{i}", realnet.Dense.build(width_in, width, rng))
        add(f"relu_fc{i}", realnet.ReLU())
        width_in = width
    add(f"fc{len(config.fc) + 1}", realnet.Dense.build(width_in, config.n_classes, rng))
    return Model(layers, names, config)


def _cast_model(model: Model) -> Model:
    if model.config.dtype == "float64":
        return model
    for _, layer, attr in model.named_params():
        value = getattr(layer, attr)
        target = np.complex64 if np.iscomplexobj(value) else np.float32
        setattr(layer, attr, value.astype(target))
    return model


def _input_dtype(config: ModelConfig):
    if config.encoding == "complex":
        return np.complex128 if config.dtype == "float64" else np.complex64
    return np.float64 if config.dtype == "float64" else np.float32


def build_model(config: ModelConfig, rng: np.random.Generator) -> Model:
    if config.arch == "hybrid":
        return _cast_model(build_hybrid(config, rng))
    return _cast_model(build_baseline_real(config, rng))


# ---------------------------------------------------------------------------
# Parameter and activation accounting
# ---------------------------------------------------------------------------


def count_params(model: Model):
    """Per-layer real-parameter counts (complex counted twice) and activation
    sizes per sample, plus totals. Returns (rows, total_params) where each row
    is (layer_name, param_count, activation_reals)."""
    config = model.config
    length = config.input_len
    channels = config.in_channels
    rows = [("input", 0, channels * length * (2 if config.encoding == "complex" else 1))]
    for name, layer in zip(model.layer_names, model.layers):
        if isinstance(layer, ComplexConvBlock):
            channels = layer.kernels.shape[0]
            rows.append((name, layer.param_count(), channels * length * 2))
            rows.append(("modulus", 0, channels * length))
        elif isinstance(layer, realnet.Conv1d):
            channels = layer.weights.shape[0]
            rows.append((name, layer.param_count(), channels * length))
        elif isinstance(layer, realnet.MaxPool1d):
            length = realnet.pool_output_length(length, layer.size, layer.stride)
            rows.append((name, 0, channels * length))
        elif isinstance(layer, realnet.Dense):
            rows.append((name, layer.param_count(), layer.weights.shape[0]))
    total = sum(r[1] for r in rows)
    return rows, total


def format_param_table(model: Model) -> str:
    rows, total = count_params(model)
    lines = [f"{'layer':<14}{'params':>10}{'activations':>14}"]
    for name, params, act in rows:
        lines.append(f"{name:<14}{params:>10}{act:>14}")
    lines.append(f"{'total':<14}{total:>10}")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------


def _prepare(dataset: LabeledDataset, config: ModelConfig, standardizer: Standardizer | None):
    x = encode_dataset(dataset.signals, config.encoding, config.pad_to)
    if standardizer is not None:
        x = standardizer.transform(x)
    return x.astype(_input_dtype(config), copy=False), dataset.labels


def _epoch_pass(model: Model, x, y, config: ModelConfig, states: dict, rng) -> float:
    order = rng.permutation(len(x))
    total_loss = 0.0
    for start in range(0, len(order), config.batch_size):
        idx = order[start : start + config.batch_size]
        logits = model.forward(x[idx])
        loss, dlogits = realnet.softmax_cross_entropy(logits, y[idx])
        if not np.isfinite(loss):
            raise TrainingError("training loss became non-finite", epoch=states["epoch"])
        total_loss += loss * len(idx)
        model.backward(dlogits.astype(logits.dtype, copy=False))
        for pname, layer, attr in model.named_params():
            value = getattr(layer, attr)
            grad = getattr(layer, f"grad_{attr}")
            if np.iscomplexobj(value):
                new = cvconv.complex_adam_step(value, grad, states[pname], lr=config.lr)
            else:
                new = realnet.adam_step(value, grad, states[pname], lr=config.lr)
            setattr(layer, attr, new)
    return total_loss / len(order)


def _adam_states(model: Model) -> dict:
    states: dict = {"epoch": 0}
    for pname, layer, attr in model.named_params():
        value = getattr(layer, attr)
        if np.iscomplexobj(value):
            states[pname] = cvconv.ComplexAdamState.for_params(value)
        else:
            states[pname] = realnet.AdamState.for_params(value)
    return states


def accuracy_and_confusion(model: Model, x: np.ndarray, y: np.ndarray):
    pred = model.predict(x)
    k = model.config.n_classes
    confusion = np.zeros((k, k), dtype=np.int64)
    np.add.at(confusion, (y, pred), 1)
    return float(np.trace(confusion) / len(y)), confusion


def train(
    model: Model,
    train_set: LabeledDataset,
    valid_set: LabeledDataset,
    config: ModelConfig,
    rng: np.random.Generator,
):
    """Mini-batch training with per-epoch validation accuracy tracking.

    Returns (history, best_epoch): history rows are (epoch, train_loss,
    valid_accuracy) with epochs 1-based; best_epoch is the earliest epoch of
    maximal validation accuracy.
    """
    model.standardizer = Standardizer(config.encoding).fit(
        encode_dataset(train_set.signals, config.encoding, config.pad_to)
    )
    x_train, y_train = _prepare(train_set, config, model.standardizer)
    x_valid, y_valid = _prepare(valid_set, config, model.standardizer)
    states = _adam_states(model)
    history = []
    for epoch in range(1, config.max_epochs + 1):
        states["epoch"] = epoch
        mean_loss = _epoch_pass(model, x_train, y_train, config, states, rng)
        acc, _ = accuracy_and_confusion(model, x_valid, y_valid)
        history.append((epoch, mean_loss, acc))
    best_epoch = int(max(history, key=lambda row: (row[2], -row[0]))[0])
    return history, best_epoch


def retrain_and_test(
    config: ModelConfig,
    merged_set: LabeledDataset,
    test_set: LabeledDataset,
    best_epoch: int,
    rng: np.random.Generator,
):
    """Fresh model trained for exactly best_epoch epochs on the merged data,
    evaluated once on the held-out test set."""
    if best_epoch < 1:
        raise InvalidInputError(f"best_epoch must be >= 1, got {best_epoch}")
    model = build_model(config, rng)
    model.standardizer = Standardizer(config.encoding).fit(
        encode_dataset(merged_set.signals, config.encoding, config.pad_to)
    )
    x_train, y_train = _prepare(merged_set, config, model.standardizer)
    states = _adam_states(model)
    for epoch in range(1, best_epoch + 1):
        states["epoch"] = epoch
        _epoch_pass(model, x_train, y_train, config, states, rng)
    x_test, y_test = _prepare(test_set, config, model.standardizer)
    accuracy, confusion = accuracy_and_confusion(model, x_test, y_test)
    return model, accuracy, confusion


# ---------------------------------------------------------------------------
# Checkpoints: plain-text tensors, stable layout
# ---------------------------------------------------------------------------


def _format_floats(arr: np.ndarray) -> str:
    return " ".join(format(v, ".17g") for v in arr.ravel())


def save_checkpoint(model: Model, path) -> None:
    """Write `config key value` lines, then one tensor block per parameter:
    `tensor <name> <real|complex> <shape...>` followed by `data`/(`re`,`im`)."""
    lines = ["cxnet-checkpoint v1"]
    for f in fields(model.config):
        value = getattr(model.config, f.name)
        if isinstance(value, tuple):
            value = ",".join(str(v) for v in value)
        lines.append(f"config {f.name} {value}")
    tensors = [(name, getattr(layer, attr)) for name, layer, attr in model.named_params()]
    std = model.standardizer
    if std.mean is not None:
        tensors.append(("standardizer.mean", std.mean))
    if std.std is not None:
        tensors.append(("standardizer.std", std.std))
    for name, arr in tensors:
        kind = "complex" if np.iscomplexobj(arr) else "real"
        shape = " ".join(str(d) for d in arr.shape)
        lines.append(f"tensor {name} {kind} {shape}")
        if kind == "complex":
            lines.append("re " + _format_floats(arr.real))
            lines.append("im " + _format_floats(arr.imag))
        else:
            lines.append("data " + _format_floats(arr))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _parse_config_value(name: str, raw: str):
    for f in fields(ModelConfig):
        if f.name != name:
            continue
        if raw == "None":
            return None
        if f.name == "fc":
            return tuple(int(v) for v in raw.split(","))
        if f.name in ("arch", "encoding", "dtype"):
            return raw
        if f.name in ("lr", "rayleigh_sigma"):
            return float(raw)
        return int(raw)
    raise InvalidInputError(f"unknown config field {name!r} in checkpoint")


def load_checkpoint(path) -> Model:
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    if not lines or lines[0] != "cxnet-checkpoint v1":
        raise InvalidInputError(f"{path} is not a cxnet checkpoint")
    config_kwargs: dict = {}
    tensors: dict[str, np.ndarray] = {}
    i = 1
    while i < len(lines):
        line = lines[i]
        if line.startswith("config "):
            _, name, raw = line.split(" ", 2)
            config_kwargs[name] = _parse_config_value(name, raw)
            i += 1
        elif line.startswith("tensor "):
            parts = line.split()
            name, kind = parts[1], parts[2]
            shape = tuple(int(v) for v in parts[3:])
            if kind == "complex":
                re = np.array(lines[i + 1][3:].split(), dtype=np.float64)
                im = np.array(lines[i + 2][3:].split(), dtype=np.float64)
                tensors[name] = (re + 1j * im).reshape(shape)
                i += 3
            else:
                tensors[name] = np.array(lines[i + 1][5:].split(), dtype=np.float64).reshape(shape)
                i += 2
        elif not line.strip():
            i += 1
        else:
            raise InvalidInputError(f"unrecognized checkpoint line: {line[:40]!r}")
    config = ModelConfig(**config_kwargs)
    model = build_model(config, np.random.default_rng(config.seed))
    for name, layer, attr in model.named_params():
        if name not in tensors:
            raise InvalidInputError(f"checkpoint missing tensor {name}")
        stored = tensors[name]
        if stored.shape != getattr(layer, attr).shape:
            raise InvalidInputError(f"checkpoint tensor {name} has wrong shape {stored.shape}")
        setattr(layer, attr, stored)
    if "standardizer.mean" in tensors:
        model.standardizer.mean = tensors["standardizer.mean"]
    if "standardizer.std" in tensors:
        model.standardizer.std = tensors["standardizer.std"]
    return _cast_model(model)

"""Two-tower convolution + attention classifier for labeled epochs.

Tower "time" consumes the raw window (L x d); tower "freq" consumes the
log-compressed one-sided FFT magnitudes (L/2+1 x d). Each tower embeds
with a per-channel temporal convolution and a cross-channel spatial
projection, adds a learned absolute positional encoding, runs multi-head
self-attention with a learned relative positional bias, applies a
feed-forward block, and global-average-pools to an embedding. The two
embeddings are concatenated and mapped to class logits.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .errors import ConfigError, DataError, NumericalError
from .recording import Epoch, EpochSet

LABELS = ("real", "fake")
LABEL_TO_INDEX = {"real": 0, "fake": 1}
TOWERS = ("time", "freq")


@dataclass(frozen=True)
class ModelConfig:
    """Architecture hyperparameters. embed_dim must divide evenly into heads."""

    window_len: int = 128
    n_channels: int = 64
    embed_dim: int = 32
    heads: int = 4
    attention_blocks: int = 1
    ffn_dim: int = 64
    classes: int = 2
    dropout: float = 0.1
    seed: int = 0
    temporal_filters: int = 4
    temporal_kernel: int = 7

    def __post_init__(self):
        if self.embed_dim % self.heads != 0:
            raise ConfigError(f"embed_dim {self.embed_dim} not divisible by heads {self.heads}")
        if self.classes < 2:
            raise ConfigError(f"classes must be >= 2, got {self.classes}")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError(f"dropout must be in [0, 1), got {self.dropout}")
        if self.window_len < 2 or self.window_len & (self.window_len - 1) != 0:
            raise ConfigError(f"window_len must be a power of two, got {self.window_len}")
        if self.temporal_kernel < 1 or self.temporal_kernel > self.window_len:
            raise ConfigError("temporal_kernel must be in [1, window_len]")
        for name in ("n_channels", "embed_dim", "heads", "attention_blocks", "ffn_dim", "temporal_filters"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")

    @property
    def head_dim(self) -> int:
        return self.embed_dim // self.heads

    @property
    def spectrum_bins(self) -> int:
        return self.window_len // 2 + 1

    def sequence_length(self, tower: str) -> int:
        return self.window_len if tower == "time" else self.spectrum_bins


@dataclass
class ModelParams:
    """Named parameter blocks; flatten/unflatten round-trips exactly."""

    config: ModelConfig
    blocks: dict[str, np.ndarray] = field(default_factory=dict)

    def flatten(self) -> np.ndarray:
        if not self.blocks:
            return np.zeros(0)
        return np.concatenate([self.blocks[name].ravel() for name in self.blocks])

    def unflatten(self, flat: np.ndarray) -> None:
        """Overwrite all blocks from a flat vector (inverse of flatten)."""
        flat = np.asarray(flat, dtype=np.float64)
        offset = 0
        for name, block in self.blocks.items():
            size = block.size
            self.blocks[name] = flat[offset : offset + size].reshape(block.shape).copy()
            offset += size
        if offset != flat.size:
            raise DataError(f"flat vector has {flat.size} entries, expected {offset}")

    @property
    def n_parameters(self) -> int:
        return sum(b.size for b in self.blocks.values())

    def checksum(self) -> str:
        return hashlib.sha256(self.flatten().tobytes()).hexdigest()

    def copy(self) -> "ModelParams":
        return ModelParams(config=self.config, blocks={k: v.copy() for k, v in self.blocks.items()})


def _glorot(rng: np.random.Generator, shape: tuple[int, ...], fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def _sinusoidal_encoding(length: int, dim: int) -> np.ndarray:
    position = np.arange(length)[:, np.newaxis]
    rates = np.exp(-np.log(10000.0) * (2 * (np.arange(dim) // 2)) / max(dim, 1))
    angles = position * rates[np.newaxis, :]
    enc = np.zeros((length, dim))
    enc[:, 0::2] = np.sin(angles[:, 0::2])
    enc[:, 1::2] = np.cos(angles[:, 1::2])
    return enc


def init_params(config: ModelConfig) -> ModelParams:
    """Deterministic per-seed initialization.

    Conv/linear weights are Glorot-uniform, biases and relative position
    tables start at zero, and absolute positional encodings start from the
    sinusoidal table (they remain trainable).
    """
    rng = np.random.default_rng(config.seed)
    k = config.temporal_kernel
    f1 = config.temporal_filters
    d = config.n_channels
    e = config.embed_dim
    blocks: dict[str, np.ndarray] = {}
    for tower in TOWERS:
        t = config.sequence_length(tower)
        prefix = f"{tower}."
        blocks[prefix + "temporal_kernel"] = _glorot(rng, (k, f1), k, k * f1)
        blocks[prefix + "temporal_bias"] = np.zeros(f1)
        blocks[prefix + "spatial_kernel"] = _glorot(rng, (d * f1, e), d * f1, e)
        blocks[prefix + "spatial_bias"] = np.zeros(e)
        blocks[prefix + "pos_encoding"] = _sinusoidal_encoding(t, e)
        for b in range(config.attention_blocks):
            bp = f"{prefix}block{b}."
            for proj in ("wq", "wk", "wv", "wo"):
                blocks[bp + proj] = _glorot(rng, (e, e), e, e)
                blocks[bp + proj + "_bias"] = np.zeros(e)
            blocks[bp + "rel_bias"] = np.zeros((config.heads, 2 * t - 1))
            blocks[bp + "ffn_w1"] = _glorot(rng, (e, config.ffn_dim), e, config.ffn_dim)
            blocks[bp + "ffn_b1"] = np.zeros(config.ffn_dim)
            blocks[bp + "ffn_w2"] = _glorot(rng, (config.ffn_dim, e), config.ffn_dim, e)
            blocks[bp + "ffn_b2"] = np.zeros(e)
    blocks["head.weight"] = _glorot(rng, (2 * e, config.classes), 2 * e, config.classes)
    blocks["head.bias"] = np.zeros(config.classes)
    return ModelParams(config=config, blocks=blocks)


def _batch_windows(batch, config: ModelConfig) -> np.ndarray:
    """Stack epochs into (B, L, d), validating shapes."""
    if isinstance(batch, EpochSet):
        windows = batch.windows_array()
    elif isinstance(batch, np.ndarray):
        windows = batch
    else:
        windows = np.stack([e.window if isinstance(e, Epoch) else np.asarray(e) for e in batch])
    if windows.ndim != 3:
        raise DataError(f"batch must stack to 3-D (batch, samples, channels), got {windows.shape}")
    if windows.shape[1] != config.window_len or windows.shape[2] != config.n_channels:
        raise DataError(
            f"epoch shape {windows.shape[1:]} does not match config "
            f"({config.window_len}, {config.n_channels})"
        )
    return np.asarray(windows, dtype=np.float64)


def _freq_input(windows: np.ndarray) -> np.ndarray:
    """Log-compressed one-sided magnitude spectra, (B, L/2+1, d)."""
    return np.log1p(np.abs(np.fft.rfft(windows, axis=1)))


def _unfolded(x: np.ndarray, kernel: int) -> np.ndarray:
    """Sliding windows over time with same-padding: (B, T, d, kernel)."""
    before = (kernel - 1) // 2
    after = kernel - 1 - before
    padded = np.pad(x, ((0, 0), (before, after), (0, 0)))
    windows = np.lib.stride_tricks.sliding_window_view(padded, kernel, axis=1)
    return np.ascontiguousarray(windows)


class _TensorStore:
    """Wraps parameter blocks as autodiff tensors, preserving identity per block."""

    def __init__(self, params: ModelParams):
        self.tensors = {name: Tensor(block, requires_grad=True) for name, block in params.blocks.items()}

    def __getitem__(self, name: str) -> Tensor:
        return self.tensors[name]

    def gradients(self, params: ModelParams) -> dict[str, np.ndarray]:
        out = {}
        for name, tensor in self.tensors.items():
            grad = tensor.grad if tensor.grad is not None else np.zeros_like(params.blocks[name])
            out[name] = grad
        return out


def _tower_forward(
    store: _TensorStore,
    tower: str,
    x: np.ndarray,
    config: ModelConfig,
    training: bool,
    dropout_rng: np.random.Generator | None,
    internals: dict | None,
) -> Tensor:
    batch, t, d = x.shape
    f1 = config.temporal_filters
    e = config.embed_dim
    prefix = f"{tower}."

    unfolded = _unfolded(x, config.temporal_kernel)  # (B, T, d, k), constant
    flat = Tensor(unfolded.reshape(batch * t * d, config.temporal_kernel))
    conv = ad.matmul(flat, store[prefix + "temporal_kernel"])  # (B*T*d, F1)
    conv = ad.add(conv, store[prefix + "temporal_bias"])
    h = ad.gelu(conv).reshape((batch, t, d * f1))

    h = ad.matmul(h.reshape((batch * t, d * f1)), store[prefix + "spatial_kernel"])
    h = ad.add(h, store[prefix + "spatial_bias"])
    z = ad.gelu(h).reshape((batch, t, e))
    z = ad.add(z, store[prefix + "pos_encoding"])

    heads = config.heads
    head_dim = config.head_dim
    rel_index = np.arange(t)[:, np.newaxis] - np.arange(t)[np.newaxis, :] + t - 1
    for b in range(config.attention_blocks):
        bp = f"{prefix}block{b}."

        def project(name: str) -> Tensor:
            p = ad.add(ad.matmul(z.reshape((batch * t, e)), store[bp + name]), store[bp + name + "_bias"])
            return p.reshape((batch, t, heads, head_dim)).transpose((0, 2, 1, 3))

        q = project("wq")
        k_ = project("wk")
        v = project("wv")
        logits = ad.mul(ad.matmul(q, k_.transpose((0, 1, 3, 2))), Tensor(1.0 / np.sqrt(head_dim)))
        bias = ad.take(store[bp + "rel_bias"], rel_index, axis=1)  # (heads, T, T)
        probs = ad.softmax(ad.add(logits, bias), axis=-1)
        if internals is not None:
            internals.setdefault("attention", {})[f"{tower}.block{b}"] = probs.data
        probs = _dropout(probs, config.dropout, training, dropout_rng)
        ctx = ad.matmul(probs, v).transpose((0, 2, 1, 3)).reshape((batch, t, e))
        ctx = ad.add(ad.matmul(ctx.reshape((batch * t, e)), store[bp + "wo"]), store[bp + "wo_bias"])
        ctx = _dropout(ctx.reshape((batch, t, e)), config.dropout, training, dropout_rng)
        z = ad.layer_norm(ad.add(z, ctx), axis=-1)

        hidden = ad.gelu(ad.add(ad.matmul(z.reshape((batch * t, e)), store[bp + "ffn_w1"]), store[bp + "ffn_b1"]))
        hidden = _dropout(hidden, config.dropout, training, dropout_rng)
        ffn = ad.add(ad.matmul(hidden, store[bp + "ffn_w2"]), store[bp + "ffn_b2"]).reshape((batch, t, e))
        z = ad.layer_norm(ad.add(z, ffn), axis=-1)

    return z.mean(axis=1)  # (B, e)


def _dropout(x: Tensor, rate: float, training: bool, rng: np.random.Generator | None) -> Tensor:
    if not training or rate <= 0.0:
        return x
    if rng is None:
        raise DataError("training-mode forward needs a dropout rng")
    mask = (rng.random(x.shape) >= rate) / (1.0 - rate)
    return ad.mul(x, Tensor(mask))


def _forward_tensor(
    store: _TensorStore,
    config: ModelConfig,
    windows: np.ndarray,
    training: bool = False,
    dropout_rng: np.random.Generator | None = None,
    tower_mask: tuple[float, float] = (1.0, 1.0),
    internals: dict | None = None,
) -> Tensor:
    freq = _freq_input(windows)
    pooled = []
    for tower, data, mask in zip(TOWERS, (windows, freq), tower_mask):
        emb = _tower_forward(store, tower, data, config, training, dropout_rng, internals)
        if mask != 1.0:
            emb = ad.mul(emb, Tensor(float(mask)))
        pooled.append(emb)
    combined = ad.concat(pooled, axis=1)
    return ad.add(ad.matmul(combined, store["head.weight"]), store["head.bias"])


def forward(
    params: ModelParams,
    batch,
    training: bool = False,
    dropout_rng: np.random.Generator | None = None,
    tower_mask: tuple[float, float] = (1.0, 1.0),
    internals: dict | None = None,
) -> np.ndarray:
    """Class logits for a batch of epochs, shape (batch, classes).

    Inference mode (the default) is deterministic; pass training=True plus
    a generator to enable dropout. ``internals``, when given a dict, is
    filled with attention probabilities for inspection.
    """
    windows = _batch_windows(batch, params.config)
    store = _TensorStore(params)
    out = _forward_tensor(store, params.config, windows, training, dropout_rng, tower_mask, internals)
    return out.data


def labels_to_indices(labels) -> np.ndarray:
    out = []
    for label in labels:
        if isinstance(label, str):
            if label not in LABEL_TO_INDEX:
                raise DataError(f"unknown label {label!r}")
            out.append(LABEL_TO_INDEX[label])
        else:
            out.append(int(label))
    return np.asarray(out, dtype=np.int64)


def _first_nonfinite_block(params: ModelParams, grads: dict[str, np.ndarray] | None = None) -> str:
    for name, block in params.blocks.items():
        if not np.all(np.isfinite(block)):
            return name
    if grads:
        for name, grad in grads.items():
            if not np.all(np.isfinite(grad)):
                return name
    return "activations"


def loss_and_grad(
    params: ModelParams,
    batch,
    labels,
    class_weights: np.ndarray | None = None,
    training: bool = False,
    dropout_rng: np.random.Generator | None = None,
    tower_mask: tuple[float, float] = (1.0, 1.0),
    return_logits: bool = False,
):
    """Weighted mean softmax cross-entropy and its gradient per block.

    class_weights, when given, holds one weight per class index; the loss
    is the weight-normalized average so a uniform-logits model always
    scores ln(classes) regardless of weighting.
    """
    windows = _batch_windows(batch, params.config)
    y = labels_to_indices(labels)
    if len(y) != windows.shape[0]:
        raise DataError(f"{len(y)} labels for {windows.shape[0]} epochs")
    store = _TensorStore(params)
    logits = _forward_tensor(store, params.config, windows, training, dropout_rng, tower_mask)
    logp = ad.log_softmax(logits, axis=-1)

    n, classes = logits.shape
    weights = np.ones(n) if class_weights is None else np.asarray(class_weights, dtype=np.float64)[y]
    picked = np.zeros((n, classes))
    picked[np.arange(n), y] = weights
    loss = ad.mul(ad.tensor_sum(ad.mul(logp, Tensor(picked))), Tensor(-1.0 / weights.sum()))

    if not np.isfinite(loss.data):
        raise NumericalError(
            f"non-finite loss (first offending block: {_first_nonfinite_block(params)})"
        )
    loss.backward()
    grads = store.gradients(params)
    bad = next((name for name, g in grads.items() if not np.all(np.isfinite(g))), None)
    if bad is not None:
        raise NumericalError(f"non-finite gradient in block {bad}")
    if return_logits:
        return float(loss.data), grads, logits.data
    return float(loss.data), grads


def predict(params: ModelParams, epoch_set, batch_size: int = 64) -> list[dict]:
    """Per-epoch {label, probabilities} via argmax of the softmax.

    Computation is per-sample, so the batch partitioning does not affect
    results.
    """
    if isinstance(epoch_set, EpochSet):
        windows = epoch_set.windows_array()
    else:
        windows = _batch_windows(epoch_set, params.config)
    if windows.shape[0] == 0:
        return []
    out = []
    for start in range(0, windows.shape[0], batch_size):
        logits = forward(params, windows[start : start + batch_size])
        shifted = logits - logits.max(axis=1, keepdims=True)
        probs = np.exp(shifted)
        probs /= probs.sum(axis=1, keepdims=True)
        for row in probs:
            idx = int(np.argmax(row))
            out.append(
                {
                    "label": LABELS[idx] if idx < len(LABELS) else str(idx),
                    "probabilities": {LABELS[c]: float(row[c]) for c in range(len(row)) if c < len(LABELS)},
                }
            )
    return out

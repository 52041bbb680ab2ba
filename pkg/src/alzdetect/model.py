"""The classifier: two 1-D CNN branches, (bi)LSTM, additive attention,
dense head fused with targeted features, sigmoid output.

Four flags on one config reproduce the six reported variants (see
VARIANTS): bidirectionality, attention, targeted features, and class
weighting. Attention parameters always exist so that turning the flag
off is observable as exactly-zero gradients rather than missing keys;
backward-direction LSTM parameters exist only when bidirectional.

Training is mini-batch gradient descent on class-weighted binary
cross-entropy with early stopping on validation loss. All randomness
(init, shuffling, dropout) comes from one seeded generator consumed in
a fixed order, so identical seeds give identical runs.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import autodiff as ad
from .autodiff import NonFiniteValue, Parameter, ShapeMismatch, Tape, Tensor, constant
from .lexical_features import FEATURE_GROUPS, FEATURE_NAMES, EncodedInstance

EPS = 1e-7

MAGIC = b"ADNM"
FORMAT_VERSION = 1


class ZeroClass(ValueError):
    pass


class Diverged(FloatingPointError):
    pass


class VersionMismatch(ValueError):
    pass


class CorruptFile(ValueError):
    pass


@dataclass(frozen=True)
class ModelConfig:
    seq_len: int = 73
    embed_dim: int = 300
    pos_dim: int = 37
    conv_filters: int = 100
    conv_kernel: int = 3
    lstm_hidden: int = 128
    attention_dim: int = 128
    dense_units: int = 64
    dropout_rate: float = 0.5
    bidirectional: bool = True
    use_attention: bool = True
    use_targeted_features: bool = True
    use_class_weights: bool = True
    feature_mask: tuple[str, ...] = ("psych", "sent", "demo")
    optimizer: str = "adam"
    learning_rate: float = 1e-3
    batch_size: int = 32
    max_epochs: int = 50
    patience: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.conv_kernel % 2 == 0 or self.conv_kernel < 1:
            raise ValueError("conv_kernel must be a positive odd width")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError("dropout_rate must be in [0, 1)")
        for dim in ("seq_len", "embed_dim", "pos_dim", "conv_filters",
                    "lstm_hidden", "attention_dim", "dense_units"):
            if getattr(self, dim) < 1:
                raise ValueError(f"{dim} must be >= 1")
        unknown = set(self.feature_mask) - set(FEATURE_GROUPS)
        if unknown:
            raise ValueError(f"unknown feature groups {sorted(unknown)}")
        if self.optimizer.lower() not in ("sgd", "adam"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if self.batch_size < 1 or self.max_epochs < 1:
            raise ValueError("batch_size and max_epochs must be >= 1")
        if self.patience < 0:
            raise ValueError("patience must be >= 0")


# Flag settings for the six reported variants, in report order. The last
# three add the targeted feature vector to the dense layer's input.
VARIANTS: dict[str, dict] = {
    "C-LSTM": dict(bidirectional=False, use_attention=False,
                   use_targeted_features=False, use_class_weights=False),
    "C-LSTM-Att": dict(bidirectional=True, use_attention=True,
                       use_targeted_features=False, use_class_weights=False),
    "C-LSTM-Att-w": dict(bidirectional=True, use_attention=True,
                         use_targeted_features=False, use_class_weights=True),
    "OURS": dict(bidirectional=False, use_attention=False,
                 use_targeted_features=True, use_class_weights=False),
    "OURS-Att": dict(bidirectional=True, use_attention=True,
                     use_targeted_features=True, use_class_weights=False),
    "OURS-Att-w": dict(bidirectional=True, use_attention=True,
                       use_targeted_features=True, use_class_weights=True),
}


def variant_config(name: str, base: ModelConfig) -> ModelConfig:
    if name not in VARIANTS:
        raise KeyError(f"unknown variant {name!r}")
    return replace(base, **VARIANTS[name])


def active_feature_indices(config: ModelConfig) -> tuple[int, ...]:
    """Feature-vector columns the dense layer actually sees."""
    if not config.use_targeted_features:
        return ()
    idx: list[int] = []
    for group in ("psych", "sent", "demo"):
        if group in config.feature_mask:
            idx.extend(FEATURE_GROUPS[group])
    return tuple(idx)


# ---------------------------------------------------------------------------
# parameters

class ModelParams:
    """Named parameter set; iteration order is creation order."""

    def __init__(self, params: dict[str, Parameter]):
        self._params = params

    def __getitem__(self, name: str) -> Parameter:
        return self._params[name]

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def names(self) -> list[str]:
        return list(self._params)

    def all(self) -> list[Parameter]:
        return list(self._params.values())

    def copy(self) -> "ModelParams":
        return ModelParams({n: Parameter(p.data.copy(), n)
                            for n, p in self._params.items()})

    def zero_grads(self):
        for p in self._params.values():
            p.zero_grad()


def _readout_dim(config: ModelConfig) -> int:
    return config.lstm_hidden * (2 if config.bidirectional else 1)


def init_params(config: ModelConfig, rng: np.random.Generator) -> ModelParams:
    """Fan-scaled uniform init, zero biases, LSTM forget bias 1.0.

    Creation order is fixed; it doubles as the generator consumption
    order, so a given seed always produces the same weights.
    """
    def glorot(*shape, fan_in, fan_out):
        lim = np.sqrt(6.0 / (fan_in + fan_out))
        return rng.uniform(-lim, lim, size=shape)

    f, k, h = config.conv_filters, config.conv_kernel, config.lstm_hidden
    c = 2 * f                      # LSTM input width after branch concat
    d = _readout_dim(config)       # LSTM output width per timestep
    a = config.attention_dim
    n_feat = len(active_feature_indices(config))
    dense_in = d + n_feat

    p: dict[str, Parameter] = {}

    def par(name, data):
        p[name] = Parameter(np.asarray(data, dtype=np.float64), name)

    par("conv_embed_kernels", glorot(f, k, config.embed_dim,
                                     fan_in=k * config.embed_dim, fan_out=f))
    par("conv_embed_bias", np.zeros(f))
    par("conv_pos_kernels", glorot(f, k, config.pos_dim,
                                   fan_in=k * config.pos_dim, fan_out=f))
    par("conv_pos_bias", np.zeros(f))

    directions = ["lstm_fwd"] + (["lstm_bwd"] if config.bidirectional else [])
    for prefix in directions:
        par(prefix + "_wx", glorot(c, 4 * h, fan_in=c, fan_out=4 * h))
        par(prefix + "_wh", glorot(h, 4 * h, fan_in=h, fan_out=4 * h))
        bias = np.zeros(4 * h)
        bias[h:2 * h] = 1.0        # forget gate opens at init
        par(prefix + "_b", bias)

    # attention parameters exist under every flag setting
    par("attn_w", glorot(d, a, fan_in=d, fan_out=a))
    par("attn_b", np.zeros(a))
    par("attn_u", glorot(a, 1, fan_in=a, fan_out=1))

    par("dense_w", glorot(dense_in, config.dense_units,
                          fan_in=dense_in, fan_out=config.dense_units))
    par("dense_b", np.zeros(config.dense_units))
    par("out_w", glorot(config.dense_units, 1,
                        fan_in=config.dense_units, fan_out=1))
    par("out_b", np.zeros(1))
    return ModelParams(p)


# ---------------------------------------------------------------------------
# forward graph

def _stack_instances(config: ModelConfig, instances) -> tuple[np.ndarray, ...]:
    emb = np.stack([i.embeddings for i in instances]).astype(np.float64)
    pos = np.stack([i.pos_onehot for i in instances]).astype(np.float64)
    feats = np.stack([i.features for i in instances]).astype(np.float64)
    mask = np.stack([i.mask for i in instances]).astype(np.float64)
    labels = np.array([i.label for i in instances], dtype=np.float64)
    if emb.shape[1:] != (config.seq_len, config.embed_dim):
        raise ShapeMismatch(f"embeddings {emb.shape[1:]} vs config "
                            f"({config.seq_len}, {config.embed_dim})")
    if pos.shape[1:] != (config.seq_len, config.pos_dim):
        raise ShapeMismatch(f"pos one-hots {pos.shape[1:]} vs config "
                            f"({config.seq_len}, {config.pos_dim})")
    if feats.shape[1] != len(FEATURE_NAMES):
        raise ShapeMismatch(f"feature vectors must have {len(FEATURE_NAMES)} slots")
    return emb, pos, feats, mask, labels


def _lstm_direction(params: ModelParams, prefix: str, seq: Tensor,
                    mask: np.ndarray, hidden: int, reverse: bool) -> list[Tensor]:
    """One LSTM direction over [B, T, C]; returns per-timestep h in time order.

    Pad positions keep the previous state, so the entry at the last real
    timestep is the direction's final state.
    """
    b, t, c = seq.shape
    h = constant(np.zeros((b, hidden)))
    cell = constant(np.zeros((b, hidden)))
    outs: list[Tensor] = [None] * t  # type: ignore[list-item]
    steps = range(t - 1, -1, -1) if reverse else range(t)
    for ti in steps:
        x_t = ad.reshape(ad.slice_axis(seq, 1, ti, ti + 1), (b, c))
        gates = ad.add(ad.add(ad.matmul(x_t, params[prefix + "_wx"]),
                              ad.matmul(h, params[prefix + "_wh"])),
                       params[prefix + "_b"])
        i_g = ad.sigmoid(ad.slice_axis(gates, 1, 0, hidden))
        f_g = ad.sigmoid(ad.slice_axis(gates, 1, hidden, 2 * hidden))
        g_g = ad.tanh(ad.slice_axis(gates, 1, 2 * hidden, 3 * hidden))
        o_g = ad.sigmoid(ad.slice_axis(gates, 1, 3 * hidden, 4 * hidden))
        cell_new = ad.add(ad.mul(f_g, cell), ad.mul(i_g, g_g))
        h_new = ad.mul(o_g, ad.tanh(cell_new))
        m = mask[:, ti:ti + 1]
        if np.all(m == 1.0):
            h, cell = h_new, cell_new
        else:
            keep = constant(m)
            hold = constant(1.0 - m)
            h = ad.add(ad.mul(keep, h_new), ad.mul(hold, h))
            cell = ad.add(ad.mul(keep, cell_new), ad.mul(hold, cell))
        outs[ti] = h
    return outs


def _forward_graph(params: ModelParams, config: ModelConfig,
                   emb: np.ndarray, pos: np.ndarray, feats: np.ndarray,
                   mask: np.ndarray, training: bool,
                   rng: np.random.Generator | None) -> tuple[Tensor, Tensor | None]:
    """Build the graph for one batch; returns (probabilities [B], attention [B, T] or None)."""
    b, t = emb.shape[0], config.seq_len
    h = config.lstm_hidden
    d = _readout_dim(config)

    conv_e = ad.relu(ad.add(ad.conv1d(constant(emb), params["conv_embed_kernels"]),
                            params["conv_embed_bias"]))
    conv_p = ad.relu(ad.add(ad.conv1d(constant(pos), params["conv_pos_kernels"]),
                            params["conv_pos_bias"]))
    seq = ad.concat([conv_e, conv_p], axis=2)  # [B, T, 2·filters]

    hs_f = _lstm_direction(params, "lstm_fwd", seq, mask, h, reverse=False)
    if config.bidirectional:
        hs_b = _lstm_direction(params, "lstm_bwd", seq, mask, h, reverse=True)
        per_t = [ad.concat([hf, hb], axis=1) for hf, hb in zip(hs_f, hs_b)]
    else:
        per_t = hs_f

    alpha = None
    if config.use_attention:
        rows = [ad.reshape(ht, (b, 1, d)) for ht in per_t]
        h_all = ad.concat(rows, axis=1)                      # [B, T, D]
        flat = ad.reshape(h_all, (b * t, d))
        proj = ad.tanh(ad.add(ad.matmul(flat, params["attn_w"]), params["attn_b"]))
        scores = ad.reshape(ad.matmul(proj, params["attn_u"]), (b, t))
        alpha = ad.softmax(scores, axis=1, mask=mask)        # [B, T]
        weighted = ad.mul(ad.reshape(alpha, (b, t, 1)), h_all)
        readout = ad.sum_(weighted, axis=1)                  # [B, D]
    else:
        # final state of each direction: forward ends at the last
        # timestep, backward ends at the first
        readout = per_t[-1] if not config.bidirectional else ad.concat(
            [ad.slice_axis(per_t[-1], 1, 0, h),
             ad.slice_axis(per_t[0], 1, h, 2 * h)], axis=1)

    active = active_feature_indices(config)
    fused = readout if not active else ad.concat(
        [readout, constant(feats[:, list(active)])], axis=1)

    dense = ad.relu(ad.add(ad.matmul(fused, params["dense_w"]), params["dense_b"]))
    if training and config.dropout_rate > 0.0:
        if rng is None:
            raise ValueError("training mode needs a generator for dropout")
        keep = 1.0 - config.dropout_rate
        drop = (rng.random(size=(b, config.dense_units)) < keep) / keep
        dense = ad.mul(dense, constant(drop))
    logit = ad.add(ad.matmul(dense, params["out_w"]), params["out_b"])
    prob = ad.sigmoid(ad.reshape(logit, (b,)))
    return prob, alpha


def forward(params: ModelParams, config: ModelConfig,
            instance: EncodedInstance) -> float:
    """Evaluation-mode probability that one instance is positive."""
    emb, pos, feats, mask, _ = _stack_instances(config, [instance])
    prob, _ = _forward_graph(params, config, emb, pos, feats, mask,
                             training=False, rng=None)
    return float(prob.data[0])


def attention_weights(params: ModelParams, config: ModelConfig,
                      instance: EncodedInstance) -> np.ndarray:
    """Per-timestep attention weights for one instance (diagnostic)."""
    if not config.use_attention:
        raise ValueError("attention is disabled in this config")
    emb, pos, feats, mask, _ = _stack_instances(config, [instance])
    _, alpha = _forward_graph(params, config, emb, pos, feats, mask,
                              training=False, rng=None)
    return alpha.data[0].copy()


# ---------------------------------------------------------------------------
# loss

@dataclass(frozen=True)
class ClassWeights:
    w_ad: float
    w_ct: float

    def __post_init__(self):
        if self.w_ad <= 0 or self.w_ct <= 0:
            raise ValueError("class weights must be > 0")


UNIT_WEIGHTS = ClassWeights(1.0, 1.0)


def compute_class_weights(n_ad: int, n_ct: int) -> ClassWeights:
    """Balanced inverse-frequency weights w_c = (n_ad + n_ct) / (2 n_c)."""
    if n_ad < 1 or n_ct < 1:
        raise ZeroClass(f"need both classes present, got ad={n_ad} ct={n_ct}")
    total = n_ad + n_ct
    return ClassWeights(w_ad=total / (2 * n_ad), w_ct=total / (2 * n_ct))


def weighted_bce(p, y, weights: ClassWeights = UNIT_WEIGHTS) -> Tensor:
    """Mean of -[w_ad·y·log p + w_ct·(1-y)·log(1-p)] with p clamped to [eps, 1-eps].

    ``p`` may be a graph Tensor or plain values; ``y`` is 0/1 per element.
    """
    pt = p if isinstance(p, Tensor) else constant(np.asarray(p, dtype=np.float64))
    ya = np.asarray(y, dtype=np.float64)
    if ya.shape != pt.shape:
        raise ShapeMismatch(f"labels {ya.shape} vs probabilities {pt.shape}")
    pc = ad.clip(pt, EPS, 1.0 - EPS)
    pos_coef = constant(-weights.w_ad * ya)
    neg_coef = constant(-weights.w_ct * (1.0 - ya))
    terms = ad.add(ad.mul(pos_coef, ad.log(pc)),
                   ad.mul(neg_coef, ad.log(ad.sub(constant(1.0), pc))))
    return ad.mean(terms)


# ---------------------------------------------------------------------------
# training

@dataclass(frozen=True)
class TrainLogRow:
    epoch: int
    train_loss: float
    val_loss: float
    val_auc: float


def _batches(n: int, size: int, order: np.ndarray):
    for lo in range(0, n, size):
        yield order[lo:lo + size]


def fit(config: ModelConfig, train: list[EncodedInstance],
        val: list[EncodedInstance]) -> tuple[ModelParams, list[TrainLogRow]]:
    """Train with early stopping; returns best-validation-epoch parameters.

    The log has one row per epoch actually run, including the epochs
    that exhausted the patience counter.
    """
    from .evaluation import auc_pair   # deferred: evaluation imports this module

    if not train or not val:
        raise ValueError("train and validation sets must be non-empty")
    rng = np.random.default_rng(config.seed)
    params = init_params(config, rng)

    n_ad = sum(i.label for i in train)
    weights = (compute_class_weights(n_ad, len(train) - n_ad)
               if config.use_class_weights else UNIT_WEIGHTS)
    opt = ad.make_optimizer(config.optimizer, config.learning_rate)

    val_labels = np.array([i.label for i in val], dtype=np.float64)
    best_val = np.inf
    best_params = params.copy()
    wait = 0
    log: list[TrainLogRow] = []

    for epoch in range(1, config.max_epochs + 1):
        order = rng.permutation(len(train))
        total = 0.0
        for chunk in _batches(len(train), config.batch_size, order):
            batch = [train[i] for i in chunk]
            emb, pos, feats, mask, labels = _stack_instances(config, batch)
            try:
                with Tape() as tape:
                    prob, _ = _forward_graph(params, config, emb, pos, feats,
                                             mask, training=True, rng=rng)
                    loss = weighted_bce(prob, labels, weights)
                    ad.backward(tape, loss)
            except NonFiniteValue as exc:
                raise Diverged(f"epoch {epoch}: {exc}") from exc
            opt.step(params.all())
            params.zero_grads()
            total += loss.item() * len(chunk)
        train_loss = total / len(train)

        try:
            val_scores = predict(params, config, val)
        except NonFiniteValue as exc:
            raise Diverged(f"epoch {epoch}: {exc}") from exc
        val_loss = weighted_bce(val_scores, val_labels, weights).item()
        if not (np.isfinite(train_loss) and np.isfinite(val_loss)):
            raise Diverged(f"epoch {epoch}: non-finite loss")
        both_classes = 0 < val_labels.sum() < len(val_labels)
        val_auc = auc_pair(val_labels, val_scores) if both_classes else 0.5
        log.append(TrainLogRow(epoch, train_loss, val_loss, val_auc))

        if val_loss < best_val:
            best_val = val_loss
            best_params = params.copy()
            wait = 0
        else:
            wait += 1
            if wait > config.patience:
                break
    return best_params, log


def predict(params: ModelParams, config: ModelConfig,
            instances: list[EncodedInstance]) -> np.ndarray:
    """Evaluation-mode probabilities, batched; dropout off."""
    if not instances:
        return np.zeros(0)
    out = np.empty(len(instances))
    for lo in range(0, len(instances), config.batch_size):
        batch = instances[lo:lo + config.batch_size]
        emb, pos, feats, mask, _ = _stack_instances(config, batch)
        prob, _ = _forward_graph(params, config, emb, pos, feats, mask,
                                 training=False, rng=None)
        out[lo:lo + len(batch)] = prob.data
    return out


def classify(probabilities: np.ndarray) -> np.ndarray:
    """Hard labels at the inclusive 0.5 threshold (1 = positive)."""
    return (np.asarray(probabilities) >= 0.5).astype(int)


# ---------------------------------------------------------------------------
# serialization

def _config_to_dict(config: ModelConfig) -> dict:
    d = {f: getattr(config, f) for f in config.__dataclass_fields__}
    d["feature_mask"] = list(config.feature_mask)
    return d


def _config_from_dict(d: dict) -> ModelConfig:
    known = set(ModelConfig.__dataclass_fields__)
    unknown = set(d) - known
    if unknown:
        raise CorruptFile(f"unknown config keys {sorted(unknown)}")
    d = dict(d)
    if "feature_mask" in d:
        d["feature_mask"] = tuple(d["feature_mask"])
    return ModelConfig(**d)


def save(params: ModelParams, config: ModelConfig, path: str | Path):
    cfg = json.dumps(_config_to_dict(config), sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", FORMAT_VERSION, len(cfg)))
        fh.write(cfg)
        names = params.names()
        fh.write(struct.pack("<I", len(names)))
        for name in names:
            data = params[name].data
            nb = name.encode("utf-8")
            fh.write(struct.pack("<I", len(nb)))
            fh.write(nb)
            fh.write(struct.pack("<I", data.ndim))
            fh.write(struct.pack(f"<{data.ndim}q", *data.shape))
            fh.write(np.ascontiguousarray(data, dtype="<f8").tobytes())


def _read_exact(fh, n: int) -> bytes:
    buf = fh.read(n)
    if len(buf) != n:
        raise CorruptFile(f"unexpected end of file (wanted {n} bytes, got {len(buf)})")
    return buf


def load(path: str | Path) -> tuple[ModelParams, ModelConfig]:
    with open(path, "rb") as fh:
        if _read_exact(fh, 4) != MAGIC:
            raise CorruptFile("not a model file (bad magic)")
        version, cfg_len = struct.unpack("<II", _read_exact(fh, 8))
        if version != FORMAT_VERSION:
            raise VersionMismatch(f"format version {version}, expected {FORMAT_VERSION}")
        try:
            config = _config_from_dict(json.loads(_read_exact(fh, cfg_len)))
        except (json.JSONDecodeError, TypeError, ValueError) as exc:
            if isinstance(exc, (CorruptFile, VersionMismatch)):
                raise
            raise CorruptFile(f"bad config block: {exc}") from exc
        (n_tensors,) = struct.unpack("<I", _read_exact(fh, 4))
        tensors: dict[str, Parameter] = {}
        for _ in range(n_tensors):
            (name_len,) = struct.unpack("<I", _read_exact(fh, 4))
            name = _read_exact(fh, name_len).decode("utf-8")
            (ndim,) = struct.unpack("<I", _read_exact(fh, 4))
            shape = struct.unpack(f"<{ndim}q", _read_exact(fh, 8 * ndim))
            count = int(np.prod(shape)) if shape else 1
            data = np.frombuffer(_read_exact(fh, 8 * count), dtype="<f8")
            tensors[name] = Parameter(data.reshape(shape).copy(), name)
        if fh.read(1):
            raise CorruptFile("trailing bytes after last tensor")
    return ModelParams(tensors), config

"""Minimal feedforward network engine on numpy.

Strictly sequential stacks of Linear, Conv (square maps only), ReLU,
AvgPool and Flatten, trained with plain SGD on softmax cross-entropy.
Weights live in float64; average pooling is used instead of max pooling so
that removing a channel and zeroing it are numerically interchangeable.

Everything here is deterministic given the seeds: fixed batch order per
seed, no momentum, no regularization, float64 throughout.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import (
    BadParams,
    Divergence,
    MalformedPlan,
    NotPrunableLayer,
    ParseError,
    ShapeMismatch,
)
from .rng import derive_seed
from .tensio import ActivationTensor, LabeledDataset, PruningPlan

_CAPTURE_CHUNK = 256  # fixed so chunking never depends on the environment


# ---------------------------------------------------------------- layers

class Linear:
    kind = "linear"
    parametric = True

    def __init__(self, n_in: int, n_out: int, w: np.ndarray, b: np.ndarray):
        self.n_in = n_in
        self.n_out = n_out
        self.w = np.asarray(w, dtype=np.float64)
        self.b = np.asarray(b, dtype=np.float64)
        if self.w.shape != (n_out, n_in) or self.b.shape != (n_out,):
            raise ShapeMismatch(f"linear weights {self.w.shape} do not match ({n_out}, {n_in})")

    @classmethod
    def init(cls, n_in: int, n_out: int, rng: np.random.Generator) -> "Linear":
        bound = 1.0 / math.sqrt(n_in)
        w = rng.uniform(-bound, bound, size=(n_out, n_in))
        return cls(n_in, n_out, w, np.zeros(n_out))

    @property
    def n_components(self) -> int:
        return self.n_out

    def copy(self) -> "Linear":
        return Linear(self.n_in, self.n_out, self.w.copy(), self.b.copy())

    def _check(self, x: np.ndarray) -> None:
        if x.ndim != 2 or x.shape[1] != self.n_in:
            raise ShapeMismatch(f"linear expects [n, {self.n_in}], got {x.shape}")

    def forward(self, x: np.ndarray) -> np.ndarray:
        self._check(x)
        return x @ self.w.T + self.b

    def forward_cache(self, x):
        return self.forward(x), x

    def backward(self, gy, x):
        return gy @ self.w, {"w": gy.T @ x, "b": gy.sum(axis=0)}


class Conv:
    """2-D convolution over square maps; symmetric zero padding."""

    kind = "conv"
    parametric = True

    def __init__(self, c_in, c_out, kernel, stride, pad, w, b):
        self.c_in = c_in
        self.c_out = c_out
        self.kernel = kernel
        self.stride = stride
        self.pad = pad
        self.w = np.asarray(w, dtype=np.float64)
        self.b = np.asarray(b, dtype=np.float64)
        if self.w.shape != (c_out, c_in, kernel, kernel) or self.b.shape != (c_out,):
            raise ShapeMismatch(f"conv weights {self.w.shape} do not match "
                                f"({c_out}, {c_in}, {kernel}, {kernel})")
        if stride < 1 or pad < 0 or kernel < 1:
            raise BadParams("conv needs kernel >= 1, stride >= 1, pad >= 0")

    @classmethod
    def init(cls, c_in, c_out, kernel, stride, pad, rng: np.random.Generator) -> "Conv":
        fan_in = c_in * kernel * kernel
        bound = 1.0 / math.sqrt(fan_in)
        w = rng.uniform(-bound, bound, size=(c_out, c_in, kernel, kernel))
        return cls(c_in, c_out, kernel, stride, pad, w, np.zeros(c_out))

    @property
    def n_components(self) -> int:
        return self.c_out

    def copy(self) -> "Conv":
        return Conv(self.c_in, self.c_out, self.kernel, self.stride, self.pad,
                    self.w.copy(), self.b.copy())

    def out_hw(self, h: int) -> int:
        span = h + 2 * self.pad - self.kernel
        if span < 0:
            raise ShapeMismatch(f"conv kernel {self.kernel} too large for input {h}")
        return span // self.stride + 1

    def _windows(self, x: np.ndarray):
        if x.ndim != 4 or x.shape[1] != self.c_in:
            raise ShapeMismatch(f"conv expects [n, {self.c_in}, h, w], got {x.shape}")
        if x.shape[2] != x.shape[3]:
            raise ShapeMismatch(f"conv requires square maps, got {x.shape}")
        if self.out_hw(x.shape[2]) < 1:
            raise ShapeMismatch(f"conv output would be empty for input {x.shape}")
        xp = np.pad(x, ((0, 0), (0, 0), (self.pad, self.pad), (self.pad, self.pad)))
        win = sliding_window_view(xp, (self.kernel, self.kernel), axis=(2, 3))
        return win[:, :, :: self.stride, :: self.stride], xp.shape

    def forward(self, x: np.ndarray) -> np.ndarray:
        win, _ = self._windows(x)
        y = np.einsum("ncxyij,ocij->noxy", win, self.w, optimize=True)
        return y + self.b[None, :, None, None]

    def forward_cache(self, x):
        win, xp_shape = self._windows(x)
        y = np.einsum("ncxyij,ocij->noxy", win, self.w, optimize=True)
        return y + self.b[None, :, None, None], (win, xp_shape, x.shape)

    def backward(self, gy, cache):
        win, xp_shape, x_shape = cache
        dw = np.einsum("ncxyij,noxy->ocij", win, gy, optimize=True)
        db = gy.sum(axis=(0, 2, 3))
        gxp = np.zeros(xp_shape)
        ho, wo = gy.shape[2], gy.shape[3]
        s, k = self.stride, self.kernel
        for i in range(k):
            for j in range(k):
                patch = np.einsum("noxy,oc->ncxy", gy, self.w[:, :, i, j], optimize=True)
                gxp[:, :, i : i + s * ho : s, j : j + s * wo : s] += patch
        p = self.pad
        h, w = x_shape[2], x_shape[3]
        return gxp[:, :, p : p + h, p : p + w], {"w": dw, "b": db}


class ReLU:
    kind = "relu"
    parametric = False

    def copy(self) -> "ReLU":
        return ReLU()

    def forward(self, x):
        return np.maximum(x, 0.0)

    def forward_cache(self, x):
        return np.maximum(x, 0.0), x

    def backward(self, gy, x):
        return gy * (x > 0.0), None


class AvgPool:
    """Non-overlapping average pooling; map size must divide evenly."""

    kind = "avgpool"
    parametric = False

    def __init__(self, size: int):
        if size < 1:
            raise BadParams("pool size must be >= 1")
        self.size = size

    def copy(self) -> "AvgPool":
        return AvgPool(self.size)

    def _check(self, x):
        if x.ndim != 4:
            raise ShapeMismatch(f"avgpool expects [n, c, h, w], got {x.shape}")
        if x.shape[2] % self.size or x.shape[3] % self.size:
            raise ShapeMismatch(f"pool size {self.size} does not divide map {x.shape[2:]}")

    def forward(self, x):
        self._check(x)
        n, c, h, w = x.shape
        s = self.size
        return x.reshape(n, c, h // s, s, w // s, s).mean(axis=(3, 5))

    def forward_cache(self, x):
        return self.forward(x), x.shape

    def backward(self, gy, x_shape):
        s = self.size
        gx = np.repeat(np.repeat(gy, s, axis=2), s, axis=3) / (s * s)
        return gx, None


class Flatten:
    kind = "flatten"
    parametric = False

    def copy(self) -> "Flatten":
        return Flatten()

    def forward(self, x):
        if x.ndim < 2:
            raise ShapeMismatch(f"flatten expects a batch, got {x.shape}")
        return x.reshape(x.shape[0], -1)

    def forward_cache(self, x):
        return self.forward(x), x.shape

    def backward(self, gy, x_shape):
        return gy.reshape(x_shape), None


# ----------------------------------------------------------------- model

@dataclass(eq=False)
class ToyModel:
    """Sequential layer stack plus init seed and last-training metadata."""

    layers: list
    input_shape: tuple
    rng_seed: int = 0
    train_epochs: int = 0
    train_lr: float = 0.0

    def __post_init__(self):
        self.input_shape = tuple(int(d) for d in self.input_shape)
        layer_shapes(self)  # fail fast on an inconsistent stack

    def copy(self) -> "ToyModel":
        return ToyModel([l.copy() for l in self.layers], self.input_shape,
                        self.rng_seed, self.train_epochs, self.train_lr)

    def parametric_ids(self) -> list[int]:
        return [i for i, l in enumerate(self.layers) if l.parametric]

    def prunable_ids(self) -> list[int]:
        """Every parametric layer except the last, whose outputs are the logits."""
        ids = self.parametric_ids()
        return ids[:-1]

    def n_components(self, layer_id: int) -> int:
        layer = self.layers[layer_id]
        if not layer.parametric:
            raise NotPrunableLayer(f"layer {layer_id} ({layer.kind}) has no components")
        return layer.n_components


def layer_shapes(model: ToyModel) -> list[tuple[tuple, tuple]]:
    """(input_shape, output_shape) per layer, propagated from the model input."""
    shapes = []
    cur = tuple(model.input_shape)
    for i, layer in enumerate(model.layers):
        if isinstance(layer, Linear):
            if len(cur) != 1 or cur[0] != layer.n_in:
                raise ShapeMismatch(f"layer {i}: linear expects ({layer.n_in},), got {cur}")
            nxt = (layer.n_out,)
        elif isinstance(layer, Conv):
            if len(cur) != 3 or cur[0] != layer.c_in:
                raise ShapeMismatch(f"layer {i}: conv expects ({layer.c_in}, h, w), got {cur}")
            if cur[1] != cur[2]:
                raise ShapeMismatch(f"layer {i}: conv requires square maps, got {cur}")
            out = layer.out_hw(cur[1])
            if out < 1:
                raise ShapeMismatch(f"layer {i}: conv output empty for input {cur}")
            nxt = (layer.c_out, out, out)
        elif isinstance(layer, AvgPool):
            if len(cur) != 3:
                raise ShapeMismatch(f"layer {i}: avgpool expects (c, h, w), got {cur}")
            if cur[1] % layer.size or cur[2] % layer.size:
                raise ShapeMismatch(f"layer {i}: pool {layer.size} does not divide {cur}")
            nxt = (cur[0], cur[1] // layer.size, cur[2] // layer.size)
        elif isinstance(layer, Flatten):
            nxt = (int(np.prod(cur)),)
        else:  # ReLU
            nxt = cur
        shapes.append((cur, nxt))
        cur = nxt
    return shapes


def forward(model: ToyModel, x: np.ndarray) -> np.ndarray:
    """Logits for a batch; raises ShapeMismatch on a wrong input shape."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[1:] != model.input_shape:
        raise ShapeMismatch(f"model expects [n, {model.input_shape}], got {x.shape}")
    for layer in model.layers:
        x = layer.forward(x)
    return x


# -------------------------------------------------------------- training

def softmax_xent(logits: np.ndarray, labels: np.ndarray):
    """Mean cross-entropy and its gradient w.r.t. the logits."""
    z = logits - logits.max(axis=1, keepdims=True)
    logp = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    n = logits.shape[0]
    loss = -logp[np.arange(n), labels].mean()
    grad = np.exp(logp)
    grad[np.arange(n), labels] -= 1.0
    return loss, grad / n


def loss_and_grads(model: ToyModel, x: np.ndarray, labels: np.ndarray):
    """Cross-entropy loss and per-layer parameter gradients for one batch."""
    if labels.max(initial=0) >= _logit_width(model):
        raise ShapeMismatch("class id exceeds model output width")
    h = np.asarray(x, dtype=np.float64)
    caches = []
    for layer in model.layers:
        h, cache = layer.forward_cache(h)
        caches.append(cache)
    loss, g = softmax_xent(h, np.asarray(labels))
    grads: list = [None] * len(model.layers)
    for i in range(len(model.layers) - 1, -1, -1):
        g, pg = model.layers[i].backward(g, caches[i])
        grads[i] = pg
    return loss, grads


def _logit_width(model: ToyModel) -> int:
    shape = layer_shapes(model)[-1][1] if model.layers else model.input_shape
    return int(np.prod(shape))


def full_loss(model: ToyModel, ds: LabeledDataset) -> float:
    loss, _ = softmax_xent(_batched_logits(model, ds.samples), ds.labels)
    return float(loss)


def accuracy(model: ToyModel, ds: LabeledDataset) -> float:
    pred = _batched_logits(model, ds.samples).argmax(axis=1)
    return float((pred == ds.labels).mean())


def _batched_logits(model: ToyModel, samples: np.ndarray) -> np.ndarray:
    out = []
    for start in range(0, samples.shape[0], _CAPTURE_CHUNK):
        out.append(forward(model, samples[start : start + _CAPTURE_CHUNK]))
    return np.concatenate(out, axis=0)


def train(model: ToyModel, ds: LabeledDataset, epochs: int, lr: float, seed: int,
          batch_size: int = 64, trainable: set[int] | None = None,
          on_epoch=None) -> ToyModel:
    """SGD on shuffled mini-batches; returns a new model, input untouched.

    `trainable` restricts updates to the given layer ids (None = all).
    Raises Divergence when the epoch loss or any weight goes non-finite.
    """
    if epochs < 0 or lr <= 0 or batch_size < 1:
        raise BadParams("need epochs >= 0, lr > 0, batch_size >= 1")
    out = model.copy()
    if epochs == 0:
        return out
    if ds.labels.max(initial=0) >= _logit_width(out):
        raise ShapeMismatch("dataset class id exceeds model output width")
    x = ds.samples.astype(np.float64)
    y = ds.labels
    n = ds.n_samples
    rng = np.random.default_rng(seed)
    for epoch in range(epochs):
        perm = rng.permutation(n)
        total = 0.0
        # blow-ups surface as non-finite values and are reported below,
        # so the intermediate overflow warnings carry no information
        with np.errstate(over="ignore", invalid="ignore"):
            for start in range(0, n, batch_size):
                idx = perm[start : start + batch_size]
                loss, grads = loss_and_grads(out, x[idx], y[idx])
                total += loss * len(idx)
                for lid, (layer, pg) in enumerate(zip(out.layers, grads)):
                    if pg is None or (trainable is not None and lid not in trainable):
                        continue
                    layer.w -= lr * pg["w"]
                    layer.b -= lr * pg["b"]
        epoch_loss = total / n
        if not math.isfinite(epoch_loss) or not _weights_finite(out):
            raise Divergence(f"non-finite state at epoch {epoch + 1} (lr={lr})")
        if on_epoch is not None:
            on_epoch(epoch + 1, epoch_loss, accuracy(out, ds))
    out.train_epochs = epochs
    out.train_lr = lr
    return out


def _weights_finite(model: ToyModel) -> bool:
    return all(np.isfinite(l.w).all() and np.isfinite(l.b).all()
               for l in model.layers if l.parametric)


def stratified_subset(labels: np.ndarray, fraction: float, rng: np.random.Generator) -> np.ndarray:
    """Sorted sample indices covering ceil(fraction * n), at least two per class.

    Quotas follow largest-remainder apportionment of the class counts, then
    get bumped so no class drops below two (the dataset invariant).
    """
    if not 0.0 < fraction <= 1.0:
        raise BadParams(f"fraction must be in (0, 1], got {fraction}")
    n = len(labels)
    counts = np.bincount(labels)
    c = len(counts)
    m = min(n, max(math.ceil(fraction * n), 2 * c))
    raw = m * counts / n
    quota = np.floor(raw).astype(int)
    order = np.argsort(-(raw - quota), kind="stable")
    quota[order[: m - quota.sum()]] += 1
    for cls in range(c):  # floor of two per class; donors shed one at a time
        while quota[cls] < 2:
            donor = int(np.argmax(quota))
            quota[donor] -= 1
            quota[cls] += 1
    picked = [rng.choice(np.flatnonzero(labels == cls), size=int(q), replace=False)
              for cls, q in enumerate(quota)]
    return np.sort(np.concatenate(picked))


def finetune(model: ToyModel, ds: LabeledDataset, fraction: float, epochs: int,
             lr: float, seed: int, batch_size: int = 64,
             trainable: set[int] | None = None) -> ToyModel:
    """Train on a seeded stratified subset; fraction = 1 reduces to `train`."""
    idx = stratified_subset(ds.labels, fraction,
                            np.random.default_rng(derive_seed(seed, "subset")))
    sub = LabeledDataset(ds.samples[idx], ds.labels[idx])
    return train(model, sub, epochs, lr, seed, batch_size=batch_size, trainable=trainable)


# ------------------------------------------------------------- capture

def capture_activations(model: ToyModel, ds: LabeledDataset, layer_id: int,
                        pre_activation: bool = False) -> ActivationTensor:
    """Component activations of one prunable layer over the whole dataset.

    By default the maps are taken after the ReLU that follows the layer,
    because that is what the next layer consumes; `pre_activation` skips it.
    """
    prunable = model.prunable_ids()
    if layer_id not in prunable:
        raise NotPrunableLayer(f"layer {layer_id} is not prunable; prunable ids: {prunable}")
    take_relu = (not pre_activation
                 and layer_id + 1 < len(model.layers)
                 and isinstance(model.layers[layer_id + 1], ReLU))
    stop = layer_id + 2 if take_relu else layer_id + 1
    chunks = []
    samples = ds.samples.astype(np.float64)
    for start in range(0, ds.n_samples, _CAPTURE_CHUNK):
        h = samples[start : start + _CAPTURE_CHUNK]
        if h.shape[1:] != model.input_shape:
            raise ShapeMismatch(f"model expects [n, {model.input_shape}], got {h.shape}")
        for layer in model.layers[:stop]:
            h = layer.forward(h)
        chunks.append(h)
    values = np.concatenate(chunks, axis=0)
    if values.ndim == 2:
        values = values[:, :, None, None]
    return ActivationTensor(layer_id, model.layers[layer_id].kind,
                            values.astype(np.float32), ds.labels)


# -------------------------------------------------------------- surgery

def apply_prune(model: ToyModel, plan: PruningPlan) -> ToyModel:
    """Structurally remove components listed in the plan; returns a new model.

    For each entry the layer keeps only `kept_indices` (rows of its weight
    matrix or filters), and the next parametric layer drops the matching
    input columns or channels. Across a Flatten, a conv channel maps to a
    contiguous block of columns under row-major [channel][row][col] order.
    The network output shape never changes.
    """
    plan.validate()
    out = model.copy()
    shapes = layer_shapes(model)  # spatial dims, unaffected by channel surgery
    prunable = set(model.prunable_ids())
    for entry in sorted(plan.entries, key=lambda e: e.layer_id):
        lid = entry.layer_id
        if lid not in prunable:
            raise MalformedPlan(f"layer {lid} is not a prunable layer of this model")
        layer = out.layers[lid]
        if entry.n_components != layer.n_components:
            raise MalformedPlan(f"layer {lid}: plan says {entry.n_components} components, "
                                f"model has {layer.n_components}")
        kept = np.asarray(entry.kept_indices, dtype=np.int64)
        if len(kept) == layer.n_components:
            continue
        layer.w = layer.w[kept]
        layer.b = layer.b[kept]
        if isinstance(layer, Conv):
            layer.c_out = len(kept)
        else:
            layer.n_out = len(kept)
        j = lid + 1
        flat_hw = None
        while j < len(out.layers) and not out.layers[j].parametric:
            if isinstance(out.layers[j], Flatten):
                c, h, w = shapes[j][0]
                flat_hw = h * w
            j += 1
        if j >= len(out.layers):
            raise MalformedPlan(f"layer {lid}: no parametric layer downstream")
        nxt = out.layers[j]
        if isinstance(nxt, Conv):
            nxt.w = nxt.w[:, kept, :, :]
            nxt.c_in = len(kept)
        else:
            cols = kept if flat_hw is None else (
                kept[:, None] * flat_hw + np.arange(flat_hw)[None, :]).ravel()
            nxt.w = nxt.w[:, cols]
            nxt.n_in = nxt.w.shape[1]
    layer_shapes(out)  # sanity: the pruned stack must still compose
    return out


# ---------------------------------------------------------------- flops

@dataclass
class FlopsReport:
    per_layer: list[tuple[int, int]]
    total: int


def count_flops(model: ToyModel) -> FlopsReport:
    """Multiply-add count for one sample, biases excluded.

    Linear: 2 * n_in * n_out. Conv: 2 * k^2 * c_in * c_out * h_out * w_out.
    Activations, pooling and flatten count zero.
    """
    shapes = layer_shapes(model)
    per_layer = []
    total = 0
    for i, layer in enumerate(model.layers):
        if isinstance(layer, Linear):
            flops = 2 * layer.n_in * layer.n_out
        elif isinstance(layer, Conv):
            _, ho, wo = shapes[i][1]
            flops = 2 * layer.kernel ** 2 * layer.c_in * layer.c_out * ho * wo
        else:
            flops = 0
        per_layer.append((i, flops))
        total += flops
    return FlopsReport(per_layer, total)


# ----------------------------------------------------- architecture specs

_CONV_TOKEN = re.compile(r"^c(\d+)k(\d+)(?:s(\d+))?(?:p(\d+))?$")
_POOL_TOKEN = re.compile(r"^p(\d+)$")
_SHAPE_TOKEN = re.compile(r"^(\d+)x(\d+)x(\d+)$")


def _tokens(body: str, base: int):
    """Split on '-' while keeping each token's offset in the full string."""
    pos = base
    for tok in body.split("-"):
        yield tok, pos
        pos += len(tok) + 1


def _int_token(tok: str, off: int) -> int:
    if not tok.isdigit():
        raise ParseError(f"expected a positive integer, got {tok!r}", off)
    val = int(tok)
    if val < 1:
        raise ParseError("sizes must be >= 1", off)
    return val


def parse_arch(spec: str):
    """Parse an architecture string into (input_shape, layer builders).

    Grammar:
      mlp:IN-H1-...-OUT               linear stack, ReLU between layers
      cnn:CxHxW-<conv|pool>...-f-...  conv stage, one flatten, linear stage
    Conv tokens are c<out>k<kernel> with optional s<stride> (default 1) and
    p<pad> (default kernel // 2); pool tokens are p<size>.
    """
    if spec.startswith("mlp:"):
        dims = [_int_token(tok, off) for tok, off in _tokens(spec[4:], 4)]
        if len(dims) < 2:
            raise ParseError("mlp needs at least input and output sizes", len(spec))
        builders = []
        for i in range(len(dims) - 1):
            builders.append(("linear", dims[i], dims[i + 1]))
            if i < len(dims) - 2:
                builders.append(("relu",))
        return (dims[0],), builders
    if not spec.startswith("cnn:"):
        raise ParseError("expected 'mlp:' or 'cnn:' prefix", 0)

    toks = list(_tokens(spec[4:], 4))
    if not toks or toks[0][0] == "":
        raise ParseError("cnn needs a CxHxW input shape", toks[0][1] if toks else 4)
    m = _SHAPE_TOKEN.match(toks[0][0])
    if not m:
        raise ParseError(f"bad input shape {toks[0][0]!r}, expected CxHxW", toks[0][1])
    c, h, w = (int(g) for g in m.groups())
    if min(c, h, w) < 1:
        raise ParseError("input dimensions must be >= 1", toks[0][1])
    if h != w:
        raise ParseError("input maps must be square", toks[0][1])
    builders = []
    seen_flatten = False
    linear_sizes = []
    for tok, off in toks[1:]:
        if tok == "f":
            if seen_flatten:
                raise ParseError("only one flatten allowed", off)
            seen_flatten = True
            builders.append(("flatten",))
            continue
        if seen_flatten:
            linear_sizes.append((_int_token(tok, off), off))
            continue
        cm = _CONV_TOKEN.match(tok)
        if cm:
            out, k = int(cm.group(1)), int(cm.group(2))
            stride = int(cm.group(3)) if cm.group(3) else 1
            pad = int(cm.group(4)) if cm.group(4) else k // 2
            if min(out, k, stride) < 1:
                raise ParseError("conv sizes must be >= 1", off)
            builders.append(("conv", out, k, stride, pad))
            builders.append(("relu",))
            continue
        pm = _POOL_TOKEN.match(tok)
        if pm:
            builders.append(("avgpool", _int_token(pm.group(1), off)))
            continue
        raise ParseError(f"unrecognized token {tok!r}", off)
    if not seen_flatten:
        raise ParseError("cnn spec needs an 'f' flatten token", len(spec))
    if not linear_sizes:
        raise ParseError("cnn spec needs at least one linear size after 'f'", len(spec))
    for i, (size, _) in enumerate(linear_sizes):
        builders.append(("linear", None, size))
        if i < len(linear_sizes) - 1:
            builders.append(("relu",))
    return (c, h, w), builders


def from_arch(spec: str, seed: int) -> ToyModel:
    """Build and initialize a model from an architecture string.

    Weights draw from uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)); biases
    start at zero.
    """
    input_shape, builders = parse_arch(spec)
    rng = np.random.default_rng(seed)
    layers = []
    cur = input_shape
    for b in builders:
        if b[0] == "linear":
            n_in = b[1] if b[1] is not None else int(np.prod(cur))
            if len(cur) != 1 or cur[0] != n_in:
                raise ShapeMismatch(f"linear input {n_in} does not match {cur}")
            layers.append(Linear.init(n_in, b[2], rng))
            cur = (b[2],)
        elif b[0] == "conv":
            _, out, k, stride, pad = b
            if len(cur) != 3:
                raise ShapeMismatch(f"conv needs (c, h, w) input, got {cur}")
            layer = Conv.init(cur[0], out, k, stride, pad, rng)
            cur = (out, layer.out_hw(cur[1]), layer.out_hw(cur[2]))
            layers.append(layer)
        elif b[0] == "avgpool":
            layer = AvgPool(b[1])
            if len(cur) != 3 or cur[1] % b[1] or cur[2] % b[1]:
                raise ShapeMismatch(f"pool {b[1]} does not divide {cur}")
            cur = (cur[0], cur[1] // b[1], cur[2] // b[1])
            layers.append(layer)
        elif b[0] == "flatten":
            layers.append(Flatten())
            cur = (int(np.prod(cur)),)
        else:
            layers.append(ReLU())
    return ToyModel(layers, input_shape, rng_seed=seed)

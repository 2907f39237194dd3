"""Bit-exact file container and the datatypes that cross tool boundaries.

Binary container layout (all integers little-endian, fixed width):

    magic    4 bytes   b"ACSP"
    version  u32       currently 1
    kind     u32       1=dataset  2=activations  3=separability  4=model
    payload  ...       kind specific, documented on each write_* function

Tensor values are stored as little-endian float32 in row-major order and
labels as uint32, so identical in-memory inputs produce byte-identical
files on any platform. Downstream numerics run in float64; files are the
only place precision is reduced.

Pruning plans are JSON text instead of binary: they are the artifact a
human audits after a run.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BadMagic,
    InvalidDataset,
    MalformedPlan,
    NonFiniteValue,
    TruncatedFile,
    VersionMismatch,
    WrongKind,
)

MAGIC = b"ACSP"
VERSION = 1

KIND_DATASET = 1
KIND_ACTIVATIONS = 2
KIND_SEPMATRIX = 3
KIND_MODEL = 4

_ACT_KIND_CODE = {"linear": 1, "conv": 2}
_ACT_KIND_NAME = {v: k for k, v in _ACT_KIND_CODE.items()}

PLAN_FORMAT = "acsp-plan/1"

SELECTION_MODES = ("regular", "weighted")


# ---------------------------------------------------------------- types

@dataclass(eq=False)
class LabeledDataset:
    """Sample batch plus integer class labels in [0, C).

    Every class id below the maximum must occur at least twice: the
    separability statistics downstream need a variance per class.
    """

    samples: np.ndarray  # float32, [n, *feature_dims]
    labels: np.ndarray   # int64, [n]

    def __post_init__(self):
        self.samples = np.ascontiguousarray(self.samples, dtype=np.float32)
        self.labels = np.ascontiguousarray(self.labels, dtype=np.int64)
        if self.samples.ndim < 2 or self.samples.shape[0] == 0:
            raise InvalidDataset("need at least one sample and one feature dimension")
        if self.labels.shape != (self.samples.shape[0],):
            raise InvalidDataset("labels must be a vector with one entry per sample")
        if not np.isfinite(self.samples).all():
            raise NonFiniteValue("dataset samples contain NaN or Inf")
        if int(self.labels.min()) < 0:
            raise InvalidDataset("class ids must be non-negative")
        counts = np.bincount(self.labels, minlength=int(self.labels.max()) + 1)
        if (counts < 2).any():
            bad = int(np.flatnonzero(counts < 2)[0])
            raise InvalidDataset(f"class {bad} occurs fewer than twice")

    @property
    def n_samples(self) -> int:
        return self.samples.shape[0]

    @property
    def num_classes(self) -> int:
        return int(self.labels.max()) + 1


@dataclass(eq=False)
class ActivationTensor:
    """Activation maps of one layer over a labeled batch.

    `values` has shape [n_samples, n_components, p, p]; linear layers use
    p = 1. Values must be finite.
    """

    layer_id: int
    kind: str  # "linear" or "conv"
    values: np.ndarray  # float32
    labels: np.ndarray  # int64

    def __post_init__(self):
        self.values = np.ascontiguousarray(self.values, dtype=np.float32)
        self.labels = np.ascontiguousarray(self.labels, dtype=np.int64)
        if self.kind not in _ACT_KIND_CODE:
            raise WrongKind(f"unknown activation kind {self.kind!r}")
        if self.values.ndim != 4:
            raise InvalidDataset("activation values must be [n, components, p, p]")
        n, _, p, q = self.values.shape
        if p != q or p < 1:
            raise InvalidDataset("activation maps must be square with p >= 1")
        if self.kind == "linear" and p != 1:
            raise InvalidDataset("linear activations must have p = 1")
        if self.labels.shape != (n,):
            raise InvalidDataset("labels must be a vector with one entry per sample")
        if n == 0 or self.values.shape[1] == 0:
            raise InvalidDataset("activation tensor must be non-empty")
        if int(self.labels.min()) < 0:
            raise InvalidDataset("class ids must be non-negative")
        if not np.isfinite(self.values).all():
            raise NonFiniteValue("activation values contain NaN or Inf")

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]

    @property
    def n_components(self) -> int:
        return self.values.shape[1]

    @property
    def patch(self) -> int:
        return self.values.shape[2]


@dataclass
class PlanEntry:
    """One layer's pruning decision, in the original component numbering."""

    layer_id: int
    n_components: int
    kept_indices: list[int]
    k_selected: int
    selection_mode: str
    knee_degree: int
    mss_curve_ref: str | None = None
    knee: dict | None = None  # knee-finder provenance, free form

    def validate(self) -> None:
        ks = self.kept_indices
        if self.k_selected != len(ks):
            raise MalformedPlan(
                f"layer {self.layer_id}: k_selected={self.k_selected} "
                f"but {len(ks)} kept indices"
            )
        if not 2 <= self.k_selected <= self.n_components:
            raise MalformedPlan(
                f"layer {self.layer_id}: k_selected must lie in [2, {self.n_components}]"
            )
        if any(b <= a for a, b in zip(ks, ks[1:])):
            raise MalformedPlan(f"layer {self.layer_id}: kept_indices must be strictly increasing")
        if ks[0] < 0 or ks[-1] >= self.n_components:
            raise MalformedPlan(
                f"layer {self.layer_id}: kept index outside [0, {self.n_components})"
            )
        if self.selection_mode not in SELECTION_MODES:
            raise MalformedPlan(f"layer {self.layer_id}: unknown selection mode {self.selection_mode!r}")
        if self.knee_degree < 1:
            raise MalformedPlan(f"layer {self.layer_id}: knee_degree must be >= 1")


@dataclass
class PruningPlan:
    """Ordered pruning decisions; an empty entry list is a valid no-op."""

    entries: list[PlanEntry] = field(default_factory=list)

    def validate(self) -> None:
        seen = set()
        for entry in self.entries:
            entry.validate()
            if entry.layer_id in seen:
                raise MalformedPlan(f"duplicate entry for layer {entry.layer_id}")
            seen.add(entry.layer_id)


# ------------------------------------------------------- low-level bytes

class _Reader:
    """Cursor over an in-memory file image; raises TruncatedFile on overrun."""

    def __init__(self, buf: bytes):
        self.buf = buf
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.buf):
            raise TruncatedFile(f"needed {n} bytes at offset {self.pos}, file has {len(self.buf)}")
        out = self.buf[self.pos : self.pos + n]
        self.pos += n
        return out

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def u64(self) -> int:
        return struct.unpack("<Q", self.take(8))[0]

    def f64(self) -> float:
        return struct.unpack("<d", self.take(8))[0]

    def array(self, dtype: str, count: int) -> np.ndarray:
        nbytes = np.dtype(dtype).itemsize * count
        return np.frombuffer(self.take(nbytes), dtype=dtype).copy()

    def done(self) -> None:
        if self.pos != len(self.buf):
            raise TruncatedFile(f"{len(self.buf) - self.pos} bytes beyond the declared payload")


def _header(kind: int) -> bytes:
    return MAGIC + struct.pack("<II", VERSION, kind)


def _open(path: str, expect_kind: int) -> _Reader:
    with open(path, "rb") as fh:
        reader = _Reader(fh.read())
    if reader.take(4) != MAGIC:
        raise BadMagic(f"{path}: not a container file")
    version = reader.u32()
    if version != VERSION:
        raise VersionMismatch(f"{path}: format version {version}, expected {VERSION}")
    kind = reader.u32()
    if kind != expect_kind:
        raise WrongKind(f"{path}: kind {kind}, expected {expect_kind}")
    return reader


def _pack_dims(shape: tuple[int, ...]) -> bytes:
    return struct.pack("<I", len(shape)) + b"".join(struct.pack("<Q", d) for d in shape)


def _read_dims(r: _Reader) -> tuple[int, ...]:
    ndim = r.u32()
    return tuple(r.u64() for _ in range(ndim))


def _f32_bytes(arr: np.ndarray) -> bytes:
    return np.ascontiguousarray(arr, dtype="<f4").tobytes()


def _u32_bytes(arr: np.ndarray) -> bytes:
    return np.ascontiguousarray(arr, dtype="<u4").tobytes()


# ------------------------------------------------------------- datasets

def write_dataset(ds: LabeledDataset, path: str) -> None:
    """Payload: dims, n_labels u64, labels u32[n], values f32[prod(dims)]."""
    blob = bytearray(_header(KIND_DATASET))
    blob += _pack_dims(ds.samples.shape)
    blob += struct.pack("<Q", ds.n_samples)
    blob += _u32_bytes(ds.labels)
    blob += _f32_bytes(ds.samples)
    with open(path, "wb") as fh:
        fh.write(blob)


def read_dataset(path: str) -> LabeledDataset:
    r = _open(path, KIND_DATASET)
    dims = _read_dims(r)
    n = r.u64()
    if not dims or n != dims[0]:
        raise TruncatedFile(f"{path}: label count {n} disagrees with dims {dims}")
    labels = r.array("<u4", n).astype(np.int64)
    values = r.array("<f4", int(np.prod(dims))).reshape(dims)
    r.done()
    return LabeledDataset(values, labels)


# ---------------------------------------------------------- activations

def write_activations(act: ActivationTensor, path: str) -> None:
    """Payload: layer_id u32, layer kind u32, dims (always 4), n_labels u64,
    labels u32[n], values f32 row-major [sample][component][row][col]."""
    blob = bytearray(_header(KIND_ACTIVATIONS))
    blob += struct.pack("<II", act.layer_id, _ACT_KIND_CODE[act.kind])
    blob += _pack_dims(act.values.shape)
    blob += struct.pack("<Q", act.n_samples)
    blob += _u32_bytes(act.labels)
    blob += _f32_bytes(act.values)
    with open(path, "wb") as fh:
        fh.write(blob)


def read_activations(path: str) -> ActivationTensor:
    r = _open(path, KIND_ACTIVATIONS)
    layer_id = r.u32()
    code = r.u32()
    if code not in _ACT_KIND_NAME:
        raise WrongKind(f"{path}: unknown layer kind code {code}")
    dims = _read_dims(r)
    if len(dims) != 4:
        raise TruncatedFile(f"{path}: activation dims must be rank 4, got {dims}")
    n = r.u64()
    if n != dims[0]:
        raise TruncatedFile(f"{path}: label count {n} disagrees with dims {dims}")
    labels = r.array("<u4", n).astype(np.int64)
    values = r.array("<f4", int(np.prod(dims))).reshape(dims)
    r.done()
    return ActivationTensor(layer_id, _ACT_KIND_NAME[code], values, labels)


# ------------------------------------------------- separability matrices

def write_matrix(mat, path: str) -> None:
    """Inspection dump of a separability matrix (values quantized to f32).

    Payload: layer_id u32, num_classes u32, patch u32, dims (rank 2),
    values f32 row-major.
    """
    blob = bytearray(_header(KIND_SEPMATRIX))
    blob += struct.pack("<III", mat.layer_id, mat.num_classes, mat.patch)
    blob += _pack_dims(mat.values.shape)
    blob += _f32_bytes(mat.values)
    with open(path, "wb") as fh:
        fh.write(blob)


def read_matrix(path: str):
    from .sepspace import SeparabilityMatrix  # deferred: sepspace imports tensio

    r = _open(path, KIND_SEPMATRIX)
    layer_id, num_classes, patch = r.u32(), r.u32(), r.u32()
    dims = _read_dims(r)
    if len(dims) != 2:
        raise TruncatedFile(f"{path}: matrix dims must be rank 2, got {dims}")
    values = r.array("<f4", int(np.prod(dims))).astype(np.float64).reshape(dims)
    r.done()
    return SeparabilityMatrix(layer_id, num_classes, patch, values)


# ----------------------------------------------------------------- models

_MODEL_LAYER_CODES = {"linear": 1, "conv": 2, "relu": 3, "avgpool": 4, "flatten": 5}


def write_model(model, path: str) -> None:
    """Payload: input dims, rng_seed u64, train_epochs u32, train_lr f64,
    n_layers u32, a per-layer header block, then f32 weight payloads
    (weights then bias) for each parametric layer in order.

    Layer headers: linear = (code, n_in u32, n_out u32); conv = (code,
    c_in, c_out, kernel, stride, pad u32 each); avgpool = (code, size u32);
    relu and flatten carry only their code.
    """
    from . import toynet  # deferred: toynet imports tensio

    blob = bytearray(_header(KIND_MODEL))
    blob += _pack_dims(model.input_shape)
    blob += struct.pack("<QId", model.rng_seed, model.train_epochs, model.train_lr)
    blob += struct.pack("<I", len(model.layers))
    payloads = bytearray()
    for layer in model.layers:
        code = _MODEL_LAYER_CODES[layer.kind]
        if isinstance(layer, toynet.Linear):
            blob += struct.pack("<III", code, layer.n_in, layer.n_out)
            payloads += _f32_bytes(layer.w) + _f32_bytes(layer.b)
        elif isinstance(layer, toynet.Conv):
            blob += struct.pack("<IIIIII", code, layer.c_in, layer.c_out,
                                layer.kernel, layer.stride, layer.pad)
            payloads += _f32_bytes(layer.w) + _f32_bytes(layer.b)
        elif isinstance(layer, toynet.AvgPool):
            blob += struct.pack("<II", code, layer.size)
        else:
            blob += struct.pack("<I", code)
    blob += payloads
    with open(path, "wb") as fh:
        fh.write(blob)


def read_model(path: str):
    from . import toynet

    r = _open(path, KIND_MODEL)
    input_shape = _read_dims(r)
    rng_seed = r.u64()
    train_epochs = r.u32()
    train_lr = r.f64()
    n_layers = r.u32()
    headers = []
    for _ in range(n_layers):
        code = r.u32()
        if code == 1:
            headers.append(("linear", r.u32(), r.u32()))
        elif code == 2:
            headers.append(("conv", r.u32(), r.u32(), r.u32(), r.u32(), r.u32()))
        elif code == 3:
            headers.append(("relu",))
        elif code == 4:
            headers.append(("avgpool", r.u32()))
        elif code == 5:
            headers.append(("flatten",))
        else:
            raise WrongKind(f"{path}: unknown layer code {code}")
    layers = []
    for h in headers:
        if h[0] == "linear":
            _, n_in, n_out = h
            w = r.array("<f4", n_out * n_in).astype(np.float64).reshape(n_out, n_in)
            b = r.array("<f4", n_out).astype(np.float64)
            layers.append(toynet.Linear(n_in, n_out, w, b))
        elif h[0] == "conv":
            _, c_in, c_out, kernel, stride, pad = h
            w = r.array("<f4", c_out * c_in * kernel * kernel).astype(np.float64)
            w = w.reshape(c_out, c_in, kernel, kernel)
            b = r.array("<f4", c_out).astype(np.float64)
            layers.append(toynet.Conv(c_in, c_out, kernel, stride, pad, w, b))
        elif h[0] == "relu":
            layers.append(toynet.ReLU())
        elif h[0] == "avgpool":
            layers.append(toynet.AvgPool(h[1]))
        else:
            layers.append(toynet.Flatten())
    r.done()
    for layer in layers:
        if layer.parametric and not (np.isfinite(layer.w).all() and np.isfinite(layer.b).all()):
            raise NonFiniteValue(f"{path}: model weights contain NaN or Inf")
    return toynet.ToyModel(layers, input_shape, rng_seed, train_epochs, train_lr)


# ------------------------------------------------------------------ plans

def plan_to_json(plan: PruningPlan) -> str:
    plan.validate()
    doc = {
        "format": PLAN_FORMAT,
        "layers": [
            {
                "layer_id": e.layer_id,
                "n_components": e.n_components,
                "kept_indices": list(map(int, e.kept_indices)),
                "k_selected": e.k_selected,
                "selection_mode": e.selection_mode,
                "knee_degree": e.knee_degree,
                "mss_curve_ref": e.mss_curve_ref,
                "knee": e.knee,
            }
            for e in plan.entries
        ],
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def write_plan(plan: PruningPlan, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(plan_to_json(plan))


def _entry_from_doc(doc: dict) -> PlanEntry:
    try:
        return PlanEntry(
            layer_id=int(doc["layer_id"]),
            n_components=int(doc["n_components"]),
            kept_indices=[int(i) for i in doc["kept_indices"]],
            k_selected=int(doc["k_selected"]),
            selection_mode=doc["selection_mode"],
            knee_degree=int(doc["knee_degree"]),
            mss_curve_ref=doc.get("mss_curve_ref"),
            knee=doc.get("knee"),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedPlan(f"bad plan entry: {exc}") from exc


def read_plan(path: str) -> PruningPlan:
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedPlan(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(doc, dict) or doc.get("format") != PLAN_FORMAT:
        raise MalformedPlan(f"{path}: missing or unknown plan format marker")
    layers = doc.get("layers")
    if not isinstance(layers, list):
        raise MalformedPlan(f"{path}: 'layers' must be a list")
    plan = PruningPlan([_entry_from_doc(d) for d in layers])
    plan.validate()
    return plan

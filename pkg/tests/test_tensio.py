"""Container round-trips and corruption handling."""

import struct

import numpy as np
import pytest
from hypothesis import given, strategies as st

from acsp import tensio, toynet
from acsp.errors import (
    BadMagic,
    InvalidDataset,
    MalformedPlan,
    NonFiniteValue,
    TruncatedFile,
    VersionMismatch,
    WrongKind,
)
from acsp.tensio import ActivationTensor, LabeledDataset, PlanEntry, PruningPlan

from conftest import balanced_labels, tiny_dataset


# ------------------------------------------------------------ validation

def test_dataset_requires_samples():
    with pytest.raises(InvalidDataset):
        LabeledDataset(np.zeros((0, 3), np.float32), np.zeros(0, np.int64))


def test_dataset_rejects_nan():
    samples = np.ones((4, 2), np.float32)
    samples[1, 0] = np.nan
    with pytest.raises(NonFiniteValue):
        LabeledDataset(samples, balanced_labels(4, 2))


def test_dataset_rejects_label_shape():
    with pytest.raises(InvalidDataset):
        LabeledDataset(np.ones((4, 2), np.float32), np.zeros(3, np.int64))


def test_dataset_rejects_singleton_class():
    labels = np.array([0, 0, 1, 2, 2], np.int64)
    with pytest.raises(InvalidDataset):
        LabeledDataset(np.ones((5, 2), np.float32), labels)


def test_dataset_rejects_negative_label():
    with pytest.raises(InvalidDataset):
        LabeledDataset(np.ones((4, 2), np.float32), np.array([0, 0, -1, -1]))


def test_activation_linear_patch_must_be_one():
    values = np.ones((4, 3, 2, 2), np.float32)
    with pytest.raises(InvalidDataset):
        ActivationTensor(2, "linear", values, balanced_labels(4, 2))


def test_activation_rejects_rectangular_patch():
    values = np.ones((4, 3, 2, 3), np.float32)
    with pytest.raises(InvalidDataset):
        ActivationTensor(2, "conv", values, balanced_labels(4, 2))


def test_activation_rejects_unknown_kind():
    values = np.ones((4, 3, 1, 1), np.float32)
    with pytest.raises(WrongKind):
        ActivationTensor(2, "dense", values, balanced_labels(4, 2))


# ----------------------------------------------------------- round trips

def test_dataset_round_trip(tmp_path):
    ds = tiny_dataset(n=10, num_classes=2, dims=(3, 5), seed=4)
    path = str(tmp_path / "d.acsp")
    tensio.write_dataset(ds, path)
    back = tensio.read_dataset(path)
    np.testing.assert_array_equal(back.samples, ds.samples)
    np.testing.assert_array_equal(back.labels, ds.labels)


def test_activation_round_trip(tmp_path):
    gen = np.random.default_rng(1)
    act = ActivationTensor(
        4, "conv", gen.normal(size=(6, 5, 3, 3)).astype(np.float32), balanced_labels(6, 3)
    )
    path = str(tmp_path / "a.acsp")
    tensio.write_activations(act, path)
    back = tensio.read_activations(path)
    assert back.layer_id == 4 and back.kind == "conv"
    np.testing.assert_array_equal(back.values, act.values)
    np.testing.assert_array_equal(back.labels, act.labels)


def test_matrix_round_trip(tmp_path):
    from acsp.sepspace import SeparabilityMatrix

    gen = np.random.default_rng(2)
    values = gen.uniform(0.0, 2.0, size=(5, 12)).astype(np.float32).astype(np.float64)
    mat = SeparabilityMatrix(2, 4, 1, values)
    path = str(tmp_path / "m.acsp")
    tensio.write_matrix(mat, path)
    back = tensio.read_matrix(path)
    assert back.layer_id == 2 and back.num_classes == 4 and back.patch == 1
    np.testing.assert_array_equal(back.values, values)


def test_model_round_trip_mlp(tmp_path):
    model = toynet.from_arch("mlp:3-8-5-2", seed=5)
    path = str(tmp_path / "w.acsp")
    tensio.write_model(model, path)
    back = tensio.read_model(path)
    assert back.input_shape == model.input_shape
    assert back.rng_seed == model.rng_seed
    assert [type(l).__name__ for l in back.layers] == [type(l).__name__ for l in model.layers]
    # weights are stored as f32; one quantization, then stable
    for mine, theirs in zip(model.layers, back.layers):
        if hasattr(mine, "w"):
            np.testing.assert_array_equal(mine.w.astype(np.float32), theirs.w.astype(np.float32))
    path2 = str(tmp_path / "w2.acsp")
    tensio.write_model(back, path2)
    with open(path, "rb") as a, open(path2, "rb") as b:
        assert a.read() == b.read()


def test_model_round_trip_cnn(tmp_path):
    model = toynet.from_arch("cnn:1x8x8-c4k3-p2-c6k3s2-f-10-3", seed=6)
    path = str(tmp_path / "w.acsp")
    tensio.write_model(model, path)
    back = tensio.read_model(path)
    x = np.random.default_rng(0).normal(size=(2, 1, 8, 8))
    np.testing.assert_allclose(
        toynet.forward(back, x), toynet.forward(model, x), rtol=1e-5, atol=1e-6
    )
    conv = back.layers[0]
    assert (conv.stride, conv.pad) == (model.layers[0].stride, model.layers[0].pad)


def test_model_metadata_round_trip(tmp_path):
    model = toynet.from_arch("mlp:2-4-2", seed=9)
    model.train_epochs = 17
    model.train_lr = 0.125
    path = str(tmp_path / "w.acsp")
    tensio.write_model(model, path)
    back = tensio.read_model(path)
    assert back.train_epochs == 17
    assert back.train_lr == 0.125


def test_write_is_byte_deterministic(tmp_path):
    ds = tiny_dataset(seed=7)
    p1, p2 = str(tmp_path / "1.acsp"), str(tmp_path / "2.acsp")
    tensio.write_dataset(ds, p1)
    tensio.write_dataset(ds, p2)
    with open(p1, "rb") as a, open(p2, "rb") as b:
        assert a.read() == b.read()


@given(
    n=st.integers(4, 20),
    num_classes=st.integers(2, 4),
    width=st.integers(1, 6),
    seed=st.integers(0, 10_000),
)
def test_dataset_round_trip_property(tmp_path_factory, n, num_classes, width, seed):
    n = max(n, 2 * num_classes)
    ds = tiny_dataset(n=n, num_classes=num_classes, dims=(width,), seed=seed)
    path = str(tmp_path_factory.mktemp("rt") / "d.acsp")
    tensio.write_dataset(ds, path)
    back = tensio.read_dataset(path)
    np.testing.assert_array_equal(back.samples, ds.samples)
    np.testing.assert_array_equal(back.labels, ds.labels)


# ------------------------------------------------------- corrupted files

def _valid_dataset_bytes(tmp_path) -> bytes:
    path = str(tmp_path / "ok.acsp")
    tensio.write_dataset(tiny_dataset(seed=3), path)
    with open(path, "rb") as fh:
        return fh.read()


def _read_raw(tmp_path, blob: bytes):
    path = str(tmp_path / "bad.acsp")
    with open(path, "wb") as fh:
        fh.write(blob)
    return tensio.read_dataset(path)


def test_bad_magic(tmp_path):
    blob = _valid_dataset_bytes(tmp_path)
    with pytest.raises(BadMagic):
        _read_raw(tmp_path, b"XXXX" + blob[4:])


def test_version_mismatch(tmp_path):
    blob = _valid_dataset_bytes(tmp_path)
    bumped = blob[:4] + struct.pack("<I", 99) + blob[8:]
    with pytest.raises(VersionMismatch):
        _read_raw(tmp_path, bumped)


def test_wrong_kind(tmp_path):
    blob = _valid_dataset_bytes(tmp_path)
    patched = blob[:8] + struct.pack("<I", tensio.KIND_MODEL) + blob[12:]
    with pytest.raises(WrongKind):
        _read_raw(tmp_path, patched)


def test_truncated_payload(tmp_path):
    blob = _valid_dataset_bytes(tmp_path)
    with pytest.raises(TruncatedFile):
        _read_raw(tmp_path, blob[:-5])


def test_trailing_garbage(tmp_path):
    blob = _valid_dataset_bytes(tmp_path)
    with pytest.raises(TruncatedFile):
        _read_raw(tmp_path, blob + b"\x00")


def test_nan_payload_rejected_on_read(tmp_path):
    blob = _valid_dataset_bytes(tmp_path)
    patched = blob[:-4] + struct.pack("<f", float("nan"))
    with pytest.raises(NonFiniteValue):
        _read_raw(tmp_path, patched)


def test_empty_file(tmp_path):
    with pytest.raises((BadMagic, TruncatedFile)):
        _read_raw(tmp_path, b"")


# ---------------------------------------------------------------- plans

def _plan():
    return PruningPlan(
        [
            PlanEntry(2, 8, [0, 3, 5], 3, "weighted", 2, "mss_layer2.csv"),
            PlanEntry(4, 6, [1, 2, 3, 4], 4, "regular", 3, None, {"k_prime": 4}),
        ]
    )


def test_plan_round_trip(tmp_path):
    plan = _plan()
    path = str(tmp_path / "plan.json")
    tensio.write_plan(plan, path)
    back = tensio.read_plan(path)
    assert len(back.entries) == 2
    first = back.entries[0]
    assert (first.layer_id, first.kept_indices, first.selection_mode) == (2, [0, 3, 5], "weighted")
    assert back.entries[1].knee == {"k_prime": 4}


def test_plan_json_is_stable():
    text1 = tensio.plan_to_json(_plan())
    text2 = tensio.plan_to_json(_plan())
    assert text1 == text2
    assert text1.endswith("\n")


def test_empty_plan_round_trip(tmp_path):
    path = str(tmp_path / "plan.json")
    tensio.write_plan(PruningPlan([]), path)
    assert tensio.read_plan(path).entries == []


def test_plan_rejects_bad_json(tmp_path):
    path = str(tmp_path / "plan.json")
    with open(path, "w") as fh:
        fh.write("{nope")
    with pytest.raises(MalformedPlan):
        tensio.read_plan(path)


def test_plan_rejects_wrong_format_tag(tmp_path):
    path = str(tmp_path / "plan.json")
    with open(path, "w") as fh:
        fh.write('{"format": "acsp-plan/9", "entries": []}')
    with pytest.raises(MalformedPlan):
        tensio.read_plan(path)


def test_plan_rejects_missing_keys(tmp_path):
    path = str(tmp_path / "plan.json")
    with open(path, "w") as fh:
        fh.write('{"format": "acsp-plan/1", "entries": [{"layer_id": 2}]}')
    with pytest.raises(MalformedPlan):
        tensio.read_plan(path)


@pytest.mark.parametrize(
    "mutate",
    [
        lambda e: setattr(e, "k_selected", 2),            # count mismatch
        lambda e: setattr(e, "kept_indices", [3, 0, 5]),  # not increasing
        lambda e: setattr(e, "kept_indices", [0, 3, 9]),  # out of range
        lambda e: setattr(e, "selection_mode", "best"),   # unknown mode
        lambda e: setattr(e, "knee_degree", 0),
    ],
)
def test_plan_entry_validation(mutate):
    entry = PlanEntry(2, 8, [0, 3, 5], 3, "weighted", 2)
    mutate(entry)
    with pytest.raises(MalformedPlan):
        entry.validate()


def test_plan_rejects_duplicate_layer():
    entry = PlanEntry(2, 8, [0, 3], 2, "regular", 2)
    with pytest.raises(MalformedPlan):
        PruningPlan([entry, entry]).validate()

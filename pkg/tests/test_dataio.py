import json

import numpy as np
import pytest

from lrpr.core import make_rng
from lrpr.dataio import (
    DatasetIOError,
    LengthMismatch,
    UnsupportedVersion,
    dataset_exists,
    read_dataset,
    read_manifest,
    write_dataset,
)
from lrpr.datagen import SignalMatrix, gen_lowrank, gen_measurements

from .helpers import instance


def test_round_trip_bit_exact(tmp_path):
    ms, x = instance(1, 5, 4, 2, 9, beta_true=50.0)
    mpath = write_dataset(ms, x, tmp_path / "d", seed=1)
    ms2, x2 = read_dataset(mpath)
    np.testing.assert_array_equal(ms2.a, ms.a)
    np.testing.assert_array_equal(ms2.y, ms.y)
    np.testing.assert_array_equal(x2.x, x.x)
    assert ms2.beta_true == 50.0
    assert x2.rank_hint == 2
    assert read_dataset(tmp_path / "d")[0].a.tobytes() == ms.a.tobytes()
    assert dataset_exists(tmp_path / "d")


def test_blob_layout(tmp_path):
    rng = make_rng(2)
    x = gen_lowrank(rng, 2, 1, 1)
    ms = gen_measurements(rng, x, 1)
    write_dataset(ms, x, tmp_path)
    raw = (tmp_path / "a.bin").read_bytes()
    assert len(raw) == 32
    vals = np.frombuffer(raw, dtype="<f8")
    a = ms.a[0]
    np.testing.assert_array_equal(vals, [a[0, 0].real, a[0, 0].imag, a[0, 1].real, a[0, 1].imag])


def test_column_major_y(tmp_path):
    rng = make_rng(3)
    x = gen_lowrank(rng, 3, 2, 1)
    ms = gen_measurements(rng, x, 4)
    write_dataset(ms, None, tmp_path)
    vals = np.frombuffer((tmp_path / "y.bin").read_bytes(), dtype="<f8")
    np.testing.assert_array_equal(vals[:4], ms.y[:, 0])
    man = json.loads((tmp_path / "manifest.json").read_text())
    assert man["format_version"] == 1 and (man["n"], man["m"], man["p"]) == (3, 2, 4)
    assert "x" not in man["files"]


def test_truncated_blob(tmp_path):
    ms, x = instance(4, 3, 2, 1, 5)
    write_dataset(ms, x, tmp_path)
    blob = tmp_path / "y.bin"
    blob.write_bytes(blob.read_bytes()[:-8])
    with pytest.raises(LengthMismatch, match="y.bin"):
        read_dataset(tmp_path)


def test_unknown_version(tmp_path):
    ms, x = instance(5, 3, 2, 1, 5)
    mpath = write_dataset(ms, x, tmp_path)
    man = json.loads(mpath.read_text())
    man["format_version"] = 2
    mpath.write_text(json.dumps(man))
    with pytest.raises(UnsupportedVersion):
        read_manifest(mpath)


def test_missing_truth(tmp_path):
    ms, _ = instance(6, 3, 2, 1, 5)
    write_dataset(ms, None, tmp_path)
    ms2, x2 = read_dataset(tmp_path)
    assert x2 is None
    np.testing.assert_array_equal(ms2.y, ms.y)


def test_dims_disagree(tmp_path):
    ms, x = instance(7, 3, 2, 1, 5)
    mpath = write_dataset(ms, x, tmp_path)
    man = json.loads(mpath.read_text())
    man["p"] = 6
    mpath.write_text(json.dumps(man))
    with pytest.raises(LengthMismatch, match="a.bin"):
        read_dataset(mpath)


def test_missing_directory(tmp_path):
    with pytest.raises(DatasetIOError):
        read_dataset(tmp_path / "nowhere")


def test_rejects_wrong_truth_shape(tmp_path):
    ms, _ = instance(8, 3, 2, 1, 5)
    with pytest.raises(ValueError):
        write_dataset(ms, SignalMatrix(np.ones((2, 2))), tmp_path)


def test_rewrite_is_byte_identical(tmp_path):
    ms, x = instance(9, 4, 3, 2, 7)
    write_dataset(ms, x, tmp_path / "a", seed=9)
    write_dataset(ms, x, tmp_path / "b", seed=9)
    for name in ("manifest.json", "a.bin", "y.bin", "x.bin"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

"""On-disk dataset format.

A dataset is a directory holding ``manifest.json`` and three raw blobs of
little-endian float64 values, complex numbers interleaved as (re, im), all
matrices column-major:

* ``a.bin``: the ``m`` sensing matrices (each ``p x n``) back to back;
* ``y.bin``: the real ``p x m`` magnitude matrix;
* ``x.bin`` (optional): the complex ``n x m`` ground truth.
"""

import json
import os
from pathlib import Path

import numpy as np

from .core import LrprError
from .datagen import MeasurementSet, SignalMatrix

FORMAT_VERSION = 1
MANIFEST_NAME = "manifest.json"

_C16 = np.dtype("<c16")
_F8 = np.dtype("<f8")


class DatasetError(LrprError):
    pass


class LengthMismatch(DatasetError):
    pass


class UnsupportedVersion(DatasetError):
    pass


class DatasetIOError(DatasetError, OSError):
    pass


def manifest_path(path):
    path = Path(path)
    return path / MANIFEST_NAME if path.is_dir() or path.suffix != ".json" else path


def encode_a(a):
    # (m, p, n) -> per column the p x n block in column-major order
    return np.ascontiguousarray(np.swapaxes(a, 1, 2)).astype(_C16).tobytes()


def encode_y(y):
    return np.asarray(y, dtype=float).ravel(order="F").astype(_F8).tobytes()


def encode_x(x):
    return np.asarray(x, dtype=complex).ravel(order="F").astype(_C16).tobytes()


def _write(path, data):
    try:
        path.write_bytes(data)
    except OSError as exc:
        raise DatasetIOError(f"cannot write {path}: {exc}") from exc


def write_dataset(ms, x=None, path=".", seed=None):
    """Write ``ms`` (and the ground truth ``x`` if given) under ``path``.

    ``path`` is the dataset directory or the manifest file inside it.
    Returns the manifest path.
    """
    mpath = Path(path)
    if mpath.suffix != ".json":
        mpath = mpath / MANIFEST_NAME
    root = mpath.parent
    try:
        root.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise DatasetIOError(f"cannot create {root}: {exc}") from exc

    files = {"a": "a.bin", "y": "y.bin"}
    _write(root / files["a"], encode_a(ms.a))
    _write(root / files["y"], encode_y(ms.y))
    r_true = None
    if x is not None:
        xm = x.x if isinstance(x, SignalMatrix) else np.asarray(x, dtype=complex)
        if xm.shape != (ms.n, ms.m):
            raise ValueError(f"x has shape {xm.shape}, expected {(ms.n, ms.m)}")
        r_true = getattr(x, "rank_hint", None)
        files["x"] = "x.bin"
        _write(root / files["x"], encode_x(xm))

    manifest = {
        "format_version": FORMAT_VERSION,
        "n": ms.n,
        "m": ms.m,
        "p": ms.p,
        "r_true": r_true,
        "seed": seed,
        "beta_true": ms.beta_true,
        "files": files,
    }
    _write(mpath, (json.dumps(manifest, indent=2, sort_keys=True) + "\n").encode("utf-8"))
    return mpath


def _read_blob(path, dtype, count):
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise DatasetIOError(f"cannot read {path}: {exc}") from exc
    expected = count * dtype.itemsize
    if len(data) != expected:
        raise LengthMismatch(f"{path}: {len(data)} bytes, expected {expected}")
    return np.frombuffer(data, dtype=dtype).astype(dtype.newbyteorder("="))


def read_manifest(path):
    mpath = manifest_path(path)
    try:
        manifest = json.loads(mpath.read_text(encoding="utf-8"))
    except OSError as exc:
        raise DatasetIOError(f"cannot read {mpath}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DatasetError(f"{mpath}: invalid JSON: {exc}") from exc
    version = manifest.get("format_version")
    if version != FORMAT_VERSION:
        raise UnsupportedVersion(f"{mpath}: format_version {version!r} is not supported")
    for key in ("n", "m", "p", "files"):
        if key not in manifest:
            raise DatasetError(f"{mpath}: missing field {key!r}")
    return mpath, manifest


def read_dataset(path):
    """Inverse of :func:`write_dataset`; returns ``(ms, x)`` with ``x`` possibly ``None``."""
    mpath, man = read_manifest(path)
    root = mpath.parent
    n, m, p = int(man["n"]), int(man["m"]), int(man["p"])
    files = man["files"]

    a_flat = _read_blob(root / files["a"], _C16, m * p * n)
    a = np.swapaxes(a_flat.reshape(m, n, p), 1, 2).copy()
    y = _read_blob(root / files["y"], _F8, p * m).reshape(p, m, order="F").copy()
    x = None
    if files.get("x"):
        xm = _read_blob(root / files["x"], _C16, n * m).reshape(n, m, order="F").copy()
        x = SignalMatrix(xm, rank_hint=man.get("r_true"))
    beta = man.get("beta_true")
    return MeasurementSet(a, y, None if beta is None else float(beta)), x


def dataset_exists(path):
    return os.path.exists(manifest_path(path))

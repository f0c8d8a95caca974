"""Tensor files, observation masks, synthetic data and slice export.

Tensors are stored as NPY v1.0: C order, little-endian ``float64`` for data
and ``uint8`` 0/1 for masks.
"""

from __future__ import annotations

import numpy as np
from numpy.lib import format as npformat

from .solver import ObservationMask
from .tensor import t_product

__all__ = [
    "TensorFileError",
    "read_tensor",
    "write_tensor",
    "read_mask",
    "write_mask",
    "sample_mask",
    "synth_lowrank",
    "write_pgm",
]


class TensorFileError(ValueError):
    """Malformed, truncated or mistyped tensor file."""


def write_tensor(t, path):
    """Write ``t`` as NPY v1.0 (``<f8``, or ``|u1`` for uint8/bool arrays)."""
    t = np.asarray(t)
    dtype = np.uint8 if t.dtype in (np.bool_, np.uint8) else np.dtype("<f8")
    t = np.ascontiguousarray(t, dtype=dtype)
    with open(path, "wb") as f:
        npformat.write_array_header_1_0(f, npformat.header_data_from_array_1_0(t))
        f.write(t.tobytes(order="C"))


def _read(path, expect):
    with open(path, "rb") as f:
        try:
            version = npformat.read_magic(f)
        except ValueError as exc:
            raise TensorFileError(f"{path}: not an NPY file ({exc})") from None
        if version != (1, 0):
            raise TensorFileError(f"{path}: unsupported NPY version {version}, expected (1, 0)")
        try:
            shape, fortran, dtype = npformat.read_array_header_1_0(f)
        except ValueError as exc:
            raise TensorFileError(f"{path}: malformed header ({exc})") from None
        payload = f.read()
    if fortran:
        raise TensorFileError(f"{path}: fortran_order is set; only C-order files are accepted")
    if dtype.str != expect:
        raise TensorFileError(f"{path}: dtype {dtype.str!r}, expected {expect!r}")
    need = int(np.prod(shape, dtype=np.int64)) * dtype.itemsize
    if len(payload) != need:
        kind = "truncated payload" if len(payload) < need else "trailing bytes after payload"
        raise TensorFileError(f"{path}: {kind}: {len(payload)} bytes, expected {need}")
    return np.frombuffer(payload, dtype=dtype).reshape(shape).copy()


def read_tensor(path):
    """Read a ``float64`` tensor written by :func:`write_tensor`."""
    return _read(path, "<f8")


def write_mask(mask, path):
    m = mask.membership if isinstance(mask, ObservationMask) else np.asarray(mask)
    write_tensor(m.astype(np.uint8), path)


def read_mask(path):
    """Read a ``uint8`` 0/1 mask file."""
    return ObservationMask(_read(path, "|u1"))


def sample_mask(shape, sr, seed):
    """Uniform random observation set with exactly ``round(sr * numel)`` entries."""
    if not 0.0 < sr <= 1.0:
        raise ValueError(f"sampling rate must lie in (0, 1], got {sr}")
    shape = tuple(int(n) for n in shape)
    n = int(np.prod(shape, dtype=np.int64))
    k = int(round(sr * n))
    flat = np.zeros(n, dtype=bool)
    flat[np.random.default_rng(seed).choice(n, size=k, replace=False)] = True
    return ObservationMask(flat.reshape(shape))


def synth_lowrank(shape, r, seed):
    """t-product of seeded standard Gaussian ``n1 x r x n3`` and ``r x n2 x n3`` factors."""
    n1, n2, n3 = (int(n) for n in shape)
    if not 1 <= r <= min(n1, n2):
        raise ValueError(f"tubal rank must lie in 1..{min(n1, n2)}, got {r}")
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((n1, r, n3))
    b = rng.standard_normal((r, n2, n3))
    return t_product(a, b)


def write_pgm(img, path):
    """Write a matrix as 8-bit binary PGM, min-max scaled to 0..255."""
    img = np.asarray(img, dtype=float)
    if img.ndim != 2:
        raise ValueError(f"expected a matrix, got shape {img.shape}")
    lo, hi = float(img.min()), float(img.max())
    scaled = np.zeros(img.shape) if hi == lo else (img - lo) / (hi - lo) * 255.0
    data = np.clip(np.rint(scaled), 0, 255).astype(np.uint8)
    with open(path, "wb") as f:
        f.write(b"P5\n%d %d\n255\n" % (img.shape[1], img.shape[0]))
        f.write(data.tobytes())

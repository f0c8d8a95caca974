import numpy as np
import pytest

from mpcp.io import (
    TensorFileError,
    read_mask,
    read_tensor,
    sample_mask,
    synth_lowrank,
    write_mask,
    write_pgm,
    write_tensor,
)
from mpcp.tensor import tubal_rank


def test_round_trip_bit_exact(tmp_path, rng):
    t = rng.standard_normal((4, 5, 6))
    t[0, 0, 0] = -0.0
    t[1, 1, 1] = 1e-310  # subnormal
    write_tensor(t, tmp_path / "t.npy")
    back = read_tensor(tmp_path / "t.npy")
    assert back.tobytes() == t.tobytes() and back.shape == t.shape


def test_interoperates_with_numpy(tmp_path, rng):
    t = rng.standard_normal((3, 2, 4))
    write_tensor(t, tmp_path / "ours.npy")
    assert np.array_equal(np.load(tmp_path / "ours.npy"), t)
    np.save(tmp_path / "theirs.npy", t)
    assert np.array_equal(read_tensor(tmp_path / "theirs.npy"), t)
    raw = (tmp_path / "ours.npy").read_bytes()
    assert raw[:8] == b"\x93NUMPY\x01\x00"
    header_len = int.from_bytes(raw[8:10], "little")
    assert (10 + header_len) % 64 == 0


def test_mask_round_trip(tmp_path, rng):
    m = sample_mask((4, 4, 4), 0.3, 1)
    write_mask(m, tmp_path / "m.npy")
    assert read_mask(tmp_path / "m.npy") == m
    assert np.load(tmp_path / "m.npy").dtype == np.uint8


def test_wrong_dtype_names_both(tmp_path):
    np.save(tmp_path / "f4.npy", np.zeros((2, 2), dtype=np.float32))
    with pytest.raises(TensorFileError, match=r"'<f4'.*'<f8'"):
        read_tensor(tmp_path / "f4.npy")
    np.save(tmp_path / "d.npy", np.zeros((2, 2)))
    with pytest.raises(TensorFileError, match="expected '|u1'"):
        read_mask(tmp_path / "d.npy")


def test_fortran_order_rejected(tmp_path):
    np.save(tmp_path / "f.npy", np.asfortranarray(np.zeros((3, 2))))
    with pytest.raises(TensorFileError, match="fortran_order"):
        read_tensor(tmp_path / "f.npy")


def test_truncated_payload(tmp_path, rng):
    write_tensor(rng.standard_normal((3, 3)), tmp_path / "t.npy")
    raw = (tmp_path / "t.npy").read_bytes()
    (tmp_path / "t.npy").write_bytes(raw[:-5])
    with pytest.raises(TensorFileError, match="truncated payload"):
        read_tensor(tmp_path / "t.npy")
    (tmp_path / "t.npy").write_bytes(raw + b"\0")
    with pytest.raises(TensorFileError, match="trailing"):
        read_tensor(tmp_path / "t.npy")


@pytest.mark.parametrize(
    "blob",
    [
        b"not a tensor",
        b"\x93NUMPY\x02\x00\x10\x00" + b" " * 16,
        b"\x93NUMPY\x01\x00\xff\x00{}",
        b"\x93NUMPY\x01\x00\x08\x00{'a': 1}",
        b"\x93NUMPY\x01\x00\x06\x00[1, 2]",
    ],
)
def test_malformed_header(tmp_path, blob):
    (tmp_path / "bad.npy").write_bytes(blob)
    with pytest.raises(TensorFileError):
        read_tensor(tmp_path / "bad.npy")


def test_sample_mask_counts():
    assert sample_mask((10, 10, 10), 0.05, 0).membership.sum() == 50
    assert sample_mask((3, 4, 5), 1.0, 0).membership.all()
    assert sample_mask((7, 3, 3), 0.5, 2).membership.sum() == round(0.5 * 63)


def test_sample_mask_determinism():
    a, b = sample_mask((8, 8, 8), 0.2, 7), sample_mask((8, 8, 8), 0.2, 7)
    assert a == b
    assert a != sample_mask((8, 8, 8), 0.2, 8)


@pytest.mark.parametrize("sr", [0.0, -0.1, 1.5])
def test_sample_mask_rate_range(sr):
    with pytest.raises(ValueError):
        sample_mask((2, 2, 2), sr, 0)


def test_synth_rank():
    assert tubal_rank(synth_lowrank((8, 6, 5), 1, 0)) == 1
    assert tubal_rank(synth_lowrank((8, 6, 5), 3, 1)) == 3
    assert tubal_rank(synth_lowrank((8, 6, 5), 6, 2)) == 6


def test_synth_determinism():
    a = synth_lowrank((5, 4, 3), 2, 9)
    assert a.tobytes() == synth_lowrank((5, 4, 3), 2, 9).tobytes()
    assert not np.array_equal(a, synth_lowrank((5, 4, 3), 2, 10))


@pytest.mark.parametrize("r", [0, 5])
def test_synth_rank_range(r):
    with pytest.raises(ValueError):
        synth_lowrank((4, 6, 2), r, 0)


def test_pgm_export(tmp_path):
    img = np.array([[0.0, 1.0, 2.0], [3.0, 4.0, 5.0]])
    write_pgm(img, tmp_path / "s.pgm")
    raw = (tmp_path / "s.pgm").read_bytes()
    assert raw.startswith(b"P5\n3 2\n255\n")
    assert list(raw[len(b"P5\n3 2\n255\n") :]) == [0, 51, 102, 153, 204, 255]
    write_pgm(np.full((2, 2), 7.0), tmp_path / "c.pgm")
    assert (tmp_path / "c.pgm").read_bytes().endswith(bytes(4))

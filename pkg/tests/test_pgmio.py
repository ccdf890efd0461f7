import numpy as np
import pytest

from metaherald.pgmio import (
    atomic_write_text,
    read_metadata,
    read_pgm,
    write_metadata,
    write_pgm,
)


def test_pgm8_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    img = rng.integers(0, 256, size=(17, 23))
    path = tmp_path / "img.pgm"
    write_pgm(path, img, maxval=255)
    back, maxval = read_pgm(path)
    assert maxval == 255
    np.testing.assert_array_equal(back, img)


def test_pgm16_round_trip_big_endian(tmp_path):
    img = np.array([[0, 1], [258, 65535]])
    path = tmp_path / "img16.pgm"
    write_pgm(path, img, maxval=65535)
    raw = path.read_bytes()
    header = b"P5\n2 2\n65535\n"
    assert raw.startswith(header)
    sample = raw[len(header) + 4 : len(header) + 6]  # third sample = 258 = 0x0102
    assert sample == b"\x01\x02"
    back, maxval = read_pgm(path)
    assert maxval == 65535
    np.testing.assert_array_equal(back, img)


def test_pgm_clipping_and_validation(tmp_path):
    path = tmp_path / "clip.pgm"
    write_pgm(path, np.array([[-5, 300]]), maxval=255)
    back, _ = read_pgm(path)
    np.testing.assert_array_equal(back, [[0, 255]])
    with pytest.raises(ValueError):
        write_pgm(path, np.zeros(3), maxval=255)
    with pytest.raises(ValueError):
        write_pgm(path, np.zeros((2, 2)), maxval=70000)


def test_read_pgm_with_comment(tmp_path):
    path = tmp_path / "c.pgm"
    payload = b"P5\n# a comment\n2 1\n255\n" + bytes([7, 9])
    path.write_bytes(payload)
    back, maxval = read_pgm(path)
    np.testing.assert_array_equal(back, [[7, 9]])


def test_read_pgm_rejects_other_formats(tmp_path):
    path = tmp_path / "bad.pgm"
    path.write_bytes(b"P6\n1 1\n255\n\x00\x00\x00")
    with pytest.raises(ValueError):
        read_pgm(path)


def test_metadata_round_trip(tmp_path):
    path = tmp_path / "meta.txt"
    write_metadata(path, {"seed": 7, "phi_deg": "45", "note": "a=b"})
    back = read_metadata(path)
    assert back == {"seed": "7", "phi_deg": "45", "note": "a=b"}


def test_atomic_write_leaves_no_partials(tmp_path):
    path = tmp_path / "out.txt"
    atomic_write_text(path, "hello\n")
    assert path.read_text() == "hello\n"
    leftovers = [p for p in tmp_path.iterdir() if p.name.startswith(".tmp_")]
    assert leftovers == []

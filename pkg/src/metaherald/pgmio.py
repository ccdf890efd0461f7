"""Minimal binary PGM (P5) reader/writer plus key=value metadata sidecars.

Samples are big-endian two-byte words when maxval > 255, per the netpbm
format. Writes are atomic (temp file + rename) so interrupted runs never
leave partial files behind.
"""

from __future__ import annotations

import os
import tempfile

import numpy as np


def _atomic_write_bytes(path, payload):
    path = os.fspath(path)
    d = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp_", suffix=".part")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_pgm(path, values, maxval=255):
    """Write an integer grid as binary PGM. Values are clipped to [0, maxval]."""
    arr = np.asarray(values)
    if arr.ndim != 2:
        raise ValueError(f"PGM needs a 2-D grid, got shape {arr.shape}")
    if not (0 < maxval < 65536):
        raise ValueError(f"maxval must be in 1..65535, got {maxval}")
    clipped = np.clip(np.rint(arr), 0, maxval)
    dtype = ">u2" if maxval > 255 else "u1"
    rows, cols = arr.shape
    header = f"P5\n{cols} {rows}\n{maxval}\n".encode("ascii")
    _atomic_write_bytes(path, header + clipped.astype(dtype).tobytes())


def read_pgm(path):
    """Read a binary PGM file. Returns (values, maxval) with values as int array."""
    with open(path, "rb") as f:
        data = f.read()

    tokens = []
    i = 0
    while len(tokens) < 4 and i < len(data):
        c = data[i : i + 1]
        if c == b"#":
            i = data.find(b"\n", i)
            if i < 0:
                break
            i += 1
        elif c.isspace():
            i += 1
        else:
            j = i
            while j < len(data) and not data[j : j + 1].isspace():
                j += 1
            tokens.append(data[i:j])
            i = j
    if len(tokens) < 4 or tokens[0] != b"P5":
        raise ValueError(f"{path}: not a binary PGM (P5) file")
    cols, rows, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    i += 1  # single whitespace byte after maxval
    dtype = ">u2" if maxval > 255 else "u1"
    raw = np.frombuffer(data, dtype=dtype, offset=i, count=rows * cols)
    return raw.reshape(rows, cols).astype(np.int64), maxval


def write_metadata(path, entries):
    """Write metadata as sorted key=value lines."""
    lines = "".join(f"{k}={entries[k]}\n" for k in entries)
    _atomic_write_bytes(path, lines.encode("utf-8"))


def read_metadata(path):
    """Read key=value lines back into a dict of strings."""
    out = {}
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, value = line.partition("=")
            out[key] = value
    return out


def atomic_write_text(path, text):
    """Atomically write a text file (used for CSV / layout / report outputs)."""
    _atomic_write_bytes(path, text.encode("utf-8"))

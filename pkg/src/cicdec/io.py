"""Sample-file formats, CSV output and atomic writes.

Text samples
    One signed integer per line.  Blank lines and ``#`` comments are
    ignored.

Binary samples (``--binary``)
    16-byte header: magic ``b"CICDEC01"``, little-endian ``u32`` sample
    rate in Hz, ``u32`` sample count; then one signed 8-bit sample per byte.

Packed bit stream (sigma-delta output)
    16-byte header: magic ``b"CICBITS1"``, ``u32`` rate, ``u32`` bit count;
    then the bits packed LSB-first, 1 for +1 and 0 for -1.
"""
from __future__ import annotations

import csv
import io
import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from .errors import DataFormatError

SAMPLE_MAGIC = b"CICDEC01"
BITS_MAGIC = b"CICBITS1"
_HEADER = struct.Struct("<8sII")


def atomic_write_bytes(path, data: bytes) -> None:
    """Write via a temporary file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path, text: str) -> None:
    atomic_write_bytes(path, text.encode())


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return int(v)
    return v


def write_csv(path, header, rows) -> None:
    atomic_write_text(path, csv_text(header, rows))


def read_text_samples(path) -> np.ndarray:
    values = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            s = line.split("#", 1)[0].strip()
            if not s:
                continue
            try:
                values.append(int(s))
            except ValueError:
                raise DataFormatError(f"{path}, line {lineno}: not an integer: {s!r}", lineno) from None
    return np.array(values, dtype=np.int64)


def write_text_samples(path, samples) -> None:
    atomic_write_text(path, "".join(f"{int(v)}\n" for v in np.asarray(samples)))


def encode_binary_samples(samples, rate_hz: int) -> bytes:
    s = np.asarray(samples, dtype=np.int64)
    if s.size and (s.min() < -128 or s.max() > 127):
        raise DataFormatError("binary sample files hold signed 8-bit values; use text output")
    return _HEADER.pack(SAMPLE_MAGIC, int(rate_hz), len(s)) + s.astype("<i1").tobytes()


def decode_binary_samples(data: bytes) -> tuple[np.ndarray, int]:
    magic, rate, n = _parse_header(data, SAMPLE_MAGIC)
    body = data[_HEADER.size:]
    if len(body) != n:
        raise DataFormatError(
            f"header declares {n} samples but {len(body)} bytes follow", _HEADER.size + len(body)
        )
    return np.frombuffer(body, dtype="<i1").astype(np.int64), rate


def read_binary_samples(path) -> tuple[np.ndarray, int]:
    return decode_binary_samples(Path(path).read_bytes())


def write_binary_samples(path, samples, rate_hz) -> None:
    atomic_write_bytes(path, encode_binary_samples(samples, rate_hz))


def _parse_header(data: bytes, expected: bytes):
    if len(data) < _HEADER.size:
        raise DataFormatError(f"file shorter than the {_HEADER.size}-byte header", len(data))
    magic, rate, n = _HEADER.unpack_from(data)
    if magic != expected:
        raise DataFormatError(f"bad magic {magic!r}, expected {expected!r}", 0)
    return magic, rate, n


def pack_bits(bits, rate_hz: int) -> bytes:
    b = np.asarray(bits)
    if b.size and not np.all(np.abs(b) == 1):
        raise DataFormatError("bit streams hold only -1 and +1")
    packed = np.packbits((b > 0).astype(np.uint8), bitorder="little")
    return _HEADER.pack(BITS_MAGIC, int(rate_hz), len(b)) + packed.tobytes()


def unpack_bits(data: bytes) -> tuple[np.ndarray, int]:
    _, rate, n = _parse_header(data, BITS_MAGIC)
    body = np.frombuffer(data[_HEADER.size:], dtype=np.uint8)
    if len(body) != (n + 7) // 8:
        raise DataFormatError(f"header declares {n} bits but {len(body)} bytes follow",
                              _HEADER.size + len(body))
    bits = np.unpackbits(body, count=n, bitorder="little").astype(np.int8)
    return bits * 2 - 1, rate

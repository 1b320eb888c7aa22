"""Signal files: raw little-endian interleaved float32, or ``index,re,im`` CSV."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

_LE_COMPLEX64 = np.dtype("<c8")


def write_signal(path, samples) -> None:
    """Write samples as interleaved little-endian float32 (re, im, ...).

    A 2-D grid is written row-major.
    """
    np.ascontiguousarray(samples, dtype=_LE_COMPLEX64).tofile(path)


def read_signal(path, shape: tuple[int, ...] | None = None) -> np.ndarray:
    raw = np.fromfile(path, dtype=_LE_COMPLEX64)
    if Path(path).stat().st_size % _LE_COMPLEX64.itemsize:
        raise ValueError(f"{path}: size is not a whole number of complex float32 samples")
    x = raw.astype(np.complex64)
    if shape is not None:
        if int(np.prod(shape)) != x.size:
            raise ValueError(f"{path}: {x.size} samples cannot be viewed as {shape}")
        x = x.reshape(shape)
    return x


def write_signal_csv(path, samples) -> None:
    x = np.asarray(samples, dtype=np.complex64).reshape(-1)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["index", "re", "im"])
        for i, v in enumerate(x):
            writer.writerow([i, repr(float(v.real)), repr(float(v.imag))])


def read_signal_csv(path) -> np.ndarray:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["index", "re", "im"]:
            raise ValueError(f"{path}: expected header 'index,re,im'")
        rows = [(int(i), float(re), float(im)) for i, re, im in reader]
    rows.sort()
    if [r[0] for r in rows] != list(range(len(rows))):
        raise ValueError(f"{path}: indices must be 0..N-1 without gaps")
    return np.array([complex(re, im) for _, re, im in rows], dtype=np.complex64)


def load_signal(path, shape: tuple[int, ...] | None = None) -> np.ndarray:
    """Read either format, chosen by the ``.csv`` suffix."""
    if Path(path).suffix.lower() == ".csv":
        x = read_signal_csv(path)
        return x.reshape(shape) if shape is not None else x
    return read_signal(path, shape)


def save_signal(path, samples) -> None:
    if Path(path).suffix.lower() == ".csv":
        write_signal_csv(path, samples)
    else:
        write_signal(path, samples)

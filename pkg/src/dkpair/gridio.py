"""File format for user-supplied unitary contraction grids.

Two encodings share one logical layout: a header carrying the axis sizes
(time first, then momentum axes) and the matrix size m, followed by the
complex samples in row-major order (t, k1, ..., row, col).

Binary mode: magic b"DKGRID1\\n", uint32 little-endian ndim, ndim uint32
sizes, uint32 m, then re/im pairs of little-endian IEEE-754 float64.
Text mode: JSON {"shape": [...], "data": [[re, im], ...]} with the flat
row-major list.
"""

from __future__ import annotations

import json

import numpy as np

MAGIC = b"DKGRID1\n"


def write_contraction_grid(path: str, samples: np.ndarray, binary: bool = True):
    samples = np.asarray(samples, dtype=complex)
    if samples.ndim < 3 or samples.shape[-1] != samples.shape[-2]:
        raise ValueError("expected (nt, *sizes, m, m) samples")
    if binary:
        sizes = samples.shape[:-2]
        with open(path, "wb") as fh:
            fh.write(MAGIC)
            fh.write(np.uint32(len(sizes)).tobytes())
            fh.write(np.asarray(sizes, dtype="<u4").tobytes())
            fh.write(np.uint32(samples.shape[-1]).tobytes())
            inter = np.empty(samples.size * 2, dtype="<f8")
            inter[0::2] = samples.real.ravel()
            inter[1::2] = samples.imag.ravel()
            fh.write(inter.tobytes())
    else:
        flat = samples.ravel()
        payload = {"shape": list(samples.shape),
                   "data": [[v.real, v.imag] for v in flat]}
        with open(path, "w") as fh:
            json.dump(payload, fh)


def read_contraction_grid(path: str) -> np.ndarray:
    with open(path, "rb") as fh:
        head = fh.read(len(MAGIC))
        if head == MAGIC:
            ndim = int(np.frombuffer(fh.read(4), dtype="<u4")[0])
            sizes = tuple(int(v) for v in
                          np.frombuffer(fh.read(4 * ndim), dtype="<u4"))
            m = int(np.frombuffer(fh.read(4), dtype="<u4")[0])
            raw = np.frombuffer(fh.read(), dtype="<f8")
            expected = int(np.prod(sizes)) * m * m * 2
            if raw.size != expected:
                raise ValueError(f"truncated grid file: {raw.size} floats, "
                                 f"expected {expected}")
            data = raw[0::2] + 1j * raw[1::2]
            return data.reshape(*sizes, m, m)
    with open(path) as fh:
        payload = json.load(fh)
    shape = tuple(payload["shape"])
    flat = np.asarray(payload["data"], dtype=float)
    return (flat[:, 0] + 1j * flat[:, 1]).reshape(shape)

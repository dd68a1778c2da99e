"""RSFF field files.

Layout (little-endian): magic ``RSFF``, u32 version=1, u32 d, u32 ncomp,
u32 dims[d], f64 length[d], f64 time, then ncomp * prod(dims) f64 values,
component-major then row-major (axis 1 slowest).

K-forms reuse the same container with one component per stored tuple and
a JSON sidecar (``<file>.json``) listing the degree and the tuples in
lexicographic order.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .exterior import KForm
from .fields import Grid, ScalarField, VectorField

MAGIC = b"RSFF"
VERSION = 1


def write_field(path, f, time: float = 0.0) -> None:
    """Write a ScalarField, VectorField, or list of ScalarFields."""
    if isinstance(f, ScalarField):
        comps = [f]
    elif isinstance(f, VectorField):
        comps = list(f.components)
    else:
        comps = list(f)
    grid = comps[0].grid
    d = grid.d
    header = MAGIC + struct.pack("<III", VERSION, d, len(comps))
    header += struct.pack(f"<{d}I", *grid.dims)
    header += struct.pack(f"<{d}d", *grid.length)
    header += struct.pack("<d", float(time))
    with open(path, "wb") as fh:
        fh.write(header)
        for c in comps:
            fh.write(np.ascontiguousarray(c.values, dtype="<f8").tobytes())


def read_field(path):
    """Read an RSFF file; returns (VectorField, time)."""
    raw = Path(path).read_bytes()
    if raw[:4] != MAGIC:
        raise ValueError(f"{path}: not an RSFF file")
    ver, d, ncomp = struct.unpack_from("<III", raw, 4)
    if ver != VERSION:
        raise ValueError(f"{path}: unsupported version {ver}")
    off = 16
    dims = struct.unpack_from(f"<{d}I", raw, off)
    off += 4 * d
    length = struct.unpack_from(f"<{d}d", raw, off)
    off += 8 * d
    (time,) = struct.unpack_from("<d", raw, off)
    off += 8
    grid = Grid(dims, length)
    n = grid.npoints
    expected = off + 8 * n * ncomp
    if len(raw) != expected:
        raise ValueError(f"{path}: truncated ({len(raw)} bytes, expected {expected})")
    comps = []
    for i in range(ncomp):
        vals = np.frombuffer(raw, dtype="<f8", count=n, offset=off + 8 * n * i)
        comps.append(vals.reshape(dims).astype(np.float64))
    return VectorField.from_arrays(grid, comps), time


def write_kform(path, form: KForm, time: float = 0.0) -> None:
    grid = form.grid
    if grid is None and form.coeffs:
        raise ValueError("k-form serialization needs grid coefficients")
    tuples = form.tuples()
    comps = [form.coeffs[t] for t in tuples]
    if grid is None:
        raise ValueError("cannot serialize an empty form without a grid")
    write_field(path, comps or [ScalarField.zeros(grid)], time)
    sidecar = {"version": VERSION, "degree": form.degree, "d": form.d,
               "tuples": [list(t) for t in tuples]}
    Path(str(path) + ".json").write_text(json.dumps(sidecar))


def read_kform(path):
    vf, time = read_field(path)
    meta = json.loads(Path(str(path) + ".json").read_text())
    tuples = [tuple(t) for t in meta["tuples"]]
    coeffs = dict(zip(tuples, vf.components))
    return KForm(meta["d"], meta["degree"], coeffs), time

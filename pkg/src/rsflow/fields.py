"""Periodic uniform grids and sampled fields.

Scalar/vector/tensor fields on d-dimensional periodic boxes with
centered finite differences (2nd or 4th order), 4-point Lagrange
interpolation, and a registry of closed-form fields with exact
derivatives (backed by :class:`rsflow.trig.TrigPoly`).

Conventions: values are stored row-major (C order) with axis 1 slowest;
the default box length is 2*pi per axis so integer wavenumbers are
exactly periodic.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .trig import TrigPoly

TWO_PI = 2.0 * math.pi

MIN_DIM = 8  # 4th-order stencils need room; smaller grids are rejected


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid: ``dims`` samples per axis over ``length``."""

    dims: tuple
    length: tuple = None

    def __post_init__(self):
        dims = tuple(int(n) for n in np.atleast_1d(np.asarray(self.dims)))
        if not dims:
            raise ValueError("grid needs at least one axis")
        if any(n < MIN_DIM for n in dims):
            raise ValueError(f"all dims must be >= {MIN_DIM}, got {dims}")
        if self.length is None:
            length = (TWO_PI,) * len(dims)
        else:
            length = tuple(float(x) for x in np.atleast_1d(np.asarray(self.length)))
            if len(length) == 1:
                length = length * len(dims)
        if len(length) != len(dims):
            raise ValueError("length must have one entry per axis")
        if any(x <= 0 for x in length):
            raise ValueError("box lengths must be positive")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "length", length)

    @classmethod
    def cube(cls, d: int, n: int, length: float = TWO_PI) -> "Grid":
        return cls((n,) * d, (length,) * d)

    @property
    def d(self) -> int:
        return len(self.dims)

    @property
    def spacing(self) -> tuple:
        return tuple(L / n for L, n in zip(self.length, self.dims))

    @property
    def npoints(self) -> int:
        return int(np.prod(self.dims))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    def axis_coords(self, axis: int) -> np.ndarray:
        return np.arange(self.dims[axis]) * self.spacing[axis]

    def coords(self) -> list:
        """Sparse meshgrid-style coordinate arrays."""
        return list(np.meshgrid(*[self.axis_coords(a) for a in range(self.d)],
                                indexing="ij", sparse=True))

    def points(self) -> np.ndarray:
        """All node coordinates, shape dims + (d,)."""
        full = np.meshgrid(*[self.axis_coords(a) for a in range(self.d)], indexing="ij")
        return np.stack(full, axis=-1)


def _as_values(grid, values):
    v = np.asarray(values, dtype=np.float64)
    if v.shape != grid.dims:
        raise ValueError(f"values shape {v.shape} does not match grid dims {grid.dims}")
    if not np.all(np.isfinite(v)):
        raise ValueError("field contains NaN or Inf")
    return v


@dataclass(frozen=True, eq=False)
class ScalarField:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _as_values(self.grid, self.values))

    @classmethod
    def zeros(cls, grid: Grid) -> "ScalarField":
        return cls(grid, np.zeros(grid.dims))

    @classmethod
    def from_function(cls, grid: Grid, fn) -> "ScalarField":
        return cls(grid, fn(*grid.coords()) * np.ones(grid.dims))

    def diff(self, axis: int, scheme: str = "order4") -> "ScalarField":
        return partial_derivative(self, axis, scheme)

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values)))

    def l2(self) -> float:
        return float(np.sqrt(np.mean(self.values ** 2)))

    def __add__(self, other):
        if isinstance(other, ScalarField):
            self._check_grid(other)
            other = other.values
        return ScalarField(self.grid, self.values + other)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, ScalarField):
            self._check_grid(other)
            other = other.values
        return ScalarField(self.grid, self.values - other)

    def __rsub__(self, other):
        return ScalarField(self.grid, other - self.values)

    def __mul__(self, other):
        if isinstance(other, ScalarField):
            self._check_grid(other)
            other = other.values
        return ScalarField(self.grid, self.values * other)

    __rmul__ = __mul__

    def __neg__(self):
        return ScalarField(self.grid, -self.values)

    def _check_grid(self, other):
        if other.grid != self.grid:
            raise ValueError("fields live on different grids")


@dataclass(frozen=True, eq=False)
class VectorField:
    grid: Grid
    components: tuple

    def __post_init__(self):
        comps = tuple(self.components)
        for c in comps:
            if not isinstance(c, ScalarField):
                raise TypeError("components must be ScalarFields")
            if c.grid != self.grid:
                raise ValueError("all components must share one grid")
        object.__setattr__(self, "components", comps)

    @classmethod
    def from_arrays(cls, grid: Grid, arrays) -> "VectorField":
        return cls(grid, tuple(ScalarField(grid, a) for a in arrays))

    @property
    def ncomp(self) -> int:
        return len(self.components)

    def max_abs(self) -> float:
        return max(c.max_abs() for c in self.components)


@dataclass(frozen=True, eq=False)
class TensorField:
    grid: Grid
    entries: tuple  # rows of tuples of ScalarField

    def __post_init__(self):
        rows = tuple(tuple(r) for r in self.entries)
        for r in rows:
            for e in r:
                if e.grid != self.grid:
                    raise ValueError("all entries must share one grid")
            if len(r) != len(rows[0]):
                raise ValueError("ragged tensor entries")
        object.__setattr__(self, "entries", rows)

    @property
    def rows(self) -> int:
        return len(self.entries)

    @property
    def cols(self) -> int:
        return len(self.entries[0])

    def entry(self, r: int, c: int) -> ScalarField:
        return self.entries[r][c]

    def values(self) -> np.ndarray:
        """Stacked array of shape dims + (rows, cols)."""
        out = np.empty(self.grid.dims + (self.rows, self.cols))
        for r in range(self.rows):
            for c in range(self.cols):
                out[..., r, c] = self.entries[r][c].values
        return out


# ----------------------------------------------------------------------
# derivatives
# ----------------------------------------------------------------------

def _roll_derivative(values, axis, h, scheme):
    if scheme == "order4":
        return (-np.roll(values, -2, axis) + 8.0 * np.roll(values, -1, axis)
                - 8.0 * np.roll(values, 1, axis) + np.roll(values, 2, axis)) / (12.0 * h)
    if scheme == "order2":
        return (np.roll(values, -1, axis) - np.roll(values, 1, axis)) / (2.0 * h)
    raise ValueError(f"unknown scheme {scheme!r}")


def partial_derivative(f: ScalarField, axis: int, scheme: str = "order4") -> ScalarField:
    """Centered periodic finite-difference derivative along ``axis`` (0-based)."""
    if not 0 <= axis < f.grid.d:
        raise ValueError(f"axis {axis} out of range for {f.grid.d}-dimensional grid")
    h = f.grid.spacing[axis]
    return ScalarField(f.grid, _roll_derivative(f.values, axis, h, scheme))


def divergence(u: VectorField, scheme: str = "order4") -> ScalarField:
    if u.ncomp != u.grid.d:
        raise ValueError(f"divergence needs {u.grid.d} components, got {u.ncomp}")
    out = np.zeros(u.grid.dims)
    for a, c in enumerate(u.components):
        out += _roll_derivative(c.values, a, u.grid.spacing[a], scheme)
    return ScalarField(u.grid, out)


def gradient_tensor(u: VectorField, scheme: str = "order4") -> TensorField:
    """Velocity-gradient matrix; entry (r, c) = du_c / dx_r."""
    if u.ncomp != u.grid.d:
        raise ValueError(f"gradient tensor needs {u.grid.d} components, got {u.ncomp}")
    rows = []
    for r in range(u.grid.d):
        rows.append(tuple(partial_derivative(u.components[c], r, scheme)
                          for c in range(u.grid.d)))
    return TensorField(u.grid, tuple(rows))


# ----------------------------------------------------------------------
# interpolation
# ----------------------------------------------------------------------

def _lagrange4_weights(t):
    """Cubic Lagrange weights for nodes at offsets -1, 0, 1, 2."""
    return (
        -t * (t - 1.0) * (t - 2.0) / 6.0,
        (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0,
        -(t + 1.0) * t * (t - 2.0) / 2.0,
        (t + 1.0) * t * (t - 1.0) / 6.0,
    )


class Interpolator:
    """Periodic 4-point Lagrange interpolation at a fixed set of points.

    Precomputes indices and weights once so several fields sampled at the
    same points (velocity components, gradient entries) share the setup.
    Points landing on grid nodes reproduce nodal values bit-exactly.
    """

    def __init__(self, grid: Grid, points):
        pts = np.asarray(points, dtype=float)
        if pts.shape[-1] != grid.d:
            raise ValueError("point dimension does not match grid")
        self.grid = grid
        self.shape = pts.shape[:-1]
        flat = pts.reshape(-1, grid.d)
        self._idx = []
        self._w = []
        for a in range(grid.d):
            h = grid.spacing[a]
            n = grid.dims[a]
            s = flat[:, a] / h
            snapped = np.rint(s)
            s = np.where(np.abs(s - snapped) < 1e-9, snapped, s)
            i0 = np.floor(s).astype(np.int64)
            t = s - i0
            self._idx.append([np.mod(i0 + o, n) for o in (-1, 0, 1, 2)])
            self._w.append(_lagrange4_weights(t))

    def __call__(self, values: np.ndarray) -> np.ndarray:
        d = self.grid.d
        out = np.zeros(self._idx[0][0].shape)
        for offs in itertools.product(range(4), repeat=d):
            w = self._w[0][offs[0]]
            for a in range(1, d):
                w = w * self._w[a][offs[a]]
            idx = tuple(self._idx[a][offs[a]] for a in range(d))
            out = out + w * values[idx]
        return out.reshape(self.shape)


def interpolate(f: ScalarField, point) -> float | np.ndarray:
    """4-point Lagrange interpolation; points outside the box wrap around."""
    pt = np.asarray(point, dtype=float)
    scalar = pt.ndim == 1
    res = Interpolator(f.grid, pt if not scalar else pt[None, :])(f.values)
    return float(res[0]) if scalar else res


# ----------------------------------------------------------------------
# analytic fields
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class AnalyticField:
    """Closed-form vector field with exact derivatives."""

    name: str
    components: tuple  # TrigPoly per component
    pressure: TrigPoly = None

    @property
    def d(self) -> int:
        return self.components[0].d

    @property
    def ncomp(self) -> int:
        return len(self.components)

    def evaluate(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        return np.stack([c.eval(pts) for c in self.components], axis=-1)

    def derivative(self, points, axis: int) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        return np.stack([c.diff(axis).eval(pts) for c in self.components], axis=-1)

    def sample_component(self, grid: Grid, i: int) -> ScalarField:
        axes = [grid.axis_coords(a) for a in range(grid.d)]
        return ScalarField(grid, self.components[i].sample(axes))

    def sample(self, grid: Grid) -> VectorField:
        return VectorField(grid, tuple(self.sample_component(grid, i)
                                       for i in range(self.ncomp)))


def analytic_registry(name: str, seed: int = 0, kmax: int = 2, d: int = 3) -> AnalyticField:
    """Closed-form fields used as exact test beds.

    Names: ``taylor_green_2d``, ``rigid_rotation``, ``trig_random``,
    ``band_limited_random``.
    """
    if name == "taylor_green_2d":
        u1 = TrigPoly.sin(2, (1, 0)) * TrigPoly.cos(2, (0, 1))
        u2 = -1.0 * TrigPoly.cos(2, (1, 0)) * TrigPoly.sin(2, (0, 1))
        pressure = 0.25 * (TrigPoly.cos(2, (2, 0)) + TrigPoly.cos(2, (0, 2)))
        return AnalyticField(name, (u1, u2), pressure)
    if name == "rigid_rotation":
        return AnalyticField(name, (-1.0 * TrigPoly.sin(2, (0, 1)),
                                    TrigPoly.sin(2, (1, 0))))
    if name == "trig_random":
        rng = np.random.default_rng(seed)
        return AnalyticField(name, (TrigPoly.random(d, kmax, rng),))
    if name == "band_limited_random":
        rng = np.random.default_rng(seed)
        comps = tuple(TrigPoly.band_limited(d, kmax, rng) for _ in range(d))
        return AnalyticField(name, comps)
    raise ValueError(f"unknown analytic field {name!r}")


def restrict(f: ScalarField, coarse: Grid) -> ScalarField:
    """Restrict to a grid whose nodes are a stride-subsample of f's grid."""
    fine = f.grid
    if fine.d != coarse.d or fine.length != coarse.length:
        raise ValueError("grids are not nested")
    strides = []
    for nf, nc in zip(fine.dims, coarse.dims):
        if nf % nc:
            raise ValueError(f"dims {nf} not divisible by {nc}")
        strides.append(nf // nc)
    sl = tuple(slice(None, None, s) for s in strides)
    return ScalarField(coarse, f.values[sl])

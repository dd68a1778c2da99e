"""Differential-forms algebra over sampled or closed-form coefficients.

A :class:`KForm` stores coefficients over sorted 1-based index tuples
(absent tuple = zero coefficient).  Coefficients may be grid
:class:`~rsflow.fields.ScalarField` objects (finite-difference
derivatives) or :class:`~rsflow.trig.TrigPoly` objects (exact
derivatives); every operation here only needs ``+``, ``-``, ``*`` and
``.diff(axis)`` from the coefficient type, so the same code path serves
both the production route and the machine-precision oracle route.

Two independent Lie-derivative implementations are provided on purpose:
the contraction form ``iota_u d + d iota_u`` and the raw component
transport law.  Their agreement is one of the core consistency checks.
"""

from __future__ import annotations

import itertools
from bisect import bisect_left
from dataclasses import dataclass

import numpy as np

from .fields import (Grid, Interpolator, ScalarField, TensorField, VectorField)
from .trig import TrigPoly

__all__ = [
    "KForm", "DiscreteMap", "form_from_velocity", "velocity_from_form",
    "exterior_derivative", "wedge", "interior_product",
    "lie_derivative_cartan", "lie_derivative_components", "pullback",
    "antisym_matrix_rep",
]


def _check_tuple(tup, degree, d):
    if len(tup) != degree:
        raise ValueError(f"tuple {tup} has wrong length for degree {degree}")
    if any(tup[i] >= tup[i + 1] for i in range(len(tup) - 1)):
        raise ValueError(f"tuple {tup} is not strictly increasing")
    if tup and (tup[0] < 1 or tup[-1] > d):
        raise ValueError(f"tuple {tup} has axes outside 1..{d}")


class KForm:
    """Degree-k differential form as a sparse map tuple -> coefficient."""

    def __init__(self, d: int, degree: int, coeffs: dict | None = None):
        if degree < 0:
            raise ValueError("degree must be >= 0")
        self.d = int(d)
        self.degree = int(degree)
        self.coeffs: dict[tuple, object] = {}
        if coeffs:
            if degree > d and coeffs:
                nonzero = {t: c for t, c in coeffs.items()}
                if nonzero:
                    raise ValueError(f"degree {degree} > dimension {d} must be empty")
            for tup, c in coeffs.items():
                tup = tuple(int(a) for a in tup)
                _check_tuple(tup, degree, d)
                self.coeffs[tup] = c

    # -- bookkeeping ---------------------------------------------------
    @property
    def grid(self) -> Grid | None:
        for c in self.coeffs.values():
            if isinstance(c, ScalarField):
                return c.grid
        return None

    def tuples(self) -> list:
        return sorted(self.coeffs)

    def coeff(self, tup):
        return self.coeffs.get(tuple(tup))

    def map_coeffs(self, fn) -> "KForm":
        return KForm(self.d, self.degree, {t: fn(c) for t, c in self.coeffs.items()})

    # -- linear algebra ------------------------------------------------
    def __add__(self, other):
        if not isinstance(other, KForm):
            return NotImplemented
        if (other.d, other.degree) != (self.d, self.degree):
            raise ValueError("form dimension/degree mismatch")
        out = dict(self.coeffs)
        for t, c in other.coeffs.items():
            out[t] = out[t] + c if t in out else c
        return KForm(self.d, self.degree, out)

    def __sub__(self, other):
        return self + other.scale(-1.0)

    def scale(self, s) -> "KForm":
        return self.map_coeffs(lambda c: c * s)

    def __mul__(self, s):
        if np.isscalar(s):
            return self.scale(s)
        return NotImplemented

    __rmul__ = __mul__

    # -- norms ---------------------------------------------------------
    def max_abs(self) -> float:
        if not self.coeffs:
            return 0.0
        return max(c.max_abs() for c in self.coeffs.values())

    def l2(self) -> float:
        return float(np.sqrt(sum(c.l2() ** 2 for c in self.coeffs.values())))

    def __repr__(self):
        return f"KForm(d={self.d}, degree={self.degree}, tuples={self.tuples()})"


# ----------------------------------------------------------------------
# sign helpers on sorted tuples
# ----------------------------------------------------------------------

def _insert_axis(tup, a):
    """Insert axis a into sorted tuple; returns (sign, new_tuple) or None."""
    pos = bisect_left(tup, a)
    if pos < len(tup) and tup[pos] == a:
        return None
    return (-1) ** pos, tup[:pos] + (a,) + tup[pos:]


def _merge_sign(t1, t2):
    """Sign of sorting the concatenation t1 + t2; None if axes overlap."""
    if set(t1) & set(t2):
        return None
    sign = 1
    for a in t1:
        # count entries of t2 smaller than a, each costs one transposition
        sign *= (-1) ** bisect_left(t2, a)
    merged = tuple(sorted(t1 + t2))
    return sign, merged


def _sort_with_sign(seq):
    """Sort a sequence counting swaps; None on duplicates."""
    seq = list(seq)
    sign = 1
    for i in range(1, len(seq)):
        j = i
        while j > 0 and seq[j - 1] > seq[j]:
            seq[j - 1], seq[j] = seq[j], seq[j - 1]
            sign = -sign
            j -= 1
    for i in range(1, len(seq)):
        if seq[i - 1] == seq[i]:
            return None
    return sign, tuple(seq)


def _acc(store, tup, coef):
    store[tup] = store[tup] + coef if tup in store else coef


def _prune(store):
    return {t: c for t, c in store.items()
            if not (isinstance(c, TrigPoly) and not c.terms)}


def _velocity_components(u, d):
    """Velocity as a list of d coefficient slots (None = zero component)."""
    comps = list(u.components) if isinstance(u, VectorField) else list(u)
    if len(comps) > d:
        raise ValueError(f"velocity has {len(comps)} components for dimension {d}")
    return comps + [None] * (d - len(comps))


# ----------------------------------------------------------------------
# operations
# ----------------------------------------------------------------------

def form_from_velocity(u) -> KForm:
    """The velocity 1-form: coefficient of dx_i is u_i."""
    if isinstance(u, VectorField):
        d = u.grid.d
        comps = u.components
    else:
        comps = list(u)
        d = comps[0].d if isinstance(comps[0], TrigPoly) else comps[0].grid.d
    return KForm(d, 1, {(i + 1,): c for i, c in enumerate(comps)})


def velocity_from_form(form: KForm, ncomp: int | None = None) -> VectorField:
    """Inverse of :func:`form_from_velocity` for grid-coefficient 1-forms."""
    if form.degree != 1:
        raise ValueError("need a 1-form")
    grid = form.grid
    if grid is None:
        raise ValueError("form has no grid coefficients")
    if ncomp is None:
        ncomp = max(t[0] for t in form.coeffs)
    comps = []
    for i in range(1, ncomp + 1):
        c = form.coeff((i,))
        comps.append(c if c is not None else ScalarField.zeros(grid))
    return VectorField(grid, tuple(comps))


def exterior_derivative(omega: KForm) -> KForm:
    """d on sorted-tuple coefficients.

    For a 1-form this yields coefficient u_{n,m} - u_{m,n} on dx_m^dx_n.
    Applying d to a top-degree form returns the zero (k+1)-form by
    convention.
    """
    d = omega.d
    if omega.degree >= d:
        return KForm(d, omega.degree + 1, {})
    out: dict = {}
    for tup, c in omega.coeffs.items():
        for a in range(1, d + 1):
            ins = _insert_axis(tup, a)
            if ins is None:
                continue
            sign, ntup = ins
            _acc(out, ntup, c.diff(a - 1) * float(sign))
    return KForm(d, omega.degree + 1, _prune(out))


def wedge(alpha: KForm, beta: KForm) -> KForm:
    """Graded-anticommutative wedge product."""
    if alpha.d != beta.d:
        raise ValueError("dimension mismatch")
    ga = alpha.grid
    gb = beta.grid
    if ga is not None and gb is not None and ga != gb:
        raise ValueError("mismatched grids")
    deg = alpha.degree + beta.degree
    if deg > alpha.d:
        return KForm(alpha.d, deg, {})
    out: dict = {}
    for t1, c1 in alpha.coeffs.items():
        for t2, c2 in beta.coeffs.items():
            ms = _merge_sign(t1, t2)
            if ms is None:
                continue
            sign, merged = ms
            _acc(out, merged, (c1 * c2) * float(sign))
    return KForm(alpha.d, deg, _prune(out))


def interior_product(u, omega: KForm) -> KForm:
    """First-slot contraction iota_u; missing velocity components are zero."""
    if omega.degree < 1:
        raise ValueError("interior product needs degree >= 1")
    comps = _velocity_components(u, omega.d)
    out: dict = {}
    for tup, c in omega.coeffs.items():
        for m, axis in enumerate(tup):
            uc = comps[axis - 1]
            if uc is None:
                continue
            rest = tup[:m] + tup[m + 1:]
            _acc(out, rest, (uc * c) * float((-1) ** m))
    return KForm(omega.d, omega.degree - 1, _prune(out))


def lie_derivative_cartan(u, omega: KForm) -> KForm:
    """Cartan's formula: L_u = iota_u d + d iota_u."""
    term = interior_product(u, exterior_derivative(omega))
    if omega.degree >= 1:
        term = term + exterior_derivative(interior_product(u, omega))
    return term


def lie_derivative_components(u, omega: KForm) -> KForm:
    """Component transport law, independent of the Cartan route:

    (L_u w)_I = u^k d_k w_I + sum_m w_{I, slot m -> k} d_{i_m} u^k.
    """
    comps = _velocity_components(u, omega.d)
    out: dict = {}
    for tup, c in omega.coeffs.items():
        adv = None
        for k in range(omega.d):
            uk = comps[k]
            if uk is None:
                continue
            piece = uk * c.diff(k)
            adv = piece if adv is None else adv + piece
        if adv is not None:
            _acc(out, tup, adv)
        for m, i_m in enumerate(tup):
            u_slot = comps[i_m - 1]
            if u_slot is None:
                continue
            for k in range(1, omega.d + 1):
                srt = _sort_with_sign(tup[:m] + (k,) + tup[m + 1:])
                if srt is None:
                    continue
                sign, ntup = srt
                _acc(out, ntup, (c * u_slot.diff(k - 1)) * float(sign))
    return KForm(omega.d, omega.degree, _prune(out))


# ----------------------------------------------------------------------
# pullback
# ----------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class DiscreteMap:
    """Sampled map Phi with Jacobian: images and entry (r,c) = dPhi_c/da_r."""

    grid: Grid
    images: VectorField
    jacobian: TensorField

    def __post_init__(self):
        d = self.grid.d
        if self.images.ncomp != d:
            raise ValueError("map images must have d components")
        if (self.jacobian.rows, self.jacobian.cols) != (d, d):
            raise ValueError("jacobian must be d x d")

    def jacobian_det(self) -> np.ndarray:
        return np.linalg.det(self.jacobian.values())

    @classmethod
    def identity(cls, grid: Grid) -> "DiscreteMap":
        pts = grid.points()
        images = VectorField.from_arrays(grid, [pts[..., a] for a in range(grid.d)])
        eye = [[ScalarField(grid, np.full(grid.dims, 1.0 if r == c else 0.0))
                for c in range(grid.d)] for r in range(grid.d)]
        return cls(grid, images, TensorField(grid, tuple(tuple(r) for r in eye)))


def _minor_det(jac_entries, rows, cols, shape):
    """det of the Jacobian submatrix with given 0-based rows/cols, per node."""
    k = len(rows)
    out = np.zeros(shape)
    for perm in itertools.permutations(range(k)):
        sign = _sort_with_sign(perm)[0]
        term = np.ones(shape)
        for r, p in zip(rows, perm):
            term = term * jac_entries[r][cols[p]]
        out += sign * term
    return out


def pullback(dmap: DiscreteMap, omega: KForm) -> KForm:
    """Pull a grid k-form back through the map.

    Coefficients of omega are interpolated at the image points and
    contracted with k x k Jacobian minors.
    """
    grid = dmap.grid
    k = omega.degree
    if omega.d != grid.d:
        raise ValueError("dimension mismatch")
    src_grid = omega.grid
    if src_grid is None and omega.coeffs:
        raise ValueError("pullback needs grid coefficients")
    det = dmap.jacobian_det()
    if np.any(np.abs(det) < 1e-300):
        raise ValueError("singular jacobian in pullback")
    pts = np.stack([c.values for c in dmap.images.components], axis=-1)
    if not omega.coeffs:
        return KForm(grid.d, k, {})
    itp = Interpolator(src_grid, pts)
    sampled = {tup: itp(c.values) for tup, c in omega.coeffs.items()}
    if k == 0:
        return KForm(grid.d, 0, {(): ScalarField(grid, sampled[()])})
    jac = [[dmap.jacobian.entry(r, c).values for c in range(grid.d)]
           for r in range(grid.d)]
    out: dict = {}
    for dom in itertools.combinations(range(1, grid.d + 1), k):
        acc = None
        rows = [a - 1 for a in dom]
        for img, vals in sampled.items():
            cols = [a - 1 for a in img]
            minor = _minor_det(jac, rows, cols, grid.dims)
            term = vals * minor
            acc = term if acc is None else acc + term
        if acc is not None and np.any(acc):
            out[dom] = ScalarField(grid, acc)
    return KForm(grid.d, k, out)


def antisym_matrix_rep(omega: KForm, grid: Grid | None = None) -> TensorField:
    """Matrix of a 2-form: entry (m, n) = coefficient of dx_m^dx_n / 2."""
    if omega.degree != 2:
        raise ValueError("matrix representation needs a 2-form")
    grid = grid or omega.grid
    if grid is None:
        raise ValueError("need a grid (analytic form: pass one explicitly)")
    d = omega.d
    zero = np.zeros(grid.dims)
    arr = [[zero for _ in range(d)] for _ in range(d)]
    for (m, n), c in omega.coeffs.items():
        vals = c.values if isinstance(c, ScalarField) else \
            c.sample([grid.axis_coords(a) for a in range(grid.d)])
        arr[m - 1][n - 1] = 0.5 * vals
        arr[n - 1][m - 1] = -0.5 * vals
    rows = tuple(tuple(ScalarField(grid, arr[r][c]) for c in range(d))
                 for r in range(d))
    return TensorField(grid, rows)

"""Real-Schur-flow specifics.

The pairwise decomposition plan for the invariant vorticity components,
construction of the component 1-forms and 2-forms, the lower-block zero
pattern that defines a real Schur velocity gradient, the symmetric/
antisymmetric split, and the canonical block-diagonalization of an
antisymmetric matrix into pure-rotation planes.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .exterior import KForm, exterior_derivative, form_from_velocity
from .fields import ScalarField, TensorField, VectorField, _roll_derivative

__all__ = [
    "DecompPlan", "ZeroPattern", "CanonicalRotation",
    "decomposition_plan", "component_velocity_forms", "component_vorticities",
    "zero_pattern", "check_rsf", "sym_antisym_split", "canonical_antisymmetric",
]


@dataclass(frozen=True)
class DecompPlan:
    """Axis pairing behind the invariant decomposition.

    ``pairs[i] = (2i+1, 2i+2)`` 1-based; for odd d the final pair is
    (d, d+1) where axis d+1 is the padded constant-velocity axis and
    carries no data.
    """

    d: int
    m: int
    pairs: tuple
    padded: bool

    def component_axes(self, i: int) -> tuple:
        """Real axes (<= d) contributing to component i."""
        return tuple(a for a in self.pairs[i] if a <= self.d)

    def to_json(self) -> str:
        return json.dumps({"d": self.d, "M": self.m,
                           "pairs": [list(p) for p in self.pairs],
                           "padded": self.padded})


def decomposition_plan(d: int) -> DecompPlan:
    """Pair plan with M = floor((d+1)/2) components; requires d >= 3."""
    if d < 3:
        raise ValueError(f"decomposition requires dimension >= 3, got {d}")
    m = (d + 1) // 2
    pairs = tuple((2 * i + 1, 2 * i + 2) for i in range(m))
    plan = DecompPlan(d, m, pairs, padded=bool(d % 2))
    assert plan.m <= d * (d - 1) // 2
    return plan


def component_velocity_forms(u: VectorField, plan: DecompPlan) -> list:
    """The component 1-forms; their sum is the full velocity 1-form."""
    if u.ncomp != plan.d:
        raise ValueError(f"velocity has {u.ncomp} components, plan wants {plan.d}")
    forms = []
    for i in range(plan.m):
        coeffs = {(a,): u.components[a - 1] for a in plan.component_axes(i)}
        forms.append(KForm(plan.d, 1, coeffs))
    return forms


def component_vorticities(u: VectorField, plan: DecompPlan) -> list:
    """Component 2-forms: the exterior derivative of each component 1-form."""
    return [exterior_derivative(f) for f in component_velocity_forms(u, plan)]


@dataclass(frozen=True)
class ZeroPattern:
    """Entries (component c, derivative axis r) that vanish for an RSF field."""

    d: int
    required_zero: frozenset


def zero_pattern(d: int) -> ZeroPattern:
    if d < 3:
        raise ValueError("zero pattern defined for d >= 3")
    blocks = {}
    b = 0
    a = 1
    while a <= d:
        blocks[a] = b
        if a + 1 <= d:
            blocks[a + 1] = b
        a += 2
        b += 1
    req = frozenset((c, r) for c in range(1, d + 1) for r in range(1, d + 1)
                    if blocks[r] > blocks[c])
    return ZeroPattern(d, req)


def check_rsf(u: VectorField, pattern: ZeroPattern) -> float:
    """Max |du_c/dx_r| over the pattern's required-zero entries."""
    if u.ncomp != pattern.d:
        raise ValueError("component count does not match pattern dimension")
    worst = 0.0
    for c, r in pattern.required_zero:
        der = _roll_derivative(u.components[c - 1].values, r - 1,
                               u.grid.spacing[r - 1], "order4")
        worst = max(worst, float(np.max(np.abs(der))))
    return worst


def sym_antisym_split(g: TensorField):
    """G = D + A with D symmetric and A antisymmetric."""
    if g.rows != g.cols:
        raise ValueError("split needs a square tensor")
    n = g.rows
    dsym = [[None] * n for _ in range(n)]
    asym = [[None] * n for _ in range(n)]
    for r in range(n):
        for c in range(n):
            gv = g.entry(r, c).values
            gt = g.entry(c, r).values
            dsym[r][c] = ScalarField(g.grid, 0.5 * (gv + gt))
            asym[r][c] = ScalarField(g.grid, 0.5 * (gv - gt))
    return (TensorField(g.grid, tuple(tuple(r) for r in dsym)),
            TensorField(g.grid, tuple(tuple(r) for r in asym)))


# ----------------------------------------------------------------------
# canonical form of an antisymmetric matrix
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class CanonicalRotation:
    """Orthogonal Q with Q^T A Q block diagonal, blocks [[0,-t],[t,0]]."""

    q: np.ndarray
    rates: tuple
    planes: tuple  # (column index pairs of q) per positive rate

    def to_json(self) -> str:
        return json.dumps({"d": int(self.q.shape[0]),
                           "rates": list(self.rates),
                           "planes": [list(p) for p in self.planes],
                           "Q": self.q.ravel().tolist()})


def jacobi_eigh(s: np.ndarray, max_sweeps: int = 30, tol: float = 1e-13):
    """Cyclic Jacobi eigendecomposition of a symmetric matrix.

    Returns (eigenvalues, eigenvectors-as-columns).  Deterministic cyclic
    sweep order; raises if the off-diagonal norm has not dropped below
    ``tol * ||s||_F`` after ``max_sweeps`` sweeps.
    """
    a = np.array(s, dtype=float)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError("matrix must be square")
    scale = max(np.linalg.norm(a), 1e-300)
    v = np.eye(n)
    for _ in range(max_sweeps):
        off = math.sqrt(sum(a[p, q] ** 2 for p in range(n) for q in range(p + 1, n)))
        if off <= 0.5 * tol * scale:
            break
        for p in range(n):
            for q in range(p + 1, n):
                if abs(a[p, q]) <= 1e-300:
                    continue
                phi = 0.5 * math.atan2(2.0 * a[p, q], a[q, q] - a[p, p])
                c, sn = math.cos(phi), math.sin(phi)
                rot = np.eye(n)
                rot[p, p] = c
                rot[q, q] = c
                rot[p, q] = sn
                rot[q, p] = -sn
                a = rot.T @ a @ rot
                v = v @ rot
    else:
        raise RuntimeError("Jacobi iteration did not converge")
    return np.diag(a).copy(), v


def _orthogonalize(vec, basis):
    for b in basis:
        vec = vec - (b @ vec) * b
    nrm = np.linalg.norm(vec)
    return vec / nrm if nrm > 1e-12 else None


def canonical_antisymmetric(a: np.ndarray) -> CanonicalRotation:
    """Orthogonal congruence of an antisymmetric matrix to rotation blocks.

    Eigen-decomposes A^T A by cyclic Jacobi; paired eigenvalues theta^2
    identify the rotation planes.  Plane bases are fixed deterministically
    (Gram-Schmidt in eigenvector order) with orientation chosen so each
    block carries +theta below the diagonal.  Rates are sorted descending;
    zero rates fill the remaining floor(d/2) slots.
    """
    a = np.asarray(a, dtype=float)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError("matrix must be square")
    norm = max(np.linalg.norm(a), 1.0)
    if np.max(np.abs(a + a.T)) > 1e-12 * norm:
        raise ValueError("matrix is not antisymmetric")
    w, v = jacobi_eigh(a.T @ a)
    order = np.argsort(w)[::-1]
    cols = [v[:, j] for j in order]
    rate_floor = 1e-9 * norm
    chosen: list[np.ndarray] = []
    planes = []
    for col in cols:
        if len(chosen) >= n - 1:
            break
        v1 = _orthogonalize(col, chosen)
        if v1 is None:
            continue
        img = a @ v1
        theta = float(np.linalg.norm(img))
        if theta <= rate_floor:
            continue
        v2 = _orthogonalize(img / theta, chosen + [v1])
        if v2 is None:
            continue
        planes.append((v1, v2, theta))
        chosen.extend([v1, v2])
    planes.sort(key=lambda p: -p[2])
    columns = []
    for v1, v2, _ in planes:
        columns.extend([v1, v2])
    # complete with an orthonormal kernel basis
    for e in np.eye(n):
        if len(columns) == n:
            break
        k = _orthogonalize(e, columns)
        if k is not None:
            columns.append(k)
    q = np.stack(columns, axis=1)
    rates = [theta for _, _, theta in planes] + [0.0] * (n // 2 - len(planes))
    plane_idx = tuple((2 * i, 2 * i + 1) for i in range(len(planes)))
    rot = CanonicalRotation(q, tuple(rates), plane_idx)
    _validate_canonical(a, rot)
    return rot


def _validate_canonical(a, rot):
    n = a.shape[0]
    q = rot.q
    if np.max(np.abs(q.T @ q - np.eye(n))) > 1e-12:
        raise RuntimeError("canonical basis lost orthogonality")
    b = q.T @ a @ q
    ref = np.zeros_like(b)
    for i, theta in enumerate(t for t in rot.rates if t > 0):
        ref[2 * i + 1, 2 * i] = theta
        ref[2 * i, 2 * i + 1] = -theta
    if np.max(np.abs(b - ref)) > 1e-10 * max(1.0, np.max(np.abs(a))):
        raise RuntimeError("canonical form validation failed")

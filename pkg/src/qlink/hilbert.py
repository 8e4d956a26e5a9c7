"""Dense operators and states on composite finite-dimensional Hilbert spaces.

A :class:`SpaceLayout` records the ordered subsystem dimensions (for this
package typically ``[3, 2, 3, 2]``: sender qutrit, sender transfer resonator,
receiver qutrit, receiver transfer resonator). Operators and density matrices
carry their layout, and every binary operation checks layout equality so that
objects living on different spaces can never be silently combined.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

HERMITICITY_TOL = 1e-10
TRACE_TOL = 1e-8
EIGENVALUE_TOL = 1e-8


class LayoutMismatchError(ValueError):
    """Raised when operands live on different space layouts."""


class StateValidationError(ValueError):
    """Raised when a matrix does not satisfy the density-matrix invariants."""


@dataclass(frozen=True)
class SpaceLayout:
    """Ordered tensor factors of a composite Hilbert space.

    Parameters
    ----------
    dims:
        Subsystem dimensions in tensor order.
    labels:
        Optional per-factor role tags (e.g. ``"sender-qutrit"``). Purely
        descriptive; equality of layouts is decided by ``dims`` and labels.
    """

    dims: tuple[int, ...]
    labels: tuple[str, ...] = field(default=())

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        object.__setattr__(self, "dims", dims)
        if not dims or any(d < 1 for d in dims):
            raise ValueError(f"invalid factor dimensions {dims}")
        labels = tuple(self.labels)
        if labels and len(labels) != len(dims):
            raise ValueError("labels must match the number of factors")
        object.__setattr__(self, "labels", labels)

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims))

    def __len__(self) -> int:
        return len(self.dims)


def _check_same_layout(a, b):
    if a.layout != b.layout:
        raise LayoutMismatchError(f"layout mismatch: {a.layout} vs {b.layout}")


@dataclass(frozen=True)
class Operator:
    """Dense complex matrix tagged with its space layout."""

    layout: SpaceLayout
    mat: np.ndarray

    def __post_init__(self):
        mat = np.asarray(self.mat, dtype=complex)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValueError(f"operator must be square, got shape {mat.shape}")
        if mat.shape[0] != self.layout.dim:
            raise ValueError(
                f"matrix dimension {mat.shape[0]} does not match layout dimension {self.layout.dim}")
        object.__setattr__(self, "mat", mat)

    def dag(self) -> "Operator":
        return Operator(self.layout, self.mat.conj().T)

    def __add__(self, other: "Operator") -> "Operator":
        _check_same_layout(self, other)
        return Operator(self.layout, self.mat + other.mat)

    def __sub__(self, other: "Operator") -> "Operator":
        _check_same_layout(self, other)
        return Operator(self.layout, self.mat - other.mat)

    def __mul__(self, scalar) -> "Operator":
        return Operator(self.layout, self.mat * scalar)

    __rmul__ = __mul__

    def __matmul__(self, other: "Operator") -> "Operator":
        _check_same_layout(self, other)
        return Operator(self.layout, self.mat @ other.mat)

    @property
    def is_hermitian(self) -> bool:
        return bool(np.max(np.abs(self.mat - self.mat.conj().T)) < HERMITICITY_TOL)


@dataclass(frozen=True)
class DensityMatrix:
    """Positive, unit-trace, Hermitian state on a composite space."""

    layout: SpaceLayout
    mat: np.ndarray

    def __post_init__(self):
        mat = np.asarray(self.mat, dtype=complex)
        if mat.shape != (self.layout.dim, self.layout.dim):
            raise ValueError(f"state shape {mat.shape} does not match layout {self.layout.dims}")
        object.__setattr__(self, "mat", mat)

    def validate(self, eig_tol: float = EIGENVALUE_TOL) -> "DensityMatrix":
        """Check the density-matrix invariants, raising on violation."""
        herm = np.max(np.abs(self.mat - self.mat.conj().T))
        if herm > HERMITICITY_TOL:
            raise StateValidationError(f"not Hermitian: max |rho - rho^†| = {herm:.3e}")
        tr = np.trace(self.mat).real
        if abs(tr - 1.0) > TRACE_TOL:
            raise StateValidationError(f"trace {tr!r} deviates from 1")
        lo = np.linalg.eigvalsh((self.mat + self.mat.conj().T) / 2).min()
        if lo < -eig_tol:
            raise StateValidationError(f"negative eigenvalue {lo:.3e}")
        return self

    def expect(self, op: Operator) -> complex:
        _check_same_layout(self, op)
        return complex(np.trace(op.mat @ self.mat))

    @property
    def purity(self) -> float:
        return float(np.trace(self.mat @ self.mat).real)


@dataclass(frozen=True)
class CollapseChannel:
    """Lindblad collapse operator, pre-scaled by the square root of its rate.

    The wrapped operator has units of sqrt(rate) in rad/ns, so that
    ``D[op]`` contributes the full dissipator without extra prefactors.
    """

    op: Operator

    def __post_init__(self):
        if not np.all(np.isfinite(self.op.mat)):
            raise ValueError("collapse operator has non-finite entries")

    @property
    def layout(self) -> SpaceLayout:
        return self.op.layout


def tensor(ops: list[Operator]) -> Operator:
    """Kronecker product of operators in listed order.

    The resulting layout is the concatenation of the factor layouts.
    """
    if not ops:
        raise ValueError("tensor of an empty operator list")
    dims: tuple[int, ...] = ()
    labels: tuple[str, ...] = ()
    mat = np.array([[1.0 + 0.0j]])
    labelled = all(o.layout.labels for o in ops)
    for o in ops:
        dims = dims + o.layout.dims
        if labelled:
            labels = labels + o.layout.labels
        mat = np.kron(mat, o.mat)
    return Operator(SpaceLayout(dims, labels if labelled else ()), mat)


def partial_trace(rho: DensityMatrix, keep: list[int]) -> DensityMatrix:
    """Trace out all factors not listed in ``keep`` (kept order preserved).

    ``keep`` must be strictly increasing factor indices; the reduced state's
    layout keeps the corresponding dims and labels.
    """
    dims = rho.layout.dims
    n = len(dims)
    keep = list(keep)
    if not keep or any(k < 0 or k >= n for k in keep):
        raise ValueError(f"invalid keep indices {keep} for {n} factors")
    if sorted(set(keep)) != keep:
        raise ValueError("keep indices must be strictly increasing and unique")
    tensor_form = rho.mat.reshape(dims + dims)
    drop = [i for i in range(n) if i not in keep]
    for count, i in enumerate(drop):
        axis = i - count  # axes shift left after each trace
        tensor_form = np.trace(tensor_form, axis1=axis, axis2=axis + tensor_form.ndim // 2)
    kept_dims = tuple(dims[k] for k in keep)
    kept_labels = tuple(rho.layout.labels[k] for k in keep) if rho.layout.labels else ()
    d = int(np.prod(kept_dims))
    return DensityMatrix(SpaceLayout(kept_dims, kept_labels), tensor_form.reshape(d, d))


# ---------------------------------------------------------------------------
# Elementary building blocks


def identity(layout: SpaceLayout) -> Operator:
    return Operator(layout, np.eye(layout.dim))


def destroy(dim: int, label: str = "") -> Operator:
    """Bosonic annihilation operator truncated to ``dim`` levels."""
    mat = np.diag(np.sqrt(np.arange(1, dim, dtype=float)), k=1)
    return Operator(SpaceLayout((dim,), (label,) if label else ()), mat)


def number(dim: int, label: str = "") -> Operator:
    mat = np.diag(np.arange(dim, dtype=float))
    return Operator(SpaceLayout((dim,), (label,) if label else ()), mat)


def ketbra(dim: int, i: int, j: int, label: str = "") -> Operator:
    """|i><j| on a ``dim``-level system."""
    mat = np.zeros((dim, dim), dtype=complex)
    mat[i, j] = 1.0
    return Operator(SpaceLayout((dim,), (label,) if label else ()), mat)


def basis_state(dim: int, i: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[i] = 1.0
    return v


def pure_state(layout: SpaceLayout, ket: np.ndarray) -> DensityMatrix:
    ket = np.asarray(ket, dtype=complex)
    ket = ket / np.linalg.norm(ket)
    return DensityMatrix(layout, np.outer(ket, ket.conj()))


def embed(op: Operator, layout: SpaceLayout, index: int) -> Operator:
    """Lift a single-factor operator onto ``layout`` at factor ``index``."""
    if op.layout.dims != (layout.dims[index],):
        raise ValueError(
            f"operator dimension {op.layout.dims} does not fit factor {index} of {layout.dims}")
    factors = []
    for k, d in enumerate(layout.dims):
        if k == index:
            factors.append(op.mat)
        else:
            factors.append(np.eye(d))
    mat = factors[0]
    for f in factors[1:]:
        mat = np.kron(mat, f)
    return Operator(layout, mat)


def expect(op: Operator, rho: DensityMatrix) -> complex:
    return rho.expect(op)

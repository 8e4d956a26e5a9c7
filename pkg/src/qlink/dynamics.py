"""Lindblad master-equation integration with a fixed-step 4th-order Runge-Kutta.

The right-hand side is

    drho/dt = -i[H(t), rho] + sum_k D[L_k] rho,
    D[L] rho = L rho L^dag - {L^dag L, rho}/2,

with all rates angular (rad/ns). Time-dependent Hamiltonian terms are supplied
as a static part plus coefficient-sampled Hermitian terms; coefficients are
linearly interpolated at the Runge-Kutta substep times. The step size obeys
``h <= 1/(50 * max_rate)``, which keeps the integration deterministic and
bit-stable for golden tests.

Internally the generator is compiled once into sparse superoperators acting on
the row-major vectorized state, so a step costs a handful of sparse matvecs
regardless of how many collapse channels are present.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .hilbert import (
    CollapseChannel,
    DensityMatrix,
    LayoutMismatchError,
    Operator,
    SpaceLayout,
)

TRACE_DRIFT_TOL = 1e-6
STEP_SAFETY = 50.0


class IntegrationError(RuntimeError):
    """Raised when the integration leaves the valid-state manifold."""

    def __init__(self, message: str, time: float):
        super().__init__(f"{message} at t = {time:.6g} ns")
        self.time = time


@dataclass(frozen=True)
class DriveTerm:
    """Hermitian operator multiplied by a real, sampled coefficient.

    ``times`` (ns) and ``values`` (rad/ns) define the coefficient on a grid;
    evaluation outside the grid clamps to the endpoint values.
    """

    op: Operator
    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.ndim != 1 or t.shape != v.shape:
            raise ValueError("times and values must be matching 1-d arrays")
        if np.any(np.diff(t) <= 0):
            raise ValueError("times must be strictly increasing")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    def at(self, t) -> np.ndarray:
        return np.interp(t, self.times, self.values)

    @property
    def peak(self) -> float:
        return float(np.max(np.abs(self.values)))


@dataclass(frozen=True)
class Hamiltonian:
    """Static Hamiltonian plus optional coefficient-driven terms."""

    static: Operator
    drives: tuple[DriveTerm, ...] = ()

    @property
    def layout(self) -> SpaceLayout:
        return self.static.layout

    def at(self, t: float) -> np.ndarray:
        mat = self.static.mat
        for d in self.drives:
            mat = mat + float(d.at(t)) * d.op.mat
        return mat


@dataclass
class Trajectory:
    """Recorded expectation values and final state of one evolution."""

    times: np.ndarray
    expectations: dict[str, np.ndarray]
    final: DensityMatrix
    snapshots: list[DensityMatrix] = field(default_factory=list)
    snapshot_times: np.ndarray | None = None


def lindblad_rhs(hamiltonian: Operator, channels: list[CollapseChannel],
                 rho: DensityMatrix) -> np.ndarray:
    """Single evaluation of the master-equation right-hand side."""
    for ch in channels:
        if ch.layout != rho.layout:
            raise LayoutMismatchError("channel layout differs from state layout")
    if hamiltonian.layout != rho.layout:
        raise LayoutMismatchError("Hamiltonian layout differs from state layout")
    h = hamiltonian.mat
    r = rho.mat
    out = -1j * (h @ r - r @ h)
    for ch in channels:
        l = ch.op.mat
        ldl = l.conj().T @ l
        out = out + l @ r @ l.conj().T - 0.5 * (ldl @ r + r @ ldl)
    return out


def _liouvillian_static(hamiltonian: np.ndarray, channels: list[np.ndarray]) -> sp.csr_matrix:
    """Sparse superoperator of the time-independent generator (row-major vec)."""
    d = hamiltonian.shape[0]
    eye = sp.identity(d, format="csr")
    ldl = np.zeros((d, d), dtype=complex)
    for l in channels:
        ldl += l.conj().T @ l
    g = -1j * hamiltonian - 0.5 * ldl
    s = sp.kron(sp.csr_matrix(g), eye) + sp.kron(eye, sp.csr_matrix(g.conj()))
    for l in channels:
        s = s + sp.kron(sp.csr_matrix(l), sp.csr_matrix(l.conj()))
    return s.tocsr()


def _commutator_super(v: np.ndarray) -> sp.csr_matrix:
    """Superoperator of rho -> -i[V, rho] acting on the row-major vec(rho)."""
    d = v.shape[0]
    eye = sp.identity(d, format="csr")
    s = sp.kron(sp.csr_matrix(-1j * v), eye) + sp.kron(eye, sp.csr_matrix(1j * v.T))
    return s.tocsr()


def _max_rate(hamiltonian: Hamiltonian, channels: list[CollapseChannel]) -> float:
    """Conservative bound on the fastest rate in the generator (rad/ns)."""
    rates = [np.linalg.norm(hamiltonian.static.mat, 2)]
    for d in hamiltonian.drives:
        rates.append(d.peak * np.linalg.norm(d.op.mat, 2))
    for ch in channels:
        l = ch.op.mat
        rates.append(np.linalg.norm(l.conj().T @ l, 2))
    return float(max(rates))


def evolve(rho0: DensityMatrix,
           hamiltonian: Hamiltonian | Operator,
           channels: list[CollapseChannel],
           record_times: np.ndarray,
           observers: dict[str, Operator] | None = None,
           max_rate: float | None = None,
           snapshot_stride: int = 0) -> Trajectory:
    """Integrate the master equation and record observer expectations.

    Parameters
    ----------
    rho0:
        Initial state; validated before integration.
    hamiltonian:
        Static :class:`~qlink.hilbert.Operator` or :class:`Hamiltonian` with
        drive terms.
    channels:
        Collapse channels (operators pre-scaled by sqrt(rate)).
    record_times:
        Strictly increasing times (ns) at which expectations are stored; the
        first entry is the initial time.
    observers:
        Named operators whose expectations ``Tr(O rho)`` are recorded.
    max_rate:
        Denominator of the step-size rule (rad/ns). When omitted it is
        estimated from spectral norms of the generator pieces; protocol code
        passes the model's known rate bound instead.
    snapshot_stride:
        If positive, store a full state snapshot every that many record points.

    Raises
    ------
    IntegrationError
        If the state trace drifts by more than ``1e-6`` (reported with the
        offending time) or the state leaves the positivity tolerance.
    """
    if isinstance(hamiltonian, Operator):
        hamiltonian = Hamiltonian(hamiltonian)
    record_times = np.asarray(record_times, dtype=float)
    if record_times.ndim != 1 or record_times.size < 2 or np.any(np.diff(record_times) <= 0):
        raise ValueError("record_times must be strictly increasing with at least two entries")
    rho0.validate()
    if hamiltonian.layout != rho0.layout:
        raise LayoutMismatchError("Hamiltonian layout differs from state layout")
    for ch in channels:
        if ch.layout != rho0.layout:
            raise LayoutMismatchError("channel layout differs from state layout")

    rate = max_rate if max_rate is not None else _max_rate(hamiltonian, channels)
    span = record_times[-1] - record_times[0]
    h_max = 1.0 / (STEP_SAFETY * rate) if rate > 0 else span

    d = rho0.layout.dim
    s_static = _liouvillian_static(hamiltonian.static.mat, [ch.op.mat for ch in channels])
    s_drives = [_commutator_super(dt.op.mat) for dt in hamiltonian.drives]
    coeff_fns = list(hamiltonian.drives)

    observers = observers or {}
    obs_names = list(observers)
    obs_vecs = [observers[name].mat.T.reshape(-1) for name in obs_names]
    records = {name: np.zeros(record_times.size, dtype=complex) for name in obs_names}

    snapshots: list[DensityMatrix] = []
    snap_times: list[float] = []
    diag_idx = np.arange(d) * (d + 1)

    def rhs(v, coeffs):
        out = s_static @ v
        for c, s in zip(coeffs, s_drives):
            if c != 0.0:
                out += c * (s @ v)
        return out

    v = rho0.mat.reshape(-1).astype(complex)
    for k, name in enumerate(obs_names):
        records[name][0] = obs_vecs[k] @ v
    if snapshot_stride > 0:
        snapshots.append(DensityMatrix(rho0.layout, v.reshape(d, d).copy()))
        snap_times.append(record_times[0])

    for seg in range(record_times.size - 1):
        t0, t1 = record_times[seg], record_times[seg + 1]
        n_sub = max(1, int(np.ceil((t1 - t0) / h_max - 1e-12)))
        h = (t1 - t0) / n_sub
        t = t0
        for _ in range(n_sub):
            c0 = [f.at(t) for f in coeff_fns]
            cm = [f.at(t + 0.5 * h) for f in coeff_fns]
            c1 = [f.at(t + h) for f in coeff_fns]
            k1 = rhs(v, c0)
            k2 = rhs(v + (0.5 * h) * k1, cm)
            k3 = rhs(v + (0.5 * h) * k2, cm)
            k4 = rhs(v + h * k3, c1)
            v = v + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            t += h
        drift = abs(v[diag_idx].sum().real - 1.0)
        if drift > TRACE_DRIFT_TOL or not np.all(np.isfinite(v)):
            raise IntegrationError(f"trace drift {drift:.3e} exceeds {TRACE_DRIFT_TOL}", t1)
        for k, name in enumerate(obs_names):
            records[name][seg + 1] = obs_vecs[k] @ v
        if snapshot_stride > 0 and (seg + 1) % snapshot_stride == 0:
            snapshots.append(DensityMatrix(rho0.layout, v.reshape(d, d).copy()))
            snap_times.append(t1)

    mat = v.reshape(d, d)
    mat = 0.5 * (mat + mat.conj().T)  # strip integrator-scale asymmetry
    final = DensityMatrix(rho0.layout, mat)
    final.validate(eig_tol=1e-6)
    return Trajectory(
        times=record_times,
        expectations=records,
        final=final,
        snapshots=snapshots,
        snapshot_times=np.asarray(snap_times) if snap_times else None,
    )

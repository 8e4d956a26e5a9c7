"""Three-state readout modeling and state/process tomography.

Readout follows the dispersive single-shot scheme: each qutrit level produces
a Gaussian blob on the IQ plane. Calibration fits a two-component Gaussian
mixture per prepared state, keeps the heavier component's center, and builds a
nearest-center (1-NN / Voronoi) classifier from the three centers. Classifying
the calibration data itself yields the assignment matrix ``R`` with
``R[i, j] = P(assign j | prepared i)``; measured populations are corrected by
inverting ``R^T`` and, when the result leaves the probability simplex,
projecting back onto it (flagged).

State tomography maximizes the multinomial likelihood over density matrices
parameterized through a triangular square root ``rho = T T^dag / tr``;
process tomography projects the reconstructed qutrit states onto the qubit
subspace and inverts linearly in the Pauli basis.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize
from sklearn.mixture import GaussianMixture

PAULIS = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}
PAULI_LIST = [PAULIS[k] for k in "IXYZ"]


class CalibrationError(RuntimeError):
    """Raised when readout calibration cannot produce a usable classifier."""


@dataclass(frozen=True)
class BlobModel:
    """Gaussian IQ response of the three qutrit states.

    ``centers``: (3, 2) means; ``covs``: (3, 2, 2) covariances.
    """

    centers: np.ndarray
    covs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.centers, dtype=float)
        v = np.asarray(self.covs, dtype=float)
        if c.shape != (3, 2) or v.shape != (3, 2, 2):
            raise ValueError("centers must be (3,2) and covs (3,2,2)")
        for k in range(3):
            if np.linalg.det(v[k]) <= 0:
                raise ValueError(f"degenerate covariance for state {k}")
        object.__setattr__(self, "centers", c)
        object.__setattr__(self, "covs", v)


@dataclass(frozen=True)
class Classifier:
    """Nearest-center discriminator over the IQ plane (Voronoi regions)."""

    centers: np.ndarray  # (3, 2)

    def __post_init__(self):
        c = np.asarray(self.centers, dtype=float)
        if c.shape != (3, 2):
            raise ValueError("classifier needs three IQ centers")
        d01 = np.linalg.norm(c[0] - c[1])
        d02 = np.linalg.norm(c[0] - c[2])
        d12 = np.linalg.norm(c[1] - c[2])
        if min(d01, d02, d12) < 1e-12:
            raise CalibrationError("two readout centers coincide")
        object.__setattr__(self, "centers", c)

    def classify(self, shots: np.ndarray) -> np.ndarray:
        shots = np.atleast_2d(np.asarray(shots, dtype=float))
        d2 = ((shots[:, None, :] - self.centers[None, :, :]) ** 2).sum(axis=2)
        return np.argmin(d2, axis=1)

    def populations(self, shots: np.ndarray) -> np.ndarray:
        labels = self.classify(shots)
        return np.bincount(labels, minlength=3) / labels.size


@dataclass(frozen=True)
class AssignmentMatrix:
    """Readout confusion matrix, rows = prepared state, columns = assigned."""

    r: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.r, dtype=float)
        if r.shape != (3, 3):
            raise ValueError("assignment matrix must be 3x3")
        if np.any(r < -1e-12) or np.any(r > 1 + 1e-12):
            raise ValueError("assignment probabilities must lie in [0, 1]")
        if np.max(np.abs(r.sum(axis=1) - 1.0)) > 1e-9:
            raise ValueError("assignment-matrix rows must sum to 1")
        object.__setattr__(self, "r", r)

    @property
    def condition_number(self) -> float:
        return float(np.linalg.cond(self.r))


def synth_shots(populations: np.ndarray, blobs: BlobModel, n: int,
                seed: int) -> np.ndarray:
    """Draw IQ shots: state sampled from ``populations``, then the blob.

    Deterministic under ``seed``; returns an (n, 2) array.
    """
    populations = np.asarray(populations, dtype=float)
    if populations.shape != (3,) or abs(populations.sum() - 1.0) > 1e-9 or np.any(populations < -1e-12):
        raise ValueError("populations must be a probability 3-vector")
    rng = np.random.default_rng(seed)
    if n == 0:
        return np.zeros((0, 2))
    states = rng.choice(3, size=n, p=populations)
    shots = np.zeros((n, 2))
    for k in range(3):
        mask = states == k
        cnt = int(mask.sum())
        if cnt:
            shots[mask] = rng.multivariate_normal(blobs.centers[k], blobs.covs[k], size=cnt)
    return shots


def calibrate(reference_shots: list[np.ndarray], seed: int = 0,
              max_iter: int = 100) -> tuple[Classifier, AssignmentMatrix]:
    """Build the classifier and assignment matrix from reference data.

    ``reference_shots[k]`` holds the single shots recorded with the qutrit
    prepared in state ``k`` (at least 1000 each). Per state a two-component
    Gaussian mixture is fit by expectation-maximization (k-means init,
    deterministic under ``seed``) and the heavier component's center is kept;
    the secondary component absorbs preparation errors and decay during
    readout.
    """
    if len(reference_shots) != 3:
        raise ValueError("need reference shots for exactly three prepared states")
    centers = np.zeros((3, 2))
    for k, shots in enumerate(reference_shots):
        shots = np.asarray(shots, dtype=float)
        if shots.shape[0] < 1000:
            raise ValueError(f"state {k}: need >= 1000 reference shots, got {shots.shape[0]}")
        gmm = GaussianMixture(n_components=2, max_iter=max_iter, init_params="kmeans",
                              random_state=seed, reg_covar=1e-10)
        gmm.fit(shots)
        if not gmm.converged_:
            raise CalibrationError(f"EM did not converge for prepared state {k}")
        centers[k] = gmm.means_[int(np.argmax(gmm.weights_))]
    clf = Classifier(centers)
    r = np.zeros((3, 3))
    for k, shots in enumerate(reference_shots):
        labels = clf.classify(np.asarray(shots, dtype=float))
        r[k] = np.bincount(labels, minlength=3) / labels.size
    return clf, AssignmentMatrix(r)


def _project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    rho_idx = np.nonzero(u + (1.0 - css) / (np.arange(v.size) + 1) > 0)[0][-1]
    theta = (1.0 - css[rho_idx]) / (rho_idx + 1.0)
    return np.maximum(v + theta, 0.0)


def correct(assignment: AssignmentMatrix, measured: np.ndarray,
            ) -> tuple[np.ndarray, bool]:
    """Invert the readout confusion out of measured populations.

    Measured fractions obey ``m = R^T p``; returns ``(p, clipped)`` where
    ``clipped`` flags that the raw inverse left the probability simplex and
    was projected back (Euclidean projection).
    """
    measured = np.asarray(measured, dtype=float)
    if measured.shape != (3,):
        raise ValueError("measured populations must be a 3-vector")
    if abs(np.linalg.det(assignment.r)) < 1e-12:
        raise np.linalg.LinAlgError("assignment matrix is singular")
    p = np.linalg.solve(assignment.r.T, measured)
    clipped = bool(np.any(p < -1e-12) or np.any(p > 1 + 1e-12))
    if clipped:
        p = _project_simplex(p)
    return p, clipped


# ---------------------------------------------------------------------------
# Tomography settings


def _rot(theta: float, axis: str, sub: tuple[int, int], dim: int = 3) -> np.ndarray:
    """Rotation by ``theta`` about x or y inside a two-level subspace."""
    u = np.eye(dim, dtype=complex)
    i, j = sub
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    if axis == "x":
        u[i, i], u[j, j], u[i, j], u[j, i] = c, c, -1j * s, -1j * s
    elif axis == "y":
        u[i, i], u[j, j], u[i, j], u[j, i] = c, c, -s, s
    else:
        raise ValueError(axis)
    return u


def qutrit_settings() -> list[np.ndarray]:
    """Nine informationally complete pre-rotations for qutrit tomography.

    Combinations {1, X90, Y90} on the ge subspace with {1, X90, Y90} on the
    ef subspace (ef applied first so it commutes with the subsequent ge
    analysis of the coherences it exposes). With the three-outcome level
    measurement this yields 27 probabilities and a rank-9 design.
    """
    half = np.pi / 2
    ge = [np.eye(3, dtype=complex), _rot(half, "x", (0, 1)), _rot(half, "y", (0, 1))]
    ef = [np.eye(3, dtype=complex), _rot(half, "x", (1, 2)), _rot(half, "y", (1, 2))]
    return [a @ b for b in ef for a in ge]


def two_qutrit_settings() -> list[tuple[np.ndarray, np.ndarray]]:
    """Local setting pairs for two-qutrit tomography (81 combinations)."""
    single = qutrit_settings()
    return [(u1, u2) for u1 in single for u2 in single]


def setting_probabilities(rho: np.ndarray, setting: np.ndarray) -> np.ndarray:
    """Ideal outcome probabilities of a level measurement after ``setting``."""
    return np.clip(np.diag(setting @ rho @ setting.conj().T).real, 0.0, None)


# ---------------------------------------------------------------------------
# Maximum-likelihood state reconstruction


class ReconstructionError(RuntimeError):
    pass


def _povm_elements(settings, dim: int) -> list[np.ndarray]:
    """Flattened measurement operators U^dag |k><k| U for all settings/outcomes."""
    elements = []
    for u in settings:
        if isinstance(u, tuple):
            u = np.kron(u[0], u[1])
        for k in range(dim):
            e = u.conj().T[:, k:k + 1] @ u[k:k + 1, :]
            elements.append(e)
    return elements


def _design_rank(elements: list[np.ndarray], dim: int) -> int:
    rows = [e.conj().reshape(-1) for e in elements]
    return int(np.linalg.matrix_rank(np.array(rows), tol=1e-10))


def mle_state(counts: np.ndarray, settings, dim: int = 3,
              gtol: float = 1e-8, max_iter: int = 2000) -> np.ndarray:
    """Maximum-likelihood density matrix from tomography counts.

    ``counts[s, k]`` is the (possibly non-integer, readout-corrected) number
    of outcome ``k`` in setting ``s``. The state is parameterized as
    ``rho = T T^dag / tr(T T^dag)`` with ``T`` lower triangular and the
    negative log-likelihood is minimized by L-BFGS with an analytic gradient,
    to gradient norm ``gtol``.

    Raises
    ------
    ReconstructionError
        If the setting set is informationally incomplete (design rank below
        ``dim**2``) or the optimizer fails to reach the tolerance.
    """
    counts = np.asarray(counts, dtype=float)
    settings = list(settings)
    if counts.shape != (len(settings), dim):
        raise ValueError(f"counts must have shape ({len(settings)}, {dim})")
    elements = _povm_elements(settings, dim)
    if _design_rank(elements, dim) < dim * dim:
        raise ReconstructionError("informationally incomplete settings (rank-deficient design)")
    flat_counts = counts.reshape(-1)
    total = flat_counts.sum()
    if total <= 0:
        raise ValueError("empty counts")
    e_stack = np.stack(elements)

    tril = np.tril_indices(dim)
    n_real = dim * (dim + 1) // 2
    n_imag = dim * (dim - 1) // 2
    off = np.tril_indices(dim, k=-1)

    def unpack(x):
        t = np.zeros((dim, dim), dtype=complex)
        t[tril] = x[:n_real]
        t[off] += 1j * x[n_real:]
        return t

    def nll_grad(x):
        t = unpack(x)
        rho_un = t @ t.conj().T
        tr = np.trace(rho_un).real
        probs = np.einsum("kij,ji->k", e_stack, rho_un).real / tr
        probs = np.maximum(probs, 1e-300)
        f = -np.sum(flat_counts * np.log(probs))
        # d f / d T* = (total I - sum_k (c_k / p_k) E_k / tr) T ... see notes
        a = np.einsum("k,kij->ij", flat_counts / probs, e_stack)
        grad_t = ((total / tr) * np.eye(dim) - a / tr) @ t
        gx = np.zeros_like(x)
        gx[:n_real] = 2.0 * grad_t[tril].real
        gx[n_real:] = 2.0 * grad_t[off].imag
        return f, gx

    x0 = np.zeros(n_real + n_imag)
    x0[:dim] = 1.0  # identity-ish start
    # place the diagonal entries of T first within the tril ordering
    diag_positions = [k for k, (i, j) in enumerate(zip(*tril)) if i == j]
    x0 = np.zeros(n_real + n_imag)
    for pos in diag_positions:
        x0[pos] = 1.0

    res = minimize(nll_grad, x0, jac=True, method="L-BFGS-B",
                   options={"maxiter": max_iter, "gtol": gtol, "ftol": 0.0})
    grad_norm = np.max(np.abs(res.jac))
    if grad_norm > gtol * max(1.0, abs(res.fun)):
        raise ReconstructionError(
            f"MLE did not converge: projected gradient {grad_norm:.2e}")
    t = unpack(res.x)
    rho = t @ t.conj().T
    rho /= np.trace(rho).real
    return rho


# ---------------------------------------------------------------------------
# Process tomography and fidelities


CARDINAL_STATES = {
    "g": np.array([1, 0], dtype=complex),
    "e": np.array([0, 1], dtype=complex),
    "+": np.array([1, 1], dtype=complex) / np.sqrt(2),
    "-": np.array([1, -1], dtype=complex) / np.sqrt(2),
    "+i": np.array([1, 1j], dtype=complex) / np.sqrt(2),
    "-i": np.array([1, -1j], dtype=complex) / np.sqrt(2),
}


def process_tomography(input_states: list[np.ndarray],
                       output_states: list[np.ndarray],
                       positivity: bool = False) -> np.ndarray:
    """Pauli-basis process matrix chi by linear inversion.

    ``input_states`` are qubit kets (or 2x2 density matrices),
    ``output_states`` the corresponding reconstructed 2x2 density matrices.
    The channel's superoperator is solved in the least-squares sense from the
    input/output pairs and converted to chi over {I, X, Y, Z}. Positivity is
    NOT imposed by default (plain linear inversion); ``positivity=True``
    projects chi onto positive semidefinite matrices of unit trace, for
    diagnostics.
    """
    if len(input_states) != len(output_states) or len(input_states) < 4:
        raise ValueError("need at least four matched input/output states")

    def as_dm(state):
        state = np.asarray(state, dtype=complex)
        return np.outer(state, state.conj()) if state.ndim == 1 else state

    # superoperator S with row-major vec: vec(rho_out) = S vec(rho_in)
    a = np.array([as_dm(k).reshape(-1) for k in input_states])
    b = np.array([np.asarray(out, dtype=complex).reshape(-1) for out in output_states])
    if np.linalg.matrix_rank(a, tol=1e-10) < 4:
        raise ValueError("input states are rank deficient for process inversion")
    s, *_ = np.linalg.lstsq(a, b, rcond=None)
    s = s.T  # vec(out) = S vec(in)
    chi = np.zeros((4, 4), dtype=complex)
    for m, am in enumerate(PAULI_LIST):
        for n, an in enumerate(PAULI_LIST):
            basis = np.kron(am, an.conj())
            chi[m, n] = np.trace(basis.conj().T @ s) / 4.0
    chi = 0.5 * (chi + chi.conj().T)
    if positivity:
        vals, vecs = np.linalg.eigh(chi)
        vals = np.clip(vals, 0.0, None)
        chi = vecs @ np.diag(vals) @ vecs.conj().T
        chi /= np.trace(chi).real
    return chi


def kraus_to_chi(kraus_ops: list[np.ndarray]) -> np.ndarray:
    """Closed-form chi of a channel given its Kraus operators."""
    chi = np.zeros((4, 4), dtype=complex)
    coeffs = [np.array([np.trace(p.conj().T @ k) / 2.0 for p in PAULI_LIST])
              for k in kraus_ops]
    for c in coeffs:
        chi += np.outer(c, c.conj())
    return chi


def chi_identity() -> np.ndarray:
    chi = np.zeros((4, 4), dtype=complex)
    chi[0, 0] = 1.0
    return chi


def process_fidelity(chi: np.ndarray, chi_ideal: np.ndarray) -> float:
    """F_p = Tr(chi_ideal chi)."""
    return float(np.trace(np.asarray(chi_ideal) @ np.asarray(chi)).real)


BELL_PHI_PLUS = np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2)


def bell_fidelity(rho: np.ndarray, target: np.ndarray = BELL_PHI_PLUS) -> float:
    """Overlap of a two-qubit state with the protocol's target Bell vector."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (4, 4):
        raise ValueError("two-qubit state must be 4x4")
    return float((target.conj() @ rho @ target).real)


def qubit_block(rho3: np.ndarray) -> np.ndarray:
    """Project a qutrit density matrix onto {|g>, |e>} and renormalize."""
    rho3 = np.asarray(rho3, dtype=complex)
    block = rho3[:2, :2]
    tr = np.trace(block).real
    if tr <= 0:
        raise ValueError("qubit-subspace population vanishes")
    return block / tr


def two_qubit_block(rho9: np.ndarray) -> np.ndarray:
    """Project a two-qutrit density matrix onto the two-qubit subspace."""
    rho9 = np.asarray(rho9, dtype=complex)
    idx = [3 * i + j for i in (0, 1) for j in (0, 1)]
    block = rho9[np.ix_(idx, idx)]
    tr = np.trace(block).real
    if tr <= 0:
        raise ValueError("two-qubit subspace population vanishes")
    return block / tr


def default_blobs() -> BlobModel:
    """Collinear readout blobs reproducing realistic assignment quality.

    Centers on a line with per-state widths chosen so the closed-form
    misassignment probabilities (1-d Gaussian tail masses across the Voronoi
    midpoints) give diagonals near (0.95, 0.90, 0.88).
    """
    centers = np.array([[0.0, 0.0], [3.28971, 0.0], [6.57942, 0.0]])
    sigmas = np.array([1.0, 1.0, 1.39987])
    covs = np.stack([np.eye(2) * s ** 2 for s in sigmas])
    return BlobModel(centers=centers, covs=covs)


def correct_joint(assignment_tx: AssignmentMatrix, assignment_rx: AssignmentMatrix,
                  measured: np.ndarray) -> tuple[np.ndarray, bool]:
    """Readout correction of joint two-qutrit outcome fractions (9-vector).

    Independent readout chains: the joint confusion matrix is the Kronecker
    product of the two single-device matrices.
    """
    measured = np.asarray(measured, dtype=float)
    if measured.shape != (9,):
        raise ValueError("joint measured populations must be a 9-vector")
    r = np.kron(assignment_tx.r, assignment_rx.r)
    p = np.linalg.solve(r.T, measured)
    clipped = bool(np.any(p < -1e-12) or np.any(p > 1 + 1e-12))
    if clipped:
        p = _project_simplex(p)
    return p, clipped


def two_qutrit_mle_through_readout(rho9: np.ndarray, shots: int, seed: int,
                                   blobs: BlobModel, clf: Classifier,
                                   assignment: AssignmentMatrix) -> np.ndarray:
    """Finite-shot two-qutrit reconstruction through the readout model.

    Both devices share the blob model and classifier (one readout chain
    each, assumed identical); outcomes are sampled jointly, classified per
    device, corrected with the Kronecker assignment matrix and fed to the
    9-dimensional maximum-likelihood reconstruction.
    """
    settings = two_qutrit_settings()
    counts = np.zeros((len(settings), 9))
    for s, (u1, u2) in enumerate(settings):
        u = np.kron(u1, u2)
        probs = setting_probabilities(rho9, u)
        probs = probs / probs.sum()
        rng = np.random.default_rng([seed, s])
        joint = rng.choice(9, size=shots, p=probs)
        iq_tx = np.zeros((shots, 2))
        iq_rx = np.zeros((shots, 2))
        for level in range(3):
            m_tx = (joint // 3) == level
            m_rx = (joint % 3) == level
            if m_tx.any():
                iq_tx[m_tx] = rng.multivariate_normal(
                    blobs.centers[level], blobs.covs[level], size=int(m_tx.sum()))
            if m_rx.any():
                iq_rx[m_rx] = rng.multivariate_normal(
                    blobs.centers[level], blobs.covs[level], size=int(m_rx.sum()))
        labels = 3 * clf.classify(iq_tx) + clf.classify(iq_rx)
        measured = np.bincount(labels, minlength=9) / shots
        corrected, _ = correct_joint(assignment, assignment, measured)
        counts[s] = corrected * shots
    return mle_state(counts, settings, dim=9)

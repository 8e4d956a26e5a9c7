"""Drive-dressed transmon quantities and photon wave-packet shaping.

The off-resonant |f0>-|g1> drive dresses the three transmon levels; the
dressed matrix element |<g~|b|f~>| sets the effective coupling and the
ac-Stark-shifted two-photon detuning sets the emitted-photon frequency.
``dress`` diagonalizes the three-level rotating-frame Hamiltonian exactly
(with adiabatic state tracking); ``dress_perturbative`` evaluates the
first-order expressions, which the exact result reproduces in the weak-drive
limit and which the resonator-design operations use.

Wave-packet shaping targets the hyperbolic-secant envelope
``psi(t) = sqrt(kappa_ph/2) sech(kappa_ph t)``. Against an effective
single-pole resonator of linewidth ``kappa_eff``, the drive schedule that
emits this envelope is obtained from the instantaneous decay rate

    Gamma(t) = |psi(t)|^2 / (1 - int_{-inf}^t |psi|^2 dt'),
    g_eff(t) = sqrt(kappa_eff * Gamma(t)) / 2,

which for the sech target gives the closed form
``Gamma(t) = kappa_ph (1 + tanh(kappa_ph t))``. Absorption uses the
time-reversed schedule.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .units import MHZ, ang_from_mhz, mhz_from_ang

#: lowering operator of the three-level transmon (|g>, |e>, |f>)
B_QUTRIT = np.array([[0, 1, 0], [0, 0, np.sqrt(2.0)], [0, 0, 0]], dtype=complex)

#: floor on the un-emitted fraction in the shaping denominator
SHAPING_CLAMP = 0.01


class StateTrackingError(RuntimeError):
    """Raised when dressed states cannot be unambiguously assigned."""


class AdiabaticityError(ValueError):
    """Raised when a schedule would violate g_eff <= kappa_eff / 4."""


@dataclass(frozen=True)
class DrivenQutritParams:
    """Transmon under an off-resonant drive (cyclic units).

    ``alpha`` is the anharmonicity magnitude in MHz (the |f> level sits at
    ``2 omega_eg - alpha``); ``omega_eg`` and ``omega_d`` are in GHz and
    ``omega_drive_amp`` (Omega) in MHz.
    """

    omega_eg: float
    alpha: float
    omega_drive_amp: float
    omega_d: float

    def __post_init__(self):
        if self.omega_drive_amp < 0:
            raise ValueError("drive amplitude must be non-negative")


@dataclass(frozen=True)
class DressedQutrit:
    """Drive-dressed level data.

    ``g_eff_factor`` is the dimensionless matrix element |<g~|b|f~>| (in
    [0, sqrt(2)]); ``delta_fg_tilde`` the dressed two-photon detuning in MHz
    (rotating frame at the drive); ``omega_eg_tilde`` the ac-Stark-shifted
    qubit frequency in GHz.
    """

    g_eff_factor: float
    delta_fg_tilde: float
    omega_eg_tilde: float


def _rotating_frame_hamiltonian(params: DrivenQutritParams) -> np.ndarray:
    delta_eg = (params.omega_eg - params.omega_d) * 1e3  # MHz
    diag = np.array([0.0, delta_eg, 2.0 * delta_eg - params.alpha])
    h = np.diag(diag).astype(complex)
    h += 0.5 * params.omega_drive_amp * (B_QUTRIT + B_QUTRIT.conj().T)
    return h


def dress(params: DrivenQutritParams, ambiguity_tol: float = 0.01) -> DressedQutrit:
    """Dressed-state data from exact diagonalization with adiabatic tracking.

    Each dressed state is assigned to the bare level with which it has the
    largest overlap. If the two largest overlaps for any bare level agree to
    within ``ambiguity_tol`` (near an avoided crossing) a
    :class:`StateTrackingError` is raised. A drive within 10x Omega of either
    single-photon transition triggers a warning (the perturbative picture is
    then doubtful) but not an error.
    """
    delta_eg = abs(params.omega_eg - params.omega_d) * 1e3
    delta_ef = abs(delta_eg - params.alpha)
    if params.omega_drive_amp > 0 and min(delta_eg, delta_ef) < 10.0 * params.omega_drive_amp:
        warnings.warn(
            "drive is within 10x Omega of a single-photon transition; "
            "dressed-state assignment may be unreliable", RuntimeWarning)

    h = _rotating_frame_hamiltonian(params)
    vals, vecs = np.linalg.eigh(h)
    overlaps = np.abs(vecs)  # overlaps[bare, eig]
    assigned: dict[int, int] = {}
    used: set[int] = set()
    for bare in range(3):
        order = np.argsort(-overlaps[bare])
        order = [k for k in order if k not in used]
        if len(order) > 1:
            top, second = overlaps[bare, order[0]], overlaps[bare, order[1]]
            if top - second < ambiguity_tol:
                raise StateTrackingError(
                    f"dressed-state overlaps for bare level {bare} differ by "
                    f"{top - second:.4f} (< {ambiguity_tol}); avoided crossing")
        assigned[bare] = order[0]
        used.add(order[0])

    vg = vecs[:, assigned[0]]
    vf = vecs[:, assigned[2]]
    factor = abs(vg.conj() @ B_QUTRIT @ vf)
    delta_fg = vals[assigned[2]] - vals[assigned[0]]  # MHz, rotating frame
    omega_eg_tilde = params.omega_d + (vals[assigned[1]] - vals[assigned[0]]) * 1e-3
    return DressedQutrit(g_eff_factor=float(factor),
                         delta_fg_tilde=float(delta_fg),
                         omega_eg_tilde=float(omega_eg_tilde))


def dress_perturbative(params: DrivenQutritParams) -> DressedQutrit:
    """First-order perturbative dressed quantities.

    The matrix element is ``(Omega/sqrt(2)) |1/delta_ef - 1/delta_eg|`` with
    ``delta_ef = delta_eg - alpha``; the level shifts are the standard
    second-order ac-Stark expressions. Exact in the Omega -> 0 limit; the
    resonator-design operations use this monotone-in-Omega form.
    """
    delta_eg = (params.omega_eg - params.omega_d) * 1e3
    delta_ef = delta_eg - params.alpha
    if abs(delta_eg) < 1e-9 or abs(delta_ef) < 1e-9:
        raise ZeroDivisionError("perturbative dressing undefined on resonance")
    omega = params.omega_drive_amp
    factor = (omega / np.sqrt(2.0)) * abs(1.0 / delta_ef - 1.0 / delta_eg)
    # second-order shifts of the three levels
    s_g = (omega / 2.0) ** 2 / (-delta_eg)
    s_e = (omega / 2.0) ** 2 * (1.0 / delta_eg - 2.0 / delta_ef)
    s_f = (omega / 2.0) ** 2 * (2.0 / delta_ef)
    delta_fg = (2.0 * delta_eg - params.alpha) + (s_f - s_g)
    omega_eg_tilde = params.omega_eg + (s_e - s_g) * 1e-3
    return DressedQutrit(g_eff_factor=float(factor),
                         delta_fg_tilde=float(delta_fg),
                         omega_eg_tilde=float(omega_eg_tilde))


@dataclass(frozen=True)
class PhotonWaveform:
    """Complex envelope on a uniform time grid, normalized to unit energy.

    ``envelope`` carries units 1/sqrt(ns) so that ``int |psi|^2 dt = 1``;
    ``kappa_ph`` is the bandwidth parameter in MHz.
    """

    times: np.ndarray
    envelope: np.ndarray
    kappa_ph: float

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        env = np.asarray(self.envelope, dtype=complex)
        if t.shape != env.shape or t.ndim != 1:
            raise ValueError("times and envelope must be matching 1-d arrays")
        dt = np.diff(t)
        if not np.allclose(dt, dt[0], rtol=1e-9, atol=0.0):
            raise ValueError("waveform grid must be uniform")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "envelope", env)
        norm = np.trapezoid(np.abs(env) ** 2, t)
        if abs(norm - 1.0) > 1e-4:
            raise ValueError(f"waveform norm {norm:.6f} deviates from 1 by more than 1e-4")

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])


@dataclass(frozen=True)
class PulseSchedule:
    """Effective-coupling schedule g_eff(t) realizing a target wave packet.

    ``g_eff`` samples are cyclic MHz on the ``times`` grid (ns);
    ``direction`` is ``"emit"`` or ``"absorb"``; ``delay`` (ns) is the
    absorption time offset.
    """

    times: np.ndarray
    g_eff: np.ndarray
    direction: str
    delay: float = 0.0
    kappa_ph: float = 0.0

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        g = np.asarray(self.g_eff, dtype=float)
        if t.shape != g.shape or t.ndim != 1:
            raise ValueError("times and g_eff must be matching 1-d arrays")
        if np.any(~np.isfinite(g)) or np.any(g < 0):
            raise ValueError("g_eff samples must be finite and non-negative")
        if self.direction not in ("emit", "absorb"):
            raise ValueError(f"unknown direction {self.direction!r}")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "g_eff", g)

    @property
    def peak(self) -> float:
        return float(self.g_eff.max())

    def angular(self) -> np.ndarray:
        """g_eff(t) in rad/ns."""
        return ang_from_mhz(self.g_eff)

    def to_csv(self, path) -> None:
        data = np.column_stack([self.times, self.g_eff])
        np.savetxt(path, data, delimiter=",", header="time_ns,g_eff_MHz", comments="")


def target_waveform(kappa_ph: float, window: float = 8.0, samples: int = 2001) -> PhotonWaveform:
    """Normalized sech envelope, centered, spanning ``[-window, window]/kappa_ph``.

    ``kappa_ph`` in MHz; ``window`` in units of 1/kappa_ph and must be >= 5 so
    the truncated norm deficit (about ``2 exp(-2 window)``) stays below 1e-4.
    """
    deficit = 1.0 - np.tanh(window)
    if deficit > 1e-3:
        raise ValueError(f"window {window} too small: norm deficit {deficit:.2e} > 1e-3")
    if window < 5.0:
        raise ValueError(f"window must be >= 5, got {window}")
    kph = ang_from_mhz(kappa_ph)  # rad/ns
    half = window / kph
    times = np.linspace(-half, half, samples)
    env = np.sqrt(kph / 2.0) / np.cosh(kph * times)
    return PhotonWaveform(times=times, envelope=env.astype(complex), kappa_ph=float(kappa_ph))


def _shaping_rate(target: PhotonWaveform) -> np.ndarray:
    """Instantaneous decay rate Gamma(t) (rad/ns) that emits the target."""
    p = np.abs(target.envelope) ** 2
    emitted = np.concatenate([[0.0], np.cumsum((p[1:] + p[:-1]) * 0.5 * target.dt)])
    remaining = np.maximum(1.0 - emitted, SHAPING_CLAMP)
    return p / remaining


def emission_schedule(target: PhotonWaveform, kappa_eff: float) -> PulseSchedule:
    """Drive schedule g_eff(t) emitting ``target`` through a single-pole cavity.

    ``kappa_eff`` is the effective cavity linewidth in MHz. The shaping
    denominator is floored at 1 - int|psi|^2 = 0.01, so at most 1% of the
    excitation stays unemitted at the window end (it keeps draining at the
    clamped rate, which is why windows of 8/kappa_ph leave < 1e-3 behind).

    Raises
    ------
    AdiabaticityError
        If the resulting peak coupling exceeds kappa_eff / 4, in which case a
        single-pole cavity cannot adiabatically follow the drive.
    """
    gamma = _shaping_rate(target)  # rad/ns
    kap = ang_from_mhz(kappa_eff)
    g = 0.5 * np.sqrt(kap * gamma)  # rad/ns
    peak = mhz_from_ang(g.max())
    if peak > kappa_eff / 4.0:
        raise AdiabaticityError(
            f"peak g_eff {peak:.3f} MHz exceeds kappa_eff/4 = {kappa_eff / 4:.3f} MHz")
    return PulseSchedule(times=target.times.copy(), g_eff=mhz_from_ang(g),
                         direction="emit", kappa_ph=target.kappa_ph)


def absorption_schedule(target: PhotonWaveform, kappa_eff: float,
                        delay: float = 0.0) -> PulseSchedule:
    """Time-reversed emission schedule shifted by ``delay`` ns."""
    emit = emission_schedule(target, kappa_eff)
    return PulseSchedule(times=emit.times + delay, g_eff=emit.g_eff[::-1].copy(),
                         direction="absorb", delay=float(delay), kappa_ph=target.kappa_ph)


def sech_shaping_rate(kappa_ph: float, t) -> np.ndarray:
    """Closed-form shaping rate for the sech target, kappa_ph (1 + tanh), in MHz."""
    kph = ang_from_mhz(kappa_ph)
    return mhz_from_ang(kph * (1.0 + np.tanh(kph * np.asarray(t, dtype=float))))

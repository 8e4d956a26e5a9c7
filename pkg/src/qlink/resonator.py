"""Two-pole transfer-resonator algebra.

A transfer resonator is a chain of two coupled resonators: an inner one
(frequency ``omega_r``) that couples to the qubit with strength ``g`` and an
outer one (``omega_f``) that couples to the transmission line with external
decay ``kappa``. Diagonalizing the two-mode block gives eigenmodes at
``omega_-, omega_+`` with decay rates ``kappa_- = kappa Z^2``,
``kappa_+ = kappa W^2``, where ``(X, Z)`` and ``(Y, W)`` are the orthonormal
eigenvectors written as ``a = X a_- + Y a_+``, ``f = Z a_- + W a_+``.

The photon emission rate of the ``|f0>-|g1>`` Raman transition through this
filter is computed two independent ways and asserted equal:

* a closed form, ``Gamma_f = 4 g_eff^2 (kappa_+ + kappa_-) X^2 Y^2
  (delta_+ - delta_-)^2 / (4 delta_+^2 delta_-^2 +
  (kappa_+ delta_- + kappa_- delta_+)^2)`` with ``delta_pm = omega_pm -
  omega_ph`` (the numerator equals ``4 g_eff^2 kappa J^2``);
* the golden-rule route through the frequency-domain response functions,
  ``Gamma_f = g_eff^2 |X R_-(omega) + Y R_+(omega)|^2``, where the two decay
  pathways share the transmission line and therefore add coherently.

Both match a brute-force master-equation decay of the three-mode chain (see
the tests). ``modal_rate`` additionally exposes the per-eigenmode sum
``g_eff^2 (X^2 |R_-|^2 + Y^2 |R_+|^2)``, which neglects the pathway
interference; that spectral function is what the design pipeline (bandwidth
sweeps, fabrication Monte Carlo) uses, and it coincides with ``gamma_f`` at
the eigenmode frequencies.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

POLE_EPS = 1e-12


class PoleError(ZeroDivisionError):
    """Raised when a response is requested exactly at an undamped pole."""


@dataclass(frozen=True)
class CoupledResonatorParams:
    """Bare circuit parameters of one transfer resonator (cyclic units).

    Attributes
    ----------
    omega_r:
        Inner-resonator frequency in GHz.
    omega_f:
        Outer-resonator frequency in GHz.
    coupling_j:
        Inter-resonator coupling J in MHz.
    kappa:
        Outer-resonator external decay in MHz.
    g:
        Qubit to inner-resonator coupling in MHz.
    """

    omega_r: float
    omega_f: float
    coupling_j: float
    kappa: float
    g: float

    def __post_init__(self):
        if self.kappa <= 0:
            raise ValueError(f"kappa must be positive, got {self.kappa}")
        if self.coupling_j < 0:
            raise ValueError(f"J must be non-negative, got {self.coupling_j}")
        if self.omega_r <= 0 or self.omega_f <= 0:
            raise ValueError("resonator frequencies must be positive")


@dataclass(frozen=True)
class EigenmodeDecomposition:
    """Diagonalized two-pole form (cyclic units).

    ``omega_plus >= omega_minus`` always; the transformation coefficients are
    on the canonical branch with non-negative inner-mode contents
    ``X >= 0, Y >= 0`` (``Z`` and ``W`` then carry the signs, with
    ``Z W = -X Y``).
    """

    omega_minus: float  # GHz
    omega_plus: float   # GHz
    kappa_minus: float  # MHz
    kappa_plus: float   # MHz
    x: float
    y: float
    z: float
    w: float

    @property
    def center(self) -> float:
        """Midpoint of the two eigenfrequencies (GHz)."""
        return 0.5 * (self.omega_minus + self.omega_plus)

    @property
    def splitting(self) -> float:
        """Eigenmode splitting in MHz."""
        return (self.omega_plus - self.omega_minus) * 1e3

    @property
    def kappa_total(self) -> float:
        """Total external decay kappa in MHz."""
        return self.kappa_minus + self.kappa_plus


@dataclass(frozen=True)
class EmissionContext:
    """Drive-dependent inputs of the emission rate.

    ``g_eff`` is the effective |f0>-|g1> coupling in MHz; the per-mode
    detunings are derived from the decomposition and the photon frequency
    inside :func:`gamma_f`.
    """

    g_eff: float

    def __post_init__(self):
        if self.g_eff < 0:
            raise ValueError("g_eff must be non-negative")


def diagonalize(params: CoupledResonatorParams) -> EigenmodeDecomposition:
    """Diagonalize the two coupled resonator modes.

    Eigenfrequencies follow the closed form
    ``omega_pm = (omega_r + omega_f)/2 pm sqrt(Delta_fr^2 + 4 J^2)/2`` and the
    eigenmode decay rates are ``kappa Z^2`` and ``kappa W^2``. The degenerate
    ``J = 0`` case is handled (the inner mode is dark).
    """
    wr = params.omega_r * 1e3  # MHz
    wf = params.omega_f * 1e3
    j = params.coupling_j
    delta = wf - wr
    split = np.hypot(delta, 2.0 * j)
    mean = 0.5 * (wr + wf)
    w_minus = mean - 0.5 * split
    w_plus = mean + 0.5 * split

    if split < POLE_EPS:  # fully degenerate with J = 0
        x, z, y, w = 1.0, 0.0, 0.0, 1.0
    else:
        m = np.array([[wr, j], [j, wf]])
        _, vecs = np.linalg.eigh(m)
        x, z = vecs[0, 0], vecs[1, 0]
        y, w = vecs[0, 1], vecs[1, 1]
        if x < 0:
            x, z = -x, -z
        if y < 0:
            y, w = -y, -w
    return EigenmodeDecomposition(
        omega_minus=w_minus * 1e-3,
        omega_plus=w_plus * 1e-3,
        kappa_minus=params.kappa * z * z,
        kappa_plus=params.kappa * w * w,
        x=float(x), y=float(y), z=float(z), w=float(w),
    )


def reconstruct(decomp: EigenmodeDecomposition) -> tuple[float, float, float, float]:
    """Rebuild the bare ``(omega_r GHz, omega_f GHz, J MHz, kappa MHz)``.

    Inverse of :func:`diagonalize` up to floating error; used by the
    involution property test and by :func:`s11`.
    """
    wm, wp = decomp.omega_minus * 1e3, decomp.omega_plus * 1e3
    x, y, z, w = decomp.x, decomp.y, decomp.z, decomp.w
    omega_r = x * x * wm + y * y * wp
    omega_f = z * z * wm + w * w * wp
    j = x * z * wm + y * w * wp
    kappa = decomp.kappa_minus + decomp.kappa_plus
    return omega_r * 1e-3, omega_f * 1e-3, abs(j), kappa


def response(decomp: EigenmodeDecomposition, omega, omega_d: float = 0.0):
    """Frequency-domain response amplitudes ``(R_-, R_+)`` of the eigenmodes.

    ``R_pm(omega)`` is the steady-state amplitude of eigenmode ``pm`` per unit
    coherent input on the line at frequency ``omega`` (GHz), measured from the
    drive-frame reference ``omega_d`` (GHz; pass 0 for absolute frequencies):

        R_- = -i s_Z sqrt(kappa_-) (omega - Delta_+) / D(omega)
        R_+ = -i s_W sqrt(kappa_+) (omega - Delta_-) / D(omega)
        D   = [(omega - Delta_-) + i kappa_-/2] [(omega - Delta_+) + i kappa_+/2]
              + kappa_+ kappa_- / 4

    with ``Delta_pm = omega_pm - omega_d`` and ``s_Z, s_W`` the signs of the
    outer-mode contents on the canonical branch (so the coherent combination
    ``X R_- + Y R_+`` is the physical response of the inner mode). Units are
    1/sqrt(MHz); frequencies are converted to MHz internally. The
    cross-damping term ``kappa_+ kappa_- / 4`` couples the two modes through
    the shared line.

    Raises
    ------
    PoleError
        If an undamped mode (``kappa = 0``, i.e. ``J = 0``) is probed exactly
        at its pole frequency, where the response diverges.
    """
    omega = np.asarray(omega, dtype=float)
    dp = (decomp.omega_plus - omega_d) * 1e3 - omega * 1e3   # Delta_+ - omega, MHz
    dm = (decomp.omega_minus - omega_d) * 1e3 - omega * 1e3
    km, kp = decomp.kappa_minus, decomp.kappa_plus
    den = (-dm + 0.5j * km) * (-dp + 0.5j * kp) + 0.25 * kp * km
    if np.any(np.abs(den) < POLE_EPS):
        raise PoleError("response evaluated exactly at an undamped pole")
    s_z = np.sign(decomp.z) if decomp.z != 0 else 0.0
    s_w = np.sign(decomp.w) if decomp.w != 0 else 0.0
    r_minus = -1j * s_z * np.sqrt(km) * (-dp) / den
    r_plus = -1j * s_w * np.sqrt(kp) * (-dm) / den
    return r_minus, r_plus


def gamma_f(decomp: EigenmodeDecomposition, ctx: EmissionContext, omega_ph) -> np.ndarray:
    """Photon-emission rate of the |f> state through the two-pole filter (MHz).

    Evaluates the closed form (see the module docstring) at photon frequency
    ``omega_ph`` (GHz) and asserts it against the independent golden-rule
    route ``g_eff^2 |X R_- + Y R_+|^2`` to a relative 1e-10 on every call.

    Raises
    ------
    PoleError
        At an exactly undamped pole (``J = 0`` probed on the dark mode).
    """
    omega_ph = np.asarray(omega_ph, dtype=float)
    dp = (decomp.omega_plus - omega_ph) * 1e3
    dm = (decomp.omega_minus - omega_ph) * 1e3
    km, kp = decomp.kappa_minus, decomp.kappa_plus
    g2 = ctx.g_eff ** 2
    num = 4.0 * g2 * (km + kp) * decomp.x ** 2 * decomp.y ** 2 * (dp - dm) ** 2
    den = 4.0 * dp ** 2 * dm ** 2 + (kp * dm + km * dp) ** 2
    if np.any(den < POLE_EPS):
        raise PoleError("gamma_f evaluated exactly at an undamped pole")
    closed = num / den

    r_minus, r_plus = response(decomp, omega_ph, 0.0)
    golden = g2 * np.abs(decomp.x * r_minus + decomp.y * r_plus) ** 2
    scale = np.maximum(np.abs(closed), np.abs(golden))
    mismatch = np.abs(closed - golden)
    if np.any(mismatch > 1e-10 * np.maximum(scale, 1e-300) + 1e-300):
        raise AssertionError("closed-form and golden-rule emission rates disagree")
    return closed


def gamma_f_golden(decomp: EigenmodeDecomposition, ctx: EmissionContext, omega_ph) -> np.ndarray:
    """Golden-rule route to the emission rate, ``g_eff^2 |X R_- + Y R_+|^2`` (MHz)."""
    r_minus, r_plus = response(decomp, np.asarray(omega_ph, dtype=float), 0.0)
    return ctx.g_eff ** 2 * np.abs(decomp.x * r_minus + decomp.y * r_plus) ** 2


def modal_rate(decomp: EigenmodeDecomposition, ctx: EmissionContext, omega_ph) -> np.ndarray:
    """Per-eigenmode (interference-free) emission spectral function (MHz).

    ``g_eff^2 (X^2 |R_-|^2 + Y^2 |R_+|^2)``: each eigenmode treated as an
    independent decay pathway. This is the spectral function behind the
    published bandwidth-design and fabrication-yield maps; it equals
    :func:`gamma_f` whenever the photon sits on an eigenmode frequency and
    deviates in between (up to 2x at band center), because it drops the
    interference between the two pathways into the shared line.
    """
    omega_ph = np.asarray(omega_ph, dtype=float)
    dp = (decomp.omega_plus - omega_ph) * 1e3
    dm = (decomp.omega_minus - omega_ph) * 1e3
    km, kp = decomp.kappa_minus, decomp.kappa_plus
    den = 4.0 * dp ** 2 * dm ** 2 + (kp * dm + km * dp) ** 2
    if np.any(den < POLE_EPS):
        raise PoleError("modal_rate evaluated exactly at an undamped pole")
    num = 4.0 * ctx.g_eff ** 2 * (decomp.x ** 2 * km * dp ** 2 + decomp.y ** 2 * kp * dm ** 2)
    return num / den


def rate_curve(decomp: EigenmodeDecomposition, ctx: EmissionContext, omega_ph,
               kind: str = "physical") -> np.ndarray:
    """Sweep-safe emission-rate curve (MHz).

    Like :func:`gamma_f` (``kind="physical"``) or :func:`modal_rate`
    (``kind="modal"``) but exact-pole grid points are skipped instead of
    raising: where the denominator vanishes together with the numerator (the
    dark-mode line at J = 0) the limit 0 is returned; a vanishing denominator
    with finite numerator still raises :class:`PoleError`.
    """
    omega_ph = np.asarray(omega_ph, dtype=float)
    dp = (decomp.omega_plus - omega_ph) * 1e3
    dm = (decomp.omega_minus - omega_ph) * 1e3
    km, kp = decomp.kappa_minus, decomp.kappa_plus
    g2 = ctx.g_eff ** 2
    if kind == "physical":
        num = 4.0 * g2 * (km + kp) * decomp.x ** 2 * decomp.y ** 2 * (dp - dm) ** 2
    elif kind == "modal":
        num = 4.0 * g2 * (decomp.x ** 2 * km * dp ** 2 + decomp.y ** 2 * kp * dm ** 2)
    else:
        raise ValueError(f"unknown curve kind {kind!r}")
    den = 4.0 * dp ** 2 * dm ** 2 + (kp * dm + km * dp) ** 2
    num = np.broadcast_to(np.asarray(num, dtype=float), den.shape)
    bad = den < POLE_EPS
    if np.any(bad & (num > POLE_EPS)):
        raise PoleError("rate curve hits an exact pole with finite numerator")
    return np.where(bad, 0.0, num / np.where(bad, 1.0, den))


def s11(decomp: EigenmodeDecomposition, omega, dispersive_shift: float = 0.0) -> np.ndarray:
    """Reflection coefficient of the two-pole chain seen from the line.

    Lossless input-output model: the qubit state enters only as a dispersive
    pull ``dispersive_shift`` (MHz) on the inner-resonator frequency before
    diagonalization, so ``|S11| = 1`` identically and the phase winds by 4 pi
    across the two-pole band.

        S11(omega) = 1 - kappa / [i(omega_f' - omega) - i J^2/(omega_r' - omega)
                     + kappa/2]

    where the primes denote the pulled bare frequencies (all in MHz
    internally; ``omega`` in GHz).
    """
    omega = np.asarray(omega, dtype=float)
    omega_r, omega_f, j, kappa = reconstruct(decomp)
    wr = omega_r * 1e3 + dispersive_shift
    wf = omega_f * 1e3
    w = omega * 1e3
    inner = wr - w
    with np.errstate(divide="ignore", invalid="ignore"):
        detuning = (wf - w) - np.where(np.abs(inner) < POLE_EPS, np.nan, j ** 2 / inner)
    out = 1.0 - kappa / (1j * detuning + 0.5 * kappa)
    if np.any(np.isnan(out)):
        warnings.warn("s11 probed exactly at the dark inner-mode pole; "
                      "returning the lossless limit -1 there", RuntimeWarning)
        out = np.where(np.isnan(out), -1.0 + 0.0j, out)
    return out


def flat_band_coupling(kappa: float) -> float:
    """Inter-resonator coupling J (MHz) that flattens the degenerate response.

    For ``omega_r = omega_f`` the exact two-pole emission response (including
    the cross-damping through the shared line) is maximally flat at band
    center when ``kappa = 2 sqrt(2) J``, i.e. eigenmode spacing
    ``omega_+ - omega_- = sqrt(2) kappa_pm``. The independent-pole textbook
    rule (spacing equal to linewidth) does not include the cross-damping and
    dips noticeably at band center for this model.
    """
    return kappa / (2.0 * np.sqrt(2.0))

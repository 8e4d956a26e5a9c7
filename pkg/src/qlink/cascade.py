"""Cascaded sender-receiver master equation and the communication protocols.

The model lives on the composite space [sender qutrit (3), sender transfer
resonator (2), receiver qutrit (3), receiver transfer resonator (2)], with the
two-pole transfer resonators approximated as single-pole modes of effective
linewidth ``kappa_tx``, ``kappa_rx``. The Hamiltonian (rotating frame, all
resonant) is

    H = sum_dev [ -(alpha/2) b^dag b + (alpha/2) b^dag b^dag b b ]
        + g_tx(t) (a_tx b_tx^dag b_tx^dag + h.c.)/sqrt(2)
        + g_rx(t) (a_rx b_rx^dag b_rx^dag + h.c.)/sqrt(2)
        + i (sqrt(eta kappa_tx kappa_rx)/2) (a_tx^dag a_rx - h.c.)

and the ten dissipators are the collective channel
``sqrt(eta kappa_tx) a_tx + sqrt(kappa_rx) a_rx``, the propagation-loss
channel ``sqrt((1-eta) kappa_tx) a_tx``, and per device the two decays
``|g><e|``, ``|e><f|`` and two pure-dephasing channels. The sign of the
cascade term together with the collective dissipator is what makes the
coupling one-way from sender to receiver (the sender cavity never sees the
receiver field). Photons propagate with zero delay; the experimental cable
delay is absorbed in the absorption-schedule delay parameter.

The output field on the line is ``a_out = sqrt(eta kappa_tx) a_tx +
sqrt(kappa_rx) a_rx``; records carry both its expectation value (the coherent
amplitude, which vanishes for Fock-state emitters) and the photon-number flux
``<a_out^dag a_out>``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import hilbert as hb
from .drive import (
    PhotonWaveform,
    PulseSchedule,
    absorption_schedule,
    emission_schedule,
    target_waveform,
)
from .dynamics import DriveTerm, Hamiltonian, Trajectory, evolve
from .hilbert import CollapseChannel, DensityMatrix, Operator, SpaceLayout
from .units import ang_from_mhz, rate_from_us

LAYOUT = SpaceLayout(
    (3, 2, 3, 2),
    ("sender-qutrit", "sender-cavity", "receiver-qutrit", "receiver-cavity"),
)

G, E, F = 0, 1, 2


class FlatDelayCurveError(RuntimeError):
    """Raised when a delay scan is too flat to define an optimum."""


@dataclass(frozen=True)
class DeviceParams:
    """Per-device parameters of the cascade model.

    ``alpha`` and ``kappa`` in MHz (cyclic); lifetimes in microseconds.
    ``T2`` are Ramsey times; the pure-dephasing rates
    ``gamma_phi = 1/T2 - 1/(2 T1)`` must be non-negative, so ``T2 <= 2 T1``
    is enforced.
    """

    alpha: float
    kappa: float
    t1_ge: float
    t1_ef: float
    t2_ge: float
    t2_ef: float

    def __post_init__(self):
        for name in ("alpha", "kappa", "t1_ge", "t1_ef", "t2_ge", "t2_ef"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.t2_ge > 2.0 * self.t1_ge + 1e-12:
            raise ValueError(f"t2_ge = {self.t2_ge} exceeds 2 t1_ge = {2 * self.t1_ge}")
        if self.t2_ef > 2.0 * self.t1_ef + 1e-12:
            raise ValueError(f"t2_ef = {self.t2_ef} exceeds 2 t1_ef = {2 * self.t1_ef}")

    @property
    def gamma1_ge(self) -> float:
        """Energy-relaxation rate of |e>, 1/ns."""
        return rate_from_us(self.t1_ge)

    @property
    def gamma1_ef(self) -> float:
        """Energy-relaxation rate of |f>, 1/ns."""
        return rate_from_us(self.t1_ef)

    @property
    def gamma_phi_ge(self) -> float:
        """Pure-dephasing rate on the ge transition, 1/ns."""
        return rate_from_us(self.t2_ge) - 0.5 * rate_from_us(self.t1_ge)

    @property
    def gamma_phi_ef(self) -> float:
        """Pure-dephasing rate on the ef transition, 1/ns."""
        return rate_from_us(self.t2_ef) - 0.5 * rate_from_us(self.t1_ef)

    def without_decay(self) -> "DeviceParams":
        """Same device with energy relaxation switched off (T1 -> huge),
        keeping the pure-dephasing rates unchanged."""
        huge = 1e12  # us

        def t2_for(gamma_phi):
            if gamma_phi <= 0:
                return 2.0 * huge
            # with T1 huge, 1/T2 = gamma_phi (rates in 1/ns, T2 in us)
            return min(1.0 / gamma_phi / 1e3, 2.0 * huge)

        return replace(self, t1_ge=huge, t1_ef=huge,
                       t2_ge=t2_for(self.gamma_phi_ge), t2_ef=t2_for(self.gamma_phi_ef))

    def without_dephasing(self) -> "DeviceParams":
        """Same device with pure dephasing switched off (T2 -> 2 T1)."""
        return replace(self, t2_ge=2.0 * self.t1_ge, t2_ef=2.0 * self.t1_ef)

    def without_decoherence(self) -> "DeviceParams":
        huge = 1e12
        return replace(self, t1_ge=huge, t1_ef=huge, t2_ge=2 * huge, t2_ef=2 * huge)

    def degraded(self, t1_ge: float, t1_ef: float) -> "DeviceParams":
        """Coherence-collapse profile: T1 set to the given values and T2
        scaled by the same per-transition factors, so the pure-dephasing
        rates grow as the coherence degrades."""
        f_ge = t1_ge / self.t1_ge
        f_ef = t1_ef / self.t1_ef
        return replace(self, t1_ge=t1_ge, t1_ef=t1_ef,
                       t2_ge=self.t2_ge * f_ge, t2_ef=self.t2_ef * f_ef)


def sender_default() -> DeviceParams:
    """Typical sender device (effective single-pole linewidth 150 MHz)."""
    return DeviceParams(alpha=356.0, kappa=150.0, t1_ge=20.0, t1_ef=7.6,
                        t2_ge=22.0, t2_ef=7.3)


def receiver_default() -> DeviceParams:
    """Typical receiver device (effective single-pole linewidth 200 MHz)."""
    return DeviceParams(alpha=352.0, kappa=200.0, t1_ge=18.0, t1_ef=8.6,
                        t2_ge=15.0, t2_ef=5.9)


@dataclass(frozen=True)
class CascadeConfig:
    """Full protocol configuration.

    ``eta`` is the end-to-end transmission efficiency (propagation loss and
    absorption inefficiency folded together, ``eta = (1 - L) eta_abs``).
    """

    sender: DeviceParams
    receiver: DeviceParams
    eta: float
    tx_schedule: PulseSchedule
    rx_schedule: PulseSchedule | None

    def __post_init__(self):
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError(f"eta must lie in [0, 1], got {self.eta}")


@dataclass(frozen=True)
class CascadeModel:
    """Compiled cascade: static Hamiltonian, drive terms, collapse channels."""

    config: CascadeConfig
    hamiltonian: Hamiltonian
    channels: tuple[CollapseChannel, ...]
    record_times: np.ndarray
    max_rate: float
    a_out: Operator
    flux_out: Operator
    loss_flux: Operator

    @property
    def layout(self) -> SpaceLayout:
        return LAYOUT


def _qutrit_op(mat: np.ndarray, which: int) -> Operator:
    op = Operator(SpaceLayout((3,)), mat)
    return hb.embed(op, LAYOUT, which)


def _cavity_op(mat: np.ndarray, which: int) -> Operator:
    op = Operator(SpaceLayout((2,)), mat)
    return hb.embed(op, LAYOUT, which)


def _anharmonicity(alpha_mhz: float, which: int) -> np.ndarray:
    b = np.array([[0, 1, 0], [0, 0, np.sqrt(2.0)], [0, 0, 0]], dtype=complex)
    n = b.conj().T @ b
    nn = b.conj().T @ b.conj().T @ b @ b
    alpha = ang_from_mhz(alpha_mhz)
    return _qutrit_op(-0.5 * alpha * n + 0.5 * alpha * nn, which).mat


def build(config: CascadeConfig) -> CascadeModel:
    """Compile the cascade model from a configuration.

    Includes every Hamiltonian and dissipator term listed in the module
    docstring; with ``eta = 1`` the pure-loss channel operator is identically
    zero (it is kept in the channel list so the count stays at ten).
    """
    ktx = ang_from_mhz(config.sender.kappa)
    krx = ang_from_mhz(config.receiver.kappa)
    eta = config.eta

    b3 = np.array([[0, 1, 0], [0, 0, np.sqrt(2.0)], [0, 0, 0]], dtype=complex)
    a2 = np.array([[0, 1], [0, 0]], dtype=complex)
    btx = _qutrit_op(b3, 0)
    brx = _qutrit_op(b3, 2)
    atx = _cavity_op(a2, 1)
    arx = _cavity_op(a2, 3)

    h0 = _anharmonicity(config.sender.alpha, 0) + _anharmonicity(config.receiver.alpha, 2)
    root = np.sqrt(eta * ktx * krx)
    h0 = h0 + 1j * (root / 2.0) * (atx.dag().mat @ arx.mat - arx.dag().mat @ atx.mat)
    static = Operator(LAYOUT, h0)

    vtx = (atx.mat @ btx.dag().mat @ btx.dag().mat) / np.sqrt(2.0)
    vtx = vtx + vtx.conj().T
    vrx = (arx.mat @ brx.dag().mat @ brx.dag().mat) / np.sqrt(2.0)
    vrx = vrx + vrx.conj().T

    drives = [DriveTerm(Operator(LAYOUT, vtx), config.tx_schedule.times,
                        config.tx_schedule.angular())]
    peak_g = config.tx_schedule.peak
    if config.rx_schedule is not None:
        drives.append(DriveTerm(Operator(LAYOUT, vrx), config.rx_schedule.times,
                                config.rx_schedule.angular()))
        peak_g = max(peak_g, config.rx_schedule.peak)

    def proj(i, j, which):
        m = np.zeros((3, 3), dtype=complex)
        m[i, j] = 1.0
        return _qutrit_op(m, which)

    channels = [
        CollapseChannel(np.sqrt(eta * ktx) * atx + np.sqrt(krx) * arx),
        CollapseChannel(np.sqrt((1.0 - eta) * ktx) * atx),
    ]
    for dev, which in ((config.sender, 0), (config.receiver, 2)):
        channels.append(CollapseChannel(np.sqrt(dev.gamma1_ge) * proj(G, E, which)))
        channels.append(CollapseChannel(np.sqrt(dev.gamma1_ef) * proj(E, F, which)))
        channels.append(CollapseChannel(
            np.sqrt(max(dev.gamma_phi_ge, 0.0)) * (proj(E, E, which) - proj(G, G, which))))
        channels.append(CollapseChannel(
            np.sqrt(max(dev.gamma_phi_ef, 0.0)) * (proj(F, F, which) - proj(E, E, which))))

    # shared record grid: union of the schedule grids
    times = config.tx_schedule.times
    if config.rx_schedule is not None:
        t1 = config.rx_schedule.times
        lo, hi = min(times[0], t1[0]), max(times[-1], t1[-1])
        n = max(times.size, t1.size)
        times = np.linspace(lo, hi, n)

    decoherence = max(
        config.sender.gamma1_ge, config.sender.gamma1_ef,
        config.sender.gamma_phi_ge, config.sender.gamma_phi_ef,
        config.receiver.gamma1_ge, config.receiver.gamma1_ef,
        config.receiver.gamma_phi_ge, config.receiver.gamma_phi_ef,
    )
    max_rate = max(ktx, krx, ang_from_mhz(peak_g), decoherence)

    a_out = np.sqrt(eta * ktx) * atx + np.sqrt(krx) * arx
    flux_out = Operator(LAYOUT, a_out.dag().mat @ a_out.mat)
    loss_flux = Operator(LAYOUT, (1.0 - eta) * ktx * (atx.dag().mat @ atx.mat))

    return CascadeModel(
        config=config,
        hamiltonian=Hamiltonian(static, tuple(drives)),
        channels=tuple(channels),
        record_times=times,
        max_rate=max_rate,
        a_out=a_out,
        flux_out=flux_out,
        loss_flux=loss_flux,
    )


def make_config(sender: DeviceParams | None = None,
                receiver: DeviceParams | None = None,
                eta: float = 1.0,
                kappa_ph: float = 2.0,
                window: float = 8.0,
                samples: int = 1601,
                delay: float = 0.0,
                absorb: bool = True) -> CascadeConfig:
    """Convenience constructor: sech target, matched emit/absorb schedules."""
    sender = sender or sender_default()
    receiver = receiver or receiver_default()
    target = target_waveform(kappa_ph, window, samples)
    tx = emission_schedule(target, sender.kappa)
    rx = absorption_schedule(target, receiver.kappa, delay) if absorb else None
    return CascadeConfig(sender=sender, receiver=receiver, eta=eta,
                         tx_schedule=tx, rx_schedule=rx)


# ---------------------------------------------------------------------------
# Initial states and ideal gates


def qutrit_ket(*amplitudes) -> np.ndarray:
    v = np.array(amplitudes, dtype=complex)
    if v.size != 3:
        v = np.concatenate([v, np.zeros(3 - v.size, dtype=complex)])
    return v / np.linalg.norm(v)


def initial_state(sender_ket: np.ndarray) -> DensityMatrix:
    """Sender qutrit in ``sender_ket``, everything else in vacuum/ground."""
    s = np.asarray(sender_ket, dtype=complex)
    s = s / np.linalg.norm(s)
    vac = np.kron(np.kron(hb.basis_state(2, 0), hb.basis_state(3, 0)), hb.basis_state(2, 0))
    return hb.pure_state(LAYOUT, np.kron(s, vac))


PI_GE = np.array([[0, 1, 0], [1, 0, 0], [0, 0, 1]], dtype=complex)
PI_EF = np.array([[1, 0, 0], [0, 0, 1], [0, 1, 0]], dtype=complex)


def apply_qutrit_gate(rho: DensityMatrix, gate: np.ndarray, which: int) -> DensityMatrix:
    """Instantaneous ideal unitary on one qutrit factor."""
    u = hb.embed(Operator(SpaceLayout((3,)), gate), LAYOUT, which)
    return DensityMatrix(LAYOUT, u.mat @ rho.mat @ u.dag().mat)


# ---------------------------------------------------------------------------
# Protocol runs


@dataclass
class EmissionRecord:
    """Output-line record of one protocol run."""

    times: np.ndarray
    a_out: np.ndarray          # <a_out>(t), sqrt(1/ns) units
    flux: np.ndarray           # <a_out^dag a_out>(t), 1/ns
    loss_flux: np.ndarray      # flux into the propagation-loss port, 1/ns
    populations: dict[str, np.ndarray]
    final: DensityMatrix

    @property
    def energy(self) -> float:
        """Integrated coherent flux int |<a_out>|^2 dt."""
        return float(np.trapezoid(np.abs(self.a_out) ** 2, self.times))

    @property
    def photon_number(self) -> float:
        """Integrated number flux int <a_out^dag a_out> dt."""
        return float(np.trapezoid(self.flux.real, self.times))

    @property
    def lost_number(self) -> float:
        return float(np.trapezoid(self.loss_flux.real, self.times))


def _observers(model: CascadeModel) -> dict[str, Operator]:
    obs = {"a_out": model.a_out, "flux": model.flux_out, "loss": model.loss_flux}
    for name, level in (("g", G), ("e", E), ("f", F)):
        for tag, which in (("tx", 0), ("rx", 2)):
            m = np.zeros((3, 3), dtype=complex)
            m[level, level] = 1.0
            obs[f"p{name}_{tag}"] = _qutrit_op(m, which)
    return obs


def _run(model: CascadeModel, rho0: DensityMatrix) -> Trajectory:
    return evolve(rho0, model.hamiltonian, list(model.channels), model.record_times,
                  observers=_observers(model), max_rate=model.max_rate)


def _record(traj: Trajectory) -> EmissionRecord:
    pops = {k: v.real for k, v in traj.expectations.items() if k.startswith("p")}
    return EmissionRecord(
        times=traj.times,
        a_out=traj.expectations["a_out"],
        flux=traj.expectations["flux"].real,
        loss_flux=traj.expectations["loss"].real,
        populations=pops,
        final=traj.final,
    )


def run_emission(model: CascadeModel, init_ket: np.ndarray) -> EmissionRecord:
    """Emit from the sender prepared in ``init_ket`` (receiver drive off).

    The caller is responsible for passing a model whose receiver schedule is
    disabled (``rx_schedule=None``); the undriven receiver cavity then acts as
    a passive element in the output path.
    """
    traj = _run(model, initial_state(init_ket))
    return _record(traj)


def run_absorption(model: CascadeModel, init_ket: np.ndarray | None = None) -> EmissionRecord:
    """Emission plus absorption; the record's flux is the unabsorbed remainder."""
    if init_ket is None:
        init_ket = qutrit_ket(0, 0, 1)
    traj = _run(model, initial_state(init_ket))
    return _record(traj)


def run_transfer(model: CascadeModel, input_qubit: np.ndarray) -> DensityMatrix:
    """Quantum state transfer of ``a|g> + b|e>`` from sender to receiver.

    The state preparation maps |e> to |f> with an ideal pi_ef at the sender;
    after the cascade evolution an ideal pi_ef at the receiver brings the
    absorbed |f> back to |e>. Returns the full composite density matrix; use
    :func:`receiver_qutrit` / :func:`receiver_qubit` to reduce it.
    """
    v = np.asarray(input_qubit, dtype=complex)
    if v.size != 2:
        raise ValueError("input state must be a qubit amplitude pair (g, e)")
    ket = qutrit_ket(v[0], v[1], 0.0)
    rho0 = initial_state(PI_EF @ ket)
    traj = _run(model, rho0)
    return apply_qutrit_gate(traj.final, PI_EF, 2)


def run_bell(model: CascadeModel) -> DensityMatrix:
    """Remote Bell-state generation.

    The sender is prepared in (|e> + |f>)/sqrt(2); the |f> component emits a
    photon that the receiver absorbs while |e> stays behind. A pi_ge at the
    sender and a pi_ef at the receiver then map the branches onto
    (|gg> + |ee>)/sqrt(2). With the one-way cascade sign and real couplings
    the transferred amplitude carries zero extra phase, so no frame correction
    is applied.
    """
    rho0 = initial_state(qutrit_ket(0, 1, 1))
    traj = _run(model, rho0)
    rho = apply_qutrit_gate(traj.final, PI_GE, 0)
    return apply_qutrit_gate(rho, PI_EF, 2)


def receiver_qutrit(rho: DensityMatrix) -> DensityMatrix:
    return hb.partial_trace(rho, [2])


def sender_qutrit(rho: DensityMatrix) -> DensityMatrix:
    return hb.partial_trace(rho, [0])


def qubit_subspace(rho3: DensityMatrix) -> np.ndarray:
    """Project a qutrit state onto the {|g>, |e>} block and renormalize."""
    block = rho3.mat[:2, :2]
    tr = np.trace(block).real
    if tr <= 0:
        raise ValueError("qubit-subspace population vanishes")
    return block / tr


def receiver_qubit(rho: DensityMatrix) -> np.ndarray:
    return qubit_subspace(receiver_qutrit(rho))


def two_qutrit_state(rho: DensityMatrix) -> np.ndarray:
    """Reduced state of the two qutrits (9x9), cavities traced out."""
    return hb.partial_trace(rho, [0, 2]).mat


def two_qubit_state(rho: DensityMatrix) -> np.ndarray:
    """Two-qutrit reduced state projected onto the two-qubit subspace."""
    rho9 = two_qutrit_state(rho)
    idx = [3 * i + j for i in (G, E) for j in (G, E)]
    block = rho9[np.ix_(idx, idx)]
    tr = np.trace(block).real
    if tr <= 0:
        raise ValueError("two-qubit subspace population vanishes")
    return block / tr


def optimize_delay(config: CascadeConfig, delays: np.ndarray,
                   init_ket: np.ndarray | None = None) -> tuple[float, np.ndarray]:
    """Scan the absorption delay and maximize the receiver |f> population.

    Returns the best delay and the population-vs-delay curve. Ties break
    toward the smaller delay; a curve with max - min < 1e-3 raises
    :class:`FlatDelayCurveError`.
    """
    delays = np.asarray(delays, dtype=float)
    if init_ket is None:
        init_ket = qutrit_ket(0, 0, 1)
    if config.rx_schedule is None:
        raise ValueError("config must include an absorption schedule")
    kappa_ph = config.tx_schedule.kappa_ph
    if kappa_ph > 0:
        span_needed = 4.0 / ang_from_mhz(kappa_ph)  # ns
        if delays.max() - delays.min() < span_needed:
            raise ValueError(
                f"delay scan spans {delays.max() - delays.min():.1f} ns, "
                f"needs >= 4/kappa_ph = {span_needed:.1f} ns")
    pops = np.zeros(delays.size)
    base_rx = config.rx_schedule
    for k, d in enumerate(delays):
        rx = PulseSchedule(times=base_rx.times - base_rx.delay + d,
                           g_eff=base_rx.g_eff, direction="absorb", delay=float(d))
        cfg = replace(config, rx_schedule=rx)
        model = build(cfg)
        traj = _run(model, initial_state(init_ket))
        pops[k] = traj.expectations["pf_rx"][-1].real
    if pops.max() - pops.min() < 1e-3:
        raise FlatDelayCurveError("delay scan is flat; optimum not informative")
    best = delays[int(np.argmax(pops))]
    return float(best), pops

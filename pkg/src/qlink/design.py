"""Resonator design studio: bandwidth objective, fabrication yield, sensitivity.

All operations here evaluate the per-eigenmode design spectral function
(:func:`qlink.resonator.modal_rate`) with the effective coupling taken from
the first-order perturbative dressing at the band-center drive detuning,
which is the combination behind the published design maps (see the module
docstring of :mod:`qlink.resonator` for how it relates to the physical rate).

The bandwidth objective is the width of the largest contiguous photon
frequency window where the emission rate stays above a threshold; the
fabrication Monte Carlo perturbs the four resonator parameters of both
devices independently and asks whether a common frequency remains above the
experiment threshold for both. Per-sample randomness is keyed as
``default_rng([master_seed, sample_index])``, so results are reproducible and
independent of evaluation order, and variance sweeps reuse the same standard
normals scaled by each cell's sigmas.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .drive import DrivenQutritParams, dress_perturbative
from .resonator import CoupledResonatorParams, EmissionContext, diagonalize, modal_rate


class CoarseGridError(ValueError):
    """Raised when the frequency grid cannot resolve band edges to 1 MHz."""


@dataclass(frozen=True)
class QubitParams:
    """Qubit data needed to convert drive strength into g_eff."""

    omega_eg: float  # GHz
    alpha: float     # MHz, positive magnitude


@dataclass(frozen=True)
class DeviceNominal:
    """Nominal design of one device: transfer resonator plus its qubit."""

    resonator: CoupledResonatorParams
    qubit: QubitParams


def sender_nominal() -> DeviceNominal:
    return DeviceNominal(
        resonator=CoupledResonatorParams(omega_r=9.393, omega_f=9.380, coupling_j=44.0,
                                         kappa=120.0, g=159.0),
        qubit=QubitParams(omega_eg=7.982, alpha=356.0),
    )


def receiver_nominal() -> DeviceNominal:
    return DeviceNominal(
        resonator=CoupledResonatorParams(omega_r=9.348, omega_f=9.341, coupling_j=58.0,
                                         kappa=137.0, g=142.0),
        qubit=QubitParams(omega_eg=8.199, alpha=352.0),
    )


def g_eff_at(resonator: CoupledResonatorParams, qubit: QubitParams,
             omega_drive_amp: float, omega_ph: float) -> float:
    """Effective coupling (MHz) at drive strength Omega for a photon at omega_ph.

    The drive frequency follows from the two-photon resonance
    ``omega_d = 2 omega_eg - alpha - omega_ph`` (ac Stark shift excluded) and
    the matrix element is the first-order perturbative one, linear in Omega.
    """
    omega_d = 2.0 * qubit.omega_eg - qubit.alpha * 1e-3 - omega_ph
    dq = DrivenQutritParams(omega_eg=qubit.omega_eg, alpha=qubit.alpha,
                            omega_drive_amp=omega_drive_amp, omega_d=omega_d)
    return resonator.g * dress_perturbative(dq).g_eff_factor


@dataclass(frozen=True)
class BandResult:
    """Largest contiguous above-threshold window."""

    width: float          # MHz
    lo: float             # GHz, 0 when empty
    hi: float             # GHz, 0 when empty
    above: np.ndarray     # boolean mask on the frequency grid

    @property
    def empty(self) -> bool:
        return self.width <= 0


def _largest_run(mask: np.ndarray) -> tuple[int, int]:
    """(start, length) of the longest True run; length 0 when none."""
    best_len = best_start = 0
    run = start = 0
    for k, flag in enumerate(mask):
        if flag:
            if run == 0:
                start = k
            run += 1
            if run > best_len:
                best_len, best_start = run, start
        else:
            run = 0
    return best_start, best_len


def bandwidth(resonator: CoupledResonatorParams, qubit: QubitParams,
              omega_drive_amp: float, threshold: float,
              freq_grid: np.ndarray) -> BandResult:
    """Width of the largest contiguous window with rate >= threshold (MHz).

    ``freq_grid`` (GHz) must be uniform with spacing <= 1 MHz (else the band
    edges are unresolved, :class:`CoarseGridError`) and span at least three
    resonator linewidths.
    """
    freq_grid = np.asarray(freq_grid, dtype=float)
    spacing = np.diff(freq_grid)
    if freq_grid.size < 2 or np.any(spacing <= 0):
        raise ValueError("freq_grid must be strictly increasing")
    step_mhz = spacing.max() * 1e3
    if step_mhz > 1.0 + 1e-9:
        raise CoarseGridError(f"frequency grid step {step_mhz:.3f} MHz exceeds 1 MHz")
    if (freq_grid[-1] - freq_grid[0]) * 1e3 < 3.0 * resonator.kappa:
        raise ValueError("freq_grid must span at least three resonator linewidths")
    decomp = diagonalize(resonator)
    center = decomp.center
    geff = g_eff_at(resonator, qubit, omega_drive_amp, center)
    rate = modal_rate(decomp, EmissionContext(geff), freq_grid)
    mask = rate >= threshold
    start, length = _largest_run(mask)
    if length == 0:
        return BandResult(width=0.0, lo=0.0, hi=0.0, above=mask)
    lo, hi = freq_grid[start], freq_grid[start + length - 1]
    return BandResult(width=length * step_mhz, lo=float(lo), hi=float(hi), above=mask)


@dataclass(frozen=True)
class DesignObjectiveSpec:
    """Bandwidth-objective sweep specification.

    Defaults follow the design study: both resonator frequencies at 9.5 GHz,
    qubit-resonator coupling 220 MHz, drive strength 1 GHz, threshold 8 MHz,
    and a 5-MHz sweep grid over the external decay and the inter-resonator
    coupling. The qubit defaults (7.95 GHz, 350 MHz) are typical values for
    this circuit family.
    """

    omega_r: float = 9.5
    omega_f: float = 9.5
    g: float = 220.0
    omega_drive_amp: float = 1000.0
    qubit: QubitParams = field(default_factory=lambda: QubitParams(7.95, 350.0))
    threshold: float = 8.0
    kappa_grid: np.ndarray = field(default_factory=lambda: np.arange(40.0, 200.0 + 1e-9, 5.0))
    j_grid: np.ndarray = field(default_factory=lambda: np.arange(20.0, 100.0 + 1e-9, 5.0))
    freq_grid: np.ndarray = field(default_factory=lambda: np.arange(9.1, 9.9 + 1e-12, 1e-3))

    def __post_init__(self):
        if self.threshold <= 0:
            raise ValueError("threshold must be positive")
        for name in ("kappa_grid", "j_grid", "freq_grid"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.size == 0:
                raise ValueError(f"{name} must be non-empty")
            object.__setattr__(self, name, arr)


@dataclass
class BandwidthMap:
    """Bandwidth objective over the (kappa, J) sweep grid."""

    kappa_grid: np.ndarray
    j_grid: np.ndarray
    widths: np.ndarray          # (n_kappa, n_j), MHz
    best_kappa: float
    best_j: float
    best_width: float

    def to_csv(self, path) -> None:
        header = "kappa_MHz," + ",".join(f"J{j:g}" for j in self.j_grid)
        data = np.column_stack([self.kappa_grid, self.widths])
        np.savetxt(path, data, delimiter=",", header=header, comments="")


def sweep_design(spec: DesignObjectiveSpec) -> BandwidthMap:
    """Bandwidth map over the (kappa, J) grid; argmax ties break toward the
    smaller kappa, then the smaller J."""
    widths = np.zeros((spec.kappa_grid.size, spec.j_grid.size))
    for i, kappa in enumerate(spec.kappa_grid):
        for j, coupling in enumerate(spec.j_grid):
            if coupling == 0.0:
                widths[i, j] = 0.0  # dark inner mode emits nothing
                continue
            params = CoupledResonatorParams(
                omega_r=spec.omega_r, omega_f=spec.omega_f,
                coupling_j=float(coupling), kappa=float(kappa), g=spec.g)
            widths[i, j] = bandwidth(params, spec.qubit, spec.omega_drive_amp,
                                     spec.threshold, spec.freq_grid).width
    flat = int(np.argmax(widths))  # row-major: first max = smallest kappa, then J
    i, j = np.unravel_index(flat, widths.shape)
    return BandwidthMap(
        kappa_grid=spec.kappa_grid, j_grid=spec.j_grid, widths=widths,
        best_kappa=float(spec.kappa_grid[i]), best_j=float(spec.j_grid[j]),
        best_width=float(widths[i, j]),
    )


# ---------------------------------------------------------------------------
# Fabrication Monte Carlo


@dataclass(frozen=True)
class MonteCarloSpec:
    """Fabrication-variation study specification.

    Standard deviations: ``sigma_inner``/``sigma_outer`` (MHz) on the two
    resonator frequencies and relative variations on ``kappa`` and ``J``;
    both devices are perturbed independently. Per device and sample, the
    drive strength is the largest value satisfying the adiabatic conditions
    ``kappa_+/4 > g_eff`` and ``kappa_-/4 > g_eff`` under the cap
    ``Omega <= omega_cap``. A pair matches when a common 1-MHz grid point
    keeps both devices at or above ``threshold``.
    """

    sender: DeviceNominal = field(default_factory=sender_nominal)
    receiver: DeviceNominal = field(default_factory=receiver_nominal)
    sigma_inner: float = 10.0
    sigma_outer: float = 20.0
    rel_sigma_kappa: float = 0.01
    rel_sigma_j: float = 0.01
    samples: int = 2000
    threshold: float = 4.0
    omega_cap: float = 750.0
    seed: int = 20250101
    freq_grid: np.ndarray = field(default_factory=lambda: np.arange(9.20, 9.55 + 1e-12, 1e-3))

    def __post_init__(self):
        if self.samples < 1:
            raise ValueError("need at least one sample")
        for name in ("sigma_inner", "sigma_outer", "rel_sigma_kappa", "rel_sigma_j"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        object.__setattr__(self, "freq_grid", np.asarray(self.freq_grid, dtype=float))


MIN_KAPPA = 0.1  # MHz floor; a sample this far out is a dead device


def _perturbed(nominal: DeviceNominal, z: np.ndarray, spec: MonteCarloSpec,
               rel_kappa: float, rel_j: float) -> DeviceNominal:
    """Apply standard-normal draws z = (inner, outer, kappa, J) to a device."""
    res = nominal.resonator
    return DeviceNominal(
        resonator=CoupledResonatorParams(
            omega_r=res.omega_r + z[0] * spec.sigma_inner * 1e-3,
            omega_f=res.omega_f + z[1] * spec.sigma_outer * 1e-3,
            kappa=max(res.kappa * (1.0 + z[2] * rel_kappa), MIN_KAPPA),
            coupling_j=max(res.coupling_j * (1.0 + z[3] * rel_j), 0.0),
            g=res.g,
        ),
        qubit=nominal.qubit,
    )


def _device_band(device: DeviceNominal, spec: MonteCarloSpec) -> np.ndarray:
    """Above-threshold mask of one device at its capped drive strength."""
    decomp = diagonalize(device.resonator)
    center = decomp.center
    slope = g_eff_at(device.resonator, device.qubit, 1.0, center)  # MHz per MHz drive
    if slope <= 0:
        return np.zeros(spec.freq_grid.size, dtype=bool)
    kappa_lim = min(decomp.kappa_minus, decomp.kappa_plus) / 4.0
    omega = min(spec.omega_cap, kappa_lim / slope)
    if omega <= 0:
        return np.zeros(spec.freq_grid.size, dtype=bool)
    geff = slope * omega
    rate = modal_rate(decomp, EmissionContext(geff), spec.freq_grid)
    return rate >= spec.threshold


@dataclass
class YieldReport:
    """Outcome of a fabrication Monte Carlo run."""

    spec: MonteCarloSpec
    matching_probability: float
    matches: np.ndarray                  # per-sample booleans
    band_edges: np.ndarray               # (samples, 2, 2): device x (lo, hi) GHz, NaN when empty
    mean_rate: dict[str, np.ndarray]     # per-device mean rate curve (MHz)
    std_rate: dict[str, np.ndarray]

    def to_json(self, path=None) -> str:
        payload = {
            "matching_probability": self.matching_probability,
            "samples": int(self.matches.size),
            "threshold_MHz": self.spec.threshold,
            "seed": self.spec.seed,
        }
        text = json.dumps(payload, indent=2, sort_keys=True)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text

    def curves_csv(self, path) -> None:
        data = np.column_stack([
            self.spec.freq_grid,
            self.mean_rate["sender"], self.std_rate["sender"],
            self.mean_rate["receiver"], self.std_rate["receiver"],
        ])
        np.savetxt(path, data, delimiter=",", comments="",
                   header="freq_GHz,sender_mean_MHz,sender_std_MHz,receiver_mean_MHz,receiver_std_MHz")


def _sample_normals(seed: int, index: int) -> np.ndarray:
    """Eight standard normals for sample ``index`` (sender then receiver,
    each ordered inner, outer, kappa, J)."""
    return np.random.default_rng([seed, index]).standard_normal(8)


def monte_carlo_yield(spec: MonteCarloSpec,
                      rel_kappa: float | None = None,
                      rel_j: float | None = None,
                      collect_curves: bool = True) -> YieldReport:
    """Frequency-matching probability over fabrication variations.

    Per sample both devices are perturbed independently; the pair counts as
    matched when the two above-threshold bands share at least one grid point.
    ``rel_kappa``/``rel_j`` override the spec's relative variations (used by
    :func:`sensitivity_map`); identical seeds then reuse identical standard
    normals, coupling the sweep cells.
    """
    rel_kappa = spec.rel_sigma_kappa if rel_kappa is None else rel_kappa
    rel_j = spec.rel_sigma_j if rel_j is None else rel_j
    n = spec.samples
    grid = spec.freq_grid
    matches = np.zeros(n, dtype=bool)
    edges = np.full((n, 2, 2), np.nan)
    sums = {"sender": np.zeros(grid.size), "receiver": np.zeros(grid.size)}
    sq = {"sender": np.zeros(grid.size), "receiver": np.zeros(grid.size)}

    for i in range(n):
        z = _sample_normals(spec.seed, i)
        masks = []
        for d, (name, nominal) in enumerate((("sender", spec.sender),
                                             ("receiver", spec.receiver))):
            dev = _perturbed(nominal, z[4 * d:4 * d + 4], spec, rel_kappa, rel_j)
            if collect_curves:
                decomp = diagonalize(dev.resonator)
                slope = g_eff_at(dev.resonator, dev.qubit, 1.0, decomp.center)
                kappa_lim = min(decomp.kappa_minus, decomp.kappa_plus) / 4.0
                omega = min(spec.omega_cap, kappa_lim / slope) if slope > 0 else 0.0
                rate = modal_rate(decomp, EmissionContext(slope * omega), grid)
                sums[name] += rate
                sq[name] += rate ** 2
                mask = rate >= spec.threshold
            else:
                mask = _device_band(dev, spec)
            masks.append(mask)
            if mask.any():
                idx = np.nonzero(mask)[0]
                edges[i, d] = (grid[idx[0]], grid[idx[-1]])
        matches[i] = bool(np.any(masks[0] & masks[1]))

    mean = {k: sums[k] / n for k in sums}
    std = {k: np.sqrt(np.maximum(sq[k] / n - mean[k] ** 2, 0.0)) for k in sums}
    return YieldReport(
        spec=spec,
        matching_probability=float(matches.mean()),
        matches=matches,
        band_edges=edges,
        mean_rate=mean,
        std_rate=std,
    )


def sensitivity_map(spec: MonteCarloSpec, rel_j_grid: np.ndarray,
                    rel_kappa_grid: np.ndarray) -> np.ndarray:
    """Matching probability versus the relative variations of J and kappa.

    Frequency sigmas stay at the spec values; the (i, j) entry uses
    ``rel_kappa_grid[i]`` and ``rel_j_grid[j]``. All cells share the same
    per-sample standard normals (same master seed), so scaling a variance
    moves every sample coherently.
    """
    rel_j_grid = np.asarray(rel_j_grid, dtype=float)
    rel_kappa_grid = np.asarray(rel_kappa_grid, dtype=float)
    if np.any(rel_j_grid < 0) or np.any(rel_j_grid > 0.5):
        raise ValueError("rel_j_grid must lie within [0, 0.5]")
    if np.any(rel_kappa_grid < 0) or np.any(rel_kappa_grid > 0.5):
        raise ValueError("rel_kappa_grid must lie within [0, 0.5]")
    out = np.zeros((rel_kappa_grid.size, rel_j_grid.size))
    for i, rk in enumerate(rel_kappa_grid):
        for j, rj in enumerate(rel_j_grid):
            report = monte_carlo_yield(spec, rel_kappa=float(rk), rel_j=float(rj),
                                       collect_curves=False)
            out[i, j] = report.matching_probability
    return out

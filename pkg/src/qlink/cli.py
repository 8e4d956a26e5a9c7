"""Batch command-line front end.

Subcommands run one experiment or design study from a validated YAML
configuration and write plot-ready CSV/JSON files plus a manifest (config
hash, seed, package version, per-file content hashes) into the output
directory. Numeric output is serialized with 12 significant digits and every
run is deterministic given (config, seed).

Exit codes: 0 success, 2 configuration/schema violation, 3 numerical failure.
On failure a machine-readable ``error.json`` is written when the output
directory is available.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from . import cascade as cs
from . import config as cf
from . import design as dg
from . import metrics as mt
from . import tomography as tm
from .resonator import EmissionContext, diagonalize, rate_curve

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _fmt(value):
    if isinstance(value, float):
        return float(f"{value:.12g}")
    if isinstance(value, dict):
        return {k: _fmt(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_fmt(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_fmt(float(v)) for v in value]
    if isinstance(value, (np.floating,)):
        return float(f"{float(value):.12g}")
    if isinstance(value, (np.integer,)):
        return int(value)
    return value


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    h.update(path.read_bytes())
    return h.hexdigest()


class OutputDir:
    def __init__(self, root: Path):
        self.root = root
        root.mkdir(parents=True, exist_ok=True)
        self.files: list[Path] = []

    def csv(self, name: str, header: str, columns) -> Path:
        path = self.root / name
        np.savetxt(path, np.column_stack(columns), delimiter=",",
                   header=header, comments="", fmt="%.12g")
        self.files.append(path)
        return path

    def json(self, name: str, payload: dict) -> Path:
        path = self.root / name
        path.write_text(json.dumps(_fmt(payload), indent=2, sort_keys=True) + "\n")
        self.files.append(path)
        return path

    def manifest(self, command: str, config_path: Path, seed: int | None) -> Path:
        entries = {p.name: _sha256(p) for p in sorted(self.files)}
        payload = {
            "command": command,
            "version": __version__,
            "seed": seed,
            "config_sha256": hashlib.sha256(config_path.read_bytes()).hexdigest(),
            "files": entries,
        }
        path = self.root / "manifest.json"
        path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
        return path


def _threads(args) -> int:
    if args.threads is not None:
        return max(1, args.threads)
    return max(1, int(os.environ.get("QLINK_THREADS", "1")))


# ---------------------------------------------------------------------------
# Workers (module level so ProcessPoolExecutor can pickle them)


def _transfer_worker(doc: dict, name: str) -> tuple[str, np.ndarray]:
    model = cs.build(cf.cascade_config(doc))
    rho = cs.run_transfer(model, tm.CARDINAL_STATES[name])
    return name, cs.receiver_qutrit(rho).mat


def _run_cardinals(doc: dict, n_workers: int) -> dict[str, np.ndarray]:
    names = ["g", "e", "+", "-", "+i", "-i"]
    if n_workers <= 1:
        return dict(_transfer_worker(doc, n) for n in names)
    with ProcessPoolExecutor(max_workers=n_workers) as pool:
        futures = [pool.submit(_transfer_worker, doc, n) for n in names]
        return dict(f.result() for f in futures)


def _tomographic_qutrit(rho3: np.ndarray, shots: int, seed: int,
                        blobs: tm.BlobModel, clf: tm.Classifier,
                        assignment: tm.AssignmentMatrix) -> np.ndarray:
    """Finite-shot reconstruction of one qutrit state through the readout."""
    settings = tm.qutrit_settings()
    counts = np.zeros((len(settings), 3))
    for s, u in enumerate(settings):
        probs = tm.setting_probabilities(rho3, u)
        probs = probs / probs.sum()
        shots_iq = tm.synth_shots(probs, blobs, shots, seed=seed + 1000 * s)
        measured = clf.populations(shots_iq)
        corrected, _ = tm.correct(assignment, measured)
        counts[s] = corrected * shots
    return tm.mle_state(counts, settings, dim=3)


def _calibrated_readout(seed: int, shots: int = 20000):
    blobs = tm.default_blobs()
    ref = [tm.synth_shots(np.eye(3)[k], blobs, shots, seed=seed + k) for k in range(3)]
    clf, assignment = tm.calibrate(ref, seed=seed)
    return blobs, clf, assignment


# ---------------------------------------------------------------------------
# Subcommands


def cmd_gamma_f(doc, out: OutputDir, seed, threads) -> None:
    grid = np.arange(9.20, 9.55 + 1e-12, 1e-3)
    spec = cf.monte_carlo_spec(doc, seed=seed)
    columns = [grid]
    headers = ["freq_GHz"]
    for name, nominal in (("sender", spec.sender), ("receiver", spec.receiver)):
        decomp = diagonalize(nominal.resonator)
        slope = dg.g_eff_at(nominal.resonator, nominal.qubit, 1.0, decomp.center)
        omega = 0.0
        if slope > 0:
            omega = min(spec.omega_cap, min(decomp.kappa_minus, decomp.kappa_plus) / 4.0 / slope)
        ctx = EmissionContext(slope * omega)
        columns.append(rate_curve(decomp, ctx, grid, kind="physical"))
        columns.append(rate_curve(decomp, ctx, grid, kind="modal"))
        headers += [f"{name}_rate_MHz", f"{name}_modal_MHz"]
    out.csv("gamma_f.csv", ",".join(headers), columns)


def cmd_emit(doc, out: OutputDir, seed, threads) -> None:
    model = cs.build(cf.cascade_config(doc, absorb=False))
    record = cs.run_emission(model, cs.qutrit_ket(1, 0, 1))
    out.csv("emission_waveform.csv",
            "time_ns,re_a_out,im_a_out,flux_per_ns,loss_flux_per_ns",
            [record.times, record.a_out.real, record.a_out.imag,
             record.flux, record.loss_flux])
    wf = mt.WaveformRecord.from_amplitude(record.times, record.a_out, source="tx")
    freqs, amps, peak = mt.spectrum(wf)
    out.csv("emission_spectrum.csv", "freq_MHz,amplitude", [freqs, amps])
    pops = record.populations
    out.csv("emission_populations.csv",
            "time_ns," + ",".join(sorted(pops)),
            [record.times] + [pops[k] for k in sorted(pops)])
    out.json("emission_summary.json", {
        "coherent_energy": record.energy,
        "photon_number": record.photon_number,
        "lost_number": record.lost_number,
        "final_pg_tx": float(pops["pg_tx"][-1]),
        "spectrum_peak_MHz": peak,
    })


def cmd_absorb(doc, out: OutputDir, seed, threads) -> None:
    ref_model = cs.build(cf.cascade_config(doc, absorb=False))
    ref = cs.run_absorption(ref_model)
    abs_model = cs.build(cf.cascade_config(doc, absorb=True))
    rec = cs.run_absorption(abs_model)
    eta_abs = mt.absorption_efficiency(
        mt.WaveformRecord.from_emission(rec, source="abs"),
        mt.WaveformRecord.from_emission(ref, source="ref"))
    out.csv("absorption_flux.csv", "time_ns,flux_ref_per_ns,flux_abs_per_ns",
            [ref.times, ref.flux, np.interp(ref.times, rec.times, rec.flux)])
    out.json("absorption_summary.json", {
        "absorption_efficiency": eta_abs,
        "receiver_f_population": float(rec.populations["pf_rx"][-1]),
        "delay_ns": float(doc["protocol"].get("delay", 0.0)),
    })


def cmd_transfer(doc, out: OutputDir, seed, threads) -> None:
    names = ["g", "e", "+", "-", "+i", "-i"]
    states = _run_cardinals(doc, threads)
    ins = [tm.CARDINAL_STATES[n] for n in names]
    exact_out = [tm.qubit_block(states[n]) for n in names]
    chi_exact = tm.process_tomography(ins, exact_out)
    fp_exact = tm.process_fidelity(chi_exact, tm.chi_identity())

    tomo = doc.get("tomography", {})
    shots = int(tomo.get("shots", 100000))
    tomo_seed = seed if seed is not None else int(tomo.get("seed", 7))
    blobs, clf, assignment = _calibrated_readout(tomo_seed)
    recon_out = []
    for k, n in enumerate(names):
        rho3 = _tomographic_qutrit(states[n], shots, tomo_seed + 37 * k,
                                   blobs, clf, assignment)
        recon_out.append(tm.qubit_block(rho3))
    chi_tomo = tm.process_tomography(ins, recon_out)
    fp_tomo = tm.process_fidelity(chi_tomo, tm.chi_identity())

    out.csv("chi_real.csv", "I,X,Y,Z", [chi_tomo.real[:, k] for k in range(4)])
    out.csv("chi_imag.csv", "I,X,Y,Z", [chi_tomo.imag[:, k] for k in range(4)])
    fid_each = {n: float((tm.CARDINAL_STATES[n].conj()
                          @ tm.qubit_block(states[n]) @ tm.CARDINAL_STATES[n]).real)
                for n in names}
    out.json("transfer_summary.json", {
        "process_fidelity_exact": fp_exact,
        "process_fidelity_tomographic": fp_tomo,
        "state_fidelities_exact": fid_each,
        "shots_per_setting": shots,
        "assignment_matrix": assignment.r.tolist(),
    })


def cmd_bell(doc, out: OutputDir, seed, threads) -> None:
    model = cs.build(cf.cascade_config(doc))
    rho = cs.run_bell(model)
    rho4 = cs.two_qubit_state(rho)
    f_exact = tm.bell_fidelity(rho4)

    tomo = doc.get("tomography", {})
    shots = int(tomo.get("shots", 100000))
    tomo_seed = seed if seed is not None else int(tomo.get("seed", 7))
    blobs, clf, assignment = _calibrated_readout(tomo_seed)
    rho9 = cs.two_qutrit_state(rho)
    rho9_recon = tm.two_qutrit_mle_through_readout(
        rho9, shots, tomo_seed, blobs, clf, assignment)
    f_tomo = tm.bell_fidelity(tm.two_qubit_block(rho9_recon))

    out.csv("bell_state_real.csv", "gg,ge,eg,ee", [rho4.real[:, k] for k in range(4)])
    out.csv("bell_state_imag.csv", "gg,ge,eg,ee", [rho4.imag[:, k] for k in range(4)])
    out.json("bell_summary.json", {
        "bell_fidelity_exact": f_exact,
        "bell_fidelity_tomographic": f_tomo,
        "shots_per_setting": shots,
    })


def cmd_budget(doc, out: OutputDir, seed, threads) -> None:
    protocol = doc["protocol"]["kind"]
    if protocol not in ("transfer", "bell"):
        protocol = "transfer"
    budget = mt.error_budget(cf.cascade_config(doc), cf.channel_breakdown(doc),
                             protocol=protocol)
    out.json("error_budget.json", {
        "protocol": budget.protocol,
        "fidelity_ladder": budget.fidelity_ladder,
        "contributions": budget.contributions,
        "residual": budget.residual,
        "total_infidelity": budget.total_infidelity,
    })


def cmd_design_sweep(doc, out: OutputDir, seed, threads) -> None:
    spec = cf.design_spec(doc)
    result = dg.sweep_design(spec)
    out.csv("bandwidth_map.csv",
            "kappa_MHz," + ",".join(f"J{j:g}" for j in result.j_grid),
            [result.kappa_grid] + [result.widths[:, k] for k in range(result.j_grid.size)])
    out.json("design_optimum.json", {
        "kappa_MHz": result.best_kappa,
        "J_MHz": result.best_j,
        "bandwidth_MHz": result.best_width,
        "threshold_MHz": spec.threshold,
    })


def cmd_monte_carlo(doc, out: OutputDir, seed, threads) -> None:
    spec = cf.monte_carlo_spec(doc, seed=seed)
    report = dg.monte_carlo_yield(spec)
    out.csv("rate_curves.csv",
            "freq_GHz,sender_mean_MHz,sender_std_MHz,receiver_mean_MHz,receiver_std_MHz",
            [spec.freq_grid, report.mean_rate["sender"], report.std_rate["sender"],
             report.mean_rate["receiver"], report.std_rate["receiver"]])
    out.json("yield.json", {
        "matching_probability": report.matching_probability,
        "samples": spec.samples,
        "threshold_MHz": spec.threshold,
        "seed": spec.seed,
    })


def cmd_sensitivity(doc, out: OutputDir, seed, threads) -> None:
    spec = cf.monte_carlo_spec(doc, seed=seed)
    rel = doc.get("monte_carlo", {}).get("rel_grid", [0.01, 0.10, 0.20, 0.30])
    rel = np.asarray(rel, dtype=float)
    matrix = dg.sensitivity_map(spec, rel, rel)
    out.csv("sensitivity.csv",
            "rel_kappa," + ",".join(f"relJ{v:g}" for v in rel),
            [rel] + [matrix[:, k] for k in range(rel.size)])
    out.json("sensitivity_summary.json", {
        "rel_grid": rel.tolist(),
        "min_probability": float(matrix.min()),
        "max_probability": float(matrix.max()),
    })


COMMANDS = {
    "gamma-f": cmd_gamma_f,
    "emit": cmd_emit,
    "absorb": cmd_absorb,
    "transfer": cmd_transfer,
    "bell": cmd_bell,
    "budget": cmd_budget,
    "design-sweep": cmd_design_sweep,
    "monte-carlo": cmd_monte_carlo,
    "sensitivity": cmd_sensitivity,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qlink",
        description="Microwave-photon quantum-link simulator and design toolkit")
    parser.add_argument("subcommand", choices=sorted(COMMANDS))
    parser.add_argument("--config", type=Path, default=None,
                        help="YAML configuration (defaults to the bundled profile)")
    parser.add_argument("--out", type=Path, required=True, help="output directory")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the configured random seed")
    parser.add_argument("--threads", type=int, default=None,
                        help="worker processes for independent runs "
                             "(default: QLINK_THREADS or 1)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out = None
    try:
        if args.config is None:
            doc = cf.default_config()
            from importlib import resources
            config_path = Path(str(resources.files("qlink.data").joinpath("paper.yaml")))
        else:
            doc = cf.load_config(args.config)
            config_path = args.config
    except cf.ConfigError as exc:
        _emit_error(args.out, "config", str(exc))
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        out = OutputDir(args.out)
        COMMANDS[args.subcommand](doc, out, args.seed, _threads(args))
        out.manifest(args.subcommand, config_path, args.seed)
    except cf.ConfigError as exc:
        _emit_error(args.out, "config", str(exc))
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # numerical / runtime failure
        _emit_error(args.out, type(exc).__name__, str(exc))
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def _emit_error(out_dir: Path | None, kind: str, message: str) -> None:
    if out_dir is None:
        return
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "error.json").write_text(
            json.dumps({"error": kind, "message": message}, indent=2) + "\n")
    except OSError:
        pass


if __name__ == "__main__":
    sys.exit(main())

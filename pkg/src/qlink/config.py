"""Run-configuration schema, loading, and the bundled default profile.

Configurations are YAML documents validated against a JSON schema (version
``qlink-config/1``); unknown keys are rejected everywhere. All frequencies
are cyclic values (GHz for mode frequencies, MHz for couplings and rates),
all times in nanoseconds except coherence times in microseconds.
"""

from __future__ import annotations

import copy
from importlib import resources

import jsonschema
import numpy as np
import yaml

from . import cascade as cs
from . import design as dg
from .drive import target_waveform

SCHEMA_VERSION = "qlink-config/1"

_DEVICE_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["alpha", "kappa_eff", "t1_ge", "t1_ef", "t2_ge", "t2_ef",
                 "qubit_frequency", "transfer_resonator"],
    "properties": {
        "alpha": {"type": "number", "exclusiveMinimum": 0},
        "kappa_eff": {"type": "number", "exclusiveMinimum": 0},
        "t1_ge": {"type": "number", "exclusiveMinimum": 0},
        "t1_ef": {"type": "number", "exclusiveMinimum": 0},
        "t2_ge": {"type": "number", "exclusiveMinimum": 0},
        "t2_ef": {"type": "number", "exclusiveMinimum": 0},
        "qubit_frequency": {"type": "number", "exclusiveMinimum": 0},
        "transfer_resonator": {
            "type": "object",
            "additionalProperties": False,
            "required": ["omega_r", "omega_f", "coupling_j", "kappa", "g"],
            "properties": {
                "omega_r": {"type": "number", "exclusiveMinimum": 0},
                "omega_f": {"type": "number", "exclusiveMinimum": 0},
                "coupling_j": {"type": "number", "minimum": 0},
                "kappa": {"type": "number", "exclusiveMinimum": 0},
                "g": {"type": "number", "exclusiveMinimum": 0},
            },
        },
    },
}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["version", "devices", "channel", "waveform", "protocol"],
    "properties": {
        "version": {"const": SCHEMA_VERSION},
        "devices": {
            "type": "object",
            "additionalProperties": False,
            "required": ["sender", "receiver"],
            "properties": {"sender": _DEVICE_SCHEMA, "receiver": _DEVICE_SCHEMA},
        },
        "channel": {
            "type": "object",
            "additionalProperties": False,
            "required": ["loss", "eta_abs"],
            "properties": {
                "loss": {"type": "number", "minimum": 0, "maximum": 1},
                "eta_abs": {"type": "number", "minimum": 0, "maximum": 1},
            },
        },
        "waveform": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kappa_ph", "window"],
            "properties": {
                "kappa_ph": {"type": "number", "exclusiveMinimum": 0},
                "window": {"type": "number", "minimum": 5},
                "samples": {"type": "integer", "minimum": 64},
            },
        },
        "protocol": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["transfer", "bell", "emission", "absorption"]},
                "delay": {"type": "number"},
                "ideal": {"type": "boolean"},
            },
        },
        "sweep": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "photon_frequencies": {
                    "type": "array", "items": {"type": "number"}, "minItems": 1},
            },
        },
        "tomography": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "shots": {"type": "integer", "minimum": 1},
                "seed": {"type": "integer"},
            },
        },
        "design": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "threshold": {"type": "number", "exclusiveMinimum": 0},
                "omega_drive_amp": {"type": "number", "exclusiveMinimum": 0},
                "qubit_frequency": {"type": "number", "exclusiveMinimum": 0},
                "alpha": {"type": "number", "exclusiveMinimum": 0},
                "g": {"type": "number", "exclusiveMinimum": 0},
                "omega_r": {"type": "number", "exclusiveMinimum": 0},
                "omega_f": {"type": "number", "exclusiveMinimum": 0},
                "kappa_range": {"type": "array", "items": {"type": "number"},
                                "minItems": 3, "maxItems": 3},
                "j_range": {"type": "array", "items": {"type": "number"},
                            "minItems": 3, "maxItems": 3},
            },
        },
        "monte_carlo": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "samples": {"type": "integer", "minimum": 1},
                "threshold": {"type": "number", "exclusiveMinimum": 0},
                "seed": {"type": "integer"},
                "sigma_inner": {"type": "number", "minimum": 0},
                "sigma_outer": {"type": "number", "minimum": 0},
                "rel_sigma_kappa": {"type": "number", "minimum": 0},
                "rel_sigma_j": {"type": "number", "minimum": 0},
                "omega_cap": {"type": "number", "exclusiveMinimum": 0},
                "rel_grid": {"type": "array", "items": {"type": "number"}, "minItems": 1},
            },
        },
    },
}


class ConfigError(ValueError):
    """Raised on schema violations or unreadable configuration files."""


def validate(document: dict) -> dict:
    try:
        jsonschema.validate(document, SCHEMA)
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config invalid at {path}: {exc.message}") from exc
    return document


def load_config(path) -> dict:
    try:
        with open(path) as fh:
            doc = yaml.safe_load(fh)
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config document must be a mapping")
    return validate(doc)


def default_config() -> dict:
    """The bundled profile: measured device table, 29% propagation loss,
    95% absorption efficiency, 2-MHz sech photons."""
    with resources.files("qlink.data").joinpath("paper.yaml").open() as fh:
        return validate(yaml.safe_load(fh))


# ---------------------------------------------------------------------------
# Builders


def device_params(section: dict) -> cs.DeviceParams:
    return cs.DeviceParams(alpha=section["alpha"], kappa=section["kappa_eff"],
                           t1_ge=section["t1_ge"], t1_ef=section["t1_ef"],
                           t2_ge=section["t2_ge"], t2_ef=section["t2_ef"])


def device_nominal(section: dict) -> dg.DeviceNominal:
    res = section["transfer_resonator"]
    return dg.DeviceNominal(
        resonator=dg.CoupledResonatorParams(
            omega_r=res["omega_r"], omega_f=res["omega_f"],
            coupling_j=res["coupling_j"], kappa=res["kappa"], g=res["g"]),
        qubit=dg.QubitParams(omega_eg=section["qubit_frequency"], alpha=section["alpha"]),
    )


def channel_breakdown(doc: dict):
    from .metrics import ChannelBreakdown
    ch = doc["channel"]
    return ChannelBreakdown(loss=ch["loss"], eta_abs=ch["eta_abs"])


def cascade_config(doc: dict, ideal: bool | None = None,
                   absorb: bool = True) -> cs.CascadeConfig:
    """Cascade configuration from a validated document.

    ``ideal`` overrides the protocol section: unit efficiency and no
    decoherence (used for reference runs).
    """
    sender = device_params(doc["devices"]["sender"])
    receiver = device_params(doc["devices"]["receiver"])
    if ideal is None:
        ideal = bool(doc["protocol"].get("ideal", False))
    eta = 1.0 if ideal else channel_breakdown(doc).eta
    if ideal:
        sender = sender.without_decoherence()
        receiver = receiver.without_decoherence()
    wf = doc["waveform"]
    return cs.make_config(
        sender=sender, receiver=receiver, eta=eta,
        kappa_ph=wf["kappa_ph"], window=wf["window"],
        samples=int(wf.get("samples", 1601)),
        delay=float(doc["protocol"].get("delay", 0.0)),
        absorb=absorb,
    )


def design_spec(doc: dict) -> dg.DesignObjectiveSpec:
    d = doc.get("design", {})
    kwargs = {}
    if "threshold" in d:
        kwargs["threshold"] = d["threshold"]
    if "omega_drive_amp" in d:
        kwargs["omega_drive_amp"] = d["omega_drive_amp"]
    if "g" in d:
        kwargs["g"] = d["g"]
    if "omega_r" in d:
        kwargs["omega_r"] = d["omega_r"]
    if "omega_f" in d:
        kwargs["omega_f"] = d["omega_f"]
    if "qubit_frequency" in d or "alpha" in d:
        kwargs["qubit"] = dg.QubitParams(
            omega_eg=d.get("qubit_frequency", 7.95), alpha=d.get("alpha", 350.0))
    if "kappa_range" in d:
        lo, hi, step = d["kappa_range"]
        kwargs["kappa_grid"] = np.arange(lo, hi + 1e-9, step)
    if "j_range" in d:
        lo, hi, step = d["j_range"]
        kwargs["j_grid"] = np.arange(lo, hi + 1e-9, step)
    return dg.DesignObjectiveSpec(**kwargs)


def monte_carlo_spec(doc: dict, seed: int | None = None) -> dg.MonteCarloSpec:
    m = doc.get("monte_carlo", {})
    kwargs = dict(
        sender=device_nominal(doc["devices"]["sender"]),
        receiver=device_nominal(doc["devices"]["receiver"]),
    )
    for key in ("samples", "threshold", "sigma_inner", "sigma_outer",
                "rel_sigma_kappa", "rel_sigma_j", "omega_cap"):
        if key in m:
            kwargs[key] = m[key]
    if seed is not None:
        kwargs["seed"] = seed
    elif "seed" in m:
        kwargs["seed"] = m["seed"]
    return dg.MonteCarloSpec(**kwargs)


def target_from_config(doc: dict):
    wf = doc["waveform"]
    return target_waveform(wf["kappa_ph"], wf["window"], int(wf.get("samples", 1601)))


def merged(doc: dict, overrides: dict) -> dict:
    """Deep-merge ``overrides`` into a copy of ``doc`` and re-validate."""
    out = copy.deepcopy(doc)

    def merge(dst, src):
        for key, val in src.items():
            if isinstance(val, dict) and isinstance(dst.get(key), dict):
                merge(dst[key], val)
            else:
                dst[key] = val

    merge(out, overrides)
    return validate(out)

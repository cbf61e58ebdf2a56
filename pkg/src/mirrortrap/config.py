"""Config files: schema, unit normalization, digests.

A config is one YAML document with sections particle / trap / gas /
detector / feedback / sim / sweep.  Every quantity is SI internally;
keys may carry an explicit unit suffix (pressure_mbar, waist_um,
phi_pi, ...) and are converted on load.  Unknown keys are rejected with
their dotted path so typos cannot silently fall back to defaults.

The digest is a sha256 over the canonical (normalized, sorted) form, so
two files that mean the same experiment share a digest regardless of
the units they were written in.
"""

import hashlib
import json
import math
from dataclasses import dataclass

import yaml

from .detector import DetectorSpec
from .dynamics import SimControl
from .feedback import FeedbackSpec
from .model import GasSpec, ParticleSpec, TrapSpec

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    """Invalid config content; message carries the offending key path."""


def _canon(x):
    # 12 significant digits: far inside every physical tolerance, but
    # wide enough that value*factor and the directly-typed SI number
    # normalize to the same float, so unit choice cannot leak into the
    # digest through the last bits of the product.
    return float(f"{float(x):.12g}")


def _scale(factor):
    return lambda v: _canon(float(v) * factor)


def _scale_seq(factor):
    def conv(v):
        seq = v if isinstance(v, (list, tuple)) else [v] * 3
        return tuple(_canon(float(e) * factor) for e in seq)
    return conv


def _identity(v):
    return v


# section -> accepted key -> (canonical field, converter)
_SCHEMA = {
    "particle": {
        "radius": ("radius", _scale(1.0)),
        "radius_nm": ("radius", _scale(1e-9)),
        "radius_um": ("radius", _scale(1e-6)),
        "density": ("density", _scale(1.0)),
        "refractive_index": ("refractive_index", _scale(1.0)),
    },
    "trap": {
        "power": ("power", _scale(1.0)),
        "power_w": ("power", _scale(1.0)),
        "power_mw": ("power", _scale(1e-3)),
        "wavelength": ("wavelength", _scale(1.0)),
        "wavelength_nm": ("wavelength", _scale(1e-9)),
        "waist": ("waist", _scale(1.0)),
        "waist_um": ("waist", _scale(1e-6)),
        "focal_length": ("focal_length", _scale(1.0)),
        "focal_length_mm": ("focal_length", _scale(1e-3)),
        "mirror_radius": ("mirror_radius", _scale(1.0)),
        "mirror_radius_mm": ("mirror_radius", _scale(1e-3)),
        "xy_split": ("xy_split", _scale(1.0)),
    },
    "gas": {
        "pressure": ("pressure", _scale(1.0)),
        "pressure_pa": ("pressure", _scale(1.0)),
        "pressure_mbar": ("pressure", _scale(100.0)),
        "temperature": ("temperature", _scale(1.0)),
        "temperature_k": ("temperature", _scale(1.0)),
        "viscosity": ("viscosity", _scale(1.0)),
        "molecule_diameter": ("molecule_diameter", _scale(1.0)),
        "molecule_diameter_nm": ("molecule_diameter", _scale(1e-9)),
    },
    "detector": {
        "e_scat": ("e_scat", _scale(1.0)),
        "e_div": ("e_div", _scale(1.0)),
        "nep_detector": ("nep_detector", _scale(1.0)),
        "nep_detector_nv": ("nep_detector", _scale(1e-9)),
        "nep_system": ("nep_system", _scale(1.0)),
        "nep_system_uv": ("nep_system", _scale(1e-6)),
        "responsivity": ("responsivity", _scale(1.0)),
        "gain": ("gain", _scale(1.0)),
        "quantum_efficiency": ("quantum_efficiency", _scale(1.0)),
        "transmission": ("transmission", _scale(1.0)),
        "conversion": ("conversion", _scale(1.0)),
        "reference_phase": ("reference_phase", _scale(1.0)),
        "reference_phase_pi": ("reference_phase", _scale(math.pi)),
        "xy_pickup": ("xy_pickup", _scale(1.0)),
    },
    "feedback": {
        "eta": ("eta", _scale_seq(1.0)),
        "eta_percent": ("eta", _scale_seq(0.01)),
        "phi": ("phi", _scale_seq(1.0)),
        "phi_pi": ("phi", _scale_seq(math.pi)),
        "pll_bandwidth": ("pll_bandwidth", _scale(1.0)),
        "pll_bandwidth_hz": ("pll_bandwidth", _scale(1.0)),
        "demod_lowpass": ("demod_lowpass", _scale(1.0)),
        "demod_lowpass_hz": ("demod_lowpass", _scale(1.0)),
        "clamp": ("clamp", lambda v: tuple(_canon(e) for e in v)),
        "signal_noise": ("signal_noise", _scale(1.0)),
    },
    "sim": {
        "dt": ("dt", _scale(1.0)),
        "dt_s": ("dt", _scale(1.0)),
        "sample_rate_hz": ("dt", lambda v: 1.0 / float(v)),
        "duration": ("duration", _scale(1.0)),
        "duration_s": ("duration", _scale(1.0)),
        "seed": ("seed", lambda v: int(v)),
        "feedback_mode": ("feedback_mode", _identity),
        "record_stride": ("record_stride", lambda v: int(v)),
        "record_velocity": ("record_velocity", lambda v: bool(v)),
    },
    "sweep": {
        "variable": ("variable", _identity),
        "values": ("values", lambda v: [_canon(e) for e in v]),
        "values_mbar": ("values", lambda v: [_canon(float(e) * 100.0) for e in v]),
        "values_percent": ("values", lambda v: [_canon(float(e) * 0.01) for e in v]),
        "values_pi": ("values", lambda v: [_canon(float(e) * math.pi) for e in v]),
        "values_nm": ("values", lambda v: [_canon(float(e) * 1e-9) for e in v]),
    },
}

_SWEEP_VARIABLES = ("pressure", "eta", "phi", "wavelength")

_TOP_KEYS = ("schema_version", "seed", "output_dir",
             "particle", "trap", "gas", "detector", "feedback", "sim", "sweep")


@dataclass(frozen=True)
class SweepSpec:
    variable: str
    values: tuple


@dataclass(frozen=True)
class ExperimentConfig:
    """All specs of one experiment plus optional sweep declaration."""

    particle: ParticleSpec
    trap: TrapSpec
    gas: GasSpec
    detector: "DetectorSpec | None" = None
    feedback: "FeedbackSpec | None" = None
    control: "SimControl | None" = None
    sweep: "SweepSpec | None" = None
    output_dir: str = "runs"

    @property
    def digest(self):
        return config_digest(self)


def _normalize_section(name, raw):
    if not isinstance(raw, dict):
        raise ConfigError(f"{name}: expected a mapping")
    table = _SCHEMA[name]
    out = {}
    for key, value in raw.items():
        if key not in table:
            raise ConfigError(f"{name}.{key}: unknown key")
        canon, conv = table[key]
        if canon in out:
            raise ConfigError(f"{name}.{key}: duplicate setting of {canon}")
        try:
            out[canon] = conv(value)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{name}.{key}: {exc}") from None
    return out


def normalize(doc):
    """Validate a parsed YAML document; return the canonical SI dict."""
    if not isinstance(doc, dict):
        raise ConfigError("config root must be a mapping")
    for key in doc:
        if key not in _TOP_KEYS:
            raise ConfigError(f"{key}: unknown key")
    version = doc.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError(f"schema_version: unsupported version {version}")
    out = {"schema_version": SCHEMA_VERSION}
    for name in ("particle", "trap", "gas", "detector", "feedback", "sim", "sweep"):
        if name in doc:
            out[name] = _normalize_section(name, doc[name])
    if "seed" in doc:
        out.setdefault("sim", {})
        if "seed" in out["sim"]:
            raise ConfigError("seed: set both at top level and under sim")
        out["sim"]["seed"] = int(doc["seed"])
    if "output_dir" in doc:
        out["output_dir"] = str(doc["output_dir"])
    for section in ("particle", "trap", "gas"):
        if section not in out:
            raise ConfigError(f"{section}: required section missing")
    if "sweep" in out:
        sw = out["sweep"]
        if "variable" not in sw or "values" not in sw:
            raise ConfigError("sweep: needs variable and values")
        if sw["variable"] not in _SWEEP_VARIABLES:
            raise ConfigError(
                f"sweep.variable: must be one of {_SWEEP_VARIABLES}")
        if len(sw["values"]) < 1:
            raise ConfigError("sweep.values: empty grid")
    return out


def _build(norm):
    try:
        particle = ParticleSpec(**norm["particle"])
        trap = TrapSpec(**norm["trap"])
        gas = GasSpec(**norm["gas"])
        detector = DetectorSpec(**norm["detector"]) if "detector" in norm else None
        feedback = FeedbackSpec(**norm["feedback"]) if "feedback" in norm else None
        control = SimControl(**norm["sim"]) if "sim" in norm else None
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    sweep = None
    if "sweep" in norm:
        sweep = SweepSpec(norm["sweep"]["variable"],
                          tuple(norm["sweep"]["values"]))
    return ExperimentConfig(particle=particle, trap=trap, gas=gas,
                            detector=detector, feedback=feedback,
                            control=control, sweep=sweep,
                            output_dir=norm.get("output_dir", "runs"))


def from_dict(doc):
    return _build(normalize(doc))


def load_config(path):
    try:
        with open(path) as fh:
            doc = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: not valid YAML: {exc}") from None
    return from_dict(doc)


def to_dict(cfg):
    """Canonical SI dict of a config (inverse of from_dict)."""
    out = {"schema_version": SCHEMA_VERSION, "output_dir": cfg.output_dir}
    out["particle"] = {
        "radius": cfg.particle.radius,
        "density": cfg.particle.density,
        "refractive_index": cfg.particle.refractive_index,
    }
    out["trap"] = {
        "power": cfg.trap.power, "wavelength": cfg.trap.wavelength,
        "waist": cfg.trap.waist, "focal_length": cfg.trap.focal_length,
        "mirror_radius": cfg.trap.mirror_radius, "xy_split": cfg.trap.xy_split,
    }
    out["gas"] = {
        "pressure": cfg.gas.pressure, "temperature": cfg.gas.temperature,
        "viscosity": cfg.gas.viscosity,
        "molecule_diameter": cfg.gas.molecule_diameter,
    }
    if cfg.detector is not None:
        d = cfg.detector
        out["detector"] = {
            "e_scat": d.e_scat, "e_div": d.e_div,
            "nep_detector": d.nep_detector, "nep_system": d.nep_system,
            "responsivity": d.responsivity, "gain": d.gain,
            "quantum_efficiency": d.quantum_efficiency,
            "transmission": d.transmission, "xy_pickup": d.xy_pickup,
        }
        if d.conversion is not None:
            out["detector"]["conversion"] = d.conversion
        if d.reference_phase is not None:
            out["detector"]["reference_phase"] = d.reference_phase
    if cfg.feedback is not None:
        f = cfg.feedback
        out["feedback"] = {
            "eta": list(f.eta), "phi": list(f.phi),
            "pll_bandwidth": f.pll_bandwidth, "demod_lowpass": f.demod_lowpass,
            "clamp": list(f.clamp), "signal_noise": f.signal_noise,
        }
    if cfg.control is not None:
        c = cfg.control
        out["sim"] = {
            "dt": c.dt, "duration": c.duration, "seed": c.seed,
            "feedback_mode": c.feedback_mode, "record_stride": c.record_stride,
            "record_velocity": c.record_velocity,
        }
    if cfg.sweep is not None:
        out["sweep"] = {"variable": cfg.sweep.variable,
                        "values": list(cfg.sweep.values)}
    return out


def _canon_doc(node):
    if isinstance(node, dict):
        return {k: _canon_doc(v) for k, v in node.items()}
    if isinstance(node, (list, tuple)):
        return [_canon_doc(v) for v in node]
    if isinstance(node, float):
        return _canon(node)
    return node


def config_digest(cfg):
    doc = cfg if isinstance(cfg, dict) else to_dict(cfg)
    blob = json.dumps(_canon_doc(doc), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def _active_axes(feedback):
    axes = [i for i in range(3) if feedback.eta[i] > 0]
    return axes or [2]


def apply_sweep_point(cfg, variable, value):
    """Config for one grid point of a sweep (SI value).

    pressure and wavelength replace the respective spec field; eta and
    phi apply to every axis the feedback currently drives (falling back
    to the axial mode when none is active yet).
    """
    doc = to_dict(cfg)
    doc.pop("sweep", None)
    if variable == "pressure":
        doc["gas"]["pressure"] = value
    elif variable == "wavelength":
        doc["trap"]["wavelength"] = value
    elif variable in ("eta", "phi"):
        if cfg.feedback is None:
            raise ConfigError(f"sweep.variable: {variable} needs a feedback section")
        for i in _active_axes(cfg.feedback):
            doc["feedback"][variable][i] = value
    else:
        raise ConfigError(f"sweep.variable: unknown variable {variable}")
    return from_dict(doc)

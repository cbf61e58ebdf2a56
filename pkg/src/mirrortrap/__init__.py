"""Digital twin of an optically levitated nanoparticle in a
parabolic-mirror trap with parametric feedback cooling, plus the
spectral-analysis pipeline used to characterize it."""

from . import analysis, config, detector, dynamics, feedback, io, model
from .analysis import (AllanCurve, CalibrationResult, LorentzFitResult,
                       QuantumMetrics, ReferenceParams, Spectrum,
                       allan_deviation, extract_reference_params,
                       extract_temperature, fit_cooling_curve, fit_lorentzian,
                       fit_phase_response, ground_state_size, occupancy,
                       photon_recoil_rate, quality_factor, quantum_limits,
                       temperature_from_fit, temperature_from_variance,
                       welch_psd, wavelength_scan_calibration,
                       zero_point_step)
from .config import ConfigError, ExperimentConfig, load_config
from .detector import (DetectorSpec, PowerChain, WavelengthScan,
                       detected_power_chain, harmonic_amplitudes,
                       interference_signal, wavelength_scan)
from .dynamics import SimControl, ThermalDrive, TimeTrace, analytic_psd, simulate
from .feedback import (OPTIMAL_PHASE, FeedbackSpec, PLLState,
                       cooled_temperature, damping_gain, eta_for_gain,
                       ideal_feedback_force, pll_step,
                       steady_state_temperature)
from .model import (GasSpec, ParticleSpec, TrapSpec, gas_damping,
                    knudsen_number, mirror_na, power_for_z_frequency,
                    radius_from_damping, spring_constants, trap_frequencies)

__version__ = "0.1.0"

__all__ = [
    "AllanCurve", "CalibrationResult", "ConfigError", "DetectorSpec",
    "ExperimentConfig", "FeedbackSpec", "GasSpec", "LorentzFitResult",
    "OPTIMAL_PHASE", "PLLState", "ParticleSpec", "PowerChain",
    "QuantumMetrics", "ReferenceParams", "SimControl", "Spectrum",
    "ThermalDrive", "TimeTrace", "TrapSpec", "WavelengthScan",
    "allan_deviation", "analysis", "analytic_psd", "config",
    "cooled_temperature", "damping_gain", "detected_power_chain", "detector",
    "dynamics", "eta_for_gain", "extract_reference_params",
    "extract_temperature", "feedback", "fit_cooling_curve",
    "fit_lorentzian", "fit_phase_response", "gas_damping",
    "ground_state_size",
    "harmonic_amplitudes", "ideal_feedback_force", "interference_signal",
    "io", "knudsen_number", "load_config", "mirror_na", "model",
    "occupancy", "photon_recoil_rate", "pll_step",
    "power_for_z_frequency", "quality_factor", "quantum_limits",
    "radius_from_damping", "simulate", "spring_constants",
    "steady_state_temperature", "temperature_from_fit",
    "temperature_from_variance", "trap_frequencies", "wavelength_scan",
    "wavelength_scan_calibration", "welch_psd", "zero_point_step",
]

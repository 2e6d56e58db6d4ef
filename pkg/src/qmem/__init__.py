"""qmem: design and verification toolkit for broadband multi-absorber
cavity quantum memory.

A comb of 2N resonant absorbers in a single-mode cavity acts on an incoming
pulse through the transfer function S(nu); tuning the comb so the delay
-i arg(S)/nu is flat across the working band turns the device into a
high-efficiency memory.  The package computes S and everything derived from
it, extracts and tracks the complex resonance lines, solves and optimises
the algebraic matching conditions, and cross-validates against a
time-domain integration of the underlying mode equations.
"""

__version__ = "0.1.0"

from .config import (Absorber, InputPulse, MemoryConfig, config_from_dict,
                     config_hash, config_to_dict, equidistant_comb,
                     load_config, save_config, symmetric_config)
from .model import (SpectrumSample, dbs, delay_from_values, delay_time,
                    echo_intensity, frequency_grid, gaussian_spectrum,
                    phase_slope_fd, response_fn, sample_spectrum,
                    spectral_efficiency, spectral_error, t0_analytic,
                    t0_matching, transfer_fn)
from .matching import (MatchingResiduals, OptimizationReport, bernoulli,
                       bernoulli_float, g_continuum, g_critical,
                       g_critical_asymptotic, matching_coefficient, optimize,
                       polygamma, residuals, t0_critical)
from .topology import (LineTrajectory, ResonanceLineSet, line_trajectories,
                       pole_polynomial, resonance_lines, transition_point)
from .timedomain import TimeTrace, output_via_tf, pulse_time_profile, simulate
from . import errors

__all__ = [
    "Absorber", "InputPulse", "MemoryConfig", "SpectrumSample",
    "MatchingResiduals", "OptimizationReport", "LineTrajectory",
    "ResonanceLineSet", "TimeTrace",
    "bernoulli", "bernoulli_float", "config_from_dict", "config_hash",
    "config_to_dict", "dbs", "delay_from_values", "delay_time",
    "echo_intensity", "equidistant_comb", "errors", "frequency_grid",
    "g_continuum", "g_critical", "g_critical_asymptotic", "gaussian_spectrum",
    "line_trajectories", "load_config", "matching_coefficient", "optimize",
    "output_via_tf", "phase_slope_fd", "pole_polynomial", "polygamma",
    "pulse_time_profile", "resonance_lines", "residuals", "response_fn",
    "sample_spectrum",
    "save_config", "simulate", "spectral_efficiency", "spectral_error",
    "symmetric_config", "t0_analytic", "t0_critical", "t0_matching",
    "transfer_fn", "transition_point",
]

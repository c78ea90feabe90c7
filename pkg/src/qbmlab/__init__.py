"""qbmlab — numerical laboratory for the dephasing of a particle weakly
coupled to an Ohmic heat bath.

At zero bath temperature the off-diagonal density-matrix elements decay
as a power law t^(-alpha) with alpha = (2/pi) M gamma (x - x')^2 / hbar,
in contrast to the exponential decay familiar from the high-temperature
regime; the modules here compute the bath kernels and master-equation
coefficients behind that statement, integrate the reduced density matrix
on a grid, and fit decay laws to the resulting coherence traces.
"""
from .params import (SystemParams, BathParams, Timescales, RegimeReport,
                     derive_timescales, coherence_length, decoherence_time,
                     classify_regime, default_fit_window)
from .spectral import SpectralDensity
from .kernels import (KernelTrace, noise_kernel, kernel_trace,
                      noise_kernel_zero_T_closed, noise_kernel_high_T_closed,
                      noise_kernel_quadrature)
from .coefficients import (CoefficientSet, ExponentTrace, alpha_theory,
                           cosine_integral, diffusion_coefficient,
                           diffusion_zero_T_free, decoherence_exponent,
                           exponent_closed_zero_T, exponent_trace)
from .evolution import (CatStateSpec, DensityGrid, EvolveConfig, TermToggles,
                        EvolutionResult, init_cat_state, dephasing_factor,
                        evolve_dephasing, evolve_full, suggest_timestep,
                        grid_trace, hermiticity_residual, purity,
                        write_snapshot, read_snapshot)
from .analysis import (CoherenceTrace, PowerLawFit, ExponentialFit,
                       ModelSelection, fringe_visibility, fit_power_law,
                       fit_exponential, model_select)
from .scenarios import (ScenarioConfig, SCENARIOS, load_config, save_config,
                        run_scenario)

__version__ = "0.1.0"

__all__ = [
    "SystemParams", "BathParams", "Timescales", "RegimeReport",
    "derive_timescales", "coherence_length", "decoherence_time",
    "classify_regime", "default_fit_window",
    "SpectralDensity",
    "KernelTrace", "noise_kernel", "kernel_trace",
    "noise_kernel_zero_T_closed", "noise_kernel_high_T_closed",
    "noise_kernel_quadrature",
    "CoefficientSet", "ExponentTrace", "alpha_theory", "cosine_integral",
    "diffusion_coefficient", "diffusion_zero_T_free", "decoherence_exponent",
    "exponent_closed_zero_T", "exponent_trace",
    "CatStateSpec", "DensityGrid", "EvolveConfig", "TermToggles",
    "EvolutionResult", "init_cat_state", "dephasing_factor",
    "evolve_dephasing", "evolve_full", "suggest_timestep", "grid_trace",
    "hermiticity_residual", "purity", "write_snapshot", "read_snapshot",
    "CoherenceTrace", "PowerLawFit", "ExponentialFit", "ModelSelection",
    "fringe_visibility", "fit_power_law", "fit_exponential", "model_select",
    "ScenarioConfig", "SCENARIOS", "load_config", "save_config",
    "run_scenario",
    "__version__",
]

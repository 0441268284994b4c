"""Renormalized scalar-field energy densities on LCDM backgrounds and the
dark-radiation effect of the higher-derivative J00 term."""

__version__ = "0.1.0"

from .background import (Background, BackgroundError, CosmologyParams,
                         CurvatureTensors00, NumericalBackground, TimePoint,
                         conformal_time, cosmic_time, curvature_at,
                         curvature_from_hubble, hubble_derivatives_lcdm,
                         hubble_lcdm)
from .energy import (ClosedFormMassive, ClosedFormMassless,
                     EnergyDensityBreakdown, FreezeOutParams,
                     RenormalizationChoice, RhoStateResult, bilinear_energy,
                     per_mode_energy, rho_state_dependent, rho_thermal_massive,
                     rho_thermal_massless, rho_total, subtraction_counterterm)
from .friedmann import (EffectiveRadiation, EpsilonBoundsReport,
                        ExtendedFriedmannSolution, epsilon_bounds_report,
                        extract_effective_radiation, solve_extended)
from .modes import (ModeFunction, ModeSolverError, WkbMode, adiabatic_error,
                    solve_mode, wkb_mode, wronskian)
from .states import (BogoliubovPair, GeneralizedThermalState,
                     SamplingFunction, StateOfLowEnergy,
                     build_state_of_low_energy, minimize_bogoliubov,
                     sampled_energy_form, sampled_energy_value,
                     thermal_weights)

__all__ = [
    "Background", "BackgroundError", "CosmologyParams", "CurvatureTensors00",
    "NumericalBackground", "TimePoint", "conformal_time", "cosmic_time",
    "curvature_at", "curvature_from_hubble", "hubble_derivatives_lcdm",
    "hubble_lcdm",
    "ClosedFormMassive", "ClosedFormMassless", "EnergyDensityBreakdown",
    "FreezeOutParams", "RenormalizationChoice", "RhoStateResult",
    "bilinear_energy", "per_mode_energy", "rho_state_dependent",
    "rho_thermal_massive", "rho_thermal_massless", "rho_total",
    "subtraction_counterterm",
    "EffectiveRadiation", "EpsilonBoundsReport", "ExtendedFriedmannSolution",
    "epsilon_bounds_report", "extract_effective_radiation", "solve_extended",
    "ModeFunction", "ModeSolverError", "WkbMode", "adiabatic_error",
    "solve_mode", "wkb_mode", "wronskian",
    "BogoliubovPair", "GeneralizedThermalState", "SamplingFunction",
    "StateOfLowEnergy", "build_state_of_low_energy", "minimize_bogoliubov",
    "sampled_energy_form", "sampled_energy_value", "thermal_weights",
]

"""Physical constants and unit conversions.

Internal unit system: hbar = c = 1 and H0 = 1.  All momenta, masses and
inverse temperatures are carried as multiples of H0; energy densities come
out in units of H0^4 and are reported as fractions of the critical density
rho0 = 3 H0^2/(8 pi G).  Physical units (GeV, Kelvin) appear only at the
CLI boundary, through the converters below.
"""

import math

# CODATA / PDG values
K_BOLTZMANN_EV_PER_K = 8.617333262e-5     # k_B in eV/K
PLANCK_MASS_EV = 1.22089e28               # sqrt(hbar c / G) in eV
GEV_IN_EV = 1.0e9

# Hubble constant used for physical-unit conversions (h = 0.70).
# H0 = 70 km/s/Mpc = 70e3 / (3.0857e22 m) * hbar  ->  1.4935e-33 eV.
HUBBLE_KM_S_MPC = 70.0
_MPC_IN_M = 3.0856775814913673e22
_HBAR_EV_S = 6.582119569e-16
HUBBLE_EV = HUBBLE_KM_S_MPC * 1.0e3 / _MPC_IN_M * _HBAR_EV_S

# Dimensionless Newton constant G * H0^2 for the default H0.
NEWTON_CONSTANT_INTERNAL = (HUBBLE_EV / PLANCK_MASS_EV) ** 2

# Critical density 3/(8 pi G H0^2) in units of H0^4 (~8e120 for h = 0.70).
RHO_CRIT_INTERNAL = 3.0 / (8.0 * math.pi * NEWTON_CONSTANT_INTERNAL)


def mass_gev_to_internal(m_gev, hubble_ev=HUBBLE_EV):
    """Mass in GeV -> mass in units of H0."""
    return m_gev * GEV_IN_EV / hubble_ev


def temperature_kelvin_to_beta(t_kelvin, hubble_ev=HUBBLE_EV):
    """Temperature in Kelvin -> inverse temperature in units of 1/H0."""
    t_ev = t_kelvin * K_BOLTZMANN_EV_PER_K
    return hubble_ev / t_ev


def beta_internal_to_kelvin(beta, hubble_ev=HUBBLE_EV):
    """Inverse temperature in 1/H0 -> temperature in Kelvin."""
    return hubble_ev / (beta * K_BOLTZMANN_EV_PER_K)

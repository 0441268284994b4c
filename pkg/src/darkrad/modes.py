"""Field-mode solutions on the background.

The mode functions chi_k satisfy, in conformal time,

    chi'' + (k^2 + m^2 a^2 + (xi - 1/6) R a^2) chi = 0

with the Wronskian normalization  chi d(conj chi) - conj(chi) d(chi) = i.
Two realizations are provided: a direct high-order integration
(``solve_mode``) and the zeroth-order WKB form (``wkb_mode``)

    chi = exp(-i Int_tau0^tau W) / sqrt(2 W),   W = sqrt(k^2 + m^2 a^2),

which satisfies the normalization exactly for any phase accuracy, and the
mode equation approximately, with errors gauged by ``adiabatic_error``.
Note the 1/sqrt(2W) amplitude: it is the one consistent with the
Wronskian condition (and with the exact massless mode e^{-ik tau}/sqrt(2k)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_simpson, solve_ivp
from scipy.interpolate import CubicSpline

CONFORMAL_COUPLING = 1.0 / 6.0

#: Wronskian drift above which a solve is flagged (spec of the state
#: constructor downstream; integration tolerances normally keep it ~1e-11).
WRONSKIAN_TOL = 1.0e-8

#: refuse direct solves beyond this many oscillation cycles
MAX_CYCLES = 2.0e5


class ModeSolverError(RuntimeError):
    pass


def wronskian(chi, dchi):
    """chi d(conj chi) - conj(chi) d(chi); equals i for a normalized mode."""
    return chi * np.conj(dchi) - np.conj(chi) * dchi


@dataclass
class ModeFunction:
    """Numerically integrated mode chi_k on a conformal-time grid."""

    momentum: float
    mass: float
    coupling: float
    grid: np.ndarray
    chi: np.ndarray
    dchi: np.ndarray
    wronskian_drift: float
    wronskian_ok: bool
    _dense: object = field(default=None, repr=False)

    def __call__(self, tau):
        """(chi, dchi) at arbitrary tau inside the solved range."""
        if self._dense is None:
            raise ModeSolverError("mode has no dense interpolant")
        y = self._dense(np.asarray(tau, dtype=float))
        return y[0] + 1j * y[1], y[2] + 1j * y[3]


@dataclass
class WkbMode:
    """Adiabatic order-0 (WKB) mode anchored at tau0.

    Solves the Wronskian condition exactly; the phase integral is
    tabulated once on a dense grid and splined.
    """

    momentum: float
    mass: float
    tau0: float
    background: object
    tau_span: tuple
    _phase: object = field(default=None, repr=False)

    def __post_init__(self):
        lo, hi = self.tau_span
        if not lo < hi:
            raise ModeSolverError("empty tau span for WKB mode")
        # resolution follows the accumulated phase
        w_hi = self._w(np.array([lo, hi])).max()
        n = int(min(max(4000, 40.0 * w_hi * (hi - lo)), 400_000)) | 1
        tau = np.linspace(lo, hi, n)
        w = self._w(tau)
        phase = cumulative_simpson(w, x=tau, initial=0.0)
        phase -= np.interp(self.tau0, tau, phase)
        self._phase = CubicSpline(tau, phase)

    def _w(self, tau):
        a = self.background.a_of_tau(tau)
        return np.sqrt(self.momentum**2 + (self.mass * a) ** 2)

    def frequency(self, tau):
        return self._w(np.asarray(tau, dtype=float))

    def __call__(self, tau):
        """(chi, dchi) at tau; dchi includes the -W'/(2W) amplitude term."""
        tau = np.asarray(tau, dtype=float)
        a = self.background.a_of_tau(tau)
        H = self.background.hubble(a)
        w = np.sqrt(self.momentum**2 + (self.mass * a) ** 2)
        wprime = self.mass**2 * a**3 * H / w
        chi = np.exp(-1j * self._phase(tau)) / np.sqrt(2.0 * w)
        dchi = (-1j * w - wprime / (2.0 * w)) * chi
        return chi, dchi


def wkb_initial_data(k, m, background, tau0):
    """Exact-Wronskian WKB data (chi, dchi) at tau0 (phase = 0 there)."""
    a0 = background.a_of_tau(tau0)
    w0 = math.sqrt(k**2 + (m * a0) ** 2)
    h0 = background.hubble(a0)
    wprime = m**2 * a0**3 * h0 / w0
    chi0 = 1.0 / math.sqrt(2.0 * w0)
    dchi0 = (-1j * w0 - wprime / (2.0 * w0)) * chi0
    return chi0, dchi0


def solve_mode(k, m, background, grid, *, xi=CONFORMAL_COUPLING,
               initial=None, rtol=1e-10, atol=1e-12,
               max_cycles=MAX_CYCLES) -> ModeFunction:
    """Integrate the mode equation over ``grid`` (increasing conformal times).

    ``initial`` is an optional (chi, dchi) pair at grid[0]; by default the
    order-0 adiabatic (WKB) data is used there.  Raises ModeSolverError when
    the accumulated phase exceeds the cycle budget (use ``wkb_mode`` then).
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or len(grid) < 2 or np.any(np.diff(grid) <= 0):
        raise ModeSolverError("grid must be an increasing 1-d array")
    tau0, tau1 = grid[0], grid[-1]

    a_ends = background.a_of_tau(np.array([tau0, tau1]))
    w_max = float(np.sqrt(k**2 + (m * np.max(a_ends)) ** 2))
    cycles = w_max * (tau1 - tau0) / (2.0 * math.pi)
    if cycles > max_cycles:
        raise ModeSolverError(
            f"mode oscillates ~{cycles:.3g} cycles over the grid "
            f"(budget {max_cycles:.3g}); use the WKB route for this k, m")

    if initial is None:
        chi0, dchi0 = wkb_initial_data(k, m, background, tau0)
    else:
        chi0, dchi0 = initial

    if xi == CONFORMAL_COUPLING:
        def omega2(tau):
            a = background.a_of_tau(tau)
            return k**2 + (m * a) ** 2
    else:
        def omega2(tau):
            a = background.a_of_tau(tau)
            H, Hdot, _, _ = background.hubble_derivatives(a)
            ricci = 6.0 * (Hdot + 2.0 * H**2)
            return k**2 + (m * a) ** 2 + (xi - CONFORMAL_COUPLING) * ricci * a**2

    def rhs(tau, y):
        o2 = omega2(tau)
        return (y[2], y[3], -o2 * y[0], -o2 * y[1])

    y0 = (chi0.real, chi0.imag, dchi0.real, dchi0.imag)
    sol = solve_ivp(rhs, (tau0, tau1), y0, method="DOP853",
                    rtol=rtol, atol=atol, dense_output=True)
    if not sol.success:
        raise ModeSolverError(f"mode integration failed: {sol.message}")

    y = sol.sol(grid)
    chi = y[0] + 1j * y[1]
    dchi = y[2] + 1j * y[3]
    drift = float(np.max(np.abs(wronskian(chi, dchi) - 1j)))
    return ModeFunction(momentum=k, mass=m, coupling=xi, grid=grid,
                        chi=chi, dchi=dchi, wronskian_drift=drift,
                        wronskian_ok=bool(drift < WRONSKIAN_TOL),
                        _dense=sol.sol)


def wkb_mode(k, m, background, tau0, tau_span) -> WkbMode:
    """Adiabatic order-0 mode over ``tau_span`` anchored at tau0."""
    return WkbMode(momentum=k, mass=m, tau0=tau0, background=background,
                   tau_span=tuple(tau_span))


def adiabatic_error(k, m, background, tau):
    """Error estimators (e1, e2) = (H m/W^2, dH/dtau m/W^3) of the WKB form."""
    if m <= 0:
        raise ModeSolverError("adiabatic error estimators require m > 0")
    tau = np.asarray(tau, dtype=float)
    a = background.a_of_tau(tau)
    H, Hdot, _, _ = background.hubble_derivatives(a)
    w2 = k**2 + (m * a) ** 2
    dH_dtau = a * Hdot
    e1 = H * m / w2
    e2 = dH_dtau * m / w2**1.5
    return e1, e2

"""Flat LCDM background geometry.

Provides the Hubble rate, conversions between the time variables
(z, a, cosmological time t, conformal time tau) and the time-time
components of the local curvature tensors entering the semiclassical
energy density:

    G00 = 3 H^2
    I00 = 18 Hdot^2 - 108 H^2 Hdot - 36 H Hddot
    J00 =  6 Hdot^2 -  36 H^2 Hdot - 12 H Hddot      (I00 = 3 J00 on FLRW)
    R   =  6 (Hdot + 2 H^2)

The I00/J00 expressions were obtained once by symbolically varying the
actions Int sqrt(-g) R^2 and Int sqrt(-g) R_ab R^ab with respect to the
inverse metric of ds^2 = N(t)^2 dt^2 - a(t)^2 dx^2 and are frozen here;
the test suite re-derives them independently.  Overdots are cosmological
time derivatives.  Conventions: a(today) = 1, signature (+,-,-,-), R > 0
in de Sitter.

Time origins: both t and tau vanish at a = 1 (today).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicSpline, make_interp_spline

from . import constants


class BackgroundError(ValueError):
    """Invalid background input (non-positive scale factor, bad grid, ...)."""


class QuadratureError(RuntimeError):
    """A quadrature failed to reach the requested tolerance."""

    def __init__(self, msg, estimate=None):
        super().__init__(msg)
        self.estimate = estimate


@dataclass(frozen=True)
class CosmologyParams:
    """LCDM background parameters in internal units (H0 = 1).

    ``newton_constant`` is the dimensionless combination G H0^2; it fixes
    the critical density rho0 = 3/(8 pi G H0^2) used to normalize all
    reported energy densities.
    """

    hubble_constant: float = 1.0
    omega_lambda: float = 0.6999
    omega_m: float = 0.3
    omega_r: float = 1.0e-4
    newton_constant: float = constants.NEWTON_CONSTANT_INTERNAL

    def __post_init__(self):
        if self.hubble_constant <= 0:
            raise BackgroundError("hubble_constant must be positive")
        if min(self.omega_lambda, self.omega_m, self.omega_r) < 0:
            raise BackgroundError("density fractions must be non-negative")
        if self.newton_constant <= 0:
            raise BackgroundError("newton_constant must be positive")

    @classmethod
    def flat(cls, omega_m=0.3, omega_r=1.0e-4, **kw):
        """Flat cosmology: omega_lambda = 1 - omega_m - omega_r."""
        return cls(omega_lambda=1.0 - omega_m - omega_r,
                   omega_m=omega_m, omega_r=omega_r, **kw)

    @property
    def rho_crit(self):
        """Critical density 3 H0^2/(8 pi G) in units of H0^4."""
        return 3.0 * self.hubble_constant**2 / (8.0 * math.pi * self.newton_constant)

    def is_flat(self, tol=1e-12):
        return abs(self.omega_lambda + self.omega_m + self.omega_r - 1.0) < tol


@dataclass(frozen=True)
class TimePoint:
    """One instant on the background in all four time variables."""

    redshift: float
    scale_factor: float
    cosmological_time: float
    conformal_time: float


@dataclass(frozen=True)
class CurvatureTensors00:
    """Time-time curvature components and the Ricci scalar at one instant."""

    g00: float
    G00: float
    I00: float
    J00: float
    ricci_scalar: float


# ---------------------------------------------------------------------------
# closed-form LCDM relations
# ---------------------------------------------------------------------------

def hubble_lcdm(a, params: CosmologyParams):
    """H(a) = H0 sqrt(Omega_L + Omega_m/a^3 + Omega_r/a^4) for a > 0."""
    a = np.asarray(a, dtype=float)
    if np.any(a <= 0):
        raise BackgroundError("scale factor must be positive")
    e2 = params.omega_lambda + params.omega_m / a**3 + params.omega_r / a**4
    out = params.hubble_constant * np.sqrt(e2)
    return float(out) if out.ndim == 0 else out


def hubble_derivatives_lcdm(a, params: CosmologyParams):
    """(H, Hdot, Hddot, Hdddot) at scale factor a, analytic.

    Uses u(a) = (H/H0)^2 and d/dt = a H d/da:
        Hdot   = (a/2) u'
        Hddot  = (a H/2)(u' + a u'')
        Hdddot = a H d/da [Hddot]
    all in units of suitable powers of H0.
    """
    a = np.asarray(a, dtype=float)
    if np.any(a <= 0):
        raise BackgroundError("scale factor must be positive")
    h0 = params.hubble_constant
    om, orad, ol = params.omega_m, params.omega_r, params.omega_lambda
    u = ol + om / a**3 + orad / a**4
    u1 = -3.0 * om / a**4 - 4.0 * orad / a**5
    u2 = 12.0 * om / a**5 + 20.0 * orad / a**6
    u3 = -60.0 * om / a**6 - 120.0 * orad / a**7
    H = h0 * np.sqrt(u)
    Hdot = h0**2 * (a / 2.0) * u1
    Hddot = h0**2 * (a * H / 2.0) * (u1 + a * u2)
    # d/da of (a sqrt(u)/2)(u1 + a u2), then times a H
    dda = (np.sqrt(u) / 2.0 + a * u1 / (4.0 * np.sqrt(u))) * (u1 + a * u2) \
        + (a * np.sqrt(u) / 2.0) * (2.0 * u2 + a * u3)
    Hdddot = h0**3 * a * np.sqrt(u) * dda
    return H, Hdot, Hddot, Hdddot


def curvature_from_hubble(H, Hdot, Hddot, hubble_constant=1.0):
    """CurvatureTensors00 from the Hubble rate and its first two
    cosmological-time derivatives (frozen symbolic-variation results)."""
    H = float(H)
    Hdot = float(Hdot)
    Hddot = float(Hddot)
    J00 = 6.0 * Hdot**2 - 36.0 * H**2 * Hdot - 12.0 * H * Hddot
    return CurvatureTensors00(
        g00=1.0,
        G00=3.0 * H**2,
        I00=3.0 * J00,
        J00=J00,
        ricci_scalar=6.0 * (Hdot + 2.0 * H**2),
    )


def conformal_time(a, params: CosmologyParams, rtol=1e-11):
    """tau(a) = Int_1^a da'/(a'^2 H(a')), with tau(1) = 0.

    Computed by adaptive quadrature in ln a'.  Strictly increasing in a.
    """
    return _time_integral(a, params, power=2, rtol=rtol)


def cosmic_time(a, params: CosmologyParams, rtol=1e-11):
    """t(a) = Int_1^a da'/(a' H(a')), with t(1) = 0."""
    return _time_integral(a, params, power=1, rtol=rtol)


def _time_integral(a, params, power, rtol):
    a = float(a)
    if a <= 0:
        raise BackgroundError("scale factor must be positive")
    if a == 1.0:
        return 0.0

    def integrand(lna):
        ai = math.exp(lna)
        # d tau = da/(a^2 H) = d ln a / (a H);  dt = d ln a / H
        return 1.0 / (ai ** (power - 1) * hubble_lcdm(ai, params))

    val, err = quad(integrand, 0.0, math.log(a), epsabs=0.0, epsrel=rtol, limit=400)
    if abs(err) > 10.0 * rtol * max(abs(val), 1e-300) + 1e-15:
        raise QuadratureError(
            f"time integral reached error {err:.3e} for target rtol {rtol:.1e}",
            estimate=val)
    return val


def curvature_at(point, params: CosmologyParams):
    """Curvature tensors at a TimePoint (or bare scale factor) on LCDM."""
    a = point.scale_factor if isinstance(point, TimePoint) else float(point)
    H, Hdot, Hddot, _ = hubble_derivatives_lcdm(a, params)
    return curvature_from_hubble(H, Hdot, Hddot, params.hubble_constant)


# ---------------------------------------------------------------------------
# cached background with spline maps between time variables
# ---------------------------------------------------------------------------

@dataclass
class Background:
    """LCDM background with precomputed tau(a), t(a) maps.

    The splines cover ``a_range`` (log-spaced, ``points_per_efold`` nodes
    per e-fold); node values come from the adaptive quadrature above, so
    interpolation error is the only approximation.  All methods accept
    scalars or arrays.
    """

    params: CosmologyParams = field(default_factory=CosmologyParams)
    a_range: tuple = (1.0e-5, 50.0)
    points_per_efold: int = 200

    def __post_init__(self):
        lo, hi = self.a_range
        if not (0 < lo < 1 < hi):
            raise BackgroundError("a_range must bracket a = 1")
        # ln a = 0 must be a node so the time origins are exact there
        n_lo = int(math.ceil(-math.log(lo) * self.points_per_efold)) + 1
        n_hi = int(math.ceil(math.log(hi) * self.points_per_efold)) + 1
        lna = np.concatenate([np.linspace(math.log(lo), 0.0, n_lo),
                              np.linspace(0.0, math.log(hi), n_hi)[1:]])
        a = np.exp(lna)
        h = hubble_lcdm(a, self.params)
        # cumulative integrals of d ln a/(a H) and d ln a/H from a=1
        dtau = 1.0 / (a * h)
        dt = 1.0 / h
        tau = _cumulative_from_one(lna, dtau)
        t = _cumulative_from_one(lna, dt)
        self._lna = lna
        self._tau_of_lna = CubicSpline(lna, tau)
        self._t_of_lna = CubicSpline(lna, t)
        self._lna_of_tau = CubicSpline(tau, lna)
        self._lna_of_t = CubicSpline(t, lna)
        self._tau_range = (tau[0], tau[-1])

    # -- time-variable maps -------------------------------------------------

    def hubble(self, a):
        return hubble_lcdm(a, self.params)

    def tau_of_a(self, a):
        return self._tau_of_lna(np.log(a))

    def t_of_a(self, a):
        return self._t_of_lna(np.log(a))

    def a_of_tau(self, tau):
        self._check_tau(tau)
        return np.exp(self._lna_of_tau(tau))

    def a_of_t(self, t):
        return np.exp(self._lna_of_t(t))

    def tau_of_t(self, t):
        return self.tau_of_a(self.a_of_t(t))

    @property
    def tau_range(self):
        return self._tau_range

    def _check_tau(self, tau):
        lo, hi = self._tau_range
        if np.any(np.asarray(tau) < lo) or np.any(np.asarray(tau) > hi):
            raise BackgroundError(
                f"conformal time outside tabulated range [{lo:.6g}, {hi:.6g}]")

    def timepoint(self, *, z=None, a=None, tau=None, t=None) -> TimePoint:
        """Build a TimePoint from any one time variable.

        Scale factors outside the spline range fall back to the adaptive
        quadrature, so the map stays valid out to arbitrary redshift.
        """
        given = [v is not None for v in (z, a, tau, t)]
        if sum(given) != 1:
            raise BackgroundError("specify exactly one of z, a, tau, t")
        if z is not None:
            a = 1.0 / (1.0 + float(z))
        elif tau is not None:
            a = float(self.a_of_tau(tau))
        elif t is not None:
            a = float(self.a_of_t(t))
        a = float(a)
        if a <= 0:
            raise BackgroundError("scale factor must be positive")
        lo, hi = self.a_range
        if lo <= a <= hi:
            t_val = float(self.t_of_a(a))
            tau_val = float(self.tau_of_a(a))
        else:
            t_val = cosmic_time(a, self.params)
            tau_val = conformal_time(a, self.params)
        return TimePoint(
            redshift=1.0 / a - 1.0,
            scale_factor=a,
            cosmological_time=t_val,
            conformal_time=tau_val,
        )

    # -- derived geometry ---------------------------------------------------

    def hubble_derivatives(self, a):
        return hubble_derivatives_lcdm(a, self.params)

    def curvature(self, a) -> CurvatureTensors00:
        return curvature_at(float(a), self.params)

    def conformal_a_derivatives(self, a):
        """(a, a', a'', a''') with primes = conformal-time derivatives.

        a'   = a^2 H
        a''  = a^3 (2 H^2 + Hdot)
        a''' = a^4 (6 H^3 + 7 H Hdot + Hddot)
        """
        a = np.asarray(a, dtype=float)
        H, Hdot, Hddot, _ = hubble_derivatives_lcdm(a, self.params)
        a1 = a**2 * H
        a2 = a**3 * (2.0 * H**2 + Hdot)
        a3 = a**4 * (6.0 * H**3 + 7.0 * H * Hdot + Hddot)
        return a, a1, a2, a3


def _cumulative_from_one(lna, integrand):
    """Cumulative integral of integrand d(lna), anchored to 0 at ln a = 0.

    ln a = 0 is guaranteed to be a grid node, so the origin convention is
    exact at that node.
    """
    from scipy.integrate import cumulative_simpson

    vals = cumulative_simpson(integrand, x=lna, initial=0.0)
    i0 = int(np.argmin(np.abs(lna)))
    return vals - vals[i0]


# ---------------------------------------------------------------------------
# numerically supplied backgrounds (solutions of the extended equation)
# ---------------------------------------------------------------------------

class NumericalBackground:
    """Background defined by H(z) samples, e.g. a solved extended equation.

    Hubble derivatives come from a quintic spline of E(x) = H/H0 against
    x = ln(1+z); a cubic spline of the same data provides an independent
    error estimate.  If the two disagree on Hddot beyond ``smoothness_tol``
    (relative), the grid is declared too coarse.
    """

    def __init__(self, z, hubble_over_h0, params: CosmologyParams,
                 smoothness_tol=1e-3):
        z = np.asarray(z, dtype=float)
        e = np.asarray(hubble_over_h0, dtype=float)
        if z.ndim != 1 or z.shape != e.shape or len(z) < 8:
            raise BackgroundError("need matching 1-d z and H arrays, >= 8 points")
        if np.any(np.diff(z) <= 0):
            raise BackgroundError("z grid must be strictly increasing")
        x = np.log1p(z)
        self._spl5 = make_interp_spline(x, e, k=5)
        self._spl3 = make_interp_spline(x, e, k=3)
        self.params = params
        self._smoothness_tol = smoothness_tol
        self._xrange = (x[0], x[-1])

    def hubble_derivatives(self, a):
        """(H, Hdot, Hddot) at scale factor a, via d/dt = -H d/dx."""
        a = np.asarray(a, dtype=float)
        x = -np.log(a)
        lo, hi = self._xrange
        if np.any(x < lo - 1e-12) or np.any(x > hi + 1e-12):
            raise BackgroundError("requested point outside the H(z) sample range")
        h0 = self.params.hubble_constant
        E = self._spl5(x)
        E1 = self._spl5(x, 1)
        E2 = self._spl5(x, 2)
        E2_alt = self._spl3(x, 2)
        scale = np.max(np.abs(E2)) + np.max(np.abs(E)) * 1e-6
        if np.max(np.abs(E2 - E2_alt)) > self._smoothness_tol * scale:
            raise BackgroundError(
                "H(z) sample too coarse for second derivatives; refine the grid")
        H = h0 * E
        Hdot = -h0**2 * E * E1
        Hddot = h0**3 * E * (E1**2 + E * E2)
        return H, Hdot, Hddot

    def curvature(self, a) -> CurvatureTensors00:
        H, Hdot, Hddot = self.hubble_derivatives(a)
        return curvature_from_hubble(float(H), float(Hdot), float(Hddot),
                                     self.params.hubble_constant)

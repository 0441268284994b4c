"""Renormalized energy densities by mode-sum quadrature with adiabatic
subtraction, closed-form thermal pieces, trace anomaly, and the
renormalization-freedom terms; assembly of the total density.

Mode-sum normalization (conformal coupling, conformal time):

    rho = (1/(2 pi^2 a^4)) Int_0^inf dk k^2 eps_k,
    eps_k = (|chi'|^2 + (k^2 + m^2 a^2) |chi|^2) / 2,

so the exact massless conformal mode gives eps_k = k/2 and a thermal
dressing reproduces pi^2/(30 beta^4 a^4).  The vacuum part is rendered
finite by subtracting the adiabatic expansion of eps_k (order 0, 2 or 4
in derivatives of a); the order-2 and order-4 pieces integrate to local
curvature terms,

    Int k^2 eps2 dk / (2 pi^2 a^4) = m^2 H^2 / (96 pi^2)
    Int k^2 eps4 dk / (2 pi^2 a^4) = (J00/6 - H^4) / (960 pi^2)   (m > 0)

(frozen from the adiabatic-expansion oracle; note the order-4 integral is
mass independent and does not commute with the pointwise m -> 0 limit,
where eps2 = eps4 = 0 identically).  Scheme differences are therefore
local curvature terms absorbed by ``RenormalizationChoice``.

All densities are reported as fractions of rho0 = 3 H0^2/(8 pi G).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .background import (CosmologyParams, CurvatureTensors00, QuadratureError,
                         curvature_from_hubble, hubble_derivatives_lcdm)

TWO_PI_SQ = 2.0 * math.pi ** 2


# ---------------------------------------------------------------------------
# per-mode quadratic forms (frozen from the symbolic T_00 derivation)
# ---------------------------------------------------------------------------

def per_mode_energy(chi, dchi, k, m, a):
    """Classical energy density of one mode, in units where the mode-sum
    prefactor 1/(2 pi^2 a^4) is stripped: (|chi'|^2 + W^2 |chi|^2)/2 with
    W^2 = k^2 + m^2 a^2.  Real and >= 0."""
    w2 = k**2 + (m * np.asarray(a)) ** 2
    return 0.5 * (np.abs(dchi) ** 2 + w2 * np.abs(chi) ** 2)


def bilinear_energy(chi, dchi, k, m, a):
    """Bilinear (unconjugated) energy form ((chi')^2 + W^2 chi^2)/2.

    Pairs with ``per_mode_energy`` in the smeared-energy quadratic form of
    the Bogoliubov transformation; vanishes identically on the exact
    massless conformal mode.
    """
    w2 = k**2 + (m * np.asarray(a)) ** 2
    return 0.5 * (dchi**2 + w2 * chi**2)


# ---------------------------------------------------------------------------
# adiabatic counterterms
# ---------------------------------------------------------------------------

def counterterm_from_derivs(k, m, a, a1, a2, a3, order=4):
    """Adiabatic expansion of eps_k to the given order in derivatives of a.

    a1, a2, a3 are conformal-time derivatives of a.  Orders:
        0: W/2
        2: + W'^2/(16 W^3)
        4: + (-8 W^2 W' W''' + 4 W^2 W''^2 + 40 W W'^2 W'' - 45 W'^4)/(256 W^7)
    """
    if order not in (0, 2, 4):
        raise ValueError("subtraction order must be 0, 2 or 4")
    k = np.asarray(k, dtype=float)
    w = np.sqrt(k**2 + (m * a) ** 2)
    ct = 0.5 * w
    if order == 0 or m == 0.0:
        return ct if np.ndim(ct) else float(ct)
    w1 = m**2 * a * a1 / w
    ct = ct + w1**2 / (16.0 * w**3)
    if order == 4:
        w2 = m**2 * (a1**2 + a * a2) / w - w1**2 / w
        w3 = (m**2 * (3.0 * a1 * a2 + a * a3) / w
              - m**2 * (a1**2 + a * a2) * w1 / w**2
              - 2.0 * w1 * w2 / w + w1**3 / w**2)
        ct = ct + (-8.0 * w**2 * w1 * w3 + 4.0 * w**2 * w2**2
                   + 40.0 * w * w1**2 * w2 - 45.0 * w1**4) / (256.0 * w**7)
    return ct if np.ndim(ct) else float(ct)


def subtraction_counterterm(k, m, background, tau, order=4):
    """Counterterm at conformal time tau on the given background."""
    a = background.a_of_tau(tau)
    a, a1, a2, a3 = background.conformal_a_derivatives(a)
    return counterterm_from_derivs(k, m, a, a1, a2, a3, order=order)


def adiabatic_order2_density(m, H):
    """k-integrated order-2 counterterm piece over 2 pi^2 a^4 (H0^4 units)."""
    return m**2 * H**2 / (96.0 * math.pi**2)


def adiabatic_order4_density(H, Hdot, Hddot):
    """k-integrated order-4 counterterm piece over 2 pi^2 a^4, for m > 0.

    Mass independent: (J00/6 - H^4)/(960 pi^2).  Contains the conformal
    anomaly structure H^4 next to the conserved J00 combination.
    """
    j00 = 6.0 * Hdot**2 - 36.0 * H**2 * Hdot - 12.0 * H * Hddot
    return (j00 / 6.0 - H**4) / (960.0 * math.pi**2)


# ---------------------------------------------------------------------------
# renormalization freedom and breakdown containers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RenormalizationChoice:
    """The freedom in the definition of the energy density.

    gamma multiplies the state-independent (H/H0)^4 anomaly term and is
    fixed by the field content (~1e-122 for two scalar fields in units of
    rho0); delta defaults to zero with the Hadamard scale mu anchored in
    the laboratory range where Newton's constant is measured.  mu_scale is
    carried relative to that anchor; at conformal coupling its only
    surviving running is along J00 (the m^2 G_ab running vanishes for
    xi = 1/6 and the m^4 volume running is absorbed in the measured
    omega_lambda).
    """

    omega_lambda_ren: float = 0.6999
    delta: float = 0.0
    epsilon: float = 0.0
    gamma: float = 1.0e-122
    mu_scale: float = 1.0

    def __post_init__(self):
        if self.mu_scale <= 0:
            raise ValueError("mu_scale must be positive")


@dataclass(frozen=True)
class EnergyDensityBreakdown:
    """Components of the total energy density, in units of rho0."""

    rho_gvac_m: float
    rho_gvac_0: float
    rho_gth_m: float
    rho_gth_0: float
    anomaly: float
    lambda_term: float
    delta_term: float
    epsilon_term: float

    @property
    def total(self):
        return (self.rho_gvac_m + self.rho_gvac_0 + self.rho_gth_m
                + self.rho_gth_0 + self.anomaly + self.lambda_term
                + self.delta_term + self.epsilon_term)

    def as_dict(self):
        return {
            "rho_gvac_m": self.rho_gvac_m, "rho_gvac_0": self.rho_gvac_0,
            "rho_gth_m": self.rho_gth_m, "rho_gth_0": self.rho_gth_0,
            "anomaly": self.anomaly, "lambda_term": self.lambda_term,
            "delta_term": self.delta_term, "epsilon_term": self.epsilon_term,
            "total": self.total,
        }


@dataclass(frozen=True)
class FreezeOutParams:
    """Freeze-out inputs for the massive thermal closed form.

    The WIMP defaults follow the standard effective-Boltzmann values
    x_F = 15 + 3 log10(m/GeV) and a_F = 1e-12 (m/GeV)^-1.
    """

    x_F: float
    a_F: float
    mass_gev: float

    def __post_init__(self):
        if self.x_F <= 0:
            raise ValueError("x_F must be positive")
        if not 0 < self.a_F < 1:
            raise ValueError("a_F must lie in (0, 1)")

    @classmethod
    def wimp(cls, mass_gev):
        if mass_gev <= 0:
            raise ValueError("mass must be positive")
        return cls(x_F=15.0 + 3.0 * math.log10(mass_gev),
                   a_F=1.0e-12 / mass_gev,
                   mass_gev=mass_gev)

    def beta_internal(self, hubble_ev):
        """Inverse temperature in 1/H0 units: beta = x_F/(a_F m)."""
        from .constants import mass_gev_to_internal
        m_int = mass_gev_to_internal(self.mass_gev, hubble_ev)
        return self.x_F / (self.a_F * m_int)


# ---------------------------------------------------------------------------
# closed-form thermal densities
# ---------------------------------------------------------------------------

def rho_thermal_massless(beta, a, params: CosmologyParams):
    """pi^2/(30 beta^4 a^4) as a fraction of rho0 (beta in 1/H0 units)."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    a = np.asarray(a, dtype=float)
    out = math.pi**2 / (30.0 * beta**4) / a**4 / params.rho_crit
    return float(out) if out.ndim == 0 else out


def rho_thermal_massive(m, beta, a_F, a, params: CosmologyParams):
    """Large-m freeze-out approximation of the massive thermal density,

        rho = (2 pi)^{-3/2} (m/(beta^3 a^3)) x_F^{3/2} e^{-x_F},

    x_F = beta a_F m, as a fraction of rho0.  Valid for x_F >> 1; warns
    below x_F = 5.  Scales exactly as 1/a^3 (matter-like).
    """
    x_f = beta * a_F * m
    if x_f <= 0:
        raise ValueError(f"x_F = beta a_F m must be positive (got {x_f:.3g})")
    if x_f < 5.0:
        warnings.warn(f"freeze-out approximation dubious at x_F = {x_f:.3g} < 5",
                      stacklevel=2)
    a = np.asarray(a, dtype=float)
    rho = (2.0 * math.pi) ** (-1.5) * m / (beta**3 * a**3) \
        * x_f**1.5 * math.exp(-x_f)
    out = rho / params.rho_crit
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class ClosedFormMassless:
    """Massless thermal sector handled analytically (gvac = 0)."""

    beta: float


@dataclass(frozen=True)
class ClosedFormMassive:
    """Massive thermal sector via the freeze-out closed form (gvac ~ 0)."""

    mass: float
    beta: float
    a_F: float


# ---------------------------------------------------------------------------
# nested Clenshaw-Curtis quadrature in ln k
# ---------------------------------------------------------------------------

_CC_CACHE = {}


def _cc_nodes_weights(n):
    """Clenshaw-Curtis nodes/weights on [-1, 1] with n intervals (n even)."""
    if n in _CC_CACHE:
        return _CC_CACHE[n]
    j = np.arange(n + 1)
    theta = math.pi * j / n
    x = np.cos(theta)
    # solve for weights from exact Chebyshev moments
    kk = np.arange(n + 1)
    M = np.cos(np.outer(kk, theta))
    moments = np.where(kk % 2 == 0, 2.0 / (1.0 - kk.astype(float) ** 2 + (kk == 1)), 0.0)
    moments[1] = 0.0
    w = np.linalg.solve(M, moments)
    _CC_CACHE[n] = (x, w)
    return x, w


class RhoQuadratureError(QuadratureError):
    pass


@dataclass
class RhoStateResult:
    """k-integrated state densities (fractions of rho0) with error report."""

    rho_gvac: np.ndarray
    rho_gth: np.ndarray
    err_gvac: np.ndarray
    err_gth: np.ndarray
    k_max: float
    n_kernel_calls: int


class _LnkQuadrature:
    """Marching octave panels in ln k with nested Clenshaw-Curtis rules.

    ``kernel(k)`` returns (len(k), n_cols) of ln-measure integrand values
    (the k^3 factor included).  Panels that fail the nested 8/16/32 check
    are bisected (the integrand oscillates in k near the sampling window);
    kernel values are cached, so bisection reuses earlier evaluations.
    """

    def __init__(self, kernel, rel_tol, abs_tol, max_depth=6):
        self.kernel = kernel
        self.rel_tol = rel_tol
        self.abs_tol = abs_tol
        self.max_depth = max_depth
        self.cache = {}
        self.calls = 0

    def _values(self, lnk):
        need = [lk for lk in lnk if lk not in self.cache]
        if need:
            vals = self.kernel(np.exp(np.array(need)))
            self.calls += len(need)
            for lk, row in zip(need, vals):
                self.cache[lk] = np.asarray(row, dtype=float)
        return np.array([self.cache[lk] for lk in lnk])

    def _rule(self, lo, hi, n):
        x, w = _cc_nodes_weights(n)
        lnk = 0.5 * (lo + hi) + 0.5 * (hi - lo) * x
        rows = self._values(lnk)
        return 0.5 * (hi - lo) * np.einsum("i,ij->j", w, rows)

    def panel(self, lo, hi, scale, depth=0):
        """(integral, error) over [lo, hi] in ln k."""
        est = self._rule(lo, hi, 8)
        for n in (16, 32):
            new = self._rule(lo, hi, n)
            err = np.abs(new - est)
            eff = np.maximum(scale, np.abs(new))
            est = new
            if np.all(err <= np.maximum(self.abs_tol, self.rel_tol * eff) * 0.25):
                return est, err
        if depth >= self.max_depth:
            return est, err
        mid = 0.5 * (lo + hi)
        i1, e1 = self.panel(lo, mid, scale, depth + 1)
        i2, e2 = self.panel(mid, hi, scale, depth + 1)
        return i1 + i2, e1 + e2


def _integrate_octaves(kernel, k_lo, k_cap, rel_tol, abs_tol, min_k_reach):
    """Accumulate octave panels from k_lo upward until the last panel and
    the k^-3 tail bound drop below tolerance for every column."""
    ln2 = math.log(2.0)
    quad = _LnkQuadrature(kernel, rel_tol, abs_tol)
    lo = math.log(k_lo)
    totals = None
    errors = None
    colscale = None
    while True:
        hi = lo + ln2
        scale = 0.0 if colscale is None else colscale
        est, err = quad.panel(lo, hi, scale)
        if totals is None:
            totals = np.zeros_like(est)
            errors = np.zeros_like(est)
            colscale = np.zeros_like(est)
        totals += est
        errors += err
        colscale = np.maximum(colscale, np.abs(totals))
        k_edge = math.exp(hi)
        tail = 0.5 * np.abs(quad._values([hi])[0])
        tol = np.maximum(abs_tol, rel_tol * colscale)
        done = (np.all(np.abs(est) <= tol) and np.all(tail <= tol)
                and k_edge >= min_k_reach)
        if done:
            errors = errors + tail
            if np.any(errors > np.maximum(abs_tol, 10.0 * rel_tol * colscale)):
                raise RhoQuadratureError(
                    "k-quadrature error budget exceeded "
                    f"(worst {float(np.max(errors)):.3g})",
                    estimate=(totals, errors))
            return totals, errors, k_edge, quad.calls
        if k_edge >= k_cap:
            raise RhoQuadratureError(
                f"k-quadrature not converged at k = {k_edge:.3g} "
                f"(tail bound {float(np.max(tail)):.3g})",
                estimate=(totals, errors + tail))
        lo = hi


def rho_state_dependent(state, tau, *, order=4, rel_tol=1e-6, abs_tol=None,
                        k_lo=None, k_cap=None) -> RhoStateResult:
    """State-dependent densities (rho_gvac, rho_gth) at conformal time(s) tau.

    rho_gvac = (1/(2 pi^2 a^4)) Int dk k^2 [eps(SLE mode) - counterterm]
    rho_gth  = (1/(2 pi^2 a^4)) Int dk k^2  2 n(k) eps(SLE mode)

    both as fractions of rho0, by nested Clenshaw-Curtis quadrature on
    octave panels in ln k with an explicit k^-3 tail bound.  ``state`` is a
    StateOfLowEnergy (n = 0) or GeneralizedThermalState.  ``abs_tol`` is an
    absolute tolerance on the rho0 fractions; the default is a deep
    sub-dominant floor, 1e-9 of the natural component scales (the local
    order-2/4 curvature terms and, for thermal states, the massless
    closed form), which also regularizes exactly-vanishing components.
    """
    bg = state.background
    params = bg.params
    taus = np.atleast_1d(np.asarray(tau, dtype=float))
    a = np.asarray(bg.a_of_tau(taus), dtype=float)
    m = state.mass

    a_, a1, a2, a3 = bg.conformal_a_derivatives(a)
    h = bg.hubble(a)
    kscale = float(np.max(np.maximum(a * h, a * m))) if m > 0 else float(np.max(a * h))
    if k_lo is None:
        k_lo = 1e-3 * kscale
    if k_cap is None:
        k_cap = 1e4 * kscale
    # march beyond both the curvature scale and the thermal support
    beta = getattr(state, "beta", None)
    min_k_reach = 8.0 * kscale
    if beta is not None:
        min_k_reach = max(min_k_reach, 20.0 / beta)

    if abs_tol is None:
        hmax, amin = float(np.max(h)), float(np.min(a))
        local_scale = (m**2 * hmax**2 / (96.0 * math.pi**2)
                       + hmax**4 / (960.0 * math.pi**2))
        if beta is not None:
            local_scale += math.pi**2 / (30.0 * beta**4 * amin**4)
        abs_tol = 1e-9 * local_scale / params.rho_crit

    prefac = 1.0 / (TWO_PI_SQ * a**4) / params.rho_crit

    def kernel(ks):
        rows = np.empty((len(ks), 2 * len(taus)))
        for i, k in enumerate(ks):
            chi, dchi = state.chi_dchi(k, taus)
            eps = per_mode_energy(chi, dchi, k, m, a)
            ct = counterterm_from_derivs(k, m, a_, a1, a2, a3, order=order)
            n_occ = state.occupancy(k)
            # ln-measure: k^3 * (...)
            rows[i, :len(taus)] = k**3 * (eps - ct) * prefac
            rows[i, len(taus):] = k**3 * 2.0 * n_occ * eps * prefac
        return rows

    totals, errors, k_reached, calls = _integrate_octaves(
        kernel, k_lo, k_cap, rel_tol, np.asarray(abs_tol, dtype=float), min_k_reach)

    n = len(taus)
    res = RhoStateResult(
        rho_gvac=totals[:n] if np.ndim(tau) else float(totals[0]),
        rho_gth=totals[n:] if np.ndim(tau) else float(totals[n]),
        err_gvac=errors[:n] if np.ndim(tau) else float(errors[0]),
        err_gth=errors[n:] if np.ndim(tau) else float(errors[n]),
        k_max=k_reached, n_kernel_calls=calls)
    return res


# ---------------------------------------------------------------------------
# assembly
# ---------------------------------------------------------------------------

def mu_scale_term(renorm: RenormalizationChoice, j00_hat, params):
    """Residual mu-running of the Hadamard-vs-adiabatic conversion.

    At conformal coupling only the J00 direction survives (the m^2 G_ab
    running carries xi - 1/6 and the m^4 volume running is fixed by the
    measured omega_lambda), with the standard one-loop log coefficient.
    """
    if renorm.mu_scale == 1.0:
        return 0.0
    return math.log(renorm.mu_scale) * j00_hat / (2880.0 * math.pi**2) \
        / params.rho_crit


def rho_total(z, renorm: RenormalizationChoice, params: CosmologyParams, *,
              massless=None, massive=None, background=None, order=4,
              hubble_derivs=None, quad_kwargs=None) -> EnergyDensityBreakdown:
    """Assemble the total energy density at redshift z, in units of rho0.

    ``massless``/``massive`` select the field sectors: ClosedFormMassless /
    ClosedFormMassive evaluate the analytic forms (their gvac parts vanish:
    exactly for the massless field, to freeze-out accuracy for the massive
    one); GeneralizedThermalState instances are integrated by quadrature.
    ``hubble_derivs`` overrides (H, Hdot, Hddot) for non-LCDM backgrounds,
    e.g. solutions of the extended equation.
    """
    a = 1.0 / (1.0 + float(z))
    h0 = params.hubble_constant
    if hubble_derivs is None:
        H, Hdot, Hddot, _ = hubble_derivatives_lcdm(a, params)
    else:
        H, Hdot, Hddot = hubble_derivs
    curv = curvature_from_hubble(H, Hdot, Hddot, h0)
    e2 = (H / h0) ** 2
    j_hat = curv.J00 / h0**4

    rho_gvac_0 = 0.0
    rho_gth_0 = 0.0
    rho_gvac_m = 0.0
    rho_gth_m = 0.0

    if massless is not None:
        if isinstance(massless, ClosedFormMassless):
            rho_gth_0 = float(rho_thermal_massless(massless.beta, a, params))
        else:
            tau = float(background.tau_of_a(a)) if background is not None \
                else float(massless.background.tau_of_a(a))
            res = rho_state_dependent(massless, tau, order=order,
                                      **(quad_kwargs or {}))
            rho_gvac_0 = float(res.rho_gvac)
            rho_gth_0 = float(res.rho_gth)

    if massive is not None:
        if isinstance(massive, ClosedFormMassive):
            rho_gth_m = float(rho_thermal_massive(
                massive.mass, massive.beta, massive.a_F, a, params))
        else:
            tau = float(massive.background.tau_of_a(a))
            res = rho_state_dependent(massive, tau, order=order,
                                      **(quad_kwargs or {}))
            rho_gvac_m = float(res.rho_gvac)
            rho_gth_m = float(res.rho_gth)
        rho_gvac_m += mu_scale_term(renorm, j_hat, params)

    return EnergyDensityBreakdown(
        rho_gvac_m=rho_gvac_m,
        rho_gvac_0=rho_gvac_0,
        rho_gth_m=rho_gth_m,
        rho_gth_0=rho_gth_0,
        anomaly=renorm.gamma * e2**2,
        lambda_term=renorm.omega_lambda_ren,
        delta_term=renorm.delta * e2,
        epsilon_term=renorm.epsilon * j_hat,
    )

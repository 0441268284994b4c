"""The extended Friedmann equation with the higher-derivative J00 term.

Solved as an ODE for H(z):

    (H/H0)^2 = Omega_L + Omega_m (1+z)^3 + Omega_r (1+z)^4 + eps J00/H0^4.

With x = ln(1+z), u = (H/H0)^2 and d/dt = -H d/dx, the frozen FLRW form
J00 = 6 Hdot^2 - 36 H^2 Hdot - 12 H Hddot becomes

    J00/H0^4 = -6 u u'' + (3/2) u'^2 + 18 u u'

(primes = d/dx).  The integration uses the effective-radiation variable

    v(x) = (u - Omega_L - Omega_m e^{3x}) e^{-4x},

which subtracts the known matter/Lambda part analytically: v is identically
Omega_r for eps = 0, LCDM initial data is (v, v') = (Omega_r, 0), and the
dark-radiation fraction is read off as the large-z plateau of v.  In the
pure-radiation limit the J00 combination vanishes identically (the scalar
curvature is zero), which is why bounded solutions become radiation-like.

The fast mode of the singular perturbation obeys delta'' = -delta/(6 eps u):
oscillatory for eps > 0, exponentially unstable for eps < 0 (rate
1/sqrt(6|eps| u), ~1e7 per e-fold of redshift at eps ~ 1e-15) -- the
instability that makes negative eps observationally untenable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .background import CosmologyParams

#: literature bounds on eps
BBN_EPSILON_MAX = 2.0e-15          # BBN-compatible range is [0, this)
STAROBINSKY_EPSILON = 1.0e-113     # inflationary value
TORSION_EPSILON_MAX = 1.0e-60      # torsion-balance upper bound

#: declare divergence when H exceeds this multiple of the LCDM value
BLOWUP_FACTOR = 1.0e6


class FriedmannError(RuntimeError):
    pass


class RadiationFitError(RuntimeError):
    pass


@dataclass
class ExtendedFriedmannSolution:
    """H(z) solution of the extended equation (or its LCDM closed form)."""

    epsilon: float
    params: CosmologyParams
    z: np.ndarray                  # grid, increasing
    hubble_over_h0: np.ndarray     # E = H/H0 on the grid
    v: np.ndarray                  # effective radiation variable
    vprime: np.ndarray             # dv/dx
    initial: tuple                 # (E, dE/dz) at z = 0
    diverged: bool
    z_blowup: float | None

    def lcdm_hubble(self, z):
        z = np.asarray(z, dtype=float)
        p = self.params
        return np.sqrt(p.omega_lambda + p.omega_m * (1 + z) ** 3
                       + p.omega_r * (1 + z) ** 4)

    def hubble_derivatives_at(self, z):
        """(H, Hdot, Hddot) for feeding back into the energy assembly.

        u'' along the solution comes from the extended equation itself:
        eps = 0 falls back to the analytic LCDM derivatives.
        """
        p = self.params
        h0 = p.hubble_constant
        z = float(z)
        x = math.log1p(z)
        if self.epsilon == 0.0:
            from .background import hubble_derivatives_lcdm
            H, Hdot, Hddot, _ = hubble_derivatives_lcdm(1.0 / (1.0 + z), p)
            return H, Hdot, Hddot
        xs = np.log1p(self.z)
        v = float(np.interp(x, xs, self.v))
        vp = float(np.interp(x, xs, self.vprime))
        u, up, upp = _u_and_derivs(x, v, vp, self.epsilon, p)
        H = h0 * math.sqrt(u)
        Hdot = -h0**2 * up / 2.0
        Hddot = h0**3 * math.sqrt(u) * upp / 2.0
        return H, Hdot, Hddot


@dataclass
class EffectiveRadiation:
    """Plateau fit of the effective radiation fraction at large z."""

    omega_r_tilde: float
    window: tuple
    residual: float


@dataclass(frozen=True)
class EpsilonBoundsReport:
    """Verdicts of eps against the three literature bounds."""

    epsilon: float
    bbn_compatible: bool
    bbn_range: tuple = (0.0, BBN_EPSILON_MAX)
    bbn_provenance: str = "primordial light-nuclei abundances (BBN)"
    vs_starobinsky: str = ""       # 'above' | 'equal' | 'below'
    starobinsky_value: float = STAROBINSKY_EPSILON
    starobinsky_provenance: str = "R^2 inflation fit to CMB data"
    within_torsion_bound: bool = True
    torsion_bound: float = TORSION_EPSILON_MAX
    torsion_provenance: str = "Yukawa corrections in torsion-balance experiments"


def _rhs_factory(eps, params):
    ol, om, orad = params.omega_lambda, params.omega_m, params.omega_r

    def rhs(x, y):
        v, vp = y
        e3, e4 = math.exp(3.0 * x), math.exp(4.0 * x)
        u = ol + om * e3 + v * e4
        up = 3.0 * om * e3 + (vp + 4.0 * v) * e4
        num = (orad - v) + eps * (
            -54.0 * u * om * math.exp(-x)
            - 6.0 * u * (8.0 * vp + 16.0 * v)
            + math.exp(-4.0 * x) * (1.5 * up * up + 18.0 * u * up))
        return (vp, num / (6.0 * eps * u))

    return rhs


def _u_and_derivs(x, v, vp, eps, params):
    """(u, u', u'') along a solution, u'' via the extended equation."""
    ol, om, orad = params.omega_lambda, params.omega_m, params.omega_r
    e3, e4 = math.exp(3.0 * x), math.exp(4.0 * x)
    u = ol + om * e3 + v * e4
    up = 3.0 * om * e3 + (vp + 4.0 * v) * e4
    rhs = _rhs_factory(eps, params)
    vpp = rhs(x, (v, vp))[1]
    upp = 9.0 * om * e3 + (vpp + 8.0 * vp + 16.0 * v) * e4
    return u, up, upp


def solve_extended(epsilon, params: CosmologyParams, z_max=1.0e9,
                   initial=None, *, rtol=1e-10, atol=None,
                   n_out=600) -> ExtendedFriedmannSolution:
    """Integrate the extended Friedmann equation from z = 0 toward z_max.

    ``initial`` is (E, dE/dz) at z = 0; by default the LCDM values.  For
    epsilon = 0 the algebraic LCDM solution is returned directly.  A
    blow-up (H exceeding BLOWUP_FACTOR times the LCDM value, H^2 crossing
    zero, or integrator breakdown while the solution is running away) sets
    ``diverged`` instead of raising.
    """
    eps = float(epsilon)
    p = params
    x_max = math.log1p(z_max)
    x_out = np.linspace(0.0, x_max, n_out)
    z_out = np.expm1(x_out)
    ol, om, orad = p.omega_lambda, p.omega_m, p.omega_r

    e0_lcdm = math.sqrt(ol + om + orad)
    dEdz_lcdm = (3.0 * om + 4.0 * orad) / (2.0 * e0_lcdm)
    if initial is None:
        initial = (e0_lcdm, dEdz_lcdm)
    e0, dEdz0 = initial

    if eps == 0.0:
        e = np.sqrt(ol + om * (1 + z_out) ** 3 + orad * (1 + z_out) ** 4)
        return ExtendedFriedmannSolution(
            epsilon=0.0, params=p, z=z_out, hubble_over_h0=e,
            v=np.full_like(z_out, orad), vprime=np.zeros_like(z_out),
            initial=(e0_lcdm, dEdz_lcdm), diverged=False, z_blowup=None)

    u0 = e0**2
    up0 = 2.0 * e0 * dEdz0          # du/dx = du/dz at z = 0
    v0 = u0 - ol - om
    vp0 = up0 - 3.0 * om - 4.0 * v0

    rhs = _rhs_factory(eps, p)

    def rho_lcdm(x):
        return ol + om * math.exp(3.0 * x) + orad * math.exp(4.0 * x)

    def event_blowup(x, y):
        u = ol + om * math.exp(3.0 * x) + y[0] * math.exp(4.0 * x)
        return u - BLOWUP_FACTOR**2 * rho_lcdm(x)
    event_blowup.terminal = True
    event_blowup.direction = 1.0

    def event_collapse(x, y):
        u = ol + om * math.exp(3.0 * x) + y[0] * math.exp(4.0 * x)
        return u - 1.0e-12 * rho_lcdm(x)
    event_collapse.terminal = True
    event_collapse.direction = -1.0

    if atol is None:
        atol = rtol * orad * 1e-2
    sol = solve_ivp(rhs, (0.0, x_max), (v0, vp0), method="Radau",
                    t_eval=x_out, rtol=rtol, atol=atol,
                    events=(event_blowup, event_collapse),
                    dense_output=False)

    hit_event = any(len(te) for te in sol.t_events)
    if hit_event:
        x_hit = min(te[0] for te in sol.t_events if len(te))
        n_ok = len(sol.t)
        v = np.full_like(z_out, np.nan)
        vp = np.full_like(z_out, np.nan)
        v[:n_ok] = sol.y[0]
        vp[:n_ok] = sol.y[1]
        e = _hubble_from_v(x_out, v, p)
        return ExtendedFriedmannSolution(
            epsilon=eps, params=p, z=z_out, hubble_over_h0=e, v=v, vprime=vp,
            initial=initial, diverged=True, z_blowup=float(np.expm1(x_hit)))

    if not sol.success:
        # distinguish breakdown-in-runaway (divergence) from a plain failure
        n_ok = len(sol.t)
        if n_ok:
            x_last = sol.t[-1]
            u_last = ol + om * math.exp(3 * x_last) \
                + sol.y[0][-1] * math.exp(4 * x_last)
            ratio = u_last / rho_lcdm(x_last)
            if not np.isfinite(ratio) or ratio > 1e2 or ratio < 1e-2:
                v = np.full_like(z_out, np.nan)
                vp = np.full_like(z_out, np.nan)
                v[:n_ok] = sol.y[0]
                vp[:n_ok] = sol.y[1]
                e = _hubble_from_v(x_out, v, p)
                return ExtendedFriedmannSolution(
                    epsilon=eps, params=p, z=z_out, hubble_over_h0=e,
                    v=v, vprime=vp, initial=initial, diverged=True,
                    z_blowup=float(np.expm1(x_last)))
        raise FriedmannError(
            f"extended Friedmann integration failed at eps = {eps:.3e}: "
            f"{sol.message}")

    v = sol.y[0]
    vp = sol.y[1]
    e = _hubble_from_v(x_out, v, p)
    return ExtendedFriedmannSolution(
        epsilon=eps, params=p, z=z_out, hubble_over_h0=e, v=v, vprime=vp,
        initial=initial, diverged=False, z_blowup=None)


def _hubble_from_v(x, v, params):
    u = params.omega_lambda + params.omega_m * np.exp(3.0 * x) \
        + v * np.exp(4.0 * x)
    with np.errstate(invalid="ignore"):
        return np.sqrt(u)


def extract_effective_radiation(sol: ExtendedFriedmannSolution,
                                window=(1.0e7, 1.0e9),
                                residual_threshold=1.0e-3) -> EffectiveRadiation:
    """Fit a^4 (H^2/H0^2 - Omega_L - Omega_m/a^3), i.e. v, to a constant.

    Averages v over the window and reports the maximum relative deviation
    as the residual; raises RadiationFitError when the solution is not yet
    radiation-like there.
    """
    if sol.diverged:
        raise RadiationFitError(
            f"solution diverged at z = {sol.z_blowup:.4g}; "
            "no radiation plateau exists")
    z_lo, z_hi = window
    mask = (sol.z >= z_lo) & (sol.z <= z_hi) & np.isfinite(sol.v)
    if np.count_nonzero(mask) < 4:
        raise RadiationFitError("fit window contains too few solution points")
    vwin = sol.v[mask]
    mean = float(np.mean(vwin))
    residual = float(np.max(np.abs(vwin - mean)) / abs(mean))
    if residual > residual_threshold:
        raise RadiationFitError(
            f"solution not radiation-like in window {window}: "
            f"residual {residual:.3e} > {residual_threshold:.1e}")
    return EffectiveRadiation(omega_r_tilde=mean, window=(z_lo, z_hi),
                              residual=residual)


def epsilon_bounds_report(epsilon) -> EpsilonBoundsReport:
    """Classify eps against the three literature bounds."""
    eps = float(epsilon)
    if eps > STAROBINSKY_EPSILON:
        rel = "above"
    elif eps < STAROBINSKY_EPSILON:
        rel = "below"
    else:
        rel = "equal"
    return EpsilonBoundsReport(
        epsilon=eps,
        bbn_compatible=bool(0.0 <= eps < BBN_EPSILON_MAX),
        vs_starobinsky=rel,
        within_torsion_bound=bool(eps < TORSION_EPSILON_MAX),
    )

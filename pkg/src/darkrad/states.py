"""States of low energy and their generalized thermal dressings.

A state of low energy (SLE) minimizes the energy density smeared in
cosmological time against a sampling function f.  Each comoving momentum
decouples: with a reference mode chi_ref, the smeared energy of the
Bogoliubov-transformed mode  chi = lam chi_ref + mu conj(chi_ref),
|lam|^2 - |mu|^2 = 1, is the quadratic form

    E(lam, mu) = c1 (|lam|^2 + |mu|^2) + 2 Re(c2 lam conj(mu))

with c1 = Int f eps dt (sesquilinear energy, real > 0) and
c2 = Int f kap dt (bilinear energy, complex).  The minimizer is the
hyperbolic rotation  lam = cosh th, mu = -e^{i arg c2} sinh th with
tanh 2 th = |c2|/c1, minimal value sqrt(c1^2 - |c2|^2); it is certified
against a brute-force grid in the tests.

Thermal dressing multiplies the two mode orderings by the Bose weights
1/(1 - e^{-beta k0}) and 1/(e^{beta k0} - 1), k0 = sqrt(k^2 + m^2 a_F^2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from .energy import bilinear_energy, per_mode_energy
from .modes import (CONFORMAL_COUPLING, ModeSolverError, WkbMode,
                    adiabatic_error, solve_mode, wkb_mode)

#: substitute WKB reference modes when min over the window of e1 < this
WKB_GATE = 1.0e-4


class StateError(ValueError):
    pass


# ---------------------------------------------------------------------------
# sampling function
# ---------------------------------------------------------------------------

@dataclass
class SamplingFunction:
    """Smooth compactly supported bump, normalized to Int f dt = 1.

    The shape is exp(-1/(1-x^2)) on |x| < 1 mapped onto the support
    [t_lo, t_hi] in cosmological time.  ``center`` and ``width`` record the
    window in the variable it was specified in (for provenance only).
    """

    t_lo: float
    t_hi: float
    center: float = 0.0
    width: float = 0.0
    variable: str = "t"
    _norm: float = field(default=0.0, repr=False)

    def __post_init__(self):
        if not self.t_hi > self.t_lo:
            raise StateError("empty sampling support")
        val, err = quad(lambda x: math.exp(-1.0 / (1.0 - x * x)), -1.0, 1.0,
                        epsabs=1e-15, epsrel=1e-13)
        # Int f dt = norm * val * (t_hi - t_lo)/2 = 1
        self._norm = 2.0 / (val * (self.t_hi - self.t_lo))

    @classmethod
    def from_scale_factor_window(cls, background, center_a, efolds=1.0):
        """Window of given width in e-folds of a, centered at center_a."""
        if efolds <= 0:
            raise StateError("window width must be positive")
        a_lo = center_a * math.exp(-efolds / 2.0)
        a_hi = center_a * math.exp(+efolds / 2.0)
        return cls(t_lo=float(background.t_of_a(a_lo)),
                   t_hi=float(background.t_of_a(a_hi)),
                   center=center_a, width=efolds, variable="a")

    @classmethod
    def from_redshift_window(cls, background, z_center=1.0e-2, efolds=1.0):
        out = cls.from_scale_factor_window(
            background, 1.0 / (1.0 + z_center), efolds)
        return cls(t_lo=out.t_lo, t_hi=out.t_hi,
                   center=z_center, width=efolds, variable="z")

    @property
    def support(self):
        return (self.t_lo, self.t_hi)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        x = 2.0 * (t - self.t_lo) / (self.t_hi - self.t_lo) - 1.0
        out = np.zeros_like(x)
        inside = np.abs(x) < 1.0
        out[inside] = self._norm * np.exp(-1.0 / (1.0 - x[inside] ** 2))
        return out if out.ndim else float(out)

    def gauss_nodes(self, n):
        """Gauss-Legendre nodes and weights on the support."""
        x, w = np.polynomial.legendre.leggauss(n)
        half = 0.5 * (self.t_hi - self.t_lo)
        mid = 0.5 * (self.t_hi + self.t_lo)
        return mid + half * x, half * w


# ---------------------------------------------------------------------------
# quadratic form and its minimizer
# ---------------------------------------------------------------------------

def sampled_energy_form(mode, sampling: SamplingFunction, background,
                        n_nodes=64, max_nodes=1024, rtol=1e-9):
    """(c1, c2) of the smeared-energy quadratic form for one reference mode.

    The smearing runs over cosmological time with the density weight
    1/a^4 included, i.e. c1 = Int f(t) eps(t)/a(t)^4 dt with eps the
    per-mode energy.  Node count doubles until c1 stabilizes.
    """
    k, m = mode.momentum, mode.mass
    prev = None
    n = n_nodes
    while True:
        t, w = sampling.gauss_nodes(n)
        tau = background.tau_of_t(t)
        a = background.a_of_tau(tau)
        chi, dchi = mode(tau)
        f = sampling(t)
        eps = per_mode_energy(chi, dchi, k, m, a)
        kap = bilinear_energy(chi, dchi, k, m, a)
        c1 = float(np.sum(w * f * eps / a**4))
        c2 = complex(np.sum(w * f * kap / a**4))
        if prev is not None and abs(c1 - prev[0]) <= rtol * abs(c1) \
                and abs(c2 - prev[1]) <= rtol * abs(c1):
            break
        if n >= max_nodes:
            break
        prev = (c1, c2)
        n *= 2
    if not c1 > abs(c2):
        raise StateError(
            f"sampled energy form is degenerate (c1 = {c1:.6g} <= |c2| = "
            f"{abs(c2):.6g}); reference mode or sampling support pathological")
    return c1, c2


def minimize_bogoliubov(c1, c2):
    """Minimizer (lam, mu) of the quadratic form on |lam|^2 - |mu|^2 = 1.

    Closed form via lam = cosh th, mu = e^{i phi} sinh th:
    tanh 2 th = |c2|/c1 and phi = arg(c2) + pi.  Unique up to an overall
    phase; the minimal value is sqrt(c1^2 - |c2|^2).
    """
    c1 = float(c1)
    c2 = complex(c2)
    if not c1 > abs(c2):
        raise StateError(f"need c1 > |c2| (got c1 = {c1:.6g}, |c2| = {abs(c2):.6g})")
    if c2 == 0:
        return 1.0 + 0.0j, 0.0j
    theta = 0.5 * math.atanh(abs(c2) / c1)
    lam = complex(math.cosh(theta))
    mu = -np.exp(1j * np.angle(c2)) * math.sinh(theta)
    return lam, complex(mu)


def sampled_energy_value(c1, c2, lam, mu):
    """E(lam, mu) = c1(|lam|^2 + |mu|^2) + 2 Re(c2 lam conj(mu))."""
    return (c1 * (abs(lam) ** 2 + abs(mu) ** 2)
            + 2.0 * (c2 * lam * np.conj(mu)).real)


# ---------------------------------------------------------------------------
# the states
# ---------------------------------------------------------------------------

@dataclass
class BogoliubovPair:
    """lambda(k), mu(k) tabulated on the state's k-grid."""

    k_grid: np.ndarray
    lam: np.ndarray
    mu: np.ndarray

    def __post_init__(self):
        norm = np.abs(self.lam) ** 2 - np.abs(self.mu) ** 2
        if np.max(np.abs(norm - 1.0)) > 1e-10:
            raise StateError("|lambda|^2 - |mu|^2 = 1 violated")


@dataclass
class _SleEntry:
    mode: object           # callable tau -> (chi, dchi)
    lam: complex
    mu: complex
    c1: float
    c2: complex
    source: str


class StateOfLowEnergy:
    """Per-momentum minimizers of the sampled energy over Bogoliubov pairs.

    Entries are built lazily per k, so quadrature refinement downstream can
    extend the k-set without rebuilding.  The transformed mode for momentum
    k is  chi = lam chi_ref + mu conj(chi_ref).
    """

    def __init__(self, background, sampling: SamplingFunction, mass,
                 *, xi=CONFORMAL_COUPLING, mode_source="auto", tau_span=None,
                 rtol=1e-10, atol=1e-12, wkb_gate=WKB_GATE,
                 solve_grid_points=33):
        if mass < 0:
            raise StateError("mass must be >= 0")
        self.background = background
        self.sampling = sampling
        self.mass = float(mass)
        self.xi = xi
        self.mode_source = mode_source
        self.rtol = rtol
        self.atol = atol
        self.wkb_gate = wkb_gate
        self.solve_grid_points = solve_grid_points
        if tau_span is None:
            t_lo, t_hi = sampling.support
            lo = float(background.tau_of_t(t_lo))
            hi = float(background.tau_of_t(t_hi))
            pad = 0.05 * (hi - lo)
            tau_span = (lo - pad, hi + pad)
        self.tau_span = (float(tau_span[0]), float(tau_span[1]))
        self._entries: dict[float, _SleEntry] = {}

    # -- construction -------------------------------------------------------

    def _pick_source(self, k):
        if self.mode_source != "auto":
            return self.mode_source
        if self.mass == 0.0 and self.xi == CONFORMAL_COUPLING:
            return "exact"
        t_lo, t_hi = self.sampling.support
        tau = np.linspace(self.background.tau_of_t(t_lo),
                          self.background.tau_of_t(t_hi), 33)
        e1, _ = adiabatic_error(k, self.mass, self.background, tau)
        return "wkb" if float(np.min(e1)) < self.wkb_gate else "solve"

    def _reference_mode(self, k, source):
        lo, hi = self.tau_span
        if source == "exact":
            return _ConformalMode(k)
        if source == "wkb":
            return wkb_mode(k, self.mass, self.background, lo, (lo, hi))
        if source == "solve":
            grid = np.linspace(lo, hi, self.solve_grid_points)
            return solve_mode(k, self.mass, self.background, grid,
                              xi=self.xi, rtol=self.rtol, atol=self.atol)
        raise StateError(f"unknown mode source {source!r}")

    def ensure(self, ks):
        """Build entries for every momentum in ks (idempotent)."""
        for k in np.atleast_1d(np.asarray(ks, dtype=float)):
            k = float(k)
            if k <= 0:
                raise StateError("momenta must be positive")
            if k in self._entries:
                continue
            source = self._pick_source(k)
            mode = self._reference_mode(k, source)
            c1, c2 = sampled_energy_form(mode, self.sampling, self.background)
            lam, mu = minimize_bogoliubov(c1, c2)
            self._entries[k] = _SleEntry(mode=mode, lam=lam, mu=mu,
                                         c1=c1, c2=c2, source=source)
        return self

    @property
    def k_grid(self):
        return np.array(sorted(self._entries), dtype=float)

    def bogoliubov_pair(self) -> BogoliubovPair:
        ks = self.k_grid
        lam = np.array([self._entries[k].lam for k in ks])
        mu = np.array([self._entries[k].mu for k in ks])
        return BogoliubovPair(k_grid=ks, lam=lam, mu=mu)

    def entry(self, k) -> _SleEntry:
        try:
            return self._entries[float(k)]
        except KeyError:
            self.ensure([k])
            return self._entries[float(k)]

    # -- evaluation ----------------------------------------------------------

    def chi_dchi(self, k, tau):
        """Transformed (SLE) mode and derivative at tau."""
        e = self.entry(k)
        chi_r, dchi_r = e.mode(tau)
        chi = e.lam * chi_r + e.mu * np.conj(chi_r)
        dchi = e.lam * dchi_r + e.mu * np.conj(dchi_r)
        return chi, dchi

    def occupancy(self, k):
        """Thermal occupancy; zero for the pure state of low energy."""
        return np.zeros_like(np.asarray(k, dtype=float))


@dataclass
class _ConformalMode:
    """Exact massless conformally coupled mode e^{-ik tau}/sqrt(2k)."""

    momentum: float
    mass: float = 0.0

    def __call__(self, tau):
        tau = np.asarray(tau, dtype=float)
        chi = np.exp(-1j * self.momentum * tau) / math.sqrt(2.0 * self.momentum)
        return chi, -1j * self.momentum * chi


class GeneralizedThermalState:
    """State of low energy dressed with Bose weights at inverse temperature
    beta and freeze-out scale factor a_F.  Massless states do not depend
    on a_F (k0 reduces to k)."""

    def __init__(self, base: StateOfLowEnergy, beta, a_F=1.0):
        if beta <= 0:
            raise StateError("beta must be positive")
        if not 0 < a_F:
            raise StateError("a_F must be positive")
        self.base = base
        self.beta = float(beta)
        self.a_F = float(a_F)

    @property
    def background(self):
        return self.base.background

    @property
    def mass(self):
        return self.base.mass

    def k0(self, k):
        k = np.asarray(k, dtype=float)
        return np.sqrt(k**2 + (self.mass * self.a_F) ** 2)

    def weights(self, k):
        """(w_plus, w_minus) = (1 + n, n); w_plus - w_minus = 1 by
        construction.  Overflow-safe: beta k0 > 700 gives exactly (1, 0)."""
        x = self.beta * self.k0(k)
        w_minus = np.where(x > 700.0, 0.0, 1.0 / np.expm1(np.minimum(x, 700.0)))
        return 1.0 + w_minus, w_minus

    def occupancy(self, k):
        return self.weights(k)[1]

    def chi_dchi(self, k, tau):
        return self.base.chi_dchi(k, tau)

    def ensure(self, ks):
        self.base.ensure(ks)
        return self


def thermal_weights(state: GeneralizedThermalState, k):
    """Bose weights (w_plus, w_minus) of the generalized thermal state."""
    return state.weights(k)


def build_state_of_low_energy(background, sampling, mass, k_grid=None,
                              **kwargs) -> StateOfLowEnergy:
    """Construct an SLE, eagerly building entries on k_grid if given."""
    state = StateOfLowEnergy(background, sampling, mass, **kwargs)
    if k_grid is not None:
        state.ensure(k_grid)
    return state

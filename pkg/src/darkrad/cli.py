"""Command-line interface: config, subcommands and deterministic tables.

Subcommands
    background   z, a, t, tau, H/H0 and curvature columns on a z grid
    modes        mode functions chi_k on a conformal-time sample
    sle          per-momentum Bogoliubov data of the state of low energy
    rho          energy-density breakdown columns on a z grid
    friedmann    extended-equation verdicts for one or more epsilon
    scan         log-spaced epsilon scan (same row format as friedmann)

Output is CSV (or line-delimited JSON) with a header comment block holding
the tool version, the config hash and the tolerances, so identical configs
produce byte-identical files.

Exit codes: 0 success, 1 config error, 2 numerical failure, 3 divergence
detected (friedmann with a single requested epsilon).
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import sys
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from . import __version__, constants
from .background import Background, BackgroundError, CosmologyParams
from .energy import (ClosedFormMassive, ClosedFormMassless, FreezeOutParams,
                     RenormalizationChoice, RhoQuadratureError,
                     rho_state_dependent, rho_total)
from .friedmann import (FriedmannError, RadiationFitError,
                        epsilon_bounds_report, extract_effective_radiation,
                        solve_extended)
from .modes import ModeSolverError, solve_mode
from .states import (GeneralizedThermalState, SamplingFunction, StateError,
                     build_state_of_low_energy)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2
EXIT_DIVERGENCE = 3


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

@dataclass
class RunConfig:
    """Complete run configuration; round-trips losslessly through JSON."""

    # cosmology (flat: omega_lambda = 1 - omega_m - omega_r unless given)
    omega_m: float = 0.3
    omega_r: float = 1.0e-4
    omega_lambda: float | None = None
    hubble_km_s_mpc: float = constants.HUBBLE_KM_S_MPC

    # renormalization freedom
    omega_lambda_ren: float | None = None   # default: cosmology omega_lambda
    delta: float = 0.0
    epsilon: float = 0.0
    gamma: float = 1.0e-122
    mu_scale: float = 1.0

    # massless thermal sector
    massless_enabled: bool = True
    temperature_kelvin: float = 2.7
    beta_internal: float | None = None      # overrides temperature if set

    # massive sector
    massive_enabled: bool = True
    mass_gev: float = 100.0
    mass_h0: float | None = None            # internal-unit mass (quadrature route)
    massive_route: str = "closed_form"      # or "quadrature"
    freeze_out_x_f: float | None = None     # default: WIMP formula
    freeze_out_a_f: float | None = None

    # sampling window of the state of low energy
    sampling_z_center: float = 1.0e-2
    sampling_efolds: float = 1.0

    # grids and tolerances
    z_min: float = 0.0
    z_max: float = 1.0e9
    z_points: int = 41
    z_spacing: str = "log"                  # or "linear"
    mode_k_list: tuple = (0.5, 1.0, 2.0, 5.0)
    mode_tau_points: int = 9
    mode_rtol: float = 1.0e-10
    quad_rel_tol: float = 1.0e-6
    ode_rtol: float = 1.0e-10
    subtraction_order: int = 4

    def __post_init__(self):
        if self.z_spacing not in ("log", "linear"):
            raise ConfigError(f"unknown z_spacing {self.z_spacing!r}")
        if self.massive_route not in ("closed_form", "quadrature"):
            raise ConfigError(f"unknown massive_route {self.massive_route!r}")
        if self.subtraction_order not in (0, 2, 4):
            raise ConfigError("subtraction_order must be 0, 2 or 4")

    # -- serialization -------------------------------------------------------

    def to_dict(self):
        d = asdict(self)
        d["mode_k_list"] = list(self.mode_k_list)
        return d

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        d = dict(d)
        if "mode_k_list" in d:
            d["mode_k_list"] = tuple(float(k) for k in d["mode_k_list"])
        try:
            return cls(**d)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def load(cls, path):
        try:
            with open(path) as fh:
                data = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(
                f"config parse error at line {exc.lineno}, column {exc.colno}: "
                f"{exc.msg}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config root must be a JSON object")
        return cls.from_dict(data)

    # -- derived objects -----------------------------------------------------

    @property
    def hubble_ev(self):
        return self.hubble_km_s_mpc / constants.HUBBLE_KM_S_MPC * constants.HUBBLE_EV

    def cosmology(self) -> CosmologyParams:
        h_ev = self.hubble_ev
        g = (h_ev / constants.PLANCK_MASS_EV) ** 2
        if self.omega_lambda is None:
            return CosmologyParams.flat(self.omega_m, self.omega_r,
                                        newton_constant=g)
        return CosmologyParams(omega_lambda=self.omega_lambda,
                               omega_m=self.omega_m, omega_r=self.omega_r,
                               newton_constant=g)

    def renormalization(self) -> RenormalizationChoice:
        ol = self.omega_lambda_ren
        if ol is None:
            ol = self.cosmology().omega_lambda
        return RenormalizationChoice(omega_lambda_ren=ol, delta=self.delta,
                                     epsilon=self.epsilon, gamma=self.gamma,
                                     mu_scale=self.mu_scale)

    def z_grid(self):
        if self.z_points < 2:
            raise ConfigError("z_points must be >= 2")
        if self.z_spacing == "linear":
            return np.linspace(self.z_min, self.z_max, self.z_points)
        return np.expm1(np.linspace(math.log1p(self.z_min),
                                    math.log1p(self.z_max), self.z_points))

    def massless_beta(self):
        if self.beta_internal is not None:
            return self.beta_internal
        return constants.temperature_kelvin_to_beta(
            self.temperature_kelvin, self.hubble_ev)

    def freeze_out(self) -> FreezeOutParams:
        fo = FreezeOutParams.wimp(self.mass_gev)
        if self.freeze_out_x_f is not None or self.freeze_out_a_f is not None:
            fo = FreezeOutParams(
                x_F=self.freeze_out_x_f if self.freeze_out_x_f is not None else fo.x_F,
                a_F=self.freeze_out_a_f if self.freeze_out_a_f is not None else fo.a_F,
                mass_gev=self.mass_gev)
        return fo

    def config_hash(self):
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


# ---------------------------------------------------------------------------
# table writing
# ---------------------------------------------------------------------------

def _fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return format(v, ".17g")
    if v is None:
        return ""
    return str(v)


def write_table(stream, header_lines, columns, rows, fmt="csv"):
    for line in header_lines:
        stream.write(f"# {line}\n")
    if fmt == "csv":
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    elif fmt == "jsonl":
        for row in rows:
            rec = {c: (None if isinstance(v, float) and math.isnan(v) else v)
                   for c, v in zip(columns, row)}
            stream.write(json.dumps(rec, sort_keys=True) + "\n")
    else:
        raise ConfigError(f"unknown format {fmt!r}")


def _header(cfg: RunConfig, extra=()):
    lines = [
        f"darkrad {__version__}",
        f"config-hash: {cfg.config_hash()}",
        f"H0 = {cfg.hubble_ev:.6e} eV ({_fmt(cfg.hubble_km_s_mpc)} km/s/Mpc); "
        "internal units H0 = 1, densities in rho0 = 3 H0^2/(8 pi G)",
        f"tolerances: mode_rtol={_fmt(cfg.mode_rtol)} "
        f"quad_rel_tol={_fmt(cfg.quad_rel_tol)} ode_rtol={_fmt(cfg.ode_rtol)}",
    ]
    lines.extend(extra)
    return lines


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_background(cfg: RunConfig, out, fmt):
    params = cfg.cosmology()
    bg = Background(params)
    cols = ["z", "a", "t", "tau", "H_over_H0", "ricci", "G00", "I00", "J00"]
    rows = []
    for z in cfg.z_grid():
        a = 1.0 / (1.0 + z)
        tp = bg.timepoint(a=a)
        curv = bg.curvature(a)
        rows.append([z, a, tp.cosmological_time, tp.conformal_time,
                     bg.hubble(a) / params.hubble_constant,
                     curv.ricci_scalar, curv.G00, curv.I00, curv.J00])
    write_table(out, _header(cfg), cols, rows, fmt)
    return EXIT_OK


def _mode_setup(cfg: RunConfig):
    params = cfg.cosmology()
    bg = Background(params)
    m = cfg.mass_h0 if cfg.mass_h0 is not None else 0.0
    z_lo = max(cfg.z_min, 0.0)
    z_hi = cfg.z_max if cfg.z_max < 10.0 else 2.0
    tau = np.linspace(float(bg.tau_of_a(1.0 / (1.0 + z_hi))),
                      float(bg.tau_of_a(1.0 / (1.0 + z_lo))),
                      cfg.mode_tau_points)
    return bg, m, tau


def cmd_modes(cfg: RunConfig, out, fmt):
    bg, m, tau = _mode_setup(cfg)
    cols = ["k", "tau", "a", "re_chi", "im_chi", "re_dchi", "im_dchi",
            "wronskian_drift"]
    rows = []
    for k in cfg.mode_k_list:
        mode = solve_mode(k, m, bg, tau, rtol=cfg.mode_rtol)
        for i, t in enumerate(tau):
            rows.append([k, t, float(bg.a_of_tau(t)),
                         mode.chi[i].real, mode.chi[i].imag,
                         mode.dchi[i].real, mode.dchi[i].imag,
                         mode.wronskian_drift])
    write_table(out, _header(cfg, [f"mass = {_fmt(m)} H0"]), cols, rows, fmt)
    return EXIT_OK


def cmd_sle(cfg: RunConfig, out, fmt):
    bg, m, tau = _mode_setup(cfg)
    sampling = SamplingFunction.from_redshift_window(
        bg, cfg.sampling_z_center, cfg.sampling_efolds)
    state = build_state_of_low_energy(
        bg, sampling, m, k_grid=cfg.mode_k_list,
        tau_span=(float(tau[0]), float(tau[-1])), rtol=cfg.mode_rtol)
    cols = ["k", "c1", "re_c2", "im_c2", "re_lambda", "im_lambda",
            "re_mu", "im_mu", "mode_source"]
    rows = []
    for k in state.k_grid:
        e = state.entry(k)
        rows.append([float(k), e.c1, e.c2.real, e.c2.imag,
                     e.lam.real, e.lam.imag, e.mu.real, e.mu.imag, e.source])
    hdr = [f"mass = {_fmt(m)} H0",
           f"sampling window: z_center={_fmt(cfg.sampling_z_center)} "
           f"efolds={_fmt(cfg.sampling_efolds)}"]
    write_table(out, _header(cfg, hdr), cols, rows, fmt)
    return EXIT_OK


def cmd_rho(cfg: RunConfig, out, fmt):
    params = cfg.cosmology()
    renorm = cfg.renormalization()
    bg = Background(params)

    massless = None
    if cfg.massless_enabled:
        massless = ClosedFormMassless(beta=cfg.massless_beta())
    massive = None
    if cfg.massive_enabled:
        if cfg.massive_route == "closed_form":
            fo = cfg.freeze_out()
            m_int = constants.mass_gev_to_internal(cfg.mass_gev, cfg.hubble_ev)
            massive = ClosedFormMassive(mass=m_int,
                                        beta=fo.beta_internal(cfg.hubble_ev),
                                        a_F=fo.a_F)
        else:
            if cfg.mass_h0 is None:
                raise ConfigError("massive_route=quadrature requires mass_h0")
            sampling = SamplingFunction.from_redshift_window(
                bg, cfg.sampling_z_center, cfg.sampling_efolds)
            z_hi = min(cfg.z_max, 2.0)
            tau_span = (float(bg.tau_of_a(1.0 / (1.0 + z_hi))) ,
                        float(bg.tau_of_a(1.0)))
            sle = build_state_of_low_energy(bg, sampling, cfg.mass_h0,
                                            tau_span=(min(tau_span), max(tau_span)),
                                            rtol=cfg.mode_rtol)
            massive = GeneralizedThermalState(sle, beta=1.0e6, a_F=1.0)

    cols = ["z", "rho_gvac_m", "rho_gvac_0", "rho_gth_m", "rho_gth_0",
            "anomaly", "lambda_term", "delta_term", "epsilon_term",
            "total", "rho_lcdm", "total_over_lcdm"]
    rows = []
    for z in cfg.z_grid():
        bd = rho_total(z, renorm, params, massless=massless, massive=massive,
                       background=bg, order=cfg.subtraction_order,
                       quad_kwargs={"rel_tol": cfg.quad_rel_tol})
        a = 1.0 / (1.0 + z)
        rho_lcdm = params.omega_lambda + params.omega_m / a**3 \
            + params.omega_r / a**4
        d = bd.as_dict()
        rows.append([z] + [d[c] for c in cols[1:10]]
                    + [rho_lcdm, d["total"] / rho_lcdm])
    write_table(out, _header(cfg), cols, rows, fmt)
    return EXIT_OK


def _friedmann_rows(cfg: RunConfig, eps_list):
    params = cfg.cosmology()
    rows = []
    any_diverged = False
    for eps in eps_list:
        sol = solve_extended(eps, params, z_max=cfg.z_max,
                             rtol=cfg.ode_rtol)
        rep = epsilon_bounds_report(eps)
        omega, resid = math.nan, math.nan
        if not sol.diverged:
            try:
                fit = extract_effective_radiation(sol)
                omega, resid = fit.omega_r_tilde, fit.residual
            except RadiationFitError:
                pass
        else:
            any_diverged = True
        rows.append([eps, not sol.diverged,
                     sol.z_blowup if sol.diverged else math.nan,
                     omega, resid, rep.bbn_compatible, rep.vs_starobinsky,
                     rep.within_torsion_bound])
    return rows, any_diverged


_FRIEDMANN_COLS = ["epsilon", "bounded", "z_blowup", "omega_r_tilde",
                   "fit_residual", "bbn_compatible", "vs_starobinsky",
                   "within_torsion_bound"]


def cmd_friedmann(cfg: RunConfig, out, fmt, eps_list=None):
    if eps_list is None:
        eps_list = [cfg.epsilon]
    rows, any_diverged = _friedmann_rows(cfg, eps_list)
    write_table(out, _header(cfg), _FRIEDMANN_COLS, rows, fmt)
    if len(eps_list) == 1 and any_diverged:
        return EXIT_DIVERGENCE
    return EXIT_OK


def cmd_scan(cfg: RunConfig, out, fmt, eps_list=None, n=7):
    if eps_list is None:
        eps_list = list(np.logspace(-18, -15, n))
    rows, _ = _friedmann_rows(cfg, eps_list)
    write_table(out, _header(cfg), _FRIEDMANN_COLS, rows, fmt)
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(
        prog="darkrad",
        description="Scalar-field energy densities on LCDM backgrounds and "
                    "the dark-radiation J00 term.")
    p.add_argument("command",
                   choices=["background", "modes", "sle", "rho",
                            "friedmann", "scan"])
    p.add_argument("--config", default=None, help="JSON config path")
    p.add_argument("--out", default=None, help="output path (default stdout)")
    p.add_argument("--format", choices=["csv", "jsonl"], default="csv")
    p.add_argument("--epsilon", default=None,
                   help="comma-separated epsilon list (friedmann/scan)")
    p.add_argument("--tolerance", type=float, default=None,
                   help="override ode_rtol and quad_rel_tol")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = RunConfig.load(args.config) if args.config else RunConfig()
        if args.tolerance is not None:
            cfg.ode_rtol = args.tolerance
            cfg.quad_rel_tol = args.tolerance
        eps_list = None
        if args.epsilon is not None:
            try:
                eps_list = [float(tok) for tok in args.epsilon.split(",") if tok]
            except ValueError as exc:
                raise ConfigError(f"bad --epsilon list: {exc}") from exc
            if not eps_list:
                raise ConfigError("--epsilon list is empty")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    buf = io.StringIO()
    try:
        if args.command == "background":
            code = cmd_background(cfg, buf, args.format)
        elif args.command == "modes":
            code = cmd_modes(cfg, buf, args.format)
        elif args.command == "sle":
            code = cmd_sle(cfg, buf, args.format)
        elif args.command == "rho":
            code = cmd_rho(cfg, buf, args.format)
        elif args.command == "friedmann":
            code = cmd_friedmann(cfg, buf, args.format, eps_list)
        else:
            code = cmd_scan(cfg, buf, args.format, eps_list)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (BackgroundError, ModeSolverError, StateError, FriedmannError,
            RhoQuadratureError, RadiationFitError) as exc:
        print(f"numerical failure ({type(exc).__name__}): {exc}",
              file=sys.stderr)
        return EXIT_NUMERICAL

    data = buf.getvalue()
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(data)
    else:
        sys.stdout.write(data)
    return code


if __name__ == "__main__":
    raise SystemExit(main())

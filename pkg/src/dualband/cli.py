"""Command-line entry point: ``dualband {psf,profile,estimate,sweep}``.

Exit codes: 0 success, 2 usage or configuration error, 1 runtime error.
"""

from __future__ import annotations

import argparse
import io
import logging
import math
import os
import sys
from dataclasses import replace

import numpy as np

from .channel import ScenarioSpec
from .config import PRESETS, ConfigParseError, RunConfig, parse_assignments, validate
from .estimators import EstimateSet, RelaxConfig, SteeringOperator, mle_single, omp, relax
from .evaluation import SweepResult, sweep_gap, sweep_snr
from .freqgrid import ConfigurationError
from .psfprofile import DelayGrid, DelayProfile, MetricsError, delay_profile, psf, psf_metrics, reconstruct_full_band

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2


def _f(x: float) -> str:
    return f"{x:.9g}"


def profile_csv(p: DelayProfile) -> str:
    mag = p.magnitude
    peak = mag.max() if mag.size else 0.0
    with np.errstate(divide="ignore"):
        rel = 20 * np.log10(mag / peak) if peak > 0 else np.full(mag.size, -np.inf)
    buf = io.StringIO()
    buf.write("tau_ns,re,im,mag,mag_db_rel_peak\n")
    for t, v, m, d in zip(p.taus, p.values, mag, rel):
        buf.write(f"{_f(t * 1e9)},{_f(v.real)},{_f(v.imag)},{_f(m)},{_f(d)}\n")
    return buf.getvalue()


def scf_csv(sel) -> str:
    return "index,W\n" + "".join(f"{k},{w}\n" for k, w in enumerate(sel.mask))


def estimates_csv(est: EstimateSet) -> str:
    buf = io.StringIO()
    buf.write("component_index,tau_ns,alpha_re,alpha_im,residual_energy,cycles,converged\n")
    for i, (tau, alpha) in enumerate(est.components):
        buf.write(f"{i},{_f(tau * 1e9)},{_f(alpha.real)},{_f(alpha.imag)},"
                  f"{_f(est.residual_energy)},{est.cycles_used},{str(est.converged).lower()}\n")
    return buf.getvalue()


def _profile_grid(cfg: RunConfig, tau_max_ns: float | None) -> DelayGrid:
    grid = cfg.grid()
    tau_max = None if tau_max_ns is None else tau_max_ns * 1e-9
    return DelayGrid.oversampled(grid, cfg.osf, tau_max=tau_max)


def _scenario(cfg: RunConfig, sel=None) -> ScenarioSpec:
    return ScenarioSpec(
        sel if sel is not None else cfg.selection(),
        [t * 1e-9 for t in cfg.targets_ns],
        cfg.gain_model, cfg.gains(), cfg.snr_db, cfg.seed, cfg.delay_jitter_ns * 1e-9)


def _relax_cfg(cfg: RunConfig, L: int) -> RelaxConfig:
    return RelaxConfig(cfg.L_max or max(L, 1), cfg.epsilon, cfg.max_refinement_cycles, cfg.cycle_tolerance)


def cmd_psf(cfg: RunConfig, metrics: bool = False, tau_max_ns: float | None = None,
            scf_path: str | None = None) -> str:
    """PSF profile CSV; optionally the SCF to a side file and a metrics block."""
    sel = cfg.selection()
    if scf_path:
        _write(scf_path, scf_csv(sel))
    p = psf(sel, _profile_grid(cfg, tau_max_ns))
    out = profile_csv(p)
    if metrics:
        full = psf(sel, DelayGrid.oversampled(sel.grid, cfg.osf))
        m = psf_metrics(full)
        out += ("\nfirst_null_ns,psl_db,psl_tau_ns\n"
                f"{_f(m.mainlobe_first_null * 1e9)},{_f(m.peak_sidelobe_level_db)},"
                f"{_f(m.highest_sidelobe_delay * 1e9)}\n")
    return out


def _one_trial(cfg: RunConfig):
    sc = _scenario(cfg)
    return sc, *sc.trial(0, 0)


def cmd_profile(cfg: RunConfig, tau_max_ns: float | None = None) -> str:
    """IDFT delay profile of one seeded (possibly noisy) dual-band CFR."""
    sc, targets, y = _one_trial(cfg)
    H = np.zeros(sc.sel.grid.K, dtype=complex)
    H[sc.sel.active] = y.y
    return profile_csv(delay_profile(H, _profile_grid(cfg, tau_max_ns), sc.sel.grid))


def cmd_estimate(cfg: RunConfig, emit_profiles: bool = False, tau_max_ns: float | None = None) -> tuple[str, str | None]:
    """Estimator CSV for one seeded trial, plus an optional side-by-side profile CSV."""
    sc, targets, y = _one_trial(cfg)
    op = SteeringOperator(sc.sel, osf=cfg.osf)
    if cfg.method == "relax":
        est = relax(y, _relax_cfg(cfg, sc.L), op)
    elif cfg.method == "omp":
        est = omp(y, cfg.L_max or max(sc.L, 1), op)
    else:
        # single-component fit even on multi-target scenes (model mismatch)
        tau, alpha = mle_single(y, op)
        r = y.y - alpha * op.steering(tau)
        est = EstimateSet(((tau, alpha),), float(np.vdot(r, r).real), 0, True)
    profiles = None
    if emit_profiles:
        grid = sc.sel.grid
        dgrid = _profile_grid(cfg, tau_max_ns)
        H = np.zeros(grid.K, dtype=complex)
        H[sc.sel.active] = y.y
        raw = delay_profile(H, dgrid, grid)
        rec = delay_profile(reconstruct_full_band(est, grid), dgrid, grid)
        buf = io.StringIO()
        buf.write("tau_ns,idft_re,idft_im,idft_mag,recon_re,recon_im,recon_mag\n")
        for t, a, b in zip(dgrid.taus, raw.values, rec.values):
            buf.write(f"{_f(t * 1e9)},{_f(a.real)},{_f(a.imag)},{_f(abs(a))},"
                      f"{_f(b.real)},{_f(b.imag)},{_f(abs(b))}\n")
        profiles = buf.getvalue()
    return estimates_csv(est), profiles


def cmd_sweep(cfg: RunConfig, workers: int = 1) -> str:
    """Monte-Carlo sweep over SNR (optionally per gap) or over the gap."""
    rcfg = RelaxConfig(1, cfg.epsilon, cfg.max_refinement_cycles, cfg.cycle_tolerance)
    if cfg.sweep == "snr":
        gaps = cfg.snr_gaps or [cfg.band().g]
        result = SweepResult("snr")
        for g in gaps:
            sc = _scenario(cfg, cfg.selection(g))
            part = sweep_snr(sc, cfg.methods, cfg.snr_list_db, cfg.trials, cfg.seed,
                             cfg.osf, rcfg, workers)
            result.points.extend(part.points)
        return result.to_csv()
    sc = _scenario(cfg, cfg.selection(cfg.gap_list[0]))
    result = SweepResult("gap")
    for snr in cfg.snr_list_db:
        part = sweep_gap(sc, cfg.methods, cfg.gap_list, snr, cfg.trials, cfg.seed,
                         cfg.N_sub, cfg.start_index, cfg.osf, rcfg, workers)
        result.points.extend(part.points)
    return result.to_csv()


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


def _sibling(path: str | None, suffix: str) -> str | None:
    if path is None or path == "-":
        return None
    stem, ext = os.path.splitext(path)
    return f"{stem}{suffix}{ext or '.csv'}"


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value configuration file")
    common.add_argument("--preset", choices=sorted(PRESETS), help="named experiment setup")
    common.add_argument("--out", help="output CSV path (default stdout)")
    common.add_argument("--seed", type=int, help="master seed (u64)")
    common.add_argument("--threads", type=int, help="worker processes for sweeps")
    common.add_argument("--trials", type=int, help="Monte-Carlo trials per point")
    common.add_argument("--osf", type=int, help="delay-grid oversampling factor")
    common.add_argument("--gap", type=int, dest="gap_subcarriers", help="gap in subcarriers")
    common.add_argument("--snr", type=float, dest="snr_db", help="SNR in dB")
    common.add_argument("--no-noise", action="store_true", help="noiseless measurements")
    common.add_argument("--tau-max-ns", type=float, help="truncate profile output at this delay")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="dualband", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("psf", parents=[common], help="SCF-induced point-spread function")
    p.add_argument("--metrics", action="store_true", help="append first null / PSL block")
    p.add_argument("--scf", help="also write the SCF W[k] CSV here")
    sub.add_parser("profile", parents=[common], help="IDFT delay profile of one trial")
    e = sub.add_parser("estimate", parents=[common], help="single-trial estimation")
    e.add_argument("--method", help="relax | omp | mle")
    e.add_argument("--lmax", type=int, dest="L_max")
    e.add_argument("--epsilon", type=float)
    e.add_argument("--emit-profiles", action="store_true",
                   help="write raw IDFT and reconstructed profiles (next to --out, or to stdout)")
    s = sub.add_parser("sweep", parents=[common], help="Monte-Carlo RMSE sweep")
    s.add_argument("--method", dest="methods", action="append", help="repeatable; overrides config")
    return parser


def resolve_config(args) -> RunConfig:
    cfg = RunConfig()
    text = ""
    if args.preset:
        text = PRESETS[args.preset]
    cfg, _ = parse_assignments(text, cfg)
    if args.config:
        with open(args.config) as fh:
            cfg, _ = parse_assignments(fh.read(), cfg)
    overrides = {}
    for key in ("seed", "trials", "osf", "gap_subcarriers", "snr_db", "L_max", "epsilon", "method", "methods"):
        v = getattr(args, key, None)
        if v is not None:
            overrides[key] = v
    if args.no_noise:
        overrides["snr_db"] = math.inf
    if args.out:
        overrides["out"] = args.out
    cfg = replace(cfg, **overrides)
    return validate(cfg)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
        if args.command != "sweep" or (cfg.sweep == "snr" and not cfg.snr_gaps):
            cfg.band()
    except (ConfigParseError, ConfigurationError, OSError) as e:
        print(f"dualband: configuration error: {e}", file=sys.stderr)
        return EXIT_USAGE
    try:
        if args.command == "psf":
            _write(cfg.out, cmd_psf(cfg, args.metrics, args.tau_max_ns, args.scf))
        elif args.command == "profile":
            _write(cfg.out, cmd_profile(cfg, args.tau_max_ns))
        elif args.command == "estimate":
            table, profiles = cmd_estimate(cfg, args.emit_profiles, args.tau_max_ns)
            _write(cfg.out, table)
            if profiles is not None:
                side = _sibling(cfg.out, "_profiles")
                _write(side, profiles if side else "\n" + profiles)
        else:
            workers = args.threads if args.threads is not None else (os.cpu_count() or 1)
            _write(cfg.out, cmd_sweep(cfg, max(1, workers)))
    except (ValueError, MetricsError) as e:
        print(f"dualband: error: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

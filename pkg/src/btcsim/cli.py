"""Command-line orchestration: reproducible runs emitting CSV files.

Every subcommand serializes its full configuration to ``run.json`` in
the output directory, so identical configurations reproduce identical
CSV bytes.  Frequencies are given in units of kappa and times in
1/kappa.  The environment variable ``BTC_THREADS`` caps the worker
count for size sweeps (default 1).

Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import dynamics, meanfield, sigproc, spectral
from .csvio import parse_floats, parse_int_list, parse_range, write_csv
from .liouv import ModelParams, build_superoperator
from .spinops import (
    build_collective_operator,
    coherent_spin_state,
    expectation,
    variance,
)

TRAJECTORY_COLUMNS = ["t", "sx", "sy", "sz", "var_x", "var_y", "var_z", "trace", "purity"]
NESS_COLUMNS = ["omega0_over_kappa", "sx", "sy", "sz", "var_x", "var_y", "var_z"]


def _workers() -> int:
    raw = os.environ.get("BTC_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _map_ordered(fn, items):
    n = _workers()
    if n > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=n) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {text}")
    return value


def _positive_float(text: str) -> float:
    value = float(text)
    if value <= 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return value


def _add_model_args(p: argparse.ArgumentParser, *, n_spins_default=None) -> None:
    p.add_argument("--n-spins", type=_positive_int, default=n_spins_default)
    p.add_argument("--omega0", type=float, default=1.5)
    p.add_argument("--kappa", type=_positive_float, default=1.0)
    p.add_argument("--omega-x", type=float, default=0.0)
    p.add_argument("--omega-z", type=float, default=0.0)
    p.add_argument("--out", type=Path, default=Path("."))


def _params(args, n_spins=None) -> ModelParams:
    # flags are in units of kappa; ModelParams carries absolute frequencies
    k = args.kappa
    return ModelParams(
        n_spins=n_spins if n_spins is not None else args.n_spins,
        omega0=args.omega0 * k,
        kappa=k,
        omega_x=args.omega_x * k,
        omega_z=args.omega_z * k,
    )


def _write_run_json(args, outdir: Path, extra=None) -> None:
    config = {k: v for k, v in vars(args).items() if k != "func"}
    config["out"] = str(config["out"])
    if extra:
        config.update(extra)
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "run.json").write_text(
        json.dumps(config, sort_keys=True, indent=2, default=str) + "\n"
    )


def cmd_spectrum(args) -> int:
    params = _params(args)
    k = params.kappa
    sup = build_superoperator(params)
    spec = spectral.full_spectrum(sup)
    bands = spectral.band_structure(spec, args.epsilon_nu)
    lam_im = spectral.lowest_imaginary_excitation(spec)

    outdir = args.out
    summary = {
        "gamma": None if bands.gamma is None else bands.gamma / k,
        "n_retained": len(bands.retained),
        "lowest_imaginary_excitation": None
        if lam_im is None
        else [lam_im.real / k, lam_im.imag / k],
    }
    _write_run_json(args, outdir, {"result": summary})
    write_csv(
        outdir / "spectrum.csv",
        ["j", "re_lambda", "im_lambda"],
        [(j, lam.real / k, lam.imag / k) for j, lam in enumerate(spec.eigenvalues)],
    )
    write_csv(
        outdir / "bands.csv",
        ["band_index", "im_center"],
        [(i, c / k) for i, c in enumerate(bands.band_centers)] if bands.has_bands else [],
    )
    if bands.has_bands:
        print(f"gamma = {bands.gamma / k:.6g} from {len(bands.band_centers)} bands")
    else:
        print("no bands (gapped or single-band spectrum)")
    return 0


def cmd_gapscan(args) -> int:
    params = _params(args, n_spins=args.sizes[0])
    k = params.kappa
    rows = spectral.gap_scan(params, args.sizes, n_leading=args.n_leading,
                             max_workers=_workers())
    outdir = args.out
    _write_run_json(args, outdir)
    table = []
    for row in rows:
        if row.error is not None:
            print(f"n_spins={row.n_spins}: {row.error}", file=sys.stderr)
            continue
        for j, re in enumerate(row.re_leading):
            table.append((row.n_spins, j, float(re) / k))
    write_csv(outdir / "gapscan.csv", ["n_spins", "j", "re_lambda"], table)
    return 0


def cmd_evolve(args) -> int:
    params = _params(args)
    k = params.kappa
    rho0 = coherent_spin_state(params.sector, args.theta, args.phi)
    traj = dynamics.evolve(params, rho0, args.t_max / k,
                           None if args.dt is None else args.dt / k,
                           record_stride=args.stride)
    outdir = args.out
    _write_run_json(args, outdir)
    write_csv(
        outdir / "trajectory.csv",
        TRAJECTORY_COLUMNS,
        zip(traj.times * k, traj.sx, traj.sy, traj.sz, traj.var_x, traj.var_y,
            traj.var_z, traj.trace, traj.purity),
    )
    pg = sigproc.periodogram(traj, "sz")
    write_csv(outdir / "fourier.csv", ["omega", "power"],
              zip(pg.frequencies / k, pg.power))
    fit = sigproc.decay_rate_fit(traj, "sz")
    write_csv(
        outdir / "decay.csv",
        ["eta", "frequency", "residual", "n_peaks_used", "fittable"],
        [(fit.eta / k, fit.frequency / k, fit.residual, fit.n_peaks_used, fit.fittable)],
    )
    if fit.fittable:
        print(f"eta = {fit.eta / k:.6g}, dominant frequency = {fit.frequency / k:.6g}")
    else:
        print(f"decay fit not available: {fit.message}")
    return 0


def cmd_ness(args) -> int:
    base = _params(args)
    omega0s = parse_range(args.scan_omega0) if args.scan_omega0 else [args.omega0]
    sector = base.sector
    ops = {k: build_collective_operator(sector, k) for k in ("sx", "sy", "sz")}

    def one(om0: float):
        rho = dynamics.steady_state(base.replace(omega0=om0 * base.kappa))
        s = sector.spin
        means = [expectation(rho, ops[k]).real / s for k in ("sx", "sy", "sz")]
        variances = [variance(rho, ops[k]) / s for k in ("sx", "sy", "sz")]
        return [om0] + means + variances

    rows = _map_ordered(one, omega0s)
    outdir = args.out
    _write_run_json(args, outdir)
    write_csv(outdir / "ness.csv", NESS_COLUMNS, rows)
    return 0


def cmd_meanfield(args) -> int:
    params = _params(args, n_spins=1)
    k = params.kappa
    m0 = np.asarray(parse_floats(args.m0, 3))
    traj = meanfield.mf_integrate(
        m0, params, args.t_max / k, (args.dt or 0.005) / k, record_stride=args.stride
    )
    outdir = args.out
    _write_run_json(args, outdir)
    write_csv(
        outdir / "meanfield.csv",
        ["t", "mx", "my", "mz", "norm", "M", "R", "branch_n"],
        zip(traj.times * k, traj.m[:, 0], traj.m[:, 1], traj.m[:, 2],
            traj.norm_sq, traj.M, traj.R / k, traj.branch_n),
    )
    return 0


def cmd_portrait(args) -> int:
    params = _params(args, n_spins=1)
    k = params.kappa
    result = meanfield.phase_portrait(
        params, n_q=args.grid_q, n_p=args.grid_p, t_max=args.t_max / k,
        dt=(args.dt or 0.005) / k,
    )
    outdir = args.out
    _write_run_json(args, outdir, {
        "result": {label: result.fraction(label) for label in ("closed", "attracted", "escaped")}
    })
    write_csv(
        outdir / "portrait.csv",
        ["seed_q", "seed_p", "class", "period_estimate"],
        [(s.q, s.p, s.classification, s.period_estimate * k) for s in result.seeds],
    )
    write_csv(
        outdir / "fixed_points.csv",
        ["mx", "my", "mz", "class", "jac_eigs"],
        [
            (fp.m[0], fp.m[1], fp.m[2], fp.classification,
             ";".join(f"{e.real / k:.17g}{e.imag / k:+.17g}j"
                      for e in fp.jacobian_eigenvalues))
            for fp in result.fixed_points
        ],
    )
    for label in ("closed", "attracted", "escaped"):
        print(f"{label}: {result.fraction(label):.1%}")
    return 0


def cmd_scaling(args) -> int:
    base = _params(args, n_spins=args.sizes[0])
    k = base.kappa
    result = sigproc.eta_scaling(
        base, args.sizes, theta=args.theta, phi=args.phi,
        t_max=args.t_max / k, dt=None if args.dt is None else args.dt / k,
    )

    def reference(n: int):
        try:
            sup = build_superoperator(base.replace(n_spins=n))
            lam = spectral.lowest_imaginary_excitation(spectral.full_spectrum(sup))
            return float("nan") if lam is None else abs(lam.real)
        except Exception:
            return float("nan")

    refs = _map_ordered(reference, [n for n, _ in result.table])
    outdir = args.out
    _write_run_json(args, outdir, {
        "result": {"beta": result.beta, "r_squared": result.r_squared}
    })
    write_csv(
        outdir / "eta_scaling.csv",
        ["n_spins", "eta", "re_lambda_ref", "frequency"],
        [(n, fit.eta / k if fit.fittable else float("nan"), ref / k,
          fit.frequency / k)
         for (n, fit), ref in zip(result.table, refs)],
    )
    write_csv(
        outdir / "eta_fit.csv",
        ["beta", "r_squared", "amplitude", "beta_stderr"],
        [] if result.fit is None else
        [(result.beta, result.r_squared, result.fit.amplitude,
          result.fit.exponent_stderr)],
    )
    print(f"beta = {result.beta:.6g} (R^2 = {result.r_squared:.6g})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="btcsim",
        description="Dissipative collective-spin model: spectra, dynamics, "
                    "steady states, and the semiclassical limit.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectrum", help="full Liouvillian spectrum and band structure")
    _add_model_args(p, n_spins_default=20)
    p.add_argument("--epsilon-nu", type=_positive_float, default=spectral.DEFAULT_NU_THRESHOLD)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("gapscan", help="leading eigenvalue real parts vs system size")
    _add_model_args(p)
    p.add_argument("--sizes", type=parse_int_list, required=True)
    p.add_argument("--n-leading", type=_positive_int, default=6)
    p.set_defaults(func=cmd_gapscan)

    p = sub.add_parser("evolve", help="integrate the master equation")
    _add_model_args(p, n_spins_default=20)
    p.add_argument("--t-max", type=_positive_float, default=40.0)
    p.add_argument("--dt", type=_positive_float, default=None)
    p.add_argument("--stride", type=_positive_int, default=10)
    p.add_argument("--theta", type=float, default=np.pi / 2)
    p.add_argument("--phi", type=float, default=0.0)
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("ness", help="non-equilibrium steady state observables")
    _add_model_args(p, n_spins_default=200)
    p.add_argument("--scan-omega0", default=None,
                   help="start:stop:step grid of omega0/kappa values")
    p.set_defaults(func=cmd_ness)

    p = sub.add_parser("meanfield", help="thermodynamic-limit trajectory")
    _add_model_args(p)
    p.add_argument("--m0", default="1,0,0", help="initial Bloch vector mx,my,mz")
    p.add_argument("--t-max", type=_positive_float, default=50.0)
    p.add_argument("--dt", type=_positive_float, default=None)
    p.add_argument("--stride", type=_positive_int, default=10)
    p.set_defaults(func=cmd_meanfield)

    p = sub.add_parser("portrait", help="phase-space portrait of the mean-field flow")
    _add_model_args(p)
    p.add_argument("--grid-q", type=_positive_int, default=8)
    p.add_argument("--grid-p", type=_positive_int, default=8)
    p.add_argument("--t-max", type=_positive_float, default=150.0)
    p.add_argument("--dt", type=_positive_float, default=None)
    p.set_defaults(func=cmd_portrait)

    p = sub.add_parser("scaling", help="oscillation decay rate vs system size")
    _add_model_args(p)
    p.add_argument("--sizes", type=parse_int_list, required=True)
    p.add_argument("--t-max", type=_positive_float, default=40.0)
    p.add_argument("--dt", type=_positive_float, default=None)
    p.add_argument("--theta", type=float, default=np.pi / 2)
    p.add_argument("--phi", type=float, default=0.0)
    p.set_defaults(func=cmd_scaling)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

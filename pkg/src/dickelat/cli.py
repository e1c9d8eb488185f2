"""Command-line front end.

Subcommands: spectrum, lattice, sweep, stats, convergence.  Every flag can
also come from an INI config file (one section per subcommand); a flag given
on the command line wins over the file.

Exit codes: 0 success, 2 config error, 3 capacity, 4 solver,
5 sweep with failed points.
"""

import argparse
import configparser
import math
import sys
from dataclasses import replace
from pathlib import Path

from . import pipeline
from .errors import CapacityError, ConfigError, SolverError
from .hamiltonian import ModelParams

_BASIS_ALIASES = {"fock": "fock", "coherent": "coherent", "parity": "coherent-parity"}
_SECTOR_CHOICES = {"+": (1,), "-": (-1,), "both": (1, -1)}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("model and run options")
    g.add_argument("--omega", type=float, help="field frequency (default 1.0)")
    g.add_argument("--omega0", type=float, help="atomic level splitting (default 1.0)")
    g.add_argument("--gamma", help="coupling; sweep accepts a comma list or lo:hi:n")
    g.add_argument("--gamma-over-gc", help="coupling in units of the critical coupling")
    g.add_argument("--n-atoms", type=int, help="number of two-level atoms (j = N/2)")
    g.add_argument("--n-max", type=int, help="photon/shell truncation")
    g.add_argument("--basis", choices=sorted(_BASIS_ALIASES), help="working basis")
    g.add_argument("--sector", choices=sorted(_SECTOR_CHOICES), help="parity sector(s)")
    g.add_argument("--ops", help="comma list of Peres operators (Jz,Jx2,photon_n)")
    g.add_argument("--tol-dp", type=float, help="convergence tolerance on the top-shell weight")
    g.add_argument("--out", help="output directory")
    g.add_argument("--workers", type=int, help="concurrent sweep points")
    g.add_argument("--config", help="INI config file; flags override its values")
    g.add_argument("--bin-width", type=float, help="E/j bin width for DoS and markers")
    g.add_argument("--unfold-degree", type=int, help="polynomial degree for unfolding")
    g.add_argument("--mem-budget-gib", type=float, help="dense-matrix memory budget")
    g.add_argument("--solver-driver", choices=("ev", "evd", "evr"), help="LAPACK driver")

    parser = argparse.ArgumentParser(
        prog="dickelat",
        description="Dicke-model exact diagonalization, Peres lattices and chaos diagnostics",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("spectrum", parents=[common], help="energies only")
    sub.add_parser("lattice", parents=[common], help="full pipeline: lattices, DoS, markers, stats")
    sub.add_parser("sweep", parents=[common], help="one run per coupling plus a summary table")
    sub.add_parser("stats", parents=[common], help="level statistics per window")
    conv = sub.add_parser("convergence", parents=[common], help="top-shell weight profile vs n_max")
    conv.add_argument("--n-max-list", help="comma list or lo:hi:step of truncations")
    return parser


def _parse_float_list(text):
    """'a,b,c' or 'lo:hi:n' (n evenly spaced points, endpoints included)."""
    text = str(text).strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError(f"range spec needs lo:hi:n, got {text!r}")
        lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
        if n < 1:
            raise ConfigError("range spec needs n >= 1")
        if n == 1:
            return [lo]
        step = (hi - lo) / (n - 1)
        return [lo + k * step for k in range(n)]
    return [float(v) for v in text.split(",") if v.strip()]


def _parse_int_list(text):
    text = str(text).strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError(f"range spec needs lo:hi:step, got {text!r}")
        lo, hi, step = (int(p) for p in parts)
        if step <= 0:
            raise ConfigError("range spec needs step > 0")
        return list(range(lo, hi + 1, step))
    return [int(v) for v in text.split(",") if v.strip()]


def _load_config_section(path, section):
    cp = configparser.ConfigParser()
    read = cp.read(path)
    if not read:
        raise ConfigError(f"config file {path} not found or unreadable")
    if not cp.has_section(section):
        return {}
    return dict(cp.items(section))


def _merged(args, command):
    """Flag > config-file > default, keyed by the flag name with dashes."""
    merged = {}
    if args.config:
        merged.update(_load_config_section(args.config, command))
    for key, value in vars(args).items():
        if key in ("command", "config") or value is None:
            continue
        merged[key.replace("_", "-")] = value
    return merged


def _get(merged, key, cast, default):
    if key not in merged:
        return default
    try:
        return cast(merged[key])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for {key}: {merged[key]!r} ({exc})") from exc


def _resolve(merged, command):
    omega = _get(merged, "omega", float, 1.0)
    omega0 = _get(merged, "omega0", float, 1.0)
    n_atoms = _get(merged, "n-atoms", int, 40)
    if n_atoms < 1:
        raise ConfigError("n-atoms must be >= 1")
    j = n_atoms / 2.0
    gamma_c = math.sqrt(omega0 * omega) / 2.0

    has_g = "gamma" in merged
    has_gg = "gamma-over-gc" in merged
    if has_g and has_gg:
        raise ConfigError("give either gamma or gamma-over-gc, not both")
    if has_gg and gamma_c == 0:
        raise ConfigError("gamma-over-gc needs omega0 > 0")
    if has_g:
        gammas = _parse_float_list(merged["gamma"])
    elif has_gg:
        gammas = [f * gamma_c for f in _parse_float_list(merged["gamma-over-gc"])]
    else:
        raise ConfigError("a coupling is required: --gamma or --gamma-over-gc")
    if command != "sweep" and len(gammas) != 1:
        raise ConfigError(f"{command} takes a single coupling; got {len(gammas)}")
    if any(g < 0 for g in gammas):
        raise ConfigError("couplings must be >= 0")

    basis = _BASIS_ALIASES[_get(merged, "basis", str, "parity")]
    sectors = _SECTOR_CHOICES[_get(merged, "sector", str, "both")]
    ops_text = _get(merged, "ops", str, "Jz,Jx2,photon_n")
    ops = tuple(o.strip() for o in ops_text.split(",") if o.strip()) if ops_text else ()
    out = _get(merged, "out", str, None)

    analysis_on = command in ("lattice", "sweep", "stats")
    if command == "spectrum":
        ops = ()
    try:
        params = ModelParams(omega=omega, omega0=omega0, gamma=gammas[0], j=j)
        cfg = pipeline.RunConfig(
            params=params,
            basis=basis,
            n_max=_get(merged, "n-max", int, 250),
            sectors=sectors,
            ops=ops,
            dp_tol=_get(merged, "tol-dp", float, 1e-12),
            do_markers=analysis_on,
            do_dos=analysis_on and command != "stats",
            do_stats=analysis_on,
            bin_width=_get(merged, "bin-width", float, 0.05),
            unfold_degree=_get(merged, "unfold-degree", int, 6),
            out_dir=Path(out) if out else None,
            workers=_get(merged, "workers", int, 1),
            mem_budget_bytes=round(_get(merged, "mem-budget-gib", float, 4.0) * 2**30),
            solver_driver=_get(merged, "solver-driver", str, "evd"),
            gammas=tuple(gammas) if command == "sweep" else (),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return cfg


def _print_run(result):
    for man in result.manifests:
        sector = {1: "+", -1: "-", None: "all"}[man["sector"]]
        line = (
            f"gamma={man['gamma']:.6g} sector={sector} dim={man['dim']} "
            f"residual={man['residual_report']['max_residual']:.3e}"
        )
        if man["converged_count"] is not None:
            line += f" converged={man['converged_count']}"
        line += f" wall={man['wall_time_s']:.1f}s"
        print(line)
    if result.out_dir is not None:
        print(f"outputs under {result.out_dir}")


def _cmd_single(cfg):
    result = pipeline.run(cfg)
    _print_run(result)
    for sec in result.sectors:
        if sec.markers is not None:
            print(
                f"  markers: dynamic={sec.markers.dynamic_marker:.3f} "
                f"static={sec.markers.static_marker:.3f}"
            )
        if sec.stats is not None:
            for entry in sec.stats:
                if "mean_ratio" in entry:
                    print(
                        f"  window {entry['window']}: n={entry['n_levels']} "
                        f"mean gap ratio={entry['mean_ratio']:.4f}"
                    )
    return 0


def _cmd_sweep(cfg):
    results, rows = pipeline.sweep(cfg)
    failed = 0
    for row in rows:
        print(
            f"gamma={row['gamma']:.6g} [{row['status']}] "
            f"ground E/j={row['ground_e_over_j']:.6f} converged={row['converged_count']}"
        )
        if row["status"] != "ok":
            failed += 1
    if cfg.out_dir is not None:
        print(f"summary at {cfg.out_dir / 'summary.csv'}")
    return 5 if failed else 0


def _cmd_convergence(cfg, merged):
    n_list = _parse_int_list(merged.get("n-max-list", "50,100,150,200,250"))
    print("n_max  dim    converged  ground_dp      max_dp(E/j<=1)")
    for n_max in n_list:
        point = replace(
            cfg, n_max=n_max, ops=(), do_markers=False, do_dos=False,
            do_stats=False, out_dir=None,
        )
        result = pipeline.run(point)
        for sec in result.sectors:
            if sec.report is None:
                continue
            e_over_j = sec.energies / cfg.params.j
            low = sec.report.delta_p[e_over_j <= 1.0]
            max_low = low.max() if low.size else math.nan
            print(
                f"{n_max:<6d} {sec.dim:<6d} {sec.report.converged_count:<10d} "
                f"{sec.report.delta_p[0]:<14.3e} {max_low:.3e}"
            )
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        merged = _merged(args, args.command)
        cfg = _resolve(merged, args.command)
        if args.command == "sweep":
            return _cmd_sweep(cfg)
        if args.command == "convergence":
            return _cmd_convergence(cfg, merged)
        return _cmd_single(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except CapacityError as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return 3
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())

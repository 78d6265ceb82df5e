"""Command line entry point.

    nematic-soh coeffs --kappa 2
    nematic-soh gci-table --kappa 2 --out g.csv
    nematic-soh hyperbolicity --kappa 2 --grid 201
    nematic-soh particles --config run.cfg --out runs/p1
    nematic-soh macro --config macro.cfg --out runs/m1
    nematic-soh validate --experiment equilibrium [--config exp.cfg]
    nematic-soh validate --manifest runs/eq/manifest.cfg
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

from . import __version__, harness, macro1d, particles
from .coefficients import coefficient_lines, compute_coefficients, format_number, interaction_k
from .config import EXPERIMENT_KINDS, REQUIRED, Config, ConfigError, format_config, parse_config
from .gci import DEFAULT_GRID, build_gci_table
from .hyperbolicity import hyperbolicity_scan
from .numerics import RandomStream

__all__ = ["main", "parse_config", "build_parser"]

log = logging.getLogger("nematic_soh")

EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_INCONCLUSIVE = 3


def _common(with_out: bool = True) -> argparse.ArgumentParser:
    # SUPPRESS keeps a subcommand from clobbering options given before it
    p = argparse.ArgumentParser(add_help=False)
    if with_out:
        p.add_argument("--out", dest="out", default=argparse.SUPPRESS,
                       help="output directory (default: out/<command>)")
    p.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="override every seed in the config")
    p.add_argument("-v", "--verbose", action="count", default=argparse.SUPPRESS)
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nematic-soh", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--out", default=None, help="output directory (default: out/<command>)")
    parser.add_argument("--seed", type=int, default=None, help="override every seed in the config")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    p = sub.add_parser("coeffs", parents=[_common()], help="print d1, d2, mu, d3, D for one kappa")
    p.add_argument("--kappa", type=float, required=True)
    p.add_argument("--r", type=float, default=None, help="interaction radius for k = r^2/8")
    p.add_argument("--n-grid", type=int, default=DEFAULT_GRID)

    p = sub.add_parser("gci-table", parents=[_common(with_out=False)], help="write (theta, g) as CSV")
    p.add_argument("--kappa", type=float, required=True)
    p.add_argument("--n-grid", type=int, default=DEFAULT_GRID)
    p.add_argument("--out", dest="table", default=None, help="CSV file (default: stdout)")

    p = sub.add_parser("hyperbolicity", parents=[_common()], help="scan the discriminant on the (c, X) grid")
    p.add_argument("--kappa", type=float, required=True)
    p.add_argument("--grid", type=int, default=201, help="points per axis")
    p.add_argument("--samples", type=int, default=21, help="eigenvalue samples per axis")

    p = sub.add_parser("particles", parents=[_common()], help="run the particle model")
    p.add_argument("--config", required=True)

    p = sub.add_parser("macro", parents=[_common()], help="run the 1D macroscopic solver")
    p.add_argument("--config", required=True)

    p = sub.add_parser("validate", parents=[_common()], help="run a validation experiment")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--experiment", choices=EXPERIMENT_KINDS)
    group.add_argument("--manifest", help="rerun from a manifest and compare report bytes")
    p.add_argument("--config", default=None, help="experiment config (defaults per experiment)")
    return parser


# ---------------------------------------------------------------- helpers

def _out_dir(args, default: str) -> Path:
    out = Path(args.out if args.out is not None else Path("out") / default)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _apply_seed(config: Config, seed: int | None) -> None:
    if seed is not None:
        config.set("experiment.seed", seed)
        config.set("particles.seed", seed)


def _write_manifest(path: Path, config: Config, sections, **extra) -> None:
    path.write_text(format_config(config, sections, extra=extra), encoding="utf-8")
    log.info("wrote %s", path)


# ---------------------------------------------------------------- commands

def cmd_coeffs(args) -> int:
    cs = compute_coefficients(args.kappa, build_gci_table(args.kappa, args.n_grid))
    nl = interaction_k(args.r) if args.r is not None else None
    print("\n".join(coefficient_lines(cs, nl)))
    return 0


def cmd_gci_table(args) -> int:
    table = build_gci_table(args.kappa, args.n_grid)
    fh = open(args.table, "w", newline="", encoding="utf-8") if args.table else sys.stdout
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["theta", "g"])
        for t, g in zip(table.grid, table.values):
            w.writerow([format_number(t), format_number(g)])
    finally:
        if fh is not sys.stdout:
            fh.close()
    return 0


def cmd_hyperbolicity(args) -> int:
    rep = hyperbolicity_scan(compute_coefficients(args.kappa), args.grid, args.grid, args.samples)
    lines = [json.dumps({"kappa": rep.kappa, **row}) for row in rep.rows]
    lines.append(json.dumps({
        "summary": True, "kappa": rep.kappa, "d2_hat": rep.d2_hat, "mu_hat": rep.mu_hat,
        "min_discriminant": rep.min_discriminant, "argmin_c": rep.argmin[0], "argmin_X": rep.argmin[1],
        "max_imag_where_positive": rep.max_imag_where_positive(), "hyperbolic": rep.hyperbolic(),
    }))
    if args.out is not None:
        path = _out_dir(args, "hyperbolicity") / "hyperbolicity.ndjson"
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        log.info("wrote %s", path)
        print(lines[-1])
    else:
        print("\n".join(lines))
    return 0


def cmd_particles(args) -> int:
    config = parse_config(args.config, default_section="particles", required_sections=("particles",))
    _apply_seed(config, args.seed)
    params = harness.sim_params(config)
    sec = config.section("particles")
    rng = RandomStream(params.seed)
    state = harness.initial_particles(config, params, rng)
    n_steps = int(round(sec["t_end"] / params.dt))
    stride = sec["stride"]
    out = _out_dir(args, "particles")
    _write_manifest(out / "manifest.cfg", config, ("particles",), seed=params.seed,
                    rng=RandomStream.algorithm)

    with open(out / "trajectory.ndjson", "w", encoding="utf-8") as traj, \
            open(out / "summary.csv", "w", newline="", encoding="utf-8") as summ:
        w = csv.writer(summ, lineterminator="\n")
        w.writerow(["time", "nematic_order", "slab", "x", "rho_plus", "rho_minus", "theta_bar"])

        def record(k, st):
            traj.write(json.dumps({"time": st.time, "x": st.positions[:, 0].tolist(),
                                   "y": st.positions[:, 1].tolist(), "theta": st.angles.tolist()}) + "\n")
            order = format_number(particles.nematic_order(st.angles))
            f = particles.measure_fields(st, params, sec["n_bins"])
            for b in range(sec["n_bins"]):
                w.writerow([format_number(st.time), order, b, format_number(f.centers[b]),
                            format_number(f.rho_plus[b]), format_number(f.rho_minus[b]),
                            format_number(f.theta_bar[b])])

        record(0, state)
        state = particles.simulate(state, params, n_steps, rng, stride=stride, callback=record)
        if not stride or n_steps % stride:
            record(n_steps, state)
    log.info("wrote %s", out)
    print(f"particles: {n_steps} steps, t = {state.time:.6g}, "
          f"order = {particles.nematic_order(state.angles):.6f}, output in {out}")
    return 0


def macro_setup(config: Config) -> tuple[macro1d.MacroState, macro1d.SolverParams]:
    sec = config.section("macro")
    cs = compute_coefficients(sec["kappa"])
    params = macro1d.SolverParams(cs, k_nonlocal=interaction_k(sec["r"]).k if sec["r"] > 0 else 0.0, lambda0=sec["lambda0"],
                                  lambda1=sec["lambda1"], cfl=sec["cfl"], t_end=sec["t_end"],
                                  boundary=sec["boundary"])
    n, L, preset = sec["n_cells"], sec["length"], sec["preset"]
    if preset == "uniform":
        state = macro1d.uniform_state(n, L, sec["rho_plus"], sec["rho_minus"], sec["theta"])
    elif preset == "riemann":
        state = macro1d.riemann_state(
            n, L, (sec["rho_plus"], sec["rho_minus"], sec["theta"]),
            (sec["right_rho_plus"], sec["right_rho_minus"], sec["right_theta"]),
            sec["x0"] if sec["x0"] >= 0 else None)
    elif preset == "sine":
        state = macro1d.sine_state(n, L, sec["rho_plus"], sec["rho_minus"], sec["theta"],
                                   sec["amplitude"], sec["mode"], sec["field"])
    else:
        state = macro1d.bands_state(n, L, sec["background"], sec["peak"], sec["width"])
    return state, params


def cmd_macro(args) -> int:
    config = parse_config(args.config, default_section="macro")
    state, params = macro_setup(config)
    sec = config.section("macro")
    out = _out_dir(args, "macro")
    _write_manifest(out / "manifest.cfg", config, ("macro",))
    result = macro1d.run(state, params, stride=sec["stride"], max_steps=sec["max_steps"] or None)
    with open(out / "snapshots.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["time", "x", "rho_plus", "rho_minus", "theta_bar"])
        for snap in result.snapshots:
            t = format_number(snap.time)
            for row in zip(snap.x, snap.rho_plus, snap.rho_minus, snap.theta_bar):
                w.writerow([t, *map(format_number, row)])
    with open(out / "mass_log.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["time", "mass"])
        w.writerows([format_number(t), format_number(m)] for t, m in result.mass_log)
    m0, m1 = result.mass_log[0][1], result.mass_log[-1][1]
    print(f"macro: {result.n_steps} steps ({result.retries} retries), t = {result.final.time:.6g}, "
          f"mass drift = {abs(m1 - m0) / max(abs(m0), 1e-300):.3g}, output in {out}")
    return 0


def cmd_validate(args) -> int:
    if args.manifest:
        manifest = Path(args.manifest)
        out = _out_dir(args, "rerun")
        report = harness.rerun_from_manifest(manifest, out)
        ref = manifest.parent / "report.csv"
        print(report.summary())
        if ref.is_file():
            same = ref.read_bytes() == (out / "report.csv").read_bytes()
            print(f"report.csv {'identical to' if same else 'DIFFERS from'} {ref}")
            if not same:
                return EXIT_FAIL
        return 0 if report.ok else (EXIT_INCONCLUSIVE if report.inconclusive else EXIT_FAIL)

    if args.config:
        config = parse_config(args.config, default_section="experiment")
        kind = config.get("experiment.kind")
        if kind is not REQUIRED and kind != args.experiment:
            raise ConfigError(f"config declares experiment.kind = {kind}, not {args.experiment}")
        config.set("experiment.kind", args.experiment)
    else:
        config = harness.default_config(args.experiment)
    _apply_seed(config, args.seed)
    out = _out_dir(args, args.experiment)
    report = harness.run_experiment(harness.ExperimentConfig.from_config(config, str(out)))
    print(report.summary())
    log.info("wrote report, summary and manifest to %s", out)
    if report.inconclusive:
        return EXIT_INCONCLUSIVE
    return 0 if report.ok else EXIT_FAIL


COMMANDS = {
    "coeffs": cmd_coeffs,
    "gci-table": cmd_gci_table,
    "hyperbolicity": cmd_hyperbolicity,
    "particles": cmd_particles,
    "macro": cmd_macro,
    "validate": cmd_validate,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, macro1d.SolverError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())

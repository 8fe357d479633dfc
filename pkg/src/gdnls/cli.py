"""Command-line entry point: ``gdnls <subcommand> [options]``.

Exit codes: 0 all verdicts pass, 1 some verdict failed, 2 usage or
configuration error, 3 a run aborted (blowup or non-finite state).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import experiments as ex
from .config import DEFAULTS, ConfigError, RunConfig, canonical_json, load_config, validate
from .integrator import Termination, duhamel_residual, evolve, plane_wave_exact
from .persistence import ChecksumError, load_trajectory, save_report, save_trajectory
from .spectral import l2_norm

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_ABORT = 0, 1, 2, 3
PROBES = ("lower-order", "h2-growth", "hamiltonian", "duhamel", "continuous-dependence")

log = logging.getLogger("gdnls")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gdnls", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, config_required=True):
        p.add_argument("--config", type=Path, required=config_required, help="JSON run configuration")
        p.add_argument("--out", type=Path, help="output root (default: outputs.directory)")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                       help="dotted-path config override, repeatable")

    common(sub.add_parser("run", help="evolve one trajectory and write its artifacts"))
    common(sub.add_parser("sweep", help="convergence in the cutoff K"))
    p = sub.add_parser("probe", help="run one probe on a stored or fresh trajectory")
    common(p, config_required=False)
    p.add_argument("--name", choices=PROBES, required=True)
    p.add_argument("--trajectory", type=Path, help="stored trajectory directory")
    p.add_argument("--r", type=float, help="exponent for the lower-order probe")
    common(sub.add_parser("dichotomy", help="small-data threshold experiment"))
    common(sub.add_parser("blowup-scan", help="H^2 monitor over a list of sigma"))
    p = sub.add_parser("verify-static", help="non-dynamical inequality suites")
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--modes", type=int, default=16)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path)
    return parser


def _load(args) -> RunConfig:
    if args.config is None:
        cfg = validate(json.loads(canonical_json(DEFAULTS)))
    else:
        cfg = load_config(args.config, args.override)
    if args.seed is not None:
        raw = dict(cfg.raw, seed=args.seed)
        cfg = validate(raw, cfg.base_dir)
    return cfg


def _out_root(args, cfg: RunConfig | None) -> Path:
    if args.out is not None:
        return args.out
    return Path(cfg.outputs["directory"] if cfg else DEFAULTS["outputs"]["directory"])


def _emit(report: ex.ExperimentReport, root: Path) -> int:
    path = save_report(report, root)
    print(f"{report.name}: {report.verdict}  ->  {path}")
    for k, v in report.fitted_constants.items():
        print(f"  {k} = {v:.6g}")
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_run(args) -> int:
    cfg = _load(args)
    u0 = cfg.initial_field()
    traj = evolve(u0, cfg.model, cfg.solver)
    run_dir = _out_root(args, cfg) / f"run-{cfg.digest()}-seed{cfg.seed}"
    save_trajectory(traj, run_dir, snapshots=cfg.outputs["snapshots"],
                    extra={"run_config": cfg.raw, "config_digest": cfg.digest()})
    (run_dir / "config.json").write_text(canonical_json(cfg.raw))
    last = traj.invariant_trace[-1]
    print(f"run: {traj.termination.value} at t={last.t:g}  ->  {run_dir}")
    print(f"  mass={last.mass:.17g} hamiltonian={last.hamiltonian:.17g} h1={last.h1_norm:.6g} h2={last.h2_norm:.6g}")
    init = cfg.raw["initial"]
    k_cut = cfg.model.cutoff.K
    if init["kind"] == "plane_wave" and traj.termination is Termination.COMPLETED and (
        k_cut is None or abs(init["k"]) <= k_cut
    ):
        a = complex(*init["amplitude"])
        exact = plane_wave_exact(cfg.num_modes, a, init["k"], cfg.model.sigma, traj.snapshots[-1][0])
        print(f"  plane-wave L2 error vs exact = {l2_norm(traj.final - exact):.3e}")
    return EXIT_OK if traj.termination is Termination.COMPLETED else EXIT_ABORT


def cmd_sweep(args) -> int:
    cfg = _load(args)
    e = cfg.experiment
    report = ex.eps_convergence(cfg.initial_field(), cfg.model.sigma, e["cutoffs"], cfg.solver,
                                reference=e["reference"], oversample=cfg.model.oversample)
    report.seed = cfg.seed
    return _emit(report, _out_root(args, cfg))


def cmd_probe(args) -> int:
    cfg = _load(args) if args.config is not None or args.trajectory is None else None
    if args.name == "continuous-dependence":
        if cfg is None:
            raise ConfigError("", "continuous-dependence needs --config")
        e = cfg.experiment
        report = ex.continuous_dependence_probe(cfg.initial_field(), e["s_prime"], cfg.model, cfg.solver,
                                                deltas=e["deltas"], seed=cfg.seed)
        return _emit(report, _out_root(args, cfg))

    if args.trajectory is not None:
        traj = load_trajectory(args.trajectory)
    else:
        traj = evolve(cfg.initial_field(), cfg.model, cfg.solver)
    if traj.termination is not Termination.COMPLETED:
        print(f"probe: trajectory ended with {traj.termination.value}", file=sys.stderr)
        return EXIT_ABORT
    if args.name == "lower-order":
        r = args.r if args.r is not None else (cfg.experiment["r"] if cfg else DEFAULTS["experiment"]["r"])
        report = ex.lower_order_probe(traj, r)
    elif args.name == "h2-growth":
        report = ex.h2_growth_probe(traj)
    elif args.name == "hamiltonian":
        report = ex.hamiltonian_monotonicity(traj)
    else:
        idx = len(traj.snapshots) - 1
        res = duhamel_residual(traj, idx)
        report = ex.ExperimentReport("duhamel", ex.PASS if res <= 1e-6 else ex.FAIL,
                                     fitted_constants={"residual": res}, tolerances={"residual": 1e-6})
    if cfg is not None:
        report.seed = cfg.seed
    return _emit(report, _out_root(args, cfg))


def cmd_dichotomy(args) -> int:
    cfg = _load(args)
    e = cfg.experiment
    report = ex.dichotomy_experiment(e["amplitudes"], cfg.model.sigma, cfg.model, cfg.solver,
                                     num_modes=cfg.num_modes, k=e["plane_wave_k"])
    report.seed = cfg.seed
    return _emit(report, _out_root(args, cfg))


def cmd_blowup_scan(args) -> int:
    cfg = _load(args)
    report = ex.blowup_scan(cfg.initial_field(), cfg.experiment["sigmas"], cfg.model, cfg.solver)
    report.seed = cfg.seed
    code = _emit(report, _out_root(args, cfg))
    if report.verdict == ex.INCONCLUSIVE:
        return EXIT_ABORT
    return code


def cmd_verify_static(args) -> int:
    if args.samples < 1 or args.modes < 1:
        raise ConfigError("", "--samples and --modes must be positive")
    reports = ex.static_suite(args.samples, args.modes, args.seed)
    root = args.out or Path(DEFAULTS["outputs"]["directory"])
    codes = [_emit(r, root) for r in reports]
    return max(codes)


COMMANDS = {
    "run": cmd_run,
    "sweep": cmd_sweep,
    "probe": cmd_probe,
    "dichotomy": cmd_dichotomy,
    "blowup-scan": cmd_blowup_scan,
    "verify-static": cmd_verify_static,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, ChecksumError) as e:
        print(f"gdnls: config error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except ex.RunAborted as e:
        print(f"gdnls: {e}", file=sys.stderr)
        return EXIT_ABORT
    except (FileNotFoundError, ValueError) as e:
        print(f"gdnls: error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

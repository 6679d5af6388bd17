"""Command-line entry point: ``crystal-qaoa {generate,solve-exact,run,transfer}``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import config, fileio
from .errors import FormatError, InvalidArgumentError, NumericalFailureError, ResourceLimitError
from .experiment import OPTIMIZING, STRATEGIES, ExperimentConfig, load_model, run_experiment, run_transfer
from .ising import exhaustive_ground_states, random_instance
from .lattice import assemble_ising

log = logging.getLogger("crystal_qaoa")


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=None, help="master seed (default 0)")
    p.add_argument("--shots", type=int, default=None, help=f"samples per run (default {config.SHOTS})")
    p.add_argument("--out-dir", default=None, help="output directory (default ./results)")
    p.add_argument("--max-qubits", type=int, default=None, help=f"simulator ceiling (default {config.MAX_QUBITS})")
    p.add_argument("--workers", type=int, default=None, help="parallel sweep cells (default 1)")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="crystal-qaoa", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", parents=[common], help="write an instance file")
    src = g.add_mutually_exclusive_group(required=True)
    src.add_argument("--lattice", metavar="SPEC", help="lattice spec JSON to compile")
    src.add_argument("--random", type=int, metavar="N", help="random fully connected model on N sites")
    g.add_argument("--scale", type=float, default=1.0, help="coefficient range for --random")
    g.add_argument("-o", "--output", help="instance path (default OUT_DIR/instance.json)")

    s = sub.add_parser("solve-exact", parents=[common], help="exhaustive ground-state search")
    s.add_argument("instance")
    s.add_argument("-o", "--output", help="spectrum path (default OUT_DIR/spectrum_<instance>.json)")
    s.add_argument("--limit", type=int, default=config.EXHAUSTIVE_LIMIT, help="largest N to enumerate")

    r = sub.add_parser("run", parents=[common], help="QAOA sweep over instances and depths")
    r.add_argument("--config", help="experiment config JSON; flags below override it")
    r.add_argument("--instance", nargs="+", dest="instances", help="instance or lattice spec files")
    r.add_argument("--strategy", choices=STRATEGIES)
    r.add_argument("--depths", nargs="+", type=int)
    r.add_argument("--budget", type=int, help="optimizer evaluation budget")
    r.add_argument("--random-baseline", action="store_true", default=None, help="also sample uniformly")
    r.add_argument("--transfer-source", help="source instance for --strategy transfer")
    r.add_argument("--transfer-strategy", choices=OPTIMIZING)

    t = sub.add_parser("transfer", parents=[common], help="optimize on one instance, sample another")
    t.add_argument("--source", required=True)
    t.add_argument("--target", required=True)
    t.add_argument("--strategy", choices=OPTIMIZING, default="full-opt")
    t.add_argument("--depths", nargs="+", type=int, default=[5])
    t.add_argument("--budget", type=int)
    return parser


def _out_dir(args) -> Path:
    return Path(args.out_dir or "results")


def cmd_generate(args) -> int:
    if args.lattice:
        spec, table = fileio.load_lattice_spec(args.lattice)
        model = assemble_ising(spec, table)
    else:
        model = random_instance(args.random, args.scale, args.seed or 0)
    out = Path(args.output) if args.output else _out_dir(args) / "instance.json"
    fileio.save_instance(out, model)
    js = [v for _, _, v in model.couplings]
    print(f"wrote {out}")
    print(f"N = {model.n_sites}, fields = {model.n_sites}, couplings = {len(js)}, offset = {model.offset!r}")
    print(f"field range [{float(model.fields.min())!r}, {float(model.fields.max())!r}]")
    if js:
        print(f"coupling range [{min(js)!r}, {max(js)!r}]")
    else:
        log.warning("instance has no couplings (cutoff below the nearest-neighbor distance?)")
    return 0


def cmd_solve_exact(args) -> int:
    model = load_model(args.instance)
    spectrum = exhaustive_ground_states(model, limit=args.limit)
    out = Path(args.output) if args.output else _out_dir(args) / f"spectrum_{Path(args.instance).stem}.json"
    fileio.write_json(out, fileio.spectrum_to_dict(spectrum))
    print(f"min energy {spectrum.min_energy!r}, degeneracy {spectrum.degeneracy}, next {spectrum.next_energy!r}")
    print(f"wrote {out}")
    return 0


def cmd_run(args) -> int:
    data = fileio.read_json(args.config) if args.config else {}
    overrides = {
        "instances": args.instances,
        "strategy": args.strategy,
        "depths": args.depths,
        "budget": args.budget,
        "random_baseline": args.random_baseline,
        "transfer_source": args.transfer_source,
        "transfer_strategy": args.transfer_strategy,
        "seed": args.seed,
        "shots": args.shots,
        "out_dir": args.out_dir,
        "max_qubits": args.max_qubits,
        "workers": args.workers,
    }
    data.update({k: v for k, v in overrides.items() if v is not None})
    if "instances" not in data:
        raise FormatError("run: give --instance or a config with 'instances'")
    cfg = ExperimentConfig.from_dict(data)
    outcomes = run_experiment(cfg)
    failed = 0
    for out in outcomes:
        if isinstance(out, Exception):
            failed += 1
        else:
            print(f"{out.instance:>20} {out.strategy:>11} p={out.p:<2} success={out.success_rate:.4f}")
    print(f"wrote {Path(cfg.out_dir) / 'summary.csv'}")
    return 1 if failed else 0


def cmd_transfer(args) -> int:
    pairs = run_transfer(
        args.source, args.target, args.strategy, args.depths,
        shots=args.shots or config.SHOTS, seed=args.seed or 0, out_dir=_out_dir(args),
        budget=args.budget, max_qubits=args.max_qubits or config.MAX_QUBITS,
    )
    failed = 0
    for src, tgt in pairs:
        if isinstance(tgt, Exception):
            failed += 1
            print(f"p={src.p:<2} {src.instance}: {src.success_rate:.4f}  ->  target failed")
        else:
            print(f"p={src.p:<2} {src.instance}: {src.success_rate:.4f}  ->  {tgt.instance}: {tgt.success_rate:.4f}")
    print(f"wrote {_out_dir(args) / 'transfer_summary.csv'}")
    return 1 if failed else 0


COMMANDS = {"generate": cmd_generate, "solve-exact": cmd_solve_exact, "run": cmd_run, "transfer": cmd_transfer}


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (FormatError, InvalidArgumentError) as exc:
        log.error("%s", exc)
        return 2
    except (ResourceLimitError, NumericalFailureError) as exc:
        log.error("%s", exc)
        return 3


if __name__ == "__main__":
    sys.exit(main())

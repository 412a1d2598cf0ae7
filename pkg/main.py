import argparse
import sys
from typing import Dict, List, Optional

from utils.logger import logger
from workflow.main_orchestrator import EXIT_USAGE, cmd_eval, cmd_metrics, cmd_plot, cmd_train


def _bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("true", "1", "yes"):
        return True
    if lowered in ("false", "0", "no"):
        return False
    raise argparse.ArgumentTypeError(f"expected true or false, got '{text}'")


def _floats(text: str) -> List[float]:
    try:
        return [float(part) for part in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got '{text}'") from None


def parse_sets(pairs: Optional[List[str]]) -> Dict[str, str]:
    """``section.key=value`` strings -> override mapping."""
    overrides = {}
    for pair in pairs or []:
        key, sep, value = pair.partition("=")
        if not sep or "." not in key:
            raise argparse.ArgumentTypeError(f"--set expects section.key=value, got '{pair}'")
        overrides[key.strip()] = value
    return overrides


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dmorl", description="Multi-objective PPO / A2C experiment harness")
    sub = parser.add_subparsers(dest="cmd", required=True)

    sp = sub.add_parser("train", help="train one run")
    sp.add_argument("--config", help="YAML config file")
    sp.add_argument("--env", help="dst / minecart / minecart-deterministic")
    sp.add_argument("--algo", choices=["moppo", "moa2c"])
    sp.add_argument("--arch", help="multi-body / merge / hypernet / hypernet-obs")
    sp.add_argument("--shared-trunk", type=_bool)
    sp.add_argument("--steps", type=int, help="total environment steps")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--out-dir")
    sp.add_argument("--resume", help="checkpoint to continue from")
    sp.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE", help="override any config key")

    sp = sub.add_parser("eval", help="evaluate a checkpoint on the weight grid")
    sp.add_argument("checkpoint")
    sp.add_argument("--out-dir")
    sp.add_argument("--env", help="evaluate on another environment id (shapes must match)")
    sp.add_argument("--grid-size", type=int)
    sp.add_argument("--num-samples", type=int)
    sp.add_argument("--episodes", type=int)
    sp.add_argument("--eval-seed", type=int)
    sp.add_argument("--gamma", type=float)
    sp.add_argument("--workers", type=int)
    sp.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE")

    sp = sub.add_parser("metrics", help="recompute hv / eu / mul from a front file")
    sp.add_argument("front")
    sp.add_argument("--reference", type=_floats, help="hypervolume reference point, e.g. 0,-19.0")
    sp.add_argument("--env", help="take the reference point and oracle front from this environment")
    sp.add_argument("--gamma", type=float, default=0.99)
    sp.add_argument("--out", help="also write the report to this CSV")

    sp = sub.add_parser("plot", help="SVG scatter of K = 2 fronts")
    sp.add_argument("fronts", nargs="+")
    sp.add_argument("--output", required=True)
    sp.add_argument("--oracle-env", help="overlay the exact front of this environment")
    sp.add_argument("--gamma", type=float, default=0.99)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    try:
        overrides = parse_sets(getattr(args, "set", None))
    except argparse.ArgumentTypeError as e:
        logger.error(str(e))
        return EXIT_USAGE

    if args.cmd == "train":
        flags = {
            "env.id": args.env,
            "run.algo": args.algo,
            "arch.kind": args.arch,
            "arch.shared_trunk": args.shared_trunk,
            "train.total_steps": args.steps,
            "run.seed": args.seed,
            "run.out_dir": args.out_dir,
        }
        overrides.update({key: value for key, value in flags.items() if value is not None})
        return cmd_train(args.config, overrides, args.resume)
    if args.cmd == "eval":
        flags = {
            "env.id": args.env,
            "eval.grid_size": args.grid_size,
            "eval.num_samples": args.num_samples,
            "eval.episodes": args.episodes,
            "eval.seed": args.eval_seed,
            "eval.gamma": args.gamma,
            "eval.workers": args.workers,
        }
        overrides.update({key: value for key, value in flags.items() if value is not None})
        return cmd_eval(args.checkpoint, args.out_dir, overrides)
    if args.cmd == "metrics":
        return cmd_metrics(args.front, args.reference, args.env, args.gamma, args.out)
    if args.cmd == "plot":
        return cmd_plot(args.fronts, args.output, args.oracle_env, args.gamma)
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

"""
Multi-seed loop over ``main.py train`` and ``main.py eval``.

Each seed is a separate process. After all seeds finished, the evaluated
hypervolume of every seed is compared against the exact DST front:

    python scripts/run_seeds.py --env dst --arch multi-body --seeds 1 2 3 4 5 \
        --threshold 0.95 --min-passing 4 --out-root runs/dst
"""
import argparse
import subprocess
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT))

from envs import make_env, true_pareto_front  # noqa: E402
from metrics.evaluation import read_report  # noqa: E402
from metrics.hypervolume import hypervolume  # noqa: E402
from utils.logger import logger  # noqa: E402


def run(command):
    logger.info(" ".join(command))
    return subprocess.run(command, cwd=ROOT).returncode


def main() -> int:
    parser = argparse.ArgumentParser(description="Train and evaluate one configuration over several seeds")
    parser.add_argument("--env", default="dst")
    parser.add_argument("--algo", default="moppo")
    parser.add_argument("--arch", default="multi-body")
    parser.add_argument("--shared-trunk", default="true")
    parser.add_argument("--steps", type=int, default=100_000)
    parser.add_argument("--seeds", type=int, nargs="+", default=[1, 2, 3, 4, 5])
    parser.add_argument("--config")
    parser.add_argument("--gamma", type=float, default=0.99)
    parser.add_argument("--threshold", type=float, default=0.95, help="fraction of the oracle hypervolume")
    parser.add_argument("--min-passing", type=int, default=4)
    parser.add_argument("--out-root", default="runs/seeds")
    args = parser.parse_args()

    oracle_hv = None
    if args.env == "dst":
        env = make_env(args.env)
        oracle_hv = hypervolume(true_pareto_front(env, args.gamma), env.reference_point(args.gamma))
        logger.info(f"Oracle hypervolume: {oracle_hv:.4f}")

    passing = 0
    for seed in args.seeds:
        out_dir = Path(args.out_root) / f"{args.algo}_{args.arch}_{args.shared_trunk}_seed{seed}"
        train = [
            sys.executable, "main.py", "train",
            "--env", args.env, "--algo", args.algo, "--arch", args.arch,
            "--shared-trunk", args.shared_trunk, "--steps", str(args.steps),
            "--seed", str(seed), "--out-dir", str(out_dir),
        ]
        if args.config:
            train += ["--config", args.config]
        code = run(train)
        if code != 0:
            logger.warning(f"Seed {seed}: training exited with {code}")
            continue
        code = run([sys.executable, "main.py", "eval", str(out_dir / "checkpoints" / "final.ckpt"),
                    "--gamma", str(args.gamma)])
        if code != 0:
            logger.warning(f"Seed {seed}: evaluation exited with {code}")
            continue
        report = read_report(out_dir / "eval" / "metrics.csv")
        if oracle_hv:
            ratio = report["hv"] / oracle_hv
            passing += ratio >= args.threshold
            logger.info(f"Seed {seed}: hv {report['hv']:.4f} ({ratio:.1%} of oracle)")
        else:
            logger.info(f"Seed {seed}: hv {report['hv']:.4f}")

    if oracle_hv is None:
        return 0
    logger.info(f"{passing}/{len(args.seeds)} seeds reached {args.threshold:.0%} of the oracle hypervolume")
    return 0 if passing >= args.min_passing else 1


if __name__ == "__main__":
    sys.exit(main())

import argparse
import logging
import sys
from typing import List, Optional

from tqdm import tqdm

from app.cli.run import compare, parse_run_config, run
from app.config import get_settings
from app.errors import SolverError
from app.offcenter import STRATEGIES


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="offwos", description="Off-centered Walk-on-Spheres solver")
    parser.add_argument("--scene", required=True, help="scene config (JSON)")
    parser.add_argument("--strategy", choices=STRATEGIES, default="statistical")
    parser.add_argument("--gamma", type=float, default=0.05, help="acceptance threshold on 1 - w*")
    parser.add_argument("--min-samples", type=int, default=8, help="samples per pair before the w* test applies")
    parser.add_argument("--alpha", type=float, default=0.5)
    parser.add_argument("--beta", type=float, default=10.0)
    parser.add_argument("--eps", type=float, default=1e-3, help="stopping shell width")
    parser.add_argument("--spp", type=int, default=16, help="rounds (stage-1 walks per point)")
    parser.add_argument("--source-samples", type=int, default=1)
    parser.add_argument("--max-steps", type=int, default=1000)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--workers", type=int, default=None)
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument("--budget-mode", choices=["rounds", "seconds"], default="rounds")
    parser.add_argument("--seconds", type=float, default=None, help="wall-clock budget per strategy")
    parser.add_argument("--compare", default=None, help="comma-separated strategies run on shared seeds")
    parser.add_argument("--gradient", action="store_true", help="estimate grad u instead of u")
    parser.add_argument("--neighbor-mode", choices=["distance", "grid"], default="distance")
    parser.add_argument("--source-sampling", choices=["two-stage", "centered"], default="two-stage")
    parser.add_argument("--resolution", type=int, default=None, help="override the scene's slice resolution")
    parser.add_argument("--no-images", action="store_true")
    parser.add_argument("--log-level", default=None)
    return parser


def config_from_args(args: argparse.Namespace):
    data = {
        "scene": args.scene,
        "strategy": args.strategy,
        "gamma": args.gamma,
        "min_samples": args.min_samples,
        "alpha": args.alpha,
        "beta": args.beta,
        "epsilon": args.eps,
        "spp": args.spp,
        "source_samples": args.source_samples,
        "max_steps": args.max_steps,
        "seed": args.seed,
        "workers": args.workers,
        "out": args.out,
        "budget_mode": args.budget_mode,
        "seconds": args.seconds,
        "compare": [name.strip() for name in args.compare.split(",") if name.strip()] if args.compare else [],
        "gradient": args.gradient,
        "neighbor_mode": args.neighbor_mode,
        "source_sampling": args.source_sampling,
        "resolution": args.resolution,
        "write_images": not args.no_images,
    }
    return parse_run_config(data)


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    level = args.log_level or get_settings().log_level
    logging.basicConfig(level=getattr(logging, level.upper(), logging.INFO),
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    logger = logging.getLogger("app.cli")

    try:
        config = config_from_args(args)
        total = None if config.budget_mode == "seconds" else config.spp
        with tqdm(total=total, unit="round", disable=None) as progress:
            def on_round(summary, _estimates):
                progress.update(1)
                if summary.mse is not None:
                    progress.set_postfix(mse=f"{summary.mse:.3e}")

            if config.compare:
                reports = compare(config, on_round=on_round)
            else:
                reports = [run(config, on_round=on_round)]
    except SolverError as e:
        logger.error(str(e))
        return 2
    except OSError as e:
        logger.error(f"IO failure: {str(e)}")
        return 1

    for report in reports:
        mse = f"{report.mse:.6e}" if report.mse is not None else "n/a"
        print(f"{report.strategy}: {len(report.history)} rounds, {report.walks} walks, mse {mse}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""
Command-line entry point for tfwave-lab.

Usage:
    python -m app.main --config configs/modeling_error.conf [--threads N] [--out DIR] [--seed S]
"""

import argparse
import logging
import os
import sys
from pathlib import Path
from typing import List, Optional

from app.core.config import settings
from app.core.logging import log_study_event, setup_logging
from app.models.run_config import RunConfig
from app.services.error_handler import StudyErrorHandler
from app.services.study_runner import run_study

logger = logging.getLogger(__name__)

EPILOG = """\
studies:
  modeling-error    E||u - u_n||^2 at t=T along a dyadic tau ladder (target slope 2)
  fem-error         E||u_n - u_n^h||^2 along a mesh ladder (target slope 4 gamma~)
  total-error       E||u - u_n^h||^2 at fixed mesh along a tau ladder (error floor)
  holder            E||u(T/2 + d) - u(T/2)||^2 against the lag d (target slope 2 alpha - 2)
  stability         decay constants of the solution kernels
  special-selftest  Mittag-Leffler and fractional calculus invariants

output files (in --out):
  <study>.csv          study,row,level,mse,stderr,n,fitted_rate,ci_low,ci_high
                       one 'level' row per ladder level and one 'summary' row;
                       floats as %.12e, byte-identical for a fixed config and seed
  <study>.timing.csv   study,level,wall_ms
  summary.json         verdict, fitted rate, CI, band, gamma~ candidates, seed
  stability.csv        study,lam_beta,nu,C_T,C_S,envelope_ok
  special-selftest.csv check,error,tolerance,passed

exit codes:
  0  PASS    1  error    2  FAIL (study ran, result outside its band)
"""


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tfwave-lab",
        description="Monte-Carlo verification studies for stochastic tempered fractional wave equations.",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=EPILOG,
    )
    parser.add_argument("--config", required=True, type=Path,
                        help="key=value configuration file ('#' starts a comment)")
    parser.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                        help="worker threads (default: all cores); never changes results")
    parser.add_argument("--out", type=Path, default=Path("./out"),
                        help="output directory (default: ./out)")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the master_seed of the configuration")
    parser.add_argument("--log-level", default=None, help=f"log level (default: {settings.LOG_LEVEL})")
    return parser


def run(config_path: Path, threads: int = 1, out_dir: Optional[Path] = None, seed: Optional[int] = None) -> int:
    """설정 파일 하나를 실행하고 종료 코드를 반환합니다."""
    handler = StudyErrorHandler()
    try:
        config = RunConfig.from_file(config_path)
        outcome = run_study(config, threads=max(1, threads), out_dir=out_dir, seed=seed)
        print(f"{outcome.study}: {outcome.verdict}")
        return outcome.exit_code
    except Exception as e:
        response = handler.handle_error(e, {"config": str(config_path)})
        log_study_event("error", str(config_path), {"error_id": response["error_id"], "message": str(e)})
        print(f"error: {response['user_message']}", file=sys.stderr)
        return response["exit_code"]


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(level=args.log_level)
    return run(args.config, threads=args.threads, out_dir=args.out, seed=args.seed)


if __name__ == "__main__":
    sys.exit(main())

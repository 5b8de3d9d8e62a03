from app.cli.main import build_parser, main
from app.cli.output import error_grid, read_pfm, write_convergence_csv, write_error_map, write_pfm
from app.cli.run import RunConfig, RunReport, compare, parse_run_config, run

__all__ = [
    "RunConfig",
    "RunReport",
    "build_parser",
    "compare",
    "error_grid",
    "main",
    "parse_run_config",
    "read_pfm",
    "run",
    "write_convergence_csv",
    "write_error_map",
    "write_pfm",
]

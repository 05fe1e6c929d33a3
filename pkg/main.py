import argparse
import json
import sys
from typing import List, Optional

from api import commands
from modules.exceptions import MeanDimError
from modules.logging_config import logger, set_console_level
from modules.schemas import ErrorResponse

VERSION = "1.0.0"


# ============================================
# PARSER
# ============================================
def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="meandim",
        description="Exact constructions and finite-stage estimators for mean dimensions of interval and cube maps.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log DEBUG to stderr")
    parser.add_argument("-q", "--quiet", action="store_true", help="log only warnings to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", help="Build a named construction from a JSON spec file")
    p.add_argument("spec_file")
    p.add_argument("--out")

    p = sub.add_parser("estimate", help="Finite-stage mdim_H or mdim_M of a map")
    p.add_argument("map_file")
    p.add_argument("--mdim", choices=["H", "M"], default="H")
    p.add_argument("--stages", help="stage grid '<k range>x<n range>', e.g. 1-20x0-2")
    p.add_argument("--eps", help="decreasing scales for mdim_M, e.g. 1/4,1/10,1/28")
    p.add_argument("--n-max", type=int, default=3)
    p.add_argument("--out", help="stage CSV; the summary goes next to it as .json")
    p.add_argument("--summary")

    p = sub.add_parser("verify", help="Run the invariant checks on a map or cube document")
    p.add_argument("map_file")
    p.add_argument("--out")

    p = sub.add_parser("predict", help="Closed-form limit of a schedule rule")
    p.add_argument("--rule", required=True,
                   help="power_law:s=1,r=1 | quadratic:s=1 | odd_legs:s=1 | cube:m=2,r=1 | cube_quadratic:m=2")
    p.add_argument("-k", type=int, help="also report the stage value of block k")
    p.add_argument("--out")

    p = sub.add_parser("splice", help="Splice a prescribed-dimension block at a fixed point")
    p.add_argument("--map", dest="map_file", required=True)
    p.add_argument("--fixed-point", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--eps", required=True)
    p.add_argument("--out")
    p.add_argument("--certificate")

    p = sub.add_parser("detect", help="Strong horseshoe certificate or refusal")
    p.add_argument("--map", dest="map_file", required=True)
    p.add_argument("--J", nargs=2, metavar=("LO", "HI"), default=["0", "1"])
    p.add_argument("--legs", help="'lo,hi;lo,hi;...' (default: k equal pieces of J)")
    p.add_argument("--eps", required=True)
    p.add_argument("-k", type=int, required=True)
    p.add_argument("--out")

    p = sub.add_parser("cube", help="Stage values of the nested cube map")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--rule", default="power:r=1", help="power:r=<r> | quadratic")
    p.add_argument("--B", required=True)
    p.add_argument("--K", type=int, required=True)
    p.add_argument("--stages")
    p.add_argument("--out")
    p.add_argument("--document", help="also write the cube map document here")
    return parser


def dispatch(args: argparse.Namespace) -> int:
    if args.command == "build":
        return commands.cmd_build(args.spec_file, args.out)
    if args.command == "estimate":
        return commands.cmd_estimate(args.map_file, args.mdim, args.stages, args.eps, args.n_max,
                                     args.out, args.summary)
    if args.command == "verify":
        return commands.cmd_verify(args.map_file, args.out)
    if args.command == "predict":
        return commands.cmd_predict(args.rule, args.k, args.out)
    if args.command == "splice":
        return commands.cmd_splice(args.map_file, args.fixed_point, args.target, args.eps,
                                   args.out, args.certificate)
    if args.command == "detect":
        return commands.cmd_detect(args.map_file, args.J, args.eps, args.k, args.legs, args.out)
    if args.command == "cube":
        return commands.cmd_cube(args.m, args.rule, args.B, args.K, args.stages, args.out, args.document)
    raise AssertionError(args.command)


# ============================================
# ENTRY POINT
# ============================================
def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.verbose:
        set_console_level("DEBUG")
    elif args.quiet:
        set_console_level("WARNING")
    logger.info("=" * 60)
    logger.info(f"meandim {VERSION}: {args.command}")
    logger.info("=" * 60)
    try:
        code = dispatch(args)
    except MeanDimError as e:
        logger.error(f"[CLI] {e.code}: {e.detail}")
        error = ErrorResponse(**e.to_dict())
        sys.stderr.write(json.dumps(error.model_dump()) + "\n")
        return e.exit_code
    logger.info(f"[CLI] {args.command} finished with exit code {code}")
    return code


if __name__ == "__main__":
    sys.exit(main())

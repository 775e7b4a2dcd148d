"""Command-line front end.

Exit codes: 0 success / verification passed, 1 verification failed,
2 input error.  Every subcommand derives its random stream from the global
``--seed`` and the subcommand name (``SeedSequence([seed, crc32(name)])``),
so adding a subcommand never perturbs another one's stream.
"""

import argparse
import json
import sys
import zlib
from pathlib import Path

import numpy as np

from .errors import DimensionMismatch, GeometryError, ParseError, VerificationFailure
from .functionals import (
    AFFINE,
    BUILTINS,
    blend_diagnostics,
    blend_functional,
    equivariance_report,
    make_blend_spec,
    random_affine,
    random_similarity,
)
from .io import dumps_body, load_body, polygon_loop, polyline_csv
from .suspension import asymmetric_profile, cross_section, interior_grid, suspend, verify_fixed_slice


def sub_seed(seed, name):
    """Per-subcommand seed derived from the global seed."""
    seq = np.random.SeedSequence([int(seed), zlib.crc32(name.encode())])
    return int(seq.generate_state(1, dtype=np.uint64)[0])


def _dumps(obj):
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _emit(text, out):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _body_paths(spec):
    paths = []
    for item in spec:
        p = Path(item)
        if p.is_dir():
            paths.extend(sorted(p.glob("*.json")))
        else:
            paths.append(p)
    if not paths:
        raise ParseError("no body files given")
    return paths


def _parse_point(text):
    try:
        return np.array([float(x) for x in text.split(",")])
    except ValueError:
        raise ParseError(f"cannot parse point '{text}'") from None


def _functional(args, seed):
    if args.functional == "blend":
        if not args.anchor or not args.target:
            raise ParseError("--functional blend needs --anchor and --target")
        spec = make_blend_spec(load_body(args.anchor), _parse_point(args.target), mode=args.mode, seed=seed)
        return blend_functional(spec)
    return BUILTINS[args.functional]()


def cmd_compute(args):
    body = load_body(args.body)
    p = _functional(args, sub_seed(args.seed, "compute"))
    _emit(_dumps({"functional": p.name, "point": p(body).tolist()}), args.out)
    if args.plot and body.dim == 2:
        Path(args.plot).write_text(polyline_csv([polygon_loop(body)]))
    return 0


def cmd_test_equivariance(args):
    seed = sub_seed(args.seed, "test-equivariance")
    p = _functional(args, seed)
    bodies = [load_body(path) for path in _body_paths(args.bodies)]
    dims = {b.dim for b in bodies}
    if len(dims) != 1:
        raise DimensionMismatch(f"bodies have mixed dimensions {sorted(dims)}")
    rng = np.random.default_rng(seed)
    n = dims.pop()
    if p.equivariance == AFFINE:
        maps = [random_affine(n, rng) for _ in range(args.maps)]
    else:
        maps = [random_similarity(n, rng) for _ in range(args.maps)]
    report = equivariance_report(p, bodies, maps, args.tol)
    _emit(report.to_csv(), args.out)
    sys.stderr.write(report.to_json() + "\n")
    return 0 if report.passed else 1


def cmd_suspend(args):
    susp = suspend(load_body(args.body))
    _emit(dumps_body(susp.body), args.out)
    if args.plot:
        if susp.dim == 2:
            loops = [polygon_loop(susp.body)]
        elif susp.dim == 3:
            loops = [polygon_loop(cross_section(susp.body, s)) for s in (-0.75, -0.5, -0.25, 0.0, 0.25, 0.5, 0.75)]
        else:
            loops = []
        Path(args.plot).write_text(polyline_csv(loops))
    return 0


def cmd_blend(args):
    seed = sub_seed(args.seed, "blend")
    anchor = load_body(args.anchor)
    overrides = {}
    if args.eps_in is not None:
        overrides["eps_in"] = args.eps_in
    if args.eps_out is not None:
        overrides["eps_out"] = args.eps_out
    spec = make_blend_spec(anchor, _parse_point(args.target), mode=args.mode, seed=seed, **overrides)
    p = blend_functional(spec)
    paths = _body_paths(args.bodies) if args.bodies else []
    targets = [("anchor", anchor)] + [(str(path), load_body(path)) for path in paths]
    results = []
    for name, body in targets:
        info = blend_diagnostics(spec, body)
        results.append({"body": name, "point": p(body).tolist(), "residual": info["residual"], "phi": info["phi"]})
    spec_dict = spec.to_dict()
    if args.spec_out:
        Path(args.spec_out).write_text(_dumps(spec_dict))
    spec_dict.pop("anchor")
    _emit(_dumps({"spec": spec_dict, "results": results}), args.out)
    return 0


def cmd_verify_suspension(args):
    susp = suspend(load_body(args.base))
    functionals = [BUILTINS[name]() for name in args.functionals.split(",") if name]
    grid = interior_grid(susp.base, args.grid)
    try:
        report = verify_fixed_slice(susp, functionals, grid)
        code = 0
    except VerificationFailure as exc:
        report = exc.report or {}
        report["error"] = {"code": exc.code, "clause": exc.clause, "message": str(exc)}
        code = 1
    _emit(_dumps(report), args.out)
    if args.plot and susp.base.dim == 2:
        Path(args.plot).write_text(polyline_csv([polygon_loop(susp.base)]))
    return code


def cmd_profile(args):
    body = asymmetric_profile(args.m, args.seed)
    _emit(dumps_body(body), args.out)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="simpoints", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", help="write the report here instead of stdout")
    sub = parser.add_subparsers(dest="command", required=True)

    def functional_flags(p):
        p.add_argument("--functional", choices=sorted(BUILTINS) + ["blend"], default="centroid")
        p.add_argument("--anchor", help="anchor body for --functional blend")
        p.add_argument("--target", help="anchor point 'x,y,...' for --functional blend")
        p.add_argument("--mode", choices=("hard", "soft"), default="hard")

    p = sub.add_parser("compute", parents=[common], help="evaluate a functional on one body")
    p.add_argument("--body", required=True)
    p.add_argument("--plot", help="polyline CSV of the body (2D only)")
    functional_flags(p)
    p.set_defaults(func=cmd_compute)

    p = sub.add_parser("test-equivariance", parents=[common], help="equivariance battery over random maps")
    p.add_argument("--bodies", nargs="+", required=True, help="body files or directories of *.json")
    p.add_argument("--maps", type=int, default=20)
    p.add_argument("--tol", type=float, default=1e-9)
    functional_flags(p)
    p.set_defaults(func=cmd_test_equivariance)

    p = sub.add_parser("suspend", parents=[common], help="suspension body over a base")
    p.add_argument("--body", required=True)
    p.add_argument("--plot", help="polyline CSV of slices")
    p.set_defaults(func=cmd_suspend)

    p = sub.add_parser("blend", parents=[common], help="anchored blend functional")
    p.add_argument("--anchor", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--bodies", nargs="*", help="extra bodies to evaluate")
    p.add_argument("--mode", choices=("hard", "soft"), default="hard")
    p.add_argument("--eps-in", type=float)
    p.add_argument("--eps-out", type=float)
    p.add_argument("--spec-out", help="write the BlendSpec JSON here")
    p.set_defaults(func=cmd_blend)

    p = sub.add_parser("verify-suspension", parents=[common], help="fixed-slice verification")
    p.add_argument("--base", required=True)
    p.add_argument("--grid", type=int, default=5)
    p.add_argument("--functionals", default="centroid,mvee")
    p.add_argument("--plot", help="polyline CSV of the base (2D only)")
    p.set_defaults(func=cmd_verify_suspension)

    p = sub.add_parser("profile", parents=[common], help="asymmetric convex polygon")
    p.add_argument("--m", type=int, default=64)
    p.set_defaults(func=cmd_profile)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    for name in ("maps", "tol", "grid"):
        if name in args and getattr(args, name) is not None and getattr(args, name) <= 0:
            return _fail(ParseError(f"--{name} must be positive"), 2)
    try:
        return args.func(args)
    except (GeometryError, ValueError) as exc:
        return _fail(exc, 2)


def _fail(exc, code):
    err = {"error": {"code": getattr(exc, "code", type(exc).__name__), "message": str(exc)}}
    sys.stderr.write(json.dumps(err, sort_keys=True) + "\n")
    return code


if __name__ == "__main__":
    sys.exit(main())

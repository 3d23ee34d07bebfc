"""Command-line front door.

Exit codes: 0 success, 2 validation failure (bad geometry/topology), 3
solver non-convergence, 64 usage errors.  Results are canonical JSON so
identical invocations are byte-identical with the HTTP service.
"""

from __future__ import annotations

import argparse
import json
import sys

from .errors import CrossFieldError, InfeasibleTopologyError
from .jobs import render_request_svg, run_request
from .serialization import canonical_json

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NO_CONVERGENCE = 3
EXIT_USAGE = 64


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def parse_preset(text: str) -> dict:
    """disk:R | annulus:R1,R2 | ellipse:A,B | polygon:square | polygon:x,y;..."""
    kind, _, rest = text.partition(":")
    if kind == "disk":
        return {"kind": "disk", "r": float(rest or 1.0)}
    if kind == "annulus":
        r1, r2 = (float(v) for v in rest.split(","))
        return {"kind": "annulus", "r1": r1, "r2": r2}
    if kind == "ellipse":
        a, b = (float(v) for v in rest.split(","))
        return {"kind": "ellipse", "a": a, "b": b}
    if kind == "polygon":
        if rest == "square":
            return {"kind": "polygon", "points": "square"}
        pts = [[float(v) for v in pair.split(",")] for pair in rest.split(";")]
        return {"kind": "polygon", "points": pts}
    raise ValueError(f"unknown preset {text!r}")


def parse_hole(text: str) -> dict:
    parts = text.split(",")
    if len(parts) != 4:
        raise ValueError("hole must be x,y,radius,degree")
    x, y, r, d = parts
    hole = {"center": [float(x), float(y)], "degree": int(d)}
    if r == "tri":
        hole["single_triangle"] = True
        hole["radius"] = 0.0
    else:
        hole["radius"] = float(r)
    return hole


def _add_mesh_args(p):
    p.add_argument("--preset", help="disk:R | annulus:R1,R2 | ellipse:A,B | "
                                    "polygon:square | polygon:x,y;x,y;...")
    p.add_argument("--mesh", help="path to an MSH 2.2 ASCII file")
    p.add_argument("--h", type=float, default=None,
                   help="target edge length for presets")
    p.add_argument("--config", help="JSON job config; flags override it")


def _add_out_args(p):
    p.add_argument("--out", help="write result JSON here (default stdout)")
    p.add_argument("--svg", help="also render an SVG to this path")


def build_parser() -> _Parser:
    ap = _Parser(prog="crossfield")
    sub = ap.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="constrained field solve")
    _add_mesh_args(solve)
    _add_out_args(solve)
    solve.add_argument("--hole", action="append", default=[],
                       help="x,y,radius,degree (radius 'tri' for one triangle)")
    solve.add_argument("--space", choices=["CR", "P1"], default=None)
    solve.add_argument("--max-iter", type=int, default=None)
    solve.add_argument("--tol", type=float, default=None)
    solve.add_argument("--gl-penalty", type=float, default=None,
                       help="norm penalty eps (conventionally 0.01)")
    solve.add_argument("--unit-norm-holes", default=None,
                       help="'all' or comma-separated hole indices")
    solve.add_argument("--override-topology", action="store_true")

    energy = sub.add_parser("energy", help="energy evaluators")
    esub = energy.add_subparsers(dest="energy_kind", required=True)
    eh = esub.add_parser("holes", help="drilled-domain flux potential energy")
    _add_mesh_args(eh)
    _add_out_args(eh)
    eh.add_argument("--hole", action="append", default=[])
    er = esub.add_parser("renorm", help="renormalized point-vortex energy")
    _add_mesh_args(er)
    _add_out_args(er)
    er.add_argument("--point", action="append", default=[],
                    help="x,y[,degree]")
    er.add_argument("--signed", action="store_true",
                    help="experimental signed-degree mode")

    corners = sub.add_parser("corners", help="boundary corner classification")
    _add_mesh_args(corners)
    _add_out_args(corners)

    check = sub.add_parser("check", help="index bookkeeping verdict")
    _add_mesh_args(check)
    _add_out_args(check)
    check.add_argument("--hole", action="append", default=[])

    hfield = sub.add_parser("hfield", help="harmonic conjugate scalar solve")
    _add_mesh_args(hfield)
    _add_out_args(hfield)
    hfield.add_argument("--source", action="append", default=[],
                        help="x,y,k with k in quarter units")

    serve = sub.add_parser("serve", help="run the HTTP API")
    serve.add_argument("--port", type=int, default=8787)
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--cache-dir", default=None)
    return ap


def _mesh_config(args) -> dict:
    if args.mesh:
        with open(args.mesh, "r", encoding="utf-8") as fh:
            return {"msh": fh.read()}
    if args.preset:
        preset = parse_preset(args.preset)
        if args.h is not None:
            preset["h"] = args.h
        return {"preset": preset}
    raise ValueError("one of --preset or --mesh is required")


def build_request(args) -> dict:
    base = {}
    if getattr(args, "config", None):
        with open(args.config, "r", encoding="utf-8") as fh:
            base = json.load(fh)
    if args.preset or args.mesh:
        base["mesh"] = _mesh_config(args)
    if "mesh" not in base:
        raise ValueError("one of --preset, --mesh, or a config mesh is required")

    cmd = args.command
    if cmd == "solve":
        base["op"] = "solve"
        if args.hole:
            base["holes"] = [parse_hole(h) for h in args.hole]
        options = base.setdefault("options", {})
        for key, val in (
            ("space", args.space),
            ("max_iter", args.max_iter),
            ("tol", args.tol),
            ("gl_penalty", args.gl_penalty),
        ):
            if val is not None:
                options[key] = val
        if args.unit_norm_holes is not None:
            options["unit_norm_holes"] = (
                "all" if args.unit_norm_holes == "all"
                else [int(v) for v in args.unit_norm_holes.split(",")]
            )
        if args.override_topology:
            options["override_topology"] = True
    elif cmd == "energy":
        if args.energy_kind == "holes":
            base["op"] = "energy_holes"
            if args.hole:
                base["holes"] = [parse_hole(h) for h in args.hole]
        else:
            base["op"] = "energy_renorm"
            pts, degs = [], []
            for p in args.point:
                parts = p.split(",")
                pts.append([float(parts[0]), float(parts[1])])
                degs.append(int(parts[2]) if len(parts) > 2 else 1)
            if pts:
                base["points"] = pts
                base["degrees"] = degs
            if args.signed:
                base["signed"] = True
    elif cmd == "corners":
        base["op"] = "corners"
    elif cmd == "check":
        base["op"] = "check"
        if args.hole:
            base["holes"] = [parse_hole(h) for h in args.hole]
    elif cmd == "hfield":
        base["op"] = "hfield"
        if args.source:
            base["sources"] = [
                [float(v) for v in s.split(",")[:2]] + [int(s.split(",")[2])]
                for s in args.source
            ]
    return base


def _emit(args, payload: str):
    if getattr(args, "out", None):
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(payload)
    else:
        print(payload)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)

    if args.command == "serve":
        from .service import serve

        serve(host=args.host, port=args.port, cache_dir=args.cache_dir)
        return EXIT_OK

    try:
        request = build_request(args)
        result = run_request(request)
    except InfeasibleTopologyError as exc:
        report = {"error": str(exc)}
        if exc.ledger is not None:
            report["ledger"] = exc.ledger.to_json()
        print(canonical_json(report), file=sys.stderr)
        return EXIT_VALIDATION
    except (CrossFieldError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION

    payload = canonical_json(result)
    _emit(args, payload)
    if getattr(args, "svg", None):
        try:
            svg_text = render_request_svg(request, result)
        except CrossFieldError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_VALIDATION
        with open(args.svg, "w", encoding="utf-8") as fh:
            fh.write(svg_text)

    if request.get("op") == "check" and result.get("verdict") != "pass":
        return EXIT_VALIDATION
    if request.get("op") == "solve" and not result["report"]["converged"]:
        return EXIT_NO_CONVERGENCE
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())

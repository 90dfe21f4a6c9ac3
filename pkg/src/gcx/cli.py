"""gcx: command-line front end for the diagram complex and gluing planner.

Exact numbers are serialized as decimal strings; there is no floating point
anywhere.  Exit codes: 0 success, 1 domain error (a machine-readable error
object is printed), 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

from . import __version__
from .cache import cache_dir, cached
from .diagrams import DiagramError, GcxError, from_json_dict
from .graph_complex import (
    SparseMatrix,
    coboundary,
    coboundary_matrix,
    element_from_json,
    generate_basis,
    grading,
)
from .homology import (
    MinimalCocycle,
    cocycle_space,
    cohomology_group,
    consistent_orientation,
    extend_to_cocycle,
    minimal_decomposition,
)
from .strata import (
    anomalous_faces,
    codim_certificate,
    corner_poset,
    dimensions,
    enumerate_faces,
    faces_to_json,
    poincare_polynomial,
    poincare_polynomial_graph,
)
from .gluing import (
    corner_collapse_analysis,
    plan_chord_mod2,
    plan_from_json,
    plan_gluing,
    plan_mod2,
    spherical_signatures,
    verify_fundamental_cycle,
)


def _emit(args, payload: dict, text_fn=None) -> None:
    if args.format == "json" or text_fn is None:
        out = json.dumps(payload, indent=2, sort_keys=True)
    else:
        out = text_fn(payload)
    if getattr(args, "out", None):
        Path(args.out).write_text(out + "\n")
    else:
        print(out)


def _load_json(path: str) -> dict:
    return json.loads(Path(path).read_text())


def _load_element(path: str):
    return element_from_json(_load_json(path))


def _load_diagram(path: str):
    return from_json_dict(_load_json(path))


def _basis_payload(args) -> dict:
    basis = generate_basis(args.m, args.n, args.k, args.convention, args.ring,
                           args.max_vertices)
    payload = {
        "manifest": {
            "m": args.m, "n": args.n, "k": args.k,
            "convention": args.convention, "ring": args.ring,
            "count": len(basis),
        },
        "diagrams": [d.to_json_dict() for d in basis],
    }
    import hashlib

    payload["manifest"]["content_hash"] = hashlib.sha256(
        json.dumps(payload["diagrams"], sort_keys=True).encode()).hexdigest()
    return payload


def _grading_params(p: argparse.ArgumentParser, ring_default="Z"):
    p.add_argument("-m", type=int, required=True)
    p.add_argument("-n", type=int, required=True)
    p.add_argument("-k", type=int, required=True)
    p.add_argument("--convention", choices=("odd", "even"), default="odd")
    p.add_argument("--ring", choices=("Z", "Q", "Z2"), default=ring_default)
    p.add_argument("--max-vertices", type=int, default=12)


def _common(p: argparse.ArgumentParser):
    p.add_argument("--format", choices=("json", "text"), default="json")
    p.add_argument("--out", help="write the result to a file instead of stdout")
    p.add_argument("--cache", help="cache directory (or $GCX_CACHE, default .gcx-cache)")
    p.add_argument("--jobs", type=int, default=1,
                   help="internal parallelism for basis/matrix assembly")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gcx", description=__doc__)
    ap.add_argument("--version", action="version", version=f"gcx {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("basis", help="enumerate the canonical diagram basis")
    _grading_params(p)
    _common(p)

    p = sub.add_parser("grading", help="order and defect of a diagram")
    p.add_argument("--in", dest="infile", required=True)
    _common(p)

    p = sub.add_parser("d", help="coboundary of an element")
    p.add_argument("--in", dest="infile", required=True)
    _common(p)

    p = sub.add_parser("matrix", help="coboundary matrix in the canonical bases")
    _grading_params(p)
    _common(p)

    p = sub.add_parser("cohomology", help="H^k over Z with torsion")
    _grading_params(p)
    _common(p)

    p = sub.add_parser("cocycles", help="spanning set of the cocycle space")
    _grading_params(p)
    _common(p)

    p = sub.add_parser("minimal", help="support-minimal decomposition of cocycles")
    p.add_argument("--in", dest="infile", required=True, nargs="+")
    p.add_argument("--max-support", type=int, default=16)
    _common(p)

    p = sub.add_parser("orient", help="consistently oriented expression")
    p.add_argument("--in", dest="infile", required=True)
    _common(p)

    p = sub.add_parser("extend", help="extend partial coefficients to a cocycle")
    p.add_argument("--partial", required=True,
                   help="JSON file: {terms: [{diagram, coeff}]}")
    _grading_params(p)
    _common(p)

    p = sub.add_parser("faces", help="codimension-1 faces of a diagram")
    p.add_argument("--in", dest="infile", required=True)
    _common(p)

    p = sub.add_parser("certify", help="codimension certificates of the degenerate faces")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("-d", type=int, required=True, help="ambient dimension")
    _common(p)

    p = sub.add_parser("corners", help="compatible corner families")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--max-size", type=int, default=3)
    p.add_argument("--include-infinity", action="store_true")
    _common(p)

    p = sub.add_parser("poincare", help="Poincare polynomial of a configuration space")
    p.add_argument("--in", dest="infile", help="diagram JSON")
    p.add_argument("--complete", type=int, help="use the complete graph K_n instead")
    p.add_argument("-d", type=int, required=True)
    p.add_argument("--mode", choices=("ambient", "fiber"), default="ambient")
    p.add_argument("--order", help="comma-separated vertex order")
    _common(p)

    p = sub.add_parser("dims", help="fiber dimension, class degree, sphere dimension")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("-d", type=int, required=True)
    _common(p)

    p = sub.add_parser("glue", help="integer gluing plan for a cocycle")
    p.add_argument("--cocycle", required=True)
    p.add_argument("-d", type=int, required=True)
    _common(p)

    p = sub.add_parser("glue-mod2", help="mod-2 gluing plan")
    p.add_argument("--cocycle", required=True)
    p.add_argument("-d", type=int, required=True)
    _common(p)

    p = sub.add_parser("glue-chord", help="chord-diagram fold plan in dimension 3")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("-d", type=int, default=3)
    _common(p)

    p = sub.add_parser("verify", help="fundamental-cycle report of a plan")
    p.add_argument("--plan", required=True)
    _common(p)

    p = sub.add_parser("signatures", help="spherical signatures of a plan")
    p.add_argument("--plan", required=True)
    _common(p)

    p = sub.add_parser("collapse-analysis", help="corner collapses across a pairing")
    p.add_argument("--plan", required=True)
    p.add_argument("--pairing", type=int, required=True)
    p.add_argument("--max-size", type=int, default=4)
    _common(p)

    return ap


def _run(args) -> dict:
    cmd = args.command
    if cmd == "basis":
        return cached(cache_dir(args.cache), "basis", {
            "m": args.m, "n": args.n, "k": args.k,
            "convention": args.convention, "ring": args.ring,
            "max_vertices": args.max_vertices,
        }, lambda: _basis_payload(args))
    if cmd == "grading":
        d = _load_diagram(args.infile)
        g = grading(d)
        return {"order": g.order, "defect": g.defect}
    if cmd == "d":
        x = _load_element(args.infile)
        return coboundary(x).to_json_dict()
    if cmd == "matrix":
        params = {"m": args.m, "n": args.n, "k": args.k,
                  "convention": args.convention, "ring": args.ring,
                  "max_vertices": args.max_vertices}
        return cached(cache_dir(args.cache), "matrix", params,
                      lambda: coboundary_matrix(
                          args.m, args.n, args.k, args.convention, args.ring,
                          args.max_vertices, jobs=args.jobs).to_json_dict())
    if cmd == "cohomology":
        params = {"m": args.m, "n": args.n, "k": args.k,
                  "convention": args.convention,
                  "max_vertices": args.max_vertices}

        def compute():
            g = cohomology_group(args.m, args.n, args.k, args.convention,
                                 args.max_vertices)
            return {"free_rank": g.free_rank, "torsion": list(g.torsion),
                    "pretty": str(g)}

        return cached(cache_dir(args.cache), "cohomology", params, compute)
    if cmd == "cocycles":
        params = {"m": args.m, "n": args.n, "k": args.k,
                  "convention": args.convention, "ring": args.ring,
                  "max_vertices": args.max_vertices}
        return cached(cache_dir(args.cache), "cocycles", params, lambda: {
            "generators": [el.to_json_dict() for el in cocycle_space(
                args.m, args.n, args.k, args.convention, args.ring,
                args.max_vertices)],
        })
    if cmd == "minimal":
        space = [_load_element(f) for f in args.infile]
        out = minimal_decomposition(space, args.max_support)
        return {"minimal": [
            {"element": mc.element.to_json_dict(),
             "support_size": len(mc.support)} for mc in out]}
    if cmd == "orient":
        el = _load_element(args.infile)
        return consistent_orientation(el).to_json_dict()
    if cmd == "extend":
        data = _load_json(args.partial)
        ring = data.get("ring", args.ring)
        partial = [
            (from_json_dict(t["diagram"]),
             Fraction(t["coeff"]) if ring == "Q" else int(t["coeff"]))
            for t in data["terms"]
        ]
        el = extend_to_cocycle(partial, args.m, args.n, args.k,
                               args.convention, ring, args.max_vertices)
        if el is None:
            return {"extends": False}
        return {"extends": True, "cocycle": el.to_json_dict()}
    if cmd == "faces":
        d = _load_diagram(args.infile)
        return faces_to_json(enumerate_faces(d))
    if cmd == "certify":
        d = _load_diagram(args.infile)
        out = []
        for face in enumerate_faces(d):
            if face.kind == "principal":
                continue
            cert = codim_certificate(face, args.d, d)
            out.append({"face": face.to_json(), "kind": face.kind,
                        "certificate": cert.to_json()})
        return {"certificates": out,
                "anomalous": [sorted(f.vertices) for f in anomalous_faces(d)]}
    if cmd == "corners":
        d = _load_diagram(args.infile)
        fams = corner_poset(d, args.max_size, args.include_infinity)
        return {"families": [
            [{"vertices": sorted(s), "at_infinity": tag == "infinity"}
             for s, tag in fam] for fam in fams]}
    if cmd == "poincare":
        order = [int(x) for x in args.order.split(",")] if args.order else None
        if args.complete:
            n = args.complete
            edges = [(i, j) for i in range(1, n + 1) for j in range(i + 1, n + 1)]
            poly = poincare_polynomial_graph(n, edges, args.d, order)
        else:
            d = _load_diagram(args.infile)
            poly = poincare_polynomial(d, args.d, args.mode, order)
        return {"polynomial": {str(k): v for k, v in sorted(poly.items())}}
    if cmd == "dims":
        data = _load_json(args.infile)
        x = element_from_json(data) if "terms" in data else from_json_dict(data)
        return dimensions(x, args.d)
    if cmd == "glue":
        el = _load_element(args.cocycle)
        return plan_gluing(el, args.d).to_json_dict()
    if cmd == "glue-mod2":
        el = _load_element(args.cocycle)
        return plan_mod2(el, args.d).to_json_dict()
    if cmd == "glue-chord":
        d = _load_diagram(args.infile)
        return plan_chord_mod2(d, args.d).to_json_dict()
    if cmd == "verify":
        plan = plan_from_json(_load_json(args.plan))
        return verify_fundamental_cycle(plan).to_json()
    if cmd == "signatures":
        plan = plan_from_json(_load_json(args.plan))
        return {"signatures": spherical_signatures(plan)}
    if cmd == "collapse-analysis":
        plan = plan_from_json(_load_json(args.plan))
        return {"ledger": corner_collapse_analysis(plan, args.pairing,
                                                   args.max_size)}
    raise GcxError(f"unknown command {cmd}")


def _text_summary(payload: dict) -> str:
    lines = []

    def walk(obj, indent=0):
        pad = "  " * indent
        if isinstance(obj, dict):
            for k, v in obj.items():
                if isinstance(v, (dict, list)):
                    lines.append(f"{pad}{k}:")
                    walk(v, indent + 1)
                else:
                    lines.append(f"{pad}{k}: {v}")
        elif isinstance(obj, list):
            for v in obj:
                if isinstance(v, (dict, list)):
                    walk(v, indent)
                    lines.append("")
                else:
                    lines.append(f"{pad}- {v}")
        else:
            lines.append(f"{pad}{obj}")

    walk(payload)
    return "\n".join(x for x in lines if x is not None)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        payload = _run(args)
    except (GcxError, DiagramError) as exc:
        error = {"error": {"type": type(exc).__name__, "message": str(exc)}}
        if isinstance(exc, DiagramError):
            error["error"]["problems"] = exc.problems
        print(json.dumps(error, sort_keys=True), file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(json.dumps({"error": {"type": "FileNotFoundError",
                                    "message": str(exc)}}), file=sys.stderr)
        return 1
    _emit(args, payload, _text_summary)
    return 0


if __name__ == "__main__":
    sys.exit(main())

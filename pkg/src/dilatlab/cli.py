"""Command-line front end.

Exit codes: 0 all verdicts pass, 1 a verdict failed, 2 unknown id or bad
arguments, 3 I/O failure, 4 unsupported operation for the given instance.
Reports with a fixed seed are byte-identical across runs; the default seed
comes from DILATLAB_SEED.
"""

from __future__ import annotations

import argparse
import json
import os
import re
import sys
from pathlib import Path

from . import analysis, ccdist, core
from .errors import (
    DilatlabError,
    NotConverged,
    UnknownName,
    UnsupportedStep,
    UnsupportedVariant,
)
from .registry import (
    demo_diff_map,
    known_groups,
    known_structures,
    resolve_group,
    resolve_structure,
)
from .scales import geometric_grid

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_BAD_ID = 2
EXIT_IO = 3
EXIT_UNSUPPORTED = 4

_SWEEPS = {
    "a3": analysis.axiom3_sweep,
    "a4": analysis.axiom4_sweep,
    "cone": analysis.cone_sweep,
    "tangent-metric": analysis.tangent_metric_sweep,
    "inflin": analysis.inflin_sweep,
    "embed": analysis.embedding_sweep,
}


def _default_seed() -> int:
    return int(os.environ.get("DILATLAB_SEED", "0"))


def _parse_point(raw: str):
    return tuple(float(tok) for tok in raw.split(","))


def _parse_grid(raw: str):
    try:
        start, ratio, count = raw.split(":")
        return geometric_grid(float(start), float(ratio), int(count))
    except ValueError as exc:
        raise UnknownName(f"bad grid {raw!r}; expected start:ratio:count") from exc


def _stable_json(payload) -> str:
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))


def _emit(args, payload, text_lines=()):
    if args.json or not text_lines:
        print(_stable_json(payload))
    else:
        for line in text_lines:
            print(line)
        if not args.quiet:
            print(_stable_json(payload))


def _add_common(parser):
    parser.add_argument("--seed", type=int, default=_default_seed(),
                        help="sampling seed (default: DILATLAB_SEED or 0)")
    parser.add_argument("--json", action="store_true",
                        help="machine output only")
    parser.add_argument("--quiet", action="store_true",
                        help="suppress secondary output")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dilatlab",
        description="Dilatation structures: verification suites, scale sweeps, "
                    "and horizontal-distance bounds.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("list", help="show registered structure and group ids")
    _add_common(p)

    p = sub.add_parser("verify", help="run the exact-identity and axiom suites")
    p.add_argument("structure")
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--radius", type=float, default=0.4)
    p.add_argument("--grid", type=str, default="0.5:0.5:16")
    _add_common(p)

    p = sub.add_parser("sweep", help="run one defect sweep and emit reports")
    p.add_argument("structure")
    p.add_argument("--defect", required=True,
                   choices=sorted(_SWEEPS) + ["diff"])
    p.add_argument("--grid", type=str, default=None)
    p.add_argument("--samples", type=int, default=48)
    p.add_argument("--radius", type=float, default=0.4)
    p.add_argument("--center", type=str, default=None)
    p.add_argument("--out", type=str, default=None, help="CSV output path")
    p.add_argument("--plot", type=str, default=None,
                   help="figure output path (default: alongside --out)")
    p.add_argument("--no-plot", action="store_true",
                   help="skip figure rendering")
    _add_common(p)

    p = sub.add_parser("tangent", help="estimate tangent operations at a point")
    p.add_argument("structure")
    p.add_argument("--x", required=True)
    p.add_argument("--u", required=True)
    p.add_argument("--v", required=True)
    p.add_argument("--grid", type=str, default="0.5:0.5:16")
    _add_common(p)

    p = sub.add_parser("ccdist", help="horizontal distance sandwich on a group")
    p.add_argument("group")
    p.add_argument("--from", dest="origin", default=None,
                   help="start point (default: identity)")
    p.add_argument("--to", dest="target", required=True)
    p.add_argument("--K", type=int, default=64)
    p.add_argument("--iterations", type=int, default=40)
    _add_common(p)

    p = sub.add_parser("bch", help="group product in exponential coordinates")
    p.add_argument("group")
    p.add_argument("--g", required=True)
    p.add_argument("--h", required=True)
    _add_common(p)

    p = sub.add_parser("decompose", help="generator-word decomposition")
    p.add_argument("group")
    p.add_argument("--x", required=True)
    _add_common(p)

    return parser


# ---------------------------------------------------------------------------
# Command bodies
# ---------------------------------------------------------------------------


def _cmd_list(args) -> int:
    payload = {"structures": known_structures(), "groups": known_groups()}
    lines = ["structures:"] + [f"  {s}" for s in known_structures()]
    lines += ["groups:"] + [f"  {g}" for g in known_groups()]
    _emit(args, payload, lines)
    return EXIT_PASS


def _cmd_verify(args) -> int:
    structure = resolve_structure(args.structure)
    grid = _parse_grid(args.grid)
    axioms = analysis.axiom_suite(structure, seed=args.seed, count=args.samples,
                                  radius=args.radius, structure_id=args.structure)
    identities = analysis.identity_suite(structure, seed=args.seed,
                                         count=args.samples, radius=args.radius,
                                         structure_id=args.structure)
    cfg = analysis.SweepConfig(structure=args.structure, seed=args.seed,
                               samples=max(16, args.samples // 8),
                               radius=args.radius, grid=grid)
    sweeps = {
        "a3": analysis.axiom3_sweep(structure, cfg),
        "a4": analysis.axiom4_sweep(structure, cfg),
        "cone": analysis.cone_sweep(structure, cfg),
    }
    verdict = (axioms.passed and identities.passed
               and all(r.verdict for r in sweeps.values()))
    payload = {
        "structure": args.structure,
        "seed": args.seed,
        "axioms": axioms.to_dict(),
        "identities": identities.to_dict(),
        "sweeps": {k: r.to_dict() for k, r in sweeps.items()},
        "verdict": bool(verdict),
    }
    lines = [f"{'PASS' if verdict else 'FAIL'} verify {args.structure}"]
    _emit(args, payload, lines if not args.json else ())
    return EXIT_PASS if verdict else EXIT_FAIL


def _run_named_sweep(structure, args):
    grid = _parse_grid(args.grid) if args.grid else (
        analysis.INFLIN_GRID if args.defect == "inflin" else analysis.DEFAULT_GRID)
    center = _parse_point(args.center) if args.center else None
    cfg = analysis.SweepConfig(
        structure=args.structure, defect=args.defect, center=center,
        radius=args.radius, samples=args.samples, seed=args.seed, grid=grid,
    )
    if args.defect == "diff":
        f, q = demo_diff_map(args.structure)
        x = center if center is not None else (0.0,) * structure.dimension
        return analysis.diff_sweep(f, q, structure, structure, x, cfg)
    return _SWEEPS[args.defect](structure, cfg)


def _cmd_sweep(args) -> int:
    structure = resolve_structure(args.structure)
    report = _run_named_sweep(structure, args)
    if args.out:
        out = Path(args.out)
        out.write_text("\n".join(report.csv_rows()) + "\n")
        if not args.no_plot:
            from .plots import render_sweep_figure
            fig_path = Path(args.plot) if args.plot else out.with_suffix(".png")
            render_sweep_figure(report, fig_path)
    elif args.plot and not args.no_plot:
        from .plots import render_sweep_figure
        render_sweep_figure(report, Path(args.plot))
    order = "noise-floor" if report.order is None else f"{report.order:.3f}"
    lines = [f"{'PASS' if report.verdict else 'FAIL'} sweep {args.defect} "
             f"on {args.structure}: fitted order {order}"]
    payload = report.to_dict()
    _emit(args, payload, lines if not args.json else ())
    return EXIT_PASS if report.verdict else EXIT_FAIL


def _estimate_dict(est) -> dict:
    value = est.value
    try:
        value = [float(c) for c in value]
    except TypeError:
        value = float(value)
    return {
        "value": value,
        "order": est.order,
        "residual": est.residual,
        "degenerate": bool(est.degenerate),
        "flags": list(est.flags),
    }


def _cmd_tangent(args) -> int:
    structure = resolve_structure(args.structure)
    grid = _parse_grid(args.grid)
    x, u, v = (_parse_point(args.x), _parse_point(args.u), _parse_point(args.v))
    payload = {
        "structure": args.structure,
        "dist": _estimate_dict(core.tangent_dist(structure, x, u, v, grid)),
        "sum": _estimate_dict(core.tangent_sum(structure, x, u, v, grid)),
        "diff": _estimate_dict(core.tangent_diff(structure, x, u, v, grid)),
        "inv": _estimate_dict(core.tangent_inv(structure, x, u, grid)),
    }
    _emit(args, payload)
    return EXIT_PASS


def _cmd_ccdist(args) -> int:
    group = resolve_group(args.group)
    origin = _parse_point(args.origin) if args.origin else group.identity()
    target = _parse_point(args.target)
    result = ccdist.cc_upper(group, origin, target, K=args.K,
                             iterations=args.iterations)
    payload = {
        "group": args.group,
        "from": [float(c) for c in origin],
        "to": [float(c) for c in target],
        "lower": result["lower"],
        "upper": result["upper"],
        "K": result["K"],
        "residual": result["residual"],
        "word": result["word"].to_list() if result["word"] is not None else None,
    }
    lines = [f"ccdist {args.group}: {result['lower']:.6g} <= d <= "
             f"{result['upper']:.6g} (residual {result['residual']:.2e})"]
    _emit(args, payload, lines if not args.json else ())
    return EXIT_PASS


def _cmd_bch(args) -> int:
    group = resolve_group(args.group)
    product = group.bch(group.point(_parse_point(args.g)),
                        group.point(_parse_point(args.h)))
    payload = {"group": args.group, "product": [float(c) for c in product]}
    _emit(args, payload)
    return EXIT_PASS


def _cmd_decompose(args) -> int:
    group = resolve_group(args.group)
    x = group.point(_parse_point(args.x))
    word = ccdist.word_decomposition(group, x)
    reached = ccdist.evaluate_word(group, word)
    residual = max(abs(float(a) - float(b)) for a, b in zip(reached, x)) \
        if group.dimension else 0.0
    payload = {
        "group": args.group,
        "x": [float(c) for c in x],
        "word": word.to_list(),
        "endpoint": [float(c) for c in reached],
        "residual": residual,
    }
    _emit(args, payload)
    return EXIT_PASS


_COMMANDS = {
    "list": _cmd_list,
    "verify": _cmd_verify,
    "sweep": _cmd_sweep,
    "tangent": _cmd_tangent,
    "ccdist": _cmd_ccdist,
    "bch": _cmd_bch,
    "decompose": _cmd_decompose,
}


_POINT_OPTIONS = {"--x", "--u", "--v", "--g", "--h", "--from", "--to",
                  "--center"}
_POINT_VALUE = re.compile(r"-\d+(\.\d*)?([eE][+-]?\d+)?(,[-+]?\d+(\.\d*)?([eE][+-]?\d+)?)*$")


def _merge_negative_points(argv):
    """Join point options with values starting in a minus sign.

    argparse would otherwise read "-0.25,0.15" as an option; merging to
    "--v=-0.25,0.15" keeps negative coordinates usable.
    """
    out = []
    skip = False
    for tok, nxt in zip(argv, list(argv[1:]) + [None]):
        if skip:
            skip = False
            continue
        if tok in _POINT_OPTIONS and nxt is not None and _POINT_VALUE.match(nxt):
            out.append(f"{tok}={nxt}")
            skip = True
        else:
            out.append(tok)
    return out


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(_merge_negative_points(
        sys.argv[1:] if argv is None else list(argv)))
    try:
        return _COMMANDS[args.command](args)
    except (UnknownName,) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_ID
    except (UnsupportedStep, UnsupportedVariant, NotConverged) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNSUPPORTED
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except DilatlabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())

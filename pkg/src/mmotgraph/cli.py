"""Command-line front end.

Exit codes: 0 MongeUnique or success, 1 input error, 2 Negative, 3 Unknown,
4 resource cap exceeded, 5 violations found.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .classifier import MONGE_UNIQUE, NEGATIVE, UNKNOWN, ClassificationOutcome, RegularityProfile, classify
from .graph import GraphError, ResourceCapError
from .io import BundleError, read_bundle, read_graph, parse_hint_text, write_solution
from .mmot import FLOAT, MODES, RATIONAL, ProblemError, solve_kp
from .simplex import LPError

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NEGATIVE = 2
EXIT_UNKNOWN = 3
EXIT_CAP = 4
EXIT_VIOLATION = 5

VERDICT_EXIT = {MONGE_UNIQUE: EXIT_OK, NEGATIVE: EXIT_NEGATIVE, UNKNOWN: EXIT_UNKNOWN}


def _indices(text: str) -> frozenset:
    if not text:
        return frozenset()
    try:
        return frozenset(int(t) for t in text.replace(",", " ").split())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated vertex indices, got {text!r}") from None


def _profile(m: int, args) -> RegularityProfile:
    ac, dirac = set(args.ac), set(args.dirac)
    given = getattr(args, "profile", None)
    if given:
        p = Path(given)
        raw = json.loads(p.read_text() if p.exists() else given)
        ac |= set(raw.get("ac", []))
        dirac |= set(raw.get("dirac", []))
    return RegularityProfile(m, frozenset(ac), frozenset(dirac))


def _emit(args, payload: dict, text: str) -> None:
    if args.json:
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        print(text)


def _outcome_text(out: ClassificationOutcome) -> str:
    lines = [f"verdict: {out.verdict}", f"rule: {out.rule}"]
    if out.required_ac:
        lines.append(f"required_ac: {sorted(out.required_ac)}")
    others = [r.rule for r in out.matched_rules[1:]]
    if others:
        lines.append(f"also matched: {', '.join(others)}")
    for d in out.diagnostics:
        lines.append(f"hint: {json.dumps(d, sort_keys=True)}")
    return "\n".join(lines)


def cmd_classify(args) -> int:
    g = read_graph(args.graph)
    hint = parse_hint_text(Path(args.hint).read_text()) if args.hint else None
    out = classify(g, _profile(g.m, args), hint=hint)
    _emit(args, out.to_dict(), _outcome_text(out))
    return VERDICT_EXIT[out.verdict]


def cmd_solve(args) -> int:
    from .duality import dual_violation
    from .verification import check_monge, probe_uniqueness

    bundle = read_bundle(args.bundle, args.mode)
    cm = bundle.cm
    res = solve_kp(cm, args.mode)
    write_solution(bundle.path, res.coupling, res.duals, res.value)
    monge = check_monge(res.coupling)
    uq = probe_uniqueness(cm, res, k=args.probes, seed=args.seed)
    viol = dual_violation(res.duals, cm)
    gap = res.duals.objective(cm) - res.value
    payload = {
        "mode": args.mode,
        "value": str(res.value),
        "monge": monge.to_dict(),
        "uniqueness": uq.to_dict(),
        "dual_violation": str(max(viol, 0)),
        "duality_gap": str(gap),
        "pivots": res.pivots,
        "support": [[list(t), str(v)] for t, v in sorted(res.coupling.entries.items())],
    }
    text = "\n".join([
        f"value: {res.value}",
        f"monge: {str(monge.is_monge).lower()}",
        f"uniqueness: {'unique (up to probes)' if uq.unique else 'non-unique'} after {uq.probes_used} probes",
        f"duality gap: {gap}",
        f"wrote coupling.txt, value.txt and duals_<i>.txt to {bundle.path}",
    ])
    _emit(args, payload, text)
    return EXIT_OK


def cmd_experiment(args) -> int:
    from .verification import run_experiment

    g = read_graph(args.graph)
    profile = _profile(g.m, args)
    bundles = args.bundles
    if bundles is None and args.out:
        bundles = str(Path(args.out).with_suffix("")) + "_violations"
    report = run_experiment(g, profile, trials=args.trials, n=args.n, d=args.d, seed=args.seed,
                            mode=args.mode, density=args.density, probes=args.probes, bundle_dir=bundles)
    if args.out:
        Path(args.out).write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    text = "\n".join([
        f"verdict: {report['verdict']} ({report['rule']})",
        f"trials: {report['trials']}",
        f"monge_rate: {report['monge_rate']:.3f}",
        f"unique_rate: {report['unique_rate']:.3f}",
        f"twist_rate: {report['twist_rate']:.3f}",
        f"mean_solve_ms: {report['mean_solve_ms']:.1f}",
        f"violations: {len(report['violations'])}",
    ])
    _emit(args, report, text)
    return EXIT_VIOLATION if report["violations"] else EXIT_OK


def cmd_gallery(args) -> int:
    from .gallery import run_gallery

    rows = run_gallery()
    payload = {"rows": [r.to_dict() for r in rows], "mismatches": sum(not r.match for r in rows)}
    head = f"{'fixture':<20} {'verdict':<12} {'rule':<18} {'required_ac':<22} match"
    lines = [head, "-" * len(head)]
    for r in rows:
        req = ",".join(map(str, sorted(r.required_ac))) or "-"
        lines.append(f"{r.fixture.name:<20} {r.verdict:<12} {str(r.rule):<18} {req:<22} {'ok' if r.match else 'MISMATCH'}")
    lines.append(f"{len(rows)} fixtures, {payload['mismatches']} mismatches")
    _emit(args, payload, "\n".join(lines))
    return EXIT_VIOLATION if payload["mismatches"] else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mmotgraph",
                                     description="Classify interaction graphs of bilinear multi-marginal transport "
                                                 "surpluses and check the verdicts numerically.")
    sub = parser.add_subparsers(dest="command", required=True)

    def profile_flags(p):
        p.add_argument("--ac", type=_indices, default=frozenset(),
                       help="absolutely continuous marginals, e.g. 1,4")
        p.add_argument("--dirac", type=_indices, default=frozenset(), help="Dirac marginals")

    p = sub.add_parser("classify", help="classify a graph under a regularity profile")
    p.add_argument("graph", help="graph file (m=<int> then 'i j' lines, or JSON {m, edges})")
    profile_flags(p)
    p.add_argument("--hint", help="gluing hint file: one part per line as vertex indices")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("solve", help="solve the Kantorovich problem of a bundle")
    p.add_argument("bundle", help="bundle directory with graph.txt and marginal_<i>.txt")
    p.add_argument("--mode", choices=MODES, default=RATIONAL)
    p.add_argument("--probes", type=int, default=8, help="uniqueness probes")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("experiment", help="seeded Monge/uniqueness rate experiment")
    p.add_argument("graph")
    profile_flags(p)
    p.add_argument("--profile", help='JSON object {"ac": [...], "dirac": [...]} or a file holding one')
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--n", type=int, default=4, help="atoms per non-Dirac marginal")
    p.add_argument("--d", type=int, default=2, help="dimension")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mode", choices=MODES, default=FLOAT)
    p.add_argument("--density", choices=("uniform", "gaussian"), default="uniform")
    p.add_argument("--probes", type=int, default=8)
    p.add_argument("--out", help="write the JSON report here")
    p.add_argument("--bundles", help="directory for violating instances (default: <out>_violations)")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("gallery", help="classify the built-in fixtures")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_gallery)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.func(args)
    except ResourceCapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAP
    except (GraphError, BundleError, ProblemError, LPError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end.

Exit codes: 0 success (or "dominates"), 1 a negative answer ("does not
dominate", a conjecture violation, a rerun mismatch), 2 "undecidable by the
implemented criteria", 3 bad input or a failed contract.

Every command accepts ``--out DIR``; outputs then go to files in DIR together
with ``manifest.json`` recording the argv, configuration, seed, version,
timestamps and SHA-256 hashes of inputs and outputs. ``treedom rerun
DIR/manifest.json`` replays the argv and compares output hashes.

Growth functions: ``poly:d[,c[,e]]`` (ceil(c n^d ln(n+1)^e)), ``exp:b``,
``const:v``, ``table:v1,v2,...``, ``alt:<odd>,<even>`` with terms ``7``,
``n``, ``n^d``, ``b^n``, or a path to a growth JSON file.

Trees: ``figure1-gamma``, ``figure1-gamma-prime``, ``paths:n,k``,
``spherical:depth:<growth>``, ``partition:p1,p2,...`` or a tree JSON file.

Sets: ``counterexample``, ``box:[a,b]x[c,d]+[e,f]^2`` (unions of products),
``empty:n``, ``full:n``, ``witness:r,eps`` or a box-union JSON file.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import re
import sys
from datetime import datetime, timezone
from fractions import Fraction
from importlib import resources
from typing import Callable, Optional

import jsonschema

from . import __version__
from .boxes import BoxUnion, counterexample_D, witness_set_height2
from .domination import (dominates_height2, format_prob, height2_violation, height2_witness,
                         phi_tree_exact, psi, some_path_prob)
from .errors import TreedomError
from .fpp import (ExplosionBudget, SimConfig, TransitDist, explosion_test, ratio_statistics,
                  run_replicas)
from .growth import GrowthFunction, parse_growth
from .scan import first_violation, run_scan
from .transform import (checkpoints, classify, equal_product_indices, tilde_f_hull,
                        tilde_f_recursive)
from .trees import (RootedTree, build_paths_tree, build_spherical, children_partition,
                    figure1_trees, tree_from_partition)

EXIT_OK, EXIT_NO, EXIT_UNDECIDED, EXIT_INPUT = 0, 1, 2, 3


class InputError(TreedomError):
    """Malformed command-line input."""


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 by default, which is taken by "undecidable"
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------- inputs

def _schema(name: str) -> dict:
    text = resources.files("treedom").joinpath("schemas", f"{name}.schema.json").read_text()
    return json.loads(text)


def _pointer(path) -> str:
    return "/" + "/".join(str(p).replace("~", "~0").replace("/", "~1") for p in path)


def load_json_input(path: str, schema: str) -> dict:
    """Read and validate a JSON file; errors name the offending JSON pointer."""
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    err = jsonschema.exceptions.best_match(
        jsonschema.Draft202012Validator(_schema(schema)).iter_errors(obj))
    if err is not None:
        raise InputError(f"{path}: {schema} input invalid at {_pointer(err.absolute_path)}: "
                         f"{err.message}")
    return obj


def _is_file(spec: str) -> bool:
    return spec.endswith(".json") or os.path.isfile(spec)


def parse_growth_arg(spec: str) -> GrowthFunction:
    if _is_file(spec):
        return GrowthFunction.from_json(load_json_input(spec, "growth"))
    return parse_growth(spec)


def parse_tree(spec: str) -> RootedTree:
    if _is_file(spec):
        return RootedTree.from_json_obj(load_json_input(spec, "tree"))
    gamma, gamma_prime = figure1_trees()
    if spec == "figure1-gamma":
        return gamma
    if spec == "figure1-gamma-prime":
        return gamma_prime
    kind, _, rest = spec.partition(":")
    try:
        if kind == "paths":
            n, k = (int(x) for x in rest.split(","))
            return build_paths_tree(n, k)
        if kind == "spherical":
            depth, _, growth = rest.partition(":")
            return build_spherical(parse_growth(growth), int(depth))
        if kind == "partition":
            return tree_from_partition(int(x) for x in rest.split(","))
    except ValueError as exc:
        raise InputError(f"cannot parse tree spec {spec!r}: {exc}") from exc
    raise InputError(f"unknown tree spec {spec!r}")


_INTERVAL = re.compile(r"\[([^,\]]+),([^\]]+)\](?:\^(\d+))?")


def _parse_box(text: str) -> list[tuple[Fraction, Fraction]]:
    axes = []
    pos = 0
    for m in _INTERVAL.finditer(text):
        sep = text[pos:m.start()]
        if sep not in ("", "x") or (sep == "" and pos) or (sep == "x" and not pos):
            raise InputError(f"cannot parse box {text!r} near position {pos}")
        lo, hi = Fraction(m.group(1).strip()), Fraction(m.group(2).strip())
        axes.extend([(lo, hi)] * int(m.group(3) or 1))
        pos = m.end()
    if pos != len(text) or not axes:
        raise InputError(f"cannot parse box {text!r}")
    return axes


def parse_set(spec: str) -> BoxUnion:
    if _is_file(spec):
        return BoxUnion.from_json_obj(load_json_input(spec, "boxunion"))
    if spec == "counterexample":
        return counterexample_D()
    kind, _, rest = spec.partition(":")
    try:
        if kind == "box":
            return BoxUnion.from_intervals(*(_parse_box(b) for b in rest.split("+")))
        if kind == "empty":
            return BoxUnion.empty(int(rest))
        if kind == "full":
            return BoxUnion.full(int(rest))
        if kind == "witness":
            r, eps = rest.split(",")
            return witness_set_height2(int(r), Fraction(eps))
    except (ValueError, ZeroDivisionError) as exc:
        raise InputError(f"cannot parse set spec {spec!r}: {exc}") from exc
    raise InputError(f"unknown set spec {spec!r}")


def transit_dist(args) -> TransitDist:
    if args.dist == "exponential":
        return TransitDist.exponential()
    return TransitDist.power_law(args.alpha, args.c)


# ---------------------------------------------------------------- outputs

class Output:
    """Collects named output files; prints to stdout when no directory is set."""

    def __init__(self, out_dir: Optional[str]):
        self.dir = out_dir
        self.files: dict[str, str] = {}

    def write(self, name: str, text: str) -> None:
        if not text.endswith("\n"):
            text += "\n"
        self.files[name] = text
        if self.dir is None:
            sys.stdout.write(text)

    def flush(self) -> dict[str, str]:
        hashes = {}
        if self.dir is None:
            return hashes
        os.makedirs(self.dir, exist_ok=True)
        for name, text in self.files.items():
            with open(os.path.join(self.dir, name), "w", newline="") as fh:
                fh.write(text)
            hashes[name] = _sha256(text.encode())
        return hashes


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=str)


def _csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    if rows:
        w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    return buf.getvalue()


def _input_hashes(args) -> dict[str, str]:
    out = {}
    for key in ("tree", "other", "set", "growth"):
        spec = getattr(args, key, None)
        if spec is None:
            continue
        if _is_file(spec) and os.path.exists(spec):
            with open(spec, "rb") as fh:
                out[key] = _sha256(fh.read())
        else:
            out[key] = _sha256(spec.encode())
    return out


def _config(args) -> dict:
    skip = {"func", "out"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


# ---------------------------------------------------------------- commands

def cmd_eval(args, out: Output) -> int:
    d = parse_set(args.set)
    if args.psi is not None:
        b = [Fraction(x) for x in args.psi.split(",")]
        b = [int(x) if x.denominator == 1 else float(x) for x in b]
        value = psi(b, d)
        what = "psi"
    else:
        if args.tree is None:
            raise InputError("eval needs --tree (or --psi)")
        tree = parse_tree(args.tree)
        value = some_path_prob(tree, d) if args.some_path else phi_tree_exact(tree, d)
        what = "some-path" if args.some_path else "all-paths"
    if args.format == "json":
        exact = str(value) if isinstance(value, Fraction) else None
        out.write("report.json", _dumps({"quantity": what, "exact": exact,
                                         "decimal": float(value)}))
    else:
        out.write("report.txt", format_prob(value))
    return EXIT_OK


def _dominance(a: RootedTree, b: RootedTree) -> tuple[int, str, dict]:
    sa, sb = a.generation_sizes(), b.generation_sizes()
    sa = sa + [0] * (len(sb) - len(sa))
    for n, (x, y) in enumerate(zip(sa, sb), start=1):
        if x < y:
            return (EXIT_NO, "generation counts",
                    {"level": n, "first": x, "second": y,
                     "reason": "a small cube near the origin favours the larger generation"})
    if a.height <= 2 and b.height <= 2:
        p, q = children_partition(a), children_partition(b)
        if dominates_height2(p, q):
            return EXIT_OK, "height-2 tail sums", {"partitions": [list(p), list(q)]}
        w = height2_witness(p, q)
        info = {"partitions": [list(p), list(q)], "violation_k": height2_violation(p, q)}
        if w is not None:
            info["witness"] = {"r": w.r, "eps": str(w.eps),
                               "all_paths_first": str(w.phi_p), "all_paths_second": str(w.phi_q)}
        return EXIT_NO, "height-2 tail sums", info
    if _spherical(a):
        return EXIT_OK, "spherical tree with larger generations", {"sizes": [sa, sb]}
    return EXIT_UNDECIDED, "none", {"sizes": [sa, sb]}


def _spherical(t: RootedTree) -> bool:
    return not t.is_ragged() and all(
        len({t.num_children(v) for v in t.level(n)}) == 1 for n in range(t.height))


def cmd_dominates(args, out: Output) -> int:
    a, b = parse_tree(args.tree), parse_tree(args.other)
    code, criterion, info = _dominance(a, b)
    report = {"criterion": criterion, "details": info,
              "verdict": {EXIT_OK: "dominates", EXIT_NO: "does not dominate",
                          EXIT_UNDECIDED: "undecidable by implemented criteria"}[code]}
    if code == EXIT_UNDECIDED and a.height == b.height == 3 and not a.is_ragged() \
            and not b.is_ragged():
        d = counterexample_D()
        pa, pb = phi_tree_exact(a, d), phi_tree_exact(b, d)
        report["probe"] = {"set": "counterexample", "all_paths_first": str(pa),
                           "all_paths_second": str(pb)}
        if pa > pb:
            report["note"] = "counterexample set reverses intuition"
    if args.format == "json":
        out.write("report.json", _dumps(report))
    else:
        lines = [f"{report['verdict']} (criterion: {criterion})"]
        if "note" in report:
            lines[0] = f"{report['verdict']}; {report['note']}"
        if "probe" in report:
            pr = report["probe"]
            lines.append(f"P(all paths in D; first)  = {format_prob(Fraction(pr['all_paths_first']))}")
            lines.append(f"P(all paths in D; second) = {format_prob(Fraction(pr['all_paths_second']))}")
        for key, val in info.items():
            lines.append(f"{key}: {val}")
        out.write("report.txt", "\n".join(lines))
    return code


def cmd_tilde(args, out: Output) -> int:
    f = parse_growth_arg(args.growth)
    horizon = args.horizon if args.horizon is not None else args.depth
    method = tilde_f_recursive if args.method == "recursive" else tilde_f_hull
    reg = method(f, args.depth, horizon)
    values = reg.values
    sums = reg.normalizer(args.alpha)
    verdict = classify(f, args.alpha, args.depth)
    if args.format == "csv":
        rows = [{"n": n + 1, "f": f(n + 1), "tilde_f": repr(float(values[n])),
                 "log_tilde_f": repr(float(reg.log_values[n])), "stable": bool(reg.stable[n])}
                for n in range(args.depth)]
        out.write("tilde.csv", _csv(rows))
        return EXIT_OK
    report = {"window": args.depth, "horizon": horizon, "method": args.method,
              "f": f.values(args.depth), "tilde_f": [float(v) for v in values],
              "log_tilde_f": [float(v) for v in reg.log_values],
              "stable": [bool(s) for s in reg.stable],
              "contacts": equal_product_indices(f, args.depth, horizon),
              "partial_sums": [{"n": n, "sum": float(sums[n - 1])} for n in checkpoints(args.depth)],
              "verdict": verdict.to_json()}
    if reg.discrepancy is not None:
        report["hull_discrepancy"] = reg.discrepancy
    out.write("tilde.json", _dumps(report))
    return EXIT_OK


def cmd_classify(args, out: Output) -> int:
    f = parse_growth_arg(args.growth)
    verdict = classify(f, args.alpha, args.depth)
    if args.format == "json":
        out.write("classify.json", _dumps(verdict.to_json()))
    else:
        tag = "" if verdict.definitive else " (evidence only)"
        out.write("classify.txt", f"{verdict.regime}{tag}\n{verdict.notes}")
    return EXIT_OK


def cmd_simulate(args, out: Output) -> int:
    f = parse_growth_arg(args.growth)
    dist = transit_dist(args)
    cfg = SimConfig(seed=args.seed, replicas=args.replicas,
                    beam=args.beam if args.beam > 0 else None, prune_k=args.prune_k,
                    depth=args.depth, dist=dist, weighted=args.weighted)
    trajs = run_replicas(cfg, f)
    summary = {"config": cfg.to_json(), "growth": f.to_json()}
    verdict = classify(f, dist.exponent, args.depth)
    if verdict.definitive and verdict.regime == "explosion":
        summary["note"] = "explosion regime: normalizer converges, ratios not reported"
        summary["final_m_hat"] = [float(t.m_hat[-1]) for t in trajs]
    else:
        reg = tilde_f_hull(f, args.depth, args.depth if not f.table_only else
                           f.known_length - args.depth)
        stats = ratio_statistics(trajs, reg, dist.exponent, dist.small_time_constant,
                                 args.tolerance)
        summary["ratios"] = stats.to_json(every=args.every)
        summary["final_level"] = {"ratios": [float(t.ratio[-1]) for t in trajs],
                                  "band_contains_constant": stats.band_contains()}
    rows = [r for t in trajs for r in t.rows()]
    if args.out or args.format == "csv":
        out.write("trajectories.csv", _csv(rows))
    out.write("summary.json", _dumps(summary))
    return EXIT_OK


def cmd_scan(args, out: Output) -> int:
    instances = run_scan(args.count, args.seed, args.max_levels, args.max_vertices)
    bad = first_violation(instances)
    report = {"count": len(instances), "seed": args.seed,
              "violations": sum(not x.report.holds for x in instances),
              "first_violation": bad.to_json() if bad else None}
    out.write("scan.json", _dumps(report))
    if bad is not None:
        sys.stderr.write("violation found; reproduce with --seed "
                         f"{args.seed} instance {bad.index}\n")
        return EXIT_NO
    return EXIT_OK


def cmd_explosion(args, out: Output) -> int:
    f = parse_growth_arg(args.growth)
    budget = ExplosionBudget(levels=args.depth, replicas=args.replicas, seed=args.seed,
                             beam=args.beam, prune_k=args.prune_k)
    report = explosion_test(f, transit_dist(args), budget)
    out.write("explosion.json", _dumps(report.to_json()))
    return EXIT_OK


def cmd_rerun(args, out: Output) -> int:
    with open(args.manifest) as fh:
        manifest = json.load(fh)
    target = args.out or os.path.join(os.path.dirname(os.path.abspath(args.manifest)), "rerun")
    argv = list(manifest["argv"])
    if "--out" in argv:
        argv[argv.index("--out") + 1] = target
    else:
        argv += ["--out", target]
    code = main(argv)
    with open(os.path.join(target, "manifest.json")) as fh:
        new = json.load(fh)
    same = new["output_hashes"] == manifest["output_hashes"] and code == manifest["exit_code"]
    sys.stdout.write(_dumps({"reproduced": same, "outputs": target}) + "\n")
    return EXIT_OK if same else EXIT_NO


# ---------------------------------------------------------------- parser

def _common(p: argparse.ArgumentParser, sim: bool = False) -> None:
    p.add_argument("--out", help="directory for outputs and manifest.json")
    p.add_argument("--format", choices=("text", "json", "csv"), default="text")
    if sim:
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--replicas", type=int, default=20)
        p.add_argument("--beam", type=int, default=200, help="beam width, 0 = unbounded")
        p.add_argument("--prune-k", type=int, default=3)
        p.add_argument("--dist", choices=("exponential", "power"), default="exponential")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="treedom", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("eval", help="exact path probabilities on a finite tree")
    p.add_argument("--tree")
    p.add_argument("--set", required=True)
    p.add_argument("--some-path", action="store_true",
                   help="P(some root path in B) instead of P(all root paths in D)")
    p.add_argument("--psi", help="generation sizes b1,...,bn for Psi(b; D)")
    _common(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("dominates", help="decide domination of TREE over OTHER")
    p.add_argument("tree")
    p.add_argument("other")
    _common(p)
    p.set_defaults(func=cmd_dominates)

    for name, func, helptext in (("tilde", cmd_tilde, "regularized growth f~"),
                                 ("classify", cmd_classify, "explosion criterion")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--growth", required=True)
        p.add_argument("--depth", "-N", "--N", type=int, default=1000)
        p.add_argument("--alpha", type=float, default=1.0)
        if name == "tilde":
            p.add_argument("--horizon", "-H", type=int)
            p.add_argument("--method", choices=("hull", "recursive"), default="hull")
        _common(p)
        p.set_defaults(func=func)

    p = sub.add_parser("simulate", help="first-passage fronts by beam search")
    p.add_argument("--growth", required=True)
    p.add_argument("--depth", "-N", "--N", type=int, default=2000)
    p.add_argument("--alpha", type=float, default=1.0, help="power-law exponent")
    p.add_argument("--c", type=float, default=1.0, help="power-law constant")
    p.add_argument("--weighted", action="store_true")
    p.add_argument("--tolerance", type=float, default=0.2)
    p.add_argument("--every", type=int, default=10, help="band stride in summary.json")
    _common(p, sim=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("scan-conjecture", help="random graded graphs vs the path-count bound")
    p.add_argument("--count", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-levels", type=int, default=3)
    p.add_argument("--max-vertices", type=int, default=8)
    _common(p)
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("explosion", help="analytic verdict plus simulation evidence")
    p.add_argument("--growth", required=True)
    p.add_argument("--depth", "-N", "--N", type=int, default=4096)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--c", type=float, default=1.0)
    _common(p, sim=True)
    p.set_defaults(func=cmd_explosion, replicas=8, beam=64)

    p = sub.add_parser("rerun", help="replay a manifest and compare output hashes")
    p.add_argument("manifest")
    p.add_argument("--out")
    p.set_defaults(func=cmd_rerun, format="json")
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    func: Callable = args.func
    started = datetime.now(timezone.utc).isoformat()
    out = Output(args.out if args.command != "rerun" else None)
    try:
        code = func(args, out)
    except (TreedomError, ValueError) as exc:
        sys.stderr.write(f"treedom {args.command}: error: {exc}\n")
        return EXIT_INPUT
    if args.command != "rerun" and args.out:
        hashes = out.flush()
        manifest = {"command": args.command, "argv": argv, "config": _config(args),
                    "seed": getattr(args, "seed", None), "version": __version__,
                    "started": started, "finished": datetime.now(timezone.utc).isoformat(),
                    "input_hashes": _input_hashes(args), "output_hashes": hashes,
                    "exit_code": code}
        with open(os.path.join(args.out, "manifest.json"), "w") as fh:
            fh.write(_dumps(manifest) + "\n")
    return code


if __name__ == "__main__":
    sys.exit(main())

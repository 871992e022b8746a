"""``ksteiner`` command line.

    ksteiner solve instance.json [-o out.json] [--svg tree.svg] [--verify] [--threads N]
    ksteiner partition instance.json --svg faces.svg [--json faces.json]
    ksteiner mst instance.json [-o out.json]
    ksteiner gen -n 6 --seed 1 [-o instance.json]

Exit status: 0 success, 1 invalid input (malformed file, schema, size cap),
2 when a placement could not be certified within the tolerance or a
``--verify`` cross-check disagrees.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from importlib import resources

import numpy as np

from .mst import build_mst
from .norms import GeometryError, UnitBall, construct_hex_frame
from .odc import build_odc_partition, working_box
from .oracles import OracleConfig, brute_mst, grid_steiner_oracle
from .overlay import overlay_partitions
from .solver import ProblemSpec, Solution, solve
from .svg import partition_svg, solution_svg
from .topology import CostFunction, ToleranceNotReached, evaluate_cost

EXIT_OK, EXIT_INVALID, EXIT_TOLERANCE = 0, 1, 2
SIG_DIGITS = 12


class InputError(Exception):
    """Bad input file; the message already carries file and line."""


# --------------------------------------------------------------------------
# reading
# --------------------------------------------------------------------------

def _positions(text: str) -> dict:
    """Map JSON paths (tuples of keys / indices) to 1-based line numbers."""
    dec = json.JSONDecoder()
    out = {}
    ws = " \t\r\n"

    def skip(i):
        while i < len(text) and text[i] in ws:
            i += 1
        return i

    def value(i, path):
        i = skip(i)
        out[path] = text.count("\n", 0, i) + 1
        if text[i] == "{":
            i = skip(i + 1)
            if text[i] == "}":
                return i + 1
            while True:
                key, i = dec.raw_decode(text, skip(i))
                i = skip(i) + 1  # colon
                i = skip(value(i, path + (key,)))
                if text[i] == "}":
                    return i + 1
                i += 1
        if text[i] == "[":
            i = skip(i + 1)
            if text[i] == "]":
                return i + 1
            n = 0
            while True:
                i = skip(value(i, path + (n,)))
                n += 1
                if text[i] == "]":
                    return i + 1
                i += 1
        _, end = dec.raw_decode(text, i)
        return end

    value(0, ())
    return out


def _schema(name: str) -> dict:
    return json.loads(resources.files("ksteiner").joinpath("schemas", name).read_text())


def validate_document(doc, text: str, schema_name: str, source: str = "<input>") -> None:
    import jsonschema

    validator = jsonschema.Draft202012Validator(_schema(schema_name))
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(map(str, e.absolute_path)))
    if not errors:
        return
    lines = _positions(text) if text else {}
    msgs = []
    for err in errors:
        path = tuple(err.absolute_path)
        line = lines.get(path)
        while line is None and path:
            path = path[:-1]
            line = lines.get(path)
        where = "/".join(map(str, err.absolute_path)) or "(root)"
        msgs.append(f"{source}:{line or 1}: {where}: {err.message}")
    raise InputError("\n".join(msgs))


def read_instance(path: str) -> dict:
    try:
        text = sys.stdin.read() if path == "-" else open(path, encoding="utf-8").read()
    except OSError as exc:
        raise InputError(f"{path}: cannot read: {exc.strerror}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}:{exc.lineno}:{exc.colno}: malformed JSON: {exc.msg}") from exc
    validate_document(doc, text, "instance.schema.json", path)
    return doc


def problem_from_instance(doc: dict, threads: int = 1) -> ProblemSpec:
    try:
        ball = UnitBall.from_spec(doc["norm"])
        cf = CostFunction.from_spec(doc["cost"])
        return ProblemSpec(np.asarray(doc["terminals"], float), ball, k=doc["k"], cf=cf,
                           tol=float(doc.get("tolerance", 1e-9)), threads=threads,
                           box_inflation=float(doc.get("box_inflation", 3.0)),
                           seed_direction=doc.get("seed_direction"))
    except (GeometryError, ValueError) as exc:
        raise InputError(f"invalid instance: {exc}") from exc


# --------------------------------------------------------------------------
# writing
# --------------------------------------------------------------------------

def _round(v: float) -> float:
    return float(f"{float(v):.{SIG_DIGITS}g}")


def _clean(obj):
    if isinstance(obj, float):
        return _round(obj) if math.isfinite(obj) else obj
    if isinstance(obj, (np.floating,)):
        return _clean(float(obj))
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_clean(v) for v in obj]
    return obj


def solution_document(sol: Solution) -> dict:
    stats = dict(sol.stats)
    return _clean({
        "steiner_points": sol.steiner.reshape(-1, 2).tolist(),
        "edges": [[{kind: int(i)} for kind, i in e] for e in sol.edges],
        "cost": sol.cost,
        "cost_function": sol.cf.to_spec(),
        "norm": sol.ball.spec or {"type": "custom"},
        "stats": {k: stats.get(k, 0) for k in
                  ("regions", "distinct_labels", "topologies_evaluated", "wall_ms", "warnings")},
    })


def dumps(doc) -> str:
    return json.dumps(doc, indent=2) + "\n"


def _write(path: str | None, text: str) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def mst_solution(spec: ProblemSpec) -> Solution:
    X = spec.terminals
    T = build_mst(spec.ball, X)
    edges = sorted(((("t", int(u)), ("t", int(v))) for u, v in T.edges.tolist()),
                   key=lambda e: (e[0][1], e[1][1]))
    L = np.array([spec.ball.distance(X[a[1]], X[b[1]]) for a, b in edges])
    stats = {"regions": 0, "distinct_labels": 0, "topologies_evaluated": 1,
             "wall_ms": 0.0, "warnings": 0}
    return Solution(X, np.zeros((0, 2)), edges, L, evaluate_cost(spec.cf, L), spec.cf,
                    spec.ball, [], stats)


# --------------------------------------------------------------------------
# verification
# --------------------------------------------------------------------------

def verify(spec: ProblemSpec, sol: Solution, out=None) -> bool:
    out = out or sys.stderr
    cfg = OracleConfig()
    X = np.unique(spec.terminals, axis=0)
    ok = True
    scale = max(float(np.ptp(X, axis=0).max()), 1.0) if len(X) else 1.0
    if len(X) >= 2:
        a = build_mst(spec.ball, X).total_length()
        b = brute_mst(spec.ball, X).total_length()
        good = abs(a - b) <= 1e-9 * scale
        ok &= good
        print(f"verify mst: main {a:.12g} brute {b:.12g} {'ok' if good else 'MISMATCH'}", file=out)
    orc = grid_steiner_oracle(spec.ball, spec.cf, X, spec.k, cfg)
    slack = orc.bound + max(spec.tol, 1e-9 * scale)
    good = sol.cost <= orc.cost + slack
    ok &= good
    print(f"verify grid oracle: solver {sol.cost:.12g} oracle {orc.cost:.12g} "
          f"bound {orc.bound:.3g} {'ok' if good else 'MISMATCH'}", file=out)
    rec = sol.recompute_cost()
    good = abs(rec - sol.cost) <= 1e-9 * max(1.0, abs(sol.cost))
    ok &= good
    print(f"verify recompute: {rec:.12g} {'ok' if good else 'MISMATCH'}", file=out)
    return ok


def _check_caps(spec: ProblemSpec) -> None:
    cfg = OracleConfig()
    n = len(np.unique(spec.terminals, axis=0))
    if n > cfg.max_n or spec.k > cfg.max_k:
        raise InputError(f"--verify is capped at n <= {cfg.max_n} distinct terminals and "
                         f"k <= {cfg.max_k} (got n={n}, k={spec.k})")


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------

def _progress(enabled: bool):
    if not enabled:
        return None
    last = [-1]

    def report(done, total):
        pct = int(100 * done / max(total, 1))
        if pct != last[0]:
            last[0] = pct
            sys.stderr.write(f"\rplacing components {done}/{total} ({pct}%)")
            if done == total:
                sys.stderr.write("\n")
            sys.stderr.flush()
    return report


def cmd_solve(args) -> int:
    doc = read_instance(args.instance)
    spec = problem_from_instance(doc, args.threads)
    if args.verify:
        _check_caps(spec)
    show = not args.quiet and sys.stderr.isatty()
    try:
        sol = solve(spec, progress=_progress(show))
    except ToleranceNotReached as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_TOLERANCE
    _write(args.output, dumps(solution_document(sol)))
    if args.svg:
        _write(args.svg, solution_svg(sol))
    code = EXIT_OK
    if sol.stats.get("warnings"):
        print(f"warning: {sol.stats['warnings']} component placements missed the tolerance "
              "and were skipped", file=sys.stderr)
        code = EXIT_TOLERANCE
    if args.verify and not verify(spec, sol):
        code = EXIT_TOLERANCE
    return code


def cmd_mst(args) -> int:
    spec = problem_from_instance(read_instance(args.instance))
    _write(args.output, dumps(solution_document(mst_solution(spec))))
    return EXIT_OK


def cmd_partition(args) -> int:
    if not args.svg and not args.json:
        raise InputError("partition needs --svg and/or --json")
    doc = read_instance(args.instance)
    spec = problem_from_instance(doc)
    X = spec.terminals[np.sort(np.unique(spec.terminals, axis=0, return_index=True)[1])]
    seed = None
    if spec.seed_direction is not None:
        seed = spec.ball.boundary_point(np.asarray(spec.seed_direction, float))
    frame = construct_hex_frame(spec.ball, seed)
    box = working_box(X, spec.box_inflation)
    parts = [build_odc_partition(spec.ball, frame, X, i, box) for i in range(6)]
    regions = overlay_partitions(parts)
    if args.svg:
        _write(args.svg, partition_svg(regions, X))
    if args.json:
        faces = []
        for r in regions:
            rings = [np.asarray(r.face.exterior.coords).tolist()]
            rings += [np.asarray(h.coords).tolist() for h in r.face.interiors]
            faces.append({"label": list(r.label), "representative": list(r.representative),
                          "rings": rings})
        out = {"box": list(box), "terminals": X.tolist(),
               "partitions": [P.to_json() for P in parts], "faces": faces}
        _write(args.json, json.dumps(_clean(out)) + "\n")
    print(f"{len(regions)} faces, {len({r.label for r in regions})} distinct labels",
          file=sys.stderr)
    return EXIT_OK


_NORM_CHOICES = ("euclidean", "rectilinear", "linf")


def cmd_gen(args) -> int:
    rng = np.random.default_rng(args.seed)
    X = rng.uniform(0.0, args.scale, size=(args.n, 2))
    cost = {"type": args.cost}
    if args.cost == "power":
        cost["p"] = args.p
    doc = {"terminals": X.tolist(), "norm": {"type": args.norm}, "k": args.k, "cost": cost}
    _write(args.output, dumps(_clean(doc)))
    return EXIT_OK


# --------------------------------------------------------------------------
# entry point
# --------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    """Usage errors exit 1 so that 2 keeps meaning a tolerance failure."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _default_threads() -> int:
    try:
        return max(1, int(os.environ.get("KSTEINER_THREADS", "1")))
    except ValueError:
        return 1


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ksteiner", description="Generalised k-Steiner trees in normed planes.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("solve", help="optimal tree with at most k steiner points")
    s.add_argument("instance", help="instance JSON file ('-' for stdin)")
    s.add_argument("-o", "--output", help="solution JSON file (default: stdout)")
    s.add_argument("--svg", help="write a picture of the tree")
    s.add_argument("--verify", action="store_true",
                   help="cross-check against brute force oracles (n <= 7, k <= 2)")
    s.add_argument("--threads", type=int, default=_default_threads(),
                   help="worker threads for component placement "
                        "(default: $KSTEINER_THREADS or 1)")
    s.add_argument("-q", "--quiet", action="store_true", help="no progress output")
    s.set_defaults(func=cmd_solve)

    m = sub.add_parser("mst", help="minimum spanning tree baseline (no steiner points)")
    m.add_argument("instance", help="instance JSON file ('-' for stdin)")
    m.add_argument("-o", "--output", help="solution JSON file (default: stdout)")
    m.set_defaults(func=cmd_mst)

    q = sub.add_parser("partition", help="render the overlaid cone partition")
    q.add_argument("instance", help="instance JSON file ('-' for stdin)")
    q.add_argument("--svg", help="SVG output, one labelled path per face")
    q.add_argument("--json", help="JSON output with the six partitions and the faces")
    q.set_defaults(func=cmd_partition)

    g = sub.add_parser("gen", help="uniform random instance")
    g.add_argument("-n", type=int, default=6, help="number of terminals (default 6)")
    g.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    g.add_argument("-k", type=int, default=1, help="steiner budget (default 1)")
    g.add_argument("--norm", choices=_NORM_CHOICES, default="euclidean")
    g.add_argument("--cost", choices=("sum", "power", "bottleneck"), default="sum")
    g.add_argument("--p", type=float, default=2.0, help="exponent for --cost power")
    g.add_argument("--scale", type=float, default=1.0, help="side of the sampling square")
    g.add_argument("-o", "--output", help="instance JSON file (default: stdout)")
    g.set_defaults(func=cmd_gen)
    return p


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "threads", 1) is not None and getattr(args, "threads", 1) < 1:
        print("ksteiner: error: --threads must be at least 1", file=sys.stderr)
        return EXIT_INVALID
    if getattr(args, "n", 1) < 1 or getattr(args, "k", 1) < 1:
        print("ksteiner: error: -n and -k must be at least 1", file=sys.stderr)
        return EXIT_INVALID
    try:
        return args.func(args)
    except InputError as exc:
        print(exc, file=sys.stderr)
        return EXIT_INVALID


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()

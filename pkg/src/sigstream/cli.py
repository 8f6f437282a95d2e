"""Command-line interface.

Exit codes: 0 success, 2 usage error, 3 unparseable input, 4 dimension
mismatch, 5 missing file, 1 anything else.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from .conformance import calibrate_threshold, conformance, fit, load_model, save_model
from .distribution import EmpiricalMeasure, expected_signature, ses_features
from .log_ode import LinearField, solve_cde
from .sig_kernel import gram, kernel_pde, kernel_truncated
from .signature import log_signature, signature
from .streams import (
    Stream,
    StreamError,
    cumulative_sum,
    format_float,
    invisibility_reset,
    lead_lag,
    read_csv,
    time_augment,
    write_csv,
)
from .tensor_algebra import DimensionError, enumerate_words, format_word, sigkeys

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_USAGE = 2
EXIT_PARSE = 3
EXIT_DIMENSION = 4
EXIT_MISSING = 5

TRANSFORM_HELP = """\
transform chain: comma-separated specs applied left to right
  leadlag[:DELAY[:PASTS[:pause|nopause]]]   default leadlag:1:1:pause
  time[:abs|diff]                           append time (stream timestamps, or 0..k-1)
  invreset                                  invisibility reset
  cumsum                                    cumulative sum
example: --transform cumsum,leadlag:1:1:pause,time:abs
"""


class ParseError(ValueError):
    pass


def parse_transform_chain(text: str | None):
    if not text:
        return []
    chain = []
    for spec in text.split(","):
        parts = [p.strip() for p in spec.strip().split(":")]
        name, args = parts[0].lower(), parts[1:]
        try:
            if name == "leadlag":
                delay = int(args[0]) if len(args) > 0 else 1
                pasts = int(args[1]) if len(args) > 1 else 1
                flag = args[2].lower() if len(args) > 2 else "pause"
                if flag not in ("pause", "nopause"):
                    raise ParseError(f"lead-lag flag must be pause or nopause, got {flag!r}")
                chain.append(lambda s, a=delay, b=pasts, c=(flag == "pause"): lead_lag(s, a, b, c))
            elif name == "time":
                mode = args[0].lower() if args else "abs"
                if mode not in ("abs", "diff"):
                    raise ParseError(f"time mode must be abs or diff, got {mode!r}")
                chain.append(lambda s, m=mode: time_augment(s, None, m))
            elif name == "invreset" and not args:
                chain.append(invisibility_reset)
            elif name == "cumsum" and not args:
                chain.append(cumulative_sum)
            else:
                raise ParseError(f"unknown transform {spec!r}")
        except ValueError as exc:
            if isinstance(exc, ParseError):
                raise
            raise ParseError(f"bad transform spec {spec!r}: {exc}") from exc
    return chain


def apply_chain(s: Stream, chain) -> Stream:
    for step in chain:
        s = step(s)
    return s


def _load_stream(path: str, chain) -> Stream:
    p = Path(path)
    if path != "-" and not p.exists():
        raise FileNotFoundError(path)
    s = read_csv(sys.stdin if path == "-" else p)
    return apply_chain(s, chain)


def _load_measure(path: str, chain, weights: str | None = None) -> EmpiricalMeasure:
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(path)
    if p.is_dir():
        files = sorted(f for f in p.glob("*.csv") if f.name != "weights.csv")
        if weights is None and (p / "weights.csv").exists():
            weights = str(p / "weights.csv")
    else:
        files = [p]
    if not files:
        raise StreamError(f"no CSV streams in {path}")
    streams = tuple(apply_chain(read_csv(f), chain) for f in files)
    w = None
    if weights is not None:
        if not Path(weights).exists():
            raise FileNotFoundError(weights)
        w = np.array([float(r[0]) for r in csv.reader(open(weights)) if r and r[0].strip()])
    return EmpiricalMeasure(streams, w)


def _load_corpus(paths: Sequence[str], chain) -> list[Stream]:
    out = []
    for path in paths:
        p = Path(path)
        if not p.exists():
            raise FileNotFoundError(path)
        files = sorted(p.glob("*.csv")) if p.is_dir() else [p]
        out.extend(_load_stream(str(f), chain) for f in files)
    return out


def _floats(values) -> list:
    return [float(v) for v in np.asarray(values, dtype=np.float64).reshape(-1)]


def _dump_json(doc) -> str:
    # json renders floats with repr: shortest round-trippable form
    return json.dumps(doc, allow_nan=True)


def _tensor_doc(d: int, depth: int, coeffs) -> dict:
    return {
        "d": d,
        "depth": depth,
        "keys": [format_word(w) for w in enumerate_words(d, depth)],
        "coefficients": _floats(coeffs),
    }


def _tensor_csv(doc: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["key", "value"])
    for k, v in zip(doc["keys"], doc["coefficients"]):
        w.writerow([k, format_float(v)])
    return buf.getvalue()


def _matrix_csv(M) -> str:
    return "".join(",".join(format_float(v) for v in row) + "\n" for row in np.atleast_2d(M))


def _emit_tensor(args, d, depth, coeffs) -> str:
    doc = _tensor_doc(d, depth, coeffs)
    return _tensor_csv(doc) if args.format == "csv" else _dump_json(doc)


# subcommands


def cmd_keys(args) -> str:
    return sigkeys(args.d, args.N)


def cmd_sig(args) -> str:
    s = _load_stream(args.input, args.chain)
    return _emit_tensor(args, s.dim, args.depth, signature(s, args.depth).coefficients)


def cmd_logsig(args) -> str:
    s = _load_stream(args.input, args.chain)
    return _emit_tensor(args, s.dim, args.depth, log_signature(s, args.depth).coefficients)


def cmd_transform(args) -> str:
    s = _load_stream(args.input, args.chain)
    if args.format == "csv":
        return write_csv(s).rstrip("\n")
    doc = {"points": [_floats(p) for p in s.points]}
    if s.times is not None:
        doc["times"] = _floats(s.times)
    return _dump_json(doc)


def cmd_kernel(args) -> str:
    x = _load_stream(args.x, args.chain)
    y = _load_stream(args.y, args.chain)
    if x.dim != y.dim:
        raise DimensionError(f"streams of dimension {x.dim} and {y.dim}")
    if args.mode == "pde":
        value = kernel_pde(x, y, args.level, args.scale).corner
    else:
        value = kernel_truncated(x, y, args.depth)
    if args.format == "csv":
        return format_float(value)
    return _dump_json({"mode": args.mode, "value": value})


def cmd_gram(args) -> str:
    streams = _load_corpus(args.inputs, args.chain)
    G = gram(streams, args.mode, depth=args.depth, refinement=args.level, scale=args.scale,
             workers=args.workers)
    if args.format == "csv":
        return _matrix_csv(G).rstrip("\n")
    return _dump_json({"mode": args.mode, "gram": [_floats(r) for r in G]})


def cmd_logode(args) -> str:
    X = _load_stream(args.driver, args.chain)
    fpath = Path(args.field)
    if not fpath.exists():
        raise FileNotFoundError(args.field)
    try:
        spec = json.loads(fpath.read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"bad field file: {exc}") from exc
    mats = spec["matrices"] if isinstance(spec, dict) else spec
    field = LinearField(np.asarray(mats, dtype=np.float64))
    if field.d != X.dim:
        raise DimensionError(f"driver dimension {X.dim} vs {field.d} field matrices")
    if args.z0 is not None:
        z0 = np.array([float(v) for v in args.z0.split(",")])
    elif isinstance(spec, dict) and "z0" in spec:
        z0 = np.asarray(spec["z0"], dtype=np.float64)
    else:
        raise ParseError("initial state missing: pass --z0 or put z0 in the field file")
    if z0.size != field.e:
        raise DimensionError(f"initial state of size {z0.size} for {field.e}x{field.e} matrices")
    sol = solve_cde(z0, field, X, args.intervals, args.depth, args.substeps)
    if args.format == "csv":
        rows = [[t, *z] for t, z in zip(sol.times, sol.states)]
        return _matrix_csv(rows).rstrip("\n")
    return _dump_json({"times": _floats(sol.times), "states": [_floats(z) for z in sol.states]})


def cmd_expected_sig(args) -> str:
    mu = _load_measure(args.measure, args.chain, args.weights)
    return _emit_tensor(args, mu.dim, args.depth, expected_signature(mu, args.depth).coefficients)


def cmd_ses(args) -> str:
    mu = _load_measure(args.measure, args.chain, args.weights)
    feats = ses_features(mu, args.inner_depth, args.outer_depth)
    inner_dim = sum(mu.dim**k for k in range(args.inner_depth + 1))
    return _emit_tensor(args, inner_dim, args.outer_depth, feats)


def cmd_conformance(args) -> str:
    if args.action == "fit":
        corpus = _load_corpus(args.inputs, args.chain)
        model = fit(corpus, args.depth, args.rcond)
        if args.model is None:
            raise ParseError("conformance fit needs --model")
        save_model(model, args.model)
        doc = {"model": args.model, "n_corpus": len(corpus), "dim": model.dim, "rank": model.rank}
        return _dump_json(doc) if args.format == "json" else f"{len(corpus)},{model.dim},{model.rank}"
    if args.action == "score":
        if args.model is None:
            raise ParseError("conformance score needs --model")
        if not Path(args.model).exists():
            raise FileNotFoundError(args.model)
        model = load_model(args.model)
        queries = _load_corpus(args.inputs, args.chain)
        scores = [conformance(model, q) for q in queries]
        if args.format == "csv":
            return "\n".join(f"{format_float(s.value)},{s.nearest_index}" for s in scores)
        return _dump_json({"scores": [{"value": s.value, "nearest_index": s.nearest_index} for s in scores]})
    corpus = _load_corpus(args.inputs, args.chain)
    R = calibrate_threshold(corpus, args.depth, args.seed, args.rcond)
    return format_float(R) if args.format == "csv" else _dump_json({"threshold": R, "seed": args.seed})


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="sigstream",
        description="Path-signature toolkit for streams stored as CSV.",
        epilog=TRANSFORM_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, depth=True):
        sp.add_argument("--transform", default=None, help="augmentation chain, e.g. leadlag:1:1:pause,time:abs")
        sp.add_argument("--format", choices=("json", "csv"), default="json")
        if depth:
            sp.add_argument("--depth", "-N", type=int, default=2)

    k = sub.add_parser("keys", help="print the word basis in sigkeys order")
    k.add_argument("d", type=int)
    k.add_argument("N", type=int)
    k.set_defaults(func=cmd_keys, transform=None)

    for name, fn in (("sig", cmd_sig), ("logsig", cmd_logsig)):
        sp = sub.add_parser(name, help=f"{name} coefficients of a CSV stream")
        sp.add_argument("input", help="CSV stream path or - for stdin")
        common(sp)
        sp.set_defaults(func=fn)

    t = sub.add_parser("transform", help="apply an augmentation chain and print the stream")
    t.add_argument("input")
    common(t, depth=False)
    t.set_defaults(func=cmd_transform)

    kn = sub.add_parser("kernel", help="signature kernel of two streams")
    kn.add_argument("x")
    kn.add_argument("y")
    common(kn)
    kn.add_argument("--mode", choices=("pde", "truncated"), default="pde")
    kn.add_argument("--level", "-l", type=int, default=2, help="dyadic refinement level (pde mode)")
    kn.add_argument("--scale", type=float, default=1.0, help="path pre-scaling (pde mode)")
    kn.set_defaults(func=cmd_kernel)

    g = sub.add_parser("gram", help="Gram matrix of streams (files or directories of CSVs)")
    g.add_argument("inputs", nargs="+")
    common(g)
    g.add_argument("--mode", choices=("pde", "truncated"), default="truncated")
    g.add_argument("--level", "-l", type=int, default=2)
    g.add_argument("--scale", type=float, default=1.0)
    g.add_argument("--workers", type=int, default=None)
    g.set_defaults(func=cmd_gram)

    lo = sub.add_parser("logode", help="solve a linear CDE with the log-ODE method")
    lo.add_argument("driver", help="CSV driving stream")
    lo.add_argument("--field", required=True, help='JSON file {"matrices": [[...]], "z0": [...]}')
    lo.add_argument("--z0", default=None, help="comma-separated initial state")
    lo.add_argument("--intervals", "-m", type=int, default=1)
    lo.add_argument("--substeps", type=int, default=16)
    common(lo)
    lo.set_defaults(func=cmd_logode)

    for name, fn in (("expected-sig", cmd_expected_sig), ("ses", cmd_ses)):
        sp = sub.add_parser(name, help="features of a measure given as a directory of CSV streams")
        sp.add_argument("measure")
        sp.add_argument("--weights", default=None, help="file with one weight per stream (sorted file order)")
        common(sp)
        if name == "ses":
            sp.add_argument("--inner-depth", type=int, default=2)
            sp.add_argument("--outer-depth", type=int, default=2)
        sp.set_defaults(func=fn)

    c = sub.add_parser("conformance", help="fit, score or calibrate a conformance model")
    c.add_argument("action", choices=("fit", "score", "calibrate"))
    c.add_argument("inputs", nargs="+", help="CSV streams or directories")
    c.add_argument("--model", default=None, help="model file to write (fit) or read (score)")
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--rcond", type=float, default=1e-10)
    common(c)
    c.set_defaults(func=cmd_conformance)
    return p


def main(argv: Sequence[str] | None = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_USAGE
    try:
        if getattr(args, "depth", 1) is not None and getattr(args, "depth", 1) < 1:
            raise ParseError("--depth must be >= 1")
        args.chain = parse_transform_chain(getattr(args, "transform", None))
        out = args.func(args)
    except FileNotFoundError as exc:
        print(f"sigstream: file not found: {exc.args[0] if exc.args else exc}", file=stderr)
        return EXIT_MISSING
    except DimensionError as exc:
        print(f"sigstream: dimension mismatch: {exc}", file=stderr)
        return EXIT_DIMENSION
    except (ParseError, StreamError, json.JSONDecodeError, KeyError) as exc:
        print(f"sigstream: cannot parse input: {exc}", file=stderr)
        return EXIT_PARSE
    except Exception as exc:  # noqa: BLE001
        print(f"sigstream: error: {exc}", file=stderr)
        return EXIT_ERROR
    print(out, file=stdout)
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())

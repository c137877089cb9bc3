"""Command-line front end.

Exit codes: 0 success, 2 invalid input, 3 dense dimension cap refused.
Nothing is written to ``--out`` unless the command succeeds.
"""
from __future__ import annotations

import argparse
import itertools
import json
import math
import sys

import numpy as np

from . import measures, protocol, reproduce as repro, states, twisting
from .states import DimensionCapError

EXIT_OK, EXIT_INVALID, EXIT_CAP = 0, 2, 3

RANGE_HELP = ("single value, comma list, or start:stop[:step] range; the range includes start "
              "and excludes stop unless stop-start is an exact multiple of step (default step 1)")

FAMILIES = ("maxent", "werner-sym", "werner-asym", "example1", "example2", "raw", "private")


class UsageError(ValueError):
    pass


def parse_values(text: str, kind=float) -> list:
    """Expand the sweep value syntax described in :data:`RANGE_HELP`."""
    text = text.strip()
    if "," in text:
        return [kind(v) for v in text.split(",") if v.strip()]
    if ":" not in text:
        return [kind(text)]
    parts = text.split(":")
    if len(parts) not in (2, 3):
        raise UsageError(f"bad range {text!r}: expected start:stop[:step]")
    start, stop = float(parts[0]), float(parts[1])
    step = float(parts[2]) if len(parts) == 3 else 1.0
    if step <= 0:
        raise UsageError(f"bad range {text!r}: step must be positive")
    span = (stop - start) / step
    exact = abs(span - round(span)) < 1e-9
    count = int(round(span)) + 1 if exact else int(math.floor(span)) + 1
    if stop < start:
        count = 0
    vals = [round(start + i * step, 12) for i in range(count)]
    if not exact:
        vals = [v for v in vals if v < stop]
    if kind is int:
        if any(v != int(v) for v in vals):
            raise UsageError(f"range {text!r} produces non-integer values")
        return [int(v) for v in vals]
    return vals


def _write(out: str | None, text: str) -> None:
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _state_from_args(args):
    if getattr(args, "input", None):
        with open(args.input, encoding="utf-8") as fh:
            return states.state_from_json(json.load(fh))
    fam = args.family
    if fam is None:
        raise UsageError("give --family or --in")
    if fam == "maxent":
        return states.max_entangled(args.d)
    if fam == "werner-sym":
        return states.werner_extreme(args.d, "sym")
    if fam == "werner-asym":
        return states.werner_extreme(args.d, "asym")
    if fam == "example1":
        return states.example1_state(args.d, args.p)
    if fam == "example2":
        return states.example2_state(args.d, args.l)
    if fam == "raw":
        if args.p is None:
            raise UsageError("--p is required for the raw family")
        pr = protocol.ProtocolParams(args.p, args.d, args.l, args.n)
        return states.block_to_dense(protocol.n_copy_closed_form(pr))
    if fam == "private":
        shield = states.werner_extreme(args.d, "sym")
        t = twisting.random_twist(2 ** args.m, shield.dim, args.seed)
        return states.private_state(args.m, t, shield)
    raise UsageError(f"unknown family {fam!r}")


def _fmt(v) -> str:
    return "absent" if v is None else f"{v:.3f}"


def cmd_build(args) -> int:
    s = _state_from_args(args)
    if args.family == "raw" and not args.dense:
        doc = states.block_to_json(states.dense_to_block(s))
    else:
        doc = states.state_to_json(s)
    _write(args.out, json.dumps(doc) + "\n")
    return EXIT_OK


def cmd_ppt(args) -> int:
    s = _state_from_args(args)
    lam = measures.min_pt_eigenvalue(s)
    doc = {"is_ppt": lam >= -measures.PPT_TOL, "min_pt_eigenvalue": lam}
    print(f"PPT: {'yes' if doc['is_ppt'] else 'no'} (min eigenvalue {lam:.3e})")
    if args.out:
        _write(args.out, json.dumps(doc, indent=2) + "\n")
    return EXIT_OK


def cmd_negativity(args) -> int:
    s = _state_from_args(args)
    doc = {"log_negativity": measures.log_negativity(s)}
    if args.family == "example1" and args.p is None:
        doc["closed_form"] = measures.en_example1_closed(args.d)
    print(f"E_N = {doc['log_negativity']:.3f}")
    if args.out:
        _write(args.out, json.dumps(doc, indent=2) + "\n")
    return EXIT_OK


def cmd_security(args) -> int:
    s = _state_from_args(args)
    si = twisting.security_identity(s)
    doc = si._asdict()
    print(f"||X|| = {si.norm_x:.6f}, sqrt(p0 p1) F = {np.sqrt(si.p0 * si.p1) * si.fid:.6f}, "
          f"residual {si.residual:.2e}")
    if args.out:
        _write(args.out, json.dumps(doc, indent=2) + "\n")
    return EXIT_OK


def cmd_recurrence(args) -> int:
    pr = protocol.ProtocolParams(args.p, args.d, args.l, args.n)
    closed = protocol.n_copy_closed_form(pr)
    iterated, success = protocol.n_copy_iterated(pr)
    dev_closed = max(float(np.max(np.abs(getattr(closed, k) - getattr(iterated, k))))
                     for k in ("d00", "d01", "d10", "d11", "x"))
    doc = {"p": pr.p, "d": pr.d, "l": pr.l, "n": pr.n, "success_prob": success,
           "norm_x": closed.norm_x, "iterated_vs_closed_form": dev_closed}
    lines = [f"iterated vs closed form max deviation {dev_closed:.2e}"]
    if args.check == "dense":
        one = states.raw_key_state(pr.p, pr.d, pr.l)
        dense_one = states.block_to_dense(one)
        blk, dense = one, dense_one
        dev = 0.0
        for _ in range(pr.n - 1):
            blk, _ = protocol.recurrence_step_block(blk, one)
            dense, _ = protocol.recurrence_step_dense(dense, dense_one)
            dev = max(dev, float(np.max(np.abs(states.block_to_dense(blk).matrix - dense.matrix))))
        doc["block_vs_dense"] = dev
        verdict = "<=" if dev <= 1e-10 else ">"
        lines.append(f"block vs dense max deviation {verdict} 1e-10 ({dev:.2e})")
    print("\n".join(lines))
    if args.out:
        _write(args.out, json.dumps(doc, indent=2) + "\n")
    return EXIT_OK


def _records_text(records, fmt: str) -> str:
    return protocol.records_to_json(records) if fmt == "json" else protocol.records_to_csv(records)


def cmd_pipeline(args) -> int:
    rec = protocol.run_pipeline(protocol.ProtocolParams(args.p, args.d, args.l, args.n))
    _write(args.out, _records_text([rec], args.format))
    return EXIT_OK


def cmd_sweep(args) -> int:
    ps = parse_values(args.p, float)
    ds = parse_values(args.d, int)
    ls = parse_values(args.l, int)
    ns = parse_values(args.n, int)
    grid = [protocol.ProtocolParams(p, d, l, n) for p, d, l, n in itertools.product(ps, ds, ls, ns)]
    if not grid:
        raise UsageError("empty parameter grid")
    records = protocol.sweep(grid, jobs=args.jobs)
    _write(args.out, _records_text(records, args.format))
    return EXIT_OK


def cmd_verify(args) -> int:
    s = _state_from_args(args)
    rep = twisting.verify_private_state(s, args.tol)
    en = measures.log_negativity(s)
    print(f"{rep.summary()}, E_N = {en:.3f}")
    if args.out:
        doc = {"passed": rep.passed, "failures": rep.failures, "offdiag_max": rep.offdiag_max,
               "key_bias": rep.key_bias, "fidelity_deficit": rep.fidelity_deficit,
               "corner_gap": rep.corner_gap, "log_negativity": en}
        _write(args.out, json.dumps(doc, indent=2) + "\n")
    return EXIT_OK


def cmd_reproduce(args) -> int:
    rows = repro.reproduce(args.target, args.seed)
    text = (repro.report_json if args.format == "json" else repro.report_csv)(args.target, args.seed, rows)
    _write(args.out, text)
    failed = sum(not r.passed for r in rows)
    print(f"{args.target}: {len(rows) - failed}/{len(rows)} rows PASS", file=sys.stderr)
    return EXIT_OK


def _add_state_args(sp, default_family=None):
    sp.add_argument("--family", choices=FAMILIES, default=default_family)
    sp.add_argument("--in", dest="input", help="dense state JSON to read instead of --family")
    sp.add_argument("--d", type=int, default=2)
    sp.add_argument("--l", type=int, default=1)
    sp.add_argument("--n", type=int, default=1, help="copies for the raw family")
    sp.add_argument("--p", type=float, default=None)
    sp.add_argument("--m", type=int, default=1, help="key qubits for the private family")
    sp.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="privstate", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="verb", required=True)

    sp = sub.add_parser("build", help="construct a state and write it as JSON")
    _add_state_args(sp)
    sp.add_argument("--dense", action="store_true", help="dense encoding for block-form families")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_build)

    for verb, func, text in (("ppt", cmd_ppt, "positive-partial-transpose test"),
                             ("negativity", cmd_negativity, "log-negativity"),
                             ("security", cmd_security, "corner norm vs Eve fidelity identity")):
        sp = sub.add_parser(verb, help=text)
        _add_state_args(sp)
        sp.add_argument("--out")
        sp.set_defaults(func=func)

    sp = sub.add_parser("verify", help="operational private-state check")
    _add_state_args(sp)
    sp.add_argument("--tol", type=float, default=1e-9)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_verify)

    for verb, func in (("recurrence", cmd_recurrence), ("pipeline", cmd_pipeline)):
        sp = sub.add_parser(verb, help=f"{verb} on the raw hiding-state key")
        sp.add_argument("--p", type=float, required=True)
        sp.add_argument("--d", type=int, default=2)
        sp.add_argument("--l", type=int, default=1)
        sp.add_argument("--n", type=int, default=1)
        sp.add_argument("--out")
        if verb == "recurrence":
            sp.add_argument("--check", choices=("none", "dense"), default="none")
        else:
            sp.add_argument("--format", choices=("csv", "json"), default="csv")
        sp.set_defaults(func=func)

    sp = sub.add_parser("sweep", help="evaluate the pipeline over a parameter grid",
                        description="Value syntax: " + RANGE_HELP)
    for name in ("p", "d", "l", "n"):
        sp.add_argument(f"--{name}", required=name == "p", default="1" if name != "d" else "2",
                        help=RANGE_HELP if name == "p" else "same syntax as --p")
    sp.add_argument("--jobs", type=int, default=1)
    sp.add_argument("--format", choices=("csv", "json"), default="csv")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("reproduce", help="closed form vs numeric report for one claim")
    sp.add_argument("--target", choices=repro.TARGETS, required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--format", choices=("csv", "json"), default="csv")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_reproduce)
    return ap


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except DimensionCapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAP
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()

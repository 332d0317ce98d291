"""Command line: check, run, truthtable, verify-adder.

Exit codes: 0 ok, 1 hazards or failed verification, 2 parse error,
3 vector expectation mismatch, 4 usage error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import ndl
from .engine import ClockConfig, bits_str, load, write_trace_csv
from .netlist import Circuit, new_circuit, ripple_adder
from .oracle import adder_reference, exhaustive_equivalence, lane_pattern

OK, HAZARDS, PARSE_ERROR, MISMATCH, USAGE = 0, 1, 2, 3, 4
TRUTHTABLE_MAX_BITS = 12


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(USAGE, f"{self.prog}: error: {message}\n")


def _load_file(path: str) -> tuple[Circuit | None, int]:
    try:
        text = Path(path).read_text()
    except (OSError, UnicodeDecodeError) as e:
        raise UsageError(f"cannot read {path}: {e}") from e
    try:
        ast = ndl.parse(text)
    except ndl.ParseError as e:
        print(f"{path}: parse error", file=sys.stderr)
        print(ndl.render_error(e, text), file=sys.stderr)
        return None, PARSE_ERROR
    try:
        return ndl.elaborate(ast), OK
    except ndl.ElaborationError as e:
        for h in e.hazards:
            where = f"{path}:{h.span.line}:{h.span.start}" if h.span else path
            print(f"{where}: {h.kind}: {h.message}", file=sys.stderr)
        n = len(e.hazards)
        print(f"{n} hazard{'' if n == 1 else 's'}", file=sys.stderr)
        return None, HAZARDS


def _bits_arg(text: str) -> tuple[str, str]:
    name, sep, bits = text.partition("=")
    if not sep or not name or not bits or set(bits) - {"0", "1"}:
        raise UsageError(f"expected NAME=BITS, got {text!r}")
    return name, bits


def _check_vector(c: Circuit, inputs: dict[str, str], expects: dict[str, str]) -> None:
    for port, bits in inputs.items():
        if port not in c.inputs:
            raise UsageError(f"unknown input port {port!r}")
        if len(bits) != c.inputs[port].width:
            raise UsageError(f"port {port!r} takes {c.inputs[port].width} bits, got {len(bits)}")
    for probe, bits in expects.items():
        if probe not in c.probes:
            raise UsageError(f"unknown probe {probe!r}")
        if len(bits) != len(c.probes[probe].elements):
            raise UsageError(f"probe {probe!r} has {len(c.probes[probe].elements)} bits, expected {bits!r}")


def _fmt(values: dict[str, tuple[int, ...]], order) -> str:
    return " ".join(f"{p}={bits_str(values[p])}" for p in order if p in values)


def cmd_check(args) -> int:
    c, code = _load_file(args.file)
    if c is None:
        return code
    print("0 hazards")
    return OK


def cmd_run(args) -> int:
    if not args.hz > 0:
        raise UsageError("--hz must be positive")
    if args.cycles is not None and args.cycles < 0:
        raise UsageError("--cycles must be non-negative")
    c, code = _load_file(args.file)
    if c is None:
        return code
    given = dict(_bits_arg(x) for x in args.input)
    _check_vector(c, given, {})
    rows = [] if given else c.vectors
    for row in rows:
        _check_vector(c, row.inputs, row.expects)

    s = load(c, ClockConfig(args.hz))
    order = list(c.probes)
    mismatches = []
    cyc = 0
    if rows:
        for i, row in enumerate(rows):
            for _ in range(c.latency):
                got = s.run_cycle(row.inputs)
                print(f"cycle {cyc}: {_fmt(got, order)}")
                cyc += 1
            for probe, want in row.expects.items():
                have = bits_str(got.get(probe, ()))
                if have != want:
                    mismatches.append(f"row {i + 1}: {probe} expected {want}, got {have}")
    else:
        for _ in range(c.latency if args.cycles is None else args.cycles):
            got = s.run_cycle(given)
            print(f"cycle {cyc}: {_fmt(got, order)}")
            cyc += 1

    if args.trace:
        with open(args.trace, "w", newline="") as fh:
            write_trace_csv(s.trace, fh)
    if mismatches:
        for m in mismatches:
            print(f"mismatch {m}", file=sys.stderr)
        return MISMATCH
    return OK


def truthtable(c: Circuit, probe: str) -> list[str]:
    """One line per input assignment.  The first port's bit 0 varies fastest."""
    if probe not in c.probes:
        raise UsageError(f"unknown probe {probe!r}")
    ports = list(c.inputs)
    nbits = c.input_width(ports)
    if nbits > TRUTHTABLE_MAX_BITS:
        raise UsageError(f"{nbits} input bits exceed the truth table bound of {TRUTHTABLE_MAX_BITS}")
    lanes = 1 << nbits
    s = load(c, lanes=lanes, trace=False)
    vectors, off = {}, 0
    for p in ports:
        w = c.inputs[p].width
        vectors[p] = [lane_pattern(off + i, lanes) for i in range(w)]
        off += w
    got = {}
    for _ in range(c.latency):
        got = s.run_cycle(vectors)
    masks = got[probe]
    lines = []
    for k in range(lanes):
        cells, off = [], 0
        for p in ports:
            w = c.inputs[p].width
            cells.append(f"{p}=" + "".join(str((k >> (off + i)) & 1) for i in reversed(range(w))))
            off += w
        out = "".join(str((m >> k) & 1) for m in reversed(masks))
        lines.append(f"{' '.join(cells)} -> {probe}={out}")
    return lines


def cmd_truthtable(args) -> int:
    c, code = _load_file(args.file)
    if c is None:
        return code
    for line in truthtable(c, args.probe):
        print(line)
    return OK


def cmd_verify_adder(args) -> int:
    if not 1 <= args.width <= 8:
        raise UsageError(f"--width must be between 1 and 8, got {args.width}")
    c = new_circuit(f"adder{args.width}")
    ripple_adder(c, args.width)
    report = exhaustive_equivalence(c, adder_reference(args.width))
    print(f"width {args.width}: {report.cases} cases, {len(report.mismatches)} mismatches, "
          f"{report.elapsed:.3f} s")
    for asg, want, have in report.mismatches[:10]:
        print(f"  {asg}: expected {want}, got {have}", file=sys.stderr)
    return OK if report.ok else HAZARDS


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="mechrelay", description="Mechanical relay logic simulator.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("check", help="parse, elaborate and validate an NDL file")
    p.add_argument("file")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("run", help="simulate an NDL file")
    p.add_argument("file")
    p.add_argument("--input", action="append", default=[], metavar="NAME=BITS",
                   help="hold an input port at BITS (MSB first) every cycle")
    p.add_argument("--cycles", type=int, default=None,
                   help="machine cycles to run (default: the circuit latency)")
    p.add_argument("--trace", metavar="PATH", help="write a CSV trace")
    p.add_argument("--hz", type=float, default=5.0, help="machine cycles per second (default 5)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("truthtable", help="print a probe for every input assignment")
    p.add_argument("file")
    p.add_argument("--probe", required=True)
    p.set_defaults(func=cmd_truthtable)

    p = sub.add_parser("verify-adder", help="exhaustively check the ripple adder")
    p.add_argument("--width", type=int, required=True)
    p.set_defaults(func=cmd_verify_adder)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return USAGE


if __name__ == "__main__":
    sys.exit(main())

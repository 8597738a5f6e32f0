"""Batch front door: load specification files, run refinement obligations
through the pipeline, and emit deterministic reports.

Exit codes: 0 all checks proved; 1 some check falsified; 2 some check
unknown (and none falsified); 3 parse/type/resolution errors.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from . import __version__
from .algebra import (
    ComposedContract,
    GridTooLarge,
    check_compatibility,
    check_consistency,
    check_refinement,
    compose_contracts,
    interpret_composed_finite,
    verify_min_characterization,
)
from .diagnostics import Diagnostic, has_errors
from .engine import EngineOptions, Interval, Status, Verdict
from .loader import Obligation, Universe, elaborate
from .model import FiniteGrid, GridIncomplete, interpret_finite, refines_finite
from .parser import merge_documents, parse_only, resolve_document


def _parse_rational(text: str) -> Fraction:
    return Fraction(text.strip())


def parse_grid_flag(text: str) -> dict[str, tuple[Fraction, ...]]:
    """Parse "var=a,b,c;var2=d,e" into a grid hint mapping."""
    out: dict[str, tuple[Fraction, ...]] = {}
    for part in text.split(";"):
        part = part.strip()
        if not part:
            continue
        if "=" not in part:
            raise ValueError(f"bad grid entry: {part!r}")
        var, values = part.split("=", 1)
        out[var.strip()] = tuple(_parse_rational(v) for v in values.split(","))
    return out


def parse_box_flag(text: str) -> dict[str, Interval]:
    """Parse "var=[lo,hi];var2=[lo,hi]" into interval bounds."""
    out: dict[str, Interval] = {}
    for part in text.split(";"):
        part = part.strip()
        if not part:
            continue
        if "=" not in part:
            raise ValueError(f"bad box entry: {part!r}")
        var, rng = part.split("=", 1)
        rng = rng.strip()
        if not (rng.startswith("[") and rng.endswith("]")):
            raise ValueError(f"bad box range: {rng!r}")
        lo_text, hi_text = rng[1:-1].split(",", 1)
        out[var.strip()] = Interval(_parse_rational(lo_text), _parse_rational(hi_text))
    return out


def _witness_json(witness) -> dict[str, str]:
    return {name: str(value) for name, value in sorted(witness.items())}


def _verdict_json(v: Verdict) -> dict:
    out: dict = {"status": v.status.value}
    if v.witness:
        out["witness"] = _witness_json(v.witness)
    if v.reason is not None:
        out["reason"] = v.reason
    if v.side is not None:
        out["side"] = v.side
    return out


def exit_code_for(verdicts: Sequence[Verdict], errors: bool) -> int:
    """Exit code as a pure function of the verdict multiset."""
    if errors:
        return 3
    if any(v.status is Status.FALSIFIED for v in verdicts):
        return 1
    if any(v.status is Status.UNKNOWN for v in verdicts):
        return 2
    return 0


@dataclass
class CheckOptions:
    obligations: tuple[str, ...] = ()
    grid: Optional[dict[str, tuple[Fraction, ...]]] = None
    dnf_cap: int = 4096
    samples: int = 10000
    seed: int = 0
    box: Optional[dict[str, Interval]] = None
    deterministic: bool = False
    oracle: bool = False


def _engine_options(opts: CheckOptions) -> EngineOptions:
    return EngineOptions(
        dnf_cap=opts.dnf_cap, samples=opts.samples, seed=opts.seed, box=opts.box
    )


def _oracle_grid(obligation: Obligation, composed: ComposedContract, hint) -> FiniteGrid:
    """Assemble the full oracle grid: parent fields plus qualified child
    fields, falling back from a qualified name to its bare field name."""
    values: dict[str, tuple[Fraction, ...]] = {}

    def lookup(name: str) -> tuple[Fraction, ...]:
        if name in hint:
            return tuple(hint[name])
        if "." in name:
            bare = name.split(".", 1)[1]
            if bare in hint:
                return tuple(hint[bare])
        raise GridIncomplete([name])

    for f in composed.contract.subject.field_names():
        values[f] = lookup(f)
    for bname, contract in composed.bindings:
        for f in contract.subject.field_names():
            values[f"{bname}.{f}"] = lookup(f"{bname}.{f}")
    return FiniteGrid.of(values)


def _run_oracle(obligation: Obligation, composed: ComposedContract, hint, refinement: Verdict) -> dict:
    out: dict = {}
    try:
        grid = _oracle_grid(obligation, composed, hint)
    except GridIncomplete as exc:
        return {"skipped": str(exc)}
    try:
        concrete = interpret_composed_finite(composed, grid)
        abstract = interpret_finite(obligation.abstract, grid)
        finite = refines_finite(concrete, abstract)
        out["finite_refines"] = finite
        if refinement.status is Status.UNKNOWN:
            out["finite_cross_check"] = "skipped: refinement unknown"
        else:
            agrees = finite == (refinement.status is Status.PROVED)
            out["finite_cross_check"] = "agree" if agrees else "disagree"
    except GridIncomplete as exc:
        out["finite_cross_check"] = f"skipped: {exc}"
    try:
        parts = [c for _, c in composed.bindings]
        out["min_characterization"] = verify_min_characterization(
            composed, parts, obligation.operator, grid
        )
    except (GridTooLarge, GridIncomplete) as exc:
        out["min_characterization"] = f"skipped: {exc}"
    return out


def run_check(paths: Sequence[str], opts: CheckOptions) -> tuple[int, dict]:
    """Run the full pipeline and return (exit code, report)."""
    report: dict = {
        "tool": "sccheck",
        "version": __version__,
        "inputs": [],
        "config": {
            "seed": opts.seed,
            "samples": opts.samples,
            "dnf_cap": opts.dnf_cap,
            "deterministic": opts.deterministic,
            "oracle": opts.oracle,
        },
        "diagnostics": [],
        "obligations": [],
        "summary": {},
    }
    diagnostics: list[Diagnostic] = []
    documents = []
    for path in paths:
        if path == "-":
            text = sys.stdin.read()
        else:
            try:
                with open(path, "r", encoding="utf-8") as fh:
                    text = fh.read()
            except OSError as exc:
                diagnostics.append(Diagnostic("error", "io", f"cannot read {path}: {exc}"))
                continue
        digest = hashlib.sha256(text.encode("utf-8")).hexdigest()
        report["inputs"].append({"path": path, "sha256": digest})
        result = parse_only(text)
        diagnostics.extend(d.with_file(path) for d in result.diagnostics)
        documents.append(result.document)

    merged = merge_documents(documents)
    # locations in a merged multi-file document cannot be attributed to one
    # file; with a single input every later diagnostic belongs to it
    stamp = paths[0] if len(paths) == 1 else None

    def stamped(ds):
        return (d.with_file(stamp) if stamp and d.file is None else d for d in ds)

    diagnostics.extend(stamped(resolve_document(merged)))

    universe: Optional[Universe] = None
    if not has_errors(diagnostics):
        universe, more = elaborate(merged)
        diagnostics.extend(stamped(more))

    verdicts: list[Verdict] = []
    if universe is not None:
        selected = universe.obligations
        if opts.obligations:
            by_name = {o.name: o for o in selected}
            missing = [n for n in opts.obligations if n not in by_name]
            for n in missing:
                diagnostics.append(
                    Diagnostic("error", "unknown-obligation", f"no such obligation: {n}")
                )
            selected = [by_name[n] for n in opts.obligations if n in by_name]
        engine_opts = _engine_options(opts)
        for obligation in sorted(selected, key=lambda o: o.name):
            started = time.monotonic()
            entry: dict = {"name": obligation.name, "operator": obligation.operator.name}
            checks: list[dict] = []

            types_verdict = Verdict(Status.PROVED)
            checks.append({"kind": "types", "subject": obligation.name, "verdict": _verdict_json(types_verdict)})
            verdicts.append(types_verdict)

            referenced = [(name, contract) for name, contract in obligation.bindings]
            referenced.append((obligation.abstract.name, obligation.abstract))
            for _, contract in referenced:
                for kind, check in (("compatibility", check_compatibility), ("consistency", check_consistency)):
                    v = check(contract, engine_opts)
                    verdicts.append(v)
                    checks.append({"kind": kind, "subject": contract.name, "verdict": _verdict_json(v)})

            composed = compose_contracts(obligation.operator, obligation.bindings, engine_opts)
            entry["projection"] = composed.projection
            for kind, check in (("compatibility", check_compatibility), ("consistency", check_consistency)):
                v = check(composed, engine_opts)
                verdicts.append(v)
                checks.append({"kind": kind, "subject": composed.contract.name, "verdict": _verdict_json(v)})

            refinement = check_refinement(composed, obligation.abstract, engine_opts)
            verdicts.append(refinement)
            checks.append(
                {"kind": "refinement", "subject": obligation.abstract.name, "verdict": _verdict_json(refinement)}
            )
            entry["checks"] = checks

            hint: dict[str, tuple[Fraction, ...]] = dict(obligation.grid_hint or {})
            if opts.grid:
                hint.update(opts.grid)
            if opts.oracle and hint:
                entry["oracle"] = _run_oracle(obligation, composed, hint, refinement)

            entry["elapsed_s"] = 0.0 if opts.deterministic else round(time.monotonic() - started, 6)
            report["obligations"].append(entry)

    report["diagnostics"] = [
        {
            "severity": d.severity,
            "code": d.code,
            "message": d.message,
            "file": d.file,
            "line": d.loc.line if d.loc else None,
            "col": d.loc.col if d.loc else None,
            "expected": list(d.expected),
        }
        for d in diagnostics
    ]
    errors = has_errors(diagnostics)
    code = exit_code_for(verdicts, errors)
    report["summary"] = {
        "obligations": len(report["obligations"]),
        "proved": sum(1 for v in verdicts if v.status is Status.PROVED),
        "falsified": sum(1 for v in verdicts if v.status is Status.FALSIFIED),
        "unknown": sum(1 for v in verdicts if v.status is Status.UNKNOWN),
        "errors": sum(1 for d in diagnostics if d.severity == "error"),
    }
    report["exit_code"] = code
    return code, report


_MARKS = {"proved": "✓", "falsified": "✗", "unknown": "?"}


def render_text(report: dict) -> str:
    lines: list[str] = [f"sccheck {report['version']}"]
    for d in report["diagnostics"]:
        where = ""
        if d["file"]:
            where += f"{d['file']}:"
        if d["line"] is not None:
            where += f"{d['line']}:{d['col']}:"
        if where:
            where += " "
        lines.append(f"{where}{d['severity']}[{d['code']}]: {d['message']}")
    for ob in report["obligations"]:
        lines.append(f"== obligation {ob['name']} (operator {ob['operator']}, {ob['projection']})")
        for check in ob["checks"]:
            verdict = check["verdict"]
            mark = _MARKS[verdict["status"]]
            detail = verdict["status"]
            if "side" in verdict:
                detail += f" ({verdict['side']}-side)"
            if "witness" in verdict:
                witness = ", ".join(f"{k}={v}" for k, v in verdict["witness"].items())
                detail += f" witness: {witness}"
            if "reason" in verdict and verdict["status"] != "proved":
                detail += f" [{verdict['reason']}]"
            lines.append(f"  {mark} {check['kind']} {check['subject']}: {detail}")
        if "oracle" in ob:
            lines.append(f"  oracle: {json.dumps(ob['oracle'], sort_keys=True)}")
    s = report["summary"]
    lines.append(
        f"summary: {s.get('obligations', 0)} obligations, {s.get('proved', 0)} proved, "
        f"{s.get('falsified', 0)} falsified, {s.get('unknown', 0)} unknown, "
        f"{s.get('errors', 0)} errors"
    )
    return "\n".join(lines) + "\n"


def build_arg_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sccheck", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    check = sub.add_parser("check", help="check refinement obligations in spec files")
    check.add_argument("files", nargs="+", help="input .scspec files, or - for stdin")
    check.add_argument("--obligation", action="append", default=[], help="check only this obligation (repeatable)")
    check.add_argument("--grid", default=None, help='oracle grid, e.g. "r=0,1,2,3;u=0"')
    check.add_argument("--dnf-cap", type=int, default=4096)
    check.add_argument("--samples", type=int, default=10000)
    check.add_argument("--seed", type=int, default=0)
    check.add_argument("--box", default=None, help='sampling box, e.g. "r=[0,10];u=[-5,5]"')
    check.add_argument("--format", choices=("text", "json"), default="text")
    check.add_argument("--deterministic", action="store_true", help="zero timings for byte-identical reports")
    check.add_argument("--oracle", action="store_true", help="run finite-grid cross-checks where a grid is available")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_arg_parser().parse_args(argv)
    opts = CheckOptions(
        obligations=tuple(args.obligation),
        grid=parse_grid_flag(args.grid) if args.grid else None,
        dnf_cap=args.dnf_cap,
        samples=args.samples,
        seed=args.seed,
        box=parse_box_flag(args.box) if args.box else None,
        deterministic=args.deterministic,
        oracle=args.oracle,
    )
    code, report = run_check(args.files, opts)
    if args.format == "json":
        sys.stdout.write(json.dumps(report, indent=2, sort_keys=False) + "\n")
    else:
        sys.stdout.write(render_text(report))
    return code


if __name__ == "__main__":
    sys.exit(main())

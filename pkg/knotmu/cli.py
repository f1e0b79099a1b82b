"""Command-line front end.

Exit codes: 0 success, 1 malformed or invalid input, 2 unresolved degeneracy.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

from . import __version__
from .config import Settings, load_settings
from .conway_oracle import (
    GaussDiagram,
    alexander_from_gauss,
    alexander_polynomial,
    c2_alexander,
    c2_gauss,
    gauss_from_pd,
    parse_gauss,
    parse_pd,
)
from .corpus import listing
from .decker_model import DeckerDiagram, parse_diagram, serialize_diagram, validate
from .errors import KnotMuError, UnresolvedDegeneracyError
from .geom_core import perturb_diagram
from .mu2_engine import MuResult, mu2, stable_mu2
from .quadrisecant_engine import (
    PolyKnot,
    count_alternating_quadrisecants,
    parse_knot,
    perturb_knot,
    validate_knot,
)
from .render import render_diagram, save_svg
from .reports import InputIdentity, RunReport, failure_report, success_report

logger = logging.getLogger("knotmu.cli")

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_DEGENERATE = 2


class InvalidInput(KnotMuError):
    """Input parsed but failed validation."""


# ------------------------------
# Helpers
# ------------------------------
def _configure_logging(verbose: int, quiet: bool) -> None:
    level = logging.ERROR if quiet else (logging.WARNING, logging.INFO, logging.DEBUG)[min(verbose, 2)]
    logging.basicConfig(
        level=level,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        handlers=[logging.StreamHandler(sys.stderr)],
        force=True,
    )


def _settings(args: argparse.Namespace) -> Settings:
    return load_settings(
        path=Path(args.config) if args.config else None,
        eq_tol=args.tol_eq,
        sep_tol=args.tol_sep,
    )


def _load_diagram(path: Path, settings: Settings) -> DeckerDiagram:
    diagram = parse_diagram(path.read_text(encoding="utf-8"))
    report = validate(diagram, settings.tolerance)
    if not report.valid:
        first = report.violations[0]
        raise InvalidInput(f"{first.kind}: {first.message}")
    return diagram


def _load_knot(path: Path, settings: Settings) -> PolyKnot:
    knot = parse_knot(path.read_text(encoding="utf-8"))
    problems = validate_knot(knot, settings)
    if problems:
        raise InvalidInput(problems[0])
    return knot


def _emit(args: argparse.Namespace, report: RunReport, text: Callable[[], List[str]]) -> None:
    if args.json:
        if args.timing:
            report.elapsed_seconds = time.perf_counter() - args.started
        sys.stdout.write(report.to_json(include_timing=args.timing))
    elif not args.quiet:
        for line in text():
            print(line)


def _run(args: argparse.Namespace, command: str, body: Callable[[], int]) -> int:
    """Shared error handling: map library errors to exit codes and failure reports."""
    path = Path(args.path)
    try:
        identity = InputIdentity.of_file(path)
    except OSError as e:
        logger.error("Cannot read %s: %s", path, e)
        if args.json:
            sys.stdout.write(failure_report(command, InputIdentity(path=str(path), sha256=""), e).to_json())
        return EXIT_INVALID
    args.identity = identity
    args.started = time.perf_counter()
    try:
        return body()
    except UnresolvedDegeneracyError as e:
        logger.error("%s: %s", path, e)
        if args.json:
            sys.stdout.write(failure_report(command, identity, e).to_json())
        return EXIT_DEGENERATE
    except (KnotMuError, ValueError, OSError) as e:
        logger.error("%s: %s", path, e)
        if args.json:
            sys.stdout.write(failure_report(command, identity, e).to_json())
        else:
            print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID


def _cycle_lines(result: MuResult) -> List[str]:
    lines = [f"mu = {result.mu} (n4={result.n4}, n2={result.n2})"]
    for c in result.four_cycles:
        pts = "  ".join(f"{p.at.edge}@{p.at.t:.6f}({p.xy.x1:.6f}, {p.xy.x2:.6f})" for p in c.points)
        lines.append(f"  4-cycle: {pts}")
    for c in result.two_cycles:
        pts = "  ".join(f"{p.at.edge}@{p.at.t:.6f}({p.xy.x1:.6f}, {p.xy.x2:.6f})" for p in c.points)
        lines.append(f"  2-cycle: {pts}")
    if result.retries:
        lines.append(f"  resolved after {len(result.retries)} perturbation retries")
    return lines


# ------------------------------
# Commands
# ------------------------------
def cmd_mu2(args: argparse.Namespace) -> int:
    def body() -> int:
        settings = _settings(args)
        diagram = _load_diagram(Path(args.path), settings)
        if args.seed is not None:
            diagram = perturb_diagram(diagram, args.seed, args.magnitude or settings.stable_magnitude)
        if args.stable:
            stable = stable_mu2(diagram, trials=args.stable, settings=settings)
            result = stable.result
            payload = {**result.to_dict(include_solutions=True), "stable": stable.to_dict()}
            payload["mu"] = stable.mu
            report = success_report("mu2", args.identity, payload, stable.mu)
            lines = lambda: _cycle_lines(result)[:1] + [
                f"stable mu = {stable.mu} (votes 0:{stable.votes[0]} 1:{stable.votes[1]}, failed {len(stable.failed)})"
            ]
        else:
            result = mu2(diagram, settings)
            report = success_report("mu2", args.identity, result.to_dict(), result.mu)
            lines = lambda: _cycle_lines(result)
        _emit(args, report, lines)
        return EXIT_OK

    return _run(args, "mu2", body)


def cmd_quad(args: argparse.Namespace) -> int:
    def body() -> int:
        settings = _settings(args)
        knot = _load_knot(Path(args.path), settings)
        if args.seed is not None:
            knot = perturb_knot(knot, args.seed, (args.magnitude or settings.stable_magnitude) * max(knot.diameter, 1.0))
        count = count_alternating_quadrisecants(knot, settings, signed=not args.unsigned)
        report = success_report("quad", args.identity, count.to_dict(), count.parity)

        def lines() -> List[str]:
            out = []
            for q in count.quadrisecants:
                sign = "" if q.sign is None else f" sign={q.sign:+d}"
                params = ", ".join(f"{s:.6f}" for s in q.knot_params)
                out.append(f"  quadrisecant at s=({params}) order={''.join(map(str, q.line_order))}{sign}")
            if count.signed_total is not None:
                out.append(f"total = {count.signed_total} (count={count.count}, parity={count.parity})")
            else:
                out.append(f"count = {count.count}, parity = {count.parity}")
            return out

        _emit(args, report, lines)
        return EXIT_OK

    return _run(args, "quad", body)


def cmd_render(args: argparse.Namespace) -> int:
    def body() -> int:
        settings = _settings(args)
        diagram = _load_diagram(Path(args.path), settings)
        result = mu2(diagram, settings) if args.cycles else None
        target = save_svg(render_diagram(diagram, result, size=args.size), Path(args.out))
        payload: Dict[str, Any] = {"svg": str(target)}
        if result is not None:
            payload.update(result.to_dict(include_solutions=False))
        report = success_report("render", args.identity, payload, result.mu if result else None)
        _emit(args, report, lambda: [f"wrote {target}"])
        return EXIT_OK

    return _run(args, "render", body)


def cmd_validate(args: argparse.Namespace) -> int:
    def body() -> int:
        settings = _settings(args)
        diagram = parse_diagram(Path(args.path).read_text(encoding="utf-8"))
        report = validate(diagram, settings.tolerance)
        run = success_report("validate", args.identity, report.to_dict(), None)
        run.success = report.valid

        def lines() -> List[str]:
            if report.valid:
                return [f"{diagram.name}: valid"]
            return [f"{diagram.name}: invalid"] + [f"  {v.kind}: {v.message}" for v in report.violations]

        _emit(args, run, lines)
        return EXIT_OK if report.valid else EXIT_INVALID

    return _run(args, "validate", body)


def _read_gauss_or_pd(path: Path, fmt: Optional[str]) -> Dict[str, Any]:
    text = path.read_text(encoding="utf-8")
    kind = fmt or ("pd" if path.suffix == ".pd" else "gauss")
    if kind == "pd":
        pd = parse_pd(text)
        return {"gauss": gauss_from_pd(pd), "delta": alexander_polynomial(pd)}
    gd = parse_gauss(text)
    return {"gauss": gd, "delta": alexander_from_gauss(gd)}


def cmd_c2(args: argparse.Namespace) -> int:
    def body() -> int:
        data = _read_gauss_or_pd(Path(args.path), args.format)
        gd: GaussDiagram = data["gauss"]
        by_gauss = c2_gauss(gd)
        by_alexander = c2_alexander(data["delta"])
        if by_gauss != by_alexander:
            raise InvalidInput(f"c2 from the Gauss code ({by_gauss}) differs from c2 from the Alexander polynomial ({by_alexander})")
        result = {"c2": by_gauss, "alexander": str(data["delta"]), "crossings": gd.n}
        report = success_report("c2", args.identity, result, None)
        _emit(args, report, lambda: [f"c2 = {by_gauss}", f"alexander = {data['delta']}"])
        return EXIT_OK

    return _run(args, "c2", body)


def cmd_perturb(args: argparse.Namespace) -> int:
    def body() -> int:
        settings = _settings(args)
        diagram = _load_diagram(Path(args.path), settings)
        seed = 1 if args.seed is None else args.seed
        moved = perturb_diagram(diagram, seed, args.magnitude or settings.stable_magnitude)
        text = serialize_diagram(moved)
        if args.out:
            Path(args.out).write_text(text, encoding="utf-8")
            if not args.json and not args.quiet:
                print(f"wrote {args.out}")
        elif not args.json:
            sys.stdout.write(text)
        if args.json:
            report = success_report("perturb", args.identity, {"seed": seed, "out": args.out}, None)
            sys.stdout.write(report.to_json())
        return EXIT_OK

    return _run(args, "perturb", body)


def cmd_corpus(args: argparse.Namespace) -> int:
    rows = listing()
    if args.json:
        json.dump({"version": __version__, "entries": rows}, sys.stdout, indent=2, sort_keys=True)
        sys.stdout.write("\n")
        return EXIT_OK
    for row in rows:
        if row["kind"] == "diagram":
            sub = "" if row["n4"] is None else f" (n4={row['n4']}, n2={row['n2']})"
            print(f"diagram {row['name']:<6} mu={row['mu']}{sub}  [{row['provenance']}]  {row['path']}")
        else:
            print(f"knot    {row['name']:<6} c2={row['c2']:+d}  {row['path']}")
    return EXIT_OK


# ------------------------------
# Parser
# ------------------------------
def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="knotmu", description="Overcrossing-cycle invariant of 2-knots and classical cross-checks.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("--tol-eq", type=float, help="Equality tolerance [default: 1e-9]")
    ap.add_argument("--tol-sep", type=float, help="Separation tolerance [default: 1e-6]")
    ap.add_argument("--seed", type=int, help="Perturb the input deterministically with this seed first")
    ap.add_argument("--magnitude", type=float, help="Perturbation magnitude [default: engine stable_magnitude]")
    ap.add_argument("--config", help="TOML settings file (default: ./knotmu.toml or $KNOTMU_CONFIG)")
    ap.add_argument("--json", action="store_true", help="Emit a JSON run report on stdout")
    ap.add_argument("--timing", action="store_true", help="Include wall time in JSON reports")
    ap.add_argument("-v", "--verbose", action="count", default=0, help="More logging on stderr (repeatable)")
    ap.add_argument("--quiet", action="store_true", help="Only errors on stderr, no text on stdout")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mu2", help="Compute mu of a decker diagram")
    p.add_argument("path", help="Diagram file (.diagram)")
    p.add_argument("--stable", type=int, metavar="N", help="Majority vote over N perturbed copies (N odd)")
    p.set_defaults(func=cmd_mu2)

    p = sub.add_parser("quad", help="Count alternating quadrisecants of a polygonal knot")
    p.add_argument("path", help="Knot file (.knot)")
    p.add_argument("--unsigned", action="store_true", help="Skip sign computation; report count and parity only")
    p.set_defaults(func=cmd_quad)

    p = sub.add_parser("render", help="Write an SVG drawing of a diagram")
    p.add_argument("path", help="Diagram file (.diagram)")
    p.add_argument("out", help="Output SVG path")
    p.add_argument("--cycles", action="store_true", help="Compute mu and mark the cycles found")
    p.add_argument("--size", type=int, default=640, help="Canvas size in pixels [default: 640]")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("validate", help="Check a diagram file for structural violations")
    p.add_argument("path", help="Diagram file (.diagram)")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("c2", help="Second Conway coefficient from a Gauss or PD file")
    p.add_argument("path", help="Gauss (.gauss) or PD (.pd) file")
    p.add_argument("--format", choices=("gauss", "pd"), help="Override detection by suffix")
    p.set_defaults(func=cmd_c2)

    p = sub.add_parser("perturb", help="Write a deterministically perturbed diagram")
    p.add_argument("path", help="Diagram file (.diagram)")
    p.add_argument("-o", "--out", help="Output path (default: stdout)")
    p.set_defaults(func=cmd_perturb)

    p = sub.add_parser("corpus", help="List shipped diagrams and knots with expected values")
    p.set_defaults(func=cmd_corpus)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    _configure_logging(args.verbose, args.quiet)
    try:
        _settings(args)
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

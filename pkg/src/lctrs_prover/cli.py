"""Command line entry point."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass, field

from .frontend import ParseError, parse_file
from .proc_graph import DpGraph
from .prover import GRAPH_SCC, ConfigError, ProverConfig, prove, recheck

EXIT_YES, EXIT_OPEN, EXIT_USAGE = 0, 1, 2


@dataclass
class CliConfig:
    input: str
    solver: str | None = None
    solver_args: list[str] = field(default_factory=list)
    smt_timeout_ms: int = 10000
    timeout: float = 60.0
    format: str = "text"
    proof: str | None = None
    recheck: bool = False
    dump_graph: str | None = None
    jobs: int = 1
    reuse_session: bool = False

    def prover_config(self) -> ProverConfig:
        return ProverConfig(
            solver_path=self.solver,
            solver_args=self.solver_args or None,
            smt_timeout=self.smt_timeout_ms / 1000.0,
            timeout=self.timeout,
            jobs=self.jobs,
            reuse_session=self.reuse_session,
        )


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="lctrs-prover", description="Prove termination of a logically constrained rewriting system.")
    p.add_argument("input", metavar="FILE")
    p.add_argument("--solver", help="SMT solver binary (default: $LCTRS_SOLVER, then z3/cvc5 on PATH)")
    p.add_argument("--solver-arg", dest="solver_args", action="append", default=[], help="extra solver argument, repeatable")
    p.add_argument("--smt-timeout", dest="smt_timeout_ms", type=int, default=10000, metavar="MS", help="per-query timeout in milliseconds")
    p.add_argument("--timeout", type=float, default=60.0, metavar="SECONDS", help="global time budget")
    p.add_argument("--format", choices=("text", "json"), default="text", help="proof format on stdout")
    p.add_argument("--proof", metavar="PATH", help="also write the proof as JSON to PATH")
    p.add_argument("--recheck", action="store_true", help="re-validate the proof with fresh solver sessions")
    p.add_argument("--dump-graph", nargs="?", const="-", metavar="PATH", help="write dependency graphs in DOT (default: stderr)")
    p.add_argument("--jobs", type=int, default=1, help="parallel edge checks")
    p.add_argument("--reuse-session", action="store_true", help="keep one solver process alive")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _dump_graphs(proof, target: str):
    dots = [n.certificate.to_dot() for n in proof.walk() if n.step == GRAPH_SCC and isinstance(n.certificate, DpGraph)]
    text = "".join(dots)
    if target == "-":
        sys.stderr.write(text)
    else:
        with open(target, "w") as fh:
            fh.write(text)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, stream=sys.stderr)
    cfg = CliConfig(
        args.input, args.solver, args.solver_args, args.smt_timeout_ms, args.timeout,
        args.format, args.proof, args.recheck, args.dump_graph, args.jobs, args.reuse_session,
    )
    if cfg.timeout <= 0 or cfg.smt_timeout_ms <= 0:
        print("lctrs-prover: timeouts must be positive", file=sys.stderr)
        return EXIT_USAGE
    try:
        problem = parse_file(cfg.input)
    except OSError as e:
        print(f"lctrs-prover: cannot read {cfg.input}: {e.strerror or e}", file=sys.stderr)
        return EXIT_USAGE
    except ParseError as e:
        print(f"lctrs-prover: {cfg.input}: {e}", file=sys.stderr)
        return EXIT_USAGE
    pc = cfg.prover_config()
    try:
        verdict = prove(problem, pc)
    except ConfigError as e:
        print(f"lctrs-prover: {e}", file=sys.stderr)
        return EXIT_USAGE
    print(verdict.answer)
    if cfg.format == "json":
        print(json.dumps(verdict.proof.to_json(), indent=2))
    else:
        sys.stdout.write(verdict.proof.to_text())
    if cfg.proof:
        with open(cfg.proof, "w") as fh:
            json.dump(verdict.proof.to_json(), fh, indent=2)
    if cfg.dump_graph:
        _dump_graphs(verdict.proof, cfg.dump_graph)
    if verdict.reason:
        print(f"lctrs-prover: {verdict.reason}", file=sys.stderr)
    code = EXIT_YES if verdict.yes else EXIT_OPEN
    if cfg.recheck:
        report = recheck(verdict.proof, pc)
        print(str(report), file=sys.stderr)
        if not report.ok:
            code = EXIT_OPEN
    return code

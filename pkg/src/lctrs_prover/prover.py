"""The proof search: DP framework driver, proof trees and their re-validation."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Any, Union

from .dp import DpProblem, canonical, defined_symbols, generate_dps
from .frontend import LctrsProblem, format_rule
from .proc_graph import DpGraph, check_formula, cyclic_components, describe_edge, edge_formula, graph_processor
from .proc_redpair import RedPairCertificate, check_certificate, orient
from .proc_value import NotApplicable, ValueCertificate, check_value_certificate, value_criterion
from .smt import Solver, Unsat
from .theory import TheorySpec

log = logging.getLogger(__name__)

INITIAL_DP = "InitialDP"
GRAPH_SCC = "GraphScc"
VALUE_CRITERION = "ValueCriterion"
REDUCTION_PAIR = "ReductionPair"
FINISHED = "Finished"
UNSOLVED = "Unsolved"


class ConfigError(RuntimeError):
    pass


@dataclass
class ProverConfig:
    solver_path: str | None = None
    solver_args: list[str] | None = None
    smt_timeout: float = 10.0
    timeout: float = 60.0
    jobs: int = 1
    reuse_session: bool = False
    value_criterion: bool = True
    reduction_pair: bool = True

    def make_solver(self) -> Solver:
        try:
            return Solver(self.solver_path, self.solver_args, timeout=self.smt_timeout, reuse_session=self.reuse_session)
        except Exception as e:
            raise ConfigError(str(e)) from e


Certificate = Union[ValueCertificate, RedPairCertificate, DpGraph, None]


@dataclass
class ProofNode:
    step: str
    problem: Any  # LctrsProblem for InitialDP, DpProblem otherwise
    certificate: Certificate = None
    children: list["ProofNode"] = field(default_factory=list)
    note: str = ""

    def leaves(self):
        if not self.children:
            yield self
        for c in self.children:
            yield from c.leaves()

    def walk(self):
        yield self
        for c in self.children:
            yield from c.walk()

    @property
    def complete(self) -> bool:
        return all(n.step == FINISHED for n in self.leaves())

    # serialization

    def to_json(self) -> dict:
        return {
            "step": self.step,
            "problem": _problem_json(self.problem),
            "certificate": _certificate_json(self.certificate),
            "children": [c.to_json() for c in self.children],
            **({"note": self.note} if self.note else {}),
        }

    def to_text(self, indent: int = 0) -> str:
        pad = "  " * indent
        lines = [pad + self.headline()]
        for line in self._details():
            lines.append(pad + "    " + line)
        text = "\n".join(lines) + "\n"
        return text + "".join(c.to_text(indent + 1) for c in self.children)

    def headline(self) -> str:
        P = self.problem
        if self.step == INITIAL_DP:
            n = len(self.children[0].problem) if self.children else 0
            return f"{INITIAL_DP}: {len(P.rules)} rules, {n} dependency pairs"
        if self.step == GRAPH_SCC:
            g = self.certificate
            return f"{GRAPH_SCC}: {len(P)} pairs, {len(g.edges)} edges, {len(cyclic_components(g))} SCCs"
        if self.step == VALUE_CRITERION:
            c = self.certificate
            nu = ", ".join(f"nu({k}) = {v}" for k, v in c.projection.items())
            return f"{VALUE_CRITERION}: {nu}, ordering {c.ordering}, removes {_one_based(c.strict)}"
        if self.step == REDUCTION_PAIR:
            c = self.certificate
            return f"{REDUCTION_PAIR}: {c.mode}, removes {_one_based(c.strict)}"
        if self.step == FINISHED:
            return f"{FINISHED}: no pairs left"
        return f"{UNSOLVED}: {len(P)} pairs ({self.note})"

    def _details(self) -> list[str]:
        P = self.problem
        if self.step == INITIAL_DP:
            return [format_rule(r) for r in P.rules]
        out = [f"{i}: {p}" for i, p in enumerate(P.pairs, start=1)]
        c = self.certificate
        if self.step == GRAPH_SCC:
            out += [f"edge {describe_edge(ch)}" for _, ch in sorted(c.checks.items())]
        elif self.step == VALUE_CRITERION:
            out += [f"{o.kind} {o.pair + 1}: {o.text}  [{o.verdict}]" for o in c.obligations]
        elif self.step == REDUCTION_PAIR:
            out += [f"[{s.name}] = {c.interpretation.describe(s)}" for s in c.interpretation.coefficients]
        return out


def _one_based(ix) -> list[int]:
    return [i + 1 for i in ix]


def _problem_json(P) -> dict:
    if isinstance(P, LctrsProblem):
        return {"theory": P.theory.describe(), "rules": [format_rule(r) for r in P.rules]}
    return {"pairs": [str(p) for p in P.pairs], "rules": [format_rule(r) for r in P.rules]}


def _certificate_json(c) -> dict | None:
    if c is None:
        return None
    if isinstance(c, DpGraph):
        return {
            "nodes": len(c.nodes),
            "edges": [[i + 1, j + 1] for i, j in sorted(c.edges)],
            "checks": [
                {"source": k[0] + 1, "target": k[1] + 1, "formula": describe_edge(ch).split(": ", 1)[1], "result": str(ch.verdict)}
                for k, ch in sorted(c.checks.items())
            ],
            "sccs": [_one_based(comp) for comp in cyclic_components(c)],
        }
    return c.to_json()


@dataclass
class Verdict:
    answer: str  # YES, MAYBE or TIMEOUT
    proof: ProofNode
    reason: str = ""
    seconds: float = 0.0

    @property
    def yes(self) -> bool:
        return self.answer == "YES"


def _same_pairs(a: DpProblem, b: DpProblem) -> bool:
    return [canonical(p) for p in a.pairs] == [canonical(p) for p in b.pairs]


class _Search:
    def __init__(self, theory: TheorySpec, solver: Solver, config: ProverConfig, deadline: float):
        self.theory = theory
        self.solver = solver
        self.config = config
        self.deadline = deadline
        self.timed_out = False

    def out_of_time(self) -> bool:
        if time.monotonic() >= self.deadline:
            self.timed_out = True
        return self.timed_out

    def graph_node(self, P: DpProblem) -> tuple[ProofNode, list[DpProblem]]:
        g, subs = graph_processor(P, self.theory, self.solver, jobs=self.config.jobs, deadline=self.deadline)
        return ProofNode(GRAPH_SCC, P, g), subs

    def solve_components(self, node: ProofNode, subs: list[DpProblem]) -> ProofNode:
        if subs:
            node.children = [self.solve(s, graph_done=True) for s in subs]
        else:
            node.children = [ProofNode(FINISHED, node.problem.with_pairs(()))]
        return node

    def solve(self, P: DpProblem, graph_done: bool = False) -> ProofNode:
        if not P:
            return ProofNode(FINISHED, P)
        if self.out_of_time():
            return ProofNode(UNSOLVED, P, note="timeout")
        if not graph_done:
            node, subs = self.graph_node(P)
            if not (len(subs) == 1 and _same_pairs(subs[0], P)):
                return self.solve_components(node, subs)
        if self.config.value_criterion:
            try:
                P2, cert = value_criterion(P, self.theory, self.solver, self.deadline)
                return ProofNode(VALUE_CRITERION, P, cert, [self.solve(P2)])
            except NotApplicable as e:
                log.debug("value criterion: %s", e)
        if self.out_of_time():
            return ProofNode(UNSOLVED, P, note="timeout")
        if self.config.reduction_pair:
            try:
                P2, cert = orient(P, self.theory, self.solver, self.deadline)
                return ProofNode(REDUCTION_PAIR, P, cert, [self.solve(P2)])
            except NotApplicable as e:
                log.debug("reduction pair: %s", e)
        if self.out_of_time():
            return ProofNode(UNSOLVED, P, note="timeout")
        return ProofNode(UNSOLVED, P, note="no processor applies")


def prove(problem: LctrsProblem, config: ProverConfig | None = None, solver: Solver | None = None) -> Verdict:
    """Search for a termination proof; YES only when every branch is closed."""
    config = config or ProverConfig()
    own = solver is None
    solver = solver or config.make_solver()
    start = time.monotonic()
    try:
        search = _Search(problem.theory, solver, config, start + config.timeout)
        P = generate_dps(problem.rules)
        node, subs = search.graph_node(P)
        root = ProofNode(INITIAL_DP, problem, children=[search.solve_components(node, subs)])
    finally:
        if own:
            solver.close()
    elapsed = time.monotonic() - start
    if root.complete:
        return Verdict("YES", root, seconds=elapsed)
    if search.timed_out:
        return Verdict("TIMEOUT", root, "global time budget exhausted", elapsed)
    return Verdict("MAYBE", root, "some dependency pair problems remain open", elapsed)


# re-validation


@dataclass
class RecheckReport:
    failures: list[tuple[str, str]] = field(default_factory=list)
    complete: bool = True

    @property
    def ok(self) -> bool:
        return not self.failures

    def __bool__(self):
        return self.ok

    def fail(self, where: str, why: str):
        self.failures.append((where, why))

    def __str__(self):
        if self.ok:
            return "recheck OK" if self.complete else "recheck OK (proof has open problems)"
        return "recheck FAILED\n" + "\n".join(f"  at {w}: {m}" for w, m in self.failures)


def _expect_children(node: ProofNode, expected: list[DpProblem], where: str, report: RecheckReport):
    got = [c.problem for c in node.children]
    if len(got) != len(expected) or not all(_same_pairs(a, b) and a.rules == b.rules for a, b in zip(got, expected)):
        report.fail(where, f"{node.step} children do not match the recomputed sub-problems")


def _recheck_graph(node: ProofNode, theory: TheorySpec, solver: Solver, where: str, report: RecheckReport):
    P, g = node.problem, node.certificate
    if not isinstance(g, DpGraph) or len(g.nodes) != len(P.pairs) or list(g.nodes) != list(P.pairs):
        report.fail(where, "graph does not belong to the problem")
        return
    defined = defined_symbols(P.rules)
    n = len(P.pairs)
    for i in range(n):
        for j in range(n):
            if (i, j) in g.edges:
                continue
            phi, _ = edge_formula(P.pairs[i], P.pairs[j], theory, defined)
            if not isinstance(check_formula(phi, theory, solver.fresh()), Unsat):
                report.fail(where, f"edge {i + 1} -> {j + 1} omitted but not refuted")
    expected = [P.with_pairs(P.pairs[k] for k in comp) for comp in cyclic_components(g)]
    if expected:
        _expect_children(node, expected, where, report)
    elif not (len(node.children) == 1 and node.children[0].step == FINISHED):
        report.fail(where, "graph without SCCs must close with a single finished child")


def _recheck_node(node: ProofNode, theory: TheorySpec, solver: Solver, where: str, report: RecheckReport):
    step = node.step
    if step == FINISHED:
        if node.problem.pairs or node.children:
            report.fail(where, "finished node with pairs or children")
        return
    if step == UNSOLVED:
        report.complete = False
        if node.children:
            report.fail(where, "open node with children")
        return
    if step == GRAPH_SCC:
        _recheck_graph(node, theory, solver, where, report)
    elif step in (VALUE_CRITERION, REDUCTION_PAIR):
        P, cert = node.problem, node.certificate
        if step == VALUE_CRITERION:
            ok = isinstance(cert, ValueCertificate) and check_value_certificate(cert, P, theory, solver.fresh())
        else:
            ok = isinstance(cert, RedPairCertificate) and bool(cert.strict) and check_certificate(cert, P, theory, solver.fresh())
        if not ok:
            report.fail(where, f"{step} certificate rejected")
        else:
            _expect_children(node, [P.with_pairs(P.pairs[i] for i in cert.weak)], where, report)
    else:
        report.fail(where, f"unexpected step {step}")
        return
    for k, child in enumerate(node.children, start=1):
        _recheck_node(child, theory, solver, f"{where}.{k}", report)


def recheck(proof: ProofNode, config: ProverConfig | None = None, solver: Solver | None = None) -> RecheckReport:
    """Re-validate every step of a proof tree with fresh solver sessions."""
    report = RecheckReport()
    if proof.step != INITIAL_DP or not isinstance(proof.problem, LctrsProblem):
        report.fail("root", "proof must start from the rule system")
        return report
    own = solver is None
    solver = solver or (config or ProverConfig()).make_solver()
    try:
        problem = proof.problem
        if len(proof.children) != 1 or proof.children[0].step != GRAPH_SCC:
            report.fail("root", "initial DP step must be followed by the graph processor")
            return report
        dps = generate_dps(problem.rules)
        child = proof.children[0].problem
        if not (_same_pairs(child, dps) and child.rules == dps.rules):
            report.fail("root", "dependency pairs differ from the regenerated set")
        _recheck_node(proof.children[0], problem.theory, solver, "1", report)
    finally:
        if own:
            solver.close()
    return report

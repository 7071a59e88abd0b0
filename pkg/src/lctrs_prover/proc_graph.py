"""Dependency graph approximation and the SCC processor."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Hashable, Sequence

from .core import App, FreshNames, FunSymbol, Term, Var, is_logical_term, is_value
from .dp import DependencyPair, DpProblem, defined_symbols, fresh_copy
from .frontend import format_term
from .smt import Encoder, Sat, SmtQuery, SmtVerdict, Solver, Unknown, Unsat, logic_for, time_left
from .theory import TheorySpec, conj


def psi(
    s: Term,
    t: Term,
    L: set[Var] | frozenset[Var],
    defined: set[FunSymbol],
    theory: TheorySpec,
) -> Term:
    """Formula under which an instance of `s` may rewrite to the matching instance of `t`.

    Clauses are tried in order and the first that applies wins.
    """
    top, bottom = theory.boolean(True), theory.boolean(False)
    if isinstance(s, Var):
        if s not in L:
            return top
    else:
        f = s.symbol
        if f in defined:
            if not is_logical_term(s, L):
                return top
        elif f.is_calculation:
            if (isinstance(t, Var) or is_value(t)) and not is_logical_term(s, L):
                return top
        elif isinstance(t, Var) and t not in L:
            return top
        if f not in defined and isinstance(t, App) and t.symbol == f:
            return conj(theory, [psi(a, b, L, defined, theory) for a, b in zip(s.args, t.args)])
    if is_logical_term(s, L) and is_logical_term(t):
        same_head = isinstance(s, App) and isinstance(t, App) and s.symbol == t.symbol
        if not same_head:
            eq = theory.eq_symbol(s.sort)
            if eq is None:
                # no equality to state on this sort; keep the edge
                return top
            return App(eq, (s, t))
    return bottom


@dataclass(frozen=True)
class EdgeCheck:
    source: int
    target: int
    formula: Term
    verdict: SmtVerdict

    @property
    def present(self) -> bool:
        return not isinstance(self.verdict, Unsat)


@dataclass
class DpGraph:
    nodes: tuple[DependencyPair, ...]
    edges: set[tuple[int, int]] = field(default_factory=set)
    checks: dict[tuple[int, int], EdgeCheck] = field(default_factory=dict)

    def successors(self, i: int) -> list[int]:
        return sorted(j for (a, j) in self.edges if a == i)

    def to_dot(self) -> str:
        lines = ["digraph dependency_graph {"]
        for i, p in enumerate(self.nodes):
            label = str(p).replace('"', '\\"')
            lines.append(f'  n{i} [label="{i + 1}: {label}"];')
        for i, j in sorted(self.edges):
            lines.append(f"  n{i} -> n{j};")
        lines.append("}")
        return "\n".join(lines) + "\n"


def edge_formula(
    rho1: DependencyPair,
    rho2: DependencyPair,
    theory: TheorySpec,
    defined: set[FunSymbol] | None = None,
) -> tuple[Term, DependencyPair]:
    """The satisfiability condition for `rho1` followed by a fresh copy of `rho2`."""
    if defined is None:
        defined = set()
    names = FreshNames({x.name for x in rho1.variables()} | {x.name for x in rho2.variables()})
    rho2c = fresh_copy(rho2, names)
    L = rho1.lvar() | rho2c.lvar()
    phi = conj(theory, [rho1.constraint, rho2c.constraint, psi(rho1.rhs, rho2c.lhs, L, defined, theory)])
    return phi, rho2c


def _literal_bool(t: Term) -> bool | None:
    if isinstance(t, App) and t.symbol.is_value and t.symbol.name in ("true", "false"):
        return t.symbol.name == "true"
    return None


def check_formula(phi: Term, theory: TheorySpec, solver: Solver | None, timeout: float | None = None) -> SmtVerdict:
    lit = _literal_bool(phi)
    if lit is True:
        return Sat({})
    if lit is False:
        return Unsat()
    if solver is None:
        return Unknown("no solver")
    enc = Encoder(theory)
    body = enc.encode(phi)
    q = SmtQuery(logic_for(theory, nonlinear=enc.nonlinear), enc.declarations(), [body])
    return solver.check_sat(q, timeout)


def build_graph(
    P: DpProblem,
    theory: TheorySpec,
    solver: Solver | None,
    *,
    jobs: int = 1,
    deadline: float | None = None,
) -> DpGraph:
    """Edges wherever the edge formula is satisfiable or undecided."""
    defined = defined_symbols(P.rules)
    pairs = P.pairs
    n = len(pairs)
    formulas = {(i, j): edge_formula(pairs[i], pairs[j], theory, defined)[0] for i in range(n) for j in range(n)}

    def run(key):
        t = None if solver is None else time_left(solver, deadline)
        return key, check_formula(formulas[key], theory, solver, t)

    keys = sorted(formulas)
    if jobs > 1 and len(keys) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run, keys))
    else:
        results = [run(k) for k in keys]
    g = DpGraph(tuple(pairs))
    for (i, j), verdict in results:
        check = EdgeCheck(i, j, formulas[(i, j)], verdict)
        g.checks[(i, j)] = check
        if check.present:
            g.edges.add((i, j))
    return g


def tarjan_scc(nodes: Sequence[Hashable], successors) -> list[list]:
    """Strongly connected components, iteratively; each in discovery order."""
    index: dict = {}
    low: dict = {}
    on_stack: set = set()
    stack: list = []
    out: list[list] = []
    counter = 0
    for root in nodes:
        if root in index:
            continue
        work = [(root, iter(successors(root)))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(successors(w))))
                    advanced = True
                    break
                if w in on_stack:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == v:
                        break
                out.append(comp)
    return out


def cyclic_components(g: DpGraph) -> list[list[int]]:
    """Non-trivial SCCs (a lone node needs a self-edge), ordered by least member."""
    comps = tarjan_scc(range(len(g.nodes)), g.successors)
    keep = [sorted(c) for c in comps if len(c) > 1 or (c[0], c[0]) in g.edges]
    return sorted(keep)


def graph_processor(
    P: DpProblem,
    theory: TheorySpec,
    solver: Solver | None,
    *,
    jobs: int = 1,
    deadline: float | None = None,
) -> tuple[DpGraph, list[DpProblem]]:
    g = build_graph(P, theory, solver, jobs=jobs, deadline=deadline)
    subs = [P.with_pairs(P.pairs[i] for i in comp) for comp in cyclic_components(g)]
    return g, subs


def scc_processor(P: DpProblem, theory: TheorySpec, solver: Solver | None, **kw) -> list[DpProblem]:
    return graph_processor(P, theory, solver, **kw)[1]


def describe_edge(check: EdgeCheck) -> str:
    return f"{check.source + 1} -> {check.target + 1}: {format_term(check.formula)}  [{check.verdict}]"


"""The value criterion: project marked symbols to one argument and find a decrease."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable

from .core import INT, App, FunSymbol, Sort, Term, is_logical_term, variables
from .dp import DependencyPair, DpProblem
from .frontend import format_term
from .smt import Encoder, SmtVerdict, Solver, Unsat, logic_for, smt_and, smt_implies, time_left
from .theory import TheorySpec


class NotApplicable(Exception):
    pass


@dataclass(frozen=True)
class ValueOrdering:
    """A well-founded strict order on a carrier with a compatible quasi-order.

    `strict`/`weak` build SMT-LIB from two encoded operands; `holds_strict`/
    `holds_weak` decide the same relations on raw carrier integers (bits for
    bitvectors), for tests.
    """

    name: str
    sort: Sort
    strict: Callable[[str, str], str] = field(compare=False)
    weak: Callable[[str, str], str] = field(compare=False)
    holds_strict: Callable[[int, int], bool] = field(compare=False)
    holds_weak: Callable[[int, int], bool] = field(compare=False)
    strict_text: str = ">"
    weak_text: str = ">="


def ordering_catalog(theory: TheorySpec, sort: Sort) -> list[ValueOrdering]:
    if sort != INT:
        return []
    if theory.is_bitvector:
        return [
            ValueOrdering(
                "unsigned",
                INT,
                lambda a, b: f"(bvugt {a} {b})",
                lambda a, b: f"(bvuge {a} {b})",
                lambda a, b: a > b,
                lambda a, b: a >= b,
                ">u",
                ">=u",
            )
        ]
    return [
        ValueOrdering(
            "bounded-below",
            INT,
            lambda a, b: f"(and (> {a} {b}) (>= {a} 0))",
            lambda a, b: f"(>= {a} {b})",
            lambda a, b: a > b and a >= 0,
            lambda a, b: a >= b,
            "> (>= 0)",
            ">=",
        ),
        ValueOrdering(
            "bounded-above",
            INT,
            lambda a, b: f"(and (< {a} {b}) (<= {a} 0))",
            lambda a, b: f"(<= {a} {b})",
            lambda a, b: a < b and a <= 0,
            lambda a, b: a <= b,
            "< (<= 0)",
            "<=",
        ),
    ]


def ordering_compatible(ordering: ValueOrdering, theory: TheorySpec, solver: Solver) -> bool:
    """Validity of `a > b and b >= c  ==>  a > c` for the ordering."""
    s = "(_ BitVec %d)" % theory.width if theory.is_bitvector else "Int"
    decls = [("|a|", s), ("|b|", s), ("|c|", s)]
    body = smt_implies(
        smt_and([ordering.strict("|a|", "|b|"), ordering.weak("|b|", "|c|")]), ordering.strict("|a|", "|c|")
    )
    return isinstance(solver.check_valid_smt(body, decls, logic_for(theory)), Unsat)


@dataclass(frozen=True)
class Obligation:
    pair: int
    kind: str  # "strict" or "weak"
    text: str
    verdict: SmtVerdict

    @property
    def proven(self) -> bool:
        return isinstance(self.verdict, Unsat)


@dataclass
class ValueCertificate:
    sort: Sort
    ordering: str
    projection: dict[str, int]
    strict: list[int]
    weak: list[int]
    obligations: list[Obligation] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "sort": self.sort.name,
            "ordering": self.ordering,
            "projection": dict(self.projection),
            "strict": [i + 1 for i in self.strict],
            "weak": [i + 1 for i in self.weak],
            "obligations": [
                {"pair": o.pair + 1, "kind": o.kind, "formula": o.text, "result": str(o.verdict)}
                for o in self.obligations
            ],
        }


def project(t: App, nu: dict[FunSymbol, int]) -> Term:
    return t.args[nu[t.symbol] - 1]


def candidate_sorts(P: DpProblem, theory: TheorySpec) -> list[Sort]:
    seen: dict[Sort, None] = {}
    for sym in P.marked_symbols():
        for s in sym.arg_sorts:
            if theory.is_theory_sort(s):
                seen.setdefault(s, None)
    return list(seen)


def projections(P: DpProblem):
    syms = P.marked_symbols()
    if any(s.arity == 0 for s in syms):
        return
    for combo in itertools.product(*(range(1, s.arity + 1) for s in syms)):
        yield dict(zip(syms, combo))


class _Checker:
    def __init__(self, theory: TheorySpec, solver: Solver, deadline: float | None):
        self.theory = theory
        self.solver = solver
        self.deadline = deadline
        self.cache: dict[tuple, SmtVerdict] = {}

    def obligation(self, pair: DependencyPair, a: Term, b: Term, ordering: ValueOrdering, kind: str) -> SmtVerdict:
        key = (pair, a, b, ordering.name, kind)
        if key not in self.cache:
            enc = Encoder(self.theory)
            phi, ea, eb = enc.encode(pair.constraint), enc.encode(a), enc.encode(b)
            rel = ordering.strict(ea, eb) if kind == "strict" else ordering.weak(ea, eb)
            body = smt_implies(phi, rel)
            logic = logic_for(self.theory, nonlinear=enc.nonlinear)
            self.cache[key] = self.solver.check_valid_smt(
                body, enc.declarations(), logic, timeout=time_left(self.solver, self.deadline)
            )
        return self.cache[key]


def obligation_text(pair: DependencyPair, a: Term, b: Term, ordering: ValueOrdering, kind: str) -> str:
    rel = ordering.strict_text if kind == "strict" else ordering.weak_text
    return f"{format_term(pair.constraint)} ==> {format_term(a)} {rel} {format_term(b)}"


def _try(P: DpProblem, sort: Sort, ordering: ValueOrdering, nu: dict[FunSymbol, int], check: _Checker):
    strict: list[int] = []
    weak: list[int] = []
    obligations: list[Obligation] = []
    plan = []
    for i, rho in enumerate(P.pairs):
        a, b = project(rho.lhs, nu), project(rho.rhs, nu)
        a_logical = a.sort == sort and is_logical_term(a)
        if a_logical:
            if not (b.sort == sort and is_logical_term(b) and set(variables(b)) <= set(variables(a))):
                return None
        plan.append((i, rho, a, b, a_logical))
    if not any(al and is_logical_term(a, rho.lvar()) for _, rho, a, _, al in plan):
        return None
    for i, rho, a, b, a_logical in plan:
        if not a_logical:
            weak.append(i)
            continue
        if is_logical_term(a, rho.lvar()):
            v = check.obligation(rho, a, b, ordering, "strict")
            if isinstance(v, Unsat):
                strict.append(i)
                obligations.append(Obligation(i, "strict", obligation_text(rho, a, b, ordering, "strict"), v))
                continue
        v = check.obligation(rho, a, b, ordering, "weak")
        if not isinstance(v, Unsat):
            return None
        weak.append(i)
        obligations.append(Obligation(i, "weak", obligation_text(rho, a, b, ordering, "weak"), v))
    if not strict:
        return None
    return strict, weak, obligations


def value_criterion(
    P: DpProblem,
    theory: TheorySpec,
    solver: Solver,
    deadline: float | None = None,
) -> tuple[DpProblem, ValueCertificate]:
    """Remove the pairs whose projection strictly decreases; raises NotApplicable."""
    check = _Checker(theory, solver, deadline)
    for sort in candidate_sorts(P, theory):
        for ordering in ordering_catalog(theory, sort):
            for nu in projections(P):
                found = _try(P, sort, ordering, nu, check)
                if found is None:
                    continue
                strict, weak, obligations = found
                cert = ValueCertificate(sort, ordering.name, {s.name: k for s, k in nu.items()}, strict, weak, obligations)
                return P.with_pairs(P.pairs[i] for i in weak), cert
    raise NotApplicable("no projection and ordering yields a strict decrease")


def check_value_certificate(
    cert: ValueCertificate, P: DpProblem, theory: TheorySpec, solver: Solver
) -> bool:
    """Re-derive every condition of the certificate with fresh solver calls."""
    orderings = {o.name: o for o in ordering_catalog(theory, cert.sort)}
    ordering = orderings.get(cert.ordering)
    if ordering is None or not ordering_compatible(ordering, theory, solver):
        return False
    syms = {s.name: s for s in P.marked_symbols()}
    if set(syms) != set(cert.projection):
        return False
    nu = {}
    for name, k in cert.projection.items():
        if not 1 <= k <= syms[name].arity:
            return False
        nu[syms[name]] = k
    if sorted(cert.strict + cert.weak) != list(range(len(P.pairs))) or not cert.strict:
        return False
    check = _Checker(theory, solver, None)
    strict = set(cert.strict)
    for i, rho in enumerate(P.pairs):
        a, b = project(rho.lhs, nu), project(rho.rhs, nu)
        a_logical = a.sort == cert.sort and is_logical_term(a)
        if a_logical and not (
            b.sort == cert.sort and is_logical_term(b) and set(variables(b)) <= set(variables(a))
        ):
            return False
        if i in strict:
            if not (a_logical and is_logical_term(a, rho.lvar())):
                return False
            if not isinstance(check.obligation(rho, a, b, ordering, "strict"), Unsat):
                return False
        elif a_logical and not isinstance(check.obligation(rho, a, b, ordering, "weak"), Unsat):
            return False
    return True


"""Shared fixtures-free helpers: problem loading, random terms, the divergent corpus."""

from __future__ import annotations

import random
from dataclasses import dataclass
from pathlib import Path

from lctrs_prover.core import BOOL, INT, App, Term
from lctrs_prover.frontend import LctrsProblem, parse, parse_file, parse_term
from lctrs_prover.rewrite import find_redexes, step
from lctrs_prover.theory import TheorySpec

PROBLEMS = Path(__file__).resolve().parent.parent / "problems"


def load(name: str) -> LctrsProblem:
    return parse_file(PROBLEMS / f"{name}.lctrs")


def system(theory: str, signature: str, rules: list[str]) -> LctrsProblem:
    body = "\n".join(f"  {r} ;" for r in rules)
    return parse(f"THEORY {theory}\nSIGNATURE\n{signature}\nRULES\n{body}\n")


# random ground logical terms

INT_OPS = ["+", "-", "*", "neg"]
CMP_OPS = ["<=", "<", ">=", ">", "=", "!="]
BOOL_OPS = ["and", "or", "=>", "not", "beq"]


def random_logical(theory: TheorySpec, rng: random.Random, sort=INT, depth: int = 3, lo: int = -20, hi: int = 20) -> Term:
    """A ground logical term of `sort`; small values keep int products readable."""
    if depth == 0 or rng.random() < 0.25:
        if sort == BOOL:
            return theory.boolean(rng.random() < 0.5)
        return theory.value_term(theory.from_python(rng.randint(lo, hi)))
    d = depth - 1
    if sort == INT:
        op = rng.choice(INT_OPS)
        if op == "neg":
            return theory.op("-", random_logical(theory, rng, INT, d, lo, hi))
        return theory.op(op, random_logical(theory, rng, INT, d, lo, hi), random_logical(theory, rng, INT, d, lo, hi))
    if rng.random() < 0.5:
        op = rng.choice(CMP_OPS)
        return theory.op(op, random_logical(theory, rng, INT, d, lo, hi), random_logical(theory, rng, INT, d, lo, hi))
    op = rng.choice(BOOL_OPS)
    if op == "not":
        return theory.op("not", random_logical(theory, rng, BOOL, d, lo, hi))
    name = "=" if op == "beq" else op
    return theory.op(name, random_logical(theory, rng, BOOL, d, lo, hi), random_logical(theory, rng, BOOL, d, lo, hi))


def random_ground(problem: LctrsProblem, rng: random.Random, sort=INT, depth: int = 2, lo: int = 0, hi: int = 2) -> Term:
    """A well-sorted ground term mixing user symbols, arithmetic and values."""
    theory = problem.theory
    users = [s for s in problem.signature.values() if s.result_sort == sort and not s.in_theory]
    roll = rng.random()
    if depth == 0 or roll < 0.3:
        if sort == BOOL:
            return theory.boolean(rng.random() < 0.5)
        consts = [s for s in users if s.arity == 0]
        if consts and rng.random() < 0.3:
            return App(rng.choice(consts))
        return theory.value_term(theory.from_python(rng.randint(lo, hi)))
    if users and roll < 0.8:
        f = rng.choice(users)
        return App(f, [random_ground(problem, rng, s, depth - 1, lo, hi) for s in f.arg_sorts])
    if sort == INT:
        return theory.op("+", random_ground(problem, rng, INT, depth - 1, lo, hi), theory.literal(rng.randint(0, 1)))
    return theory.op("not", random_ground(problem, rng, BOOL, depth - 1, lo, hi))


# systems that do not terminate, each with a rewrite sequence that can be continued forever


@dataclass
class Divergent:
    name: str
    problem: LctrsProblem
    trace: list[str]  # successive terms, each one step from the previous
    cycle: bool  # trace returns to its first term


def divergent_corpus() -> list[Divergent]:
    out = []

    def add(name, theory, sig, rules, trace, cycle):
        out.append(Divergent(name, system(theory, sig, rules), trace, cycle))

    add("increment", "ints", "f : int -> int ;", ["f(x) -> f(x + 1)"], ["f(0)", "f(0 + 1)", "f(1)", "f(1 + 1)", "f(2)"], False)
    add("self-loop", "ints", "g : int -> int ;", ["g(x) -> g(x) [ true ]"], ["g(0)", "g(0)"], True)
    add(
        "ackermann-unbounded",
        "ints",
        "A : int * int -> int ;",
        ["A(m, n) -> A(m - 1, A(m, n - 1)) [ m != 0 and n != 0 ]", "A(0, n) -> n + 1", "A(m, 0) -> A(m - 1, 1) [ m != 0 ]"],
        ["A(0 - 1, 0)", "A(-1, 0)", "A(-1 - 1, 1)", "A(-2, 1)", "A(-2 - 1, A(-2, 1 - 1))", "A(-2 - 1, A(-2, 0))"],
        False,
    )
    add("swap", "ints", "h : int * int -> int ;", ["h(x, y) -> h(y, x)"], ["h(0, 1)", "h(1, 0)", "h(0, 1)"], True)
    add("countdown-past-zero", "ints", "loop : int -> int ;", ["loop(x) -> loop(x - 1) [ x != 0 ]"],
        ["loop(0 - 1)", "loop(-1)", "loop(-1 - 1)", "loop(-2)"], False)
    add("count-up", "ints", "count : int * int -> int ;", ["count(x, y) -> count(x + 1, y) [ x >= y ]"],
        ["count(0, 0)", "count(0 + 1, 0)", "count(1, 0)", "count(1 + 1, 0)", "count(2, 0)"], False)
    add("mutual", "ints", "p : int -> int ;\n  q : int -> int ;", ["p(x) -> q(x + 1)", "q(x) -> p(x - 1)"],
        ["p(0)", "q(0 + 1)", "q(1)", "p(1 - 1)", "p(0)"], True)
    add("wrapping-step", "bitvectors 8", "f : int -> int ;", ["f(x) -> f(x + 2) [ x != 1 ]"],
        ["f(126)", "f(126 + 2)", "f(-128)", "f(-128 + 2)", "f(-126)"], False)
    return out


def one_step(problem: LctrsProblem, s: Term, t: Term) -> bool:
    rules = problem.rules
    return any(step(s, r, rules, problem.theory) == t for r in find_redexes(s, rules, problem.theory))


def negative_literals(t: Term, theory: TheorySpec) -> Term:
    """Read `-n` on a literal as the negative value, as printed by the rewriter."""
    if not isinstance(t, App):
        return t
    if t.symbol.name == "-" and t.symbol.in_theory and len(t.args) == 1 and t.args[0].symbol.is_value:
        return theory.value_term(theory.from_python(-theory.to_python(t.args[0].symbol.value)))
    return App(t.symbol, [negative_literals(a, theory) for a in t.args])


def trace_terms(d: Divergent) -> list[Term]:
    return [negative_literals(parse_term(t, d.problem), d.problem.theory) for t in d.trace]


def can_continue(problem: LctrsProblem, t: Term) -> bool:
    return bool(find_redexes(t, problem.rules, problem.theory))

"""The constrained rewrite relation: rule steps plus calculations."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

from .core import App, Position, Substitution, Term, Var, apply_subst, is_ground, is_value, replace_at, subterm_at, variables
from .frontend import Rule, lvar
from .smt import Encoder, Sat, SmtQuery, Solver, is_valid, logic_for, model_value
from .theory import Bool, TheorySpec, TheoryValue


class InvalidRedex(ValueError):
    pass


@dataclass(frozen=True)
class RuleStep:
    rule_index: int
    subst: tuple[tuple[Var, Term], ...]

    @property
    def gamma(self) -> dict[Var, Term]:
        return dict(self.subst)


@dataclass(frozen=True)
class CalcStep:
    value: TheoryValue


@dataclass(frozen=True)
class Redex:
    position: Position
    kind: Union[RuleStep, CalcStep]


@dataclass(frozen=True)
class BudgetExhausted:
    term: Term
    steps: int


def match(pattern: Term, term: Term, gamma: dict[Var, Term] | None = None) -> dict[Var, Term] | None:
    """Syntactic matching; repeated pattern variables must meet equal subterms."""
    gamma = {} if gamma is None else dict(gamma)
    stack = [(pattern, term)]
    while stack:
        p, t = stack.pop()
        if isinstance(p, Var):
            if p.sort != t.sort:
                return None
            bound = gamma.get(p)
            if bound is None:
                gamma[p] = t
            elif bound != t:
                return None
        elif isinstance(t, App) and p.symbol == t.symbol:
            stack.extend(zip(p.args, t.args))
        else:
            return None
    return gamma


def respects(gamma: Substitution, rule: Rule, theory: TheorySpec, solver: Solver | None = None) -> bool:
    for x in lvar(rule):
        if x not in gamma or not is_value(gamma[x]):
            return False
    phi = apply_subst(rule.constraint, gamma)
    if is_ground(phi):
        return theory.evaluate(phi) == Bool(True)
    if solver is None:
        return False
    return is_valid(solver.check_validity(phi, theory))


def _instantiate_fresh(
    gamma: dict[Var, Term], rule: Rule, theory: TheorySpec, solver: Solver | None
) -> dict[Var, Term] | None:
    """Extend a lhs match to the rule's LVar, or None when no respecting extension is found."""
    lhs_vars = set(variables(rule.lhs))
    need = lvar(rule)
    for x in need & lhs_vars:
        if not is_value(gamma[x]):
            return None
    fresh = sorted(need - lhs_vars, key=lambda v: (v.name, v.sort.name))
    phi = apply_subst(rule.constraint, gamma)
    if not fresh:
        return gamma if theory.evaluate(phi) == Bool(True) else None
    if solver is None:
        return None
    enc = Encoder(theory)
    body = enc.encode(phi)
    for x in fresh:
        enc.declare(x)
    decls = enc.declarations()
    verdict = solver.check_sat(SmtQuery(logic_for(theory, nonlinear=enc.nonlinear), decls, [body], [n for n, _ in decls]))
    if not isinstance(verdict, Sat):
        return None
    out = dict(gamma)
    for x in fresh:
        v = model_value(verdict, x, theory)
        if v is None:
            return None
        out[x] = theory.value_term(v)
    return out


def redexes_at(
    t: Term, pos: Position, rules: Sequence[Rule], theory: TheorySpec, solver: Solver | None = None
) -> list[Redex]:
    if not isinstance(t, App):
        return []
    sym = t.symbol
    if sym.is_calculation:
        if all(is_value(a) for a in t.args):
            return [Redex(pos, CalcStep(theory.evaluate(t)))]
        return []
    out = []
    for i, rule in enumerate(rules):
        lhs = rule.lhs
        if not isinstance(lhs, App) or lhs.symbol != sym:
            continue
        gamma = match(lhs, t)
        if gamma is None:
            continue
        gamma = _instantiate_fresh(gamma, rule, theory, solver)
        if gamma is not None:
            out.append(Redex(pos, RuleStep(i, tuple(sorted(gamma.items(), key=lambda kv: (kv[0].name, kv[0].sort.name))))))
    return out


def find_redexes(s: Term, rules: Sequence[Rule], theory: TheorySpec, solver: Solver | None = None) -> list[Redex]:
    """All rule and calculation redexes of `s`, outside-in and left to right."""
    out: list[Redex] = []

    def walk(t: Term, pos: Position):
        out.extend(redexes_at(t, pos, rules, theory, solver))
        if isinstance(t, App):
            for i, a in enumerate(t.args, start=1):
                walk(a, pos + (i,))

    walk(s, ())
    return out


def step(s: Term, redex: Redex, rules: Sequence[Rule], theory: TheorySpec) -> Term:
    try:
        t = subterm_at(s, redex.position)
    except IndexError as e:
        raise InvalidRedex(str(e)) from None
    kind = redex.kind
    if isinstance(kind, CalcStep):
        if not (isinstance(t, App) and t.symbol.is_calculation and all(is_value(a) for a in t.args)):
            raise InvalidRedex("calculation needs a calculation symbol applied to values")
        if theory.evaluate(t) != kind.value:
            raise InvalidRedex("calculation result does not match")
        return replace_at(s, redex.position, theory.value_term(kind.value))
    if not 0 <= kind.rule_index < len(rules):
        raise InvalidRedex(f"no rule {kind.rule_index}")
    rule = rules[kind.rule_index]
    gamma = kind.gamma
    if apply_subst(rule.lhs, gamma) != t or not respects(gamma, rule, theory):
        raise InvalidRedex("substitution does not match a respecting instance of the rule")
    return replace_at(s, redex.position, apply_subst(rule.rhs, gamma))


def _innermost(t: Term, pos: Position, rules, theory, solver) -> Redex | None:
    if isinstance(t, App):
        for i, a in enumerate(t.args, start=1):
            r = _innermost(a, pos + (i,), rules, theory, solver)
            if r is not None:
                return r
    found = redexes_at(t, pos, rules, theory, solver)
    return found[0] if found else None


def normalize(
    s: Term,
    rules: Sequence[Rule],
    theory: TheorySpec,
    fuel: int,
    solver: Solver | None = None,
) -> Term | BudgetExhausted:
    """Leftmost-innermost rewriting until a normal form or `fuel` steps."""
    if fuel < 0:
        raise ValueError("fuel must be non-negative")
    steps = 0
    while True:
        r = _innermost(s, (), rules, theory, solver)
        if r is None:
            return s
        if steps == fuel:
            return BudgetExhausted(s, steps)
        s = step(s, r, rules, theory)
        steps += 1


def count_steps(s: Term, rules: Sequence[Rule], theory: TheorySpec, fuel: int) -> int | None:
    """Innermost steps to a normal form, or None when `fuel` runs out."""
    steps = 0
    while True:
        r = _innermost(s, (), rules, theory, None)
        if r is None:
            return steps
        if steps == fuel:
            return None
        s = step(s, r, rules, theory)
        steps += 1


def reachable(
    source: Term,
    target: Term,
    rules: Sequence[Rule],
    theory: TheorySpec,
    max_steps: int,
    max_terms: int = 5000,
) -> bool:
    """Breadth-first search for `source ->* target` over all redexes."""
    if source == target:
        return True
    frontier = [source]
    seen = {source}
    for _ in range(max_steps):
        nxt = []
        for t in frontier:
            for r in find_redexes(t, rules, theory):
                u = step(t, r, rules, theory)
                if u == target:
                    return True
                if u not in seen and len(seen) < max_terms:
                    seen.add(u)
                    nxt.append(u)
        if not nxt:
            return False
        frontier = nxt
    return False


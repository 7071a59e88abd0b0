"""Reduction pairs from linear integer interpretations.

Non-theory symbols get templates ``c0 + c1*x1 + ... + cn*xn``; theory symbols
keep their own meaning over the integers (booleans read as 0/1). A pair is
strictly oriented when ``phi ==> [l] > max(0, [r])`` holds for all variables
and weakly oriented when ``phi ==> [l] = [r]`` does.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

from .core import BOOL, INT, App, FunSymbol, Term, Var, is_logical_term, iter_subterms
from .dp import DpProblem
from .frontend import Rule, lvar
from .proc_value import NotApplicable
from .smt import Encoder, Sat, SmtQuery, Solver, Unsat, logic_for, quote, smt_implies, smt_int, smt_max0, time_left, var_name
from .theory import TheorySpec

log = logging.getLogger(__name__)

ALL_RULES_WEAK = "AllRulesWeak"
RULES_IGNORED = "RulesIgnored"


@dataclass
class PolyInterpretation:
    """Coefficients per symbol: ``(c0, (c1, ..., cn))``."""

    coefficients: dict[FunSymbol, tuple[int, tuple[int, ...]]] = field(default_factory=dict)

    def describe(self, sym: FunSymbol) -> str:
        c0, cs = self.coefficients[sym]
        names = [f"x{i}" for i in range(1, len(cs) + 1)]
        parts = []
        for c, x in zip(cs, names):
            if c == 0:
                continue
            parts.append(x if c == 1 else f"-{x}" if c == -1 else f"{c}*{x}")
        if c0 or not parts:
            parts.append(str(c0))
        text = " + ".join(parts).replace("+ -", "- ")
        return f"\\{' '.join(names)}. {text}" if names else text

    def to_json(self) -> dict:
        return {
            sym.name: {"constant": c0, "coefficients": list(cs), "polynomial": self.describe(sym)}
            for sym, (c0, cs) in self.coefficients.items()
        }


@dataclass
class RedPairCertificate:
    interpretation: PolyInterpretation
    strict: list[int]
    weak: list[int]
    mode: str

    def to_json(self) -> dict:
        return {
            "interpretation": self.interpretation.to_json(),
            "strict": [i + 1 for i in self.strict],
            "weak": [i + 1 for i in self.weak],
            "rules": self.mode,
        }


def rules_ignorable(P: DpProblem) -> bool:
    """Every pair's rhs arguments are logical terms over that pair's LVar."""
    for rho in P.pairs:
        L = rho.lvar()
        if not all(is_logical_term(a, L) for a in rho.rhs.args):
            return False
    return True


def template_symbols(terms: Iterable[Term]) -> list[FunSymbol]:
    seen: dict[FunSymbol, None] = {}
    for t in terms:
        for s in iter_subterms(t):
            if isinstance(s, App) and not s.symbol.in_theory:
                seen.setdefault(s.symbol, None)
    return list(seen)


def coefficient_name(sym: FunSymbol, k: int) -> str:
    return quote(f"c/{sym.name}/{k}")


class _Interp:
    """Builds the integer reading of terms under symbolic or concrete coefficients."""

    def __init__(self, theory: TheorySpec, coef: Callable[[FunSymbol, int], str]):
        self.theory = theory
        self.coef = coef

    def term(self, t: Term, lvars: set[Var], bound: dict[str, str]) -> str:
        if isinstance(t, Var):
            if t.sort == INT:
                name = var_name(t)
                bound[name] = "Int"
                return name
            if t.sort == BOOL and t in lvars:
                name = var_name(t)
                bound[name] = "Bool"
                return f"(ite {name} 1 0)"
            name = quote(f"{t.name}/{t.sort.name}/z")
            bound[name] = "Int"
            return name
        sym = t.symbol
        if sym.value is not None:
            v = self.theory.to_python(sym.value)
            return smt_int(int(v))
        args = [self.term(a, lvars, bound) for a in t.args]
        if not sym.in_theory:
            parts = [self.coef(sym, 0)] + [f"(* {self.coef(sym, k)} {a})" for k, a in enumerate(args, start=1)]
            return f"(+ {' '.join(parts)})" if len(parts) > 1 else parts[0]
        return _theory_reading(sym.name, args)

    def constraint(self, phi: Term, bound: dict[str, str]) -> str:
        enc = Encoder(self.theory)
        body = enc.encode(phi)
        bound.update(enc.decls)
        return body


def _truth(a: str) -> str:
    return f"(distinct {a} 0)"


def _theory_reading(name: str, args: list[str]) -> str:
    if name in ("+", "*"):
        return f"({name} {' '.join(args)})"
    if name == "-":
        return f"(- {args[0]} {args[1]})" if len(args) == 2 else f"(- 0 {args[0]})"
    if name in ("<=", "<", ">=", ">", "="):
        return f"(ite ({name} {args[0]} {args[1]}) 1 0)"
    if name == "!=":
        return f"(ite (distinct {args[0]} {args[1]}) 1 0)"
    if name == "and":
        return f"(ite (and {_truth(args[0])} {_truth(args[1])}) 1 0)"
    if name == "or":
        return f"(ite (or {_truth(args[0])} {_truth(args[1])}) 1 0)"
    if name == "=>":
        return f"(ite (or (= {args[0]} 0) {_truth(args[1])}) 1 0)"
    if name == "not":
        return f"(ite (= {args[0]} 0) 1 0)"
    raise ValueError(f"no integer reading for theory symbol {name}")


def _obligation(interp: _Interp, lhs: Term, rhs: Term, phi: Term, lvars: set[Var], kind: str) -> tuple[str, list[tuple[str, str]]]:
    """`phi ==> rel([lhs], [rhs])` and its universally bound variables."""
    bound: dict[str, str] = {}
    cond = interp.constraint(phi, bound)
    left = interp.term(lhs, lvars, bound)
    right = interp.term(rhs, lvars, bound)
    if kind == "strict":
        rel = f"(> {left} {smt_max0(right)})"
    else:
        rel = f"(= {left} {right})"
    return smt_implies(cond, rel), sorted(bound.items())


def _forall(body: str, bound: Sequence[tuple[str, str]]) -> str:
    if not bound:
        return body
    binders = " ".join(f"({n} {s})" for n, s in bound)
    return f"(forall ({binders}) {body})"


def _require_int_theory(theory: TheorySpec):
    if theory.is_bitvector:
        raise NotApplicable("polynomial interpretations are only offered over the integers")


def _mode_and_rules(P: DpProblem) -> tuple[str, list[Rule]]:
    if rules_ignorable(P):
        return RULES_IGNORED, []
    return ALL_RULES_WEAK, list(P.rules)


def _symbolic_query(P: DpProblem, theory: TheorySpec, strict: set[int], rules: list[Rule], syms: list[FunSymbol], bound: int | None) -> SmtQuery:
    interp = _Interp(theory, coefficient_name)
    assertions = []
    names = [coefficient_name(s, k) for s in syms for k in range(s.arity + 1)]
    if bound is not None:
        assertions += [f"(<= {-bound} {c} {bound})" for c in names]
    for i, rho in enumerate(P.pairs):
        body, binders = _obligation(interp, rho.lhs, rho.rhs, rho.constraint, rho.lvar(), "strict" if i in strict else "weak")
        assertions.append(_forall(body, binders))
    for rule in rules:
        body, binders = _obligation(interp, rule.lhs, rule.rhs, rule.constraint, lvar(rule), "weak")
        assertions.append(_forall(body, binders))
    return SmtQuery(logic_for(theory, quantified=True, nonlinear=True), [(c, "Int") for c in names], assertions, names)


def _read_model(model: dict, syms: list[FunSymbol]) -> PolyInterpretation | None:
    out = {}
    for s in syms:
        vals = [model.get(coefficient_name(s, k)) for k in range(s.arity + 1)]
        if any(v is None or isinstance(v, bool) for v in vals):
            return None
        out[s] = (vals[0], tuple(vals[1:]))
    return PolyInterpretation(out)


def orient(
    P: DpProblem,
    theory: TheorySpec,
    solver: Solver,
    deadline: float | None = None,
    bounds: Sequence[int | None] = (4, None),
    max_queries: int = 64,
) -> tuple[DpProblem, RedPairCertificate]:
    """Remove a greedily maximal set of strictly oriented pairs; raises NotApplicable."""
    _require_int_theory(theory)
    mode, rules = _mode_and_rules(P)
    syms = template_symbols([t for rho in P.pairs for t in (rho.lhs, rho.rhs)] + [t for r in rules for t in (r.lhs, r.rhs)])
    queries = 0
    for bound in bounds:
        strict: list[int] = []
        best: PolyInterpretation | None = None
        for i in range(len(P.pairs)):
            if queries >= max_queries:
                break
            cand = set(strict) | {i}
            q = _symbolic_query(P, theory, cand, rules, syms, bound)
            queries += 1
            verdict = solver.check_sat(q, time_left(solver, deadline))
            if isinstance(verdict, Sat):
                interp = _read_model(verdict.model, syms)
                if interp is None:
                    continue
                strict.append(i)
                best = interp
            else:
                log.debug("candidate %s: %s", sorted(cand), verdict)
        if best is not None:
            weak = [i for i in range(len(P.pairs)) if i not in strict]
            cert = RedPairCertificate(best, strict, weak, mode)
            return P.with_pairs(P.pairs[i] for i in weak), cert
    raise NotApplicable("no linear interpretation orients any pair strictly")


def check_certificate(cert: RedPairCertificate, P: DpProblem, theory: TheorySpec, solver: Solver) -> bool:
    """Re-prove every obligation with the certificate's concrete coefficients."""
    if theory.is_bitvector and P.pairs:
        return False
    n = len(P.pairs)
    if sorted(cert.strict + cert.weak) != list(range(n)):
        return False
    if cert.mode == RULES_IGNORED:
        if not rules_ignorable(P):
            return False
        rules: list[Rule] = []
    elif cert.mode == ALL_RULES_WEAK:
        rules = list(P.rules)
    else:
        return False
    coeffs = cert.interpretation.coefficients
    needed = template_symbols([t for rho in P.pairs for t in (rho.lhs, rho.rhs)] + [t for r in rules for t in (r.lhs, r.rhs)])
    for s in needed:
        if s not in coeffs or len(coeffs[s][1]) != s.arity:
            return False

    def coef(sym: FunSymbol, k: int) -> str:
        c0, cs = coeffs[sym]
        return smt_int(c0 if k == 0 else cs[k - 1])

    interp = _Interp(theory, coef)
    strict = set(cert.strict)
    jobs = [(rho.lhs, rho.rhs, rho.constraint, rho.lvar(), "strict" if i in strict else "weak") for i, rho in enumerate(P.pairs)]
    jobs += [(r.lhs, r.rhs, r.constraint, lvar(r), "weak") for r in rules]
    for lhs, rhs, phi, lvars, kind in jobs:
        body, binders = _obligation(interp, lhs, rhs, phi, lvars, kind)
        nonlinear = any(isinstance(s, App) and s.symbol.name == "*" and s.symbol.in_theory for t in (lhs, rhs) for s in iter_subterms(t))
        verdict = solver.check_valid_smt(body, binders, logic_for(theory, nonlinear=nonlinear))
        if not isinstance(verdict, Unsat):
            return False
    return True


def interpretation_of(mapping: dict[FunSymbol, tuple[int, Sequence[int]]]) -> PolyInterpretation:
    return PolyInterpretation({s: (c0, tuple(cs)) for s, (c0, cs) in mapping.items()})


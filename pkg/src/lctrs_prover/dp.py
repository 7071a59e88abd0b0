"""Dependency pairs and DP problems."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .core import DPSORT, App, FreshNames, FunSymbol, Position, Term, Var, rename, subterms_with_positions, variables
from .frontend import Rule, format_rule, lvar


def mark(sym: FunSymbol) -> FunSymbol:
    return FunSymbol(sym.name + "#", sym.arg_sorts, DPSORT, marked=True)


def mark_term(t: Term) -> App:
    if not isinstance(t, App):
        raise ValueError("only applications can be marked")
    return App(mark(t.symbol), t.args)


def defined_symbols(rules: Iterable[Rule]) -> set[FunSymbol]:
    return {r.lhs.symbol for r in rules if isinstance(r.lhs, App)}


@dataclass(frozen=True)
class DependencyPair:
    lhs: App
    rhs: App
    constraint: Term
    origin: tuple[int, Position] = field(default=(0, ()), compare=False)

    @property
    def rule(self) -> Rule:
        return Rule(self.lhs, self.rhs, self.constraint)

    def lvar(self) -> set[Var]:
        return lvar(self.rule)

    def variables(self) -> list[Var]:
        seen: dict[Var, None] = {}
        for t in (self.lhs, self.rhs, self.constraint):
            for x in variables(t):
                seen.setdefault(x, None)
        return list(seen)

    def renamed(self, mapping: dict[Var, Var]) -> "DependencyPair":
        return DependencyPair(
            rename(self.lhs, mapping), rename(self.rhs, mapping), rename(self.constraint, mapping), self.origin
        )

    def __str__(self):
        return format_rule(self.rule)


@dataclass(frozen=True)
class DpProblem:
    """A set of dependency pairs relative to a fixed rule set.

    `minimal` records that chains are assumed minimal; no processor here
    relies on it.
    """

    pairs: tuple[DependencyPair, ...]
    rules: tuple[Rule, ...]
    minimal: bool = True

    def __post_init__(self):
        object.__setattr__(self, "pairs", tuple(self.pairs))
        object.__setattr__(self, "rules", tuple(self.rules))

    def __len__(self):
        return len(self.pairs)

    def __bool__(self):
        return bool(self.pairs)

    def with_pairs(self, pairs: Iterable[DependencyPair]) -> "DpProblem":
        return DpProblem(tuple(pairs), self.rules, self.minimal)

    def marked_symbols(self) -> list[FunSymbol]:
        seen: dict[FunSymbol, None] = {}
        for p in self.pairs:
            seen.setdefault(p.lhs.symbol, None)
            seen.setdefault(p.rhs.symbol, None)
        return list(seen)


def dependency_pairs_of(rule: Rule, index: int, defined: set[FunSymbol]) -> list[DependencyPair]:
    lhs = mark_term(rule.lhs)
    out = []
    for pos, p in subterms_with_positions(rule.rhs):
        if isinstance(p, App) and p.symbol in defined:
            out.append(DependencyPair(lhs, mark_term(p), rule.constraint, (index, pos)))
    return out


def generate_dps(rules: Sequence[Rule]) -> DpProblem:
    defined = defined_symbols(rules)
    pairs = []
    for i, rule in enumerate(rules):
        pairs.extend(dependency_pairs_of(rule, i, defined))
    return DpProblem(tuple(pairs), tuple(rules))


def fresh_copy(pair: DependencyPair, names: FreshNames) -> DependencyPair:
    """A variant of `pair` whose variables come from `names`."""
    mapping = {x: names.fresh(x.name, x.sort) for x in pair.variables()}
    return pair.renamed(mapping)


def canonical(pair: DependencyPair) -> DependencyPair:
    """Variables renamed to _1, _2, ... in order of occurrence; equal iff variants."""
    mapping = {x: Var(f"_{i}", x.sort) for i, x in enumerate(pair.variables(), start=1)}
    return pair.renamed(mapping)

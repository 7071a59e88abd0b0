"""Many-sorted terms over a signature split into term and theory symbols."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterable, Iterator, Mapping, Sequence

if TYPE_CHECKING:
    from .theory import TheoryValue


@dataclass(frozen=True)
class Sort:
    name: str

    def __str__(self) -> str:
        return self.name


INT = Sort("int")
BOOL = Sort("bool")
DPSORT = Sort("dpsort")


@dataclass(frozen=True)
class FunSymbol:
    """A function symbol with its declared sort.

    Theory symbols carry `in_theory`; user-declared symbols carry `in_terms`.
    The two sets overlap only on values, which additionally carry the
    carrier element they denote.
    """

    name: str
    arg_sorts: tuple[Sort, ...]
    result_sort: Sort
    in_theory: bool = False
    in_terms: bool = True
    value: "TheoryValue | None" = None
    marked: bool = False

    def __post_init__(self):
        if not (self.in_theory or self.in_terms):
            raise ValueError(f"symbol {self.name} belongs to no signature part")
        if self.in_theory and self.in_terms and self.value is None:
            raise ValueError(f"symbol {self.name}: theory and term signatures overlap only on values")
        if self.value is not None and (self.arg_sorts or not self.in_theory):
            raise ValueError(f"value symbol {self.name} must be a nullary theory symbol")

    @property
    def arity(self) -> int:
        return len(self.arg_sorts)

    @property
    def is_value(self) -> bool:
        return self.value is not None

    @property
    def is_calculation(self) -> bool:
        return self.in_theory and self.value is None

    def __str__(self) -> str:
        return self.name


class Term:
    """Base of the two term shapes; instances are immutable."""

    __slots__ = ()

    sort: Sort


class Var(Term):
    __slots__ = ("name", "sort", "_hash")

    def __init__(self, name: str, sort: Sort):
        object.__setattr__(self, "name", name)
        object.__setattr__(self, "sort", sort)
        object.__setattr__(self, "_hash", hash(("var", name, sort)))

    def __setattr__(self, key, value):
        raise AttributeError("Var is immutable")

    def __eq__(self, other):
        return isinstance(other, Var) and self.name == other.name and self.sort == other.sort

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"Var({self.name!r}, {self.sort.name})"

    def __str__(self):
        return self.name


class App(Term):
    __slots__ = ("symbol", "args", "_hash")

    def __init__(self, symbol: FunSymbol, args: Sequence[Term] = ()):
        args = tuple(args)
        if len(args) != symbol.arity:
            raise SortError(f"{symbol.name} expects {symbol.arity} arguments, got {len(args)}")
        for i, (a, s) in enumerate(zip(args, symbol.arg_sorts), start=1):
            if a.sort != s:
                raise SortError(
                    f"argument {i} of {symbol.name} has sort {a.sort}, expected {s}"
                )
        object.__setattr__(self, "symbol", symbol)
        object.__setattr__(self, "args", args)
        object.__setattr__(self, "_hash", hash((symbol, args)))

    def __setattr__(self, key, value):
        raise AttributeError("App is immutable")

    @property
    def sort(self) -> Sort:
        return self.symbol.result_sort

    def __eq__(self, other):
        if self is other:
            return True
        return (
            isinstance(other, App)
            and self._hash == other._hash
            and self.symbol == other.symbol
            and self.args == other.args
        )

    def __hash__(self):
        return self._hash

    def __repr__(self):
        if not self.args:
            return f"App({self.symbol.name})"
        return f"App({self.symbol.name}, {list(self.args)!r})"

    def __str__(self):
        # Plain prefix form; the frontend has the infix pretty printer.
        if not self.args:
            return self.symbol.name
        return f"{self.symbol.name}({', '.join(map(str, self.args))})"


class SortError(Exception):
    pass


Substitution = Mapping[Var, Term]
Position = tuple[int, ...]


def const(symbol: FunSymbol) -> App:
    return App(symbol, ())


def is_var(t: Term) -> bool:
    return isinstance(t, Var)


def head(t: Term) -> FunSymbol | None:
    return t.symbol if isinstance(t, App) else None


def variables(t: Term) -> list[Var]:
    """Variables of `t` in order of first occurrence (left to right)."""
    seen: dict[Var, None] = {}
    stack = [t]
    while stack:
        s = stack.pop()
        if isinstance(s, Var):
            seen.setdefault(s, None)
        else:
            stack.extend(reversed(s.args))
    return list(seen)


def var_set(*terms: Term) -> set[Var]:
    out: set[Var] = set()
    for t in terms:
        out.update(variables(t))
    return out


def is_ground(t: Term) -> bool:
    return not variables(t)


def is_value(t: Term) -> bool:
    return isinstance(t, App) and t.symbol.is_value


def is_logical_term(s: Term, allowed_vars: Iterable[Var] | None = None) -> bool:
    """Membership in Terms(Sigma_theory, L); `allowed_vars=None` means all variables."""
    allowed = None if allowed_vars is None else set(allowed_vars)
    stack = [s]
    while stack:
        t = stack.pop()
        if isinstance(t, Var):
            if allowed is not None and t not in allowed:
                return False
        else:
            if not t.symbol.in_theory:
                return False
            stack.extend(t.args)
    return True


def apply_subst(s: Term, gamma: Substitution) -> Term:
    if not gamma:
        return s
    if isinstance(s, Var):
        return gamma.get(s, s)
    if not s.args:
        return s
    new_args = tuple(apply_subst(a, gamma) for a in s.args)
    if all(n is o for n, o in zip(new_args, s.args)):
        return s
    return App(s.symbol, new_args)


def compose(gamma: Substitution, delta: Substitution) -> dict[Var, Term]:
    """The substitution `s -> apply_subst(apply_subst(s, gamma), delta)`."""
    out = {x: apply_subst(t, delta) for x, t in gamma.items()}
    for x, t in delta.items():
        out.setdefault(x, t)
    return out


def check_substitution(gamma: Substitution) -> None:
    for x, t in gamma.items():
        if x.sort != t.sort:
            raise SortError(f"substitution maps {x} : {x.sort} to a term of sort {t.sort}")


def subterms_with_positions(s: Term) -> list[tuple[Position, Term]]:
    """All subterms, outside-in and left-to-right (pre-order), with 1-based paths."""
    out: list[tuple[Position, Term]] = []

    def walk(t: Term, pos: Position):
        out.append((pos, t))
        if isinstance(t, App):
            for i, a in enumerate(t.args, start=1):
                walk(a, pos + (i,))

    walk(s, ())
    return out


def iter_subterms(s: Term) -> Iterator[Term]:
    for _, t in subterms_with_positions(s):
        yield t


def subterm_at(s: Term, pos: Position) -> Term:
    for i in pos:
        if not isinstance(s, App) or not 1 <= i <= len(s.args):
            raise IndexError(f"invalid position {format_position(pos)}")
        s = s.args[i - 1]
    return s


def replace_at(s: Term, pos: Position, t: Term) -> Term:
    if not pos:
        if t.sort != s.sort:
            raise SortError(f"cannot replace a {s.sort} subterm by a {t.sort} term")
        return t
    if not isinstance(s, App) or not 1 <= pos[0] <= len(s.args):
        raise IndexError(f"invalid position {format_position(pos)}")
    i = pos[0] - 1
    args = list(s.args)
    args[i] = replace_at(args[i], pos[1:], t)
    return App(s.symbol, args)


def format_position(pos: Position) -> str:
    return ".".join(map(str, pos)) if pos else "ε"


def rename(t: Term, mapping: Mapping[Var, Var]) -> Term:
    return apply_subst(t, mapping)


@dataclass
class FreshNames:
    """Supplies variable names that avoid a growing set of used names."""

    used: set[str] = field(default_factory=set)
    counter: int = 0

    def fresh(self, base: str, sort: Sort) -> Var:
        stem = base.rstrip("'0123456789_") or "v"
        while True:
            self.counter += 1
            name = f"{stem}_{self.counter}"
            if name not in self.used:
                self.used.add(name)
                return Var(name, sort)


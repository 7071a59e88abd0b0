"""Built-in theories: booleans with unbounded integers or fixed-width bitvectors."""

from __future__ import annotations

import operator
from dataclasses import dataclass
from typing import Callable, Union

from .core import BOOL, INT, App, FunSymbol, Sort, Term, Var


class NotGroundLogical(ValueError):
    pass


@dataclass(frozen=True)
class Bool:
    b: bool

    def __str__(self):
        return "true" if self.b else "false"


@dataclass(frozen=True)
class Int:
    n: int

    def __str__(self):
        return str(self.n)


@dataclass(frozen=True)
class BitVec:
    width: int
    bits: int

    def __post_init__(self):
        if self.width <= 0:
            raise ValueError("bitvector width must be positive")
        if not 0 <= self.bits < (1 << self.width):
            raise ValueError(f"{self.bits} does not fit in {self.width} bits")

    @property
    def signed(self) -> int:
        if self.bits >> (self.width - 1):
            return self.bits - (1 << self.width)
        return self.bits

    @classmethod
    def wrap(cls, width: int, n: int) -> "BitVec":
        return cls(width, n % (1 << width))

    def __str__(self):
        return str(self.signed)


TheoryValue = Union[Bool, Int, BitVec]

INT_OPS = ("+", "-", "*")
INT_REL = ("<=", "<", ">=", ">")
BOOL_OPS = ("and", "or", "=>")


class TheorySpec:
    """One instantiation of the theory: carriers, symbols and their meaning.

    `ints` maps sort int to the mathematical integers; `bitvectors w` maps it
    to w-bit two's-complement words with wrapping arithmetic and signed
    comparisons. Sort bool is always present.
    """

    def __init__(self, name: str = "ints", width: int | None = None):
        if name == "ints":
            if width is not None:
                raise ValueError("the ints theory takes no width")
        elif name == "bitvectors":
            width = 16 if width is None else width
            if width <= 0:
                raise ValueError("bitvector width must be positive")
        else:
            raise ValueError(f"unknown theory {name!r}")
        self.name = name
        self.width = width
        self.sorts = (INT, BOOL)
        self._interp: dict[FunSymbol, Callable] = {}
        self._table: dict[tuple[str, int], list[FunSymbol]] = {}
        self._build()
        self.true = self.value_symbol(Bool(True))
        self.false = self.value_symbol(Bool(False))

    def __repr__(self):
        return f"TheorySpec({self.describe()!r})"

    def __eq__(self, other):
        return isinstance(other, TheorySpec) and (self.name, self.width) == (other.name, other.width)

    def __hash__(self):
        return hash((self.name, self.width))

    def describe(self) -> str:
        return self.name if self.width is None else f"{self.name} {self.width}"

    @property
    def is_bitvector(self) -> bool:
        return self.name == "bitvectors"

    def _add(self, name: str, args: tuple[Sort, ...], result: Sort, fn: Callable):
        sym = FunSymbol(name, args, result, in_theory=True, in_terms=False)
        self._interp[sym] = fn
        self._table.setdefault((name, len(args)), []).append(sym)

    def _build(self):
        ii, bb = (INT, INT), (BOOL, BOOL)
        if self.is_bitvector:
            w = self.width
            mask = (1 << w) - 1

            def sgn(a):
                return a - (1 << w) if a >> (w - 1) else a

            self._add("+", ii, INT, lambda a, b: (a + b) & mask)
            self._add("-", ii, INT, lambda a, b: (a - b) & mask)
            self._add("*", ii, INT, lambda a, b: (a * b) & mask)
            self._add("-", (INT,), INT, lambda a: (-a) & mask)
            for op, fn in zip(INT_REL, (operator.le, operator.lt, operator.ge, operator.gt)):
                self._add(op, ii, BOOL, lambda a, b, fn=fn: fn(sgn(a), sgn(b)))
        else:
            self._add("+", ii, INT, operator.add)
            self._add("-", ii, INT, operator.sub)
            self._add("*", ii, INT, operator.mul)
            self._add("-", (INT,), INT, operator.neg)
            for op, fn in zip(INT_REL, (operator.le, operator.lt, operator.ge, operator.gt)):
                self._add(op, ii, BOOL, fn)
        self._add("=", ii, BOOL, operator.eq)
        self._add("!=", ii, BOOL, operator.ne)
        self._add("and", bb, BOOL, lambda a, b: a and b)
        self._add("or", bb, BOOL, lambda a, b: a or b)
        self._add("=>", bb, BOOL, lambda a, b: (not a) or b)
        self._add("not", (BOOL,), BOOL, operator.not_)
        self._add("=", bb, BOOL, operator.eq)

    # symbol table

    def symbols(self) -> list[FunSymbol]:
        return [s for group in self._table.values() for s in group]

    def overloads(self, name: str, arity: int) -> list[FunSymbol]:
        return list(self._table.get((name, arity), ()))

    def lookup(self, name: str, arg_sorts: tuple[Sort, ...]) -> FunSymbol | None:
        for s in self._table.get((name, len(arg_sorts)), ()):
            if s.arg_sorts == tuple(arg_sorts):
                return s
        return None

    def op(self, name: str, *args: Term) -> App:
        sym = self.lookup(name, tuple(a.sort for a in args))
        if sym is None:
            raise KeyError(f"no theory symbol {name} on {[str(a.sort) for a in args]}")
        return App(sym, args)

    def eq_symbol(self, sort: Sort) -> FunSymbol | None:
        return self.lookup("=", (sort, sort))

    def is_theory_sort(self, sort: Sort) -> bool:
        return sort in self.sorts

    # values

    def value_symbol(self, v: TheoryValue) -> FunSymbol:
        if isinstance(v, Bool):
            sort = BOOL
        elif isinstance(v, Int):
            if self.is_bitvector:
                raise ValueError("integer value in a bitvector theory")
            sort = INT
        else:
            if not self.is_bitvector or v.width != self.width:
                raise ValueError(f"bitvector value of width {v.width} in theory {self.describe()}")
            sort = INT
        return FunSymbol(str(v), (), sort, in_theory=True, in_terms=True, value=v)

    def value_term(self, v: TheoryValue) -> App:
        return App(self.value_symbol(v))

    def from_python(self, x: int | bool) -> TheoryValue:
        if isinstance(x, bool):
            return Bool(x)
        if self.is_bitvector:
            return BitVec.wrap(self.width, x)
        return Int(x)

    def literal(self, n: int) -> App:
        """The value denoted by a non-negative integer literal of the input syntax."""
        if n < 0:
            raise ValueError("literals are non-negative")
        if self.is_bitvector and n >= (1 << self.width):
            raise ValueError(f"literal {n} does not fit in {self.width} bits")
        return self.value_term(self.from_python(n))

    def boolean(self, b: bool) -> App:
        return App(self.true if b else self.false)

    def to_python(self, v: TheoryValue):
        if isinstance(v, Bool):
            return v.b
        if isinstance(v, Int):
            return v.n
        return v.bits

    def wrap_raw(self, raw, sort: Sort) -> TheoryValue:
        if sort == BOOL:
            return Bool(bool(raw))
        if self.is_bitvector:
            return BitVec(self.width, raw)
        return Int(raw)

    def carrier_values(self, sort: Sort, lo: int, hi: int) -> list[TheoryValue]:
        """Values of `sort` whose (signed) integer reading lies in [lo, hi]."""
        if sort == BOOL:
            return [Bool(False), Bool(True)]
        return [self.from_python(n) for n in range(lo, hi + 1)]

    # evaluation

    def interpretation(self, sym: FunSymbol) -> Callable:
        return self._interp[sym]

    def evaluate(self, s: Term) -> TheoryValue:
        """The value of a ground logical term."""
        return self.wrap_raw(self._eval(s), s.sort)

    def _eval(self, s: Term):
        if isinstance(s, Var):
            raise NotGroundLogical(f"variable {s.name} in term handed to evaluate")
        sym = s.symbol
        if sym.value is not None:
            return self.to_python(sym.value)
        fn = self._interp.get(sym)
        if fn is None:
            raise NotGroundLogical(f"{sym.name} is not a theory symbol")
        return fn(*(self._eval(a) for a in s.args))

    def value_of(self, s: Term) -> App:
        return self.value_term(self.evaluate(s))


def builtin_symbols(spec: TheorySpec) -> list[FunSymbol]:
    return spec.symbols()


def conj(theory: TheorySpec, parts: list[Term]) -> Term:
    """Right-nested conjunction; `true` for no parts."""
    parts = [p for p in parts if not (isinstance(p, App) and p.symbol == theory.true)]
    if any(isinstance(p, App) and p.symbol == theory.false for p in parts):
        return theory.boolean(False)
    if not parts:
        return theory.boolean(True)
    out = parts[-1]
    for p in reversed(parts[:-1]):
        out = theory.op("and", p, out)
    return out

"""Reading and writing the textual `.lctrs` problem format.

A problem file has three sections::

    THEORY ints                      # or: THEORY bitvectors 16
    SIGNATURE
      sum : int * int -> int ;
    RULES
      sum(x, y) -> 0 [ x > y ] ;
      sum(x, y) -> x + sum(x + 1, y) [ x <= y ] ;

Identifiers that are not declared in the signature are rule variables; their
sorts are inferred per rule.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable

from .core import BOOL, DPSORT, INT, App, FunSymbol, Sort, SortError, Term, Var, is_logical_term, variables
from .theory import BitVec, Int, TheorySpec


class ParseError(Exception):
    pass


class InputSyntaxError(ParseError):
    def __init__(self, line: int, col: int, message: str):
        super().__init__(f"{line}:{col}: {message}")
        self.line = line
        self.col = col
        self.message = message


class RuleSortError(ParseError, SortError):
    def __init__(self, rule_index: int, explanation: str):
        super().__init__(f"rule {rule_index}: {explanation}")
        self.rule_index = rule_index
        self.explanation = explanation


class UnknownSymbol(ParseError):
    def __init__(self, name: str, detail: str = ""):
        super().__init__(f"unknown symbol {name}" + (f": {detail}" if detail else ""))
        self.name = name


@dataclass(frozen=True)
class Rule:
    lhs: Term
    rhs: Term
    constraint: Term

    def __str__(self):
        return format_rule(self)


def lvar(rule: Rule) -> set[Var]:
    """Variables that a respecting substitution must map to values."""
    lhs_vars = set(variables(rule.lhs))
    out = set(variables(rule.constraint))
    out.update(x for x in variables(rule.rhs) if x not in lhs_vars)
    return out


def lvar_ordered(rule: Rule) -> list[Var]:
    keep = lvar(rule)
    seen: dict[Var, None] = {}
    for t in (rule.lhs, rule.rhs, rule.constraint):
        for x in variables(t):
            if x in keep:
                seen.setdefault(x, None)
    return list(seen)


@dataclass
class LctrsProblem:
    theory: TheorySpec
    signature: dict[str, FunSymbol]
    rules: list[Rule] = field(default_factory=list)

    def symbols(self) -> list[FunSymbol]:
        return list(self.signature.values()) + self.theory.symbols()

    def __eq__(self, other):
        return (
            isinstance(other, LctrsProblem)
            and self.theory == other.theory
            and self.signature == other.signature
            and self.rules == other.rules
        )


# lexer

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>\#[^\n]*)
  | (?P<num>[0-9]+)
  | (?P<ident>[a-zA-Z_][a-zA-Z0-9_']*)
  | (?P<op>->|=>|!=|<=|>=|[-+*<>=()\[\],;:])
    """,
    re.VERBOSE,
)

KEYWORDS = {"THEORY", "SIGNATURE", "RULES"}
RESERVED = {"and", "or", "not", "true", "false"}


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int
    first_on_line: bool


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    line, line_start, pos = 1, 0, 0
    first = True
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise InputSyntaxError(line, pos - line_start + 1, f"unexpected character {text[pos]!r}")
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            line_start = m.end()
            first = True
        elif kind not in ("ws", "comment"):
            tokens.append(Token(kind, m.group(), line, pos - line_start + 1, first))
            first = False
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1, True))
    return tokens


# untyped syntax tree produced by the expression parser

@dataclass
class Node:
    kind: str  # "var", "num", "bool", "call", "op"
    name: str
    args: list["Node"]
    tok: Token
    slot: int = -1

    @property
    def where(self) -> str:
        return f"{self.tok.line}:{self.tok.col}"


_BINARY_LEVELS = [
    (("=>",), "right"),
    (("or",), "left"),
    (("and",), "left"),
    (("=", "!=", "<=", "<", ">=", ">"), "none"),
    (("+", "-"), "left"),
    (("*",), "left"),
]


class _Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0
        self.signature: dict[str, FunSymbol] = {}

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def error(self, message: str, tok: Token | None = None):
        tok = tok or self.tok
        return InputSyntaxError(tok.line, tok.col, message)

    def advance(self) -> Token:
        t = self.tok
        self.i += 1
        return t

    def at(self, text: str) -> bool:
        return self.tok.text == text and self.tok.kind in ("op", "ident")

    def expect(self, text: str) -> Token:
        if not self.at(text):
            found = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {found!r}")
        return self.advance()

    def keyword(self, word: str):
        t = self.tok
        if t.kind != "ident" or t.text != word:
            raise self.error(f"expected section keyword {word}")
        if not t.first_on_line:
            raise self.error(f"{word} must start its own line")
        self.advance()

    def identifier(self, what: str) -> Token:
        if self.tok.kind != "ident":
            raise self.error(f"expected {what}")
        return self.advance()

    # sections

    def problem(self) -> tuple[TheorySpec, dict[str, FunSymbol], list[tuple[Node, Node, Node | None, Token]]]:
        self.keyword("THEORY")
        tok = self.identifier("theory name")
        if tok.text == "ints":
            theory = TheorySpec("ints")
        elif tok.text == "bitvectors":
            if self.tok.kind != "num":
                raise self.error("expected bitvector width")
            width = int(self.advance().text)
            if width <= 0:
                raise self.error("bitvector width must be positive")
            theory = TheorySpec("bitvectors", width)
        else:
            raise self.error(f"unknown theory {tok.text!r}", tok)
        self.keyword("SIGNATURE")
        while not (self.tok.kind == "ident" and self.tok.text == "RULES"):
            if self.tok.kind == "eof":
                raise self.error("expected RULES section")
            self.declaration(theory)
        self.keyword("RULES")
        rules = []
        while self.tok.kind != "eof":
            start = self.tok
            lhs = self.expr()
            self.expect("->")
            rhs = self.expr()
            cond = None
            if self.at("["):
                self.advance()
                cond = self.expr()
                self.expect("]")
            self.expect(";")
            rules.append((lhs, rhs, cond, start))
        return theory, self.signature, rules

    def sort(self) -> Sort:
        tok = self.identifier("sort name")
        if tok.text == DPSORT.name:
            raise self.error("sort name dpsort is reserved", tok)
        if tok.text in KEYWORDS or tok.text in RESERVED:
            raise self.error(f"{tok.text} cannot name a sort", tok)
        return Sort(tok.text)

    def declaration(self, theory: TheorySpec):
        tok = self.identifier("symbol name")
        name = tok.text
        if name in KEYWORDS or name in RESERVED:
            raise self.error(f"{name} cannot be declared", tok)
        if name in self.signature:
            raise self.error(f"symbol {name} declared twice", tok)
        self.expect(":")
        args: list[Sort] = []
        if not self.at("->"):
            args.append(self.sort())
            while self.at("*"):
                self.advance()
                args.append(self.sort())
        self.expect("->")
        result = self.sort()
        self.expect(";")
        self.signature[name] = FunSymbol(name, tuple(args), result)

    # expressions

    def expr(self, level: int = 0) -> Node:
        if level == len(_BINARY_LEVELS):
            return self.unary()
        ops, assoc = _BINARY_LEVELS[level]
        left = self.expr(level + 1)
        if assoc == "right":
            if self.tok.text in ops and self.tok.kind in ("op", "ident"):
                tok = self.advance()
                right = self.expr(level)
                return Node("op", tok.text, [left, right], tok)
            return left
        while self.tok.text in ops and self.tok.kind in ("op", "ident"):
            tok = self.advance()
            right = self.expr(level + 1)
            left = Node("op", tok.text, [left, right], tok)
            if assoc == "none" and self.tok.text in ops and self.tok.kind in ("op", "ident"):
                raise self.error("comparison operators do not chain")
        return left

    def unary(self) -> Node:
        if self.at("not") or self.at("-"):
            tok = self.advance()
            return Node("op", tok.text, [self.unary()], tok)
        return self.atom()

    def atom(self) -> Node:
        tok = self.tok
        if tok.kind == "num":
            self.advance()
            return Node("num", tok.text, [], tok)
        if self.at("("):
            self.advance()
            e = self.expr()
            self.expect(")")
            return e
        if tok.kind == "ident":
            if tok.text in KEYWORDS:
                raise self.error(f"unexpected section keyword {tok.text}")
            if tok.text in ("true", "false"):
                self.advance()
                return Node("bool", tok.text, [], tok)
            if tok.text in RESERVED:
                raise self.error(f"unexpected {tok.text}")
            self.advance()
            if self.at("("):
                self.advance()
                args = []
                if not self.at(")"):
                    args.append(self.expr())
                    while self.at(","):
                        self.advance()
                        args.append(self.expr())
                self.expect(")")
                return Node("call", tok.text, args, tok)
            if tok.text in self.signature:
                return Node("call", tok.text, [], tok)
            return Node("var", tok.text, [], tok)
        raise self.error(f"unexpected {tok.text or 'end of input'!r}")


_ARITH = {"+", "-", "*"}
_REL = {"<=", "<", ">=", ">"}
_LOGIC = {"and", "or", "=>", "not"}


class _SortInference:
    """Union-find over sort slots for one rule."""

    def __init__(self, index: int, signature: dict[str, FunSymbol]):
        self.index = index
        self.signature = signature
        self.parent: list[int] = []
        self.fixed: dict[int, Sort] = {}
        self.var_slot: dict[str, int] = {}

    def slot(self, sort: Sort | None = None) -> int:
        self.parent.append(len(self.parent))
        s = len(self.parent) - 1
        if sort is not None:
            self.fixed[s] = sort
        return s

    def find(self, s: int) -> int:
        while self.parent[s] != s:
            self.parent[s] = self.parent[self.parent[s]]
            s = self.parent[s]
        return s

    def unify(self, a: int, b: int, node: Node):
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return
        sa, sb = self.fixed.get(ra), self.fixed.get(rb)
        if sa is not None and sb is not None and sa != sb:
            raise RuleSortError(self.index, f"at {node.where}: sort {sa} conflicts with sort {sb}")
        self.parent[ra] = rb
        if sa is not None:
            self.fixed[rb] = sa

    def sort_of(self, s: int) -> Sort:
        return self.fixed.get(self.find(s), INT)

    def visit(self, node: Node) -> int:
        node.slot = self._visit(node)
        return node.slot

    def _visit(self, node: Node) -> int:
        if node.kind == "var":
            if node.name not in self.var_slot:
                self.var_slot[node.name] = self.slot()
            return self.var_slot[node.name]
        if node.kind == "num":
            return self.slot(INT)
        if node.kind == "bool":
            return self.slot(BOOL)
        if node.kind == "call":
            sym = self.signature.get(node.name)
            if sym is None:
                raise UnknownSymbol(node.name, f"at {node.where}")
            if len(node.args) != sym.arity:
                raise RuleSortError(
                    self.index, f"at {node.where}: {sym.name} takes {sym.arity} arguments, got {len(node.args)}"
                )
            for a, s in zip(node.args, sym.arg_sorts):
                self.unify(self.visit(a), self.slot(s), a)
            return self.slot(sym.result_sort)
        op = node.name
        if op in _ARITH:
            for a in node.args:
                self.unify(self.visit(a), self.slot(INT), a)
            return self.slot(INT)
        if op in _REL:
            for a in node.args:
                self.unify(self.visit(a), self.slot(INT), a)
            return self.slot(BOOL)
        if op in _LOGIC:
            for a in node.args:
                self.unify(self.visit(a), self.slot(BOOL), a)
            return self.slot(BOOL)
        if op in ("=", "!="):
            left, right = (self.visit(a) for a in node.args)
            self.unify(left, right, node)
            return self.slot(BOOL)
        raise UnknownSymbol(op, f"at {node.where}")  # pragma: no cover


def _build(node: Node, inf: _SortInference, theory: TheorySpec) -> Term:
    if node.kind == "var":
        return Var(node.name, inf.sort_of(node.slot))
    if node.kind == "num":
        try:
            return theory.literal(int(node.name))
        except ValueError as e:
            raise RuleSortError(inf.index, f"at {node.where}: {e}") from None
    if node.kind == "bool":
        return theory.boolean(node.name == "true")
    args = [_build(a, inf, theory) for a in node.args]
    if node.kind == "call":
        return App(inf.signature[node.name], args)
    sym = theory.lookup(node.name, tuple(a.sort for a in args))
    if sym is None:
        sorts = " * ".join(str(a.sort) for a in args)
        raise RuleSortError(inf.index, f"at {node.where}: no theory symbol {node.name} on {sorts}")
    return App(sym, args)


def check_rule(rule: Rule, index: int = 0) -> None:
    if rule.lhs.sort != rule.rhs.sort:
        raise RuleSortError(index, f"lhs has sort {rule.lhs.sort} but rhs has sort {rule.rhs.sort}")
    if rule.constraint.sort != BOOL:
        raise RuleSortError(index, "constraint must have sort bool")
    if not is_logical_term(rule.constraint):
        raise RuleSortError(index, "constraint must be a logical term")
    if is_logical_term(rule.lhs):
        raise RuleSortError(index, "lhs is a logical term")
    if not (isinstance(rule.lhs, App) and not rule.lhs.symbol.in_theory):
        raise RuleSortError(index, "lhs must be headed by a declared symbol")


def parse(text: str | bytes) -> LctrsProblem:
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as e:
            raise ParseError(f"input is not UTF-8: {e.reason} at byte {e.start}") from None
    p = _Parser(text)
    theory, signature, raw_rules = p.problem()
    rules = []
    for index, (lhs, rhs, cond, _tok) in enumerate(raw_rules, start=1):
        inf = _SortInference(index, signature)
        ls, rs = inf.visit(lhs), inf.visit(rhs)
        inf.unify(ls, rs, rhs)
        if cond is not None:
            inf.unify(inf.visit(cond), inf.slot(BOOL), cond)
        try:
            rule = Rule(
                _build(lhs, inf, theory),
                _build(rhs, inf, theory),
                _build(cond, inf, theory) if cond is not None else theory.boolean(True),
            )
        except SortError as e:
            if isinstance(e, RuleSortError):
                raise
            raise RuleSortError(index, str(e)) from None
        check_rule(rule, index)
        rules.append(rule)
    return LctrsProblem(theory, signature, rules)


def parse_file(path) -> LctrsProblem:
    with open(path, "rb") as fh:
        return parse(fh.read())


# pretty printing

_LEVEL = {"=>": 1, "or": 2, "and": 3, "=": 4, "!=": 4, "<=": 4, "<": 4, ">=": 4, ">": 4, "+": 5, "-": 5, "*": 6}
_UNARY = 7
_ATOM = 8


def _value_text(sym: FunSymbol) -> str:
    v = sym.value
    if isinstance(v, (Int, BitVec)):
        return str(v)
    return sym.name


def _fmt(t: Term) -> tuple[str, int]:
    if isinstance(t, Var):
        return t.name, _ATOM
    sym = t.symbol
    if sym.is_value:
        text = _value_text(sym)
        return text, (_UNARY if text.startswith("-") else _ATOM)
    if sym.in_theory:
        if len(t.args) == 1:
            inner, lvl = _fmt(t.args[0])
            if lvl < _UNARY:
                inner = f"({inner})"
            sep = " " if sym.name == "not" else ""
            return f"{sym.name}{sep}{inner}", _UNARY
        level = _LEVEL[sym.name]
        (ltext, llvl), (rtext, rlvl) = _fmt(t.args[0]), _fmt(t.args[1])
        if sym.name == "=>":
            lneed, rneed = level + 1, level
        elif level == 4:
            lneed = rneed = level + 1
        else:
            lneed, rneed = level, level + 1
        if llvl < lneed:
            ltext = f"({ltext})"
        if rlvl < rneed:
            rtext = f"({rtext})"
        return f"{ltext} {sym.name} {rtext}", level
    if not t.args:
        return sym.name, _ATOM
    return f"{sym.name}({', '.join(format_term(a) for a in t.args)})", _ATOM


def format_term(t: Term) -> str:
    return _fmt(t)[0]


def _is_true(t: Term) -> bool:
    return isinstance(t, App) and t.symbol.is_value and t.symbol.name == "true"


def format_rule(rule: Rule, arrow: str = "->") -> str:
    text = f"{format_term(rule.lhs)} {arrow} {format_term(rule.rhs)}"
    if not _is_true(rule.constraint):
        text += f" [ {format_term(rule.constraint)} ]"
    return text


def _format_decl(sym: FunSymbol) -> str:
    args = " * ".join(s.name for s in sym.arg_sorts)
    return f"{sym.name} : {args + ' ' if args else ''}-> {sym.result_sort.name} ;"


def format_problem(problem: LctrsProblem) -> str:
    lines = [f"THEORY {problem.theory.describe()}", "SIGNATURE"]
    lines += [f"  {_format_decl(s)}" for s in problem.signature.values()]
    lines.append("RULES")
    lines += [f"  {format_rule(r)} ;" for r in problem.rules]
    return "\n".join(lines) + "\n"


def parse_term(text: str, problem: LctrsProblem, var_sorts: dict[str, Sort] | None = None) -> Term:
    """Parse a single term against a problem's signature."""
    p = _Parser(text)
    p.signature = problem.signature
    node = p.expr()
    if p.tok.kind != "eof":
        raise p.error("trailing input after term")
    inf = _SortInference(0, problem.signature)
    inf.visit(node)
    for name, sort in (var_sorts or {}).items():
        if name in inf.var_slot:
            inf.unify(inf.var_slot[name], inf.slot(sort), node)
    return _build(node, inf, problem.theory)


def rules_from(problem: LctrsProblem, texts: Iterable[str]) -> list[Rule]:
    """Parse extra rule lines against an existing problem's signature."""
    body = format_problem(LctrsProblem(problem.theory, problem.signature, []))
    body += "".join(f"  {t} ;\n" for t in texts)
    return parse(body).rules

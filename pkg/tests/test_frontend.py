import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import PROBLEMS, load, system
from lctrs_prover.core import BOOL, INT, App, FunSymbol, Sort, Var
from lctrs_prover.frontend import (
    InputSyntaxError,
    LctrsProblem,
    ParseError,
    Rule,
    RuleSortError,
    UnknownSymbol,
    format_problem,
    format_rule,
    format_term,
    lvar,
    parse,
    parse_term,
)
from lctrs_prover.theory import TheorySpec


def test_golden_files_parse():
    ack = load("ackermann")
    assert ack.theory == TheorySpec("bitvectors", 16)
    assert list(ack.signature) == ["A"]
    assert len(ack.rules) == 3
    assert format_rule(ack.rules[0]) == "A(m, n) -> A(m - 1, A(m, n - 1)) [ m != 0 and n != 0 ]"
    s = load("sum")
    assert format_rule(s.rules[1]) == "sum(x, y) -> x + sum(x + 1, y) [ x <= y ]"
    assert load("negate").rules[0].constraint == s.theory.op(">", Var("x", INT), s.theory.literal(0))


@pytest.mark.parametrize("name", ["ackermann", "sum", "negate"])
def test_golden_round_trip(name):
    p = load(name)
    assert parse(format_problem(p)) == p


def test_missing_constraint_means_true():
    p = load("ackermann")
    assert p.rules[1].constraint == p.theory.boolean(True)


def test_precedence_and_associativity():
    p = system("ints", "f : int -> int ;", ["f(x) -> f(x - 1 - 2 * x) [ x > 0 or x < 0 and not (x = 1) => x >= 2 ]"])
    r = p.rules[0]
    T = p.theory
    x = Var("x", INT)
    lit = T.literal
    assert r.rhs.args[0] == T.op("-", T.op("-", x, lit(1)), T.op("*", lit(2), x))
    left = T.op("or", T.op(">", x, lit(0)), T.op("and", T.op("<", x, lit(0)), T.op("not", T.op("=", x, lit(1)))))
    assert r.constraint == T.op("=>", left, T.op(">=", x, lit(2)))
    assert parse(format_problem(p)) == p


def test_variable_sorts_are_inferred():
    p = system("ints", "ite : bool * int * int -> int ;", ["ite(b, x, y) -> x [ b ]", "ite(b, x, y) -> y [ not b ]"])
    r = p.rules[0]
    assert Var("b", BOOL) in lvar(r)
    assert r.lhs.args[0].sort == BOOL


def test_user_sorts():
    p = system("ints", "nil : -> list ;\n  cons : int * list -> list ;\n  len : list -> int ;",
               ["len(nil) -> 0", "len(cons(x, l)) -> 1 + len(l)"])
    assert p.rules[1].lhs.args[0].sort == Sort("list")


def test_syntax_error_location():
    with pytest.raises(InputSyntaxError) as e:
        parse("THEORY ints\nSIGNATURE\n  f : int -> int ;\nRULES\n  f(x) -> f(x $ 1) ;\n")
    assert e.value.line == 5
    assert e.value.col == 15


def test_sort_errors():
    with pytest.raises(RuleSortError) as e:
        system("ints", "f : int -> int ;", ["f(x) -> true"])
    assert e.value.rule_index == 1
    with pytest.raises(RuleSortError):
        system("ints", "f : int -> int ;", ["f(x) -> x [ f(x) > 0 ]"])
    with pytest.raises(RuleSortError):
        system("ints", "f : int -> int ;", ["x + 1 -> x"])


def test_unknown_symbol():
    with pytest.raises(UnknownSymbol):
        system("ints", "f : int -> int ;", ["f(x) -> g(x)"])


def test_bad_input_reports_parse_error():
    for text in ["", "THEORY reals\n", "THEORY ints\nSIGNATURE\n f : int -> int ;\n", b"\xff\xfe"]:
        with pytest.raises(ParseError):
            parse(text)


def test_bitvector_literals_are_bounded():
    with pytest.raises(ParseError):
        system("bitvectors 8", "f : int -> int ;", ["f(x) -> f(256)"])
    p = system("bitvectors 8", "f : int -> int ;", ["f(x) -> f(255)"])
    assert p.rules[0].rhs.args[0].symbol.value.signed == -1


def test_negative_values_reparse_to_the_same_value():
    p = load("sum")
    T = p.theory
    t = T.value_term(T.from_python(-3))
    assert format_term(t) == "-3"
    back = parse_term(format_term(App(p.signature["sum"], (t, T.literal(2)))), p)
    assert T.evaluate(back.args[0]) == T.from_python(-3)


# random problems survive printing and parsing

T = TheorySpec("ints")
F = FunSymbol("f", (INT, INT), INT)
G = FunSymbol("g", (INT,), INT)
SIG = {"f": F, "g": G}
X, Y = Var("x", INT), Var("y", INT)
lits = st.integers(0, 9).map(T.literal)


def int_terms():
    leaf = st.one_of(st.sampled_from([X, Y]), lits)

    def extend(c):
        return st.one_of(
            st.tuples(st.sampled_from(["+", "-", "*"]), c, c).map(lambda p: T.op(*p)),
            c.map(lambda a: T.op("-", a)),
            st.tuples(c, c).map(lambda p: App(F, p)),
            c.map(lambda a: App(G, (a,))),
        )

    return st.recursive(leaf, extend, max_leaves=6)


def logical(c):
    return st.recursive(c, lambda c: st.tuples(st.sampled_from(["+", "-", "*"]), c, c).map(lambda p: T.op(*p)), max_leaves=4)


def constraints():
    arith = logical(st.one_of(st.sampled_from([X, Y]), lits))
    atom = st.tuples(st.sampled_from(["<=", "<", ">=", ">", "=", "!="]), arith, arith).map(lambda p: T.op(*p))
    return st.recursive(
        st.one_of(atom, st.booleans().map(T.boolean)),
        lambda c: st.one_of(
            st.tuples(st.sampled_from(["and", "or", "=>", "="]), c, c).map(lambda p: T.op(*p)),
            c.map(lambda a: T.op("not", a)),
        ),
        max_leaves=4,
    )


rules = st.builds(Rule, st.just(App(F, (X, Y))), int_terms(), constraints())


@settings(max_examples=150, deadline=None)
@given(st.lists(rules, min_size=1, max_size=4))
def test_random_round_trip(rs):
    p = LctrsProblem(T, dict(SIG), rs)
    assert parse(format_problem(p)) == p


def test_problem_files_exist():
    assert sorted(f.name for f in PROBLEMS.glob("*.lctrs")) == ["ackermann.lctrs", "negate.lctrs", "sum.lctrs"]

"""End-to-end acceptance checks; each test carries one numbered criterion."""

import itertools
import random
import time

import pytest

from helpers import divergent_corpus, load, one_step, random_logical, system, trace_terms, can_continue
from lctrs_prover.core import BOOL, INT, apply_subst, variables
from lctrs_prover.dp import canonical, defined_symbols, generate_dps
from lctrs_prover.frontend import format_rule, format_term
from lctrs_prover.proc_graph import build_graph, edge_formula
from lctrs_prover.proc_redpair import RULES_IGNORED, RedPairCertificate, check_certificate, interpretation_of
from lctrs_prover.prover import GRAPH_SCC, REDUCTION_PAIR, VALUE_CRITERION, prove, recheck
from lctrs_prover.rewrite import reachable
from lctrs_prover.smt import Encoder, Sat, SmtQuery, Solver, Unsat, logic_for, smt_sort
from lctrs_prover.theory import BitVec, Bool, TheorySpec

ACK_PAIRS = {
    1: "A#(_1, 0) -> A#(_1 - 1, 1) [ _1 != 0 ]",
    2: "A#(_1, _2) -> A#(_1 - 1, A(_1, _2 - 1)) [ _1 != 0 and _2 != 0 ]",
    3: "A#(_1, _2) -> A#(_1, _2 - 1) [ _1 != 0 and _2 != 0 ]",
}

_proofs = {}


def canonical_text(pair):
    return format_rule(canonical(pair).rule)


def reference_numbers(problem, indices):
    rev = {v: k for k, v in ACK_PAIRS.items()}
    return {rev[canonical_text(problem.pairs[i])] for i in indices}


def timed_prove(name):
    start = time.monotonic()
    v = prove(load(name))
    return v, time.monotonic() - start


@pytest.mark.criterion(1)
def test_ackermann_end_to_end():
    v, seconds = timed_prove("ackermann")
    _proofs["ackermann"] = v
    assert v.answer == "YES"
    nodes = list(v.proof.walk())
    assert sum(n.step == GRAPH_SCC for n in nodes) == 1
    vc = [n for n in nodes if n.step == VALUE_CRITERION]
    assert len(vc) == 2
    assert [n.certificate.projection for n in vc] == [{"A#": 1}, {"A#": 2}]
    assert all(n.certificate.ordering == "unsigned" for n in vc)
    assert reference_numbers(vc[0].problem, vc[0].certificate.strict) == {1, 2}
    assert reference_numbers(vc[1].problem, vc[1].certificate.strict) == {3}
    assert seconds < 10, seconds


@pytest.mark.criterion(2)
def test_ackermann_dependency_pairs():
    P = generate_dps(load("ackermann").rules)
    assert len(P) == 3
    assert {canonical_text(d) for d in P.pairs} == set(ACK_PAIRS.values())
    assert not any(d.rhs.symbol.is_calculation or d.lhs.symbol.is_calculation for d in P.pairs)


@pytest.mark.criterion(3)
def test_negation_graph_empty():
    p = load("negate")
    start = time.monotonic()
    P = generate_dps(p.rules)
    with Solver() as s:
        g = build_graph(P, p.theory, s)
        phi, copy = edge_formula(P.pairs[0], P.pairs[0], p.theory, defined_symbols(p.rules))
        x, y = P.pairs[0].lhs.args[0], copy.lhs.args[0]
        T = p.theory
        expected = T.op("and", T.op("=", T.op("-", x), y), T.op("and", T.op(">", x, T.literal(0)), T.op(">", y, T.literal(0))))
        # equivalence of the emitted formula with (-x = y) and x > 0 and y > 0
        assert isinstance(s.check_validity(T.op("=", phi, expected), T), Unsat), format_term(phi)
        assert isinstance(g.checks[(0, 0)].verdict, Unsat)
    assert len(g.nodes) == 1 and not g.edges
    v = prove(p)
    _proofs["negate"] = v
    assert v.answer == "YES"
    assert time.monotonic() - start < 5


@pytest.mark.criterion(4)
def test_sum_polynomial_orientation():
    v, seconds = timed_prove("sum")
    _proofs["sum"] = v
    assert v.answer == "YES"
    assert any(n.step == REDUCTION_PAIR for n in v.proof.walk())
    p = load("sum")
    P = generate_dps(p.rules)
    cert = RedPairCertificate(interpretation_of({P.pairs[0].lhs.symbol: (1, (-1, 1))}), [0], [], RULES_IGNORED)
    with Solver() as s:
        assert check_certificate(cert, P, p.theory, s)
        body = "(=> (<= |x| |y|) (> (+ (- |y| |x|) 1) (ite (>= (- |y| |x|) 0) (- |y| |x|) 0)))"
        assert isinstance(s.check_valid_smt(body, [("|x|", "Int"), ("|y|", "Int")], "QF_LIA"), Unsat)
    assert seconds < 10, seconds


@pytest.mark.criterion(5)
def test_never_yes_on_divergent_corpus():
    corpus = divergent_corpus()
    assert len(corpus) >= 5
    for d in corpus:
        terms = trace_terms(d)
        assert 2 <= len(terms) <= 6, d.name
        assert all(one_step(d.problem, a, b) for a, b in zip(terms, terms[1:])), d.name
        assert (terms[0] == terms[-1]) == d.cycle, d.name
        assert can_continue(d.problem, terms[-1]), d.name
        assert prove(d.problem).answer != "YES", d.name


# randomized small integer systems for the graph over-approximation oracle

GRID = range(-2, 3)


def _lit(k):
    return str(k) if k >= 0 else f"(0 - {-k})"


def _random_system(rng):
    sig = "f : int -> int ;\n  g : int * int -> int ;"
    lhs = {"f": ("f(x)", ["x"]), "g": ("g(x, y)", ["x", "y"])}

    def arg(vs):
        v = rng.choice(vs)
        return rng.choice([v, f"{v} + {_lit(rng.choice(GRID))}", f"{v} - 1", _lit(rng.choice(GRID))])

    def call(vs, depth=1):
        head = rng.choice(["f", "g"])
        args = [arg(vs) if depth == 0 or rng.random() < 0.8 else call(vs, depth - 1) for _ in range(1 if head == "f" else 2)]
        return f"{head}({', '.join(args)})"

    def atom(vs):
        a = rng.choice(vs)
        b = rng.choice(vs + [_lit(rng.choice(GRID))])
        return f"{a} {rng.choice(['<', '<=', '>', '>=', '=', '!='])} {b}"

    rules = []
    for _ in range(rng.randint(1, 3)):
        head = rng.choice(["f", "g"])
        text, vs = lhs[head]
        rhs = call(vs) if rng.random() < 0.8 else f"{call(vs)} + {arg(vs)}"
        cons = rng.choice(["", atom(vs), f"{atom(vs)} and {atom(vs)}", f"{atom(vs)} or {atom(vs)}"])
        rules.append(f"{text} -> {rhs}" + (f" [ {cons} ]" if cons else ""))
    return system("ints", sig, rules)


def _holds(T, phi, gamma):
    return T.evaluate(apply_subst(phi, gamma)) == Bool(True)


@pytest.mark.criterion(6)
def test_graph_over_approximation_oracle():
    rng = random.Random(20240611)
    systems, violations, absent, witnesses = 0, [], 0, 0
    with Solver() as s:
        while systems < 50:
            p = _random_system(rng)
            P = generate_dps(p.rules)
            if not 1 <= len(P) <= 3:
                continue
            systems += 1
            T = p.theory
            g = build_graph(P, T, s)
            defined = defined_symbols(p.rules)
            for i, j in itertools.product(range(len(P)), repeat=2):
                if (i, j) in g.edges:
                    continue
                absent += 1
                rho1 = P.pairs[i]
                _, rho2 = edge_formula(rho1, P.pairs[j], T, defined)
                xs = list(dict.fromkeys(rho1.variables() + rho2.variables()))
                for vals in itertools.product(GRID, repeat=len(xs)):
                    gamma = {x: T.value_term(T.from_python(v)) for x, v in zip(xs, vals)}
                    if not (_holds(T, rho1.constraint, gamma) and _holds(T, rho2.constraint, gamma)):
                        continue
                    witnesses += 1
                    if reachable(apply_subst(rho1.rhs, gamma), apply_subst(rho2.lhs, gamma), p.rules, T, 20, 2000):
                        violations.append((format_rule(rho1.rule), format_rule(rho2.rule), vals))
                        break
    print(f"graph oracle: {systems} systems, {absent} edges removed, {witnesses} substitutions tried, {len(violations)} violations")
    assert absent > 0 and witnesses > 0
    assert violations == []


def _decode(theory, raw, sort):
    # the solver reports bitvectors as unsigned bits
    return theory.wrap_raw(raw, sort)


@pytest.mark.criterion(7)
@pytest.mark.parametrize("theory", [TheorySpec("ints"), TheorySpec("bitvectors", 16)], ids=["ints", "bitvectors16"])
def test_evaluation_cross_oracle(theory):
    rng = random.Random(7 + (theory.width or 0))
    terms = [random_logical(theory, rng, BOOL if rng.random() < 0.4 else INT, depth=rng.randint(1, 4)) for _ in range(1000)]
    mismatches = []
    with Solver() as s:
        for start in range(0, len(terms), 100):
            batch = terms[start : start + 100]
            enc = Encoder(theory)
            names = [f"|r{k}|" for k in range(len(batch))]
            asserts = [f"(= {n} {enc.encode(t)})" for n, t in zip(names, batch)]
            decls = [(n, smt_sort(theory, t.sort)) for n, t in zip(names, batch)]
            assert not enc.declarations() and all(not variables(t) for t in batch)
            v = s.check_sat(SmtQuery(logic_for(theory, nonlinear=enc.nonlinear), decls, asserts, names))
            assert isinstance(v, Sat), v
            for n, t in zip(names, batch):
                if _decode(theory, v.model[n], t.sort) != theory.evaluate(t):
                    mismatches.append(format_term(t))
    assert mismatches == []


@pytest.mark.criterion(8)
def test_yes_proofs_recheck():
    for name in ("ackermann", "negate", "sum"):
        v = _proofs.get(name) or prove(load(name))
        assert v.answer == "YES", name
        report = recheck(v.proof)
        assert report.ok and report.complete, (name, str(report))


def test_bitvector_decode_is_unsigned_bits():
    T = TheorySpec("bitvectors", 16)
    assert _decode(T, 0xFFFF, INT) == BitVec.wrap(16, -1)

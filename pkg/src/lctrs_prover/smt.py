"""SMT-LIB 2 encoding and an external solver driven over stdin/stdout.

Every query runs in its own child process unless the solver is created with
``reuse_session=True``, in which case one process is kept and reset between
queries.
"""

from __future__ import annotations

import logging
import os
import select
import shutil
import subprocess
import threading
import time
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

from .core import BOOL, INT, App, Sort, Term, Var
from .theory import BitVec, Bool, Int, TheorySpec

log = logging.getLogger(__name__)


class SolverNotFound(RuntimeError):
    pass


class EncodingError(ValueError):
    pass


# sorts, symbols and terms

def smt_sort(theory: TheorySpec, sort: Sort) -> str:
    if sort == BOOL:
        return "Bool"
    if sort == INT:
        return f"(_ BitVec {theory.width})" if theory.is_bitvector else "Int"
    raise EncodingError(f"sort {sort} has no SMT counterpart")


def quote(name: str) -> str:
    if "|" in name or "\\" in name:
        raise EncodingError(f"cannot quote {name!r}")
    return f"|{name}|"


def var_name(x: Var) -> str:
    return quote(f"{x.name}/{x.sort.name}")


def smt_int(n: int) -> str:
    return str(n) if n >= 0 else f"(- {-n})"


def smt_bv(width: int, bits: int) -> str:
    return f"(_ bv{bits} {width})"


def smt_and(parts: Iterable[str]) -> str:
    parts = [p for p in parts if p != "true"]
    if not parts:
        return "true"
    if len(parts) == 1:
        return parts[0]
    return f"(and {' '.join(parts)})"


def smt_not(p: str) -> str:
    return f"(not {p})"


def smt_implies(a: str, b: str) -> str:
    return b if a == "true" else f"(=> {a} {b})"


def smt_max0(e: str) -> str:
    return f"(ite (>= {e} 0) {e} 0)"


_INT_OPS = {"+": "+", "-": "-", "*": "*", "<=": "<=", "<": "<", ">=": ">=", ">": ">"}
_BV_OPS = {"+": "bvadd", "-": "bvsub", "*": "bvmul", "<=": "bvsle", "<": "bvslt", ">=": "bvsge", ">": "bvsgt"}
_BOOL_OPS = {"and": "and", "or": "or", "=>": "=>", "not": "not", "=": "="}


class Encoder:
    """Translates logical terms to SMT-LIB, collecting the variables it meets."""

    def __init__(self, theory: TheorySpec):
        self.theory = theory
        self.decls: dict[str, str] = {}
        self.nonlinear = False

    def declare(self, x: Var) -> str:
        name = var_name(x)
        self.decls.setdefault(name, smt_sort(self.theory, x.sort))
        return name

    def value(self, v) -> str:
        if isinstance(v, Bool):
            return "true" if v.b else "false"
        if isinstance(v, Int):
            return smt_int(v.n)
        if isinstance(v, BitVec):
            return smt_bv(v.width, v.bits)
        raise EncodingError(f"unknown value {v!r}")

    def encode(self, t: Term) -> str:
        if isinstance(t, Var):
            return self.declare(t)
        sym = t.symbol
        if sym.value is not None:
            return self.value(sym.value)
        if not sym.in_theory:
            raise EncodingError(f"{sym.name} is not a theory symbol")
        args = [self.encode(a) for a in t.args]
        name = sym.name
        if name == "!=":
            return f"(distinct {args[0]} {args[1]})"
        if name == "=":
            return f"(= {args[0]} {args[1]})"
        if name in _BOOL_OPS:
            return f"({_BOOL_OPS[name]} {' '.join(args)})"
        if name == "-" and len(args) == 1:
            return f"(bvneg {args[0]})" if self.theory.is_bitvector else f"(- 0 {args[0]})"
        if name == "*" and not self.theory.is_bitvector:
            if not any(_is_literal(a) for a in t.args):
                self.nonlinear = True
        table = _BV_OPS if self.theory.is_bitvector else _INT_OPS
        return f"({table[name]} {' '.join(args)})"

    def declarations(self) -> list[tuple[str, str]]:
        return list(self.decls.items())


def _is_literal(t: Term) -> bool:
    return isinstance(t, App) and t.symbol.is_value


def logic_for(theory: TheorySpec, *, quantified: bool = False, nonlinear: bool = False) -> str:
    if theory.is_bitvector:
        return "BV" if quantified else "QF_BV"
    arith = "NIA" if nonlinear else "LIA"
    return arith if quantified else f"QF_{arith}"


# queries and verdicts

@dataclass
class SmtQuery:
    logic: str
    declarations: list[tuple[str, str]] = field(default_factory=list)
    assertions: list[str] = field(default_factory=list)
    get_values: list[str] = field(default_factory=list)

    @property
    def wants_model(self) -> bool:
        return bool(self.get_values)

    def script(self) -> str:
        lines = []
        if self.wants_model:
            lines.append("(set-option :produce-models true)")
        lines.append(f"(set-logic {self.logic})")
        lines += [f"(declare-fun {n} () {s})" for n, s in self.declarations]
        lines += [f"(assert {a})" for a in self.assertions]
        lines.append("(check-sat)")
        if self.wants_model:
            lines.append(f"(get-value ({' '.join(self.get_values)}))")
        return "\n".join(lines) + "\n"

    def text(self) -> str:
        return self.script() + "(exit)\n"


@dataclass(frozen=True)
class Sat:
    model: dict = field(default_factory=dict)

    def __str__(self):
        return "sat"


@dataclass(frozen=True)
class Unsat:
    def __str__(self):
        return "unsat"


@dataclass(frozen=True)
class Unknown:
    reason: str = "unknown"

    def __str__(self):
        return f"unknown ({self.reason})"


SmtVerdict = Union[Sat, Unsat, Unknown]


# s-expressions

def parse_sexprs(text: str) -> list:
    out: list = []
    stack: list[list] = []
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c in " \t\r\n":
            i += 1
        elif c == ";":
            while i < n and text[i] != "\n":
                i += 1
        elif c == "(":
            stack.append([])
            i += 1
        elif c == ")":
            if not stack:
                raise ValueError("unbalanced ')'")
            done = stack.pop()
            (stack[-1] if stack else out).append(done)
            i += 1
        else:
            if c == "|":
                j = text.index("|", i + 1) + 1
            elif c == '"':
                j = i + 1
                while True:
                    j = text.index('"', j) + 1
                    if j < n and text[j] == '"':
                        j += 1
                        continue
                    break
            else:
                j = i
                while j < n and text[j] not in ' \t\r\n();':
                    j += 1
            atom = text[i:j]
            (stack[-1] if stack else out).append(atom)
            i = j
    if stack:
        raise ValueError("unbalanced '('")
    return out


def sexpr_complete(text: str) -> bool:
    try:
        parse_sexprs(text)
    except ValueError:
        return False
    return True


def decode_value(expr):
    """Decode an SMT-LIB constant: Int (as python int), bitvector (unsigned bits), Bool."""
    if isinstance(expr, str):
        if expr == "true":
            return True
        if expr == "false":
            return False
        if expr.startswith("#x"):
            return int(expr[2:], 16)
        if expr.startswith("#b"):
            return int(expr[2:], 2)
        return int(expr)
    if len(expr) == 2 and expr[0] == "-":
        return -decode_value(expr[1])
    if len(expr) == 3 and expr[0] == "_" and expr[1].startswith("bv"):
        return int(expr[1][2:])
    raise ValueError(f"cannot decode model value {expr!r}")


def _canonical_name(atom: str) -> str:
    return atom if atom.startswith("|") else quote(atom)


def parse_model(text: str) -> dict:
    model = {}
    for top in parse_sexprs(text):
        if not isinstance(top, list):
            continue
        for entry in top:
            if isinstance(entry, list) and len(entry) == 2 and isinstance(entry[0], str):
                try:
                    model[_canonical_name(entry[0])] = decode_value(entry[1])
                except ValueError:
                    continue
    return model


def parse_response(out: str, query: SmtQuery) -> SmtVerdict:
    stripped = out.lstrip()
    first = stripped.split(None, 1)[0] if stripped else ""
    if first == "unsat":
        return Unsat()
    if first == "unknown":
        return Unknown("solver answered unknown")
    if first != "sat":
        return Unknown(f"unexpected solver output: {stripped[:200]!r}")
    if not query.wants_model:
        return Sat({})
    rest = stripped[3:]
    try:
        return Sat(parse_model(rest))
    except ValueError as e:
        return Unknown(f"unparseable model: {e}")


# solver processes

_KNOWN_SOLVERS = {
    "z3": ["-in", "-smt2"],
    "cvc5": ["--lang=smt2"],
    "cvc4": ["--lang=smt2"],
    "yices-smt2": [],
}


def resolve_solver(path: str | None = None, args: Sequence[str] | None = None) -> tuple[str, list[str]]:
    """Pick the solver binary: explicit path, then $LCTRS_SOLVER, then PATH."""
    candidates = [path] if path else []
    if not candidates and os.environ.get("LCTRS_SOLVER"):
        candidates.append(os.environ["LCTRS_SOLVER"])
    if not candidates:
        candidates = list(_KNOWN_SOLVERS)
    for cand in candidates:
        found = cand if os.path.sep in cand and os.access(cand, os.X_OK) else shutil.which(cand)
        if found:
            if args is None:
                args = _KNOWN_SOLVERS.get(os.path.basename(found), [])
            return found, list(args)
    if path or os.environ.get("LCTRS_SOLVER"):
        raise SolverNotFound(f"SMT solver {candidates[0]!r} not found or not executable")
    raise SolverNotFound("no SMT solver found on PATH (tried z3, cvc5, cvc4, yices-smt2); use --solver")


class Solver:
    """An SMT-LIB 2 solver binary.

    Runtime failures (timeouts, crashes, garbage output) come back as
    `Unknown`; only a missing binary raises.
    """

    def __init__(
        self,
        path: str | None = None,
        args: Sequence[str] | None = None,
        timeout: float = 10.0,
        reuse_session: bool = False,
    ):
        self.path, self.args = resolve_solver(path, args)
        self.timeout = timeout
        self.reuse_session = reuse_session
        self.queries = 0
        self._lock = threading.Lock()
        self._proc: subprocess.Popen | None = None

    def __repr__(self):
        return f"Solver({self.path!r}, args={self.args!r}, timeout={self.timeout})"

    def fresh(self) -> "Solver":
        """An independent solver with the same configuration."""
        return Solver(self.path, self.args, self.timeout, self.reuse_session)

    def check_sat(self, query: SmtQuery, timeout: float | None = None) -> SmtVerdict:
        timeout = self.timeout if timeout is None else timeout
        with self._lock:
            self.queries += 1
        if timeout <= 0:
            return Unknown("no time left")
        if self.reuse_session:
            with self._lock:
                return self._session_query(query, timeout)
        try:
            proc = subprocess.run(
                [self.path, *self.args],
                input=query.text(),
                capture_output=True,
                text=True,
                timeout=timeout,
            )
        except subprocess.TimeoutExpired:
            return Unknown("timeout")
        except OSError as e:
            return Unknown(f"could not run solver: {e}")
        verdict = parse_response(proc.stdout, query)
        if isinstance(verdict, Unknown) and proc.stderr:
            log.debug("solver stderr: %s", proc.stderr.strip())
        return verdict

    # session mode

    def _start(self):
        self._proc = subprocess.Popen(
            [self.path, *self.args],
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            stderr=subprocess.DEVNULL,
            text=True,
            bufsize=1,
        )

    def _read_until(self, done, deadline: float) -> str | None:
        assert self._proc is not None and self._proc.stdout is not None
        buf = ""
        fd = self._proc.stdout.fileno()
        while not done(buf):
            left = deadline - time.monotonic()
            if left <= 0:
                return None
            ready, _, _ = select.select([fd], [], [], left)
            if not ready:
                return None
            chunk = os.read(fd, 65536).decode()
            if not chunk:
                return None
            buf += chunk
        return buf

    def _session_query(self, query: SmtQuery, timeout: float) -> SmtVerdict:
        if self._proc is None or self._proc.poll() is not None:
            self._start()
        assert self._proc is not None and self._proc.stdin is not None
        deadline = time.monotonic() + timeout
        try:
            self._proc.stdin.write("(reset)\n" + query.script())
            self._proc.stdin.flush()
        except OSError as e:
            self.close()
            return Unknown(f"solver session died: {e}")

        def status_done(buf: str) -> bool:
            return "\n" in buf

        out = self._read_until(status_done, deadline)
        if out is None:
            self.close()
            return Unknown("timeout")
        if query.wants_model and out.split(None, 1)[0] == "sat":
            rest = out.split("\n", 1)[1]

            def model_done(buf: str) -> bool:
                text = rest + buf
                return text.strip().startswith("(") and sexpr_complete(text)

            more = "" if model_done("") else self._read_until(model_done, deadline)
            if more is None:
                self.close()
                return Unknown("timeout")
            out += more
        elif query.wants_model:
            # drain the error the solver prints for get-value after unsat
            self._read_until(status_done, time.monotonic() + 0.5)
        return parse_response(out, query)

    def close(self):
        if self._proc is not None:
            try:
                self._proc.kill()
                self._proc.wait(timeout=5)
            except OSError:
                pass
            for stream in (self._proc.stdin, self._proc.stdout):
                if stream is not None:
                    stream.close()
            self._proc = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def __del__(self):
        try:
            self.close()
        except Exception:
            pass

    # validity

    def check_validity(
        self,
        phi: Term,
        theory: TheorySpec,
        extra_vars: Iterable[Var] = (),
        timeout: float | None = None,
    ) -> SmtVerdict:
        """Decide validity of a constraint by refuting its negation.

        Unsat means valid; Sat carries a counterexample over the variables.
        """
        enc = Encoder(theory)
        body = enc.encode(phi)
        for x in extra_vars:
            enc.declare(x)
        decls = enc.declarations()
        return self.check_valid_smt(
            body,
            decls,
            logic_for(theory, nonlinear=enc.nonlinear),
            timeout=timeout,
            model=True,
        )

    def check_valid_smt(
        self,
        body: str,
        decls: Sequence[tuple[str, str]],
        logic: str,
        timeout: float | None = None,
        model: bool = False,
    ) -> SmtVerdict:
        q = SmtQuery(logic, list(decls), [smt_not(body)], [n for n, _ in decls] if model else [])
        return self.check_sat(q, timeout)


def time_left(solver: Solver, deadline: float | None) -> float:
    """Per-query timeout: the solver default, cut short by a global deadline."""
    if deadline is None:
        return solver.timeout
    return max(0.0, min(solver.timeout, deadline - time.monotonic()))


def is_valid(verdict: SmtVerdict) -> bool:
    """Reading of a `check_validity` verdict: only Unsat proves validity."""
    return isinstance(verdict, Unsat)


def model_value(verdict: Sat, x: Var, theory: TheorySpec):
    raw = verdict.model.get(var_name(x))
    if raw is None:
        return None
    return theory.wrap_raw(raw, x.sort)

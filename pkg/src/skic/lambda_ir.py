"""Lambda-calculus IR: surface parser, normal-order evaluator, printing.

The surface language is a minimal functional calculus:

    program := (def ";")* expr?
    def     := ident ":=" expr
    expr    := "\\" ident+ "." expr | app
    app     := atom+                (left-associative application)
    atom    := ident | integer | "true" | "false" | "#"primname
             | "(" expr ")"

Comments run from `--` to end of line.  Identifiers match
[a-z][a-z0-9_]*; `true` and `false` are reserved literal keywords.
Integer atoms may carry a leading minus sign.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Optional, Union

PRIM_OPS = ("add", "sub", "mul", "eq", "if", "addZ", "addR")

ARITH_OPS = ("add", "sub", "mul", "addZ", "addR")

INT64_MIN = -(2**63)
INT64_MAX = 2**63 - 1

DEFAULT_FUEL = 10_000


class LambdaError(Exception):
    """Base class for surface-language errors."""


class ParseError(LambdaError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{line}:{column}: {message}")
        self.line = line
        self.column = column


class UnboundIdentifierError(ParseError):
    def __init__(self, name: str, line: int, column: int):
        super().__init__(f"unbound identifier '{name}'", line, column)
        self.name = name


class DuplicateDefinitionError(ParseError):
    def __init__(self, name: str, line: int, column: int):
        super().__init__(f"duplicate definition '{name}'", line, column)
        self.name = name


class EvalError(LambdaError):
    """Raised for deterministic evaluation failures (e.g. overflow)."""


class EvalOverflowError(EvalError):
    def __init__(self, op: str, value: int):
        super().__init__(f"#{op} result {value} exceeds 64-bit signed range")
        self.op = op
        self.value = value


class FuelExhausted(LambdaError):
    """The step budget ran out before a normal form was reached.

    This is a verdict about the budget, not about the term.
    """


# --- terms ------------------------------------------------------------


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Lam:
    param: str
    body: "Term"


@dataclass(frozen=True)
class App:
    fun: "Term"
    arg: "Term"


@dataclass(frozen=True)
class IntLit:
    value: int


@dataclass(frozen=True)
class BoolLit:
    value: bool


@dataclass(frozen=True)
class Prim:
    op: str

    def __post_init__(self):
        if self.op not in PRIM_OPS:
            raise ValueError(f"unknown primitive #{self.op}")


Term = Union[Var, Lam, App, IntLit, BoolLit, Prim]


@dataclass(frozen=True)
class Program:
    """Ordered definitions plus an optional main expression.

    Definition names are unique and a body may reference only earlier
    definitions, so inlining always terminates.
    """

    defs: tuple[tuple[str, Term], ...]
    main: Optional[Term]


def apply_spine(fun: Term, *args: Term) -> Term:
    for a in args:
        fun = App(fun, a)
    return fun


def spine(t: Term) -> tuple[Term, list[Term]]:
    """Split `f a b c` into (f, [a, b, c])."""
    args: list[Term] = []
    while isinstance(t, App):
        args.append(t.arg)
        t = t.fun
    args.reverse()
    return t, args


def free_vars(t: Term) -> frozenset[str]:
    match t:
        case Var(name):
            return frozenset((name,))
        case Lam(param, body):
            return free_vars(body) - {param}
        case App(fun, arg):
            return free_vars(fun) | free_vars(arg)
        case _:
            return frozenset()


def leading_lambda_count(t: Term) -> int:
    n = 0
    while isinstance(t, Lam):
        n += 1
        t = t.body
    return n


def term_size(t: Term) -> int:
    match t:
        case Lam(_, body):
            return 1 + term_size(body)
        case App(fun, arg):
            return 1 + term_size(fun) + term_size(arg)
        case _:
            return 1


# --- lexer / parser ---------------------------------------------------

_PUNCT = {"\\", ".", "(", ")", ";", ":="}


@dataclass(frozen=True)
class _Tok:
    kind: str  # punct | ident | int | prim | keyword
    text: str
    line: int
    col: int


def _lex(source: str) -> list[_Tok]:
    toks: list[_Tok] = []
    i, line, col = 0, 1, 1
    n = len(source)
    while i < n:
        c = source[i]
        if c == "\n":
            i, line, col = i + 1, line + 1, 1
            continue
        if c in " \t\r":
            i, col = i + 1, col + 1
            continue
        if source.startswith("--", i):
            while i < n and source[i] != "\n":
                i += 1
            continue
        start_line, start_col = line, col
        if source.startswith(":=", i):
            toks.append(_Tok("punct", ":=", start_line, start_col))
            i, col = i + 2, col + 2
            continue
        if c in "\\.();":
            toks.append(_Tok("punct", c, start_line, start_col))
            i, col = i + 1, col + 1
            continue
        if c.isdigit() or (c == "-" and i + 1 < n and source[i + 1].isdigit()):
            j = i + 1
            while j < n and source[j].isdigit():
                j += 1
            toks.append(_Tok("int", source[i:j], start_line, start_col))
            col += j - i
            i = j
            continue
        if c == "#":
            j = i + 1
            while j < n and (source[j].isalnum() or source[j] == "_"):
                j += 1
            if j == i + 1:
                raise ParseError("expected primitive name after '#'", line, col)
            toks.append(_Tok("prim", source[i:j], start_line, start_col))
            col += j - i
            i = j
            continue
        if c.islower():
            j = i + 1
            while j < n and (source[j].islower() or source[j].isdigit() or source[j] == "_"):
                j += 1
            word = source[i:j]
            kind = "keyword" if word in ("true", "false") else "ident"
            toks.append(_Tok(kind, word, start_line, start_col))
            col += j - i
            i = j
            continue
        raise ParseError(f"unexpected character {c!r}", line, col)
    return toks


class _Parser:
    def __init__(self, toks: list[_Tok], allow_free: bool = False):
        self.toks = toks
        self.pos = 0
        self.allow_free = allow_free

    def peek(self) -> Optional[_Tok]:
        return self.toks[self.pos] if self.pos < len(self.toks) else None

    def next(self) -> _Tok:
        tok = self.peek()
        if tok is None:
            last = self.toks[-1] if self.toks else _Tok("punct", "", 1, 1)
            raise ParseError("unexpected end of input", last.line, last.col + len(last.text))
        self.pos += 1
        return tok

    def expect(self, text: str) -> _Tok:
        tok = self.next()
        if tok.text != text:
            raise ParseError(f"expected {text!r}, found {tok.text!r}", tok.line, tok.col)
        return tok

    def at(self, text: str) -> bool:
        tok = self.peek()
        return tok is not None and tok.text == text

    def parse_program(self) -> Program:
        defs: list[tuple[str, Term]] = []
        names: set[str] = set()
        while True:
            save = self.pos
            tok = self.peek()
            if tok is not None and tok.kind == "ident" and self._lookahead_is_def():
                name_tok = self.next()
                self.expect(":=")
                body = self.parse_expr(scope=(), defs=names)
                self.expect(";")
                if name_tok.text in names:
                    raise DuplicateDefinitionError(name_tok.text, name_tok.line, name_tok.col)
                names.add(name_tok.text)
                defs.append((name_tok.text, body))
                continue
            self.pos = save
            break
        main: Optional[Term] = None
        if self.peek() is not None:
            main = self.parse_expr(scope=(), defs=names)
        tok = self.peek()
        if tok is not None:
            raise ParseError(f"unexpected trailing input {tok.text!r}", tok.line, tok.col)
        return Program(defs=tuple(defs), main=main)

    def _lookahead_is_def(self) -> bool:
        nxt = self.pos + 1
        return nxt < len(self.toks) and self.toks[nxt].text == ":="

    def parse_expr(self, scope: tuple[str, ...], defs: set[str]) -> Term:
        if self.at("\\"):
            self.next()
            params: list[_Tok] = []
            while True:
                tok = self.next()
                if tok.kind != "ident":
                    raise ParseError(f"expected parameter name, found {tok.text!r}", tok.line, tok.col)
                params.append(tok)
                if self.at("."):
                    self.next()
                    break
            body_scope = scope + tuple(p.text for p in params)
            body = self.parse_expr(body_scope, defs)
            for p in reversed(params):
                body = Lam(p.text, body)
            return body
        return self.parse_app(scope, defs)

    def parse_app(self, scope: tuple[str, ...], defs: set[str]) -> Term:
        term = self.parse_atom(scope, defs)
        while True:
            tok = self.peek()
            if tok is None or tok.text in (")", ";", ":=", "\\"):
                if tok is not None and tok.text == "\\":
                    raise ParseError("lambda must be parenthesized in argument position", tok.line, tok.col)
                return term
            term = App(term, self.parse_atom(scope, defs))

    def parse_atom(self, scope: tuple[str, ...], defs: set[str]) -> Term:
        tok = self.next()
        if tok.text == "(":
            inner = self.parse_expr(scope, defs)
            self.expect(")")
            return inner
        if tok.kind == "int":
            return IntLit(int(tok.text))
        if tok.kind == "keyword":
            return BoolLit(tok.text == "true")
        if tok.kind == "prim":
            op = tok.text[1:]
            if op not in PRIM_OPS:
                raise ParseError(f"unknown primitive {tok.text!r}", tok.line, tok.col)
            return Prim(op)
        if tok.kind == "ident":
            if tok.text in scope or tok.text in defs or self.allow_free:
                return Var(tok.text)
            raise UnboundIdentifierError(tok.text, tok.line, tok.col)
        raise ParseError(f"unexpected token {tok.text!r}", tok.line, tok.col)


def parse_program(source: str) -> Program:
    """Parse surface text into a Program.

    Raises ParseError (with line/column), UnboundIdentifierError, or
    DuplicateDefinitionError.
    """
    return _Parser(_lex(source)).parse_program()


def parse_term(source: str, allow_free: bool = False) -> Term:
    """Parse a single expression with no definitions.

    `allow_free` admits free variables (term fragments for analysis);
    whole programs always enforce scoping.
    """
    prog = _Parser(_lex(source), allow_free=allow_free).parse_program()
    if prog.defs or prog.main is None:
        raise ParseError("expected a single expression", 1, 1)
    return prog.main


# --- substitution and inlining ----------------------------------------


def _fresh(base: str, avoid: frozenset[str]) -> str:
    i = 1
    candidate = f"{base}_{i}"
    while candidate in avoid:
        i += 1
        candidate = f"{base}_{i}"
    return candidate


def substitute(t: Term, name: str, value: Term) -> Term:
    """Capture-avoiding substitution t[name := value]."""
    match t:
        case Var(n):
            return value if n == name else t
        case App(fun, arg):
            return App(substitute(fun, name, value), substitute(arg, name, value))
        case Lam(param, body):
            if param == name:
                return t
            if param in free_vars(value) and name in free_vars(body):
                renamed = _fresh(param, free_vars(value) | free_vars(body))
                body = substitute(body, param, Var(renamed))
                param = renamed
            return Lam(param, substitute(body, name, value))
        case _:
            return t


def inline_defs(prog: Program) -> list[tuple[str, Term]]:
    """Each definition body with all earlier definitions substituted in."""
    resolved: dict[str, Term] = {}
    out: list[tuple[str, Term]] = []
    for name, body in prog.defs:
        for dep, val in resolved.items():
            body = substitute(body, dep, val)
        resolved[name] = body
        out.append((name, body))
    return out


def inline_main(prog: Program) -> Term:
    if prog.main is None:
        raise ValueError("program has no main expression")
    body = prog.main
    for dep, val in reversed(inline_defs(prog)):
        body = substitute(body, dep, val)
    return body


# --- normal-order reduction -------------------------------------------


class Fuel:
    """Mutable step budget shared across one reduction."""

    __slots__ = ("remaining",)

    def __init__(self, steps: int):
        if steps < 0:
            raise ValueError("fuel must be nonnegative")
        self.remaining = steps

    def spend(self) -> None:
        if self.remaining <= 0:
            raise FuelExhausted("reduction step budget exhausted")
        self.remaining -= 1


def _check_range(op: str, value: int) -> int:
    if not INT64_MIN <= value <= INT64_MAX:
        raise EvalOverflowError(op, value)
    return value


def _delta(op: str, args: list[Term], fuel: Fuel) -> Optional[tuple[Term, list[Term]]]:
    """Try a primitive step on a spine head `#op args...`.

    Returns (replacement, leftover args) or None when the rule cannot
    fire.  Operands are brought to WHNF first; non-literal operands
    leave the application stuck.
    """
    if op in ARITH_OPS and len(args) >= 2:
        a = _whnf(args[0], fuel)
        b = _whnf(args[1], fuel)
        args[0], args[1] = a, b
        if isinstance(a, IntLit) and isinstance(b, IntLit):
            fuel.spend()
            if op in ("add", "addZ", "addR"):
                v = a.value + b.value
            elif op == "sub":
                v = a.value - b.value
            else:
                v = a.value * b.value
            return IntLit(_check_range(op, v)), args[2:]
    elif op == "eq" and len(args) >= 2:
        a = _whnf(args[0], fuel)
        b = _whnf(args[1], fuel)
        args[0], args[1] = a, b
        if isinstance(a, IntLit) and isinstance(b, IntLit):
            fuel.spend()
            return BoolLit(a.value == b.value), args[2:]
    elif op == "if" and len(args) >= 3:
        c = _whnf(args[0], fuel)
        args[0] = c
        if isinstance(c, BoolLit):
            fuel.spend()
            return (args[1] if c.value else args[2]), args[3:]
    return None


def _whnf(t: Term, fuel: Fuel) -> Term:
    """Reduce to weak head normal form (leftmost-outermost)."""
    head, args = spine(t)
    while True:
        if isinstance(head, Lam) and args:
            fuel.spend()
            head = substitute(head.body, head.param, args.pop(0))
            inner_head, inner_args = spine(head)
            head, args = inner_head, inner_args + args
            continue
        if isinstance(head, Prim):
            fired = _delta(head.op, args, fuel)
            if fired is not None:
                replacement, rest = fired
                inner_head, inner_args = spine(replacement)
                head, args = inner_head, inner_args + rest
                continue
        return apply_spine(head, *args)


def _normalize(t: Term, fuel: Fuel) -> Term:
    t = _whnf(t, fuel)
    if isinstance(t, Lam):
        return Lam(t.param, _normalize(t.body, fuel))
    head, args = spine(t)
    if not args:
        return head
    # head is stuck (Var, literal, or under-applied Prim); finish the args
    return apply_spine(head, *(_normalize(a, fuel) for a in args))


def beta_reduce(t: Term, fuel: int = DEFAULT_FUEL) -> Term:
    """Normal-order reduction with primitive delta rules.

    Returns the beta-delta normal form; raises FuelExhausted when the
    step budget runs out first.
    """
    return _normalize(t, Fuel(fuel))


def is_normal_form(t: Term) -> bool:
    """Scan for any remaining beta or delta redex."""
    match t:
        case Lam(_, body):
            return is_normal_form(body)
        case App():
            head, args = spine(t)
            if isinstance(head, Lam):
                return False
            if isinstance(head, Prim):
                if head.op in ARITH_OPS or head.op == "eq":
                    if len(args) >= 2 and isinstance(args[0], IntLit) and isinstance(args[1], IntLit):
                        return False
                elif head.op == "if":
                    if len(args) >= 3 and isinstance(args[0], BoolLit):
                        return False
            return all(is_normal_form(a) for a in args) and is_normal_form(head)
        case _:
            return True


# --- alpha equivalence and eta ----------------------------------------


def _debruijn(t: Term, env: tuple[str, ...]) -> tuple:
    match t:
        case Var(name):
            try:
                return ("b", env.index(name))
            except ValueError:
                return ("f", name)
        case Lam(param, body):
            return ("lam", _debruijn(body, (param,) + env))
        case App(fun, arg):
            return ("app", _debruijn(fun, env), _debruijn(arg, env))
        case IntLit(v):
            return ("int", v)
        case BoolLit(v):
            return ("bool", v)
        case Prim(op):
            return ("prim", op)
    raise TypeError(f"not a Term: {t!r}")


def alpha_equivalent(a: Term, b: Term) -> bool:
    """Structural equality up to consistent bound-variable renaming."""
    return _debruijn(a, ()) == _debruijn(b, ())


def saturate_conditionals(t: Term) -> Term:
    """Rewrite under-applied conditionals with literal conditions into
    their lambda meaning: #if true x == \\b. x, #if false x == \\b. b,
    #if true == \\a.\\b. a, #if false == \\a.\\b. b.

    On beta-delta normal forms this closes the gap between delta and
    eta: eta-expanding such a spine would let the conditional fire, so
    structural comparison must not distinguish the two shapes.  The
    conditional is the only primitive whose rule can fire through
    eta-expansion (arithmetic needs literal operands, and an expansion
    variable never is one).
    """
    match t:
        case Lam(param, body):
            return Lam(param, saturate_conditionals(body))
        case App():
            head, args = spine(t)
            new_args = [saturate_conditionals(a) for a in args]
            new_head = saturate_conditionals(head) if isinstance(head, Lam) else head
            if (
                isinstance(head, Prim)
                and head.op == "if"
                and 1 <= len(new_args) <= 2
                and isinstance(new_args[0], BoolLit)
            ):
                cond = new_args[0].value
                if len(new_args) == 1:
                    return Lam("sat_a", Lam("sat_b", Var("sat_a" if cond else "sat_b")))
                taken = new_args[1]
                if not cond:
                    return Lam("sat_b", Var("sat_b"))
                binder = "sat_b"
                if binder in free_vars(taken):
                    binder = _fresh(binder, free_vars(taken))
                return Lam(binder, taken)
            return apply_spine(new_head, *new_args)
        case _:
            return t


def canonical_normal_form(t: Term, fuel: int = DEFAULT_FUEL) -> Term:
    """Beta-delta normal form closed under conditional saturation and
    eta contraction.

    Eta contraction can expose fresh delta redexes (a contracted
    argument may become a literal), so the three passes iterate to a
    fixpoint; every pass is meaning-preserving and strictly shrinks the
    term when it changes anything, so the loop terminates.
    """
    t = _normalize(t, Fuel(fuel))
    while True:
        contracted = eta_contract(saturate_conditionals(t))
        if contracted == t:
            return t
        t = _normalize(contracted, Fuel(fuel))


def eta_contract(t: Term) -> Term:
    """Fully eta-contract: \\x. M x -> M wherever x is not free in M.

    Applied to beta-normal forms this yields the beta-eta normal form.
    """
    match t:
        case Lam(param, body):
            body = eta_contract(body)
            if (
                isinstance(body, App)
                and isinstance(body.arg, Var)
                and body.arg.name == param
                and param not in free_vars(body.fun)
            ):
                return eta_contract(body.fun)
            return Lam(param, body)
        case App(fun, arg):
            return App(eta_contract(fun), eta_contract(arg))
        case _:
            return t


# --- printing ----------------------------------------------------------


def pretty_print(t: Term) -> str:
    """Canonical text form; reparses to an alpha-equivalent term."""
    match t:
        case Var(name):
            return name
        case IntLit(v):
            return str(v)
        case BoolLit(v):
            return "true" if v else "false"
        case Prim(op):
            return f"#{op}"
        case Lam(param, body):
            if isinstance(body, Lam):
                return f"\\{param}.{pretty_print(body)}"
            return f"\\{param}. {pretty_print(body)}"
        case App(fun, arg):
            fun_text = pretty_print(fun)
            if isinstance(fun, Lam):
                fun_text = f"({fun_text})"
            arg_text = pretty_print(arg)
            if isinstance(arg, (App, Lam)):
                arg_text = f"({arg_text})"
            return f"{fun_text} {arg_text}"
    raise TypeError(f"not a Term: {t!r}")


def pretty_print_program(prog: Program) -> str:
    lines = [f"{name} := {pretty_print(body)};" for name, body in prog.defs]
    if prog.main is not None:
        lines.append(pretty_print(prog.main))
    return "\n".join(lines)


def iter_subterms(t: Term) -> Iterator[Term]:
    yield t
    match t:
        case Lam(_, body):
            yield from iter_subterms(body)
        case App(fun, arg):
            yield from iter_subterms(fun)
            yield from iter_subterms(arg)

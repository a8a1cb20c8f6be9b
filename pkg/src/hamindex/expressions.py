"""A small arithmetic expression language for matrix-entry formulas.

Grammar, loosest binding first::

    expr    := term  (('+' | '-') term)*
    term    := factor (('*' | '/') factor)*
    factor  := '-' factor | power
    power   := atom ('^' factor)?          right associative
    atom    := NUMBER | NAME | NAME '(' expr ')' | '(' expr ')'

``^`` binds tighter than unary minus, so ``-2^2 == -4`` and
``2^3^2 == 512``.  Known functions are sin, cos, exp, sqrt and tanh.
The default variables are ``t``, ``lambda``, ``lambda1`` and ``lambda2``;
``pi`` is a built-in constant.  Callers may pass an extended variable set
(nonlinear gradients use ``u1`` .. ``u2n``).

Evaluation accepts floats or numpy arrays and broadcasts entrywise.
Division by zero, square roots of negatives and other departures from
the real domain raise :class:`EvalError`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EvalError, ParseError

FUNCTIONS = ("sin", "cos", "exp", "sqrt", "tanh")
DEFAULT_VARIABLES = ("t", "lambda", "lambda1", "lambda2")

_FN_TABLE = {
    "sin": np.sin,
    "cos": np.cos,
    "exp": np.exp,
    "sqrt": np.sqrt,
    "tanh": np.tanh,
}


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    arg: "Expression"


@dataclass(frozen=True)
class Bin:
    op: str  # + - * / ^
    left: "Expression"
    right: "Expression"


@dataclass(frozen=True)
class Call:
    fn: str
    arg: "Expression"


Expression = Num | Var | Neg | Bin | Call


# ---------------------------------------------------------------------------
# tokenizer / parser


@dataclass(frozen=True)
class _Token:
    kind: str  # num, name, op, lparen, rparen, end
    text: str
    pos: int


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
            continue
        if c.isdigit() or (c == "." and i + 1 < n and text[i + 1].isdigit()):
            j = i
            while j < n and (text[j].isdigit() or text[j] == "."):
                j += 1
            if j < n and text[j] in "eE":
                k = j + 1
                if k < n and text[k] in "+-":
                    k += 1
                if k < n and text[k].isdigit():
                    j = k
                    while j < n and text[j].isdigit():
                        j += 1
            lexeme = text[i:j]
            try:
                float(lexeme)
            except ValueError:
                raise ParseError(f"malformed number {lexeme!r}", i) from None
            tokens.append(_Token("num", lexeme, i))
            i = j
        elif c.isalpha() or c == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(_Token("name", text[i:j], i))
            i = j
        elif c in "+-*/^":
            tokens.append(_Token("op", c, i))
            i += 1
        elif c == "(":
            tokens.append(_Token("lparen", c, i))
            i += 1
        elif c == ")":
            tokens.append(_Token("rparen", c, i))
            i += 1
        else:
            raise ParseError(f"unexpected character {c!r}", i)
    tokens.append(_Token("end", "", n))
    return tokens


class _Parser:
    def __init__(self, text: str, variables: tuple[str, ...]):
        self.tokens = _tokenize(text)
        self.pos = 0
        self.variables = variables

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind: str, text: str | None = None) -> _Token:
        tok = self.peek()
        if tok.kind != kind or (text is not None and tok.text != text):
            want = text or kind
            raise ParseError(f"expected {want!r}, found {tok.text or 'end of input'!r}", tok.pos)
        return self.advance()

    def parse(self) -> Expression:
        node = self.expr()
        tok = self.peek()
        if tok.kind != "end":
            raise ParseError(f"unexpected trailing input {tok.text!r}", tok.pos)
        return node

    def expr(self) -> Expression:
        node = self.term()
        while self.peek().kind == "op" and self.peek().text in "+-":
            op = self.advance().text
            node = Bin(op, node, self.term())
        return node

    def term(self) -> Expression:
        node = self.factor()
        while self.peek().kind == "op" and self.peek().text in "*/":
            op = self.advance().text
            node = Bin(op, node, self.factor())
        return node

    def factor(self) -> Expression:
        tok = self.peek()
        if tok.kind == "op" and tok.text == "-":
            self.advance()
            return Neg(self.factor())
        return self.power()

    def power(self) -> Expression:
        node = self.atom()
        tok = self.peek()
        if tok.kind == "op" and tok.text == "^":
            self.advance()
            return Bin("^", node, self.factor())
        return node

    def atom(self) -> Expression:
        tok = self.peek()
        if tok.kind == "num":
            self.advance()
            return Num(float(tok.text))
        if tok.kind == "name":
            self.advance()
            if self.peek().kind == "lparen":
                if tok.text not in _FN_TABLE:
                    raise ParseError(f"unknown function {tok.text!r}", tok.pos)
                self.advance()
                arg = self.expr()
                self.expect("rparen")
                return Call(tok.text, arg)
            if tok.text == "pi":
                return Num(np.pi)
            if tok.text not in self.variables:
                raise ParseError(f"unknown identifier {tok.text!r}", tok.pos)
            return Var(tok.text)
        if tok.kind == "lparen":
            self.advance()
            node = self.expr()
            self.expect("rparen")
            return node
        raise ParseError(f"expected a value, found {tok.text or 'end of input'!r}", tok.pos)


def parse_expression(text: str, variables: tuple[str, ...] = DEFAULT_VARIABLES) -> Expression:
    """Parse ``text`` into an expression tree.

    Raises :class:`ParseError` (with byte offset) on malformed syntax or
    identifiers outside ``variables`` and the function table.
    """
    if not text or not text.strip():
        raise ParseError("empty expression", 0)
    return _Parser(text, variables).parse()


# ---------------------------------------------------------------------------
# evaluation


def _check_finite(value, what: str):
    if not np.all(np.isfinite(value)):
        raise EvalError(f"non-finite result in {what}")
    return value


def evaluate(node: Expression, env: dict[str, object]):
    """Evaluate an expression tree over an environment of floats/arrays.

    Array-valued environment entries broadcast entrywise.  The result is a
    numpy scalar or array.
    """
    if isinstance(node, Num):
        return np.float64(node.value)
    if isinstance(node, Var):
        try:
            return np.asarray(env[node.name], dtype=np.float64)
        except KeyError:
            raise EvalError(f"variable {node.name!r} not bound") from None
    if isinstance(node, Neg):
        return -evaluate(node.arg, env)
    if isinstance(node, Call):
        arg = evaluate(node.arg, env)
        with np.errstate(all="ignore"):
            out = _FN_TABLE[node.fn](arg)
        return _check_finite(out, f"{node.fn}()")
    left = evaluate(node.left, env)
    right = evaluate(node.right, env)
    op = node.op
    if op == "+":
        return left + right
    if op == "-":
        return left - right
    if op == "*":
        return left * right
    if op == "/":
        with np.errstate(all="ignore"):
            out = np.true_divide(left, right)
        return _check_finite(out, "division")
    with np.errstate(all="ignore"):
        out = np.power(left, right)
    return _check_finite(out, "power")


# ---------------------------------------------------------------------------
# printing

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4, "atom": 5}


def _prec(node: Expression) -> int:
    if isinstance(node, Bin):
        return _PREC[node.op]
    if isinstance(node, Neg):
        return _PREC["neg"]
    return _PREC["atom"]


def to_text(node: Expression) -> str:
    """Render a tree back to source; reparsing yields an equivalent tree."""
    if isinstance(node, Num):
        return repr(float(node.value))
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Call):
        return f"{node.fn}({to_text(node.arg)})"
    if isinstance(node, Neg):
        inner = to_text(node.arg)
        if _prec(node.arg) < _PREC["neg"]:
            inner = f"({inner})"
        return f"-{inner}"
    mine = _PREC[node.op]
    left, right = to_text(node.left), to_text(node.right)
    if node.op == "^":
        # right associative: parenthesise a lower-or-equal-precedence left child
        if _prec(node.left) <= mine:
            left = f"({left})"
        if _prec(node.right) < _PREC["neg"]:
            right = f"({right})"
    else:
        if _prec(node.left) < mine:
            left = f"({left})"
        # parenthesise equal precedence on the right so reparsing rebuilds
        # the identical tree (floating-point addition is not associative)
        if _prec(node.right) <= mine:
            right = f"({right})"
    return f"{left} {node.op} {right}"


def variables_used(node: Expression) -> frozenset[str]:
    if isinstance(node, Var):
        return frozenset((node.name,))
    if isinstance(node, Neg):
        return variables_used(node.arg)
    if isinstance(node, Call):
        return variables_used(node.arg)
    if isinstance(node, Bin):
        return variables_used(node.left) | variables_used(node.right)
    return frozenset()

"""
Text grammar for polynomials.

Terms look like ``c*x1^a*u1^b*v1^c``; ``**`` is accepted for powers, ``a/b``
for rational coefficients and parentheses for grouping. The printer emits
graded-lex order with ``repr`` coefficients, so parsing printed text gives
back the same coefficients bit for bit.
"""

import re
from typing import List, Optional, Tuple

from common.errors import ParseError
from polyalg.monomials import Universe
from polyalg.polynomial import Polynomial

_TOKEN = re.compile(
    r"\s*(?:"
    r"(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<var>[xuv]\d+)"
    r"|(?P<op>\*\*|[-+*/^()])"
    r")"
)


def _tokenize(text: str) -> List[Tuple[str, str]]:
    tokens: List[Tuple[str, str]] = []
    pos = 0
    stripped = text.rstrip()
    while pos < len(stripped):
        match = _TOKEN.match(stripped, pos)
        if not match or match.end() == pos:
            raise ParseError(f"unexpected character {stripped[pos:pos + 1]!r} at column {pos + 1} in {text!r}")
        kind = match.lastgroup
        tokens.append((kind, match.group(kind)))
        pos = match.end()
    return tokens


class _Parser:
    def __init__(self, text: str, universe: Universe):
        self.text = text
        self.universe = universe
        self.tokens = _tokenize(text)
        self.pos = 0
        self.names = {name: slot for slot, name in enumerate(universe.names)}

    def peek(self) -> Optional[Tuple[str, str]]:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def take(self) -> Tuple[str, str]:
        tok = self.peek()
        if tok is None:
            raise ParseError(f"unexpected end of expression in {self.text!r}")
        self.pos += 1
        return tok

    def expect(self, value: str) -> None:
        kind, got = self.take()
        if got != value:
            raise ParseError(f"expected {value!r}, found {got!r} in {self.text!r}")

    def parse(self) -> Polynomial:
        if not self.tokens:
            raise ParseError("empty polynomial expression")
        result = self.expr()
        if self.peek() is not None:
            raise ParseError(f"trailing input {self.peek()[1]!r} in {self.text!r}")
        return result

    def expr(self) -> Polynomial:
        result = self.term()
        while self.peek() is not None and self.peek()[1] in "+-":
            _, op = self.take()
            rhs = self.term()
            result = result + rhs if op == "+" else result - rhs
        return result

    def term(self) -> Polynomial:
        result = self.unary()
        self._reject_juxtaposition()
        while self.peek() is not None and self.peek()[1] in ("*", "/"):
            _, op = self.take()
            rhs = self.unary()
            self._reject_juxtaposition()
            if op == "*":
                result = result * rhs
            else:
                if rhs.degree() > 0:
                    raise ParseError(f"division by a non-constant in {self.text!r}")
                divisor = rhs.coefficient((0,) * self.universe.nvars)
                if divisor == 0.0:
                    raise ParseError(f"division by zero in {self.text!r}")
                result = result / divisor
        return result

    def _reject_juxtaposition(self) -> None:
        """Adjacent operands such as ``2x1`` need an explicit ``*``."""
        tok = self.peek()
        if tok is None or not (tok[0] in ("num", "var") or tok[1] == "("):
            return
        left = self.tokens[self.pos - 1][1]
        raise ParseError(
            f"missing '*' between {left!r} and {tok[1]!r} in {self.text!r}; write {left}*{tok[1]}"
        )

    def unary(self) -> Polynomial:
        tok = self.peek()
        if tok is not None and tok[1] in ("-", "+"):
            self.take()
            operand = self.unary()
            return -operand if tok[1] == "-" else operand
        return self.power()

    def power(self) -> Polynomial:
        base = self.atom()
        tok = self.peek()
        if tok is not None and tok[1] in ("^", "**"):
            self.take()
            kind, value = self.take()
            if kind != "num" or not value.isdigit():
                raise ParseError(f"exponent must be a nonnegative integer, found {value!r} in {self.text!r}")
            return base ** int(value)
        return base

    def atom(self) -> Polynomial:
        kind, value = self.take()
        if kind == "num":
            return Polynomial.constant(self.universe, float(value))
        if kind == "var":
            if value not in self.names:
                raise ParseError(f"variable {value} is not declared (universe {self.universe.names})")
            return Polynomial.variable(self.universe, self.names[value])
        if value == "(":
            inner = self.expr()
            self.expect(")")
            return inner
        raise ParseError(f"unexpected {value!r} in {self.text!r}")


def parse_polynomial(text: str, universe: Universe) -> Polynomial:
    """Parse a polynomial expression over the named variables of ``universe``."""
    return _Parser(text, universe).parse()


def format_number(value: float) -> str:
    if float(value).is_integer() and abs(value) < 1e16:
        return str(int(value))
    return repr(float(value))


def format_polynomial(p: Polynomial, tol: Optional[float] = None) -> str:
    """Canonical text: ascending graded-lex, '1' coefficients omitted on non-constant terms."""
    if tol is not None:
        p = p.cleaned(tol)
    names = p.universe.names
    pieces: List[str] = []
    for mono, coef in p.sorted_terms():
        factors = [names[s] if e == 1 else f"{names[s]}^{e}" for s, e in enumerate(mono) if e]
        magnitude = abs(coef)
        if not factors:
            body = format_number(magnitude)
        elif magnitude == 1.0:
            body = "*".join(factors)
        else:
            body = "*".join([format_number(magnitude)] + factors)
        if not pieces:
            pieces.append(f"-{body}" if coef < 0 else body)
        else:
            pieces.append(f" - {body}" if coef < 0 else f" + {body}")
    return "".join(pieces) if pieces else "0"

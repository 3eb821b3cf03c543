"""
Text grammar for transseries and parabolic Dulac germs.

    expr   := ['+' | '-'] term (('+' | '-') term)*
    term   := power (('*' | '/') power)*
    power  := atom ['^' exponent]
    atom   := NUMBER | 'x' | 'l' | 'l2' | 'u' | '(' expr ')'
    exponent := ['-' | '+'] NUMBER ['/' NUMBER] | '(' ['-' | '+'] NUMBER ['/' NUMBER] ')'

l is -1/log x, l2 = l(l(x)) and u = 1/l = -log x. `x^1/2` reads as x^(1/2): a '/'
directly after an exponent numeral followed by another numeral belongs to the exponent.
Numbers may be decimals; they are read as exact fractions.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional, Union

from .blocks import BlockSeries
from .errors import ParseError, SeriesError
from .rational import RationalU
from .transseries import TruncatedTransseries, format_transseries, inverse, mul, power

_TOKEN = re.compile(
    r"\s*(?:(?P<number>\d+(?:\.\d*)?|\.\d+)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^()]))"
)
_DEEP_LOG = re.compile(r"l(\d+)$")
SYMBOLS = {"x", "l", "l2", "u"}


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    position: int


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    position = 0
    stripped = text.rstrip()
    while position < len(stripped):
        match = _TOKEN.match(stripped, position)
        if match is None or match.end() == position:
            offset = position + (len(stripped[position:]) - len(stripped[position:].lstrip()))
            raise ParseError(f"unexpected character {stripped[offset]!r}", offset)
        kind = match.lastgroup
        tokens.append(Token(kind, match.group(kind), match.start(kind)))
        position = match.end()
    tokens.append(Token("end", "", len(stripped)))
    return tokens


def _check_symbol(token: Token) -> None:
    if token.text in SYMBOLS:
        return
    deep = _DEEP_LOG.match(token.text)
    if deep and int(deep.group(1)) > 2:
        raise ParseError(f"logarithm depth {deep.group(1)} > 2 is not supported", token.position)
    raise ParseError(f"unknown symbol {token.text!r}", token.position)


# --- algebras the parser evaluates into ---

class SeriesAlgebra:
    """Evaluate into TruncatedTransseries."""

    def __init__(self, x_cutoff=None, ell_cutoff: Optional[int] = None):
        self.x_cutoff = x_cutoff
        self.ell_cutoff = ell_cutoff

    def constant(self, value: Fraction):
        return TruncatedTransseries.constant(value)

    def symbol(self, name: str, position: int):
        exponents = {"x": (1, 0, 0), "l": (0, 1, 0), "l2": (0, 0, 1), "u": (0, -1, 0)}
        return TruncatedTransseries.monomial(*exponents[name])

    def add(self, a, b):
        return a + b

    def sub(self, a, b):
        return a - b

    def mul(self, a, b):
        return mul(a, b).with_cutoffs(self.x_cutoff, self.ell_cutoff)

    def div(self, a, b, position: int):
        try:
            return self.mul(a, inverse(b, self.x_cutoff, self.ell_cutoff))
        except SeriesError as exc:
            raise ParseError(str(exc), position) from exc

    def power(self, base, exponent: Fraction, position: int):
        if exponent.denominator != 1:
            if len(base) != 1:
                raise ParseError("rational exponents apply to single monomials only", position)
            (e, c), = base.terms
            if c != 1 or e.g1 or e.g2:
                raise ParseError("rational exponents apply to powers of x only", position)
            return TruncatedTransseries.monomial(e.g0 * exponent)
        try:
            return power(base, int(exponent), self.x_cutoff, self.ell_cutoff)
        except SeriesError as exc:
            raise ParseError(str(exc), position) from exc


class BlockAlgebra:
    """Evaluate into exact BlockSeries (no l2)."""

    def __init__(self, cutoff=None):
        self.cutoff = cutoff

    def constant(self, value: Fraction):
        return BlockSeries.constant(value)

    def symbol(self, name: str, position: int):
        if name == "x":
            return BlockSeries.identity()
        if name == "l":
            return BlockSeries.monomial(0, RationalU.u_power(-1))
        if name == "u":
            return BlockSeries.monomial(0, RationalU.u_power(1))
        raise ParseError("l2 cannot appear in a germ or generator", position)

    def add(self, a, b):
        return a + b

    def sub(self, a, b):
        return a - b

    def mul(self, a, b):
        return a.multiply(b, self.cutoff)

    def div(self, a, b, position: int):
        try:
            return self.mul(a, b.inverse(self.cutoff))
        except SeriesError as exc:
            raise ParseError(str(exc), position) from exc

    def power(self, base, exponent: Fraction, position: int):
        if exponent.denominator != 1:
            if len(base.blocks) != 1 or base.blocks[0][1] != RationalU.constant(1):
                raise ParseError("rational exponents apply to powers of x only", position)
            return BlockSeries.monomial(base.blocks[0][0] * exponent, 1)
        if len(base.blocks) == 1 and base.cutoff is None:
            order, q = base.blocks[0]
            k = int(exponent)
            if k < 0 and q.is_zero:
                raise ParseError("division by zero", position)
            return BlockSeries.monomial(order * k, q ** k)
        try:
            return base.power(int(exponent), self.cutoff)
        except SeriesError as exc:
            raise ParseError(str(exc), position) from exc


class _Parser:
    def __init__(self, text: str, algebra):
        self.tokens = tokenize(text)
        self.index = 0
        self.algebra = algebra

    @property
    def current(self) -> Token:
        return self.tokens[self.index]

    def peek(self, offset: int = 1) -> Token:
        return self.tokens[min(self.index + offset, len(self.tokens) - 1)]

    def advance(self) -> Token:
        token = self.current
        self.index += 1
        return token

    def expect(self, text: str) -> Token:
        if self.current.text != text:
            found = self.current.text or "end of input"
            raise ParseError(f"expected {text!r}, found {found!r}", self.current.position)
        return self.advance()

    def parse(self):
        if self.current.kind == "end":
            raise ParseError("empty expression", 0)
        value = self.expression()
        if self.current.kind != "end":
            raise ParseError(f"unexpected {self.current.text!r}", self.current.position)
        return value

    def expression(self):
        negative = False
        if self.current.text in ("+", "-"):
            negative = self.advance().text == "-"
        value = self.term()
        if negative:
            value = self.algebra.sub(self.algebra.constant(Fraction(0)), value)
        while self.current.text in ("+", "-"):
            operator = self.advance().text
            right = self.term()
            value = self.algebra.add(value, right) if operator == "+" else self.algebra.sub(value, right)
        return value

    def term(self):
        value = self.power()
        while self.current.text in ("*", "/"):
            operator = self.advance()
            right = self.power()
            if operator.text == "*":
                value = self.algebra.mul(value, right)
            else:
                value = self.algebra.div(value, right, operator.position)
        return value

    def power(self):
        base = self.atom()
        if self.current.text == "^":
            caret = self.advance()
            exponent = self.exponent()
            base = self.algebra.power(base, exponent, caret.position)
        return base

    def exponent(self) -> Fraction:
        if self.current.text == "(":
            self.advance()
            value = self.signed_rational()
            self.expect(")")
            return value
        return self.signed_rational()

    def signed_rational(self) -> Fraction:
        sign = 1
        if self.current.text in ("+", "-"):
            sign = -1 if self.advance().text == "-" else 1
        token = self.current
        if token.kind != "number":
            raise ParseError(f"non-rational exponent {token.text or 'end of input'!r}", token.position)
        self.advance()
        value = Fraction(token.text)
        if self.current.text == "/" and self.peek().kind == "number":
            self.advance()
            denominator = Fraction(self.advance().text)
            if denominator == 0:
                raise ParseError("zero denominator in exponent", token.position)
            value = value / denominator
        return sign * value

    def atom(self):
        token = self.current
        if token.kind == "number":
            self.advance()
            return self.algebra.constant(Fraction(token.text))
        if token.kind == "name":
            _check_symbol(token)
            self.advance()
            return self.algebra.symbol(token.text, token.position)
        if token.text == "(":
            self.advance()
            value = self.expression()
            self.expect(")")
            return value
        found = token.text or "end of input"
        raise ParseError(f"unexpected {found!r}", token.position)


def parse_transseries(text: str, x_cutoff=None, ell_cutoff: Optional[int] = None) -> TruncatedTransseries:
    """Parse a transseries; cutoffs are needed only when the text divides by a sum."""
    return _Parser(text, SeriesAlgebra(x_cutoff, ell_cutoff)).parse().with_cutoffs(x_cutoff, ell_cutoff)


def parse_block_series(text: str, cutoff=None) -> BlockSeries:
    """Parse into exact x-blocks with rational functions of u as coefficients."""
    return _Parser(text, BlockAlgebra(cutoff)).parse()


# --- Dulac germs ---

@dataclass(frozen=True)
class NumericSource:
    """Where numeric values of a germ come from: closed form, ODE flow of a generator, or the series."""

    kind: str
    expression: str = ""

    CLOSED_FORM = "closed-form"
    ODE = "ode"
    SERIES = "series"


@dataclass(frozen=True)
class DulacGermSpec:
    """
    f = x - sum_{i>=2} x^alpha_i P_i(u); blocks[0] is the identity block (1, 1).
    `cutoff` is the x-order through which the expansion is known (None: exact).
    """

    blocks: tuple[tuple[Fraction, RationalU], ...]
    cutoff: Optional[Fraction] = None
    numeric: Optional[NumericSource] = None
    text: str = field(default="", compare=False)

    @property
    def exponents(self) -> list[Fraction]:
        return [alpha for alpha, _ in self.blocks]

    @property
    def polynomials(self) -> list[RationalU]:
        return [p for _, p in self.blocks]

    def displacement(self) -> BlockSeries:
        """g = x - f."""
        return BlockSeries.build(self.blocks[1:], self.cutoff)

    def series(self) -> BlockSeries:
        return BlockSeries.identity() - self.displacement()

    def with_numeric(self, numeric: Optional[NumericSource]) -> "DulacGermSpec":
        return DulacGermSpec(self.blocks, self.cutoff, numeric, self.text)


def dulac_from_series(series: BlockSeries, text: str = "", numeric: Optional[NumericSource] = None) -> DulacGermSpec:
    """Validate the parabolic Dulac invariants on an exact block series."""
    if series.is_zero:
        raise ParseError("not parabolic: the germ is zero")
    order, lead = series.leading_block
    if order != 1 or lead != RationalU.constant(1):
        raise ParseError(f"not parabolic: the leading term must be x, found x^{order}*({lead})")
    if len(series.blocks) == 1:
        raise ParseError("not parabolic: the germ is the identity")
    blocks = [(Fraction(1), RationalU.constant(1))]
    for alpha, q in series.blocks[1:]:
        if not q.is_polynomial:
            raise ParseError(f"not a Dulac series: the x^{alpha} block {q} is not a polynomial in u")
        blocks.append((alpha, -q))
    return DulacGermSpec(tuple(blocks), series.cutoff, numeric, text)


def parse_dulac(text: str, cutoff=None, numeric: Optional[NumericSource] = None) -> DulacGermSpec:
    """Parse and validate a parabolic Dulac germ; P_i may be written in l^-1 or in u."""
    return dulac_from_series(parse_block_series(text, cutoff), text=text, numeric=numeric)


def serialize(value: Union[TruncatedTransseries, BlockSeries, DulacGermSpec], format: str = "text", M: Optional[int] = None) -> str:
    """Canonical text, or the JSON machine document when format == 'machine'."""
    if isinstance(value, DulacGermSpec):
        value = value.series().truncate(value.cutoff)
    if isinstance(value, BlockSeries):
        value = value.to_transseries(M)
    if format == "text":
        return format_transseries(value)
    if format == "machine":
        from .serializers import series_document

        return series_document(value).model_dump_json(indent=2)
    raise ValueError(f"unknown format {format!r}")


def deserialize(document: str) -> TruncatedTransseries:
    """Read the machine format back."""
    from .schemas import SeriesDocument
    from .serializers import transseries_from_document

    return transseries_from_document(SeriesDocument.model_validate_json(document))


# --- .germ files ---

@dataclass(frozen=True)
class GermFile:
    expression: Optional[str]
    numeric: Optional[NumericSource]


def parse_germ_text(text: str) -> GermFile:
    """
    One expression (may span lines) plus an optional trailer
    `# numeric: <closed form>` or `# numeric: ode:<generator>`. Other '#' lines are comments.
    """
    expression_lines = []
    numeric = None
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if body.lower().startswith("numeric:"):
                source = body[len("numeric:"):].strip()
                if source.lower().startswith("ode:"):
                    numeric = NumericSource(NumericSource.ODE, source[4:].strip())
                elif source.lower() in ("series", "series-proxy"):
                    numeric = NumericSource(NumericSource.SERIES)
                else:
                    numeric = NumericSource(NumericSource.CLOSED_FORM, source)
            continue
        expression_lines.append(line.split("#", 1)[0].strip())
    expression = " ".join(expression_lines).strip() or None
    if expression is None and (numeric is None or numeric.kind != NumericSource.ODE):
        raise ParseError("germ file has no expression and no ode generator")
    return GermFile(expression, numeric)


def load_germ_file(path: Union[str, Path]) -> GermFile:
    return parse_germ_text(Path(path).read_text(encoding="utf-8"))

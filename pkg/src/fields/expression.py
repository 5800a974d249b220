"""Expression language for scalar fields over named state coordinates.

Grammar (EBNF):

    expression = term , { ( "+" | "-" ) , term } ;
    term       = unary , { ( "*" | "/" ) , unary } ;
    unary      = "-" , unary | power ;
    power      = primary , [ "^" , unary ] ;            (* right associative *)
    primary    = number | identifier
               | function , "(" , expression , ")"
               | "(" , expression , ")" ;
    function   = "sin" | "cos" | "exp" | "log" | "sqrt" ;
    number     = digits , [ "." , [ digits ] ] , [ exponent ]
               | "." , digits , [ exponent ] ;
    exponent   = ( "e" | "E" ) , [ "+" | "-" ] , digits ;

`identifier` must be a declared coordinate, or `pi` when no coordinate is named so.
Unary minus binds looser than `^`: "-q^2" is "-(q^2)".
"""

from dataclasses import dataclass
import math
import re
from typing import Callable, List, Sequence, Tuple, Union

import numpy as np

from utils.errors import DomainError, ExpressionSyntaxError, UnknownIdentifierError
from .jet import Jet, seed_variables

FUNCTIONS = ("sin", "cos", "exp", "log", "sqrt")
BINARY_OPERATORS = ("+", "-", "*", "/", "^")

_TOKEN_RE = re.compile(
    r"\s*(?:"
    r"(?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()])"
    r")"
)
_IDENTIFIER_RE = re.compile(r"^[A-Za-z_][A-Za-z_0-9]*$")


# ---------- AST ----------
@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str
    index: int


@dataclass(frozen=True)
class Neg:
    operand: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Node"


Node = Union[Num, Var, Neg, BinOp, Call]


# ---------- tokenizer ----------
@dataclass(frozen=True)
class Token:
    kind: str   # "number" | "name" | "op" | "end"
    text: str
    position: int


def tokenize(text: str) -> List[Token]:
    tokens: List[Token] = []
    pos = 0
    while pos < len(text):
        if text[pos:].isspace():
            break
        match = _TOKEN_RE.match(text, pos)
        if match is None or match.end() == pos:
            offset = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise ExpressionSyntaxError(f"unexpected character {text[offset]!r}", offset, text)
        kind = match.lastgroup
        start = match.start(kind)
        tokens.append(Token(kind, match.group(kind), start))
        pos = match.end()
    tokens.append(Token("end", "", len(text)))
    return tokens


# ---------- parser ----------
class _Parser:
    def __init__(self, text: str, coordinates: Sequence[str]):
        self.text = text
        self.tokens = tokenize(text)
        self.index = 0
        self.coordinates = {name: i for i, name in enumerate(coordinates)}

    def peek(self) -> Token:
        return self.tokens[self.index]

    def advance(self) -> Token:
        token = self.tokens[self.index]
        self.index += 1
        return token

    def error(self, message: str, token: Token) -> ExpressionSyntaxError:
        if token.kind == "end":
            return ExpressionSyntaxError("unexpected end of input", token.position, self.text)
        return ExpressionSyntaxError(f"{message} {token.text!r}", token.position, self.text)

    def parse(self) -> Node:
        node = self.expression()
        token = self.peek()
        if token.kind != "end":
            raise self.error("unexpected token", token)
        return node

    def expression(self) -> Node:
        node = self.term()
        while self.peek().kind == "op" and self.peek().text in "+-":
            op = self.advance().text
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.peek().kind == "op" and self.peek().text in "*/":
            op = self.advance().text
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Node:
        token = self.peek()
        if token.kind == "op" and token.text == "-":
            self.advance()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Node:
        base = self.primary()
        if self.peek().kind == "op" and self.peek().text == "^":
            self.advance()
            return BinOp("^", base, self.unary())
        return base

    def primary(self) -> Node:
        token = self.advance()
        if token.kind == "number":
            value = float(token.text)
            if not math.isfinite(value):
                raise ExpressionSyntaxError(f"literal out of range {token.text!r}", token.position, self.text)
            return Num(value)
        if token.kind == "name":
            if token.text in FUNCTIONS:
                opening = self.advance()
                if opening.kind != "op" or opening.text != "(":
                    raise self.error(f"expected '(' after {token.text}, got", opening)
                arg = self.expression()
                self.expect_closing()
                return Call(token.text, arg)
            if token.text in self.coordinates:
                return Var(token.text, self.coordinates[token.text])
            if token.text == "pi":
                return Num(math.pi)
            raise UnknownIdentifierError(token.text, token.position)
        if token.kind == "op" and token.text == "(":
            node = self.expression()
            self.expect_closing()
            return node
        raise self.error("unexpected token", token)

    def expect_closing(self) -> None:
        token = self.advance()
        if token.kind != "op" or token.text != ")":
            raise self.error("expected ')', got", token)


def validate_coordinates(coordinates: Sequence[str]) -> Tuple[str, ...]:
    names = tuple(coordinates)
    if not names:
        raise ValueError("at least one coordinate name is required")
    if len(set(names)) != len(names):
        raise ValueError(f"coordinate names must be distinct: {list(names)}")
    for name in names:
        if not _IDENTIFIER_RE.match(name) or name in FUNCTIONS:
            raise ValueError(f"invalid coordinate name '{name}'")
    return names


# ---------- printer ----------
def print_node(node: Node) -> str:
    """Canonical text: binary operators fully parenthesised, literals via repr."""
    if isinstance(node, Num):
        text = repr(node.value)
        return f"(-{text[1:]})" if text.startswith("-") else text
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Neg):
        return f"(-{print_node(node.operand)})"
    if isinstance(node, BinOp):
        return f"({print_node(node.left)} {node.op} {print_node(node.right)})"
    if isinstance(node, Call):
        return f"{node.func}({print_node(node.arg)})"
    raise TypeError(f"not an expression node: {node!r}")


# ---------- evaluation ----------
def _float_function(name: str, v: float) -> float:
    if name == "sin":
        return math.sin(v)
    if name == "cos":
        return math.cos(v)
    if name == "exp":
        try:
            return math.exp(v)
        except OverflowError:
            raise DomainError(f"exp overflow at {v!r}") from None
    if name == "log":
        if v <= 0.0:
            raise DomainError(f"log of non-positive value {v!r}")
        return math.log(v)
    if name == "sqrt":
        if v < 0.0:
            raise DomainError(f"sqrt of negative value {v!r}")
        return math.sqrt(v)
    raise ValueError(f"unknown function '{name}'")


def _apply(name: str, v):
    if isinstance(v, Jet):
        return getattr(v, name)()
    return _float_function(name, v)


def _integer_power(base, n: int):
    if isinstance(base, Jet):
        return base.integer_power(n)
    if n < 0:
        if base == 0.0:
            raise DomainError("division by zero")
        base, n = 1.0 / base, -n
    result = 1.0
    while n:
        if n & 1:
            result *= base
        n >>= 1
        if n:
            base *= base
    return result


def _power(base, exponent):
    if isinstance(base, Jet):
        return base ** exponent
    if isinstance(exponent, Jet):
        return Jet.constant(base, exponent.dimension, exponent.order) ** exponent
    if float(exponent).is_integer():
        return _integer_power(base, int(exponent))
    if base <= 0.0:
        raise DomainError(f"non-integer power of non-positive base {base!r}")
    return base ** exponent


def _divide(a, b):
    if not isinstance(b, Jet) and b == 0.0:
        raise DomainError("division by zero")
    return a / b


Evaluator = Callable[[Sequence], object]


def compile_node(node: Node) -> Evaluator:
    """Turn an AST into a closure over a coordinate sequence (floats or jets)."""
    if isinstance(node, Num):
        value = node.value
        return lambda v: value
    if isinstance(node, Var):
        index = node.index
        return lambda v: v[index]
    if isinstance(node, Neg):
        operand = compile_node(node.operand)
        return lambda v: -operand(v)
    if isinstance(node, Call):
        arg = compile_node(node.arg)
        name = node.func
        return lambda v: _apply(name, arg(v))
    if isinstance(node, BinOp):
        left = compile_node(node.left)
        if node.op == "^" and isinstance(node.right, Num) and node.right.value.is_integer():
            n = int(node.right.value)
            return lambda v: _integer_power(left(v), n)
        right = compile_node(node.right)
        if node.op == "+":
            return lambda v: left(v) + right(v)
        if node.op == "-":
            return lambda v: left(v) - right(v)
        if node.op == "*":
            return lambda v: left(v) * right(v)
        if node.op == "/":
            return lambda v: _divide(left(v), right(v))
        return lambda v: _power(left(v), right(v))
    raise TypeError(f"not an expression node: {node!r}")


class Expression:
    """Parsed expression bound to an ordered coordinate list."""

    def __init__(self, text: str, coordinates: Sequence[str], root: Node):
        self.text = text
        self.coordinates = tuple(coordinates)
        self.root = root
        self._evaluator = compile_node(root)

    @property
    def dimension(self) -> int:
        return len(self.coordinates)

    def evaluate(self, x: Sequence[float]) -> float:
        """Value at x; domain violations and non-finite results raise DomainError."""
        try:
            value = self._evaluator([float(v) for v in x])
        except ZeroDivisionError:
            raise DomainError(f"division by zero in '{self.text}'") from None
        except OverflowError:
            raise DomainError(f"overflow in '{self.text}'") from None
        value = float(value)
        if not math.isfinite(value):
            raise DomainError(f"non-finite value of '{self.text}' at {list(x)}")
        return value

    def jet(self, x: Sequence[float], order: int = 1) -> Jet:
        """Value and derivatives at x by forward-mode evaluation."""
        x = np.asarray(x, dtype=float)
        try:
            result = self._evaluator(seed_variables(x, order))
        except ZeroDivisionError:
            raise DomainError(f"division by zero in '{self.text}'") from None
        except OverflowError:
            raise DomainError(f"overflow in '{self.text}'") from None
        if not isinstance(result, Jet):
            result = Jet.constant(result, len(x), order)
        if not result.is_finite():
            raise DomainError(f"non-finite derivative of '{self.text}' at {x.tolist()}")
        return result

    def print(self) -> str:
        return print_node(self.root)

    def variables(self) -> set:
        """Names of coordinates the expression actually references."""
        found = set()
        stack = [self.root]
        while stack:
            node = stack.pop()
            if isinstance(node, Var):
                found.add(node.name)
            elif isinstance(node, Neg):
                stack.append(node.operand)
            elif isinstance(node, Call):
                stack.append(node.arg)
            elif isinstance(node, BinOp):
                stack.extend((node.left, node.right))
        return found

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Expression):
            return NotImplemented
        return self.coordinates == other.coordinates and self.root == other.root

    def __hash__(self) -> int:
        return hash((self.coordinates, self.root))

    def __repr__(self) -> str:
        return f"Expression({self.print()!r}, coordinates={list(self.coordinates)!r})"


def parse_expression(text: str, coordinates: Sequence[str]) -> Expression:
    """Parse `text` over the declared coordinate names."""
    names = validate_coordinates(coordinates)
    root = _Parser(text, names).parse()
    return Expression(text, names, root)


def print_expression(expression: Expression) -> str:
    """Canonical text of a parsed expression."""
    return expression.print()

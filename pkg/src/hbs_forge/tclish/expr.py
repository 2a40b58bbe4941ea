"""The ``expr`` sublanguage: tokenizer, precedence parser and evaluator."""
from __future__ import annotations

import math
import re
from functools import lru_cache
from typing import TYPE_CHECKING, Any, Callable, Union

from .errors import ExprSyntaxError, ExprTypeError, TclError
from .parser import parse_braced_at, parse_cmdsub_at, parse_quoted_at, parse_var_at

if TYPE_CHECKING:
    from .interp import Interp

Number = Union[int, float]

_NUM_RE = re.compile(
    r"0[xX][0-9a-fA-F]+|0[bB][01]+|0[oO][0-7]+"
    r"|(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?"
)
_WORD_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_OPS = ("**", "<<", ">>", "<=", ">=", "==", "!=", "&&", "||",
        "+", "-", "*", "/", "%", "<", ">", "!", "~", "&", "|", "^", "?", ":", "(", ")", ",")

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def to_number(s: str) -> Number | None:
    """Parse a Tcl numeric string, or return None."""
    t = s.strip()
    if not t:
        return None
    sign = 1
    body = t
    if body[0] in "+-":
        sign = -1 if body[0] == "-" else 1
        body = body[1:]
    m = _NUM_RE.fullmatch(body)
    if m is None:
        low = body.lower()
        if low in ("inf", "infinity"):
            return sign * math.inf
        return None
    low = body.lower()
    if low.startswith("0x"):
        return sign * int(body[2:], 16)
    if low.startswith("0b"):
        return sign * int(body[2:], 2)
    if low.startswith("0o"):
        return sign * int(body[2:], 8)
    if any(c in body for c in ".eE"):
        return sign * float(body)
    return sign * int(body)


def format_number(v: Number) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, int):
        return str(v)
    if math.isinf(v):
        return "Inf" if v > 0 else "-Inf"
    return repr(v)


def to_bool(v: Any) -> bool:
    if isinstance(v, (int, float)):
        return v != 0
    n = to_number(v)
    if n is not None:
        return n != 0
    low = v.strip().lower()
    if low in _TRUE:
        return True
    if low in _FALSE:
        return False
    raise ExprTypeError(f'expected boolean value but got "{v}"')


# -- tokenizer --------------------------------------------------------------

def _tokenize(text: str) -> list[tuple[str, Any]]:
    toks: list[tuple[str, Any]] = []
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c in " \t\r\n\f\v":
            i += 1
            continue
        if c.isdigit() or (c == "." and i + 1 < n and text[i + 1].isdigit()):
            m = _NUM_RE.match(text, i)
            assert m is not None
            toks.append(("num", to_number(m.group(0))))
            i = m.end()
            continue
        if c == "$":
            ref, j = parse_var_at(text, i)
            if ref is None:
                raise ExprSyntaxError(f'invalid character "$" in expression "{text}"')
            toks.append(("var", ref.name))
            i = j
            continue
        if c == "[":
            sub, j = parse_cmdsub_at(text, i)
            toks.append(("cmd", sub))
            i = j
            continue
        if c == '"':
            word, j = parse_quoted_at(text, i)
            toks.append(("word", word))
            i = j
            continue
        if c == "{":
            raw, j = parse_braced_at(text, i)
            toks.append(("str", raw))
            i = j
            continue
        m = _WORD_RE.match(text, i)
        if m:
            w = m.group(0)
            if w in ("eq", "ne", "in", "ni"):
                toks.append(("op", w))
            else:
                toks.append(("name", w))
            i = m.end()
            continue
        for op in _OPS:
            if text.startswith(op, i):
                toks.append(("op", op))
                i += len(op)
                break
        else:
            raise ExprSyntaxError(f'invalid character "{c}" in expression "{text}"')
    toks.append(("end", None))
    return toks


# -- parser -----------------------------------------------------------------

_BINARY_LEVELS: list[tuple[str, ...]] = [
    ("||",), ("&&",), ("|",), ("^",), ("&",), ("in", "ni"), ("eq", "ne"),
    ("==", "!="), ("<", ">", "<=", ">="), ("<<", ">>"), ("+", "-"), ("*", "/", "%"),
]


class _ExprParser:
    def __init__(self, text: str):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self) -> tuple[str, Any]:
        return self.toks[self.i]

    def take(self) -> tuple[str, Any]:
        t = self.toks[self.i]
        self.i += 1
        return t

    def fail(self, why: str = "") -> ExprSyntaxError:
        msg = f'syntax error in expression "{self.text}"'
        if why:
            msg += f": {why}"
        return ExprSyntaxError(msg)

    def parse(self) -> tuple:
        if self.peek()[0] == "end":
            raise self.fail("empty expression")
        node = self.ternary()
        if self.peek()[0] != "end":
            raise self.fail("extra tokens at end of expression")
        return node

    def ternary(self) -> tuple:
        cond = self.binary(0)
        if self.peek() == ("op", "?"):
            self.take()
            a = self.ternary()
            if self.take() != ("op", ":"):
                raise self.fail('missing ":" in ternary')
            b = self.ternary()
            return ("tern", cond, a, b)
        return cond

    def binary(self, level: int) -> tuple:
        if level >= len(_BINARY_LEVELS):
            return self.power()
        ops = _BINARY_LEVELS[level]
        left = self.binary(level + 1)
        while True:
            kind, val = self.peek()
            if kind == "op" and val in ops:
                self.take()
                right = self.binary(level + 1)
                if val == "&&":
                    left = ("and", left, right)
                elif val == "||":
                    left = ("or", left, right)
                else:
                    left = ("bin", val, left, right)
            else:
                return left

    def power(self) -> tuple:
        base = self.unary()
        if self.peek() == ("op", "**"):
            self.take()
            return ("bin", "**", base, self.power())
        return base

    def unary(self) -> tuple:
        kind, val = self.peek()
        if kind == "op" and val in ("-", "+", "!", "~"):
            self.take()
            return ("un", val, self.unary())
        return self.primary()

    def primary(self) -> tuple:
        kind, val = self.take()
        if kind == "num":
            return ("lit", val)
        if kind == "str":
            return ("lit", val)
        if kind == "var":
            return ("var", val)
        if kind == "cmd":
            return ("cmd", val)
        if kind == "word":
            return ("word", val)
        if kind == "op" and val == "(":
            node = self.ternary()
            if self.take() != ("op", ")"):
                raise self.fail('missing ")"')
            return node
        if kind == "name":
            if self.peek() == ("op", "("):
                self.take()
                args = []
                if self.peek() != ("op", ")"):
                    args.append(self.ternary())
                    while self.peek() == ("op", ","):
                        self.take()
                        args.append(self.ternary())
                if self.take() != ("op", ")"):
                    raise self.fail('missing ")" after function arguments')
                return ("call", val, args)
            low = val.lower()
            if low in _TRUE or low in _FALSE:
                return ("lit", val)
            raise ExprSyntaxError(f'invalid bareword "{val}" in expression "{self.text}"')
        raise self.fail()


@lru_cache(maxsize=2048)
def parse_expr(text: str) -> tuple:
    return _ExprParser(text).parse()


# -- evaluator --------------------------------------------------------------

def _num(v: Any, op: str) -> Number:
    if isinstance(v, (int, float)):
        return v
    n = to_number(v)
    if n is None:
        raise ExprTypeError(f'can\'t use non-numeric string "{v}" as operand of "{op}"')
    return n


def _int(v: Any, op: str) -> int:
    n = _num(v, op)
    if isinstance(n, float):
        raise ExprTypeError(f'can\'t use floating-point value "{format_number(n)}" as operand of "{op}"')
    return n


def _as_str(v: Any) -> str:
    return v if isinstance(v, str) else format_number(v)


def _maybe_num(v: Any) -> Number | None:
    if isinstance(v, (int, float)):
        return v
    return to_number(v)


def _compare(op: str, a: Any, b: Any) -> bool:
    na, nb = _maybe_num(a), _maybe_num(b)
    if na is not None and nb is not None:
        x: Any = na
        y: Any = nb
    else:
        x, y = _as_str(a), _as_str(b)
    if op == "==":
        return x == y
    if op == "!=":
        return x != y
    if op == "<":
        return x < y
    if op == ">":
        return x > y
    if op == "<=":
        return x <= y
    return x >= y


def _arith(op: str, a: Any, b: Any) -> Number:
    x, y = _num(a, op), _num(b, op)
    if op == "+":
        return x + y
    if op == "-":
        return x - y
    if op == "*":
        return x * y
    if op == "/":
        if isinstance(x, int) and isinstance(y, int):
            if y == 0:
                raise TclError("divide by zero")
            return x // y
        if y == 0:
            raise TclError("divide by zero")
        return x / y
    if op == "%":
        xi, yi = _int(a, op), _int(b, op)
        if yi == 0:
            raise TclError("divide by zero")
        return xi % yi
    if op == "**":
        if isinstance(x, int) and isinstance(y, int) and y >= 0:
            return x ** y
        return float(x) ** float(y)
    raise TclError(f"unsupported operator {op}")


_FUNCS: dict[str, Callable[..., Number]] = {
    "abs": lambda x: abs(x),
    "int": lambda x: int(x),
    "double": lambda x: float(x),
    "round": lambda x: int(math.floor(x + 0.5)) if x >= 0 else -int(math.floor(-x + 0.5)),
    "min": lambda *xs: min(xs),
    "max": lambda *xs: max(xs),
}


class ExprEvaluator:
    def __init__(self, interp: "Interp"):
        self.interp = interp

    def eval(self, node: tuple) -> Any:
        kind = node[0]
        if kind == "lit":
            return node[1]
        if kind == "var":
            return self.interp.get_var(node[1])
        if kind == "cmd":
            return self.interp.eval_nodes(node[1].nodes)
        if kind == "word":
            return self.interp.substitute(node[1])
        if kind == "and":
            return 1 if to_bool(self.eval(node[1])) and to_bool(self.eval(node[2])) else 0
        if kind == "or":
            return 1 if to_bool(self.eval(node[1])) or to_bool(self.eval(node[2])) else 0
        if kind == "tern":
            return self.eval(node[2]) if to_bool(self.eval(node[1])) else self.eval(node[3])
        if kind == "un":
            op, v = node[1], self.eval(node[2])
            if op == "!":
                return 0 if to_bool(v) else 1
            if op == "~":
                return ~_int(v, op)
            n = _num(v, op)
            return -n if op == "-" else n
        if kind == "bin":
            op = node[1]
            a, b = self.eval(node[2]), self.eval(node[3])
            if op in ("eq", "ne"):
                same = _as_str(a) == _as_str(b)
                return int(same if op == "eq" else not same)
            if op in ("in", "ni"):
                from .lists import split_list
                found = _as_str(a) in split_list(_as_str(b))
                return int(found if op == "in" else not found)
            if op in ("==", "!=", "<", ">", "<=", ">="):
                return int(_compare(op, a, b))
            if op in ("&", "|", "^", "<<", ">>"):
                x, y = _int(a, op), _int(b, op)
                if op == "&":
                    return x & y
                if op == "|":
                    return x | y
                if op == "^":
                    return x ^ y
                return x << y if op == "<<" else x >> y
            return _arith(op, a, b)
        if kind == "call":
            fn = _FUNCS.get(node[1])
            if fn is None:
                raise TclError(f'invalid command name "tcl::mathfunc::{node[1]}"')
            args = [_num(self.eval(a), node[1]) for a in node[2]]
            try:
                return fn(*args)
            except TypeError:
                raise TclError(f'wrong # args for math function "{node[1]}"') from None
        raise TclError(f"bad expression node {kind}")


def eval_expr(text: str, interp: "Interp") -> str:
    """Evaluate ``text`` as an expression; return the Tcl string result."""
    node = parse_expr(text)
    value = ExprEvaluator(interp).eval(node)
    if isinstance(value, str):
        n = to_number(value)
        if n is not None and node[0] != "lit":
            return format_number(n)
        return value
    return format_number(value)

"""Parse tree and parser for the Tcl subset used in ``.hbs`` files.

A script is a list of :class:`ScriptNode` (one per command).  Each node is a
sequence of words and each word a sequence of parts.  Braced words are kept
raw; they are only parsed again if some command evaluates them.
"""
from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Union

from .errors import TclError


class UnbalancedDelimiter(TclError):
    def __init__(self, line: int, kind: str, message: str | None = None):
        self.line = line
        self.kind = kind
        super().__init__(message or f"line {line}: missing close-{_CLOSERS[kind]} for {kind!r}")


_CLOSERS = {"{": "brace", "[": "bracket", '"': "quote"}


@dataclass(frozen=True)
class Literal:
    text: str


@dataclass(frozen=True)
class VarRef:
    name: str


@dataclass(frozen=True)
class CmdSub:
    nodes: tuple["ScriptNode", ...]
    raw: str


@dataclass(frozen=True)
class Braced:
    raw: str


Part = Union[Literal, VarRef, CmdSub, Braced]


@dataclass(frozen=True)
class Word:
    parts: tuple[Part, ...]
    quoted: bool = False

    @property
    def is_braced(self) -> bool:
        return len(self.parts) == 1 and isinstance(self.parts[0], Braced)

    @property
    def is_static(self) -> bool:
        return all(isinstance(p, (Literal, Braced)) for p in self.parts)

    def static_text(self) -> str:
        out = []
        for p in self.parts:
            out.append(p.text if isinstance(p, Literal) else p.raw)  # type: ignore[union-attr]
        return "".join(out)


@dataclass(frozen=True)
class ScriptNode:
    words: tuple[Word, ...]
    line: int
    text: str
    doc: str = field(default="", compare=False)


_WS = " \t\r\f\v"
_BACKSLASH_MAP = {
    "a": "\a", "b": "\b", "f": "\f", "n": "\n",
    "r": "\r", "t": "\t", "v": "\v",
}


def _is_name_char(c: str) -> bool:
    return c.isalnum() or c == "_"


def backslash_subst(src: str, i: int) -> tuple[str, int]:
    """Decode the escape starting at ``src[i] == '\\'``; return (text, next index)."""
    n = len(src)
    if i + 1 >= n:
        return "\\", i + 1
    c = src[i + 1]
    if c == "\n":
        j = i + 2
        while j < n and src[j] in " \t":
            j += 1
        return " ", j
    if c in _BACKSLASH_MAP:
        return _BACKSLASH_MAP[c], i + 2
    if c in "01234567":
        j = i + 1
        while j < n and j < i + 4 and src[j] in "01234567":
            j += 1
        return chr(int(src[i + 1:j], 8) & 0xFF), j
    if c == "x":
        j = i + 2
        while j < n and j < i + 4 and src[j] in "0123456789abcdefABCDEF":
            j += 1
        if j == i + 2:
            return "x", i + 2
        return chr(int(src[i + 2:j], 16)), j
    if c == "u":
        j = i + 2
        while j < n and j < i + 6 and src[j] in "0123456789abcdefABCDEF":
            j += 1
        if j == i + 2:
            return "u", i + 2
        return chr(int(src[i + 2:j], 16)), j
    return c, i + 2


class _Parser:
    def __init__(self, src: str):
        self.src = src
        self.n = len(src)
        self._nl = [i for i, c in enumerate(src) if c == "\n"]

    def line_of(self, pos: int) -> int:
        return bisect.bisect_right(self._nl, pos - 1) + 1

    def error(self, pos: int, kind: str) -> UnbalancedDelimiter:
        return UnbalancedDelimiter(self.line_of(pos), kind)

    # script level --------------------------------------------------------

    def parse_script(self, pos: int, nested: bool) -> tuple[list[ScriptNode], int]:
        """Parse commands until end of input, or until ``]`` when nested."""
        src, n = self.src, self.n
        nodes: list[ScriptNode] = []
        doc_lines: list[str] = []
        while True:
            # skip separators between commands, collecting comment blocks
            blank_run = 0
            while pos < n:
                c = src[pos]
                if c in _WS or c == ";":
                    pos += 1
                elif c == "\n":
                    blank_run += 1
                    if blank_run > 1:
                        doc_lines = []
                    pos += 1
                elif c == "\\" and pos + 1 < n and src[pos + 1] == "\n":
                    pos += 2
                elif c == "#":
                    start = pos
                    while pos < n and src[pos] != "\n":
                        if src[pos] == "\\" and pos + 1 < n:
                            pos += 2
                        else:
                            pos += 1
                    text = src[start + 1:pos]
                    doc_lines.append(text[1:] if text.startswith(" ") else text)
                    blank_run = 0
                else:
                    break
            if pos >= n:
                if nested:
                    raise self.error(pos, "[")
                return nodes, pos
            if nested and src[pos] == "]":
                return nodes, pos + 1
            start = pos
            words, pos = self.parse_command(pos, nested)
            if words:
                text = src[start:pos].rstrip()
                nodes.append(ScriptNode(tuple(words), self.line_of(start), text,
                                        "\n".join(doc_lines)))
            doc_lines = []

    def parse_command(self, pos: int, nested: bool) -> tuple[list[Word], int]:
        src, n = self.src, self.n
        words: list[Word] = []
        while pos < n:
            c = src[pos]
            if c in _WS:
                pos += 1
                continue
            if c == "\\" and pos + 1 < n and src[pos + 1] == "\n":
                pos = backslash_subst(src, pos)[1]
                continue
            if c == "\n" or c == ";":
                return words, pos
            if nested and c == "]":
                return words, pos
            word, pos = self.parse_word(pos, nested)
            words.append(word)
        return words, pos

    # word level ----------------------------------------------------------

    def _check_word_end(self, pos: int, nested: bool, what: str) -> None:
        if pos >= self.n:
            return
        c = self.src[pos]
        if c in _WS or c in "\n;" or (nested and c == "]"):
            return
        if c == "\\" and pos + 1 < self.n and self.src[pos + 1] == "\n":
            return
        raise TclError(f"line {self.line_of(pos)}: extra characters after close-{what}")

    def parse_word(self, pos: int, nested: bool) -> tuple[Word, int]:
        c = self.src[pos]
        if c == "{":
            raw, pos = self.parse_braced(pos)
            self._check_word_end(pos, nested, "brace")
            return Word((Braced(raw),)), pos
        if c == '"':
            parts, pos = self.parse_subst(pos + 1, stop='"', nested=nested)
            self._check_word_end(pos, nested, "quote")
            return Word(tuple(parts), quoted=True), pos
        parts, pos = self.parse_subst(pos, stop=None, nested=nested)
        return Word(tuple(parts)), pos

    def parse_braced(self, pos: int) -> tuple[str, int]:
        """``src[pos] == '{'``; return raw body and index after the close brace."""
        src, n = self.src, self.n
        start = pos
        depth = 1
        pos += 1
        out: list[str] = []
        seg = pos
        while pos < n:
            c = src[pos]
            if c == "\\":
                if pos + 1 < n and src[pos + 1] == "\n":
                    out.append(src[seg:pos])
                    sub, pos = backslash_subst(src, pos)
                    out.append(sub)
                    seg = pos
                    continue
                pos += 2
                continue
            if c == "{":
                depth += 1
            elif c == "}":
                depth -= 1
                if depth == 0:
                    out.append(src[seg:pos])
                    return "".join(out), pos + 1
            pos += 1
        raise self.error(start, "{")

    def parse_subst(self, pos: int, stop: str | None, nested: bool) -> tuple[list[Part], int]:
        """Parse a bare (stop=None) or quoted (stop='"') word with substitutions."""
        src, n = self.src, self.n
        start = pos
        parts: list[Part] = []
        buf: list[str] = []

        def flush() -> None:
            if buf:
                parts.append(Literal("".join(buf)))
                buf.clear()

        while pos < n:
            c = src[pos]
            if stop is None:
                if c in _WS or c in "\n;":
                    break
                if nested and c == "]":
                    break
                if c == "\\" and pos + 1 < n and src[pos + 1] == "\n":
                    break
            elif c == stop:
                flush()
                return parts, pos + 1
            if c == "\\":
                text, pos = backslash_subst(src, pos)
                buf.append(text)
            elif c == "$":
                ref, pos = self.parse_var(pos)
                if ref is None:
                    buf.append("$")
                else:
                    flush()
                    parts.append(ref)
            elif c == "[":
                nodes, end = self.parse_script(pos + 1, nested=True)
                flush()
                parts.append(CmdSub(tuple(nodes), src[pos + 1:end - 1]))
                pos = end
            else:
                buf.append(c)
                pos += 1
        if stop is not None:
            raise self.error(start - 1, '"')
        flush()
        return parts, pos

    def parse_var(self, pos: int) -> tuple[VarRef | None, int]:
        """``src[pos] == '$'``; returns (None, pos+1) when no name follows."""
        src, n = self.src, self.n
        p = pos + 1
        if p < n and src[p] == "{":
            end = src.find("}", p + 1)
            if end < 0:
                raise self.error(p, "{")
            return VarRef(src[p + 1:end]), end + 1
        q = p
        while q < n:
            if _is_name_char(src[q]):
                q += 1
            elif src[q] == ":" and q + 1 < n and src[q + 1] == ":":
                q += 2
                while q < n and src[q] == ":":
                    q += 1
            else:
                break
        if q == p:
            return None, p
        return VarRef(src[p:q]), q


@lru_cache(maxsize=4096)
def _parse_cached(source: str) -> tuple[ScriptNode, ...]:
    nodes, _ = _Parser(source).parse_script(0, nested=False)
    return tuple(nodes)


def parse_script(source: str) -> list[ScriptNode]:
    """Split ``source`` into command nodes.

    Raises :class:`UnbalancedDelimiter` for an unclosed brace, bracket or quote.
    """
    return list(_parse_cached(source))


def parse_script_tuple(source: str) -> tuple[ScriptNode, ...]:
    return _parse_cached(source)


def parse_quoted_at(source: str, pos: int) -> tuple[Word, int]:
    """Parse a ``"..."`` word starting at ``pos`` (used by the expression parser)."""
    p = _Parser(source)
    parts, end = p.parse_subst(pos + 1, stop='"', nested=False)
    return Word(tuple(parts), quoted=True), end


def parse_cmdsub_at(source: str, pos: int) -> tuple[CmdSub, int]:
    """Parse a ``[...]`` substitution starting at ``pos``."""
    p = _Parser(source)
    nodes, end = p.parse_script(pos + 1, nested=True)
    return CmdSub(tuple(nodes), source[pos + 1:end - 1]), end


def parse_var_at(source: str, pos: int) -> tuple[VarRef | None, int]:
    return _Parser(source).parse_var(pos)


def parse_braced_at(source: str, pos: int) -> tuple[str, int]:
    return _Parser(source).parse_braced(pos)

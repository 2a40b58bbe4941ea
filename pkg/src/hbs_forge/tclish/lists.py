"""Tcl list values: splitting, quoting, and glob-style matching."""
from __future__ import annotations

import re
from functools import lru_cache

from .errors import TclError
from .parser import backslash_subst

_LIST_WS = " \t\n\r\f\v"


def split_list(text: str) -> list[str]:
    """Parse a Tcl list string into its elements."""
    out: list[str] = []
    i, n = 0, len(text)
    while True:
        while i < n and text[i] in _LIST_WS:
            i += 1
        if i >= n:
            return out
        c = text[i]
        if c == "{":
            depth, j = 1, i + 1
            while j < n:
                if text[j] == "\\":
                    j += 2
                    continue
                if text[j] == "{":
                    depth += 1
                elif text[j] == "}":
                    depth -= 1
                    if depth == 0:
                        break
                j += 1
            if j >= n:
                raise TclError("unmatched open brace in list")
            out.append(text[i + 1:j])
            i = j + 1
            if i < n and text[i] not in _LIST_WS:
                raise TclError("list element in braces followed by \"%s\" instead of space" % text[i:i + 1])
        elif c == '"':
            buf: list[str] = []
            j = i + 1
            while j < n and text[j] != '"':
                if text[j] == "\\":
                    s, j = backslash_subst(text, j)
                    buf.append(s)
                else:
                    buf.append(text[j])
                    j += 1
            if j >= n:
                raise TclError("unmatched open quote in list")
            out.append("".join(buf))
            i = j + 1
            if i < n and text[i] not in _LIST_WS:
                raise TclError("list element in quotes followed by \"%s\" instead of space" % text[i:i + 1])
        else:
            buf = []
            j = i
            while j < n and text[j] not in _LIST_WS:
                if text[j] == "\\":
                    s, j = backslash_subst(text, j)
                    buf.append(s)
                else:
                    buf.append(text[j])
                    j += 1
            out.append("".join(buf))
            i = j


_ESCAPES = {"\n": "\\n", "\t": "\\t", "\r": "\\r", "\f": "\\f", "\v": "\\v"}
_BRACE_PREFERRED = set("[$; \t\n\r\f\v")
_ESCAPE_PREFERRED = set(']"')


def _scan_element(s: str, first: bool) -> tuple[str, bool]:
    """How Tcl would quote ``s`` as a list element.

    Returns the mode ("none", "brace" or "escape") and whether the braces in
    ``s`` are unbalanced.
    """
    forbid_none = prefer_brace = prefer_escape = require_escape = unmatched = False
    if s[0] in '{"' or (first and s[0] == "#"):
        forbid_none = prefer_brace = True
    depth = 0
    i = 0
    while i < len(s):
        c = s[i]
        if c == "{":
            depth += 1
        elif c == "}":
            depth -= 1
            if depth < 0:
                require_escape = unmatched = True
        elif c == "\\":
            if i + 1 == len(s) or s[i + 1] == "\n":
                require_escape = True
            elif s[i + 1] in "{}\\":
                i += 1
            forbid_none = prefer_brace = True
        elif c in _BRACE_PREFERRED:
            forbid_none = prefer_brace = True
        elif c in _ESCAPE_PREFERRED:
            forbid_none = prefer_escape = True
        i += 1
    if depth != 0:
        require_escape = unmatched = True
    if not forbid_none and not require_escape:
        return "none", unmatched
    if require_escape or (prefer_escape and not prefer_brace):
        return "escape", unmatched
    return "brace", unmatched


def quote_element(s: str, first: bool = True) -> str:
    if s == "":
        return "{}"
    mode, unmatched = _scan_element(s, first)
    if mode == "none":
        return s
    if mode == "brace":
        return "{" + s + "}"
    out = []
    for i, c in enumerate(s):
        if c in _ESCAPES:
            out.append(_ESCAPES[c])
        elif c in "{}":
            out.append("\\" + c if unmatched or i == 0 else c)
        elif c in '[]$;\\" ' or (c == "#" and i == 0 and first):
            out.append("\\" + c)
        else:
            out.append(c)
    return "".join(out)


def format_list(items: list[str]) -> str:
    return " ".join(quote_element(s, first=(i == 0)) for i, s in enumerate(items))


@lru_cache(maxsize=512)
def _glob_regex(pattern: str, brackets: bool) -> re.Pattern[str]:
    out = []
    i, n = 0, len(pattern)
    while i < n:
        c = pattern[i]
        if c == "*":
            out.append(".*")
        elif c == "?":
            out.append(".")
        elif c == "\\" and i + 1 < n:
            i += 1
            out.append(re.escape(pattern[i]))
        elif c == "[" and brackets:
            j = pattern.find("]", i + 1)
            if j < 0:
                out.append(re.escape(c))
            else:
                body = pattern[i + 1:j]
                parts = []
                k = 0
                while k < len(body):
                    if k + 2 < len(body) and body[k + 1] == "-":
                        lo, hi = sorted((body[k], body[k + 2]))
                        parts.append(re.escape(lo) + "-" + re.escape(hi))
                        k += 3
                    else:
                        parts.append(re.escape(body[k]))
                        k += 1
                out.append("[" + "".join(parts) + "]")
                i = j
        else:
            out.append(re.escape(c))
        i += 1
    return re.compile("".join(out), re.S)


def glob_match(pattern: str, text: str, nocase: bool = False, brackets: bool = True) -> bool:
    """Tcl ``string match`` semantics; ``brackets=False`` restricts to ``*`` and ``?``."""
    if nocase:
        pattern, text = pattern.lower(), text.lower()
    return _glob_regex(pattern, brackets).fullmatch(text) is not None

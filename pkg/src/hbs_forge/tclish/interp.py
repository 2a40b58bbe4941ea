"""Evaluator for the Tcl subset: namespaces, procs, substitution, dispatch."""
from __future__ import annotations

import os
import sys
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Protocol, TextIO

from .errors import (
    ArityError,
    BreakSignal,
    ContinueSignal,
    DuplicateBuiltin,
    ReturnSignal,
    TclError,
    UndefinedVariable,
    UnknownCommand,
)
from .lists import format_list, quote_element
from .parser import Braced, CmdSub, Literal, ScriptNode, VarRef, Word, parse_script_tuple

Builtin = Callable[["Interp", list[str]], str]
UnknownHandler = Callable[["Interp", ScriptNode], str]

MAX_NESTING = 1000


def split_qualified(name: str) -> tuple[str, str]:
    """Split ``a::b::c`` into (``a::b``, ``c``); the head is '' for plain names."""
    idx = name.rfind("::")
    if idx < 0:
        return "", name
    head = name[:idx].rstrip(":")
    if not head and name.startswith("::"):
        head = "::"
    return head, name[idx + 2:]


def join_ns(ns: str, name: str) -> str:
    if ns == "::":
        return "::" + name
    return ns + "::" + name


def _normalize_ns_path(path: str) -> list[str]:
    return [p for p in path.split("::") if p]


@dataclass
class ProcDef:
    fq_name: str
    params: list[tuple[str, Optional[str]]]
    has_rest: bool
    body: str
    defining_file: Optional[str]
    doc: str = ""

    @property
    def namespace(self) -> str:
        head, _ = split_qualified(self.fq_name)
        return head or "::"

    @property
    def name(self) -> str:
        return split_qualified(self.fq_name)[1]

    def arity(self) -> tuple[int, Optional[int]]:
        required = sum(1 for _, d in self.params if d is None)
        if self.has_rest:
            return required, None
        return required, len(self.params)

    def usage(self, called_as: str) -> str:
        parts = [called_as]
        for name, default in self.params:
            parts.append(name if default is None else f"?{name}?")
        if self.has_rest:
            parts.append("?arg ...?")
        return " ".join(parts)


@dataclass
class Namespace:
    path: str
    parent: Optional["Namespace"]
    vars: dict[str, str] = field(default_factory=dict)
    children: dict[str, "Namespace"] = field(default_factory=dict)


@dataclass
class Frame:
    namespace: Namespace
    locals: Optional[dict[str, str]]
    proc: Optional[ProcDef] = None
    label: str = ""
    # local name -> fully qualified namespace variable (variable/global)
    links: dict[str, str] = field(default_factory=dict)


class CallObserver(Protocol):
    def enter(self, interp: "Interp", proc: ProcDef) -> object: ...
    def exit(self, interp: "Interp", proc: ProcDef, token: object) -> None: ...


class Interp:
    """A single interpreter environment (confined to one thread at a time)."""

    def __init__(self, stdout: Optional[TextIO] = None, stderr: Optional[TextIO] = None,
                 cwd: Optional[str] = None, install_core: bool = True):
        self.global_ns = Namespace("::", None)
        self.frames: list[Frame] = [Frame(self.global_ns, None, label="script")]
        self.procs: dict[str, ProcDef] = {}
        self.builtins: dict[str, Builtin] = {}
        self.unknown_handler: Optional[UnknownHandler] = None
        self.observers: list[CallObserver] = []
        self.stdout: TextIO = stdout if stdout is not None else sys.stdout
        self.stderr: TextIO = stderr if stderr is not None else sys.stderr
        self.cwd = os.path.abspath(cwd or os.getcwd())
        self.current_file: Optional[str] = None
        self.current_node: Optional[ScriptNode] = None
        self.dry_run = False
        self.ns_docs: dict[str, str] = {}
        self._depth = 0
        if install_core:
            from .builtins import install_core_builtins
            install_core_builtins(self)

    # -- namespaces ---------------------------------------------------------

    @property
    def frame(self) -> Frame:
        return self.frames[-1]

    @property
    def current_namespace(self) -> Namespace:
        return self.frame.namespace

    def find_namespace(self, path: str, create: bool = False,
                       base: Optional[Namespace] = None) -> Optional[Namespace]:
        """Resolve a namespace path; relative paths start at ``base`` (default current)."""
        if path.startswith("::"):
            ns = self.global_ns
        else:
            ns = base if base is not None else self.current_namespace
        for part in _normalize_ns_path(path):
            child = ns.children.get(part)
            if child is None:
                if not create:
                    return None
                child = Namespace(join_ns(ns.path, part), ns)
                ns.children[part] = child
            ns = child
        return ns

    def namespace_exists(self, path: str) -> bool:
        return self.find_namespace(path if path.startswith("::") else "::" + path) is not None

    def iter_namespaces(self) -> Iterable[Namespace]:
        stack = [self.global_ns]
        while stack:
            ns = stack.pop()
            yield ns
            stack.extend(ns.children.values())

    # -- variables ----------------------------------------------------------

    def _lookup_ns_for_var(self, name: str) -> tuple[Optional[Namespace], str]:
        head, tail = split_qualified(name)
        if head.startswith("::"):
            return self.find_namespace(head), tail
        rel = self.find_namespace(head)
        glob = self.find_namespace("::" + head)
        for ns in (rel, glob):
            if ns is not None and tail in ns.vars:
                return ns, tail
        return (rel if rel is not None else glob), tail

    def get_var(self, name: str) -> str:
        if "::" in name:
            ns, tail = self._lookup_ns_for_var(name)
            if ns is None or tail not in ns.vars:
                raise UndefinedVariable(name)
            return ns.vars[tail]
        frame = self.frame
        if name in frame.links:
            return self.get_var(frame.links[name])
        if frame.locals is not None:
            try:
                return frame.locals[name]
            except KeyError:
                raise UndefinedVariable(name) from None
        ns = frame.namespace
        if name in ns.vars:
            return ns.vars[name]
        if name in self.global_ns.vars:
            return self.global_ns.vars[name]
        raise UndefinedVariable(name)

    def set_var(self, name: str, value: str) -> str:
        if "::" in name:
            ns, tail = self._lookup_ns_for_var(name)
            if ns is None:
                raise TclError(f'can\'t set "{name}": parent namespace doesn\'t exist')
            ns.vars[tail] = value
            return value
        frame = self.frame
        if name in frame.links:
            return self.set_var(frame.links[name], value)
        if frame.locals is not None:
            frame.locals[name] = value
            return value
        ns = frame.namespace
        if name not in ns.vars and ns is not self.global_ns and name in self.global_ns.vars:
            ns = self.global_ns
        ns.vars[name] = value
        return value

    def var_exists(self, name: str) -> bool:
        try:
            self.get_var(name)
        except UndefinedVariable:
            return False
        return True

    def unset_var(self, name: str) -> None:
        if "::" in name:
            ns, tail = self._lookup_ns_for_var(name)
            if ns is None or tail not in ns.vars:
                raise TclError(f'can\'t unset "{name}": no such variable')
            del ns.vars[tail]
            return
        frame = self.frame
        if name in frame.links:
            self.unset_var(frame.links[name])
            return
        table = frame.locals if frame.locals is not None else frame.namespace.vars
        if name not in table:
            raise TclError(f'can\'t unset "{name}": no such variable')
        del table[name]

    def link_var(self, local: str, fq_name: str) -> None:
        """Make ``local`` in the current proc frame an alias of a namespace variable."""
        frame = self.frame
        if frame.locals is None:
            return
        if local in frame.locals:
            raise TclError(f'variable "{local}" already exists')
        frame.links[local] = fq_name

    def set_ns_var(self, fq_name: str, value: str) -> None:
        """Set a fully qualified namespace variable, creating namespaces on the way."""
        head, tail = split_qualified(fq_name if fq_name.startswith("::") else "::" + fq_name)
        ns = self.find_namespace(head, create=True)
        assert ns is not None
        ns.vars[tail] = value

    # -- commands -----------------------------------------------------------

    def register_builtin(self, name: str, fn: Builtin) -> None:
        fq = name if name.startswith("::") else "::" + name
        if fq in self.builtins:
            raise DuplicateBuiltin(name.lstrip(":"))
        self.builtins[fq] = fn
        head, _ = split_qualified(fq)
        if head and head != "::":
            self.find_namespace(head, create=True)

    def define_proc(self, proc: ProcDef) -> None:
        self.procs[proc.fq_name] = proc

    def _candidates(self, name: str) -> list[str]:
        if name.startswith("::"):
            return [name]
        ns = self.current_namespace
        local = join_ns(ns.path, name)
        if ns is self.global_ns:
            return [local]
        return [local, "::" + name]

    def resolve_command(self, name: str) -> Optional[str]:
        """Return the fully qualified name a command word dispatches to."""
        for fq in self._candidates(name):
            if fq in self.procs or fq in self.builtins:
                return fq
        return None

    def qualify_proc_name(self, name: str) -> str:
        if name.startswith("::"):
            return name
        return join_ns(self.current_namespace.path, name)

    def invoke(self, argv: list[str], node: Optional[ScriptNode] = None) -> str:
        """Dispatch an already-substituted command."""
        name = argv[0]
        fq = self.resolve_command(name)
        if fq is None:
            if self.unknown_handler is not None and node is not None:
                return self.unknown_handler(self, node)
            raise UnknownCommand(name)
        proc = self.procs.get(fq)
        if proc is not None:
            return self.call_proc(proc, argv[1:], called_as=name)
        return self.builtins[fq](self, argv[1:])

    def call(self, name: str, *args: str) -> str:
        """Convenience for native code: invoke a command by name."""
        return self.invoke([name, *args])

    def call_proc(self, proc: ProcDef, args: list[str], called_as: Optional[str] = None) -> str:
        lo, hi = proc.arity()
        if len(args) < lo or (hi is not None and len(args) > hi):
            raise ArityError(proc.fq_name, len(args), (lo, hi), proc.usage(called_as or proc.name))
        local: dict[str, str] = {}
        for i, (pname, default) in enumerate(proc.params):
            if i < len(args):
                local[pname] = args[i]
            else:
                assert default is not None
                local[pname] = default
        if proc.has_rest:
            local["args"] = format_list(args[len(proc.params):])
        ns = self.find_namespace(proc.namespace, create=True)
        assert ns is not None
        tokens = [(obs, obs.enter(self, proc)) for obs in self.observers]
        self.frames.append(Frame(ns, local, proc, label=f'procedure "{called_as or proc.name}"'))
        try:
            return self.eval_body(proc.body)
        except ReturnSignal as r:
            return r.value
        except BreakSignal:
            raise TclError('invoked "break" outside of a loop') from None
        except ContinueSignal:
            raise TclError('invoked "continue" outside of a loop') from None
        finally:
            self.frames.pop()
            for obs, tok in reversed(tokens):
                obs.exit(self, proc, tok)

    # -- evaluation ---------------------------------------------------------

    def substitute(self, word: Word) -> str:
        parts = word.parts
        if len(parts) == 1:
            p = parts[0]
            if isinstance(p, (Literal,)):
                return p.text
            if isinstance(p, Braced):
                return p.raw
        out: list[str] = []
        for p in parts:
            if isinstance(p, Literal):
                out.append(p.text)
            elif isinstance(p, VarRef):
                out.append(self.get_var(p.name))
            elif isinstance(p, CmdSub):
                out.append(self.eval_nodes(p.nodes))
            else:
                out.append(p.raw)
        return "".join(out)

    def eval_node(self, node: ScriptNode) -> str:
        argv = [self.substitute(node.words[0])]
        if self.resolve_command(argv[0]) is None and self.unknown_handler is not None:
            prev = self.current_node
            self.current_node = node
            try:
                return self.unknown_handler(self, node)
            finally:
                self.current_node = prev
        for w in node.words[1:]:
            argv.append(self.substitute(w))
        prev = self.current_node
        self.current_node = node
        try:
            return self.invoke(argv, node)
        finally:
            self.current_node = prev

    def eval_nodes(self, nodes: Iterable[ScriptNode], where: Optional[str] = None) -> str:
        self._depth += 1
        if self._depth > MAX_NESTING:
            self._depth -= 1
            raise TclError("too many nested evaluations (infinite loop?)")
        result = ""
        try:
            for node in nodes:
                try:
                    result = self.eval_node(node)
                except TclError as e:
                    e.trace.append((where or self.frame.label, node.line, node.text))
                    raise
                except RecursionError:
                    # the host stack ran out before MAX_NESTING was reached
                    raise TclError("too many nested evaluations (infinite loop?)") from None
        finally:
            self._depth -= 1
        return result

    def eval(self, source: str) -> str:
        """Evaluate a script in the current frame."""
        return self.eval_nodes(parse_script_tuple(source))

    def eval_body(self, source: str) -> str:
        return self.eval_nodes(parse_script_tuple(source))

    def eval_in_namespace(self, path: str, source: str, doc: str = "") -> str:
        ns = self.find_namespace(path, create=True)
        assert ns is not None
        if doc and ns.path not in self.ns_docs:
            self.ns_docs[ns.path] = doc
        self.frames.append(Frame(ns, None, label=f'namespace eval "{ns.path}"'))
        try:
            return self.eval(source)
        finally:
            self.frames.pop()

    def eval_file(self, path: str) -> str:
        """Source a file at global scope (``source`` semantics)."""
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
        prev_file = self.current_file
        self.current_file = path
        self.frames.append(Frame(self.global_ns, None, label=f'file "{path}"'))
        try:
            return self.eval_nodes(parse_script_tuple(text))
        except ReturnSignal as r:
            return r.value
        finally:
            self.frames.pop()
            self.current_file = prev_file

    # -- output -------------------------------------------------------------

    def write(self, text: str, channel: str = "stdout") -> None:
        stream = self.stdout if channel == "stdout" else self.stderr
        stream.write(text)

    def flush(self) -> None:
        for stream in (self.stdout, self.stderr):
            try:
                stream.flush()
            except (ValueError, OSError):
                pass

    # -- passthrough rendering ----------------------------------------------

    def render_passthrough(self, node: ScriptNode) -> str:
        """Text of an unknown command with variables substituted.

        Command substitutions naming a known command are evaluated; unknown
        ones are kept verbatim (with their own words rendered the same way).
        """
        return " ".join(self._render_word(w) for w in node.words)

    def _render_word(self, word: Word) -> str:
        if word.is_braced:
            return "{" + word.parts[0].raw + "}"  # type: ignore[union-attr]
        out: list[str] = []
        dynamic = False
        for p in word.parts:
            if isinstance(p, Literal):
                out.append(_escape_literal(p.text, word.quoted))
            elif isinstance(p, VarRef):
                value = self.get_var(p.name)
                out.append(_escape_value(value, word.quoted))
                dynamic = True
            elif isinstance(p, CmdSub):
                if self._cmdsub_is_known(p):
                    out.append(_escape_value(self.eval_nodes(p.nodes), word.quoted))
                    dynamic = True
                else:
                    out.append("[" + "; ".join(self.render_passthrough(n) for n in p.nodes) + "]")
            else:
                out.append(p.raw)
        text = "".join(out)
        if word.quoted:
            return '"' + text + '"'
        if dynamic and (text == "" or any(c in " \t\n;" for c in text)):
            return "{" + text + "}" if "{" not in text and "}" not in text else quote_element(text)
        return text

    def _cmdsub_is_known(self, sub: CmdSub) -> bool:
        if not sub.nodes:
            return True
        first = sub.nodes[0].words[0]
        if not first.is_static:
            return True
        return self.resolve_command(first.static_text()) is not None


def _escape_literal(text: str, quoted: bool) -> str:
    out = []
    for c in text:
        if c in '$[]\\' or (quoted and c == '"'):
            out.append("\\" + c)
        elif c == "\n":
            out.append("\\n")
        elif c == "\t":
            out.append("\\t")
        elif c == " " and not quoted:
            out.append("\\ ")
        else:
            out.append(c)
    return "".join(out)


def _escape_value(text: str, quoted: bool) -> str:
    if not quoted:
        return text
    out = []
    for c in text:
        if c in '"$[]\\':
            out.append("\\" + c)
        else:
            out.append(c)
    return "".join(out)

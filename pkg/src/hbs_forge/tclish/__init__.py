"""A small Tcl-subset interpreter for ``.hbs`` build description files."""
from __future__ import annotations

from .errors import (
    ArityError,
    BreakSignal,
    ContinueSignal,
    ControlFlow,
    DuplicateBuiltin,
    ExitSignal,
    ExprSyntaxError,
    ExprTypeError,
    ReturnSignal,
    TclError,
    UndefinedVariable,
    UnknownCommand,
)
from .expr import eval_expr
from .interp import Interp, Namespace, ProcDef
from .lists import format_list, glob_match, split_list
from .parser import (
    Braced,
    CmdSub,
    Literal,
    ScriptNode,
    UnbalancedDelimiter,
    VarRef,
    Word,
    parse_script,
)

Env = Interp


def eval_script(source: str, env: Interp) -> str:
    """Evaluate ``source`` in ``env``; a top-level ``return`` yields its value."""
    try:
        return env.eval(source)
    except ReturnSignal as r:
        return r.value


def substitute(word: Word, env: Interp) -> str:
    return env.substitute(word)


def call_proc(fq_name: str, argv: list[str], env: Interp) -> str:
    name = fq_name if fq_name.startswith("::") else "::" + fq_name
    proc = env.procs.get(name)
    if proc is None:
        raise UnknownCommand(fq_name)
    return env.call_proc(proc, argv, called_as=fq_name)


def register_builtin(name: str, fn, env: Interp) -> None:
    env.register_builtin(name, fn)


__all__ = [
    "ArityError", "BreakSignal", "Braced", "CmdSub", "ContinueSignal", "ControlFlow",
    "DuplicateBuiltin", "Env", "ExitSignal", "ExprSyntaxError", "ExprTypeError",
    "Interp", "Literal", "Namespace", "ProcDef", "ReturnSignal", "ScriptNode",
    "TclError", "UnbalancedDelimiter", "UndefinedVariable", "UnknownCommand",
    "VarRef", "Word", "call_proc", "eval_expr", "eval_script", "format_list",
    "glob_match", "parse_script", "register_builtin", "split_list", "substitute",
]

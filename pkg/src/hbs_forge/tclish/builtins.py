"""Core command set of the Tcl subset."""
from __future__ import annotations

import io
import os
import subprocess
from typing import TYPE_CHECKING, Optional

from .errors import (
    BreakSignal,
    ContinueSignal,
    ExitSignal,
    ReturnSignal,
    TclError,
)
from .expr import eval_expr, to_bool, to_number
from .interp import join_ns, split_qualified
from .lists import format_list, glob_match, split_list

if TYPE_CHECKING:
    from .interp import Interp


def wrong_args(usage: str) -> TclError:
    return TclError(f'wrong # args: should be "{usage}"')


def _int_arg(value: str) -> int:
    n = to_number(value)
    if not isinstance(n, int):
        raise TclError(f'expected integer but got "{value}"')
    return n


# -- subprocess helpers -------------------------------------------------------

class SpawnFailure(TclError):
    def __init__(self, program: str, reason: str = "no such file or directory"):
        super().__init__(f'couldn\'t execute "{program}": {reason}')
        self.program = program


def _stream_fd(stream) -> Optional[int]:
    try:
        return stream.fileno()
    except (AttributeError, io.UnsupportedOperation, ValueError, OSError):
        return None


def spawn_inherit(interp: "Interp", argv: list[str], cwd: Optional[str] = None) -> tuple[int, str]:
    """Run ``argv`` with stdout going to the interpreter's stdout.

    Returns (exit code, captured stderr).  When the interpreter's stdout is a
    real file the child writes to it directly; otherwise output is piped and
    copied so ordering with ``puts`` is preserved.
    """
    interp.flush()
    fd = _stream_fd(interp.stdout)
    try:
        if fd is not None:
            proc = subprocess.run(argv, stdout=fd, stderr=subprocess.PIPE,
                                  cwd=cwd or interp.cwd, stdin=subprocess.DEVNULL)
        else:
            proc = subprocess.run(argv, stdout=subprocess.PIPE, stderr=subprocess.PIPE,
                                  cwd=cwd or interp.cwd, stdin=subprocess.DEVNULL)
            interp.write(proc.stdout.decode("utf-8", "replace"))
    except FileNotFoundError:
        raise SpawnFailure(argv[0]) from None
    except PermissionError:
        raise SpawnFailure(argv[0], "permission denied") from None
    return proc.returncode, proc.stderr.decode("utf-8", "replace")


_REDIRECT_PREFIXES = (">", "<", "2>", "|", "&")


def cmd_exec(interp: "Interp", args: list[str]) -> str:
    if not args:
        raise wrong_args("exec ?-option ...? arg ?arg ...?")
    argv: list[str] = []
    inherit = False
    i = 0
    while i < len(args):
        a = args[i]
        if a == ">@" and i + 1 < len(args):
            if args[i + 1] != "stdout":
                raise TclError(f'exec: unsupported redirection ">@ {args[i + 1]}" (only ">@ stdout")')
            inherit = True
            i += 2
            continue
        if a == ">@stdout":
            inherit = True
            i += 1
            continue
        if a.startswith(_REDIRECT_PREFIXES) and a != "-":
            raise TclError(f'exec: unsupported redirection "{a}" (only ">@ stdout")')
        argv.append(a)
        i += 1
    if args[-1] == "&":
        raise TclError('exec: background execution "&" is not supported')
    if not argv:
        raise wrong_args("exec ?-option ...? arg ?arg ...?")
    if interp.dry_run:
        interp.write(format_list(argv) + "\n")
        return ""
    if inherit:
        code, err = spawn_inherit(interp, argv)
        out = ""
    else:
        interp.flush()
        try:
            proc = subprocess.run(argv, stdout=subprocess.PIPE, stderr=subprocess.PIPE,
                                  cwd=interp.cwd, stdin=subprocess.DEVNULL)
        except FileNotFoundError:
            raise SpawnFailure(argv[0]) from None
        code = proc.returncode
        out = proc.stdout.decode("utf-8", "replace")
        err = proc.stderr.decode("utf-8", "replace")
    if out.endswith("\n"):
        out = out[:-1]
    if code != 0:
        text = out + err
        if text and not text.endswith("\n"):
            text += "\n"
        raise TclError(text + "child process exited abnormally")
    if err:
        raise TclError(out + err.rstrip("\n") if not out else out + "\n" + err.rstrip("\n"))
    return out


# -- variables ------------------------------------------------------------------

def cmd_set(interp: "Interp", args: list[str]) -> str:
    if len(args) == 1:
        return interp.get_var(args[0])
    if len(args) == 2:
        return interp.set_var(args[0], args[1])
    raise wrong_args("set varName ?newValue?")


def cmd_unset(interp: "Interp", args: list[str]) -> str:
    nocomplain = False
    names = list(args)
    if names and names[0] == "-nocomplain":
        nocomplain = True
        names = names[1:]
    for n in names:
        try:
            interp.unset_var(n)
        except TclError:
            if not nocomplain:
                raise
    return ""


def cmd_incr(interp: "Interp", args: list[str]) -> str:
    if len(args) not in (1, 2):
        raise wrong_args("incr varName ?increment?")
    step = _int_arg(args[1]) if len(args) == 2 else 1
    current = interp.get_var(args[0]) if interp.var_exists(args[0]) else "0"
    return interp.set_var(args[0], str(_int_arg(current) + step))


def cmd_append(interp: "Interp", args: list[str]) -> str:
    if not args:
        raise wrong_args("append varName ?value ...?")
    current = interp.get_var(args[0]) if interp.var_exists(args[0]) else ""
    return interp.set_var(args[0], current + "".join(args[1:]))


def cmd_lappend(interp: "Interp", args: list[str]) -> str:
    if not args:
        raise wrong_args("lappend varName ?value ...?")
    current = split_list(interp.get_var(args[0])) if interp.var_exists(args[0]) else []
    return interp.set_var(args[0], format_list(current + args[1:]))


# -- procedures and namespaces ---------------------------------------------------

def parse_params(spec: str, proc_name: str) -> tuple[list[tuple[str, Optional[str]]], bool]:
    params: list[tuple[str, Optional[str]]] = []
    items = split_list(spec)
    has_rest = bool(items) and items[-1] == "args"
    if has_rest:
        items = items[:-1]
    seen_default = False
    for item in items:
        fields = split_list(item)
        if len(fields) == 1:
            if seen_default:
                raise TclError(
                    f'procedure "{proc_name}": parameter "{fields[0]}" without default '
                    f"follows a parameter with a default")
            params.append((fields[0], None))
        elif len(fields) == 2:
            seen_default = True
            params.append((fields[0], fields[1]))
        else:
            raise TclError(f'too many fields in argument specifier "{item}"')
    return params, has_rest


def cmd_proc(interp: "Interp", args: list[str]) -> str:
    from .interp import ProcDef
    if len(args) != 3:
        raise wrong_args("proc name args body")
    name, spec, body = args
    fq = interp.qualify_proc_name(name)
    params, has_rest = parse_params(spec, name)
    node = interp.current_node
    interp.define_proc(ProcDef(fq, params, has_rest, body, interp.current_file,
                               node.doc if node is not None else ""))
    return ""


def cmd_namespace(interp: "Interp", args: list[str]) -> str:
    if not args:
        raise wrong_args("namespace subcommand ?arg ...?")
    sub, rest = args[0], args[1:]
    if sub == "eval":
        if len(rest) < 2:
            raise wrong_args("namespace eval name arg ?arg...?")
        script = rest[1] if len(rest) == 2 else " ".join(rest[1:])
        node = interp.current_node
        return interp.eval_in_namespace(rest[0], script, node.doc if node is not None else "")
    if sub == "current":
        return interp.current_namespace.path
    if sub == "exists":
        if len(rest) != 1:
            raise wrong_args("namespace exists name")
        return "1" if interp.find_namespace(rest[0]) is not None else "0"
    if sub == "qualifiers":
        name = rest[0] if rest else ""
        idx = name.rfind("::")
        return name[:idx].rstrip(":") if idx >= 0 else ""
    if sub == "tail":
        name = rest[0] if rest else ""
        idx = name.rfind("::")
        return name[idx + 2:] if idx >= 0 else name
    raise TclError(f'unknown or ambiguous subcommand "{sub}": must be current, eval, exists, qualifiers, or tail')


# -- control flow -------------------------------------------------------------------

def cmd_if(interp: "Interp", args: list[str]) -> str:
    i = 0
    n = len(args)
    while True:
        if i >= n:
            raise wrong_args("if expression ?then? body ?elseif ...? ?else? ?body?")
        cond = args[i]
        i += 1
        if i < n and args[i] == "then":
            i += 1
        if i >= n:
            raise TclError(f'wrong # args: no script following "{cond}" argument')
        body = args[i]
        i += 1
        if to_bool(eval_expr(cond, interp)):
            return interp.eval(body)
        if i >= n:
            return ""
        if args[i] == "elseif":
            i += 1
            continue
        if args[i] == "else":
            i += 1
            if i >= n:
                raise TclError('wrong # args: no script following "else" argument')
        return interp.eval(args[i])


def cmd_while(interp: "Interp", args: list[str]) -> str:
    if len(args) != 2:
        raise wrong_args("while test command")
    while to_bool(eval_expr(args[0], interp)):
        try:
            interp.eval(args[1])
        except BreakSignal:
            break
        except ContinueSignal:
            continue
    return ""


def cmd_for(interp: "Interp", args: list[str]) -> str:
    if len(args) != 4:
        raise wrong_args("for start test next command")
    interp.eval(args[0])
    while to_bool(eval_expr(args[1], interp)):
        try:
            interp.eval(args[3])
        except BreakSignal:
            break
        except ContinueSignal:
            pass
        interp.eval(args[2])
    return ""


def cmd_foreach(interp: "Interp", args: list[str]) -> str:
    if len(args) < 3 or len(args) % 2 == 0:
        raise wrong_args("foreach varList list ?varList list ...? command")
    body = args[-1]
    pairs = []
    for k in range(0, len(args) - 1, 2):
        names = split_list(args[k])
        if not names:
            raise TclError("foreach varlist is empty")
        pairs.append((names, split_list(args[k + 1])))
    rounds = max((len(vals) + len(names) - 1) // len(names) for names, vals in pairs)
    for r in range(rounds):
        for names, vals in pairs:
            for j, name in enumerate(names):
                idx = r * len(names) + j
                interp.set_var(name, vals[idx] if idx < len(vals) else "")
        try:
            interp.eval(body)
        except BreakSignal:
            break
        except ContinueSignal:
            continue
    return ""


def cmd_break(interp: "Interp", args: list[str]) -> str:
    raise BreakSignal()


def cmd_continue(interp: "Interp", args: list[str]) -> str:
    raise ContinueSignal()


_RETURN_CODES = {"ok": 0, "error": 1, "return": 2, "break": 3, "continue": 4}


def cmd_return(interp: "Interp", args: list[str]) -> str:
    code = "ok"
    rest = list(args)
    while len(rest) >= 2 and rest[0] == "-code":
        code = rest[1]
        rest = rest[2:]
    if len(rest) > 1:
        raise wrong_args("return ?-code code? ?result?")
    value = rest[0] if rest else ""
    if code in ("error", "1"):
        raise TclError(value)
    if code in ("break", "3"):
        raise BreakSignal()
    if code in ("continue", "4"):
        raise ContinueSignal()
    if code not in ("ok", "0", "return", "2"):
        raise TclError(f'bad completion code "{code}"')
    raise ReturnSignal(value)


def cmd_error(interp: "Interp", args: list[str]) -> str:
    if not 1 <= len(args) <= 3:
        raise wrong_args("error message ?errorInfo? ?errorCode?")
    raise TclError(args[0])


def cmd_catch(interp: "Interp", args: list[str]) -> str:
    if not 1 <= len(args) <= 3:
        raise wrong_args("catch script ?resultVarName? ?optionVarName?")
    code = 0
    try:
        result = interp.eval(args[0])
    except TclError as e:
        code, result = 1, e.message
    except ReturnSignal as r:
        code, result = 2, r.value
    except BreakSignal:
        code, result = 3, ""
    except ContinueSignal:
        code, result = 4, ""
    if len(args) >= 2:
        interp.set_var(args[1], result)
    if len(args) == 3:
        interp.set_var(args[2], format_list(["-code", str(code), "-level", "0"]))
    return str(code)


def cmd_eval(interp: "Interp", args: list[str]) -> str:
    if not args:
        raise wrong_args("eval arg ?arg ...?")
    return interp.eval(args[0] if len(args) == 1 else _concat(args))


def cmd_expr(interp: "Interp", args: list[str]) -> str:
    if not args:
        raise wrong_args("expr arg ?arg ...?")
    return eval_expr(args[0] if len(args) == 1 else _concat(args), interp)


def cmd_exit(interp: "Interp", args: list[str]) -> str:
    if len(args) > 1:
        raise wrong_args("exit ?returnCode?")
    raise ExitSignal(_int_arg(args[0]) if args else 0)


# -- lists and strings -----------------------------------------------------------

def _concat(args: list[str]) -> str:
    return " ".join(a.strip() for a in args if a.strip())


def _index(spec: str, length: int) -> int:
    s = spec.strip()
    if s == "end":
        return length - 1
    if s.startswith("end-") or s.startswith("end+"):
        off = _int_arg(s[4:])
        return length - 1 - off if s[3] == "-" else length - 1 + off
    n = to_number(s)
    if not isinstance(n, int):
        raise TclError(f'bad index "{spec}": must be integer?[+-]integer? or end?[+-]integer?')
    return n


def cmd_list(interp: "Interp", args: list[str]) -> str:
    return format_list(args)


def cmd_llength(interp: "Interp", args: list[str]) -> str:
    if len(args) != 1:
        raise wrong_args("llength list")
    return str(len(split_list(args[0])))


def cmd_lindex(interp: "Interp", args: list[str]) -> str:
    if not args:
        raise wrong_args("lindex list ?index ...?")
    value = args[0]
    indices: list[str] = []
    for a in args[1:]:
        indices.extend(split_list(a) if len(args) == 2 else [a])
    for spec in indices:
        items = split_list(value)
        i = _index(spec, len(items))
        if i < 0 or i >= len(items):
            return ""
        value = items[i]
    return value


def cmd_concat(interp: "Interp", args: list[str]) -> str:
    return _concat(args)


def cmd_join(interp: "Interp", args: list[str]) -> str:
    if len(args) not in (1, 2):
        raise wrong_args("join list ?joinString?")
    sep = args[1] if len(args) == 2 else " "
    return sep.join(split_list(args[0]))


def cmd_split(interp: "Interp", args: list[str]) -> str:
    if len(args) not in (1, 2):
        raise wrong_args("split string ?splitChars?")
    text = args[0]
    chars = args[1] if len(args) == 2 else " \t\n\r"
    if chars == "":
        return format_list(list(text))
    out, cur = [], []
    for c in text:
        if c in chars:
            out.append("".join(cur))
            cur = []
        else:
            cur.append(c)
    out.append("".join(cur))
    return format_list(out)


def cmd_string(interp: "Interp", args: list[str]) -> str:
    if not args:
        raise wrong_args("string subcommand ?arg ...?")
    sub, rest = args[0], args[1:]
    nocase = False
    if sub in ("match", "equal", "compare"):
        opts = []
        while len(rest) > 2 and rest[0].startswith("-"):
            opts.append(rest.pop(0))
        nocase = "-nocase" in opts
        if len(rest) != 2:
            raise wrong_args(f"string {sub} ?-nocase? {'pattern string' if sub == 'match' else 'string1 string2'}")
        a, b = rest
        if sub == "match":
            return "1" if glob_match(a, b, nocase=nocase) else "0"
        if nocase:
            a, b = a.lower(), b.lower()
        if sub == "equal":
            return "1" if a == b else "0"
        return str((a > b) - (a < b))
    if sub == "length":
        if len(rest) != 1:
            raise wrong_args("string length string")
        return str(len(rest[0]))
    if sub == "tolower":
        return rest[0].lower()
    if sub == "toupper":
        return rest[0].upper()
    if sub in ("trim", "trimleft", "trimright"):
        chars = rest[1] if len(rest) > 1 else " \t\n\r"
        fn = {"trim": str.strip, "trimleft": str.lstrip, "trimright": str.rstrip}[sub]
        return fn(rest[0], chars)
    if sub == "first":
        return str(rest[1].find(rest[0]))
    if sub == "last":
        return str(rest[1].rfind(rest[0]))
    if sub == "index":
        i = _index(rest[1], len(rest[0]))
        return rest[0][i] if 0 <= i < len(rest[0]) else ""
    if sub == "range":
        s = rest[0]
        lo = max(_index(rest[1], len(s)), 0)
        hi = _index(rest[2], len(s))
        return s[lo:hi + 1]
    raise TclError(f'unknown or ambiguous subcommand "{sub}"')


# -- I/O and environment --------------------------------------------------------

def cmd_puts(interp: "Interp", args: list[str]) -> str:
    newline = True
    rest = list(args)
    if rest and rest[0] == "-nonewline":
        newline = False
        rest = rest[1:]
    if len(rest) == 1:
        channel, text = "stdout", rest[0]
    elif len(rest) == 2:
        channel, text = rest
    else:
        raise wrong_args("puts ?-nonewline? ?channelId? string")
    if channel not in ("stdout", "stderr"):
        raise TclError(f'can not find channel named "{channel}"')
    interp.write(text + ("\n" if newline else ""), channel)
    return ""


def cmd_pwd(interp: "Interp", args: list[str]) -> str:
    if args:
        raise wrong_args("pwd")
    return interp.cwd


def cmd_cd(interp: "Interp", args: list[str]) -> str:
    if len(args) > 1:
        raise wrong_args("cd ?dirName?")
    target = args[0] if args else os.path.expanduser("~")
    path = os.path.normpath(os.path.join(interp.cwd, target))
    if not os.path.isdir(path) and not interp.dry_run:
        raise TclError(f'couldn\'t change working directory to "{target}": no such file or directory')
    interp.cwd = path
    return ""


def cmd_variable(interp: "Interp", args: list[str]) -> str:
    if not args:
        raise wrong_args("variable ?name value...? name ?value?")
    ns = interp.current_namespace.path
    for i in range(0, len(args), 2):
        name = args[i]
        if "::" in name:
            raise TclError(f'can\'t define "{name}": name refers to an element in another namespace')
        fq = join_ns(ns, name)
        interp.link_var(name, fq)
        if i + 1 < len(args):
            interp.set_var(fq, args[i + 1])
    return ""


def cmd_global(interp: "Interp", args: list[str]) -> str:
    for name in args:
        interp.link_var(split_qualified(name)[1], "::" + name.lstrip(":"))
    return ""


def cmd_info(interp: "Interp", args: list[str]) -> str:
    if not args:
        raise wrong_args("info subcommand ?arg ...?")
    sub, rest = args[0], args[1:]
    if sub == "exists":
        if len(rest) != 1:
            raise wrong_args("info exists varName")
        return "1" if interp.var_exists(rest[0]) else "0"
    raise TclError(f'unknown or ambiguous subcommand "{sub}": must be exists')


CORE_BUILTINS = {
    "append": cmd_append,
    "break": cmd_break,
    "catch": cmd_catch,
    "cd": cmd_cd,
    "concat": cmd_concat,
    "continue": cmd_continue,
    "error": cmd_error,
    "eval": cmd_eval,
    "exec": cmd_exec,
    "exit": cmd_exit,
    "expr": cmd_expr,
    "for": cmd_for,
    "global": cmd_global,
    "foreach": cmd_foreach,
    "if": cmd_if,
    "incr": cmd_incr,
    "info": cmd_info,
    "join": cmd_join,
    "lappend": cmd_lappend,
    "lindex": cmd_lindex,
    "list": cmd_list,
    "llength": cmd_llength,
    "namespace": cmd_namespace,
    "proc": cmd_proc,
    "puts": cmd_puts,
    "pwd": cmd_pwd,
    "return": cmd_return,
    "set": cmd_set,
    "split": cmd_split,
    "string": cmd_string,
    "unset": cmd_unset,
    "variable": cmd_variable,
    "while": cmd_while,
}


def install_core_builtins(interp: "Interp") -> None:
    for name, fn in CORE_BUILTINS.items():
        interp.register_builtin(name, fn)

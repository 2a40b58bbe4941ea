"""Exceptions and control-flow signals raised by the interpreter."""
from __future__ import annotations


TRACE_LIMIT = 20


class TclError(Exception):
    """A script-level error; ``catch`` turns it into return code 1.

    ``trace`` accumulates ``(where, line, command)`` entries as the error
    unwinds through nested evaluations, innermost first.
    """

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message
        self.trace: list[tuple[str, int, str]] = []

    def __str__(self) -> str:
        return self.message

    def location(self) -> tuple[str, int] | None:
        """Outermost recorded (where, line)."""
        if not self.trace:
            return None
        where, line, _ = self.trace[-1]
        return where, line

    def format_trace(self) -> str:
        lines = [self.message]
        entries = self.trace
        if len(entries) > TRACE_LIMIT:
            entries = entries[:TRACE_LIMIT // 2] + [("", 0, "")] + entries[-TRACE_LIMIT // 2:]
        for where, line, cmd in entries:
            if not where:
                lines.append(f"    ... ({len(self.trace) - TRACE_LIMIT} more levels)")
                continue
            head = cmd.splitlines()[0] if cmd else ""
            if len(head) > 60:
                head = head[:57] + "..."
            lines.append(f'    while executing "{head}"')
            lines.append(f"    ({where} line {line})")
        return "\n".join(lines)


class UnknownCommand(TclError):
    def __init__(self, name: str):
        super().__init__(f'invalid command name "{name}"')
        self.name = name


class UndefinedVariable(TclError):
    def __init__(self, name: str):
        super().__init__(f'can\'t read "{name}": no such variable')
        self.name = name


class ArityError(TclError):
    def __init__(self, name: str, given: int, expected: tuple[int, int | None], usage: str):
        super().__init__(f'wrong # args: should be "{usage}"')
        self.name = name
        self.given = given
        self.expected = expected


class DuplicateBuiltin(Exception):
    def __init__(self, name: str):
        super().__init__(f"builtin {name!r} is already registered")
        self.name = name


class ExprSyntaxError(TclError):
    pass


class ExprTypeError(TclError):
    pass


class ControlFlow(Exception):
    """Base for non-error unwinding (return, break, continue, exit)."""


class ReturnSignal(ControlFlow):
    def __init__(self, value: str = ""):
        super().__init__(value)
        self.value = value


class BreakSignal(ControlFlow):
    pass


class ContinueSignal(ControlFlow):
    pass


class ExitSignal(ControlFlow):
    def __init__(self, code: int = 0):
        super().__init__(code)
        self.code = code

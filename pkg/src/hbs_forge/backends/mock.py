"""Scriptable simulator double used by the test suite.

Each stage runs a configurable shell-free command (``hbs::mock::SetStageCmd``)
and appends one JSON object per stage or callback to ``trace.jsonl`` in the
build directory.
"""
from __future__ import annotations

import json
import os
import time
from typing import TYPE_CHECKING

from ..tclish import TclError
from ..tclish.lists import format_list
from .base import Backend, BackendSpec

if TYPE_CHECKING:
    from ..flow import Callback, Flow, RunContext

TRACE_NAME = "trace.jsonl"


class MockStageFailure(TclError):
    def __init__(self, stage: str, command: str, code: int):
        super().__init__(f"mock stage {stage} failed: '{command}' exited with status {code}")
        self.stage = stage
        self.code = code


def _record(ctx: "RunContext", stage: str, phase: str, command: str, code: int,
            start: float, end: float) -> None:
    entry = {"stage": stage, "phase": phase, "command": command, "exit": code,
             "start": start, "end": end}
    ctx.trace.append(entry)
    if ctx.dry_run:
        return
    with open(os.path.join(ctx.build_dir, TRACE_NAME), "a", encoding="utf-8") as fh:
        fh.write(json.dumps(entry) + "\n")


class MockSimBackend(Backend):
    spec = BackendSpec(
        name="mock-sim",
        kind="direct-exec",
        stages=("analysis", "elaboration", "simulation"),
        requires_top=False,
        description="test double for command-line simulators",
    )

    def run_stage(self, flow: "Flow", ctx: "RunContext", stage: str) -> None:
        command = ctx.mock_commands.get(stage, flow.mock_commands.get(stage, ""))
        start = time.time()
        code = flow.exec_command(command, cwd=ctx.build_dir) if command else 0
        _record(ctx, stage, "stage", command, code, start, time.time())
        if code != 0:
            raise MockStageFailure(stage, command, code)

    def run_callback(self, flow: "Flow", ctx: "RunContext", stage: str, phase: str,
                     cb: "Callback") -> None:
        start = time.time()
        flow.invoke_callback(cb)
        _record(ctx, stage, phase, format_list([cb.name.lstrip(":"), *cb.argv]), 0,
                start, time.time())

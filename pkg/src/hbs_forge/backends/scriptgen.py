"""Script-generating backends: the flow is recorded and emitted as a Tcl script.

Commands the interpreter does not know are passed through verbatim, at the
position they were issued relative to file additions and stages.
"""
from __future__ import annotations

import os
from typing import TYPE_CHECKING

from ..tclish.lists import format_list, quote_element
from .base import Backend, BackendSpec, StageFailure

if TYPE_CHECKING:
    from ..flow import Callback, FileEntry, Flow, RunContext

SCRIPT_NAME = "run.tcl"

_VHDL_STD_FLAG = {"2008": "-vhdl2008", "08": "-vhdl2008", "2019": "-vhdl2019", "19": "-vhdl2019"}
_HDL_KINDS = ("vhdl", "verilog", "systemverilog")


def render_file(entry: "FileEntry") -> list[str]:
    path = quote_element(entry.path)
    if entry.kind == "vhdl":
        flag = _VHDL_STD_FLAG.get(entry.std, "")
        lines = [f"read_vhdl {flag} {path}" if flag else f"read_vhdl {path}"]
    elif entry.kind == "verilog":
        lines = [f"read_verilog {path}"]
    elif entry.kind == "systemverilog":
        lines = [f"read_verilog -sv {path}"]
    elif entry.kind in ("constraint-xdc", "constraint-sdc"):
        lines = [f"read_xdc {path}"]
    elif entry.kind == "tcl":
        # constraint scripts are attached to the project, not run now
        lines = [f"add_files -fileset constrs_1 {path}"]
    else:
        lines = [f"add_files {path}"]
    if entry.lib and entry.kind in _HDL_KINDS:
        lines.append(f"set_property LIBRARY {quote_element(entry.lib)} [get_files {path}]")
    return lines


def _vivado_stage(ctx: "RunContext", stage: str) -> list[str]:
    if stage == "project":
        lines = []
        if ctx.top:
            lines.append(f"set_property top {quote_element(ctx.top)} [current_fileset]")
        if ctx.generics:
            pairs = [f"{k}={v}" for k, v in ctx.generics.items()]
            lines.append(f"set_property generic {{{' '.join(pairs)}}} [current_fileset]")
        lines.append("update_compile_order -fileset sources_1")
        return lines
    if stage == "synthesis":
        return ["reset_run synth_1", "launch_runs synth_1", "wait_on_run synth_1"]
    if stage == "implementation":
        return ["launch_runs impl_1", "wait_on_run impl_1"]
    if stage == "bitstream":
        return ["launch_runs impl_1 -to_step write_bitstream", "wait_on_run impl_1"]
    raise ValueError(stage)


def _mock_stage(ctx: "RunContext", stage: str) -> list[str]:
    return [f"mock_stage {stage}"]


def _callback_line(cb: "Callback") -> str:
    return format_list([cb.name.lstrip(":"), *cb.argv])


def scriptgen_emit(ctx: "RunContext") -> str:
    """Render the recorded flow of ``ctx`` as a Tcl script (deterministic)."""
    backend = SCRIPT_BACKENDS[ctx.tool]
    name = ctx.target_path.replace("::", "-") or "project"
    out = [f"# {backend.spec.name} script for {ctx.target_path}"]
    create = f"create_project -force {quote_element(name)} ."
    if ctx.device:
        create += f" -part {quote_element(ctx.device)}"
    out.append(create)
    defined: set[str] = set()
    for kind, payload in ctx.events:
        if kind == "proc" and payload.fq_name not in defined:
            defined.add(payload.fq_name)
            ns = payload.namespace
            if ns != "::":
                out.append(f"namespace eval {ns} {{}}")
            params = [p if d is None else format_list([p, d]) for p, d in payload.params]
            if payload.has_rest:
                params.append("args")
            out.append(f"proc {payload.fq_name} {{{' '.join(params)}}} {{{payload.body}}}")
    for kind, payload in ctx.events:
        if kind == "file":
            out.extend(render_file(payload))
        elif kind == "raw":
            out.append(payload)
        elif kind == "stage":
            out.append(f"# stage: {payload}")
            out.extend(backend.render_stage(ctx, payload))
        elif kind == "callback":
            stage, phase, cb = payload
            out.append(f"# {phase}-{stage} callback")
            out.append(_callback_line(cb))
        elif kind == "callback-native":
            stage, phase, cb = payload
            out.append(f"# {phase}-{stage} callback evaluated during generation: {_callback_line(cb)}")
    return "\n".join(out) + "\n"


class ScriptGenBackend(Backend):
    def render_stage(self, ctx: "RunContext", stage: str) -> list[str]:
        raise NotImplementedError

    def begin(self, flow: "Flow", ctx: "RunContext") -> None:
        flow.install_passthrough()

    def run_stage(self, flow: "Flow", ctx: "RunContext", stage: str) -> None:
        ctx.events.append(("stage", stage))

    def run_callback(self, flow: "Flow", ctx: "RunContext", stage: str, phase: str,
                     cb: "Callback") -> None:
        proc = flow.interp.procs.get(cb.name)
        if proc is None:
            flow.invoke_callback(cb)
            ctx.events.append(("callback-native", (stage, phase, cb)))
            return
        ctx.events.append(("proc", proc))
        ctx.events.append(("callback", (stage, phase, cb)))

    def finish(self, flow: "Flow", ctx: "RunContext") -> None:
        if not any(kind == "stage" for kind, _ in ctx.events):
            return
        script = scriptgen_emit(ctx)
        if ctx.dry_run:
            flow.interp.write(script)
            return
        path = os.path.join(ctx.build_dir, SCRIPT_NAME)
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(script)
        if flow.tool_cmd:
            err = flow.exec_command(f"{flow.tool_cmd} {quote_element(path)}", cwd=ctx.build_dir)
            if err:
                raise StageFailure(f"{flow.tool_cmd} exited with status {err}")


class VivadoPrjBackend(ScriptGenBackend):
    spec = BackendSpec(
        name="vivado-prj",
        kind="script-gen",
        stages=("project", "synthesis", "implementation", "bitstream"),
        requires_top=False,
        description="AMD Vivado project mode, emitted as a Tcl script",
    )

    def render_stage(self, ctx: "RunContext", stage: str) -> list[str]:
        return _vivado_stage(ctx, stage)


class MockPrjBackend(ScriptGenBackend):
    spec = BackendSpec(
        name="mock-prj",
        kind="script-gen",
        stages=("project", "synthesis", "implementation", "bitstream"),
        requires_top=False,
        description="test double for script-generating tools",
    )

    def render_stage(self, ctx: "RunContext", stage: str) -> list[str]:
        return _mock_stage(ctx, stage)


SCRIPT_BACKENDS: dict[str, ScriptGenBackend] = {
    "vivado-prj": VivadoPrjBackend(),
    "mock-prj": MockPrjBackend(),
}

"""GHDL-style simulator backend: stages spawn the simulator directly."""
from __future__ import annotations

from typing import TYPE_CHECKING

from ..tclish import TclError
from ..tclish.lists import quote_element
from .base import Backend, BackendSpec, StageFailure, TopNotSet

if TYPE_CHECKING:
    from ..flow import Flow, RunContext

DEFAULT_STD = "2008"

_STD_TOKENS = {
    "1987": "87", "87": "87",
    "1993": "93", "93": "93",
    "2000": "00", "00": "00",
    "2002": "02", "02": "02",
    "2008": "08", "08": "08",
    "2019": "19", "19": "19",
}


class NonVhdlFile(TclError):
    def __init__(self, path: str, kind: str):
        super().__init__(f"ghdl: cannot analyze {kind} file {path}")
        self.path = path


def ghdl_std(std: str) -> str:
    """Map an HDL standard revision onto GHDL's ``--std=`` token."""
    token = _STD_TOKENS.get((std or DEFAULT_STD).strip())
    if token is None:
        raise TclError(f'ghdl: unsupported VHDL standard "{std}"')
    return token


def ghdl_lib_flags(ctx: "RunContext") -> list[str]:
    if any(f.lib for f in ctx.files):
        return ["-Pwork"]
    return []


def _join(*fields: str | list[str]) -> str:
    words: list[str] = []
    for f in fields:
        items = f if isinstance(f, list) else f.split()
        words.extend(w for w in items if w)
    return " ".join(words)


def ghdl_stage_command(ctx: "RunContext", stage: str) -> list[str]:
    """Command lines for one stage (analysis yields one line per VHDL file)."""
    std = f"--std={ghdl_std(ctx.std)}"
    libs = ghdl_lib_flags(ctx)
    if stage == "analysis":
        cmds = []
        for f in ctx.files:
            if f.kind != "vhdl":
                raise NonVhdlFile(f.path, f.kind)
            work = f"--work={f.lib}" if f.lib else ""
            cmds.append(_join("ghdl -a", ctx.arg_prefix, std, "--workdir=work", work,
                              libs, ctx.arg_suffix, [quote_element(f.path)]))
        return cmds
    if not ctx.top:
        raise TopNotSet("ghdl")
    if stage == "elaboration":
        return [_join("ghdl -e", ctx.arg_prefix, std, "--workdir=work", libs,
                      ctx.arg_suffix, [ctx.top])]
    if stage == "simulation":
        generics = [f"-g{name}={value}" for name, value in ctx.generics.items()]
        severity = [f"--assert-level={ctx.exit_severity}"] if ctx.exit_severity else []
        return [_join("ghdl -r", ctx.arg_prefix, std, "--workdir=work", libs,
                      ctx.arg_suffix, [ctx.top], generics, severity)]
    raise TclError(f"ghdl: no such stage {stage}")


class GhdlBackend(Backend):
    spec = BackendSpec(
        name="ghdl",
        kind="direct-exec",
        stages=("analysis", "elaboration", "simulation"),
        requires_top=True,
        description="GHDL VHDL simulator, driven through its command line",
    )

    def run_stage(self, flow: "Flow", ctx: "RunContext", stage: str) -> None:
        for cmd in ghdl_stage_command(ctx, stage):
            err = flow.exec_command(cmd, cwd=ctx.build_dir)
            if err:
                what = ctx.top or cmd.split()[-1]
                raise StageFailure(f"{what} {stage} failed with exit status {err}")

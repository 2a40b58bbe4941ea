"""Backend contract shared by the concrete tool backends."""
from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, ClassVar

from ..tclish import TclError

if TYPE_CHECKING:
    from ..flow import Callback, Flow, RunContext


class UnknownTool(TclError):
    def __init__(self, name: str, known: list[str]):
        super().__init__(f'unknown tool "{name}", known tools: {", ".join(known)}')
        self.name = name


class UnknownStage(TclError):
    def __init__(self, stage: str, tool: str, stages: tuple[str, ...]):
        super().__init__(f'unknown stage "{stage}" for tool "{tool}", stages: {", ".join(stages)}')
        self.stage = stage
        self.tool = tool


class TopNotSet(TclError):
    def __init__(self, tool: str):
        super().__init__(f"{tool}: design top is not set, call hbs::SetTop first")


class StageFailure(TclError):
    pass


# callback builtin abbreviations, e.g. hbs::AddPostSynthCb
STAGE_ABBREV = {
    "project": "Prj",
    "synthesis": "Synth",
    "implementation": "Impl",
    "bitstream": "Bit",
    "analysis": "Analysis",
    "elaboration": "Elab",
    "simulation": "Sim",
}


@dataclass(frozen=True)
class BackendSpec:
    name: str
    kind: str  # "direct-exec" | "script-gen"
    stages: tuple[str, ...]
    requires_top: bool
    description: str = ""

    def __post_init__(self) -> None:
        if not self.stages:
            raise ValueError("backend needs at least one stage")
        if self.kind not in ("direct-exec", "script-gen"):
            raise ValueError(f"bad backend kind {self.kind!r}")

    @property
    def final_stage(self) -> str:
        return self.stages[-1]

    def stages_through(self, stage: str | None) -> tuple[str, ...]:
        if stage is None or stage == "":
            return self.stages
        if stage not in self.stages:
            raise UnknownStage(stage, self.name, self.stages)
        return self.stages[: self.stages.index(stage) + 1]

    def callback_builtins(self) -> list[str]:
        names = []
        for stage in self.stages:
            abbrev = STAGE_ABBREV[stage]
            names.append(f"hbs::AddPre{abbrev}Cb")
            names.append(f"hbs::AddPost{abbrev}Cb")
        return names


class Backend:
    """Behaviour attached to a :class:`BackendSpec`.

    Backends hold no per-run state; everything mutable lives in the
    :class:`~hbs_forge.flow.RunContext` handed to each hook.
    """

    spec: ClassVar[BackendSpec]

    def begin(self, flow: "Flow", ctx: "RunContext") -> None:
        """Called once when the tool is selected."""

    def run_stage(self, flow: "Flow", ctx: "RunContext", stage: str) -> None:
        raise NotImplementedError

    def run_callback(self, flow: "Flow", ctx: "RunContext", stage: str, phase: str,
                     cb: "Callback") -> None:
        flow.invoke_callback(cb)

    def after_stages(self, flow: "Flow", ctx: "RunContext", through: str) -> None:
        """Called at the end of each ``hbs::Run``."""

    def finish(self, flow: "Flow", ctx: "RunContext") -> None:
        """Called when the root target returns normally."""

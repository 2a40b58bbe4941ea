"""Tool backends: how abstract flow state is turned into tool actions."""
from __future__ import annotations

from .base import (
    STAGE_ABBREV,
    Backend,
    BackendSpec,
    StageFailure,
    TopNotSet,
    UnknownStage,
    UnknownTool,
)
from .ghdl import GhdlBackend, NonVhdlFile, ghdl_stage_command, ghdl_std
from .mock import MockSimBackend, MockStageFailure
from .scriptgen import SCRIPT_BACKENDS, render_file, scriptgen_emit

BACKENDS: dict[str, Backend] = {
    "ghdl": GhdlBackend(),
    "mock-sim": MockSimBackend(),
    **SCRIPT_BACKENDS,
}


def known_tools() -> list[str]:
    return sorted(BACKENDS)


def get_backend(name: str) -> Backend:
    try:
        return BACKENDS[name]
    except KeyError:
        raise UnknownTool(name, known_tools()) from None


def backend_for(name: str) -> BackendSpec:
    return get_backend(name).spec


def all_stages() -> set[str]:
    return {s for b in BACKENDS.values() for s in b.spec.stages}


__all__ = [
    "BACKENDS", "Backend", "BackendSpec", "MockStageFailure", "NonVhdlFile",
    "STAGE_ABBREV", "StageFailure", "TopNotSet", "UnknownStage", "UnknownTool",
    "all_stages", "backend_for", "get_backend", "ghdl_stage_command", "ghdl_std",
    "known_tools", "render_file", "scriptgen_emit",
]

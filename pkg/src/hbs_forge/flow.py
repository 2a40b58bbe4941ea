"""Target execution: run context, ``hbs::*`` commands, dependencies, stages."""
from __future__ import annotations

import hashlib
import io
import logging
import os
import sys
from dataclasses import dataclass, field
from typing import Any, Optional, TextIO

from . import backends
from .backends import STAGE_ABBREV, Backend, get_backend
from .backends.ghdl import ghdl_lib_flags, ghdl_std
from .backends.scriptgen import SCRIPT_BACKENDS
from .registry import Registry, discover, source_all
from .tclish import ExitSignal, Interp, ProcDef, ScriptNode, TclError, format_list, split_list
from .tclish.builtins import spawn_inherit

log = logging.getLogger(__name__)

SEVERITIES = ("note", "warning", "error", "failure")

FILE_KINDS = {
    ".vhd": "vhdl", ".vhdl": "vhdl",
    ".v": "verilog", ".vh": "verilog",
    ".sv": "systemverilog", ".svh": "systemverilog",
    ".xdc": "constraint-xdc",
    ".sdc": "constraint-sdc",
    ".tcl": "tcl",
}

Node = tuple[str, tuple[str, ...]]


class FlowError(TclError):
    pass


class UnknownTarget(FlowError):
    def __init__(self, path: str):
        super().__init__(f'unknown target "{path}"')
        self.path = path


class DependencyCycle(FlowError):
    def __init__(self, chain: list[Node]):
        super().__init__("dependency cycle: " + " -> ".join(node_label(n) for n in chain))
        self.chain = chain


class ToolNotSet(FlowError):
    def __init__(self, what: str = "hbs::Run"):
        super().__init__(f"{what}: tool not set, call hbs::SetTool first")


class ToolAlreadySet(FlowError):
    pass


class InvalidSeverity(FlowError):
    def __init__(self, value: str):
        super().__init__(f'invalid exit severity "{value}", must be one of: {", ".join(SEVERITIES)}')


class FileNotFound(FlowError):
    def __init__(self, path: str):
        super().__init__(f"file not found: {path}")
        self.path = path


class NoActiveFlow(FlowError):
    def __init__(self, command: str):
        super().__init__(f"{command} can only be called while a target is running")


def file_kind(path: str) -> str:
    return FILE_KINDS.get(os.path.splitext(path)[1].lower(), "other")


def node_label(node: Node) -> str:
    path, argv = node
    return " ".join([path, *argv]) if argv else path


# -- dependency graph ---------------------------------------------------------------

@dataclass
class DepGraph:
    root: Optional[Node] = None
    nodes: list[Node] = field(default_factory=list)
    edges: list[tuple[Node, Node]] = field(default_factory=list)

    def add_node(self, node: Node) -> None:
        if node not in self.nodes:
            self.nodes.append(node)

    def add_edge(self, src: Node, dst: Node) -> None:
        self.add_node(src)
        self.add_node(dst)
        if (src, dst) not in self.edges:
            self.edges.append((src, dst))


def _dot_id(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def emit_dot(graph: DepGraph) -> str:
    lines = ["digraph deps {"]
    for node in graph.nodes:
        lines.append(f"  {_dot_id(node_label(node))};")
    for src, dst in graph.edges:
        lines.append(f"  {_dot_id(node_label(src))} -> {_dot_id(node_label(dst))};")
    lines.append("}")
    return "\n".join(lines) + "\n"


# -- run context ------------------------------------------------------------------------

@dataclass
class FileEntry:
    path: str
    kind: str
    lib: str
    std: str


@dataclass
class Callback:
    name: str
    argv: tuple[str, ...]


@dataclass
class RunContext:
    target_path: str
    argv: tuple[str, ...]
    build_dir: str
    dry_run: bool = False
    tool: str = ""
    top: str = ""
    device: str = ""
    lib: str = ""
    std: str = ""
    files: list[FileEntry] = field(default_factory=list)
    generics: dict[str, str] = field(default_factory=dict)
    arg_prefix: str = ""
    arg_suffix: str = ""
    exit_severity: str = ""
    callbacks: dict[tuple[str, str], list[Callback]] = field(default_factory=dict)
    memo: set[Node] = field(default_factory=set)
    graph: DepGraph = field(default_factory=DepGraph)
    this_core_path: str = ""
    this_target_path: str = ""
    unknown_log: list[tuple[int, str]] = field(default_factory=list)
    events: list[tuple[str, Any]] = field(default_factory=list)
    trace: list[dict[str, Any]] = field(default_factory=list)
    mock_commands: dict[str, str] = field(default_factory=dict)
    ran: bool = False

    @property
    def backend(self) -> Optional[Backend]:
        return get_backend(self.tool) if self.tool else None


def build_dir_for(work_dir: str, target_path: str, argv: tuple[str, ...]) -> str:
    parts = [p for p in target_path.split("::") if p]
    path = os.path.join(work_dir, "build", *parts)
    if argv:
        digest = hashlib.sha1(format_list(list(argv)).encode("utf-8")).hexdigest()[:10]
        path = os.path.join(path, digest)
    return path


# -- the flow engine ----------------------------------------------------------------------

class _TargetObserver:
    """Keeps ``hbs::ThisCorePath``/``ThisTargetPath`` on the innermost target."""

    def __init__(self, flow: "Flow"):
        self.flow = flow

    def enter(self, interp: Interp, proc: ProcDef) -> object:
        ctx = self.flow.ctx
        if ctx is None or proc.name.startswith("_"):
            return None
        if not self.flow.registry.is_core_namespace(proc.namespace):
            return None
        saved = (ctx.this_core_path, ctx.this_target_path)
        ctx.this_core_path = proc.namespace[2:]
        ctx.this_target_path = proc.fq_name[2:]
        self.flow.sync_vars()
        return saved

    def exit(self, interp: Interp, proc: ProcDef, token: object) -> None:
        ctx = self.flow.ctx
        if token is None or ctx is None:
            return
        ctx.this_core_path, ctx.this_target_path = token  # type: ignore[misc]
        self.flow.sync_vars()


class Flow:
    """Runs targets of a registry inside its interpreter."""

    def __init__(self, interp: Interp, registry: Registry, work_dir: Optional[str] = None,
                 tool_cmd: Optional[str] = None, mock_commands: Optional[dict[str, str]] = None):
        self.interp = interp
        self.registry = registry
        self.work_dir = os.path.abspath(work_dir or os.getcwd())
        self.tool_cmd = tool_cmd
        self.mock_commands = dict(mock_commands or {})
        self.ctx: Optional[RunContext] = None
        self.last_ctx: Optional[RunContext] = None
        self.last_error: Optional[BaseException] = None
        self.chain: list[Node] = []
        interp.observers.append(_TargetObserver(self))
        self._install()
        self.sync_vars()

    # -- state mirroring --------------------------------------------------------

    def sync_vars(self) -> None:
        ctx = self.ctx
        values = {
            "Tool": ctx.tool if ctx else "",
            "Top": ctx.top if ctx else "",
            "Device": ctx.device if ctx else "",
            "Lib": ctx.lib if ctx else "",
            "Std": ctx.std if ctx else "",
            "ArgPrefix": ctx.arg_prefix if ctx else "",
            "ArgSuffix": ctx.arg_suffix if ctx else "",
            "ExitSeverity": ctx.exit_severity if ctx else "",
            "ThisCorePath": ctx.this_core_path if ctx else "",
            "ThisCore": ctx.this_core_path if ctx else "",
            "ThisTargetPath": ctx.this_target_path if ctx else "",
            "RunTargetBuildDir": ctx.build_dir if ctx else "",
            "DryRun": "1" if ctx and ctx.dry_run else "0",
        }
        for name, value in values.items():
            self.interp.set_ns_var(f"::hbs::{name}", value)
        libs = " ".join(ghdl_lib_flags(ctx)) if ctx else ""
        self.interp.set_ns_var("::hbs::ghdl::libs", libs)

    def require_ctx(self, command: str) -> RunContext:
        if self.ctx is None:
            raise NoActiveFlow(command)
        return self.ctx

    # -- running targets ------------------------------------------------------------

    def resolve(self, target_path: str) -> ProcDef:
        proc = self.registry.resolve_target(target_path)
        if proc is None:
            raise UnknownTarget(target_path)
        return proc

    def run_target(self, target_path: str, argv: list[str] | tuple[str, ...] = (),
                   dry_run: bool = False) -> int:
        """Run a target in a fresh context; returns 0, 1 (flow failure) or the exit code."""
        path = target_path.lstrip(":")
        proc = self.resolve(path)
        args = tuple(argv)
        node: Node = (path, args)
        ctx = RunContext(path, args, build_dir_for(self.work_dir, path, args), dry_run=dry_run)
        ctx.graph.root = node
        ctx.graph.add_node(node)
        ctx.memo.add(node)
        if not dry_run:
            os.makedirs(ctx.build_dir, exist_ok=True)
        self.ctx = ctx
        self.last_ctx = ctx
        self.last_error = None
        self.chain = [node]
        self.interp.dry_run = dry_run
        self.sync_vars()
        status = 0
        try:
            self.interp.call_proc(proc, list(args), called_as=path)
            backend = ctx.backend
            if backend is not None:
                backend.finish(self, ctx)
        except ExitSignal as e:
            status = e.code
        except TclError as e:
            self.last_error = e
            self.interp.flush()
            self.interp.write(f"error: {e.format_trace()}\n", "stderr")
            status = 1
        finally:
            self.interp.flush()
            self.interp.dry_run = False
            self.interp.unknown_handler = None
            self.chain = []
            self.ctx = None
            self.sync_vars()
        return status

    def graph(self, target_path: str, argv: list[str] | tuple[str, ...] = ()) -> DepGraph:
        """Dependency graph of a target, captured from a silent dry run.

        Raises the flow's error when the dry run fails (e.g. a dependency cycle).
        """
        saved = self.interp.stdout, self.interp.stderr
        self.interp.stdout = self.interp.stderr = io.StringIO()
        try:
            status = self.run_target(target_path, argv, dry_run=True)
        finally:
            self.interp.stdout, self.interp.stderr = saved
        assert self.last_ctx is not None
        if status != 0 and self.last_error is not None:
            raise self.last_error
        return self.last_ctx.graph

    # -- hbs::AddDep ----------------------------------------------------------------

    def add_dep(self, dep_path: str, argv: list[str]) -> None:
        ctx = self.require_ctx("hbs::AddDep")
        path = dep_path.lstrip(":")
        proc = self.resolve(path)
        node: Node = (path, tuple(argv))
        current = self.chain[-1]
        if node in self.chain:
            start = self.chain.index(node)
            raise DependencyCycle(self.chain[start:] + [node])
        ctx.graph.add_edge(current, node)
        if node in ctx.memo:
            return
        ctx.memo.add(node)
        self.chain.append(node)
        try:
            self.interp.call_proc(proc, list(argv), called_as=path)
        finally:
            self.chain.pop()

    # -- files --------------------------------------------------------------------

    def _defining_dir(self) -> str:
        for frame in reversed(self.interp.frames):
            if frame.proc is not None and frame.proc.defining_file:
                return os.path.dirname(os.path.abspath(frame.proc.defining_file))
        return self.interp.cwd

    def add_file(self, paths: list[str]) -> None:
        ctx = self.require_ctx("hbs::AddFile")
        base = self._defining_dir()
        for p in paths:
            resolved = os.path.normpath(os.path.join(base, p))
            if not ctx.dry_run and not os.path.exists(resolved):
                raise FileNotFound(resolved)
            if any(f.path == resolved and f.lib == ctx.lib for f in ctx.files):
                log.debug("ignoring duplicate file %s (library %r)", resolved, ctx.lib)
                continue
            entry = FileEntry(resolved, file_kind(resolved), ctx.lib, ctx.std)
            ctx.files.append(entry)
            ctx.events.append(("file", entry))
        self.sync_vars()

    # -- tool state -----------------------------------------------------------------

    def set_tool(self, name: str) -> None:
        ctx = self.require_ctx("hbs::SetTool")
        backend = get_backend(name)
        if ctx.tool == name:
            return
        if ctx.tool:
            raise ToolAlreadySet(f'tool already set to "{ctx.tool}", cannot switch to "{name}"')
        if ctx.files or ctx.ran:
            raise ToolAlreadySet("hbs::SetTool must be called before any hbs::AddFile or hbs::Run")
        ctx.tool = name
        backend.begin(self, ctx)
        for (stage, _), cbs in ctx.callbacks.items():
            if stage not in backend.spec.stages:
                raise backends.UnknownStage(stage, name, backend.spec.stages)
        self.sync_vars()

    def set_severity(self, value: str) -> None:
        ctx = self.require_ctx("hbs::SetExitSeverity")
        if value not in SEVERITIES:
            raise InvalidSeverity(value)
        ctx.exit_severity = value
        self.sync_vars()

    # -- callbacks and stages ------------------------------------------------------------

    def add_callback(self, stage: str, phase: str, name: str, argv: list[str]) -> None:
        ctx = self.require_ctx(f"hbs::Add{phase.capitalize()}Cb")
        backend = ctx.backend
        if backend is not None:
            if stage not in backend.spec.stages:
                raise backends.UnknownStage(stage, ctx.tool, backend.spec.stages)
        elif stage not in backends.all_stages():
            raise backends.UnknownStage(stage, "<unset>", tuple(sorted(backends.all_stages())))
        resolved = self.interp.resolve_command(name) or name
        ctx.callbacks.setdefault((stage, phase), []).append(Callback(resolved, tuple(argv)))

    def invoke_callback(self, cb: Callback) -> None:
        self.interp.invoke([cb.name, *cb.argv])

    def hbs_run(self, stage: Optional[str]) -> None:
        ctx = self.require_ctx("hbs::Run")
        backend = ctx.backend
        if backend is None:
            raise ToolNotSet()
        stages = backend.spec.stages_through(stage)
        if backend.spec.requires_top and not ctx.top:
            raise backends.TopNotSet(backend.spec.name)
        ctx.ran = True
        for st in stages:
            for cb in ctx.callbacks.get((st, "pre"), []):
                backend.run_callback(self, ctx, st, "pre", cb)
            backend.run_stage(self, ctx, st)
            for cb in ctx.callbacks.get((st, "post"), []):
                backend.run_callback(self, ctx, st, "post", cb)
            ctx.arg_prefix = ""
            ctx.arg_suffix = ""
            self.sync_vars()
        backend.after_stages(self, ctx, stages[-1])

    # -- external commands --------------------------------------------------------------

    def exec_command(self, command_line: str, cwd: Optional[str] = None) -> int:
        """``hbs::Exec``: print in dry-run, otherwise spawn and return the exit code."""
        ctx = self.ctx
        if (ctx is not None and ctx.dry_run) or self.interp.dry_run:
            self.interp.write(command_line + "\n")
            return 0
        argv = split_list(command_line)
        if not argv:
            raise FlowError("hbs::Exec: empty command")
        code, err = spawn_inherit(self.interp, argv, cwd=cwd)
        if err:
            self.interp.write(err, "stderr")
        return code

    # -- passthrough --------------------------------------------------------------------

    def install_passthrough(self) -> None:
        self.interp.unknown_handler = self._record_unknown

    def _record_unknown(self, interp: Interp, node: ScriptNode) -> str:
        ctx = self.ctx
        if ctx is None:
            raise TclError(f'invalid command name "{interp.substitute(node.words[0])}"')
        text = interp.render_passthrough(node)
        ctx.unknown_log.append((len(ctx.files), text))
        ctx.events.append(("raw", text))
        return ""

    # -- builtin table --------------------------------------------------------------------

    def _install(self) -> None:
        reg = self.interp.register_builtin

        def setter(attr: str, command: str):
            def fn(interp: Interp, args: list[str]) -> str:
                if len(args) != 1:
                    raise TclError(f'wrong # args: should be "{command} value"')
                setattr(self.require_ctx(command), attr, args[0])
                self.sync_vars()
                return ""
            return fn

        for attr, name in [("top", "SetTop"), ("device", "SetDevice"), ("lib", "SetLib"),
                           ("std", "SetStd"), ("arg_prefix", "SetArgPrefix"),
                           ("arg_suffix", "SetArgSuffix")]:
            reg(f"hbs::{name}", setter(attr, f"hbs::{name}"))

        def set_tool(interp: Interp, args: list[str]) -> str:
            if len(args) != 1:
                raise TclError('wrong # args: should be "hbs::SetTool tool"')
            self.set_tool(args[0])
            return ""

        def set_generic(interp: Interp, args: list[str]) -> str:
            if len(args) != 2:
                raise TclError('wrong # args: should be "hbs::SetGeneric name value"')
            self.require_ctx("hbs::SetGeneric").generics[args[0]] = args[1]
            return ""

        def set_severity(interp: Interp, args: list[str]) -> str:
            if len(args) != 1:
                raise TclError('wrong # args: should be "hbs::SetExitSeverity severity"')
            self.set_severity(args[0])
            return ""

        def add_file(interp: Interp, args: list[str]) -> str:
            if not args:
                raise TclError('wrong # args: should be "hbs::AddFile path ?path ...?"')
            self.add_file(args)
            return ""

        def add_dep(interp: Interp, args: list[str]) -> str:
            if not args:
                raise TclError('wrong # args: should be "hbs::AddDep path ?arg ...?"')
            self.add_dep(args[0], args[1:])
            return ""

        def run(interp: Interp, args: list[str]) -> str:
            if len(args) > 1:
                raise TclError('wrong # args: should be "hbs::Run ?stage?"')
            self.hbs_run(args[0] if args else None)
            return ""

        def exec_(interp: Interp, args: list[str]) -> str:
            if not args:
                raise TclError('wrong # args: should be "hbs::Exec command ?arg ...?"')
            # one word is a command line; several words are the argv itself
            line = args[0] if len(args) == 1 else format_list(args)
            return str(self.exec_command(line))

        def panic(interp: Interp, args: list[str]) -> str:
            raise FlowError(" ".join(args) if args else "panic")

        def generic_cb(phase: str):
            def fn(interp: Interp, args: list[str]) -> str:
                if len(args) < 2:
                    raise TclError(f'wrong # args: should be "hbs::Add{phase.capitalize()}Cb stage proc ?arg ...?"')
                self.add_callback(args[0], phase, args[1], args[2:])
                return ""
            return fn

        def stage_cb(stage: str, phase: str, command: str):
            def fn(interp: Interp, args: list[str]) -> str:
                if not args:
                    raise TclError(f'wrong # args: should be "{command} proc ?arg ...?"')
                self.add_callback(stage, phase, args[0], args[1:])
                return ""
            return fn

        def mock_stage_cmd(interp: Interp, args: list[str]) -> str:
            if len(args) != 2:
                raise TclError('wrong # args: should be "hbs::mock::SetStageCmd stage command"')
            self.require_ctx("hbs::mock::SetStageCmd").mock_commands[args[0]] = args[1]
            return ""

        def ghdl_std_cmd(interp: Interp, args: list[str]) -> str:
            ctx = self.ctx
            return ghdl_std(ctx.std if ctx else "")

        reg("hbs::SetTool", set_tool)
        reg("hbs::SetGeneric", set_generic)
        reg("hbs::SetExitSeverity", set_severity)
        reg("hbs::AddFile", add_file)
        reg("hbs::AddDep", add_dep)
        reg("hbs::Run", run)
        reg("hbs::Exec", exec_)
        reg("hbs::panic", panic)
        reg("hbs::AddPreCb", generic_cb("pre"))
        reg("hbs::AddPostCb", generic_cb("post"))
        for stage, abbrev in STAGE_ABBREV.items():
            for phase in ("pre", "post"):
                command = f"hbs::Add{phase.capitalize()}{abbrev}Cb"
                reg(command, stage_cb(stage, phase, command))
        reg("hbs::mock::SetStageCmd", mock_stage_cmd)
        reg("hbs::ghdl::std", ghdl_std_cmd)


# -- workspace ------------------------------------------------------------------------------

@dataclass
class Workspace:
    interp: Interp
    registry: Registry
    flow: Flow

    @classmethod
    def load(cls, root: str = ".", work_dir: Optional[str] = None,
             stdout: Optional[TextIO] = None, stderr: Optional[TextIO] = None,
             tool_cmd: Optional[str] = None,
             mock_commands: Optional[dict[str, str]] = None) -> "Workspace":
        """Discover and source every ``.hbs`` file under ``root`` into a fresh interpreter."""
        work = os.path.abspath(work_dir or os.getcwd())
        interp = Interp(stdout=stdout or sys.stdout, stderr=stderr or sys.stderr, cwd=work)
        registry = Registry(interp, root)
        registry.install()
        flow = Flow(interp, registry, work, tool_cmd=tool_cmd, mock_commands=mock_commands)
        source_all(discover(root), interp, registry)
        return cls(interp, registry, flow)

"""The ``hbs`` command line."""
from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Any, Callable, Optional

from . import __version__
from .backends import BACKENDS, STAGE_ABBREV, UnknownTool, backend_for
from .flow import DependencyCycle, UnknownTarget, Workspace, emit_dot
from .registry import IoError, Registry, SourceError, UnknownCore, classify_tb
from .tclish import ProcDef, TclError, format_list
from .testrunner import NoTestsMatched, exit_code, report, run_tests

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

COMMANDS: dict[str, str] = {
    "help": "Print help message",
    "doc": "Show documentation for cores",
    "dump": "Dump info about cores in Tcl dictionary format",
    "dump-json": "Dump info about cores in JSON format",
    "graph": "Output dependency graph for given target",
    "info": "Show information on hbs Tcl symbol or EDA tool",
    "ls-cores": "List cores found in .hbs files",
    "ls-targets": "List targets for given core",
    "ls-tb": "List testbench targets",
    "run": "Run given target",
    "dry-run": "Run given target without executing and evaluating commands",
    "test": "Run testbench targets",
    "version": "Print hbs version",
    "where": "Print where given cores are defined",
}

COMMAND_DETAILS: dict[str, str] = {
    "help": "hbs help [command]\n\nPrint the command list, or details of one command.",
    "doc": "hbs doc [pattern]\n\nShow the comment blocks preceding core namespaces and target\n"
           "procs. The pattern is a glob over core paths ('*' and '?').",
    "dump": "hbs dump\n\nPrint all cores and targets as one Tcl dictionary.",
    "dump-json": "hbs dump-json\n\nPrint all cores and targets as one JSON document with keys\n"
                 "cores[].{path, file, doc, targets[].{name, params[].{name, default}, testbench}}.",
    "graph": "hbs graph <target> [args...]\n\nEvaluate the target in dry-run mode and print its\n"
             "dependency graph in Graphviz DOT format.",
    "info": "hbs info <hbs::symbol | tool>\n\nDescribe an hbs:: command or a tool backend\n"
            "(kind, stages and callback commands).",
    "ls-cores": "hbs ls-cores [pattern]\n\nList registered core paths, sorted.",
    "ls-targets": "hbs ls-targets <core>\n\nList the targets of a core, sorted.",
    "ls-tb": "hbs ls-tb [pattern]\n\nList testbench targets: names equal to 'tb', starting with\n"
             "'tb-' or 'tb_', or ending with '-tb' or '_tb'.",
    "run": "hbs run <target> [args...]\n\nRun a target. Arguments after the target path are passed\n"
           "to the target procedure verbatim.",
    "dry-run": "hbs dry-run <target> [args...]\n\nRun a target without spawning programs or touching\n"
               "the file system; external commands are printed instead.",
    "test": "hbs test [pattern]\n\nRun testbench targets in parallel (see --workers), each in its own\n"
            "flow. Logs are written to build/test-logs/.",
    "version": "hbs version\n\nPrint the hbs version.",
    "where": "hbs where [pattern]\n\nPrint each matching core path with its defining file.",
}

GLOBAL_OPTIONS = """\
Global options (before the command):

  --dir DIR        Root directory searched for .hbs files (default: .)
  --workers N      Parallel test flows (default: $HBS_WORKERS or CPU count)
  --tool-cmd PROG  Program run on generated tool scripts
"""

# one-line description and signature of every hbs:: command
SYMBOLS: dict[str, tuple[str, str]] = {
    "hbs::Register": ("hbs::Register", "Register the enclosing namespace as a core."),
    "hbs::AddDep": ("hbs::AddDep path ?args...?",
                    "Run a dependency target; each (path, args) pair runs at most once per flow."),
    "hbs::AddFile": ("hbs::AddFile path ?path...?",
                     "Add files relative to the .hbs file defining the running target."),
    "hbs::Run": ("hbs::Run ?stage?", "Run tool stages up to and including stage (default: last)."),
    "hbs::Exec": ("hbs::Exec command", "Run a command and return its exit status; print it in dry-run."),
    "hbs::panic": ("hbs::panic message", "Abort the flow with an error message."),
    "hbs::SetTool": ("hbs::SetTool tool", "Select the tool backend; must precede files and stages."),
    "hbs::SetTop": ("hbs::SetTop name", "Set the design top unit."),
    "hbs::SetDevice": ("hbs::SetDevice part", "Set the target device."),
    "hbs::SetLib": ("hbs::SetLib lib", "Set the library of subsequently added files; empty for default."),
    "hbs::SetStd": ("hbs::SetStd std", "Set the HDL standard revision of subsequently added files."),
    "hbs::SetGeneric": ("hbs::SetGeneric name value", "Set a top-level generic or parameter."),
    "hbs::SetArgPrefix": ("hbs::SetArgPrefix text", "Extra tool arguments before the standard ones."),
    "hbs::SetArgSuffix": ("hbs::SetArgSuffix text", "Extra tool arguments after the standard ones."),
    "hbs::SetExitSeverity": ("hbs::SetExitSeverity note|warning|error|failure",
                             "Assertion severity at which simulation fails."),
    "hbs::AddPreCb": ("hbs::AddPreCb stage proc ?args...?", "Add a callback run before a stage."),
    "hbs::AddPostCb": ("hbs::AddPostCb stage proc ?args...?", "Add a callback run after a stage."),
    "hbs::ghdl::std": ("hbs::ghdl::std", "The current standard as a GHDL --std token."),
    "hbs::mock::SetStageCmd": ("hbs::mock::SetStageCmd stage command",
                               "Command the mock-sim backend runs for a stage."),
}


def help_text() -> str:
    lines = ["Usage", "", "  hbs <command> [arguments]", "", "The command is one of:", ""]
    lines += [f"  {name:<12}{desc}" for name, desc in COMMANDS.items()]
    lines += ["", "Type 'hbs help <command>' to obtain more information about particular command."]
    return "\n".join(lines) + "\n"


class UsageError(Exception):
    pass


# -- dumps ---------------------------------------------------------------------------

def _params(proc: ProcDef) -> list[dict[str, str]]:
    out = []
    for name, default in proc.params:
        out.append({"name": name} if default is None else {"name": name, "default": default})
    if proc.has_rest:
        out.append({"name": "args"})
    return out


def core_dump(registry: Registry) -> dict[str, Any]:
    cores = []
    for path in registry.list_cores():
        core = registry.cores[path]
        cores.append({
            "path": path,
            "file": registry.relpath(core.defining_file),
            "doc": core.doc,
            "targets": [
                {"name": name, "params": _params(proc), "testbench": classify_tb(name)}
                for name, proc in core.targets.items()
            ],
        })
    return {"cores": cores}


def dump_json(registry: Registry) -> str:
    return json.dumps(core_dump(registry), indent=2) + "\n"


def _tcl_value(value: Any) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, dict):
        return format_list([x for k, v in value.items() for x in (k, _tcl_value(v))])
    if isinstance(value, list):
        return format_list([_tcl_value(v) for v in value])
    return str(value)


def dump_tcl(registry: Registry) -> str:
    return _tcl_value(core_dump(registry)) + "\n"


def doc_text(registry: Registry, pattern: Optional[str]) -> str:
    blocks = []
    for path in registry.list_cores(pattern):
        core = registry.cores[path]
        lines = [path, f"  file: {registry.relpath(core.defining_file)}"]
        lines += [f"  {line}" if line else "" for line in core.doc.splitlines()]
        for name, proc in core.targets.items():
            sig = " ".join([name, *(p if d is None else f"?{p}={d}?" for p, d in proc.params)]
                           + (["?args...?"] if proc.has_rest else []))
            lines.append(f"  target {sig}")
            lines += [f"      {line}" for line in proc.doc.splitlines()]
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + ("\n" if blocks else "")


def info_text(name: str) -> str:
    if name in BACKENDS:
        spec = backend_for(name)
        lines = [f"tool: {spec.name}", f"kind: {spec.kind}",
                 f"stages: {' '.join(spec.stages)}",
                 f"requires top: {'yes' if spec.requires_top else 'no'}",
                 "callbacks: " + " ".join(spec.callback_builtins())]
        if spec.description:
            lines.insert(1, f"description: {spec.description}")
        return "\n".join(lines) + "\n"
    sym = name[2:] if name.startswith("::") else name
    if sym in SYMBOLS:
        signature, desc = SYMBOLS[sym]
        return f"{signature}\n  {desc}\n"
    callbacks = _stage_callback_symbols()
    if sym in callbacks:
        return f"{sym} proc ?args...?\n  {callbacks[sym]}\n"
    raise UsageError(f'unknown hbs symbol or tool "{name}"')


def _stage_callback_symbols() -> dict[str, str]:
    out = {}
    for stage, abbrev in STAGE_ABBREV.items():
        out[f"hbs::AddPre{abbrev}Cb"] = f"Add a callback run before the {stage} stage."
        out[f"hbs::AddPost{abbrev}Cb"] = f"Add a callback run after the {stage} stage."
    return out


# -- commands ---------------------------------------------------------------------------

class Cli:
    def __init__(self, opts: argparse.Namespace, stdout=None, stderr=None):
        self.opts = opts
        self.out = stdout or sys.stdout
        self.err = stderr or sys.stderr
        self._ws: Optional[Workspace] = None

    @property
    def ws(self) -> Workspace:
        if self._ws is None:
            self._ws = Workspace.load(self.opts.dir, work_dir=os.getcwd(), stdout=self.out,
                                      stderr=self.err, tool_cmd=self.opts.tool_cmd)
        return self._ws

    def print(self, text: str) -> None:
        self.out.write(text)

    @staticmethod
    def _at_most(args: list[str], n: int, cmd: str) -> None:
        if len(args) > n:
            raise UsageError(f"too many arguments for '{cmd}'\n\nUsage: {COMMAND_DETAILS[cmd].splitlines()[0]}")

    @staticmethod
    def _need(args: list[str], cmd: str) -> None:
        if not args:
            raise UsageError(f"missing argument for '{cmd}'\n\nUsage: {COMMAND_DETAILS[cmd].splitlines()[0]}")

    def cmd_help(self, args: list[str]) -> int:
        self._at_most(args, 1, "help")
        if not args:
            self.print(help_text() + "\n" + GLOBAL_OPTIONS)
            return EXIT_OK
        if args[0] not in COMMANDS:
            raise UsageError(f'unknown command "{args[0]}"')
        self.print(COMMAND_DETAILS[args[0]] + "\n")
        return EXIT_OK

    def cmd_version(self, args: list[str]) -> int:
        self._at_most(args, 0, "version")
        self.print(__version__ + "\n")
        return EXIT_OK

    def cmd_ls_cores(self, args: list[str]) -> int:
        self._at_most(args, 1, "ls-cores")
        for path in self.ws.registry.list_cores(args[0] if args else None):
            self.print(path + "\n")
        return EXIT_OK

    def cmd_ls_targets(self, args: list[str]) -> int:
        self._need(args, "ls-targets")
        self._at_most(args, 1, "ls-targets")
        for name in self.ws.registry.list_targets(args[0]):
            self.print(name + "\n")
        return EXIT_OK

    def cmd_ls_tb(self, args: list[str]) -> int:
        self._at_most(args, 1, "ls-tb")
        for path in self.ws.registry.list_tb(args[0] if args else None):
            self.print(path + "\n")
        return EXIT_OK

    def cmd_where(self, args: list[str]) -> int:
        self._at_most(args, 1, "where")
        found = self.ws.registry.where(args[0] if args else "*")
        if args and not found:
            raise UsageError(f'no core matches "{args[0]}"')
        for path, file in found:
            self.print(f"{path}  {file}\n")
        return EXIT_OK

    def cmd_doc(self, args: list[str]) -> int:
        self._at_most(args, 1, "doc")
        pattern = args[0] if args else None
        if pattern and not self.ws.registry.list_cores(pattern):
            raise UsageError(f'no core matches "{pattern}"')
        self.print(doc_text(self.ws.registry, pattern))
        return EXIT_OK

    def cmd_dump(self, args: list[str]) -> int:
        self._at_most(args, 0, "dump")
        self.print(dump_tcl(self.ws.registry))
        return EXIT_OK

    def cmd_dump_json(self, args: list[str]) -> int:
        self._at_most(args, 0, "dump-json")
        self.print(dump_json(self.ws.registry))
        return EXIT_OK

    def cmd_info(self, args: list[str]) -> int:
        self._need(args, "info")
        self._at_most(args, 1, "info")
        self.print(info_text(args[0]))
        return EXIT_OK

    def cmd_graph(self, args: list[str]) -> int:
        self._need(args, "graph")
        try:
            graph = self.ws.flow.graph(args[0], args[1:])
        except DependencyCycle as e:
            self.err.write(f"error: {e.message}\n")
            return EXIT_FAIL
        except UnknownTarget:
            raise
        except TclError as e:
            self.err.write(f"error: {e.format_trace()}\n")
            return EXIT_FAIL
        self.print(emit_dot(graph))
        return EXIT_OK

    def _run(self, args: list[str], dry_run: bool, cmd: str) -> int:
        self._need(args, cmd)
        return self.ws.flow.run_target(args[0], args[1:], dry_run=dry_run)

    def cmd_run(self, args: list[str]) -> int:
        return self._run(args, False, "run")

    def cmd_dry_run(self, args: list[str]) -> int:
        return self._run(args, True, "dry-run")

    def cmd_test(self, args: list[str]) -> int:
        self._at_most(args, 1, "test")
        work = os.getcwd()

        def progress(res) -> None:
            self.err.write(f"{'PASS' if res.passed else 'FAIL'}  {res.target_path}\n")
            self.err.flush()

        results = run_tests(self.ws.registry, args[0] if args else None, self.opts.workers,
                            work_dir=work, tool_cmd=self.opts.tool_cmd, on_result=progress)
        self.print(report(results, work))
        return exit_code(results)


def _dispatch_table(cli: Cli) -> dict[str, Callable[[list[str]], int]]:
    return {name: getattr(cli, "cmd_" + name.replace("-", "_")) for name in COMMANDS}


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid worker count {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError("worker count must be at least 1")
    return value


def default_workers() -> int:
    env = os.environ.get("HBS_WORKERS")
    if env:
        return _positive_int(env)
    return os.cpu_count() or 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hbs", add_help=False, usage="hbs [options] <command> [arguments]")
    parser.add_argument("--dir", default=".")
    parser.add_argument("--workers", type=_positive_int, default=None)
    parser.add_argument("--tool-cmd", default=None)
    parser.add_argument("command", nargs="?")
    parser.add_argument("args", nargs=argparse.REMAINDER)
    return parser


def main(argv: Optional[list[str]] = None, stdout=None, stderr=None) -> int:
    out = stdout or sys.stdout
    err = stderr or sys.stderr
    parser = build_parser()
    try:
        opts = parser.parse_args(sys.argv[1:] if argv is None else argv)
        if opts.workers is None:
            opts.workers = default_workers()
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK
    except argparse.ArgumentTypeError as e:
        err.write(f"hbs: HBS_WORKERS: {e}\n")
        return EXIT_USAGE
    if opts.command in (None, "-h", "--help"):
        out.write(help_text())
        return EXIT_OK if opts.command else EXIT_USAGE
    cli = Cli(opts, out, err)
    table = _dispatch_table(cli)
    handler = table.get(opts.command)
    if handler is None:
        err.write(f'hbs: unknown command "{opts.command}"\n\n{help_text()}')
        return EXIT_USAGE
    try:
        return handler(opts.args)
    except UsageError as e:
        err.write(f"hbs: {e}\n")
        return EXIT_USAGE
    except (UnknownTarget, UnknownCore, NoTestsMatched, UnknownTool, IoError) as e:
        err.write(f"hbs: {e}\n")
        return EXIT_USAGE
    except SourceError as e:
        err.write(f"hbs: {e}\n")
        if e.trace:
            err.write(e.trace + "\n")
        return EXIT_FAIL
    finally:
        try:
            out.flush()
        except (ValueError, OSError):
            pass


if __name__ == "__main__":
    sys.exit(main())

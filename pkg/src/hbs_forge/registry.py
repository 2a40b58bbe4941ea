"""Discovery of ``.hbs`` files and the core/target model built from them."""
from __future__ import annotations

import logging
import os
from dataclasses import dataclass
from typing import Iterable, Optional

from .tclish import Interp, ProcDef, TclError, glob_match
from .tclish.parser import UnbalancedDelimiter

log = logging.getLogger(__name__)

HBS_SUFFIX = ".hbs"


class IoError(Exception):
    def __init__(self, path: str, reason: str):
        super().__init__(f"{path}: {reason}")
        self.path = path


class SourceError(Exception):
    """Evaluation of a ``.hbs`` file failed."""

    def __init__(self, path: str, line: Optional[int], message: str, trace: str = ""):
        where = f"{path}:{line}" if line else path
        super().__init__(f"{where}: {message}")
        self.path = path
        self.line = line
        self.message = message
        self.trace = trace


class RegisterOutsideNamespace(TclError):
    def __init__(self) -> None:
        super().__init__("hbs::Register must be called inside a namespace eval")


class DuplicateCore(TclError):
    def __init__(self, path: str, first: Optional[str], second: Optional[str]):
        super().__init__(f'core "{path}" already registered in {first}, redefined in {second}')
        self.path = path


class UnknownCore(Exception):
    def __init__(self, path: str):
        super().__init__(f'unknown core "{path}"')
        self.path = path


# -- discovery ---------------------------------------------------------------------

def _depth_key(rel: str) -> tuple[int, str]:
    return rel.count("/"), rel


def discover(root_dir: str | os.PathLike[str]) -> list[str]:
    """Find every ``.hbs`` file under ``root_dir`` in sourcing order.

    Directory symlinks are followed; a directory already visited through
    another path is skipped (logged as a warning when it would form a cycle).
    Hidden directories are not entered.  Returned paths are absolute and
    sorted by path depth, then lexicographically by relative path.
    """
    root = os.path.abspath(root_dir)
    if not os.path.isdir(root):
        raise IoError(root, "not a directory")

    def onerror(err: OSError) -> None:
        raise IoError(err.filename or root, err.strerror or str(err))

    seen_dirs: set[str] = set()
    found: list[str] = []
    for dirpath, dirnames, filenames in os.walk(root, onerror=onerror, followlinks=True):
        real = os.path.realpath(dirpath)
        if real in seen_dirs:
            log.warning("skipping %s: directory already visited (symlink cycle?)", dirpath)
            dirnames[:] = []
            continue
        seen_dirs.add(real)
        kept = []
        for d in sorted(dirnames):
            if d.startswith("."):
                continue
            sub = os.path.join(dirpath, d)
            if os.path.realpath(sub) in seen_dirs:
                log.warning("skipping %s: symlink cycle", sub)
                continue
            kept.append(d)
        dirnames[:] = kept
        for f in filenames:
            if f.endswith(HBS_SUFFIX) and os.path.isfile(os.path.join(dirpath, f)):
                rel = os.path.relpath(os.path.join(dirpath, f), root).replace(os.sep, "/")
                found.append(rel)
    found.sort(key=_depth_key)
    return [os.path.join(root, *rel.split("/")) for rel in found]


# -- the core model ------------------------------------------------------------------

def classify_tb(target_name: str) -> bool:
    """True for testbench target names: ``tb``, ``tb-*``, ``tb_*``, ``*-tb``, ``*_tb``."""
    return (
        target_name == "tb"
        or target_name.startswith(("tb-", "tb_"))
        or target_name.endswith(("-tb", "_tb"))
    )


@dataclass
class Core:
    path: str
    defining_file: Optional[str]
    doc: str
    _interp: Interp

    @property
    def namespace(self) -> str:
        return "::" + self.path

    def _direct_procs(self) -> list[ProcDef]:
        prefix = self.namespace + "::"
        return [p for fq, p in self._interp.procs.items()
                if fq.startswith(prefix) and "::" not in fq[len(prefix):]]

    @property
    def targets(self) -> dict[str, ProcDef]:
        procs = {p.name: p for p in self._direct_procs() if not p.name.startswith("_")}
        return {name: procs[name] for name in sorted(procs)}

    @property
    def utility_procs(self) -> dict[str, ProcDef]:
        return {p.name: p for p in self._direct_procs() if p.name.startswith("_")}


class Registry:
    """Cores registered while sourcing ``.hbs`` files into one interpreter."""

    def __init__(self, interp: Interp, root: Optional[str] = None):
        self.interp = interp
        self.root = os.path.abspath(root) if root else None
        self.cores: dict[str, Core] = {}
        self.files: list[str] = []

    # registration -----------------------------------------------------------

    def register_current(self, interp: Interp) -> None:
        ns = interp.current_namespace
        if ns is interp.global_ns:
            raise RegisterOutsideNamespace()
        path = ns.path[2:]
        if path in self.cores:
            raise DuplicateCore(path, self.cores[path].defining_file, interp.current_file)
        self.cores[path] = Core(path, interp.current_file, interp.ns_docs.get(ns.path, ""), interp)

    def install(self) -> None:
        """Provide the ``hbs::Register`` builtin."""
        def register(interp: Interp, args: list[str]) -> str:
            if args:
                raise TclError('wrong # args: should be "hbs::Register"')
            self.register_current(interp)
            return ""
        self.interp.register_builtin("hbs::Register", register)

    # queries ------------------------------------------------------------------

    def relpath(self, path: Optional[str]) -> str:
        if path is None:
            return ""
        if self.root is None:
            return path
        rel = os.path.relpath(path, self.root)
        return rel.replace(os.sep, "/")

    def core(self, path: str) -> Core:
        try:
            return self.cores[path.lstrip(":")]
        except KeyError:
            raise UnknownCore(path) from None

    def is_core_namespace(self, ns_path: str) -> bool:
        return ns_path.startswith("::") and ns_path[2:] in self.cores

    def list_cores(self, pattern: Optional[str] = None) -> list[str]:
        paths = sorted(self.cores)
        if pattern:
            paths = [p for p in paths if glob_match(pattern, p, brackets=False)]
        return paths

    def list_targets(self, core_path: str) -> list[str]:
        return list(self.core(core_path).targets)

    def list_tb(self, pattern: Optional[str] = None) -> list[str]:
        out = []
        for core_path in self.cores:
            for name in self.cores[core_path].targets:
                if classify_tb(name):
                    out.append(f"{core_path}::{name}")
        out.sort()
        if pattern:
            out = [p for p in out if glob_match(pattern, p, brackets=False)]
        return out

    def where(self, pattern: str) -> list[tuple[str, str]]:
        return [(p, self.relpath(self.cores[p].defining_file)) for p in self.list_cores(pattern)]

    def resolve_target(self, target_path: str) -> Optional[ProcDef]:
        """The proc behind ``core::path::name``, or None."""
        path = target_path.lstrip(":")
        idx = path.rfind("::")
        if idx <= 0:
            return None
        core_path, name = path[:idx], path[idx + 2:]
        core = self.cores.get(core_path)
        if core is None or name.startswith("_"):
            return None
        return self.interp.procs.get(f"::{core_path}::{name}")


def _file_line(err: TclError) -> Optional[int]:
    """Approximate file line of an error from its nested-evaluation trace.

    Nested bodies are parsed separately, so their line numbers are relative
    to the body; bodies are assumed to open on their command's line.
    """
    if not err.trace:
        return None
    entries = list(reversed(err.trace))
    line = entries[0][1]
    for where, rel, _ in entries[1:]:
        if where.startswith("procedure"):
            break
        line += rel - 1
    return line


def source_all(files: Iterable[str], interp: Interp, registry: Optional[Registry] = None) -> Registry:
    """Evaluate ``files`` in order into ``interp``, collecting registered cores."""
    if registry is None:
        registry = Registry(interp)
        registry.install()
    for path in files:
        try:
            interp.eval_file(path)
        except UnbalancedDelimiter as e:
            raise SourceError(path, e.line, e.message) from None
        except TclError as e:
            raise SourceError(path, _file_line(e), e.message, e.format_trace()) from None
        registry.files.append(path)
    return registry

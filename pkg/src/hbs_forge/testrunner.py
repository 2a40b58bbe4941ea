"""Parallel execution of testbench targets, one isolated flow per test."""
from __future__ import annotations

import os
import re
import threading
import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass
from typing import Callable, Optional

from .flow import Workspace
from .registry import Registry, SourceError

LOG_DIR = os.path.join("build", "test-logs")


class NoTestsMatched(Exception):
    def __init__(self, pattern: Optional[str]):
        what = f'pattern "{pattern}"' if pattern else "the registry"
        super().__init__(f"no testbench targets match {what}")
        self.pattern = pattern


@dataclass
class TestResult:
    __test__ = False  # not a pytest class

    target_path: str
    status: str  # "pass" | "fail" | "error"
    duration: float
    output_file: str
    start: float = 0.0
    end: float = 0.0

    @property
    def passed(self) -> bool:
        return self.status == "pass"


def sanitize(target_path: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]+", "_", target_path.replace("::", "."))


def log_path(work_dir: str, target_path: str) -> str:
    return os.path.join(work_dir, LOG_DIR, sanitize(target_path) + ".log")


def run_one(root: str, work_dir: str, target_path: str,
            tool_cmd: Optional[str] = None) -> TestResult:
    """Run one testbench in a private interpreter; output goes to its log file."""
    out_file = log_path(work_dir, target_path)
    os.makedirs(os.path.dirname(out_file), exist_ok=True)
    start = time.time()
    status = "error"
    with open(out_file, "w", encoding="utf-8") as log:
        try:
            ws = Workspace.load(root, work_dir=work_dir, stdout=log, stderr=log, tool_cmd=tool_cmd)
            code = ws.flow.run_target(target_path)
            status = "pass" if code == 0 else "fail"
        except SourceError as e:
            log.write(f"error: {e}\n")
        except Exception as e:  # report, never take the pool down
            log.write(f"error: {type(e).__name__}: {e}\n")
        log.flush()
    end = time.time()
    return TestResult(target_path, status, end - start, out_file, start, end)


def schedule(tests: list[str], workers: int, job: Callable[[str], TestResult],
             on_result: Optional[Callable[[TestResult], None]] = None) -> list[TestResult]:
    """Dispatch ``tests`` FIFO (sorted) over ``workers``; results in completion order."""
    if workers < 1:
        raise ValueError("workers must be at least 1")
    ordered = sorted(tests)
    results: list[TestResult] = []
    lock = threading.Lock()
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(job, t) for t in ordered]
        for fut in as_completed(futures):
            res = fut.result()
            with lock:
                results.append(res)
            if on_result is not None:
                on_result(res)
    return results


def run_tests(registry: Registry, pattern: Optional[str] = None, workers: int = 1,
              work_dir: Optional[str] = None, tool_cmd: Optional[str] = None,
              on_result: Optional[Callable[[TestResult], None]] = None) -> list[TestResult]:
    """Run every testbench target matching ``pattern``; raises NoTestsMatched."""
    tests = registry.list_tb(pattern)
    if not tests:
        raise NoTestsMatched(pattern)
    if registry.root is None:
        raise ValueError("registry has no discovery root")
    work = os.path.abspath(work_dir or os.getcwd())
    root = registry.root
    return schedule(tests, workers, lambda t: run_one(root, work, t, tool_cmd), on_result)


def report(results: list[TestResult], work_dir: Optional[str] = None) -> str:
    lines = []
    for r in sorted(results, key=lambda r: r.target_path):
        line = f"{'PASS' if r.passed else 'FAIL'}  {r.target_path}  {r.duration:.2f}s"
        if not r.passed:
            shown = os.path.relpath(r.output_file, work_dir) if work_dir else r.output_file
            line += f"  (log: {shown})"
        lines.append(line)
    passed = sum(r.passed for r in results)
    lines.append(f"{len(results)} total, {passed} passed, {len(results) - passed} failed")
    return "\n".join(lines) + "\n"


def exit_code(results: list[TestResult]) -> int:
    return 0 if all(r.passed for r in results) else 1

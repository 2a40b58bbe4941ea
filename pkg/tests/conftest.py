import io
import os
import sys
from pathlib import Path

import pytest

TESTS = Path(__file__).parent
FIXTURES = TESTS / "fixtures"
sys.path.insert(0, str(TESTS))

from hbs_forge.cli import main  # noqa: E402
from hbs_forge.flow import Workspace  # noqa: E402


def run_cli(*args: str, cwd=None) -> tuple[int, str, str]:
    out, err = io.StringIO(), io.StringIO()
    old = os.getcwd()
    if cwd is not None:
        os.chdir(cwd)
    try:
        code = main(list(args), stdout=out, stderr=err)
    finally:
        os.chdir(old)
    return code, out.getvalue(), err.getvalue()


def load(root, work_dir, **kw) -> tuple[Workspace, io.StringIO]:
    out = io.StringIO()
    ws = Workspace.load(str(root), work_dir=str(work_dir), stdout=out, stderr=out, **kw)
    return ws, out


def write_tree(root: Path, files: dict[str, str]) -> Path:
    for rel, text in files.items():
        p = root / rel
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(text)
    return root


@pytest.fixture
def fixtures() -> Path:
    return FIXTURES


# -- acceptance summary -------------------------------------------------------------

_ACCEPTANCE: dict[str, str] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py::test_criterion_" not in report.nodeid:
        return
    if report.when == "call" or report.outcome != "passed":
        name = report.nodeid.split("::test_criterion_")[1]
        if _ACCEPTANCE.get(name) != "FAIL":
            _ACCEPTANCE[name] = "PASS" if report.outcome == "passed" else "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_ACCEPTANCE, key=lambda n: int(n.split("_")[0])):
        number, _, what = name.partition("_")
        terminalreporter.write_line(f"{_ACCEPTANCE[name]}  criterion {int(number)}: {what.replace('_', ' ')}")

import os
import subprocess
import sys

import pytest

from reliaplace import _kernels

_CRITERIA = []


@pytest.fixture
def criterion(request):
    """Record one acceptance criterion; the outcome is printed in the session summary."""
    entry = {"name": None, "detail": "", "passed": None}
    _CRITERIA.append(entry)

    def record(name, passed, detail=""):
        entry.update(name=name, passed=bool(passed), detail=detail)
        return passed

    yield record
    if entry["name"] is None:
        entry.update(name=request.node.name, passed=False, detail="test ended before recording a result")


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for entry in _CRITERIA:
        status = "PASS" if entry["passed"] else "FAIL"
        detail = f" ({entry['detail']})" if entry["detail"] else ""
        terminalreporter.write_line(f"[{status}] {entry['name']}{detail}")


@pytest.fixture(params=["numba", "numpy"])
def kernels(request):
    """Kernel table for each flavour; numba is skipped when unavailable."""
    if request.param == "numba":
        if not _kernels.HAVE_NUMBA:
            pytest.skip("numba not installed")
        return _kernels.NUMBA_KERNELS
    return _kernels.NUMPY_KERNELS


@pytest.fixture
def run_cli(tmp_path):
    """Run the installed entry point in a subprocess (exit code, stdout, stderr)."""

    def run(*args, env=None):
        full_env = dict(os.environ, **(env or {}))
        proc = subprocess.run([sys.executable, "-m", "reliaplace.cli", *map(str, args)],
                              capture_output=True, text=True, cwd=tmp_path, env=full_env)
        return proc.returncode, proc.stdout, proc.stderr

    return run

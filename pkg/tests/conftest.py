import contextlib
import time

import numpy as np
import pytest

from shapval import UtilityTable, table_oracle

# utilities of the three-client worked example, listed in mask order
TABLE1 = [0.10, 0.50, 0.70, 0.80, 0.60, 0.90, 0.90, 0.96]
TABLE1_SV = (0.22, 0.32, 0.32)

_CRITERIA: dict[int, tuple[str, str, str]] = {}


def random_table(n: int, rng: np.random.Generator) -> UtilityTable:
    return UtilityTable.from_array(rng.uniform(-1.0, 1.0, 1 << n))


@pytest.fixture
def table1():
    return table_oracle(UtilityTable.from_array(TABLE1))


@pytest.fixture
def criterion(request):
    """Context manager that records one acceptance line: ``with criterion(3, "title"):``."""

    @contextlib.contextmanager
    def record(number: int, title: str):
        start = time.perf_counter()
        status, detail = "FAIL", ""
        try:
            yield
            status = "PASS"
        except BaseException as exc:
            detail = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
            raise
        finally:
            _CRITERIA[number] = (status, title, f"{time.perf_counter() - start:.1f}s {detail}".strip())

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        status, title, detail = _CRITERIA[number]
        terminalreporter.write_line(f"{status} criterion {number:>2}: {title} ({detail})")

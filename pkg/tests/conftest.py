from __future__ import annotations

from pathlib import Path

import pytest

from traitstat.ingest import builtin_manifest, load_dataset
from traitstat.pipeline import RunConfig, resolve_path

FIXTURES = Path(__file__).resolve().parent / "fixtures"

FIXTURE_FILES = {
    "sample1": FIXTURES / "sample1.tsv",
    "sample2": FIXTURES / "sample2.zip",
    "sample3": FIXTURES / "sample3.tsv",
}

# criterion label -> "PASS ..." / "FAIL ..." / "SKIP ..."; filled by test_acceptance
ACCEPTANCE: dict[str, str] = {}


@pytest.fixture(scope="session")
def fixture_paths() -> dict[str, Path]:
    return dict(FIXTURE_FILES)


@pytest.fixture(scope="session")
def fixture_tables():
    return {name: load_dataset(builtin_manifest(name), path) for name, path in FIXTURE_FILES.items()}


def real_data_path(name: str) -> Path | None:
    """The downloaded dataset from the cache ($TRAITSTAT_CACHE), if present."""
    return resolve_path(name, RunConfig())


class Criterion:
    """Context manager recording one acceptance line as PASS or FAIL (SKIP via :meth:`skip`)."""

    def __init__(self, label: str):
        self.label = label
        self.detail = ""

    def skip(self, reason: str):
        ACCEPTANCE[self.label] = f"SKIP  {reason}"
        pytest.skip(reason)

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc_type is None:
            ACCEPTANCE[self.label] = "PASS" + (f"  {self.detail}" if self.detail else "")
        elif issubclass(exc_type, pytest.skip.Exception):
            ACCEPTANCE.setdefault(self.label, f"SKIP  {exc}")
        else:
            ACCEPTANCE[self.label] = f"FAIL  {exc_type.__name__}: {str(exc).splitlines()[0] if str(exc) else ''}"
        return False


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(ACCEPTANCE):
        status, _, detail = ACCEPTANCE[label].partition("  ")
        terminalreporter.write_line(f"{status:<4}  {label}" + (f"  ({detail.strip()})" if detail.strip() else ""))

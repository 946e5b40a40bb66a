import os

import numpy as np
import pytest
from hypothesis import settings

from pubcausal.corpus import AuthorPaperRow

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def make_row(author, paper, year, n_authors=1, venue="conference", country=None):
    return AuthorPaperRow(author, paper, year, venue, n_authors, 8, 100, 10.0, country)


def papers_to_rows(papers):
    """``papers`` is a list of ``(paper_id, year, [authors])``."""
    rows = []
    for pid, year, authors in papers:
        rows += [make_row(a, pid, year, len(authors)) for a in authors]
    return rows


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def acceptance(request):
    """Record one verdict line per criterion; the lines are printed at session end."""
    lines = request.config.stash.setdefault(ACCEPTANCE, [])

    def record(name, ok, detail):
        lines.append(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)

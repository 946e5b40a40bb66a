import io
import string

import pytest
from hypothesis import given
from hypothesis import strategies as st

from helpers import fog_fixture
from pubcausal.corpus import (
    PaperRecord,
    ParseReport,
    compute_paper_features,
    count_syllables,
    expand_author_rows,
    format_entry,
    gunning_fog,
    normalize_author,
    parse_bibliography,
    read_rows_csv,
    rows_to_csv_text,
    write_rows_csv,
)

BIB = rb"""
@inproceedings{p1,
  title = {{{BERT}: Pre-training} of deep models},
  author = {A. One and B. Two},
  year = {2019},
  pages = {10--14},
}
@article{p2,
  title = "A journal paper",
  author = "C. Three",
  year = 2018,
}
@inproceedings{noauthor,
  title = {Nobody wrote this},
  year = {2017},
}
@article{noyear,
  title = {Timeless},
  author = {D. Four},
}
"""


def test_parse_basic_fields():
    report = ParseReport()
    papers = parse_bibliography(BIB, report)
    assert [p.paper_id for p in papers] == ["p1", "p2"]
    p1, p2 = papers
    assert p1.authors == ("A. One", "B. Two")
    assert p1.page_count == 5
    assert p1.venue_kind == "conference"
    assert p1.title == "BERT: Pre-training of deep models"
    assert p2.venue_kind == "journal"
    assert p2.page_count == 0
    assert p2.year == 2018
    assert report.skipped["no_author"] == 1
    assert report.skipped["no_year"] == 1


def test_parse_unbalanced_entry_reports_offset_and_continues():
    raw = b"@article{bad, title = {oops, author = {X}, year = {2015},\n@article{good, author = {Y. Z}, year = {2016}}\n"
    report = ParseReport()
    papers = parse_bibliography(raw, report)
    assert [p.paper_id for p in papers] == ["good"]
    assert len(report.errors) == 1
    assert report.errors[0].offset == 0


def test_parse_splits_only_top_level_and():
    raw = b"@article{k, author = {{Smith and Sons} and J. Doe}, year = {2015}}"
    (p,) = parse_bibliography(raw)
    assert p.authors == ("Smith and Sons", "J. Doe")


def test_parse_error_offset_is_in_bytes():
    raw = "@article{a, author = {Ünal Ö}, year = {2015}}\n@article{b, title = {x\n".encode()
    report = ParseReport()
    parse_bibliography(raw, report)
    assert report.errors[0].offset == raw.index(b"@article{b")


def test_expand_rows_counts_and_order():
    papers = [
        PaperRecord("x", "t", 2015, "conference", ("A", "B", "C")),
        PaperRecord("y", "t", 2016, "journal", ("C",)),
    ]
    rows = expand_author_rows(papers)
    assert [(r.paper_id, r.author_id) for r in rows] == [("x", "a"), ("x", "b"), ("x", "c"), ("y", "c")]
    assert expand_author_rows([]) == []


def test_expand_rows_normalizes_names():
    papers = [
        PaperRecord("x", "t", 2015, "conference", ("a. one",)),
        PaperRecord("y", "t", 2016, "conference", ("A.  One",)),
    ]
    a, b = expand_author_rows(papers)
    assert a.author_id == b.author_id == "a. one"
    assert normalize_author("José  Núñez") == "jose nunez"


def test_duplicate_author_in_paper_is_one_row(caplog):
    rows = expand_author_rows([PaperRecord("x", "t", 2015, "conference", ("A. One", "a. one"))])
    assert len(rows) == 1
    assert "duplicate author" in caplog.text


def test_country_sidecar_carries_forward():
    papers = [PaperRecord("x", "t", 2015, "conference", ("A",)), PaperRecord("y", "t", 2017, "conference", ("A",))]
    rows = expand_author_rows(papers, {("a", 2014): "Japan"})
    assert [r.country for r in rows] == ["Japan", "Japan"]


def test_gunning_fog_fixtures():
    assert gunning_fog(fog_fixture()) == pytest.approx(12.0, abs=1e-9)
    assert gunning_fog("Go. Go. Go.") == pytest.approx(0.4)
    assert gunning_fog("") == 0.0
    assert gunning_fog("   \n") == 0.0


def test_syllables():
    assert count_syllables("beautiful") == 3
    assert count_syllables("make") == 1
    assert count_syllables("table") == 2
    assert count_syllables("go") == 1


def test_paper_features():
    text = " ".join(["word"] * 4000)
    rec = PaperRecord("p", "t", 2019, "conference", ("a", "b", "c", "d"), 9, text)
    f = compute_paper_features(rec)
    assert (f.n_authors, f.page_length, f.word_count, f.is_conference) == (4, 9, 4000, 1)
    assert f.fog_index > 0
    f = compute_paper_features(PaperRecord("q", "t", 2019, "journal", ("a",), 3))
    assert (f.n_authors, f.page_length, f.word_count, f.fog_index, f.is_conference) == (1, 3, 0, 0.0, 0)
    rec = PaperRecord("r", "t", 2019, "journal", ("a",), 0, fog_fixture())
    assert compute_paper_features(rec).fog_index == pytest.approx(12.0, abs=1e-9)


def test_rows_csv_roundtrip(tmp_path):
    papers = parse_bibliography(BIB)
    rows = expand_author_rows(papers, {("c. three", 2018): "France"})
    path = tmp_path / "rows.csv"
    write_rows_csv(rows, path)
    raw = path.read_bytes()
    assert raw.startswith(b"author_id,paper_id,year,venue_kind,n_authors,page_length,word_count,fog_index,country\n")
    assert b"\r\n" not in raw
    assert read_rows_csv(path) == rows


def test_row_table_is_deterministic():
    a = rows_to_csv_text(expand_author_rows(parse_bibliography(BIB)))
    b = rows_to_csv_text(expand_author_rows(parse_bibliography(io.BytesIO(BIB).read())))
    assert a == b


names = st.text(alphabet=string.ascii_letters + ". ", min_size=1, max_size=12).filter(
    lambda s: s.strip() and " and " not in f" {s.lower()} " and not s.strip().lower().startswith("and")
    and not s.strip().lower().endswith(" and")
)
records = st.builds(
    PaperRecord,
    paper_id=st.text(alphabet=string.ascii_lowercase + string.digits, min_size=1, max_size=8),
    title=st.text(alphabet=string.ascii_letters + " -:", min_size=1, max_size=30).filter(lambda s: s.strip() == s),
    year=st.integers(1965, 2020),
    venue_kind=st.sampled_from(["conference", "journal"]),
    authors=st.lists(names.map(lambda s: " ".join(s.split())), min_size=1, max_size=4).map(tuple),
    page_count=st.integers(0, 40),
)


@given(records)
def test_format_parse_roundtrip(rec):
    (back,) = parse_bibliography(format_entry(rec).encode())
    assert back == rec


@given(st.lists(records, max_size=6))
def test_row_count_conservation(recs):
    rows = expand_author_rows(recs)
    expected = sum(len({normalize_author(a) for a in r.authors}) for r in recs)
    assert len(rows) == expected


@given(st.text(alphabet=string.ascii_lowercase + " ", min_size=1, max_size=80))
def test_fog_monotone_in_complex_words(text):
    text = text.replace(".", "")
    assert gunning_fog(text + " beautiful") >= gunning_fog(text) - 1e-12

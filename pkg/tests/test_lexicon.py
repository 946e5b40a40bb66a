import csv

import pytest
from hypothesis import given
from hypothesis import strategies as st

from pubcausal.corpus import PaperRecord
from pubcausal.lexicon import (
    CANONICAL_ENTITIES,
    EntityLexicon,
    LexiconError,
    coverage_by_year,
    find_matches,
    load_lexicon,
    match_corpus,
    match_entities,
    read_mentions_csv,
    select_longest,
    write_mentions_csv,
)


@pytest.fixture(scope="module")
def lexicon():
    return load_lexicon()


def _write_lexicon(path, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["entity_id", "pattern"])
        w.writerows(rows)
    return path


def test_default_lexicon_shape(lexicon):
    assert len(CANONICAL_ENTITIES) == 50
    assert lexicon.entity_ids == CANONICAL_ENTITIES
    assert all(len(lexicon.entries[e]) >= 1 for e in CANONICAL_ENTITIES)
    assert all(p for ps in lexicon.entries.values() for p in ps)


def test_unknown_id_rejected(tmp_path):
    rows = [(e, e) for e in CANONICAL_ENTITIES] + [("lstms", "lstms")]
    with pytest.raises(LexiconError, match="unknown entity_id"):
        load_lexicon(_write_lexicon(tmp_path / "lex.csv", rows))


def test_missing_id_rejected(tmp_path):
    rows = [(e, e) for e in CANONICAL_ENTITIES if e != "causal"]
    with pytest.raises(LexiconError, match="missing canonical id"):
        load_lexicon(_write_lexicon(tmp_path / "lex.csv", rows))


def test_longest_match_suppresses_inner(lexicon):
    got = match_entities("we use a bidirectional lstm encoder", lexicon).entities
    assert got == {"bidirectional lstm"}
    got = match_entities("an lstm and a bidirectional lstm", lexicon).entities
    assert got == {"lstm", "bidirectional lstm"}
    assert match_entities("", lexicon).entities == frozenset()


def test_variants_and_word_boundaries(lexicon):
    assert match_entities("A BiLSTM tagger", lexicon).entities == {"bidirectional lstm"}
    assert "lstm" not in match_entities("lstmx units", lexicon).entities


def brute_force(text, lexicon):
    """Scan every position for every pattern, then keep longest non-overlapping spans."""
    low = text.lower()
    spans = []
    for ent, pats in lexicon.entries.items():
        for p in pats:
            for i in range(len(low) - len(p) + 1):
                if low[i:i + len(p)] != p:
                    continue
                before = low[i - 1] if i else " "
                after = low[i + len(p)] if i + len(p) < len(low) else " "
                if not (before.isalnum() and before.isascii()) and not (after.isalnum() and after.isascii()):
                    spans.append((i, i + len(p), ent))
    spans.sort(key=lambda s: (-(s[1] - s[0]), s[0], s[2]))
    kept = []
    for s in spans:
        if all(s[1] <= k[0] or s[0] >= k[1] for k in kept):
            kept.append(s)
    return {k[2] for k in kept}


WORDS = ["lstm", "bidirectional", "bilstm", "attention", "the", "a", "transformers", "word2vec", "bert", "and", "model"]


@given(st.lists(st.sampled_from(WORDS), max_size=15))
def test_matches_brute_force(lexicon, words):
    text = " ".join(words)
    assert match_entities(text, lexicon).entities == brute_force(text, lexicon)


@given(st.lists(st.sampled_from(WORDS), max_size=15))
def test_surviving_spans_disjoint(lexicon, words):
    spans = select_longest(find_matches(" ".join(words), lexicon))
    for (s1, e1, _), (s2, e2, _) in zip(spans, spans[1:]):
        assert e1 <= s2


def test_adding_pattern_monotone_without_overlap():
    lex = EntityLexicon({"lstm": frozenset({"lstm"}), "attention": frozenset({"attention"})})
    text = "an lstm with attention"
    before = match_entities(text, lex).entities
    after = match_entities(text, lex.with_pattern("causal", "with")).entities
    assert before <= after and after == before | {"causal"}


def test_adding_pattern_can_suppress_on_overlap():
    lex = EntityLexicon({"lstm": frozenset({"lstm"})})
    text = "a bidirectional lstm"
    assert match_entities(text, lex).entities == {"lstm"}
    assert match_entities(text, lex.with_pattern("bidirectional lstm", "bidirectional lstm")).entities == {
        "bidirectional lstm"
    }


def _papers(year, n, n_hit):
    return [
        PaperRecord(f"p{year}-{i}", "t", year, "conference", ("a",), 1, "an lstm" if i < n_hit else "plain words")
        for i in range(n)
    ]


def test_coverage_by_year(lexicon):
    papers = _papers(2019, 4, 2) + [PaperRecord("nt", "t", 2019, "journal", ("b",))]
    cov = coverage_by_year(match_corpus(papers, lexicon), papers)
    assert cov == [(2019, 50.0)]
    papers = _papers(2018, 3, 0) + _papers(2019, 2, 0)
    assert coverage_by_year(match_corpus(papers, lexicon), papers) == [(2018, 0.0), (2019, 0.0)]
    # year without full text is omitted
    assert coverage_by_year({}, [PaperRecord("x", "t", 2010, "journal", ("a",))]) == []


def test_coverage_synthetic_target(lexicon):
    papers = _papers(2019, 82, 39)
    ((year, pct),) = coverage_by_year(match_corpus(papers, lexicon), papers)
    assert year == 2019
    assert pct == pytest.approx(47.56, abs=0.01)


@given(st.lists(st.tuples(st.integers(2014, 2016), st.booleans()), min_size=1, max_size=30))
def test_coverage_bounds(lexicon, spec):
    papers = [
        PaperRecord(f"p{i}", "t", y, "conference", ("a",), 1, "an lstm" if hit else "none here")
        for i, (y, hit) in enumerate(spec)
    ]
    for _, pct in coverage_by_year(match_corpus(papers, lexicon), papers):
        assert 0.0 <= pct <= 100.0


def test_mentions_csv_sorted(tmp_path, lexicon):
    papers = [PaperRecord(pid, "t", 2015, "conference", ("a",), 1, txt)
              for pid, txt in [("b", "attention and lstm"), ("a", "transformers")]]
    ms = match_corpus(papers, lexicon)
    path = tmp_path / "m.csv"
    write_mentions_csv(ms, path)
    assert path.read_text().splitlines() == [
        "paper_id,entity_id", "a,transformers", "b,attention", "b,lstm",
    ]
    assert read_mentions_csv(path) == ms

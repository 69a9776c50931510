from hypothesis import given
from hypothesis import strategies as st

from varfuse.text import STOPWORDS, normalize, stem


def test_examples():
    assert normalize("The Cats") == ["cat"]
    assert normalize("") == []
    # suffix-s only: "farming" keeps its -ing
    assert normalize("oyster farming, oysters") == ["oyster", "farming", "oyster"]


def test_short_tokens_keep_their_s():
    assert stem("gas") == "gas"
    assert stem("bus") == "bus"
    assert stem("buses") == "buse"


def test_splits_on_punctuation_and_underscore():
    assert normalize("solar-panel_cost/2020") == ["solar", "panel", "cost", "2020"]


def test_stopwords_removed():
    assert normalize(" ".join(sorted(STOPWORDS))) == []


@given(st.text())
def test_output_is_clean(text):
    for term in normalize(text):
        assert term
        assert term == term.lower()
        assert term not in STOPWORDS
        assert all(ch.isalnum() for ch in term)


@given(st.text())
def test_idempotent_on_joined_output(text):
    # stemming can expose a new trailing s ("bosss" -> "boss"), so compare
    # the term count and the stopword-free property rather than exact output
    once = normalize(text)
    assert len(normalize(" ".join(once))) == len(once)

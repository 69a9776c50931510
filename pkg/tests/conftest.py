import random

import pytest

from varfuse import build_index
from varfuse.index import build_index_from_terms

ACCEPTANCE = []


def record(number, name, passed, detail=""):
    ACCEPTANCE.append((number, name, passed, detail))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, name, passed, detail in sorted(ACCEPTANCE):
        mark = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{mark}] {number:>2}. {name}  {detail}")


TOY = [
    ("d1", "the cat sat on the mat"),
    ("d2", "the dog chased the cat"),
    ("d3", "dogs and cats and mats"),
]


@pytest.fixture
def toy_index():
    return build_index(TOY)


def random_corpus(rng: random.Random, n_docs: int, vocab_size: int, max_len: int = 40):
    """Skewed random documents over ``w0..w{vocab_size-1}``."""
    vocab = [f"w{i}" for i in range(vocab_size)]
    docs = []
    for _ in range(n_docs):
        cut = rng.randint(1, vocab_size)
        docs.append([rng.choice(vocab[:cut]) for _ in range(rng.randint(0, max_len))])
    return vocab, docs


def index_of(docs, block_size=8):
    return build_index_from_terms(((f"d{i}", d) for i, d in enumerate(docs)), block_size=block_size)

import pytest

from varfuse import DataError, build_index
from varfuse.formats import (
    assignment_lines,
    join_lines,
    read_assignments,
    read_clusters,
    read_qrels,
    read_queries,
    read_run,
    run_lines,
    run_to_ranked,
    write_atomic,
)
from varfuse.traversal import RankedList


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


def test_run_roundtrip(tmp_path):
    index = build_index([("alpha", "x"), ("beta", "x y")])
    ranked = RankedList.from_scores({0: 1.25, 1: 2.5})
    lines = run_lines("t1", ranked, index, "tag")
    assert lines == ["t1 Q0 beta 1 2.500000 tag", "t1 Q0 alpha 2 1.250000 tag"]
    path = write(tmp_path, "r.run", join_lines(lines))
    parsed = read_run(path)
    assert parsed == {"t1": [("beta", 2.5), ("alpha", 1.25)]}
    assert run_to_ranked(parsed["t1"], index) == ranked


def test_read_run_sorts_by_rank_and_rejects_duplicates(tmp_path):
    p = write(tmp_path, "r.run", "t Q0 b 2 1.0 x\nt Q0 a 1 2.0 x\n")
    assert read_run(p)["t"] == [("a", 2.0), ("b", 1.0)]
    p = write(tmp_path, "d.run", "t Q0 a 1 2.0 x\nt Q0 a 2 1.0 x\n")
    with pytest.raises(DataError, match="twice"):
        read_run(p)
    p = write(tmp_path, "bad.run", "t Q0 a 1\n")
    with pytest.raises(DataError, match="6 columns"):
        read_run(p)


def test_qrels(tmp_path):
    p = write(tmp_path, "q.txt", "# comment\nt 0 a 2\nt 0 b 0\n\nu 0 a -1\n")
    assert read_qrels(p) == {"t": {"a": 2, "b": 0}, "u": {"a": 0}}
    with pytest.raises(DataError):
        read_qrels(write(tmp_path, "bad.txt", "t 0 a high\n"))


def test_clusters_keep_duplicates(tmp_path):
    p = write(tmp_path, "c.tsv", "oyster\toyster farming\noyster\tOyster farming\ncat\tcats\n")
    clusters = read_clusters(p)
    assert list(clusters) == ["oyster", "cat"]
    assert clusters["oyster"].variations == (("oyster", "farming"), ("oyster", "farming"))


def test_queries_unique_ids(tmp_path):
    assert read_queries(write(tmp_path, "q.tsv", "q1\tThe cats\n")) == {"q1": ["cat"]}
    with pytest.raises(DataError, match="duplicate"):
        read_queries(write(tmp_path, "d.tsv", "q1\ta\nq1\tb\n"))
    with pytest.raises(DataError, match="TAB"):
        read_queries(write(tmp_path, "n.tsv", "q1 no tab\n"))


def test_assignments_roundtrip(tmp_path):
    a = {"q1": "c1", "q2": "c9"}
    p = write(tmp_path, "a.tsv", join_lines(assignment_lines(a)))
    assert read_assignments(p) == a


def test_missing_file():
    with pytest.raises(DataError, match="not found"):
        read_qrels("/nonexistent/qrels")


def test_write_atomic(tmp_path):
    target = tmp_path / "sub" / "out.txt"
    write_atomic(target, "hello\n")
    assert target.read_text() == "hello\n"
    assert [p.name for p in target.parent.iterdir()] == ["out.txt"]
    assert join_lines([]) == ""

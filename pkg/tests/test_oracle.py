"""Verifier verdicts against exhaustive enumeration in 8-bit mode."""

from rbrefine.pipeline import UNSAFE


def _disagreements(rows):
    return [(label, v, o) for label, v, o, _, _ in rows if v != o]


def test_corpus_is_large_enough(bv8_rows):
    assert len(bv8_rows) >= 20


def test_corpus_has_both_verdicts(bv8_rows):
    verdicts = {o for _, _, o, _, _ in bv8_rows}
    assert verdicts == {"SAFE", "UNSAFE"}


def test_bv8_corpus_matches_enumeration(bv8_rows):
    assert _disagreements(bv8_rows) == []


def test_bv8_counterexamples_replay(bv8_rows):
    assert [label for label, v, _, rep, _ in bv8_rows if v == UNSAFE and rep is not True] == []


def test_include_literals_match_enumeration(include_rows):
    assert _disagreements(include_rows) == []
    assert {o for _, _, o, _, _ in include_rows} == {"SAFE", "UNSAFE"}


def test_include_counterexamples_replay(include_rows):
    assert all(rep is True for _, v, _, rep, _ in include_rows if v == UNSAFE)

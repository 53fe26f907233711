"""Unit tests for answer normalization."""

import pytest

from city3dqa.services.text import normalize_answer


@pytest.mark.parametrize(
    ("raw", "expected"),
    [
        ("  The   Bank ", "bank"),
        ("the the bank", "bank"),
        ("An apple", "apple"),
        ("Three", "3"),
        ("zero", "0"),
        ("twenty", "20"),
        ("twenty-one", "twenty-one"),
        ("theater", "theater"),
        ("Front-Right", "front-right"),
        ("", ""),
    ],
)
def test_normalize_answer(raw, expected):
    """Validate case, whitespace, articles and number words."""
    assert normalize_answer(raw) == expected


@pytest.mark.parametrize("raw", ["The Bank", "two", "the restaurant: have dinner", " A  b "])
def test_normalize_answer_is_idempotent(raw):
    """Validate normalizing twice changes nothing."""
    once = normalize_answer(raw)
    assert normalize_answer(once) == once

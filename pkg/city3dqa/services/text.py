"""Answer normalization shared by the dataset builder and the evaluation harness."""

import re

NUMBER_WORDS = {
    word: str(value)
    for value, word in enumerate(
        "zero one two three four five six seven eight nine ten eleven twelve thirteen fourteen "
        "fifteen sixteen seventeen eighteen nineteen twenty".split()
    )
}

_WHITESPACE = re.compile(r"\s+")
_LEADING_ARTICLE = re.compile(r"^(?:a|an|the) ")


def normalize_answer(s: str) -> str:
    """Canonical form used to compare answers.

    Trims and collapses whitespace, lowercases, strips leading articles and
    turns the number words zero to twenty into numerals. Idempotent.

    Args:
        s (str): Raw answer.

    Returns:
        str: Normalized answer.
    """
    s = _WHITESPACE.sub(" ", s.strip()).lower()
    while m := _LEADING_ARTICLE.match(s):
        s = s[m.end():]
    return " ".join(NUMBER_WORDS.get(token, token) for token in s.split(" ")) if s else s

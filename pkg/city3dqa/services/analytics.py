"""Dataset statistics: category and hop mix, question lengths, and optional HTML charts."""

from collections.abc import Iterable
from pathlib import Path

import pandas as pd
import plotly.express as px
from pydantic import BaseModel, ConfigDict

from .dataset import QaPair

# ----------------------------
# Types
# ----------------------------


class Share(BaseModel):
    """Count and fraction of one group."""

    model_config = ConfigDict(frozen=True)

    count: int
    fraction: float


class DatasetStats(BaseModel):
    """Distribution summary of a QA dataset."""

    model_config = ConfigDict(frozen=True)

    total: int
    by_category: dict[str, Share]
    by_hops: dict[str, Share]
    by_city: dict[str, Share]
    by_answer_kind: dict[str, Share]
    question_length: dict[int, int]  # words -> questions
    question_length_min: int
    question_length_max: int
    question_length_mean: float
    paraphrased: int


# ----------------------------
# Aggregation
# ----------------------------


def pairs_frame(pairs: Iterable[QaPair]) -> pd.DataFrame:
    """One row per pair with the columns used for statistics."""
    rows = [
        {
            "qid": p.qid,
            "city": p.city,
            "category": p.category.value,
            "hops": p.hops.value,
            "answer_kind": p.answer.kind.value,
            "words": len(p.question.split()),
            "paraphrased": p.paraphrased,
        }
        for p in pairs
    ]
    return pd.DataFrame(rows, columns=["qid", "city", "category", "hops", "answer_kind", "words", "paraphrased"])


def _shares(df: pd.DataFrame, column: str) -> dict[str, Share]:
    counts = df[column].value_counts().sort_index()
    total = len(df)
    return {str(k): Share(count=int(n), fraction=float(n) / total) for k, n in counts.items()}


def summarize(pairs: Iterable[QaPair]) -> DatasetStats:
    """Summarize a dataset's category, hop, city and length distributions."""
    df = pairs_frame(pairs)
    if df.empty:
        return DatasetStats(
            total=0,
            by_category={},
            by_hops={},
            by_city={},
            by_answer_kind={},
            question_length={},
            question_length_min=0,
            question_length_max=0,
            question_length_mean=0.0,
            paraphrased=0,
        )
    lengths = df["words"].value_counts().sort_index()
    return DatasetStats(
        total=len(df),
        by_category=_shares(df, "category"),
        by_hops=_shares(df, "hops"),
        by_city=_shares(df, "city"),
        by_answer_kind=_shares(df, "answer_kind"),
        question_length={int(k): int(n) for k, n in lengths.items()},
        question_length_min=int(df["words"].min()),
        question_length_max=int(df["words"].max()),
        question_length_mean=float(df["words"].mean()),
        paraphrased=int(df["paraphrased"].sum()),
    )


def write_stats(stats: DatasetStats, sink) -> None:
    """Write statistics as indented JSON."""
    sink.write(stats.model_dump_json(indent=2))
    sink.write("\n")


# ----------------------------
# Charts
# ----------------------------


def _share_bar(shares: dict[str, Share], label: str, title: str):
    data = pd.DataFrame({label: list(shares), "questions": [s.count for s in shares.values()]})
    if data.empty:
        return px.bar(pd.DataFrame({label: [], "questions": []}), x=label, y="questions", title="No data")
    return px.bar(data, x=label, y="questions", title=title)


def make_charts(stats: DatasetStats) -> list:
    """Bar charts of the category mix, hop mix and question lengths."""
    lengths = pd.DataFrame(
        {"words": list(stats.question_length), "questions": list(stats.question_length.values())}
    )
    return [
        _share_bar(stats.by_category, "category", "Questions by category"),
        _share_bar(stats.by_hops, "hops", "Questions by hop class"),
        px.bar(lengths, x="words", y="questions", title="Question length (words)"),
    ]


def write_charts_html(stats: DatasetStats, path: str | Path) -> None:
    """Write all charts into one standalone HTML page."""
    figures = make_charts(stats)
    parts = [
        fig.to_html(full_html=False, include_plotlyjs="cdn" if n == 0 else False) for n, fig in enumerate(figures)
    ]
    with open(path, "w", encoding="utf-8") as f:
        f.write("<html><head><meta charset='utf-8'><title>Dataset statistics</title></head><body>\n")
        f.write("\n".join(parts))
        f.write("\n</body></html>\n")

"""Retrieval-augmented QA pipeline: segmentation, ranking, KG calls and CRAG scoring."""

from ._marags import (
    Hermetic,
    MaragsError,
    crag_score,
    fuse_mean_rank,
    is_miss_answer,
    mean_rank_order,
    metrics_from_counts,
    normalize_answer,
    parse_call,
    ranks_from_scores,
    render_call,
    render_catalog,
    run_pipeline,
    segment_html,
    split_oversize_text,
    tfidf_scores,
    tokenize,
)


def run(**options):
    """Keyword wrapper around run_pipeline, e.g. run(input=..., ranker="tfidf")."""
    return run_pipeline(options)


def error_kind(exc):
    """Kind name ("BadLiteral", ...) carried by a MaragsError."""
    return exc.args[0] if exc.args else None

"""Batched PUCT Monte Carlo tree search."""

from goformer.search.mcts import (
    Evaluator,
    NetworkEvaluator,
    Node,
    ScoreEvaluator,
    SearchConfig,
    Searcher,
    SearchResult,
    UniformEvaluator,
    backup,
    check_tree,
    expand,
    grow,
    new_root,
    puct_scores,
    run_search,
    select_child,
    select_leaf,
)

__all__ = [
    "Evaluator",
    "NetworkEvaluator",
    "Node",
    "ScoreEvaluator",
    "SearchConfig",
    "SearchResult",
    "Searcher",
    "UniformEvaluator",
    "backup",
    "check_tree",
    "expand",
    "grow",
    "new_root",
    "puct_scores",
    "run_search",
    "select_child",
    "select_leaf",
]

import numpy as np
import pytest

from goformer.features import Position
from goformer.goboard import PASS, Color, GameState, Move
from goformer.models import build_network
from goformer.search import (
    NetworkEvaluator,
    Node,
    ScoreEvaluator,
    SearchConfig,
    Searcher,
    UniformEvaluator,
    backup,
    check_tree,
    expand,
    grow,
    new_root,
    run_search,
    select_child,
    select_leaf,
)

from oracles import alphabeta_winning_moves

# Black to move; each has exactly one winning move, a capture, confirmed by
# alpha-beta at depths 5 and 7. Generated from random 5x5 play with seed 1.
WINNING_CAPTURES = [
    ("XOXXX\n.OXO.\nOOX.X\nOOXXX\nOOOOX", 0.5, (1, 0)),
    ("O.OX.\nOOX.X\nXOXOX\nXXO.X\n.O.OX", 4.5, (0, 1)),
    ("XO.OO\nXXOOO\nXOXXO\n.OXO.\nXXXOX", 6.5, (3, 0)),
    (".O.XO\nXOOO.\nXO.OX\nO.OXX\nOXX.X", 0.5, (3, 1)),
    ("XX.O.\nXXXOX\nXOOXX\nOOXX.\nX.XOO", 6.5, (4, 1)),
    ("XXOO.\nXXOOO\nXXXOO\n.XO.O\n.XXO.", 4.5, (3, 3)),
    ("XXXXO\nOOOXO\nOO.X.\nO.OXX\nOOOXX", 0.5, (2, 4)),
    ("OOOOO\nXOXXX\nXO.OO\nXXX..\nXO.X.", 6.5, (2, 2)),
    ("O.OOO\nOOOOO\nOXOXX\nXXXXX\nXX.X.", 2.5, (0, 1)),
    (".OOO.\nXOOXX\nXXXOO\nX.XO.\nXXXOO", 4.5, (3, 4)),
    (".XOOO\nX..OO\nXOOX.\nXO.OX\n.XOXX", 4.5, (3, 2)),
    ("OOOOO\nO.OOX\nOOOOX\nXXXXX\nXX..X", 4.5, (1, 1)),
]


def position(diagram, komi):
    return GameState.from_diagram(diagram, Color.BLACK, komi)


class Counting:
    """Flat evaluator that records every batch it is handed."""

    def __init__(self, value=0.5):
        self.batches = []
        self.value = value

    def evaluate(self, positions):
        self.batches.append(len(positions))
        n = len(positions)
        return np.zeros((n, 361), np.float32), np.full(n, self.value, np.float32)


def test_expand_priors_sum_to_one_with_small_pass():
    state = GameState.new(5)
    root = new_root(state)
    logits = np.zeros(361)
    logits[0] = 3.0  # grid index 0 is board point (0,0)
    expand(root, logits, 1e-3)
    assert len(root.children) == 26
    total = sum(c.P for c in root.children.values())
    assert total == pytest.approx(1.0, abs=1e-12)
    assert root.children[25].move == PASS
    assert root.children[25].P == pytest.approx(1e-3 / 1.001)
    assert root.children[0].P > root.children[1].P
    # board points map through the 19x19 grid, not the 5x5 layout
    logits2 = np.zeros(361)
    logits2[19] = 5.0  # grid (1,0)
    other = new_root(state)
    expand(other, logits2, 1e-3)
    assert max(other.children.items(), key=lambda kv: kv[1].P)[0] == 5


def test_select_child_breaks_ties_on_smallest_key():
    root = Node(None, 1.0, GameState.new(5))
    root.expanded = True
    for key in (7, 3, 9):
        root.children[key] = Node(Move.from_index(key, 5), 1 / 3)
    assert select_child(root, 1.25) == 3


def test_virtual_loss_counts_as_lost_visit():
    root = Node(None, 1.0, GameState.new(5))
    root.expanded = True
    root.N = 2
    a = root.children[0] = Node(Move.from_index(0, 5), 0.5)
    b = root.children[1] = Node(Move.from_index(1, 5), 0.5)
    a.N, a.W = 1, 0.6
    b.N, b.W = 1, 0.5
    assert select_child(root, 1.0) == 0
    a.virtual_loss = 1
    root.virtual_loss = 1
    assert select_child(root, 1.0) == 1


def test_backup_stores_mover_perspective():
    s0 = GameState.new(5)
    root = new_root(s0)
    expand(root, np.zeros(361), 1e-3)
    child = root.children[6]
    child.materialize(root)
    backup([root, child], 0.8)  # White wins with probability 0.8
    # the child was entered by a Black move, so it holds Black's 0.2
    assert child.W == pytest.approx(0.2)
    assert root.W == pytest.approx(0.8)
    assert root.N == child.N == 1


def test_select_leaf_descends_to_unexpanded():
    root = new_root(GameState.new(5))
    path, leaf = select_leaf(root, 1.25)
    assert path == [root] and leaf is root
    expand(root, np.zeros(361), 1e-3)
    root.N = 1
    path, leaf = select_leaf(root, 1.25)
    assert len(path) == 2 and leaf.state is not None and not leaf.expanded


@pytest.mark.parametrize("batch", [1, 3, 8, 16])
def test_grow_spends_exact_playouts_and_cleans_up(batch):
    ev = Counting()
    root = new_root(GameState.new(5))
    done = grow(root, ev, SearchConfig(playouts=97, eval_batch=batch))
    assert done == 97 == root.N
    assert max(ev.batches) <= batch
    check_tree(root)


def test_time_budget_stops():
    cfg = SearchConfig(playouts=None, seconds=0.05)
    result = run_search(GameState.new(5), UniformEvaluator(), cfg)
    assert result.playouts > 0
    check_tree(result.root)


def test_visit_distribution_sums_to_one():
    result = run_search(GameState.new(5), UniformEvaluator(), SearchConfig(playouts=64))
    assert sum(result.visits.values()) == 63
    assert sum(result.distribution.values()) == pytest.approx(1.0)
    assert result.move == max(result.visits, key=lambda m: result.visits[m])


def test_search_is_deterministic_for_a_seed():
    state = GameState.new(7)
    cfg = SearchConfig(playouts=60, random_plies=4, seed=5)
    a = run_search(state, UniformEvaluator(), cfg)
    b = run_search(state, UniformEvaluator(), cfg)
    assert a.move == b.move and a.visits == b.visits


def test_random_plies_sample_then_stop():
    state = GameState.new(5)
    moves = {run_search(state, UniformEvaluator(), SearchConfig(playouts=40, random_plies=2, seed=s)).move for s in range(12)}
    assert len(moves) > 1
    late = state.play(Move.play(0, 0)).play(Move.play(4, 4)).play(Move.play(2, 2))
    moves = {run_search(late, UniformEvaluator(), SearchConfig(playouts=40, random_plies=2, seed=s)).move for s in range(5)}
    assert len(moves) == 1


def test_cannot_search_finished_game():
    over = GameState.new(5).play(PASS).play(PASS)
    with pytest.raises(ValueError):
        run_search(over, UniformEvaluator(), SearchConfig(playouts=8))


def test_config_validation():
    with pytest.raises(ValueError):
        SearchConfig(playouts=None, seconds=None)
    with pytest.raises(ValueError):
        SearchConfig(c_puct=0)
    with pytest.raises(ValueError):
        SearchConfig(playouts=0)


def test_tree_reuse_keeps_subtree():
    searcher = Searcher(UniformEvaluator(), SearchConfig(playouts=200))
    state = GameState.new(5)
    first = searcher.search(state)
    child = first.root.children[first.move.index(5)]
    kept = child.N
    searcher.advance(first.move)
    assert searcher.root is child
    nxt = state.play(first.move)
    second = searcher.search(nxt, (state, None))
    assert second.root is child
    assert second.root.N == kept + 200
    check_tree(second.root)


def test_tree_reuse_off_starts_fresh():
    searcher = Searcher(UniformEvaluator(), SearchConfig(playouts=50, tree_reuse=False))
    state = GameState.new(5)
    first = searcher.search(state)
    searcher.advance(first.move)
    assert searcher.root is None
    second = searcher.search(state.play(first.move))
    assert second.root.N == 50


def test_network_evaluator_shapes():
    net = build_network("res:1x4")
    state = GameState.new(9)
    logits, values = NetworkEvaluator(net).evaluate([Position(state), Position(state.play(Move.play(1, 1)))])
    assert logits.shape == (2, 361) and values.shape == (2,)
    result = run_search(state, net, SearchConfig(playouts=16))
    check_tree(result.root)


@pytest.mark.parametrize("diagram,komi,expected", WINNING_CAPTURES)
def test_finds_unique_winning_capture(diagram, komi, expected):
    state = position(diagram, komi)
    assert alphabeta_winning_moves(state, 5) == [Move.play(*expected)]
    result = run_search(state, ScoreEvaluator(), SearchConfig(playouts=2000))
    check_tree(result.root)
    assert result.move == Move.play(*expected)

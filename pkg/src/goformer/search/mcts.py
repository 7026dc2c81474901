"""Batched PUCT tree search with virtual loss.

Values handed to the tree are White's win probability. Each node stores W
from the perspective of the player who moved into it, so a parent simply
maximizes its children's Q.
"""

from __future__ import annotations

import math
import time
from functools import lru_cache
from dataclasses import dataclass, field
from typing import Protocol, Sequence

import numpy as np

from goformer.features import Position, board_to_grid_indices, encode_batch
from goformer.goboard import PASS, Analysis, Color, GameState, Move, chinese_score
from goformer.models.network import Network, predict


class Evaluator(Protocol):
    def evaluate(self, positions: Sequence[Position]) -> tuple[np.ndarray, np.ndarray]:
        """Return (B x 361 policy logits, B White-win probabilities)."""


class NetworkEvaluator:
    def __init__(self, net: Network):
        self.net = net

    def evaluate(self, positions):
        return predict(self.net, encode_batch(positions))


class UniformEvaluator:
    """Flat logits and an even value; the tree is driven by terminal scores only."""

    def evaluate(self, positions):
        n = len(positions)
        return np.zeros((n, 361), dtype=np.float32), np.full(n, 0.5, dtype=np.float32)


class ScoreEvaluator:
    """Flat logits; value is 1.0 when White leads the as-is area count, else 0.0."""

    def evaluate(self, positions):
        n = len(positions)
        values = np.array(
            [1.0 if chinese_score(p.state)[2] == Color.WHITE else 0.0 for p in positions], dtype=np.float32
        )
        return np.zeros((n, 361), dtype=np.float32), values


@dataclass(frozen=True)
class SearchConfig:
    c_puct: float = 1.25
    eval_batch: int = 8
    virtual_loss_weight: int = 1
    playouts: int | None = 800
    seconds: float | None = None
    random_plies: int = 0
    temperature: float = 1.0
    pass_prior: float = 1e-3
    tree_reuse: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.c_puct <= 0:
            raise ValueError("c_puct must be positive")
        if self.eval_batch < 1 or self.virtual_loss_weight < 1:
            raise ValueError("eval_batch and virtual_loss_weight must be >= 1")
        if self.playouts is None and self.seconds is None:
            raise ValueError("need a playout or time budget")
        if (self.playouts is not None and self.playouts < 1) or (self.seconds is not None and self.seconds <= 0):
            raise ValueError("budget must be positive")


class Node:
    __slots__ = ("state", "history", "move", "P", "N", "W", "virtual_loss", "children", "expanded", "terminal")

    def __init__(self, move: Move | None, prior: float, state: GameState | None = None, history=()):
        self.state = state
        self.history = history
        self.move = move
        self.P = prior
        self.N = 0
        self.W = 0.0
        self.virtual_loss = 0
        self.children: dict[int, Node] = {}
        self.expanded = False
        self.terminal = False

    @property
    def Q(self) -> float:
        return self.W / self.N if self.N else 0.0

    def materialize(self, parent: "Node") -> None:
        if self.state is None:
            self.state = parent.state.play(self.move)
            self.history = (parent.state, parent.history[0] if parent.history else None)
            self.terminal = self.state.game_over


@dataclass
class SearchResult:
    move: Move
    visits: dict[Move, int]
    distribution: dict[Move, float]
    root_value: float
    playouts: int
    root: Node = field(repr=False)


def _move_key(move: Move, size: int) -> int:
    return size * size if move.point is None else move.point.row * size + move.point.col


def puct_scores(node: Node, c_puct: float, vl_weight: int = 1) -> list[tuple[int, float]]:
    """(move index, score) for every child; virtual loss counts as lost visits."""
    sqrt_n = math.sqrt(node.N + node.virtual_loss * vl_weight)
    out = []
    for key, child in node.children.items():
        n = child.N + child.virtual_loss * vl_weight
        q = child.W / n if n else 0.0
        out.append((key, q + c_puct * child.P * sqrt_n / (1 + n)))
    return out


def select_child(node: Node, c_puct: float, vl_weight: int = 1) -> int:
    best_key, best = -1, -math.inf
    for key, score in puct_scores(node, c_puct, vl_weight):
        if score > best or (score == best and key < best_key):
            best_key, best = key, score
    return best_key


def select_leaf(root: Node, c_puct: float, vl_weight: int = 1) -> tuple[list[Node], Node]:
    """Descend from ``root`` to an unexpanded or terminal node.

    Returns the visited path (root first, leaf last) and the leaf.
    """
    path = [root]
    node = root
    while node.expanded and not node.terminal:
        child = node.children[select_child(node, c_puct, vl_weight)]
        child.materialize(node)
        path.append(child)
        node = child
    return path, node


def _apply_virtual_loss(path: list[Node], delta: int) -> None:
    for n in path:
        n.virtual_loss += delta


def backup(path: Sequence[Node], value: float) -> None:
    """Add one visit along ``path`` with ``value`` = P(White wins)."""
    for node in path:
        node.N += 1
        mover_is_white = node.state.to_play == Color.BLACK
        node.W += value if mover_is_white else 1.0 - value
        if node.virtual_loss:
            node.virtual_loss -= 1


@lru_cache(maxsize=None)
def _move_at(key: int, size: int) -> Move:
    return Move.from_index(key, size)


def expand(node: Node, logits: np.ndarray, pass_prior: float, analysis: Analysis | None = None) -> None:
    state = node.state
    size = state.size
    points = (analysis or Analysis(state)).legal_points()
    pass_key = size * size
    if points:
        z = logits[board_to_grid_indices(size)[points]].astype(np.float64)
        z = np.exp(z - z.max())
        z *= 1.0 / (z.sum() * (1.0 + pass_prior))
        priors = z.tolist()
        priors.append(pass_prior / (1.0 + pass_prior))
    else:
        priors = [1.0]
    children = node.children
    for key, prior in zip(points + [pass_key], priors):
        children[key] = Node(_move_at(key, size), prior)
    node.expanded = True


def terminal_value(state: GameState) -> float:
    return 1.0 if chinese_score(state)[2] == Color.WHITE else 0.0


def new_root(state: GameState, history=()) -> Node:
    if state.game_over:
        raise ValueError("cannot search a finished game")
    return Node(None, 1.0, state, tuple(history))


def _budget_left(cfg: SearchConfig, done: int, started: float) -> int:
    left = math.inf
    if cfg.playouts is not None:
        left = cfg.playouts - done
    if cfg.seconds is not None and time.perf_counter() - started >= cfg.seconds:
        left = 0
    return int(min(left, cfg.eval_batch))


def grow(root: Node, evaluator: Evaluator, cfg: SearchConfig) -> int:
    """Run playouts on ``root`` until the budget is spent; returns the count."""
    started = time.perf_counter()
    done = 0
    while True:
        want = _budget_left(cfg, done, started)
        if want <= 0:
            break
        pending: list[tuple[list[Node], Node, Analysis]] = []
        seen: set[int] = set()
        for _ in range(want):
            path, leaf = select_leaf(root, cfg.c_puct, cfg.virtual_loss_weight)
            if leaf.terminal:
                backup(path, terminal_value(leaf.state))
                done += 1
                continue
            if id(leaf) in seen:
                break
            seen.add(id(leaf))
            _apply_virtual_loss(path, 1)
            pending.append((path, leaf, Analysis(leaf.state)))
        if pending:
            logits, values = evaluator.evaluate([Position(l.state, l.history, an) for _, l, an in pending])
            for (path, leaf, an), lg, v in zip(pending, logits, values):
                expand(leaf, lg, cfg.pass_prior, an)
                backup(path, float(v))
            done += len(pending)
    return done


def _choose(root: Node, cfg: SearchConfig, rng: np.random.Generator) -> Node:
    children = [root.children[k] for k in sorted(root.children)]
    if root.state.move_number < cfg.random_plies:
        n = np.array([c.N for c in children], dtype=np.float64)
        if n.sum() > 0:
            w = n ** (1.0 / cfg.temperature)
            return children[int(rng.choice(len(children), p=w / w.sum()))]
    # most visits, then highest prior, then lowest move index
    return max(children, key=lambda c: (c.N, c.P))


def result_from(root: Node, chosen: Node, playouts: int) -> SearchResult:
    visits = {root.children[k].move: root.children[k].N for k in sorted(root.children)}
    total = sum(visits.values())
    if total:
        dist = {m: n / total for m, n in visits.items()}
    else:
        dist = {m: (1.0 if m == chosen.move else 0.0) for m in visits}
    return SearchResult(chosen.move, visits, dist, 1.0 - root.Q, playouts, root)


class Searcher:
    """Owns one tree and carries it between moves when ``tree_reuse`` is on."""

    def __init__(self, evaluator: Evaluator | Network, cfg: SearchConfig = SearchConfig()):
        self.evaluator = NetworkEvaluator(evaluator) if isinstance(evaluator, Network) else evaluator
        self.cfg = cfg
        self.rng = np.random.default_rng(cfg.seed)
        self.root: Node | None = None

    def _root_for(self, state: GameState, history) -> Node:
        root = self.root
        if self.cfg.tree_reuse and root is not None and root.state is not None:
            if root.state.hash == state.hash and root.state.board == state.board:
                return root
            for child in root.children.values():
                if child.state is not None and child.state.hash == state.hash and child.state.board == state.board:
                    child.move = None
                    child.P = 1.0
                    return child
        return new_root(state, history)

    def search(self, state: GameState, history=()) -> SearchResult:
        root = self._root_for(state, history)
        if not history and root.history:
            history = root.history
        if not root.expanded:
            root.history = tuple(history)
        done = grow(root, self.evaluator, self.cfg)
        chosen = _choose(root, self.cfg, self.rng)
        self.root = root
        return result_from(root, chosen, done)

    def advance(self, move: Move) -> None:
        """Promote the subtree under ``move`` after it is played."""
        if self.root is None or not self.cfg.tree_reuse:
            self.root = None
            return
        child = self.root.children.get(_move_key(move, self.root.state.size))
        if child is None or child.state is None or child.terminal:
            self.root = None
            return
        child.move = None
        child.P = 1.0
        self.root = child

    def reset(self) -> None:
        self.root = None


def run_search(
    state: GameState, evaluator: Evaluator | Network, cfg: SearchConfig = SearchConfig(), history=()
) -> SearchResult:
    """One fresh search from ``state``."""
    new_root(state)
    return Searcher(evaluator, cfg).search(state, history)


def check_tree(root: Node) -> None:
    """Raise AssertionError if visit conservation or virtual-loss cleanup fails anywhere."""
    stack = [root]
    while stack:
        node = stack.pop()
        assert node.virtual_loss == 0, "virtual loss left in tree"
        if node.expanded and not node.terminal:
            total = sum(c.N for c in node.children.values())
            assert node.N == total + 1, f"visit mismatch: {node.N} != {total} + 1"
            prior = sum(c.P for c in node.children.values())
            assert abs(prior - 1.0) < 1e-9, "child priors do not sum to 1"
        if node.N:
            assert -1e-12 <= node.Q <= 1 + 1e-12
        stack.extend(node.children.values())

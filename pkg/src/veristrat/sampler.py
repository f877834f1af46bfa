"""Local moves over raw verification trees.

Positions are sampled level-uniformly: each of the d levels carries total
weight 1/d, split evenly over its 2^level nodes, so a node at level l has
weight 1/(2^l * d).

Two moves drive the search. An exchange swaps the labels of two non-NA
positions and then repairs any per-path duplicates it introduced: the two
swapped positions are protected, and every duplicated occurrence outside the
protected set is rewritten to the other member of the swapped pair until no
path conflicts remain. A replacement relabels one position with an activity
that appears on none of the root-to-leaf paths through it (NA always
qualifies). Proposals mix the two at a fixed 80/20 rate, falling back to
replacement when a tree has fewer than two non-NA nodes to exchange.

Trees are kept in canonical form: the subtree below an NA node is entirely
NA. Writing NA into a position therefore prunes its subtree. Without this,
stranded labels below NA nodes keep blocking the replacement rule (they sit
on every path through their ancestors) and the chain wedges itself into
subspaces it cannot leave.
"""
from __future__ import annotations

import hashlib
import random
from enum import Enum
from typing import List, Optional, Sequence, Set, Tuple

from .scenario import VerificationState
from .treespace import RawTree, leaf_paths

EXCHANGE_PROBABILITY = 0.8


def derive_seed(seed: int, *parts) -> int:
    """Stable 64-bit stream seed from a base seed plus context labels."""
    digest = hashlib.blake2b(repr((seed,) + parts).encode("utf-8"), digest_size=8)
    return int.from_bytes(digest.digest(), "big")


class MoveKind(Enum):
    EXCHANGE = "exchange"
    REPLACEMENT = "replacement"


def node_weights(depth: int) -> List[float]:
    """Sampling weight per heap position; levels uniform, nodes uniform."""
    weights = []
    for level in range(depth):
        w = 1.0 / ((2 ** level) * depth)
        weights.extend([w] * (2 ** level))
    return weights


def sample_position(depth: int, rng: random.Random) -> int:
    """Draw a heap position according to node_weights without building them."""
    level = rng.randrange(depth)
    return 2 ** level - 1 + rng.randrange(2 ** level)


def _prune_dead(labels: List[Optional[str]]) -> None:
    """Force canonical form: clear every position whose parent is NA."""
    for pos in range(1, len(labels)):
        if labels[(pos - 1) // 2] is None:
            labels[pos] = None


def random_tree(origin: VerificationState, depth: int, rng: random.Random) -> RawTree:
    """Constructive level-by-level sampler over valid canonical labelings.

    Each live position draws uniformly from the activities its ancestors have
    not used plus NA, so every tree it returns is valid by construction.
    """
    universe = origin.unverified()
    size = 2 ** depth - 1
    labels: List[Optional[str]] = [None] * size
    for pos in range(size):
        if pos > 0 and labels[(pos - 1) // 2] is None:
            continue
        banned = set()
        anc = pos
        while anc > 0:
            anc = (anc - 1) // 2
            if labels[anc] is not None:
                banned.add(labels[anc])
        candidates: List[Optional[str]] = [a for a in universe if a not in banned]
        candidates.append(None)
        labels[pos] = candidates[rng.randrange(len(candidates))]
    return RawTree(origin, labels, universe)


def _paths_through(pos: int, size: int) -> List[List[int]]:
    return [path for path in leaf_paths(size) if pos in path]


def exchange_at(tree: RawTree, pos_a: int, pos_b: int) -> RawTree:
    """Swap two labels and repair the per-path uniqueness rule."""
    labels = list(tree.labels)
    size = len(labels)
    la, lb = labels[pos_a], labels[pos_b]
    labels[pos_a], labels[pos_b] = lb, la
    if la == lb:
        return RawTree(tree.origin, labels, tree.universe)

    pair = (la, lb)
    other = {la: lb, lb: la}
    protected: Set[int] = {pos_a, pos_b}
    paths = list(leaf_paths(size))
    for _ in range(4 * size):
        dirty = False
        for path in paths:
            for member in pair:
                hits = [p for p in path if labels[p] == member]
                if len(hits) < 2:
                    continue
                open_hits = [p for p in hits if p not in protected]
                # the swap endpoints stay fixed; rewrite the deepest open copy
                target = max(open_hits) if open_hits else max(hits)
                labels[target] = other[member]
                protected.add(target)
                dirty = True
        if not dirty:
            return RawTree(tree.origin, labels, tree.universe)
    # unreachable in practice: clear any residue with NA, which cannot clash
    for path in paths:
        seen: Set[str] = set()
        for p in path:
            lab = labels[p]
            if lab is None:
                continue
            if lab in seen:
                labels[p] = None
            else:
                seen.add(lab)
    _prune_dead(labels)
    return RawTree(tree.origin, labels, tree.universe)


def exchange_move(tree: RawTree, rng: random.Random) -> RawTree:
    """Swap two weighted-sampled non-NA positions (resampling NA draws)."""
    depth = tree.depth
    labels = tree.labels
    if sum(1 for lab in labels if lab is not None) < 2:
        return replacement_move(tree, rng)
    while True:
        pos_a = sample_position(depth, rng)
        if labels[pos_a] is not None:
            break
    while True:
        pos_b = sample_position(depth, rng)
        if pos_b != pos_a and labels[pos_b] is not None:
            break
    return exchange_at(tree, pos_a, pos_b)


def replacement_candidates(tree: RawTree, pos: int) -> List[Optional[str]]:
    """Activities absent from every path through pos, then NA, in scope order."""
    size = len(tree.labels)
    on_paths: Set[str] = set()
    for path in _paths_through(pos, size):
        for p in path:
            lab = tree.labels[p]
            if lab is not None:
                on_paths.add(lab)
    out: List[Optional[str]] = [a for a in tree.universe if a not in on_paths]
    out.append(None)
    return out


def replace_at(tree: RawTree, pos: int, label: Optional[str]) -> RawTree:
    labels = list(tree.labels)
    labels[pos] = label
    if label is None:
        _prune_dead(labels)
    return RawTree(tree.origin, labels, tree.universe)


def replacement_move(tree: RawTree, rng: random.Random) -> RawTree:
    """Relabel one weighted-sampled position from its admissible candidates."""
    pos = sample_position(tree.depth, rng)
    candidates = replacement_candidates(tree, pos)
    if not candidates:
        return tree
    return replace_at(tree, pos, candidates[rng.randrange(len(candidates))])


def _propose_impl(tree: RawTree, rng: random.Random,
                  exchange_probability: float = EXCHANGE_PROBABILITY) -> Tuple[RawTree, MoveKind]:
    kind = MoveKind.EXCHANGE if rng.random() < exchange_probability else MoveKind.REPLACEMENT
    if kind is MoveKind.EXCHANGE:
        non_na = sum(1 for lab in tree.labels if lab is not None)
        if non_na >= 2:
            return exchange_move(tree, rng), MoveKind.EXCHANGE
        kind = MoveKind.REPLACEMENT  # nothing to swap; keep the chain moving
    return replacement_move(tree, rng), MoveKind.REPLACEMENT


def propose(tree: RawTree, rng: random.Random,
            exchange_probability: float = EXCHANGE_PROBABILITY) -> RawTree:
    """One candidate tree drawn from the move mixture."""
    return _propose_impl(tree, rng, exchange_probability)[0]

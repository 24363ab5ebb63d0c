"""Backward kernel on unranked planar trees.

Removing the last split of a ranked planar tree turns a cherry back into a
leaf.  Conditioned on its planar shape, every ranking of a tree is equally
likely (the ranked planar probability does not depend on the ranking), and
each ranking of the smaller tree extends in exactly one way.  The backward
probability of going from ``t_{n+1}`` to a compatible ``t_n`` is therefore
``#t_n / #t_{n+1}`` with ``#`` the number of rankings.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

from .numerics import DomainError, log_sum
from .oracle import ENUMERATION_CAP, encode, enumerate_planar_shapes, enumerate_ranked_planar
from .probability import UnsupportedScaleError, log_prob_planar, log_prob_ranked_planar
from .trees import (
    Leaf,
    Node,
    PlanarShape,
    RankedPlanarTree,
    Tree,
    catalan_coefficient,
    fold,
    forget_ranks,
    postorder,
)

__all__ = [
    "REVERSAL_CAP",
    "CherryRemoval",
    "cherry_positions",
    "remove_cherry",
    "predecessors",
    "remove_last_split",
    "compatible",
    "cherry_removal",
    "reverse_kernel",
    "conditional_kernel",
    "kernel_row_sums",
    "verify_reversal",
]

REVERSAL_CAP = ENUMERATION_CAP - 1


@dataclass(frozen=True)
class CherryRemoval:
    parent: PlanarShape
    child: PlanarShape
    compatible: bool


def _collapse(root: Tree, target: int) -> Tree:
    # positions are postorder indices, so shared subtree objects are fine
    pos = itertools.count()

    def leaf(x: Leaf) -> Tree:
        next(pos)
        return x

    def node(x: Node, a: Tree, b: Tree) -> Tree:
        return Leaf() if next(pos) == target else Node(a, b, x.rank)

    return fold(root, leaf, node)


def cherry_positions(root: Tree) -> list[int]:
    """Postorder indices of the cherries."""
    return [i for i, x in enumerate(postorder(root)) if not x.is_leaf and x.n_internal == 1]


def remove_cherry(t: PlanarShape, position: int) -> PlanarShape:
    """Collapse the cherry at postorder index ``position`` into a leaf."""
    if position not in cherry_positions(t.root):
        raise DomainError(f"no cherry at postorder position {position}")
    return PlanarShape(_collapse(t.root, position))


def predecessors(t_n1: PlanarShape) -> list[PlanarShape]:
    """The trees obtained by collapsing one cherry; all distinct."""
    return [PlanarShape(_collapse(t_n1.root, i)) for i in cherry_positions(t_n1.root)]


def remove_last_split(t: RankedPlanarTree) -> RankedPlanarTree:
    """Undo the highest-ranked split (always a cherry)."""
    nodes = list(postorder(t.root))
    last = max(cherry_positions(t.root), key=lambda i: nodes[i].rank)
    return RankedPlanarTree(_collapse(t.root, last))


def _check_sizes(t_n: PlanarShape, t_n1: PlanarShape) -> None:
    if t_n1.leaf_count != t_n.leaf_count + 1:
        raise DomainError(f"leaf counts {t_n.leaf_count} and {t_n1.leaf_count} are not n and n + 1")


def compatible(t_n: PlanarShape, t_n1: PlanarShape) -> bool:
    """Whether ``t_n1`` arises from ``t_n`` by splitting a single leaf."""
    _check_sizes(t_n, t_n1)
    return any(p == t_n for p in predecessors(t_n1))


def cherry_removal(t_n: PlanarShape, t_n1: PlanarShape) -> CherryRemoval:
    return CherryRemoval(t_n1, t_n, compatible(t_n, t_n1))


def reverse_kernel(t_n1: PlanarShape, t_n: PlanarShape) -> float:
    if t_n1.leaf_count != t_n.leaf_count + 1 or not compatible(t_n, t_n1):
        return 0.0
    return catalan_coefficient(t_n) / catalan_coefficient(t_n1)


def conditional_kernel(t_n1: PlanarShape, t_n: PlanarShape, alpha: float, beta: float) -> float:
    """``P(T_n = t_n | T_{n+1} = t_n1)`` by summing over every ranked planar
    tree with ``n + 1`` leaves; slow, for checking :func:`reverse_kernel`."""
    n1 = t_n1.leaf_count
    if n1 > ENUMERATION_CAP:
        raise UnsupportedScaleError(f"conditional kernel enumerates trees up to n={ENUMERATION_CAP}")
    joint, marginal = [], []
    for t in enumerate_ranked_planar(n1):
        if forget_ranks(t) != t_n1:
            continue
        lp = log_prob_ranked_planar(t, alpha, beta).log_value
        marginal.append(lp)
        if forget_ranks(remove_last_split(t)) == t_n:
            joint.append(lp)
    if not marginal:
        raise DomainError("t_n1 has no rankings")
    return math.exp(log_sum(joint) - log_sum(marginal))


def kernel_row_sums(n1: int) -> dict[str, float]:
    """``sum_{t_n} reverse_kernel(t_n1, t_n)`` for every planar ``t_n1`` with
    ``n1`` leaves."""
    if n1 < 2:
        raise DomainError("need at least 2 leaves")
    smaller = enumerate_planar_shapes(n1 - 1)
    return {
        encode(t): math.fsum(reverse_kernel(t, s) for s in smaller) for t in enumerate_planar_shapes(n1)
    }


def verify_reversal(n: int, alpha: float, beta: float) -> float:
    """Largest ``|P(t_n) - sum_{t_{n+1}} P(t_{n+1}) K(t_{n+1}, t_n)|`` over
    planar ``t_n`` with ``n`` leaves."""
    if not 1 <= n <= REVERSAL_CAP:
        raise UnsupportedScaleError(f"reversal check supports 1 <= n <= {REVERSAL_CAP}, got n={n}")
    big = [(t, math.exp(log_prob_planar(t, alpha, beta).log_value)) for t in enumerate_planar_shapes(n + 1)]
    worst = 0.0
    for s in enumerate_planar_shapes(n):
        direct = math.exp(log_prob_planar(s, alpha, beta).log_value)
        back = math.fsum(p * reverse_kernel(t, s) for t, p in big)
        worst = max(worst, abs(direct - back))
    return worst

"""Rooted binary trees at four resolutions and the maps between them.

A tree is a structure of :class:`Leaf` and :class:`Node` values wrapped in one
of four resolution classes:

* :class:`RankedPlanarTree`  left/right distinguished, internal nodes ranked
* :class:`PlanarShape`       left/right distinguished, no ranks
* :class:`RankedShape`       ranks kept, children unordered (canonical order)
* :class:`TreeShape`         neither (canonical order)

All of them are immutable.  Traversals are iterative so that deep trees
(combs with thousands of leaves) do not hit the recursion limit.
"""

from __future__ import annotations

import enum
import math
from typing import Callable, Iterator, Union

__all__ = [
    "Resolution",
    "Leaf",
    "Node",
    "RankedPlanarTree",
    "PlanarShape",
    "RankedShape",
    "TreeShape",
    "TreeValidationError",
    "postorder",
    "fold",
    "preorder",
    "internal_nodes",
    "mirror",
    "perm_to_ranked_planar",
    "ranked_planar_to_perm",
    "split_sizes",
    "split_profile",
    "forget_ranks",
    "forget_planarity",
    "shape_of",
    "catalan_coefficient",
    "cherry_count",
    "iso_split_count",
    "colless",
    "sackin",
    "comb",
    "balanced",
    "ranked_planar_embeddings",
    "planar_embeddings",
]


class TreeValidationError(ValueError):
    pass


_set = object.__setattr__


class Resolution(str, enum.Enum):
    RANKED_PLANAR = "ranked-planar"
    PLANAR = "planar"
    RANKED = "ranked"
    SHAPE = "shape"


class Leaf:
    """A leaf, optionally frozen and optionally carrying an interval label.

    The interval is bookkeeping from the generating process and takes no part
    in equality or hashing.
    """

    __slots__ = ("frozen", "interval", "_hash")
    n_internal = 0
    n_leaves = 1
    rank = None
    is_leaf = True

    def __init__(self, frozen: bool = False, interval: tuple[float, float] | None = None):
        _set(self, "frozen", bool(frozen))
        _set(self, "interval", interval)
        _set(self, "_hash", hash(("leaf", bool(frozen))))

    def __setattr__(self, name, value):
        raise AttributeError("trees are immutable")

    def __repr__(self):
        return "Leaf(frozen=True)" if self.frozen else "Leaf()"

    def __hash__(self):
        return self._hash

    def __eq__(self, other):
        return isinstance(other, Leaf) and other.frozen == self.frozen


class Node:
    __slots__ = ("left", "right", "rank", "n_internal", "n_leaves", "_hash")
    is_leaf = False

    def __init__(self, left: "Tree", right: "Tree", rank: int | None = None):
        _set(self, "left", left)
        _set(self, "right", right)
        _set(self, "rank", rank)
        _set(self, "n_internal", left.n_internal + right.n_internal + 1)
        _set(self, "n_leaves", left.n_leaves + right.n_leaves)
        _set(self, "_hash", hash((left._hash, right._hash, rank)))

    def __setattr__(self, name, value):
        raise AttributeError("trees are immutable")

    def __repr__(self):
        return f"Node({self.left!r}, {self.right!r}, rank={self.rank})"

    def __hash__(self):
        return self._hash

    def __eq__(self, other):
        if not isinstance(other, Node):
            return False
        stack = [(self, other)]
        while stack:
            a, b = stack.pop()
            if a is b:
                continue
            if a._hash != b._hash or a.is_leaf != b.is_leaf:
                return False
            if a.is_leaf:
                if a.frozen != b.frozen:
                    return False
                continue
            if a.rank != b.rank:
                return False
            stack.append((a.left, b.left))
            stack.append((a.right, b.right))
        return True


Tree = Union[Leaf, Node]


def preorder(root: Tree) -> Iterator[Tree]:
    stack = [root]
    while stack:
        x = stack.pop()
        yield x
        if not x.is_leaf:
            stack.append(x.right)
            stack.append(x.left)


def postorder(root: Tree) -> Iterator[Tree]:
    """Children before parents, left subtree before right subtree."""
    stack: list[tuple[Tree, bool]] = [(root, False)]
    while stack:
        x, expanded = stack.pop()
        if x.is_leaf or expanded:
            yield x
        else:
            stack.append((x, True))
            stack.append((x.right, False))
            stack.append((x.left, False))


def fold(root: Tree, leaf: Callable[[Leaf], object], node: Callable[[Node, object, object], object]):
    """Bottom-up evaluation, ``node(x, left_value, right_value)``.

    Values live on a stack rather than in an identity map, so structures
    that share subtree objects are handled position by position.
    """
    vals: list = []
    for x in postorder(root):
        if x.is_leaf:
            vals.append(leaf(x))
        else:
            right = vals.pop()
            vals.append(node(x, vals.pop(), right))
    return vals[0]


def _rebuild(root: Tree, make: Callable[[Node, Tree, Tree], Tree], leaf: Callable[[Leaf], Tree]) -> Tree:
    """Bottom-up reconstruction; ``make(old, new_left, new_right)``."""
    return fold(root, leaf, make)


class _Resolved:
    """Common surface of the four resolution wrappers."""

    __slots__ = ("root",)
    resolution: Resolution

    def __init__(self, root: Tree):
        _set(self, "root", root)

    def __setattr__(self, name, value):
        raise AttributeError("trees are immutable")

    @property
    def leaf_count(self) -> int:
        return self.root.n_leaves

    @property
    def internal_count(self) -> int:
        return self.root.n_internal

    def __eq__(self, other):
        return type(other) is type(self) and self.root == other.root

    def __hash__(self):
        return hash((type(self).__name__, self.root._hash))

    def __repr__(self):
        from .io import to_newick

        return f"{type(self).__name__}({to_newick(self)!r})"


def _check_unranked(root: Tree) -> None:
    for x in preorder(root):
        if not x.is_leaf and x.rank is not None:
            raise TreeValidationError("unranked trees carry no ranks")


def _check_increasing(root: Tree) -> None:
    n_int = root.n_internal
    seen = set()
    stack: list[tuple[Tree, int]] = [(root, 0)]
    while stack:
        x, parent_rank = stack.pop()
        if x.is_leaf:
            continue
        r = x.rank
        if not isinstance(r, int) or not 1 <= r <= n_int:
            raise TreeValidationError(f"rank {r!r} outside 1..{n_int}")
        if r in seen:
            raise TreeValidationError(f"duplicate rank {r}")
        if r <= parent_rank:
            raise TreeValidationError(f"rank {r} below a node of rank {parent_rank}")
        seen.add(r)
        stack.append((x.left, r))
        stack.append((x.right, r))


class RankedPlanarTree(_Resolved):
    """Planar binary tree whose internal nodes carry split ranks 1..n-1."""

    __slots__ = ()
    resolution = Resolution.RANKED_PLANAR

    def __init__(self, root: Tree):
        _check_increasing(root)
        super().__init__(root)

    def node_by_rank(self) -> dict[int, Node]:
        return {x.rank: x for x in preorder(self.root) if not x.is_leaf}

    def leaves(self) -> list[Leaf]:
        """Leaves in left-to-right order."""
        return [x for x in preorder(self.root) if x.is_leaf]


class PlanarShape(_Resolved):
    __slots__ = ()
    resolution = Resolution.PLANAR

    def __init__(self, root: Tree):
        _check_unranked(root)
        super().__init__(root)


def _ranked_order_key(x: Tree) -> tuple:
    # internal subtrees by their (minimal) root rank, leaves last
    if x.is_leaf:
        return (1, x.frozen)
    return (0, x.rank)


def _canonical_ranked(root: Tree) -> Tree:
    def make(_, a, b):
        if _ranked_order_key(b) < _ranked_order_key(a):
            a, b = b, a
        return Node(a, b, _.rank)

    return _rebuild(root, make, lambda x: Leaf(x.frozen))


class RankedShape(_Resolved):
    """Ranked non-planar tree, stored with children in canonical order."""

    __slots__ = ()
    resolution = Resolution.RANKED

    def __init__(self, root: Tree):
        _check_increasing(root)
        super().__init__(_canonical_ranked(root))


def _canonical_unranked(root: Tree) -> tuple[Tree, str]:
    """Canonical unranked tree together with its canonical encoding."""

    def key(pair: tuple[Tree, str]) -> tuple:
        x, enc = pair
        return (0, 1, enc) if x.is_leaf else (1, x.n_leaves, enc)

    def make(_, a, b):
        if key(b) < key(a):
            a, b = b, a
        return Node(a[0], b[0]), f"({a[1]},{b[1]})"

    return fold(root, lambda x: (Leaf(x.frozen), "*" if x.frozen else ""), make)


class TreeShape(_Resolved):
    """Unranked non-planar tree shape in canonical form.

    At every node the child with the smaller canonical key is on the left:
    leaves precede internal nodes, internal nodes are ordered by leaf count
    and then by canonical encoding.
    """

    __slots__ = ()
    resolution = Resolution.SHAPE

    def __init__(self, root: Tree):
        super().__init__(_canonical_unranked(root)[0])


AnyTree = Union[RankedPlanarTree, PlanarShape, RankedShape, TreeShape]


def internal_nodes(t: AnyTree) -> list[Node]:
    """Internal nodes; in rank order for ranked trees, preorder otherwise."""
    nodes = [x for x in preorder(t.root) if not x.is_leaf]
    if nodes and nodes[0].rank is not None:
        nodes.sort(key=lambda x: x.rank)
    return nodes


def split_sizes(t: AnyTree | None, node: Tree) -> tuple[int, int]:
    """Internal-node counts ``(nL, nR)`` of the two subtrees below ``node``."""
    if node.is_leaf:
        raise TreeValidationError("split sizes are defined for internal nodes only")
    return node.left.n_internal, node.right.n_internal


def split_profile(t: AnyTree) -> list[tuple[int, int]]:
    return [(x.left.n_internal, x.right.n_internal) for x in internal_nodes(t)]


def mirror(t: AnyTree) -> AnyTree:
    """Swap left and right everywhere (intervals are reflected too)."""

    def leaf(x: Leaf) -> Leaf:
        iv = None if x.interval is None else (1.0 - x.interval[1], 1.0 - x.interval[0])
        return Leaf(x.frozen, iv)

    return type(t)(_rebuild(t.root, lambda old, a, b: Node(b, a, old.rank), leaf))


def _check_perm(p) -> list[int]:
    p = [int(x) for x in p]
    if sorted(p) != list(range(1, len(p) + 1)):
        raise TreeValidationError(f"not a permutation of 1..{len(p)}: {p}")
    return p


def perm_to_ranked_planar(p) -> RankedPlanarTree:
    """Increasing binary tree of a permutation.

    ``p`` is the in-order reading of the ranks: the root is the position of
    rank 1, the left subtree is built from the entries before it and the right
    subtree from the entries after it.  Equivalently, insert the inverse
    permutation into a binary search tree in rank order.  The empty
    permutation gives the single leaf.
    """
    p = _check_perm(p)
    m = len(p)
    if m == 0:
        return RankedPlanarTree(Leaf())
    # min-Cartesian tree on positions, O(m)
    left = [-1] * m
    right = [-1] * m
    stack: list[int] = []
    for i in range(m):
        last = -1
        while stack and p[stack[-1]] > p[i]:
            last = stack.pop()
        left[i] = last
        if stack:
            right[stack[-1]] = i
        stack.append(i)
    built: dict[int, Node] = {}
    for i in sorted(range(m), key=lambda i: -p[i]):
        a = built.pop(left[i]) if left[i] >= 0 else Leaf()
        b = built.pop(right[i]) if right[i] >= 0 else Leaf()
        built[i] = Node(a, b, p[i])
    return RankedPlanarTree(built[stack[0]])


def ranked_planar_to_perm(t: RankedPlanarTree) -> tuple[int, ...]:
    """In-order reading of internal ranks (inverse of :func:`perm_to_ranked_planar`)."""
    out = []
    stack: list[Tree] = []
    x: Tree | None = t.root
    while stack or x is not None:
        while x is not None and not x.is_leaf:
            stack.append(x)
            x = x.left
        if not stack:
            break
        node = stack.pop()
        out.append(node.rank)
        x = node.right
    return tuple(out)


def _strip(root: Tree, keep_rank: bool) -> Tree:
    return _rebuild(
        root,
        lambda old, a, b: Node(a, b, old.rank if keep_rank else None),
        lambda x: Leaf(x.frozen),
    )


def forget_ranks(t: RankedPlanarTree) -> PlanarShape:
    return PlanarShape(_strip(t.root, keep_rank=False))


def forget_planarity(t: RankedPlanarTree) -> RankedShape:
    return RankedShape(t.root)


def shape_of(t: AnyTree) -> TreeShape:
    return TreeShape(t.root)


def catalan_coefficient(t: AnyTree) -> int:
    """Number of rankings of a planar shape: product of C(nL + nR, nL)."""
    out = 1
    for x in preorder(t.root):
        if not x.is_leaf:
            out *= math.comb(x.n_internal - 1, x.left.n_internal)
    return out


def cherry_count(t: AnyTree) -> int:
    return sum(1 for x in preorder(t.root) if not x.is_leaf and x.n_internal == 1)


def iso_split_count(t: AnyTree) -> int:
    """Internal nodes whose two child subtrees are isomorphic shapes."""
    if not isinstance(t, TreeShape):
        t = shape_of(t)
    # canonical form: isomorphic children are structurally equal
    return sum(1 for x in preorder(t.root) if not x.is_leaf and x.left == x.right)


def colless(t: AnyTree) -> int:
    return sum(abs(x.left.n_leaves - x.right.n_leaves) for x in preorder(t.root) if not x.is_leaf)


def sackin(t: AnyTree) -> int:
    # sum over leaves of depth == sum over internal nodes of leaves below
    return sum(x.n_leaves for x in preorder(t.root) if not x.is_leaf)


def comb(n: int, ranked: bool = True) -> Tree:
    """Right comb on ``n`` leaves; ranks increase down the backbone."""
    if n < 1:
        raise TreeValidationError("a tree needs at least one leaf")
    x: Tree = Leaf()
    for r in range(n - 1, 0, -1):
        x = Node(Leaf(), x, r if ranked else None)
    return x


def balanced(n: int) -> Tree:
    """Unranked fully balanced tree on ``n = 2**N`` leaves."""
    if n < 1 or n & (n - 1):
        raise TreeValidationError(f"balanced tree needs a power of two, got {n}")
    if n == 1:
        return Leaf()
    return Node(balanced(n // 2), balanced(n // 2))


def _product(options_left: list, options_right: list, make) -> list:
    return [make(a, b) for a in options_left for b in options_right]


def ranked_planar_embeddings(t: RankedShape) -> Iterator[RankedPlanarTree]:
    """All ``2**(n-1-c)`` ranked planar trees projecting onto ``t``."""

    def make(x, ls, rs):
        out = _product(ls, rs, lambda a, b: Node(a, b, x.rank))
        if x.n_internal > 1 or x.left != x.right:
            out += _product(rs, ls, lambda a, b: Node(a, b, x.rank))
        return out

    for root in fold(t.root, lambda x: [Leaf(x.frozen)], make):
        yield RankedPlanarTree(root)


def planar_embeddings(t: TreeShape) -> Iterator[PlanarShape]:
    """All ``2**(n-1-s)`` distinct planar shapes projecting onto ``t``."""

    def make(x, ls, rs):
        out = _product(ls, rs, Node)
        if x.left != x.right:
            out += _product(rs, ls, Node)
        return out

    for root in fold(t.root, lambda x: [Leaf(x.frozen)], make):
        yield PlanarShape(root)

"""Text and JSON forms of trees.

Newick dialect: leaves are empty (``*`` marks a frozen leaf), ranked
resolutions label internal nodes with their rank, and the string ends with
``;``.  The right comb on four leaves is ``(,(,(,)3)2)1;``.  Branch lengths
(``:0.25``) are accepted on input and ignored.

The bracket notation ``[., [[., .], .]]`` is read as a :class:`PlanarShape`.
"""

from __future__ import annotations

from typing import Callable

from .core import (
    AnyTree,
    Leaf,
    Node,
    PlanarShape,
    RankedPlanarTree,
    RankedShape,
    Resolution,
    Tree,
    TreeShape,
    TreeValidationError,
    forget_planarity,
    forget_ranks,
    fold,
    postorder,
    shape_of,
)

__all__ = ["NewickParseError", "to_newick", "from_newick", "from_bracket", "to_bracket", "to_json_obj", "from_json_obj", "resolve"]

_CLASSES = {
    Resolution.RANKED_PLANAR: RankedPlanarTree,
    Resolution.PLANAR: PlanarShape,
    Resolution.RANKED: RankedShape,
    Resolution.SHAPE: TreeShape,
}


class NewickParseError(ValueError):
    def __init__(self, message: str, text: str, pos: int):
        self.pos = pos
        super().__init__(f"{message} at position {pos}: {text[max(0, pos - 10):pos + 10]!r}")


def render(root: Tree, ranked: bool, length: Callable[[Tree], float | None] | None = None) -> str:
    """Newick body (no terminator) for a raw node structure."""

    def suffix(x: Tree, s: str) -> str:
        if length is not None:
            bl = length(x)
            if bl is not None:
                s += f":{bl:.10g}"
        return s

    def node(x, a, b):
        return suffix(x, f"({a},{b})" + (str(x.rank) if ranked else ""))

    return fold(root, lambda x: suffix(x, "*" if x.frozen else ""), node)


def to_newick(t: AnyTree) -> str:
    ranked = isinstance(t, (RankedPlanarTree, RankedShape))
    return render(t.root, ranked) + ";"


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def error(self, msg: str):
        raise NewickParseError(msg, self.text, self.pos)

    def skip(self):
        t = self.text
        while self.pos < len(t) and t[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.skip()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def expect(self, ch: str):
        if self.peek() != ch:
            self.error(f"expected {ch!r}")
        self.pos += 1

    def integer(self) -> int | None:
        self.skip()
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos].isdigit():
            self.pos += 1
        return int(self.text[start:self.pos]) if self.pos > start else None

    def length(self):
        if self.peek() == ":":
            self.pos += 1
            self.skip()
            start = self.pos
            while self.pos < len(self.text) and self.text[self.pos] in "0123456789.eE+-":
                self.pos += 1
            try:
                float(self.text[start:self.pos])
            except ValueError:
                self.error("bad branch length")

    def subtree(self) -> Tree:
        # iterative descent: a work stack of open nodes
        stack: list[list] = []
        while True:
            if self.peek() == "(":
                self.pos += 1
                stack.append([])
                continue
            frozen = False
            if self.peek() == "*":
                self.pos += 1
                frozen = True
            node: Tree = Leaf(frozen)
            self.length()
            while True:
                if not stack:
                    return node
                stack[-1].append(node)
                if len(stack[-1]) == 1:
                    self.expect(",")
                    break
                self.expect(")")
                left, right = stack.pop()
                node = Node(left, right, self.integer())
                self.length()

    def parse(self) -> Tree:
        root = self.subtree()
        self.expect(";")
        if self.peek():
            self.error("trailing characters")
        return root


def _has_ranks(root: Tree) -> bool:
    return any(x.rank is not None for x in postorder(root) if not x.is_leaf)


def _strip_ranks(root: Tree) -> Tree:
    return fold(root, lambda x: Leaf(x.frozen), lambda x, a, b: Node(a, b))


def resolve(root: Tree, resolution: Resolution | str | None) -> AnyTree:
    """Wrap a raw structure at ``resolution`` (inferred from ranks if None)."""
    ranked = _has_ranks(root)
    if resolution is None:
        resolution = Resolution.RANKED_PLANAR if ranked else Resolution.PLANAR
    resolution = Resolution(resolution)
    if resolution in (Resolution.RANKED_PLANAR, Resolution.RANKED):
        if not ranked and root.n_internal:
            raise TreeValidationError(f"{resolution.value} trees need rank labels")
    else:
        root = _strip_ranks(root)
    try:
        return _CLASSES[resolution](root)
    except TreeValidationError:
        raise
    except (TypeError, ValueError) as exc:
        raise TreeValidationError(str(exc)) from exc


def from_newick(text: str, resolution: Resolution | str | None = None) -> AnyTree:
    """Parse Newick (or bracket notation) into a tree at ``resolution``."""
    if text.lstrip().startswith("["):
        shape = from_bracket(text)
        return resolve(shape.root, resolution or Resolution.PLANAR)
    return resolve(_Parser(text).parse(), resolution)


def from_bracket(text: str) -> PlanarShape:
    """Parse ``[., [[., .], .]]``-style notation; ``.`` is a leaf."""
    p = _Parser(text)
    stack: list[list] = []
    while True:
        ch = p.peek()
        if ch == "[":
            p.pos += 1
            stack.append([])
            continue
        if ch != ".":
            p.error("expected '[' or '.'")
        p.pos += 1
        node: Tree = Leaf()
        while True:
            if not stack:
                if p.peek():
                    p.error("trailing characters")
                return PlanarShape(node)
            stack[-1].append(node)
            if len(stack[-1]) == 1:
                p.expect(",")
                break
            p.expect("]")
            left, right = stack.pop()
            node = Node(left, right)


def to_bracket(t: AnyTree) -> str:
    return fold(t.root, lambda x: ".", lambda x, a, b: f"[{a}, {b}]")


def to_json_obj(t: AnyTree):
    """Nested ``{"rank"?, "left", "right"}`` objects; leaves are ``"leaf"``
    (or ``"frozen"``)."""
    ranked = isinstance(t, (RankedPlanarTree, RankedShape))

    def node(x, a, b):
        obj: dict = {"rank": x.rank} if ranked else {}
        obj["left"] = a
        obj["right"] = b
        return obj

    return fold(t.root, lambda x: "frozen" if x.frozen else "leaf", node)


def from_json_obj(obj, resolution: Resolution | str | None = None) -> AnyTree:
    def build(o) -> Tree:
        if o == "leaf":
            return Leaf()
        if o == "frozen":
            return Leaf(True)
        if not isinstance(o, dict) or "left" not in o or "right" not in o:
            raise TreeValidationError(f"not a tree node: {o!r}")
        return Node(build(o["left"]), build(o["right"]), o.get("rank"))

    return resolve(build(obj), resolution)


def project(t: AnyTree, resolution: Resolution | str) -> AnyTree:
    """Coarsen ``t`` to ``resolution``."""
    resolution = Resolution(resolution)
    if resolution is t.resolution:
        return t
    if resolution is Resolution.SHAPE:
        return shape_of(t)
    if isinstance(t, RankedPlanarTree):
        return forget_ranks(t) if resolution is Resolution.PLANAR else forget_planarity(t)
    raise TreeValidationError(f"cannot project {t.resolution.value} to {resolution.value}")

"""Discrete-time generating, organizing and deleting (freezing) processes.

Leaves carry interval labels partitioning [0, 1].  A uniform ``u`` picks the
leaf whose interval contains it, and a Beta(alpha + 1, beta + 1) variate
``b`` cuts that interval into a left part of relative length ``b`` and a right
part of relative length ``1 - b``.  With freezing, a uniform ``v < delta``
turns the step into a freeze of the leaf containing ``d``.
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .numerics import DomainError, DrawBuffer, as_draws, pick_interval, sample_beta
from .trees import Leaf, Node, RankedPlanarTree, Tree

__all__ = [
    "ModelParams",
    "GeneratingQuadruple",
    "Event",
    "GodState",
    "PrecisionError",
    "IterationCapError",
    "sample_generating_sequence",
    "organize",
    "god_step",
    "run_god",
    "events_to_jsonl",
    "MAX_STEPS",
]

MAX_STEPS = 10**7


class PrecisionError(ArithmeticError):
    """A leaf interval collapsed to zero width in double precision."""


class IterationCapError(RuntimeError):
    pass


@dataclass(frozen=True)
class ModelParams:
    alpha: float = 0.0
    beta: float = 0.0
    delta: float = 0.0
    lam: float = 1.0
    n: int = 2

    def __post_init__(self):
        for name in ("alpha", "beta"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > -1):
                raise DomainError(f"{name} must be a finite real > -1, got {v!r}")
        if not 0.0 <= self.delta < 1.0:
            raise DomainError(f"delta must lie in [0, 1), got {self.delta!r}")
        if not (math.isfinite(self.lam) and self.lam > 0):
            raise DomainError(f"lambda must be > 0, got {self.lam!r}")
        if int(self.n) != self.n or self.n < 1:
            raise DomainError(f"n must be an integer >= 1, got {self.n!r}")


class GeneratingQuadruple(NamedTuple):
    u: float
    b: float
    v: float
    d: float


class Event(NamedTuple):
    """One step of the process.

    A run of ``count > 1`` consecutive cancelled steps that was skipped in a
    single draw is stored as one event starting at ``step``, with no interval.
    """

    step: int
    kind: str  # "split" | "freeze" | "cancelled"
    leaf_interval: tuple[float, float] | None
    b: float | None = None
    count: int = 1


def sample_generating_sequence(params: ModelParams, rng: np.random.Generator, length: int) -> list[GeneratingQuadruple]:
    """``length`` i.i.d. quadruples.

    Draw order is fixed: all ``u``, then all ``b``, then ``v``, then ``d``.
    """
    if length < 0:
        raise ValueError("length must be >= 0")
    if length == 0:
        return []
    u = rng.random(length)
    b = sample_beta(params.alpha + 1.0, params.beta + 1.0, rng, length)
    v = rng.random(length)
    d = rng.random(length)
    return [GeneratingQuadruple(*q) for q in zip(u.tolist(), b.tolist(), v.tolist(), d.tolist())]


class _Slot:
    """A leaf under construction; ``parent`` is ``(rank, side)`` or None."""

    __slots__ = ("lo", "hi", "frozen", "parent")

    def __init__(self, lo, hi, parent=None):
        self.lo = lo
        self.hi = hi
        self.frozen = False
        self.parent = parent


class GodState:
    """State of the generating-organizing-deleting construction.

    ``cuts`` holds the interval endpoints ``[0, ..., 1]`` in left-to-right
    leaf order, so leaf ``j`` owns ``[cuts[j], cuts[j + 1]]``.
    """

    def __init__(self):
        self.slots: list[_Slot] = [_Slot(0.0, 1.0)]
        self.cuts: list[float] = [0.0, 1.0]
        self.children: dict[int, list] = {}
        self.root: _Slot | int = self.slots[0]
        self.next_rank = 1
        self.active_count = 1
        self.steps = 0
        self.event_log: list[Event] = []

    @property
    def leaf_count(self) -> int:
        return len(self.slots)

    @property
    def effective_events(self) -> int:
        return sum(1 for e in self.event_log if e.kind != "cancelled")

    def active_length(self) -> float:
        return math.fsum(s.hi - s.lo for s in self.slots if not s.frozen)

    def intervals(self) -> list[tuple[float, float]]:
        return [(s.lo, s.hi) for s in self.slots]

    def active_mask(self) -> list[bool]:
        return [not s.frozen for s in self.slots]

    def copy(self) -> "GodState":
        return copy.deepcopy(self)

    def leaf_at(self, x: float) -> int:
        return pick_interval(self.cuts, x)

    def split(self, j: int, b: float) -> None:
        s = self.slots[j]
        lo, hi = s.lo, s.hi
        mid = lo + (hi - lo) * b
        if not lo < mid < hi:
            raise PrecisionError(
                f"splitting [{lo!r}, {hi!r}] at fraction {b!r} leaves a zero-width interval"
            )
        r = self.next_rank
        left = _Slot(lo, mid, (r, 0))
        right = _Slot(mid, hi, (r, 1))
        self.children[r] = [left, right]
        if s.parent is None:
            self.root = r
        else:
            pr, side = s.parent
            self.children[pr][side] = r
        self.slots[j:j + 1] = [left, right]
        self.cuts.insert(j + 1, mid)
        self.next_rank = r + 1
        self.active_count += 1

    def freeze(self, j: int) -> None:
        self.slots[j].frozen = True
        self.active_count -= 1

    def apply(self, q: GeneratingQuadruple, delta: float) -> str:
        """One step in place; returns the event kind."""
        self.steps += 1
        if q.v < delta:
            j = self.leaf_at(q.d)
            s = self.slots[j]
            kind = "cancelled" if s.frozen else "freeze"
            self.event_log.append(Event(self.steps, kind, (s.lo, s.hi)))
            if kind == "freeze":
                self.freeze(j)
            return kind
        j = self.leaf_at(q.u)
        s = self.slots[j]
        if s.frozen:
            self.event_log.append(Event(self.steps, "cancelled", (s.lo, s.hi), q.b))
            return "cancelled"
        self.event_log.append(Event(self.steps, "split", (s.lo, s.hi), q.b))
        self.split(j, q.b)
        return "split"

    @property
    def tree(self) -> RankedPlanarTree:
        return RankedPlanarTree(self._materialize())

    def _materialize(self) -> Tree:
        def conv(ref) -> Tree:
            if isinstance(ref, _Slot):
                return Leaf(ref.frozen, (ref.lo, ref.hi))
            return built.pop(ref)

        built: dict[int, Node] = {}
        # children always carry larger ranks than their parent
        for r in range(self.next_rank - 1, 0, -1):
            a, b = self.children[r]
            built[r] = Node(conv(a), conv(b), r)
        return conv(self.root)


def organize(seq: Sequence, n: int) -> RankedPlanarTree:
    """Deterministic organizing map: the tree after ``n - 1`` splits.

    ``seq`` yields ``(u, b, ...)`` tuples; step ``i`` uses ``seq[i - 1]``.
    The ``u`` of the first step is never consulted (a single leaf holds all
    of [0, 1]) and may be ``None``.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if len(seq) < n - 1:
        raise ValueError(f"need {n - 1} generating pairs, got {len(seq)}")
    st = GodState()
    for i in range(n - 1):
        u, b = seq[i][0], seq[i][1]
        j = 0 if i == 0 else st.leaf_at(u)
        st.steps += 1
        st.event_log.append(Event(st.steps, "split", (st.slots[j].lo, st.slots[j].hi), b))
        st.split(j, b)
    return st.tree


def god_step(state: GodState, q: GeneratingQuadruple, delta: float) -> GodState:
    """Pure single step: returns a new state, ``state`` is untouched."""
    new = state.copy()
    new.apply(q, delta)
    return new


def _draw_quadruple(draws: DrawBuffer, params: ModelParams) -> GeneratingQuadruple:
    return GeneratingQuadruple(
        draws.uniform(), draws.beta(params.alpha + 1.0, params.beta + 1.0), draws.uniform(), draws.uniform()
    )


def _fast_forward(st: GodState, draws: DrawBuffer, params: ModelParams, active: float) -> str:
    """Skip the cancelled steps before the next effective event, then apply it.

    Each step is effective with probability ``active`` (total active length)
    independently of the past, so the number of cancelled steps is geometric.
    Given that a step is effective it is a freeze with probability ``delta``
    and hits active leaf ``j`` with probability ``L_j / active``.
    """
    skipped = draws.failures_before_success(active)
    if skipped:
        st.event_log.append(Event(st.steps + 1, "cancelled", None, None, skipped))
        st.steps += skipped
    is_freeze = draws.uniform() < params.delta
    target = draws.uniform() * active
    b = draws.beta(params.alpha + 1.0, params.beta + 1.0)
    j = last = -1
    acc = 0.0
    for i, slot in enumerate(st.slots):
        if slot.frozen:
            continue
        last = i
        acc += slot.hi - slot.lo
        if target < acc:
            j = i
            break
    if j < 0:
        j = last
    slot = st.slots[j]
    st.steps += 1
    if is_freeze:
        st.event_log.append(Event(st.steps, "freeze", (slot.lo, slot.hi)))
        st.freeze(j)
        return "freeze"
    st.event_log.append(Event(st.steps, "split", (slot.lo, slot.hi), b))
    st.split(j, b)
    return "split"


def run_god(
    params: ModelParams,
    rng,
    max_effective_events: int | None = None,
    max_iterations: int = MAX_STEPS,
    skip_below: float = 0.5,
) -> tuple[GodState, str]:
    """Run until ``n`` active leaves (``"reached_n"``) or none (``"extinct"``).

    Steps are applied one quadruple at a time while the active leaves cover
    at least ``skip_below`` of [0, 1]; below that, runs of cancelled steps are
    skipped exactly (see :func:`_fast_forward`), which keeps the cost bounded
    when only tiny intervals stay active.  ``rng`` is a numpy Generator or a
    :class:`~betasplit.numerics.DrawBuffer` shared across replicates.

    With ``max_effective_events`` the run also stops once that many
    effective events (splits or first freezes) have happened, with outcome
    ``"reached_events"`` unless one of the other conditions came first.
    """
    draws = as_draws(rng)
    st = GodState()
    n = params.n
    delta = params.delta
    effective = 0
    active = 1.0

    def done() -> str | None:
        if st.active_count == 0:
            return "extinct"
        if st.active_count == n:
            return "reached_n"
        if max_effective_events is not None and effective >= max_effective_events:
            return "reached_events"
        return None

    outcome = done()
    for _ in range(max_iterations):
        if outcome:
            return st, outcome
        if active < skip_below:
            kind = _fast_forward(st, draws, params, active)
        else:
            kind = st.apply(_draw_quadruple(draws, params), delta)
        if kind == "cancelled":
            continue
        if kind == "freeze":
            active = st.active_length()
        effective += 1
        outcome = done()
    if outcome:
        return st, outcome
    raise IterationCapError(f"no termination after {max_iterations} iterations")


def events_to_jsonl(events: Iterable[Event]) -> str:
    lines = []
    for e in events:
        rec = {"step": e.step, "kind": e.kind}
        if e.leaf_interval is not None:
            rec["leaf_interval"] = list(e.leaf_interval)
        if e.b is not None and e.kind == "split":
            rec["b"] = e.b
        if e.count != 1:
            rec["count"] = e.count
        lines.append(json.dumps(rec))
    return "\n".join(lines) + ("\n" if lines else "")

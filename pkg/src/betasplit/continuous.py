"""Continuous-time splitting/freezing process with branch lengths.

Every active leaf j carries an exponential clock of rate ``lam * L_j`` where
``L_j`` is its interval length; when it rings the leaf splits with
probability ``1 - delta`` and freezes otherwise.  Frozen leaves never ring.
Splits cut intervals exactly as the discrete organizing map does, and new
internal nodes take the next free rank.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import NamedTuple

from .generate import GodState, ModelParams
from .numerics import as_draws
from .trees import RankedPlanarTree, fold, to_json_obj

__all__ = ["TimedEvent", "TimedTree", "simulate_continuous", "embedded_discrete"]


class TimedEvent(NamedTuple):
    time: float
    kind: str  # "split" | "freeze"
    leaf_interval: tuple[float, float]
    active_length: float  # total active length just before the event
    wait: float


@dataclass(frozen=True)
class TimedTree:
    """A ranked planar tree with event times; time 0 is the root's birth.

    ``freeze_times`` is keyed by leaf position (left to right, from 0).
    """

    base: RankedPlanarTree
    event_times: dict[int, float]
    freeze_times: dict[int, float]
    total_time: float
    outcome: str = "reached_n"
    events: list[TimedEvent] = field(default_factory=list, repr=False)

    def newick_with_lengths(self, digits: int = 10) -> str:
        """Newick string with edge lengths; a leaf edge runs to its freeze
        time, or to ``total_time`` if it is still active."""
        leaf_pos = itertools.count()

        def leaf(x):
            return "*" if x.frozen else "", self.freeze_times.get(next(leaf_pos), self.total_time)

        def node(x, a, b):
            t = self.event_times[x.rank]
            body = f"({a[0]}:{a[1] - t:.{digits}g},{b[0]}:{b[1] - t:.{digits}g}){x.rank}"
            return body, t

        body, end = fold(self.base.root, leaf, node)
        # the root edge starts at time 0
        return f"{body}:{end:.{digits}g};"

    def edge_lengths(self) -> list[float]:
        """Lengths of all edges including the root edge, in postorder."""
        leaf_pos = itertools.count()

        def leaf(x):
            return self.freeze_times.get(next(leaf_pos), self.total_time), []

        def node(x, a, b):
            t = self.event_times[x.rank]
            return t, [*a[1], a[0] - t, *b[1], b[0] - t]

        end, below = fold(self.base.root, leaf, node)
        return below + [end]

    to_newick = newick_with_lengths

    def to_json(self) -> str:
        return json.dumps(
            {
                "tree": to_json_obj(self.base),
                "event_times": {str(k): v for k, v in sorted(self.event_times.items())},
                "freeze_times": {str(k): v for k, v in sorted(self.freeze_times.items())},
                "total_time": self.total_time,
                "outcome": self.outcome,
            }
        )


def simulate_continuous(
    params: ModelParams,
    rng,
    *,
    after_events: int | None = None,
    active_leaves: int | None = None,
) -> TimedTree:
    """Event-clock simulation until the stop condition or extinction.

    Stop after ``after_events`` events (all events are effective here) or
    once ``active_leaves`` leaves are active; with neither given the target is
    ``params.n`` active leaves.  Time stops at the last event.
    """
    if after_events is None and active_leaves is None:
        active_leaves = params.n
    if after_events is not None and after_events < 0:
        raise ValueError("after_events must be >= 0")
    if active_leaves is not None and active_leaves < 1:
        raise ValueError("active_leaves must be >= 1")
    draws = as_draws(rng)
    st = GodState()
    lam, delta = params.lam, params.delta
    a1, b1 = params.alpha + 1.0, params.beta + 1.0
    t = 0.0
    active = 1.0
    n_events = 0
    event_times: dict[int, float] = {}
    frozen_at: dict[int, float] = {}
    events: list[TimedEvent] = []

    while True:
        if st.active_count == 0:
            outcome = "extinct"
            break
        if active_leaves is not None and st.active_count == active_leaves:
            outcome = "reached_n"
            break
        if after_events is not None and n_events >= after_events:
            outcome = "reached_events"
            break
        wait = draws.exponential() / (lam * active)
        t += wait
        target = draws.uniform() * active
        is_freeze = draws.uniform() < delta
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
        iv = (slot.lo, slot.hi)
        if is_freeze:
            st.freeze(j)
            frozen_at[id(slot)] = t
            active = st.active_length()
            events.append(TimedEvent(t, "freeze", iv, active + (iv[1] - iv[0]), wait))
        else:
            event_times[st.next_rank] = t
            st.split(j, draws.beta(a1, b1))
            events.append(TimedEvent(t, "split", iv, active, wait))
        n_events += 1

    freeze_times = {pos: frozen_at[id(s)] for pos, s in enumerate(st.slots) if id(s) in frozen_at}
    return TimedTree(st.tree, event_times, freeze_times, t, outcome, events)


def embedded_discrete(tt: TimedTree) -> RankedPlanarTree:
    """Drop the times, keep ranks, frozen marks and intervals."""
    return tt.base

import json
import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from betasplit.generate import (
    Event,
    GeneratingQuadruple,
    GodState,
    IterationCapError,
    ModelParams,
    PrecisionError,
    _fast_forward,
    events_to_jsonl,
    god_step,
    organize,
    run_god,
    sample_generating_sequence,
)
from betasplit.numerics import DomainError, DrawBuffer, stream
from betasplit.oracle import chi_square_gof, encode, exact_distribution
from betasplit.trees import ranked_planar_to_perm


def test_params_validation():
    for kw in ({"alpha": -1}, {"beta": math.inf}, {"delta": 1.0}, {"delta": -0.1}, {"lam": 0}, {"n": 0}, {"n": 2.5}):
        with pytest.raises(DomainError):
            ModelParams(**kw)


def test_generating_sequence():
    assert sample_generating_sequence(ModelParams(), stream(0), 0) == []
    seq = sample_generating_sequence(ModelParams(), stream(0), 10**5)
    assert np.mean([q.b for q in seq]) == pytest.approx(0.5, abs=0.005)
    assert all(0 <= q.u < 1 and 0 < q.b < 1 and 0 <= q.v < 1 and 0 <= q.d < 1 for q in seq)
    seq = sample_generating_sequence(ModelParams(alpha=1, beta=0), stream(1), 10**5)
    assert np.mean([q.b for q in seq]) == pytest.approx(2 / 3, abs=0.005)
    again = sample_generating_sequence(ModelParams(alpha=1, beta=0), stream(1), 10**5)
    assert seq == again


def test_organize_single_leaf():
    t = organize([], 1)
    assert t.leaf_count == 1 and t.root.interval == (0.0, 1.0)


def test_organize_hand_trace():
    seq = [(None, 0.4), (0.2, 0.5), (0.9, 0.25)]
    t = organize(seq, 4)
    ivs = [leaf.interval for leaf in t.leaves()]
    expected = [(0.0, 0.2), (0.2, 0.4), (0.4, 0.55), (0.55, 1.0)]
    for got, want in zip(ivs, expected):
        assert got == pytest.approx(want, abs=1e-15)
    # node created at step i has rank i
    assert ranked_planar_to_perm(t) == (2, 1, 3)
    assert organize(seq, 4) == t
    assert [leaf.interval for leaf in organize(seq, 4).leaves()] == ivs


def test_organize_needs_enough_steps():
    with pytest.raises(ValueError):
        organize([(None, 0.5)], 3)


def _check_partition(state: GodState):
    ivs = state.intervals()
    assert ivs[0][0] == 0.0 and ivs[-1][1] == 1.0
    for (a, b), (c, d) in zip(ivs, ivs[1:]):
        assert b == c and a < b
    assert math.fsum(b - a for a, b in ivs) == pytest.approx(1.0, abs=1e-12)
    assert state.active_count == sum(state.active_mask())
    assert state.next_rank == 1 + sum(1 for e in state.event_log if e.kind == "split")


quads = st.builds(
    GeneratingQuadruple,
    st.floats(0, 1),
    st.floats(0.01, 0.99),
    st.floats(0, 1),
    st.floats(0, 1),
)


@settings(max_examples=100)
@given(st.lists(quads, max_size=30), st.sampled_from([0.0, 0.3, 0.7]))
def test_god_step_invariants(seq, delta):
    state = GodState()
    for q in seq:
        before = state.copy()
        new = god_step(state, q, delta)
        # purity: the input state is untouched
        assert state.intervals() == before.intervals() and state.active_mask() == before.active_mask()
        state = new
        _check_partition(state)
    state.tree  # the increasing-tree property is validated on construction


def test_god_step_without_delta_is_organize():
    seq = sample_generating_sequence(ModelParams(), stream(4), 6)
    seq = [GeneratingQuadruple(*q) for q in seq]
    state = GodState()
    for q in seq[:5]:
        state = god_step(state, q, 0.0)
    ref = organize([(q.u, q.b) for q in seq], 6)
    assert state.tree == ref
    assert [x.interval for x in state.tree.leaves()] == [x.interval for x in ref.leaves()]


def test_freeze_single_leaf():
    s = god_step(GodState(), GeneratingQuadruple(0.5, 0.5, 0.1, 0.5), delta=0.3)
    assert s.active_count == 0
    assert s.event_log[-1].kind == "freeze"


def test_cancelled_events():
    s = god_step(GodState(), GeneratingQuadruple(0.5, 0.5, 0.9, 0.5), delta=0.3)  # split
    s = god_step(s, GeneratingQuadruple(0.5, 0.5, 0.1, 0.1), delta=0.3)  # freeze left leaf
    before = s.intervals(), s.active_mask()
    s2 = god_step(s, GeneratingQuadruple(0.1, 0.5, 0.9, 0.5), delta=0.3)  # split lands on frozen leaf
    assert (s2.intervals(), s2.active_mask()) == before
    assert s2.event_log[-1].kind == "cancelled"
    s3 = god_step(s, GeneratingQuadruple(0.5, 0.5, 0.1, 0.2), delta=0.3)  # second freeze, same leaf
    assert s3.event_log[-1].kind == "cancelled" and s3.active_count == 1
    assert s3.effective_events == 2


def test_precision_error():
    s = GodState()
    with pytest.raises(PrecisionError):
        s.split(0, 1.0)
    s.split(0, 0.5)
    with pytest.raises(PrecisionError):
        s.split(1, 1e-17)


def test_run_god_yule_uniform():
    params = ModelParams(n=4)
    draws = DrawBuffer(stream(11))
    counts = Counter()
    for _ in range(10**4):
        st_, outcome = run_god(params, draws)
        assert outcome == "reached_n"
        counts[ranked_planar_to_perm(st_.tree)] += 1
    assert len(counts) == 6
    stat, dof, p = chi_square_gof(counts, {k: 1 / 6 for k in counts})
    assert p > 1e-3
    assert all(abs(c / 1e4 - 1 / 6) < 0.02 for c in counts.values())


@pytest.mark.parametrize("alpha, beta", [(0, 0), (-0.5, -0.5), (1, 0), (3, 3)])
def test_run_god_matches_exact_law(alpha, beta):
    n, m = 5, 10**5
    params = ModelParams(alpha, beta, n=n)
    draws = DrawBuffer(stream(12, int(10 * (alpha + 1) + beta + 1)))
    counts = Counter(encode(run_god(params, draws)[0].tree) for _ in range(m))
    stat, dof, p = chi_square_gof(counts, exact_distribution(n, alpha, beta, "ranked-planar"))
    assert p > 1e-3, (stat, dof)


def test_run_god_freeze_fraction():
    params = ModelParams(delta=0.3, n=6)
    draws = DrawBuffer(stream(13))
    kinds = Counter()
    outcomes = Counter()
    for _ in range(10**4):
        st_, outcome = run_god(params, draws)
        outcomes[outcome] += 1
        kinds.update(e.kind for e in st_.event_log if e.kind != "cancelled")
        assert st_.active_count in (0, 6)
    frac = kinds["freeze"] / (kinds["freeze"] + kinds["split"])
    assert frac == pytest.approx(0.3, abs=0.015)
    assert set(outcomes) == {"reached_n", "extinct"}


def test_fast_forward_matches_literal_steps():
    # state: [0, .1] active, [.1, .6] frozen, [.6, .7] active, [.7, 1] frozen
    base = GodState()
    base.split(0, 0.6)
    base.split(0, 1 / 6)
    base.split(2, 0.25)
    base.freeze(1)
    base.freeze(3)
    active = base.active_length()
    assert active == pytest.approx(0.2)
    params = ModelParams(delta=0.3, n=10)
    m = 20000

    literal = Counter()
    literal_skips = []
    rng = stream(14)
    for _ in range(m):
        s = base.copy()
        skipped = 0
        while True:
            q = GeneratingQuadruple(rng.random(), 0.5, rng.random(), rng.random())
            kind = s.apply(q, params.delta)
            if kind != "cancelled":
                break
            skipped += 1
        literal[(kind, s.event_log[-1].leaf_interval[0])] += 1
        literal_skips.append(skipped)

    fast = Counter()
    fast_skips = []
    draws = DrawBuffer(stream(15))
    for _ in range(m):
        s = base.copy()
        kind = _fast_forward(s, draws, params, active)
        fast[(kind, s.event_log[-1].leaf_interval[0])] += 1
        fast_skips.append(s.steps - 1)

    expected = {
        ("freeze", 0.0): 0.3 * 0.5,
        ("freeze", 0.6): 0.3 * 0.5,
        ("split", 0.0): 0.7 * 0.5,
        ("split", 0.6): 0.7 * 0.5,
    }
    assert set(literal) == set(fast) == set(expected)
    assert chi_square_gof(literal, expected)[2] > 1e-3
    assert chi_square_gof(fast, expected)[2] > 1e-3
    mean_skip = (1 - active) / active
    sd = math.sqrt(1 - active) / active / math.sqrt(m)
    assert abs(np.mean(literal_skips) - mean_skip) < 4 * sd
    assert abs(np.mean(fast_skips) - mean_skip) < 4 * sd


def test_run_god_cap_and_event_stop():
    with pytest.raises(IterationCapError):
        run_god(ModelParams(n=50), stream(16), max_iterations=3)
    st_, outcome = run_god(ModelParams(n=50), stream(16), max_effective_events=4)
    assert outcome == "reached_events" and st_.effective_events == 4
    st_, outcome = run_god(ModelParams(n=1), stream(16))
    assert outcome == "reached_n" and st_.steps == 0


def test_run_god_reproducible():
    a, _ = run_god(ModelParams(delta=0.2, n=8), stream(17, 2))
    b, _ = run_god(ModelParams(delta=0.2, n=8), stream(17, 2))
    assert a.tree == b.tree and a.event_log == b.event_log


def test_event_log_jsonl():
    log = [
        Event(1, "split", (0.0, 1.0), 0.25),
        Event(2, "freeze", (0.0, 0.25)),
        Event(3, "cancelled", None, None, 7),
    ]
    lines = [json.loads(x) for x in events_to_jsonl(log).splitlines()]
    assert lines[0] == {"step": 1, "kind": "split", "leaf_interval": [0.0, 1.0], "b": 0.25}
    assert lines[1] == {"step": 2, "kind": "freeze", "leaf_interval": [0.0, 0.25]}
    assert lines[2] == {"step": 3, "kind": "cancelled", "count": 7}
    assert events_to_jsonl([]) == ""

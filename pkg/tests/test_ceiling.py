import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from odoflow import reports
from odoflow.ceiling import (
    CeilingSpec,
    FlowPoint,
    NeedsDepth,
    OrbitTable,
    StopReason,
    SuspensionSystem,
    birkhoff_sums,
    ceiling_value,
    flow_apply,
    forward_horizon,
    k_index,
    k_table_rows,
    k_value,
)
from odoflow.errors import DomainError, HorizonExceeded
from odoflow.space import CoordinateScheme, first_open_index

import oracles

PAPER3 = CoordinateScheme.paper(3)
FACT = CeilingSpec.factorial()


@pytest.mark.parametrize("n, expected", [(4, 288), (5, 34560), (6, 24883200)])
def test_k_value_examples(n, expected):
    assert k_value(n) == expected


def test_k_value_matches_factorial_products():
    for n in range(4, 40):
        assert k_value(n) == oracles.big_k(n)
        assert k_value(n + 1) // k_value(n) == oracles.big_k(n + 1) // oracles.big_k(n)


def test_k_value_domain():
    with pytest.raises(DomainError):
        k_value(3)


def test_k_index():
    assert k_index(287) is None
    assert k_index(288) == 4
    assert k_index(k_value(9) - 1) == 8


def test_ceiling_examples():
    assert ceiling_value(FACT, PAPER3, (0, 2, 5)) == 24883200
    assert ceiling_value(FACT, PAPER3, (1, 2, 5)) == k_value(13)
    assert ceiling_value(FACT, PAPER3, (1, 3, 2)) == NeedsDepth(k_value(16))
    assert ceiling_value(FACT, PAPER3, (1, 3, 7)) == NeedsDepth(k_value(16))
    assert ceiling_value(CeilingSpec.of_constant(3), PAPER3, (1, 3, 7)) == 3


def test_factorial_ceiling_requires_paper_sizes():
    with pytest.raises(DomainError):
        SuspensionSystem(CoordinateScheme.bernoulli("1/2", 3), FACT)


def test_ceiling_index_bit_length_recovers_first_open_coordinate():
    scheme = CoordinateScheme.paper(4)
    index_of = {k_value(q): q for q in range(4, 40)}
    for w in scheme.prefixes():
        v = ceiling_value(FACT, scheme, w)
        if isinstance(v, NeedsDepth):
            continue
        q = index_of[v]
        assert v >= 288
        assert q.bit_length() - 1 == first_open_index(scheme, w) + 1


def test_birkhoff_forward_example():
    trace = birkhoff_sums(FACT, PAPER3, (0, 0, 0), "forward", max_steps=3)
    assert trace.sums == [288, 288 + k_value(8), 288 + k_value(8) + k_value(5)]
    assert trace.endpoints == [(1, 0, 0), (0, 1, 0), (1, 1, 0)]
    assert trace.stop_reason is StopReason.LIMIT_REACHED


def test_birkhoff_constant_ceiling():
    trace = birkhoff_sums(CeilingSpec.of_constant(1), PAPER3, (0, 0, 0), max_steps=5)
    assert trace.sums == [1, 2, 3, 4, 5]


def test_birkhoff_backward_from_zero_word():
    trace = birkhoff_sums(FACT, PAPER3, (0, 0, 0), "backward")
    assert trace.sums == []
    assert trace.stop_reason is StopReason.UNDERFLOW


def test_birkhoff_stops_on_needs_depth():
    trace = birkhoff_sums(FACT, PAPER3, (0, 0, 0))
    assert trace.stop_reason is StopReason.NEEDS_DEPTH
    assert trace.pending_bound == k_value(16)
    # orbit runs until the first word with x_1, x_2 full
    assert len(trace.sums) == 7


def test_birkhoff_constant_overflow_records_last_sum():
    trace = birkhoff_sums(CeilingSpec.of_constant(1), PAPER3, (1, 3, 7))
    assert trace.sums == [1]
    assert trace.endpoints == [None]
    assert trace.stop_reason is StopReason.OVERFLOW


@pytest.mark.parametrize("depth", [3, 4])
def test_birkhoff_matches_oracle(depth):
    scheme = CoordinateScheme.paper(depth)
    sizes = oracles.paper_sizes(depth)
    for w in scheme.prefixes():
        for d in ("forward", "backward"):
            trace = birkhoff_sums(FACT, scheme, w, d)
            expected = oracles.orbit_sums(w, sizes, d)
            assert list(zip(trace.sums, trace.endpoints)) == expected


@pytest.mark.parametrize("depth", [3, 4])
def test_orbit_table_agrees_with_orbit_walk(depth):
    scheme = CoordinateScheme.paper(depth)
    table = OrbitTable(scheme, FACT)
    for w in scheme.prefixes():
        i = scheme.index(w)
        top, pending = table.forward_span(i)
        fwd = [(table.sums[j] - table.sums[i], scheme.prefix_at(j)) for j in range(i + 1, top + 1)]
        trace = birkhoff_sums(FACT, scheme, w, "forward")
        assert fwd == list(zip(trace.sums, trace.endpoints))
        assert pending == trace.pending_bound
        bottom, pending = table.backward_span(i)
        bwd = [(table.sums[i] - table.sums[j], scheme.prefix_at(j)) for j in range(i - 1, bottom - 1, -1)]
        trace = birkhoff_sums(FACT, scheme, w, "backward")
        assert bwd == list(zip(trace.sums, trace.endpoints))
        assert pending == trace.pending_bound


@pytest.mark.parametrize("word, expected", [((0, 0, 0), 63), ((1, 3, 7), 0), ((1, 0, 0), 62)])
def test_forward_horizon(word, expected):
    assert forward_horizon(PAPER3, word) == expected


def test_flow_examples():
    p = FlowPoint((0, 0, 0), 0)
    assert flow_apply(FACT, PAPER3, p, Fraction(287, 2)) == FlowPoint((0, 0, 0), Fraction(287, 2))
    assert flow_apply(FACT, PAPER3, p, 288) == FlowPoint((1, 0, 0), 0)
    assert flow_apply(FACT, PAPER3, FlowPoint((1, 0, 0), 5), -6) == FlowPoint((0, 0, 0), 287)


def test_flow_identity_and_horizon():
    p = FlowPoint((0, 1, 2), Fraction(7, 3))
    assert flow_apply(FACT, PAPER3, p, 0) == p
    with pytest.raises(HorizonExceeded) as err:
        flow_apply(FACT, PAPER3, FlowPoint((0, 0, 0), 0), -1)
    assert err.value.point == (0, 0, 0)
    with pytest.raises(HorizonExceeded):
        flow_apply(FACT, PAPER3, FlowPoint((0, 0, 0), 0), k_value(20))


def test_flow_height_below_needs_depth_bound_stays_put():
    system = SuspensionSystem(PAPER3, FACT)
    p = system.point((1, 3, 0), 5)
    assert system.flow(p, 100) == FlowPoint((1, 3, 0), 105)


def test_point_validation():
    system = SuspensionSystem(PAPER3, FACT)
    with pytest.raises(DomainError):
        system.point((0, 0, 0), 288)


def _random_point(rng, system):
    w = system.scheme.prefix_at(rng.randrange(system.scheme.total))
    v = system.f(w)
    top = v if isinstance(v, int) else 1000
    return FlowPoint(w, Fraction(rng.randrange(top * 4), 4))


@settings(max_examples=200)
@given(st.randoms(use_true_random=False))
def test_group_law(rng):
    system = SuspensionSystem(CoordinateScheme.paper(4), FACT)
    p = _random_point(rng, system)
    scale = rng.choice([10, 10 ** 4, k_value(6), k_value(9)])
    t1 = Fraction(rng.randrange(-scale, scale), 3)
    t2 = Fraction(rng.randrange(-scale, scale), 5)
    try:
        lhs = system.flow(p, t1 + t2)
        rhs = system.flow(system.flow(p, t2), t1)
    except HorizonExceeded:
        return
    assert lhs == rhs


def test_flow_injective_on_common_time():
    rng = random.Random(7)
    system = SuspensionSystem(CoordinateScheme.paper(4), FACT)
    pts = {_random_point(rng, system) for _ in range(200)}
    t = Fraction(12345, 7)
    images = [system.flow(p, t) for p in pts]
    assert len(set(images)) == len(pts)


def test_k_table_csv():
    text = reports.k_table_csv(k_table_rows(6))
    assert text == "n,K_n\n4,288\n5,34560\n6,24883200\n"

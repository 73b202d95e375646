"""Sequential model: folding, equivalence, commutativity."""
from itertools import combinations, permutations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dyncon import (
    CapacityError,
    MalformedInputError,
    OpInstance,
    apply_sequence,
    commutes_in,
    commutes_with_all_subsets,
    commutes_with_set,
    make_spec,
    orderings_equivalent,
)
from conftest import op


def test_op_identity_ignores_payload():
    a = op(1, 0, "append", "a")
    b = op(1, 0, "append", "b")
    assert a == b and hash(a) == hash(b)
    assert a.op_id == "p1.0"


def test_op_json_round_trip():
    a = op(2, 3, "swap", 0, 2)
    assert OpInstance.from_json(a.to_json()) == a
    assert OpInstance.from_json(a.to_json()).args == (0, 2)


def test_apply_sequence_responses_and_state():
    spec = make_spec("list")
    seq = (op(0, 0, "append", "a"), op(1, 0, "append", "b"), op(0, 1, "readLast"))
    out = apply_sequence(spec, seq)
    assert out.final_state == ("a", "b")
    assert out.responses[seq[2]] == "b"


def test_apply_sequence_rejects_duplicates():
    spec = make_spec("counter")
    a = op(0, 0, "inc")
    with pytest.raises(MalformedInputError):
        apply_sequence(spec, (a, a))


def test_orderings_equivalent_requires_permutation():
    spec = make_spec("counter")
    with pytest.raises(MalformedInputError):
        orderings_equivalent(spec, (op(0, 0, "inc"),), (op(1, 0, "inc"),))


def test_commutes_in_examples():
    spec = make_spec("list")
    l = (op(2, 0, "append", "a"), op(1, 0, "append", "b"), op(3, 0, "append", "a"))
    sw = op(3, 1, "swap", 0, 2)
    rl = op(2, 1, "readLast")
    # swapping equal endpoints of (a, b, a) is invisible to readLast
    assert commutes_in(spec, l, sw, (rl,))
    # but with (a, a, b) the read observes the swap
    l2 = (op(2, 0, "append", "a"), op(3, 0, "append", "a"), op(1, 0, "append", "b"))
    assert not commutes_in(spec, l2, sw, (rl,))


def test_appends_do_not_commute_with_each_other():
    spec = make_spec("list")
    a = op(0, 0, "append", "a")
    b = op(1, 0, "append", "b")
    assert not commutes_in(spec, (), a, (b,))


def test_commutes_preconditions():
    spec = make_spec("counter")
    a = op(0, 0, "inc")
    with pytest.raises(MalformedInputError):
        commutes_in(spec, (a,), a, ())
    with pytest.raises(MalformedInputError):
        commutes_with_set(spec, (), a, {a})


def test_all_subsets_cap():
    spec = make_spec("counter")
    others = [op(1, i, "inc") for i in range(5)]
    with pytest.raises(CapacityError):
        commutes_with_all_subsets(spec, (), op(0, 0, "inc"), others, cap=4)


def _random_ops(draw, spec_name: str, max_ops: int = 5):
    methods = {
        "counter": [("inc", ()), ("read", ())],
        "register": [("write", ("x",)), ("write", ("y",)), ("read", ())],
        "list": [("append", ("a",)), ("append", ("b",)), ("readLast", ()), ("readAll", ())],
    }[spec_name]
    n = draw(st.integers(1, max_ops))
    ops = []
    for i in range(n):
        method, args = draw(st.sampled_from(methods))
        ops.append(OpInstance(i % 3, i // 3, method, args))
    return ops


@st.composite
def ops_and_spec(draw):
    name = draw(st.sampled_from(["counter", "register", "list"]))
    return name, _random_ops(draw, name)


@settings(max_examples=150, deadline=None)
@given(ops_and_spec(), st.randoms(use_true_random=False))
def test_equivalence_is_an_equivalence_relation(pair, rnd):
    name, ops = pair
    spec = make_spec(name)
    perm1 = list(ops)
    perm2 = list(ops)
    rnd.shuffle(perm1)
    rnd.shuffle(perm2)
    assert orderings_equivalent(spec, perm1, perm1)
    assert orderings_equivalent(spec, perm1, perm2) == orderings_equivalent(
        spec, perm2, perm1
    )


@settings(max_examples=100, deadline=None)
@given(ops_and_spec())
def test_all_subsets_matches_its_definition(pair):
    """commutes_with_all_subsets equals the spelled-out double enumeration."""
    name, ops = pair
    spec = make_spec(name)
    target = OpInstance(3, 0, ops[0].method, ops[0].args)
    others = ops[:4]
    expected = all(
        commutes_in(spec, (), target, perm)
        for size in range(len(others) + 1)
        for subset in combinations(others, size)
        for perm in permutations(subset)
    )
    assert commutes_with_all_subsets(spec, (), target, others) == expected


@settings(max_examples=100, deadline=None)
@given(ops_and_spec())
def test_set_commutativity_implies_each_subset_of_it(pair):
    name, ops = pair
    spec = make_spec(name)
    target = OpInstance(3, 0, ops[0].method, ops[0].args)
    others = ops[:4]
    if commutes_with_all_subsets(spec, (), target, others):
        for size in range(len(others) + 1):
            for subset in combinations(others, size):
                assert commutes_with_set(spec, (), target, subset)


@settings(max_examples=100, deadline=None)
@given(ops_and_spec())
def test_commutativity_preserved_when_prefix_absorbs_a_member(pair):
    """If op commutes with every subset of S in l, it still does after moving
    one member of S onto the prefix."""
    name, ops = pair
    spec = make_spec(name)
    target = OpInstance(3, 0, ops[0].method, ops[0].args)
    others = ops[:4]
    if not commutes_with_all_subsets(spec, (), target, others):
        return
    for moved in others:
        rest = [o for o in others if o != moved]
        assert commutes_with_all_subsets(spec, (moved,), target, rest)

"""Tests for tree codes, their game semantics and the level bookkeeping."""

import random

import pytest

from wfgames.borelcode import (
    Base,
    BorelCode,
    HierarchyLevel,
    Intersect,
    PointSpace,
    Union,
    classify_expr,
    code_from_expr,
    code_from_json,
    code_to_json,
    coded_set,
    eval_expr,
    expr_from_code,
    expr_from_json,
    expr_to_json,
    pad_to_canonical,
    strategy_enum_solve,
    validate_expr,
)
from wfgames.errors import BudgetError, ValidationError
from wfgames.trees import TreeEmbedding, WellFoundedTree, canonical, rank


def space_of(n: int) -> PointSpace:
    return PointSpace(tuple(str(i) for i in range(n)))


def random_code(rng: random.Random, size: int, space: PointSpace) -> BorelCode:
    parent = {0: None}
    for node in range(1, size):
        parent[node] = rng.randrange(node)
    t = WellFoundedTree(parent)
    labels = {
        leaf: frozenset(p for p in space.points if rng.random() < 0.5)
        for leaf in t.leaves()
    }
    return BorelCode(t, space, labels)


def random_expr(rng: random.Random, space: PointSpace, depth: int, fanout: int):
    if depth == 0 or rng.random() < 0.3:
        return Base(p for p in space.points if rng.random() < 0.5)
    op = rng.choice([Union, Intersect])
    return op(
        [
            random_expr(rng, space, depth - 1, fanout)
            for _ in range(rng.randint(1, fanout))
        ]
    )


class TestCodedSet:
    def test_root_only_returns_label(self):
        space = space_of(3)
        c = BorelCode(WellFoundedTree({0: None}), space, {0: {"0", "2"}})
        assert coded_set(c) == {"0", "2"}

    def test_rank_two_is_intersection(self):
        space = space_of(3)
        c = BorelCode(
            WellFoundedTree({0: None, 1: 0, 2: 0}),
            space,
            {1: {"0", "1"}, 2: {"1", "2"}},
        )
        assert coded_set(c) == {"1"}

    def test_depth_two_is_intersection_of_unions(self):
        space = space_of(4)
        t = WellFoundedTree({0: None, 1: 0, 2: 0, 3: 1, 4: 1, 5: 2, 6: 2})
        labels = {3: {"0"}, 4: {"1"}, 5: {"1"}, 6: {"2"}}
        c = BorelCode(t, space, labels)
        assert coded_set(c) == ({"0", "1"} & {"1", "2"})

    def test_unlabeled_leaf_rejected(self):
        space = space_of(2)
        with pytest.raises(ValidationError, match="unlabeled"):
            BorelCode(WellFoundedTree({0: None, 1: 0}), space, {})

    def test_label_on_internal_node_rejected(self):
        space = space_of(2)
        with pytest.raises(ValidationError, match="non-leaf"):
            BorelCode(
                WellFoundedTree({0: None, 1: 0}), space, {0: {"0"}, 1: {"0"}}
            )

    def test_label_outside_space_rejected(self):
        space = space_of(2)
        with pytest.raises(ValidationError):
            BorelCode(WellFoundedTree({0: None}), space, {0: {"9"}})


class TestStrategyEnumOracle:
    def test_root_only_member(self):
        space = space_of(2)
        c = BorelCode(WellFoundedTree({0: None}), space, {0: {"0"}})
        assert strategy_enum_solve(c, "0")
        assert not strategy_enum_solve(c, "1")

    def test_single_empty_leaf_never_won(self):
        space = space_of(2)
        c = BorelCode(WellFoundedTree({0: None, 1: 0}), space, {1: set()})
        for x in space.points:
            assert not strategy_enum_solve(c, x)

    def test_agrees_with_coded_set(self):
        rng = random.Random(42)
        space = space_of(4)
        for _ in range(60):
            c = random_code(rng, rng.randint(1, 10), space)
            member = coded_set(c)
            for x in space.points:
                assert strategy_enum_solve(c, x) == (x in member)

    def test_budget(self):
        space = space_of(2)
        c = BorelCode(WellFoundedTree({0: None}), space, {0: {"0"}})
        with pytest.raises(BudgetError):
            strategy_enum_solve(c, "0", node_budget=0)

    def test_unknown_point(self):
        space = space_of(2)
        c = BorelCode(WellFoundedTree({0: None}), space, {0: {"0"}})
        with pytest.raises(ValidationError):
            strategy_enum_solve(c, "7")


class TestExpressions:
    def test_eval_and_classify_base(self):
        e = Base({"0"})
        assert eval_expr(e) == {"0"}
        assert classify_expr(e) == HierarchyLevel(0, 0)

    def test_intersect_of_bases(self):
        e = Intersect([Base({"0", "1"}), Base({"1", "2"})])
        assert eval_expr(e) == {"1"}
        assert classify_expr(e).pi_level == 1

    def test_union_of_mixed(self):
        e = Union([Intersect([Base({"0"}), Base({"1"})]), Base({"2"})])
        assert eval_expr(e) == {"2"}
        assert classify_expr(e).sigma_level == 2

    def test_union_of_bases_is_sigma_one(self):
        e = Union([Base({"0"}), Base({"1"})])
        lvl = classify_expr(e)
        assert lvl.sigma_level == 1
        assert lvl.pi_level == 2

    def test_validate_fanout(self):
        e = Union([Base({"0"})] * 9)
        with pytest.raises(ValidationError, match="fan-out"):
            validate_expr(e)
        validate_expr(e, max_fanout=9)

    def test_validate_empty_args(self):
        with pytest.raises(ValidationError, match="non-empty"):
            validate_expr(Union([]))


class TestCodeFromExpr:
    def test_base_becomes_root_only(self):
        space = space_of(3)
        c = code_from_expr(Base({"0"}), space)
        assert len(c.tree) == 1
        assert rank(c.tree) == 1
        assert coded_set(c) == {"0"}

    def test_intersection_of_bases_becomes_rank_two(self):
        space = space_of(3)
        e = Intersect([Base({"0", "1"}), Base({"1"}), Base({"1", "2"})])
        c = code_from_expr(e, space)
        assert rank(c.tree) == 2
        assert len(c.tree.children(c.tree.root)) == 3
        assert coded_set(c) == {"1"}

    def test_intersect_of_unions_becomes_rank_three(self):
        space = space_of(4)
        e = Intersect(
            [
                Union([Base({"0"}), Base({"1"})]),
                Union([Base({"1"}), Base({"2"})]),
            ]
        )
        c = code_from_expr(e, space)
        assert rank(c.tree) == 3
        assert coded_set(c) == eval_expr(e)

    def test_random_round_trip_and_rank_bound(self):
        rng = random.Random(7)
        space = space_of(5)
        for _ in range(80):
            e = random_expr(rng, space, rng.randint(0, 4), 4)
            c = code_from_expr(e, space)
            assert coded_set(c) == eval_expr(e)
            assert rank(c.tree) <= classify_expr(e).pi_level + 1


class TestExprFromCode:
    def test_root_only_gives_base(self):
        space = space_of(3)
        c = BorelCode(WellFoundedTree({0: None}), space, {0: {"1"}})
        e = expr_from_code(c)
        assert isinstance(e, Base)
        assert classify_expr(e).pi_level == 0

    def test_rank_two_gives_intersection_of_bases(self):
        space = space_of(3)
        c = BorelCode(
            WellFoundedTree({0: None, 1: 0, 2: 0}),
            space,
            {1: {"0"}, 2: {"0", "1"}},
        )
        e = expr_from_code(c)
        assert isinstance(e, Intersect)
        assert all(isinstance(a, Base) for a in e.args)
        assert classify_expr(e).pi_level == 1
        assert eval_expr(e) == coded_set(c)

    def test_random_round_trip_and_level_bound(self):
        rng = random.Random(21)
        space = space_of(4)
        for _ in range(80):
            c = random_code(rng, rng.randint(1, 10), space)
            e = expr_from_code(c)
            assert eval_expr(e) == coded_set(c)
            assert classify_expr(e).pi_level <= rank(c.tree) - 1


class TestPadToCanonical:
    def test_root_only_padded(self):
        space = space_of(3)
        c = BorelCode(WellFoundedTree({0: None}), space, {0: {"0", "1"}})
        padded = pad_to_canonical(c, 2)
        assert padded.tree == canonical(2)
        assert coded_set(padded) == {"0", "1"}
        # every leaf inherits the source label by the copy rule
        assert all(lbl == frozenset({"0", "1"}) for lbl in padded.labels.values())

    def test_already_canonical_identity_embedding(self):
        rng = random.Random(3)
        space = space_of(3)
        t = canonical(2)
        labels = {leaf: {"0"} if rng.random() < 0.5 else {"1"} for leaf in t.leaves()}
        c = BorelCode(t, space, labels)
        ident = TreeEmbedding(t, t, {n: n for n in t.nodes()})
        padded = pad_to_canonical(c, 2, embedding=ident)
        assert padded.labels == c.labels
        assert coded_set(padded) == coded_set(c)

    def test_random_codes_preserved(self):
        rng = random.Random(17)
        space = space_of(3)
        for _ in range(60):
            c = random_code(rng, rng.randint(1, 8), space)
            width = max(
                [1] + [len(c.tree.children(n)) for n in c.tree.nodes()]
            )
            m = width * (rank(c.tree) - 1)
            padded = pad_to_canonical(c, m)
            assert padded.tree == canonical(m)
            assert coded_set(padded) == coded_set(c)

    def test_padding_to_strictly_larger_canonical(self):
        space = space_of(2)
        c = BorelCode(
            WellFoundedTree({0: None, 1: 0, 2: 0}), space, {1: {"0"}, 2: {"0", "1"}}
        )
        padded = pad_to_canonical(c, 4)
        assert coded_set(padded) == coded_set(c)

    def test_no_embedding_available(self):
        space = space_of(2)
        c = BorelCode(
            WellFoundedTree({0: None, 1: 0, 2: 0}), space, {1: {"0"}, 2: {"1"}}
        )
        with pytest.raises(ValidationError, match="no strong embedding"):
            pad_to_canonical(c, 1)

    def test_weak_embedding_rejected(self):
        space = space_of(2)
        t = WellFoundedTree({0: None, 1: 0})
        c = BorelCode(t, space, {1: {"0"}})
        skip = TreeEmbedding(t, canonical(2), {0: 0, 1: 3})
        with pytest.raises(ValidationError, match="not strong"):
            pad_to_canonical(c, 2, embedding=skip)


class TestJson:
    def test_code_round_trip(self):
        rng = random.Random(5)
        space = space_of(3)
        for _ in range(20):
            c = random_code(rng, rng.randint(1, 8), space)
            assert code_from_json(code_to_json(c)) == c

    def test_expr_round_trip(self):
        rng = random.Random(6)
        space = space_of(3)
        for _ in range(20):
            e = random_expr(rng, space, 3, 3)
            assert expr_from_json(expr_to_json(e)) == e

    def test_malformed_code(self):
        with pytest.raises(ValidationError):
            code_from_json({"tree": {"nodes": [{"id": 0, "parent": None}]}})
        with pytest.raises(ValidationError):
            code_from_json(
                {
                    "tree": {"nodes": [{"id": 0, "parent": None}]},
                    "space": ["a"],
                    "labels": {"zero": []},
                }
            )

    def test_malformed_expr(self):
        with pytest.raises(ValidationError):
            expr_from_json({"op": "complement", "args": []})
        with pytest.raises(ValidationError):
            expr_from_json({"op": "base"})

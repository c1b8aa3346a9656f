"""Leaf-labeled tree codes over a finite point space, with game semantics.

A code is a well-founded tree whose leaves carry subsets of a finite point
space.  A point belongs to the coded set when the second player wins the
alternating descent game on the tree: the first player moves from the root
(even depths), the second player answers (odd depths), and a run reaching
a leaf is won by the second player exactly when the point lies in that
leaf's label.  Backward induction turns this into intersections at
even-depth nodes and unions at odd-depth ones.

``code_from_expr`` and ``expr_from_code`` translate between codes and
plain union/intersection expressions, keeping the tree rank and the
syntactic hierarchy level of the expression within one of each other.
``pad_to_canonical`` rewrites a code onto a canonical tree without
changing the coded set.

At finite scale every subset of the space is clopen, so the semantic
hierarchy collapses; what these operations verify is the structural
bookkeeping between tree ranks and expression levels, which is exactly
their constructive content.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional, Union as TUnion

from .errors import BudgetError, ValidationError
from .trees import (
    TreeEmbedding,
    WellFoundedTree,
    canonical,
    decreasing_sequences,
    embed,
    node_ranks,
    tree_from_json,
    tree_to_json,
    validate_embedding,
)

DEFAULT_ORACLE_NODE_BUDGET = 12
DEFAULT_MAX_FANOUT = 8


@dataclass(frozen=True)
class PointSpace:
    """Finite ordered list of distinct point labels."""

    points: tuple[str, ...]

    def __post_init__(self):
        if not self.points:
            raise ValidationError("point space must be non-empty")
        if len(set(self.points)) != len(self.points):
            raise ValidationError("point space labels must be distinct")

    def subset(self, labels) -> frozenset[str]:
        s = frozenset(labels)
        stray = s - set(self.points)
        if stray:
            raise ValidationError(f"labels {sorted(stray)} are not in the point space")
        return s

    @property
    def full(self) -> frozenset[str]:
        return frozenset(self.points)


class BorelCode:
    """A tree together with a labeling of its leaves by subsets of a space."""

    __slots__ = ("tree", "space", "labels")

    def __init__(self, tree: WellFoundedTree, space: PointSpace, labels: dict):
        leaves = set(tree.leaves())
        if set(labels) != leaves:
            missing = leaves - set(labels)
            extra = set(labels) - leaves
            if missing:
                raise ValidationError(f"unlabeled leaves: {sorted(missing)}")
            raise ValidationError(f"labels on non-leaf nodes: {sorted(extra)}")
        self.tree = tree
        self.space = space
        self.labels = {leaf: space.subset(labels[leaf]) for leaf in labels}

    def __eq__(self, other):
        if not isinstance(other, BorelCode):
            return NotImplemented
        return (
            self.tree == other.tree
            and self.space == other.space
            and self.labels == other.labels
        )

    def __repr__(self):
        return f"BorelCode({len(self.tree)} nodes, {len(self.space.points)} points)"


def coded_set(code: BorelCode) -> frozenset[str]:
    """The set denoted by the code under game semantics.

    Computed bottom-up: a leaf denotes its label; an internal node at even
    depth (first player to move) denotes the intersection of its children,
    one at odd depth the union.  A root-only code denotes its root label.
    """
    t = code.tree
    value: dict[int, frozenset[str]] = {}
    for node in sorted(t.nodes(), key=t.depth, reverse=True):
        if t.is_leaf(node):
            value[node] = code.labels[node]
        else:
            kids = [value[k] for k in t.children(node)]
            if t.depth(node) % 2 == 0:
                value[node] = frozenset.intersection(*kids)
            else:
                value[node] = frozenset.union(*kids)
    return value[t.root]


def strategy_enum_solve(
    code: BorelCode, x: str, *, node_budget: int = DEFAULT_ORACLE_NODE_BUDGET
) -> bool:
    """Oracle for ``x in coded_set(code)`` by explicit strategy enumeration.

    Enumerates every choice function on the answering player's positions
    (odd-depth internal nodes) and accepts if some choice defeats every
    play of the descending player.  Independent of the backward-induction
    path; exponential, hence the small node budget.
    """
    t = code.tree
    if len(t) > node_budget:
        raise BudgetError(
            f"code tree has {len(t)} nodes, exceeding the oracle budget of {node_budget}"
        )
    if x not in code.space.points:
        raise ValidationError(f"point {x!r} is not in the space")
    odd_internal = [
        n for n in t.nodes() if not t.is_leaf(n) and t.depth(n) % 2 == 1
    ]
    option_lists = [t.children(n) for n in odd_internal]

    def wins(node: int, choice: dict) -> bool:
        if t.is_leaf(node):
            return x in code.labels[node]
        if t.depth(node) % 2 == 0:
            return all(wins(k, choice) for k in t.children(node))
        return wins(choice[node], choice)

    for picks in itertools.product(*option_lists):
        if wins(t.root, dict(zip(odd_internal, picks))):
            return True
    return False


# --- union/intersection expressions -----------------------------------------


@dataclass(frozen=True)
class Base:
    points: frozenset[str]

    def __init__(self, points):
        object.__setattr__(self, "points", frozenset(points))


@dataclass(frozen=True)
class Union:
    args: tuple["SetExpr", ...]

    def __init__(self, args):
        object.__setattr__(self, "args", tuple(args))


@dataclass(frozen=True)
class Intersect:
    args: tuple["SetExpr", ...]

    def __init__(self, args):
        object.__setattr__(self, "args", tuple(args))


SetExpr = TUnion[Base, Union, Intersect]


@dataclass(frozen=True)
class HierarchyLevel:
    """Least syntactic levels of an expression (base sets sit at (0, 0))."""

    sigma_level: int
    pi_level: int


def validate_expr(e: SetExpr, *, max_fanout: int = DEFAULT_MAX_FANOUT) -> None:
    """Check the complement-free normal form: non-empty argument lists with
    fan-out at most ``max_fanout``."""
    if isinstance(e, Base):
        return
    if isinstance(e, (Union, Intersect)):
        if not e.args:
            raise ValidationError("argument lists must be non-empty")
        if len(e.args) > max_fanout:
            raise ValidationError(
                f"fan-out {len(e.args)} exceeds the configured bound of {max_fanout}"
            )
        for a in e.args:
            validate_expr(a, max_fanout=max_fanout)
        return
    raise ValidationError(f"not a set expression: {e!r}")


def eval_expr(e: SetExpr) -> frozenset[str]:
    if isinstance(e, Base):
        return e.points
    if isinstance(e, Union):
        return frozenset.union(*(eval_expr(a) for a in e.args))
    if isinstance(e, Intersect):
        return frozenset.intersection(*(eval_expr(a) for a in e.args))
    raise ValidationError(f"not a set expression: {e!r}")


def classify_expr(e: SetExpr) -> HierarchyLevel:
    """Least syntactic (sigma, pi) levels, bottom-up.

    A union of arguments with pi levels ``p_i`` is sigma at
    ``max(1, max_i p_i + 1)`` and pi one above that; intersections are
    dual.  Connectives are not flattened: a union nested directly inside
    a union is charged one extra level, as the grammar reads.
    """
    if isinstance(e, Base):
        return HierarchyLevel(0, 0)
    if isinstance(e, Union):
        s = max([1] + [classify_expr(a).pi_level + 1 for a in e.args])
        return HierarchyLevel(s, s + 1)
    if isinstance(e, Intersect):
        p = max([1] + [classify_expr(a).sigma_level + 1 for a in e.args])
        return HierarchyLevel(p + 1, p)
    raise ValidationError(f"not a set expression: {e!r}")


def code_from_expr(
    e: SetExpr, space: PointSpace, *, max_fanout: int = DEFAULT_MAX_FANOUT
) -> BorelCode:
    """Build a code denoting ``eval_expr(e)``.

    Mirrors the level-by-level construction: a base set becomes a
    root-only code; an intersection hangs one subtree per argument under
    the root; a union is reached through a single intermediate node so
    the answering player picks the disjunct.  The resulting tree rank is
    at most ``classify_expr(e).pi_level + 1``.
    """
    validate_expr(e, max_fanout=max_fanout)

    # nested (tag, payload) form: ("leaf", label) or ("node", children)
    def conj(ex):
        if isinstance(ex, Base):
            return ("leaf", space.subset(ex.points))
        if isinstance(ex, Intersect):
            return ("node", [child(a) for a in ex.args])
        return ("node", [child(ex)])

    def child(ex):
        if isinstance(ex, Base):
            return ("leaf", space.subset(ex.points))
        if isinstance(ex, Union):
            return ("node", [conj(a) for a in ex.args])
        return ("node", [conj(ex)])

    shape = conj(e)
    parent: dict[int, Optional[int]] = {}
    labels: dict[int, frozenset[str]] = {}
    counter = itertools.count()

    def materialize(node_shape, par: Optional[int]) -> None:
        nid = next(counter)
        parent[nid] = par
        tag, payload = node_shape
        if tag == "leaf":
            labels[nid] = payload
        else:
            for sub in payload:
                materialize(sub, nid)

    materialize(shape, None)
    return BorelCode(WellFoundedTree(parent), space, labels)


def expr_from_code(c: BorelCode) -> SetExpr:
    """Read an expression back off a code.

    A root-only code gives its label as a base set.  Otherwise the root
    becomes an intersection over its children: a leaf child contributes
    its label directly, an internal child contributes the union, over its
    own children, of the expressions of the subcodes rooted there.  The
    pi level of the result is at most ``rank(tree) - 1``.
    """
    t = c.tree

    def subexpr(node: int) -> SetExpr:
        # expression for the subcode rooted at an even-parity position
        if t.is_leaf(node):
            return Base(c.labels[node])
        parts: list[SetExpr] = []
        for child in t.children(node):
            if t.is_leaf(child):
                parts.append(Base(c.labels[child]))
            else:
                parts.append(Union([subexpr(g) for g in t.children(child)]))
        return Intersect(parts)

    return subexpr(t.root)


def pad_to_canonical(
    c: BorelCode,
    m: int,
    *,
    embedding: Optional[TreeEmbedding] = None,
    node_budget: int | None = None,
) -> BorelCode:
    """Rewrite ``c`` as a code on ``canonical(m)`` with the same coded set.

    Needs an initial-segment-closed embedding of the code's tree into
    ``canonical(m)``.  If none is supplied, one is built by ``embed`` with
    the tree's maximal branching as the width, which requires
    ``width * (rank - 1) <= m``; any caller-provided strong embedding into
    ``canonical(m)`` works as well.

    Each leaf of the canonical tree looks at the deepest embedded node on
    its ancestor path: if that node is the image of a source leaf, the
    source label is copied; otherwise the label is empty at odd depths
    (an answering-player exit loses) and the full space at even depths
    (a descending-player exit is harmless).
    """
    budget = {} if node_budget is None else {"node_budget": node_budget}
    target = canonical(m, **budget)

    if embedding is None:
        width = max([1] + [len(c.tree.children(n)) for n in c.tree.nodes()])
        beta = node_ranks(c.tree)[c.tree.root]
        if width * beta > m:
            raise ValidationError(
                f"no strong embedding available: the built-in construction needs "
                f"canonical({width * beta}), which does not sit inside canonical({m})"
            )
        inner = embed(c.tree, width, **budget)
        # canonical(width*beta) is an initial-segment-closed subset of
        # canonical(m); re-index the sequences
        seqs_small = decreasing_sequences(width * beta)
        index_big = {s: i for i, s in enumerate(decreasing_sequences(m))}
        mapping = {
            src: index_big[seqs_small[img]] for src, img in inner.mapping.items()
        }
        embedding = TreeEmbedding(source=c.tree, target=target, mapping=mapping)
    else:
        if embedding.source != c.tree or embedding.target != target:
            raise ValidationError(
                "embedding must go from the code's tree into canonical(m)"
            )
        ok, witness = validate_embedding(embedding, strong=True)
        if not ok:
            raise ValidationError(
                f"embedding is not strong (initial-segment-closed); witness {witness}"
            )

    image = {v: k for k, v in embedding.mapping.items()}
    labels: dict[int, frozenset[str]] = {}
    for leaf in target.leaves():
        cur = leaf
        while cur not in image:
            cur = target.parent[cur]
        src_node = image[cur]
        if c.tree.is_leaf(src_node):
            labels[leaf] = c.labels[src_node]
        elif target.depth(cur) % 2 == 1:
            labels[leaf] = frozenset()
        else:
            labels[leaf] = c.space.full
    return BorelCode(target, c.space, labels)


# --- JSON --------------------------------------------------------------------


def code_to_json(c: BorelCode) -> dict:
    return {
        "tree": tree_to_json(c.tree),
        "space": list(c.space.points),
        "labels": {str(leaf): sorted(c.labels[leaf]) for leaf in sorted(c.labels)},
    }


def code_from_json(obj: object) -> BorelCode:
    if not isinstance(obj, dict):
        raise ValidationError("code JSON must be an object")
    for key in ("tree", "space", "labels"):
        if key not in obj:
            raise ValidationError(f'code JSON is missing "{key}"')
    tree = tree_from_json(obj["tree"])
    space_points = obj["space"]
    if not isinstance(space_points, list) or not all(
        isinstance(p, str) for p in space_points
    ):
        raise ValidationError('"space" must be an array of strings')
    space = PointSpace(tuple(space_points))
    raw = obj["labels"]
    if not isinstance(raw, dict):
        raise ValidationError('"labels" must be an object')
    labels = {}
    for key, val in raw.items():
        try:
            leaf = int(key)
        except ValueError:
            raise ValidationError(f"label key {key!r} is not a node id") from None
        if not isinstance(val, list):
            raise ValidationError(f"label for leaf {key} must be an array")
        labels[leaf] = val
    return BorelCode(tree, space, labels)


def expr_to_json(e: SetExpr) -> dict:
    if isinstance(e, Base):
        return {"op": "base", "set": sorted(e.points)}
    if isinstance(e, Union):
        return {"op": "union", "args": [expr_to_json(a) for a in e.args]}
    if isinstance(e, Intersect):
        return {"op": "intersect", "args": [expr_to_json(a) for a in e.args]}
    raise ValidationError(f"not a set expression: {e!r}")


def expr_from_json(obj: object) -> SetExpr:
    if not isinstance(obj, dict) or "op" not in obj:
        raise ValidationError('expression JSON must be an object with an "op"')
    op = obj["op"]
    if op == "base":
        if "set" not in obj or not isinstance(obj["set"], list):
            raise ValidationError('base expression needs a "set" array')
        return Base(obj["set"])
    if op in ("union", "intersect"):
        if "args" not in obj or not isinstance(obj["args"], list):
            raise ValidationError(f'{op} expression needs an "args" array')
        args = [expr_from_json(a) for a in obj["args"]]
        return Union(args) if op == "union" else Intersect(args)
    raise ValidationError(f"unknown expression op {op!r}")

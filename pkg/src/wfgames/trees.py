"""Finite well-founded trees: ranks, canonical trees, embeddings.

A tree is a finite rooted partial order given by parent links.  Node ranks
follow the usual recursion (leaves have node rank 0, an internal node has
the maximum child rank plus one) and the rank of the tree is the root's
node rank plus one, so a single node has rank 1.

``canonical(m)`` builds the tree of all strictly decreasing sequences over
``{0, ..., m-1}`` ordered by end-extension.  These trees are universal
receivers: ``embed`` places any tree of rank ``beta + 1`` whose branching
is at most ``w`` inside ``canonical(w * beta)``, with an image closed
under initial segments.  ``witness_tree`` builds the family showing the
receiving index ``w * beta`` cannot be lowered, and ``brute_force_embed``
is the independent oracle: a complete search for an order embedding
(``p < q`` iff ``f(p) < f(q)``) between two explicit trees.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Mapping, Optional

from .errors import BudgetError, ValidationError

DEFAULT_NODE_BUDGET = 100_000
DEFAULT_EMBED_SRC_BUDGET = 8
DEFAULT_EMBED_DST_BUDGET = 64


class WellFoundedTree:
    """Finite rooted tree over integer node ids, stored as parent links.

    Exactly one node has parent ``None`` (the root); every other node must
    reach the root through finitely many parent links.  Construction
    validates the invariants and precomputes children, depths and leaves.
    """

    __slots__ = ("parent", "root", "_children", "_depth")

    def __init__(self, parent: Mapping[int, Optional[int]]):
        if not parent:
            raise ValidationError("tree must have at least one node")
        roots = []
        for node, par in parent.items():
            if not isinstance(node, int) or isinstance(node, bool) or node < 0:
                raise ValidationError(f"node id {node!r} is not a non-negative integer")
            if par is None:
                roots.append(node)
            elif par not in parent:
                raise ValidationError(f"node {node} has unknown parent {par}")
        if len(roots) != 1:
            raise ValidationError(f"tree must have exactly one root, found {len(roots)}")
        self.parent = dict(parent)
        self.root = roots[0]

        children: dict[int, list[int]] = {node: [] for node in parent}
        for node, par in parent.items():
            if par is not None:
                children[par].append(node)
        self._children = {node: tuple(sorted(kids)) for node, kids in children.items()}

        # Depths double as the acyclicity check: a parent cycle never
        # reaches the root, so the walk below would revisit a node.
        depth: dict[int, int] = {self.root: 0}
        for node in parent:
            trail = []
            cur = node
            while cur not in depth:
                trail.append(cur)
                cur = self.parent[cur]
                if cur in trail:
                    raise ValidationError(f"parent links contain a cycle through node {cur}")
            base = depth[cur]
            for offset, t in enumerate(reversed(trail), start=1):
                depth[t] = base + offset
        self._depth = depth

    def nodes(self) -> tuple[int, ...]:
        return tuple(sorted(self.parent))

    def children(self, node: int) -> tuple[int, ...]:
        return self._children[node]

    def is_leaf(self, node: int) -> bool:
        return not self._children[node]

    def leaves(self) -> tuple[int, ...]:
        return tuple(n for n in self.nodes() if self.is_leaf(n))

    def depth(self, node: int) -> int:
        return self._depth[node]

    def ancestors(self, node: int) -> tuple[int, ...]:
        """Strict ancestors of ``node``, nearest first."""
        out = []
        cur = self.parent[node]
        while cur is not None:
            out.append(cur)
            cur = self.parent[cur]
        return tuple(out)

    def __len__(self) -> int:
        return len(self.parent)

    def __contains__(self, node: int) -> bool:
        return node in self.parent

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, WellFoundedTree):
            return NotImplemented
        return self.parent == other.parent

    def __repr__(self) -> str:
        return f"WellFoundedTree({len(self)} nodes, root={self.root})"


@dataclass(frozen=True)
class TreeEmbedding:
    """An injective, order-respecting map between two trees.

    ``mapping`` sends source node ids to target node ids.  Outputs of
    ``embed`` additionally have an image closed under initial segments of
    the target and send immediate successors to immediate successors.
    """

    source: WellFoundedTree
    target: WellFoundedTree
    mapping: dict[int, int]


def node_ranks(t: WellFoundedTree) -> dict[int, int]:
    """Per-node ranks: leaves 0, internal nodes max child rank plus one."""
    ranks: dict[int, int] = {}
    stack = [(t.root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            kids = t.children(node)
            ranks[node] = 1 + max(ranks[k] for k in kids) if kids else 0
        else:
            stack.append((node, True))
            stack.extend((k, False) for k in t.children(node))
    return ranks


def rank(t: WellFoundedTree) -> int:
    """Rank of the tree: root node rank plus one (single node has rank 1)."""
    return node_ranks(t)[t.root] + 1


def decreasing_sequences(m: int) -> list[tuple[int, ...]]:
    """All strictly decreasing sequences over ``{0, ..., m-1}``, in
    lexicographic order (which coincides with preorder, shorter prefix
    first).  Contains the empty sequence; the total count is ``2**m``."""
    out: list[tuple[int, ...]] = []

    def gen(limit: int, prefix: tuple[int, ...]) -> None:
        out.append(prefix)
        for a in range(limit):
            gen(a, prefix + (a,))

    gen(m, ())
    return out


def canonical(m: int, *, node_budget: int = DEFAULT_NODE_BUDGET) -> WellFoundedTree:
    """Canonical tree of order ``m``: strictly decreasing sequences over
    ``{0, ..., m-1}`` with parent = initial segment.  Node ids follow the
    lexicographic order of the sequences, so ``canonical(2)`` has nodes
    0:(), 1:(0,), 2:(1,), 3:(1,0)."""
    if m < 0:
        raise ValidationError(f"canonical order must be non-negative, got {m}")
    size = 2 ** m
    if size > node_budget:
        raise BudgetError(
            f"canonical({m}) has {size} nodes, exceeding the node budget of {node_budget}"
        )
    seqs = decreasing_sequences(m)
    index = {seq: i for i, seq in enumerate(seqs)}
    parent: dict[int, Optional[int]] = {}
    for seq, i in index.items():
        parent[i] = None if not seq else index[seq[:-1]]
    return WellFoundedTree(parent)


def embed(
    t: WellFoundedTree,
    width: int,
    *,
    node_budget: int = DEFAULT_NODE_BUDGET,
) -> TreeEmbedding:
    """Embed ``t`` into ``canonical(width * beta)`` where ``rank(t) = beta + 1``.

    Requires every node of ``t`` to have at most ``width`` children.  The
    i-th child subtree, whose root has node rank ``g``, is prefixed with
    the coordinate ``width * g + g_index`` (``g_index`` = position among
    the siblings); coordinates strictly decrease along every branch, so
    the image is a well-formed, initial-segment-closed subtree and
    immediate successors go to immediate successors.
    """
    if width < 1:
        raise ValidationError(f"width must be a positive integer, got {width}")
    for node in t.nodes():
        deg = len(t.children(node))
        if deg > width:
            raise ValidationError(
                f"branching exceeds width: node {node} has {deg} children, width is {width}"
            )
    ranks = node_ranks(t)
    beta = ranks[t.root]
    target = canonical(width * beta, node_budget=node_budget)
    index = {seq: i for i, seq in enumerate(decreasing_sequences(width * beta))}

    mapping: dict[int, int] = {}
    stack: list[tuple[int, tuple[int, ...]]] = [(t.root, ())]
    while stack:
        node, prefix = stack.pop()
        mapping[node] = index[prefix]
        for i, child in enumerate(t.children(node)):
            stack.append((child, prefix + (width * ranks[child] + i,)))
    return TreeEmbedding(source=t, target=target, mapping=mapping)


def validate_embedding(
    e: TreeEmbedding, *, strong: bool = False
) -> tuple[bool, Optional[tuple[int, int]]]:
    """Check that ``e`` is an order embedding; return (ok, witness).

    The check is two-sided: ``p < q`` in the source must hold exactly when
    ``mapping[p] < mapping[q]`` holds in the target (so antichains map to
    antichains), and the map must be injective.  With ``strong=True`` the
    image must additionally be closed under initial segments of the
    target.  On failure the witness names the offending pair: two source
    nodes for an order or injectivity violation, or (source node, missing
    target node) for a closure violation.
    """
    src, dst, f = e.source, e.target, e.mapping
    src_nodes = src.nodes()
    if set(f) != set(src_nodes):
        raise ValidationError("embedding map is not total on the source nodes")
    for node, image in f.items():
        if image not in dst:
            raise ValidationError(f"node {node} maps to unknown target node {image}")

    seen: dict[int, int] = {}
    for node in src_nodes:
        image = f[node]
        if image in seen:
            return False, (seen[image], node)
        seen[image] = node

    src_anc = {n: frozenset(src.ancestors(n)) for n in src_nodes}
    dst_anc = {f[n]: frozenset(dst.ancestors(f[n])) for n in src_nodes}
    for p, q in itertools.combinations(src_nodes, 2):
        below_src = p in src_anc[q] or q in src_anc[p]
        below_dst = f[p] in dst_anc[f[q]] or f[q] in dst_anc[f[p]]
        if below_src != below_dst:
            return False, (p, q)

    if strong:
        image_set = set(f.values())
        for node in src_nodes:
            for anc in dst.ancestors(f[node]):
                if anc not in image_set:
                    return False, (node, anc)
    return True, None


def _shape_ids(t: WellFoundedTree) -> dict[int, int]:
    """Canonical shape id per node (equal ids iff subtrees are isomorphic)."""
    interned: dict[tuple[int, ...], int] = {}
    shapes: dict[int, int] = {}
    stack = [(t.root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            key = tuple(sorted(shapes[k] for k in t.children(node)))
            shapes[node] = interned.setdefault(key, len(interned))
        else:
            stack.append((node, True))
            stack.extend((k, False) for k in t.children(node))
    return shapes


def brute_force_embed(
    src: WellFoundedTree,
    dst: WellFoundedTree,
    *,
    src_budget: int = DEFAULT_EMBED_SRC_BUDGET,
    dst_budget: int = DEFAULT_EMBED_DST_BUDGET,
) -> Optional[TreeEmbedding]:
    """Complete search for an order embedding of ``src`` into ``dst``.

    Returns some embedding (injective, ``p < q`` iff image below image) if
    one exists, else ``None``.  Backtracking over concrete nodes in
    deterministic (sorted) order; exhausted subproblems are cached by
    subtree shape, which is what makes the negative answers affordable on
    canonical targets.  The default budgets are deliberately small; callers
    may raise them explicitly.
    """
    if len(src) > src_budget:
        raise BudgetError(
            f"source has {len(src)} nodes, exceeding the search budget of {src_budget}"
        )
    if len(dst) > dst_budget:
        raise BudgetError(
            f"target has {len(dst)} nodes, exceeding the search budget of {dst_budget}"
        )

    sshape = _shape_ids(src)
    dshape = _shape_ids(dst)
    s_ranks = node_ranks(src)
    d_ranks = node_ranks(dst)
    s_size: dict[int, int] = {}
    for node in sorted(src.nodes(), key=src.depth, reverse=True):
        s_size[node] = 1 + sum(s_size[k] for k in src.children(node))
    d_size: dict[int, int] = {}
    for node in sorted(dst.nodes(), key=dst.depth, reverse=True):
        d_size[node] = 1 + sum(d_size[k] for k in dst.children(node))

    # Failure caches, keyed purely by shapes: once a shape pair is known
    # impossible it is never retried at another concrete node.
    fail_at: set[tuple[int, int]] = set()
    fail_anywhere: set[tuple[int, int]] = set()
    fail_forest: set[tuple[tuple[int, ...], int]] = set()
    fail_split: set[tuple[tuple[int, ...], tuple[int, ...]]] = set()

    def place_at(u: int, v: int) -> Optional[dict[int, int]]:
        # subtree(u) -> cone(v) with u landing exactly on v
        key = (sshape[u], dshape[v])
        if key in fail_at:
            return None
        if s_size[u] > d_size[v] or s_ranks[u] > d_ranks[v]:
            fail_at.add(key)
            return None
        kids = src.children(u)
        sub = split_forest(kids, dst.children(v))
        if sub is None:
            fail_at.add(key)
            return None
        sub[u] = v
        return sub

    def place_anywhere(u: int, v: int) -> Optional[dict[int, int]]:
        # subtree(u) -> cone(v) with u landing on v or below
        key = (sshape[u], dshape[v])
        if key in fail_anywhere:
            return None
        got = place_at(u, v)
        if got is not None:
            return got
        for c in dst.children(v):
            got = place_anywhere(u, c)
            if got is not None:
                return got
        fail_anywhere.add(key)
        return None

    def forest_into_cone(us: tuple[int, ...], v: int) -> Optional[dict[int, int]]:
        # roots land inside cone(v), pairwise incomparable
        if not us:
            return {}
        if len(us) == 1:
            return place_anywhere(us[0], v)
        key = (tuple(sorted(sshape[u] for u in us)), dshape[v])
        if key in fail_forest:
            return None
        # two or more incomparable roots cannot include v itself
        got = split_forest(us, dst.children(v))
        if got is None:
            fail_forest.add(key)
        return got

    def split_forest(us: tuple[int, ...], cones: tuple[int, ...]) -> Optional[dict[int, int]]:
        # distribute the subtrees rooted at us among the given cones
        if not us:
            return {}
        if not cones:
            return None
        key = (
            tuple(sorted(sshape[u] for u in us)),
            tuple(sorted(dshape[c] for c in cones)),
        )
        if key in fail_split:
            return None
        head, tail = cones[0], cones[1:]
        for chosen in _sub_multisets(us, sshape):
            into_head = forest_into_cone(chosen, head)
            if into_head is None:
                continue
            remaining = list(us)
            for u in chosen:
                remaining.remove(u)
            into_tail = split_forest(tuple(remaining), tail)
            if into_tail is not None:
                into_head.update(into_tail)
                return into_head
        fail_split.add(key)
        return None

    found = place_anywhere(src.root, dst.root)
    if found is None:
        return None
    return TreeEmbedding(source=src, target=dst, mapping=found)


def _sub_multisets(us: tuple[int, ...], shape: dict[int, int]) -> list[tuple[int, ...]]:
    """Sub-multisets of ``us`` up to shape equivalence (one concrete
    representative per choice of counts per shape group)."""
    groups: dict[int, list[int]] = {}
    for u in sorted(us):
        groups.setdefault(shape[u], []).append(u)
    per_group = [
        [tuple(members[:k]) for k in range(len(members) + 1)]
        for members in groups.values()
    ]
    out = []
    for combo in itertools.product(*per_group):
        out.append(tuple(itertools.chain.from_iterable(combo)))
    return out


def witness_tree(
    width: int, beta: int, *, node_budget: int = DEFAULT_NODE_BUDGET
) -> WellFoundedTree:
    """The lower-bound witness: rank ``beta + 1``, not embeddable into any
    ``canonical(a)`` with ``a < width * beta``.

    Built recursively: for ``beta = 1`` a root with ``width`` leaves, and
    for ``beta = g + 1`` a fresh root over ``width`` copies of the witness
    for ``g``.
    """
    if width < 1:
        raise ValidationError(f"width must be a positive integer, got {width}")
    if beta < 1:
        raise ValidationError(f"beta must be a positive integer, got {beta}")
    size = 1
    for _ in range(beta):
        size = width * size + 1
    if size > node_budget:
        raise BudgetError(
            f"witness_tree({width}, {beta}) has {size} nodes, "
            f"exceeding the node budget of {node_budget}"
        )

    parent: dict[int, Optional[int]] = {0: None}
    next_id = 1

    def grow(root: int, level: int) -> None:
        nonlocal next_id
        if level == 0:
            return
        for _ in range(width):
            child = next_id
            next_id += 1
            parent[child] = root
            grow(child, level - 1)

    grow(0, beta)
    return WellFoundedTree(parent)


def tree_to_json(t: WellFoundedTree) -> dict:
    """Tree as a JSON-ready dict: nodes in ascending id order."""
    return {
        "nodes": [
            {"id": node, "parent": t.parent[node]} for node in t.nodes()
        ]
    }


def tree_from_json(obj: object) -> WellFoundedTree:
    """Parse the ``{"nodes": [{"id":..., "parent":...}, ...]}`` format."""
    if not isinstance(obj, dict) or "nodes" not in obj:
        raise ValidationError('tree JSON must be an object with a "nodes" array')
    nodes = obj["nodes"]
    if not isinstance(nodes, list):
        raise ValidationError('"nodes" must be an array')
    parent: dict[int, Optional[int]] = {}
    for pos, entry in enumerate(nodes):
        if not isinstance(entry, dict) or "id" not in entry or "parent" not in entry:
            raise ValidationError(
                f'node entry {pos} must be an object with "id" and "parent"'
            )
        node = entry["id"]
        if not isinstance(node, int) or isinstance(node, bool):
            raise ValidationError(f"node entry {pos}: id {node!r} is not an integer")
        if node in parent:
            raise ValidationError(f"node entry {pos}: duplicate id {node}")
        par = entry["parent"]
        if par is not None and (not isinstance(par, int) or isinstance(par, bool)):
            raise ValidationError(
                f"node entry {pos}: parent {par!r} is neither an integer nor null"
            )
        parent[node] = par
    return WellFoundedTree(parent)


def embedding_to_json(e: TreeEmbedding) -> dict:
    return {"map": {str(k): e.mapping[k] for k in sorted(e.mapping)}}

"""Finite relational structures over explicit signatures.

Universes are initial segments of the naturals, so bijections between
structures are permutations of ``{0, ..., n-1}``.  Signatures are purely
relational; constants and functions are out of scope (treat them through
their graphs if needed).

``isomorphic`` is the exact oracle used throughout: deterministic
backtracking over candidate bijections with degree-profile pruning.
``pair_structure`` packs an ordered pair of structures sharing a
signature into a single structure over the signature extended by a fresh
unary predicate: the predicate holds on the evens, which carry the left
structure, the odds carry the right one, and no relation mixes the two
halves.  ``decode_pair`` inverts this through the order-preserving
bijections onto the predicate and its complement, and insists the two
halves have equal size.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from typing import Iterable, Optional

from .errors import BudgetError, ValidationError

DEFAULT_ISO_UNIVERSE_BUDGET = 8
PAIR_TAG = "P"


@dataclass(frozen=True)
class Signature:
    """Ordered relation symbols with arities."""

    relations: tuple[tuple[str, int], ...]

    def __post_init__(self):
        names = [name for name, _ in self.relations]
        if len(set(names)) != len(names):
            raise ValidationError("relation names must be unique")
        for name, arity in self.relations:
            if not isinstance(name, str) or not name:
                raise ValidationError(f"relation name {name!r} must be a non-empty string")
            if not isinstance(arity, int) or isinstance(arity, bool) or arity < 1:
                raise ValidationError(f"arity of {name!r} must be a positive integer")

    def names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.relations)

    def arity(self, name: str) -> int:
        for n, a in self.relations:
            if n == name:
                return a
        raise ValidationError(f"unknown relation {name!r}")


class FiniteStructure:
    """A finite structure: signature, universe size, and relation tables."""

    __slots__ = ("signature", "universe", "relations")

    def __init__(self, signature: Signature, universe: int, relations: dict):
        if not isinstance(universe, int) or isinstance(universe, bool) or universe < 1:
            raise ValidationError(f"universe size must be a positive integer, got {universe}")
        if set(relations) != set(signature.names()):
            raise ValidationError(
                f"relation tables {sorted(relations)} do not match the signature "
                f"{list(signature.names())}"
            )
        tables: dict[str, frozenset[tuple[int, ...]]] = {}
        for name, arity in signature.relations:
            table = set()
            for tup in relations[name]:
                tup = tuple(tup)
                if len(tup) != arity:
                    raise ValidationError(
                        f"relation {name!r}: tuple {list(tup)} has length {len(tup)}, "
                        f"declared arity is {arity}"
                    )
                for x in tup:
                    if not isinstance(x, int) or isinstance(x, bool) or not 0 <= x < universe:
                        raise ValidationError(
                            f"relation {name!r}: tuple {list(tup)} has element out of range "
                            f"(universe is 0..{universe - 1})"
                        )
                table.add(tup)
            tables[name] = frozenset(table)
        self.signature = signature
        self.universe = universe
        self.relations = tables

    def __eq__(self, other):
        if not isinstance(other, FiniteStructure):
            return NotImplemented
        return (
            self.signature == other.signature
            and self.universe == other.universe
            and self.relations == other.relations
        )

    def __repr__(self):
        rels = ", ".join(f"{n}:{len(t)}" for n, t in sorted(self.relations.items()))
        return f"FiniteStructure(n={self.universe}, {rels})"


def structure_to_json(s: FiniteStructure) -> dict:
    return {
        "signature": [
            {"name": name, "arity": arity} for name, arity in s.signature.relations
        ],
        "universe": s.universe,
        "relations": {
            name: [list(t) for t in sorted(s.relations[name])]
            for name in s.signature.names()
        },
    }


def structure_from_json(obj: object) -> FiniteStructure:
    if not isinstance(obj, dict):
        raise ValidationError("structure JSON must be an object")
    for key in ("signature", "universe", "relations"):
        if key not in obj:
            raise ValidationError(f'structure JSON is missing "{key}"')
    sig_raw = obj["signature"]
    if not isinstance(sig_raw, list):
        raise ValidationError('"signature" must be an array')
    rels = []
    for pos, entry in enumerate(sig_raw):
        if not isinstance(entry, dict) or "name" not in entry or "arity" not in entry:
            raise ValidationError(
                f'signature entry {pos} must be an object with "name" and "arity"'
            )
        rels.append((entry["name"], entry["arity"]))
    signature = Signature(tuple(rels))
    tables = obj["relations"]
    if not isinstance(tables, dict):
        raise ValidationError('"relations" must be an object')
    return FiniteStructure(signature, obj["universe"], tables)


def parse_structure(text: str) -> FiniteStructure:
    import json

    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"malformed JSON: {exc}") from None
    return structure_from_json(obj)


def serialize_structure(s: FiniteStructure) -> str:
    import json

    return json.dumps(structure_to_json(s), sort_keys=True)


# --- partial isomorphisms and the isomorphism oracle --------------------------


def is_partial_iso(m: FiniteStructure, n: FiniteStructure, f: dict) -> bool:
    """Whether the partial map ``f`` is a partial isomorphism from m to n.

    Requires injectivity and, for every relation and every tuple over the
    domain of ``f``, membership on the left iff membership of the image on
    the right.  The empty map always qualifies.
    """
    if m.signature != n.signature:
        raise ValidationError("structures do not share a signature")
    dom = list(f)
    if len(set(f.values())) != len(dom):
        return False
    for x, y in f.items():
        if not (0 <= x < m.universe and 0 <= y < n.universe):
            return False
    for name, arity in m.signature.relations:
        left, right = m.relations[name], n.relations[name]
        for tup in itertools.product(dom, repeat=arity):
            if (tup in left) != (tuple(f[x] for x in tup) in right):
                return False
    return True


def _profile(s: FiniteStructure, x: int) -> tuple:
    """Occurrence counts of ``x`` per relation and position, plus the
    constant-tuple memberships; isomorphisms preserve this."""
    out = []
    for name, arity in s.signature.relations:
        table = s.relations[name]
        for pos in range(arity):
            out.append(sum(1 for t in table if t[pos] == x))
        out.append((x,) * arity in table)
    return tuple(out)


def isomorphic(
    m: FiniteStructure,
    n: FiniteStructure,
    *,
    universe_budget: int = DEFAULT_ISO_UNIVERSE_BUDGET,
) -> Optional[dict[int, int]]:
    """A witnessing bijection if the structures are isomorphic, else None.

    Deterministic backtracking: elements are assigned in order, candidates
    filtered by occurrence profiles, relation tables checked on the
    assigned prefix at every step.
    """
    if m.signature != n.signature:
        raise ValidationError("structures do not share a signature")
    if m.universe != n.universe:
        return None
    size = m.universe
    if size > universe_budget:
        raise BudgetError(
            f"universe size {size} exceeds the isomorphism search budget of {universe_budget}"
        )
    prof_m = {x: _profile(m, x) for x in range(size)}
    prof_n = {y: _profile(n, y) for y in range(size)}
    if sorted(prof_m.values()) != sorted(prof_n.values()):
        return None

    assignment: dict[int, int] = {}
    used: set[int] = set()

    def consistent(x: int, y: int) -> bool:
        for name, arity in m.signature.relations:
            left, right = m.relations[name], n.relations[name]
            pool = list(assignment) + [x]
            for tup in itertools.product(pool, repeat=arity):
                if x not in tup:
                    continue
                img = tuple(y if v == x else assignment[v] for v in tup)
                if (tup in left) != (img in right):
                    return False
        return True

    def extend(x: int) -> bool:
        if x == size:
            return True
        for y in range(size):
            if y in used or prof_n[y] != prof_m[x]:
                continue
            if consistent(x, y):
                assignment[x] = y
                used.add(y)
                if extend(x + 1):
                    return True
                del assignment[x]
                used.remove(y)
        return False

    if extend(0):
        return dict(assignment)
    return None


# --- generators ----------------------------------------------------------------


def pmodel(n: int, p: int) -> FiniteStructure:
    """Unary-predicate structure on n elements with P = {0, ..., p-1}."""
    if not 0 <= p <= n:
        raise ValidationError(f"need 0 <= p <= n, got p={p}, n={n}")
    sig = Signature((("P", 1),))
    return FiniteStructure(sig, n, {"P": [(i,) for i in range(p)]})


def nested_eq(levels: int, branching: int, leaf_size: int) -> FiniteStructure:
    """Nested equivalence relations E_0, ..., E_{levels-1}.

    E_g has classes of size ``leaf_size * branching**g`` (consecutive
    blocks), so each E_g class splits into ``branching`` classes of
    E_{g-1}; the universe consists of ``branching`` top-level classes.
    A finite stand-in for refining equivalence relations with infinitely
    many infinite classes.
    """
    if levels < 1 or branching < 1 or leaf_size < 1:
        raise ValidationError("levels, branching and leaf_size must be positive")
    n = leaf_size * branching ** levels
    sig = Signature(tuple((f"E{g}", 2) for g in range(levels)))
    tables = {}
    for g in range(levels):
        block = leaf_size * branching ** g
        tables[f"E{g}"] = [
            (a, b)
            for a in range(n)
            for b in range(n)
            if a // block == b // block
        ]
    return FiniteStructure(sig, n, tables)


def random_structure(
    seed: int, signature: Signature, n: int, density: float
) -> FiniteStructure:
    """Seed-deterministic structure: each possible tuple is included
    independently with the given density, in lexicographic order."""
    if not 0 <= density <= 1:
        raise ValidationError(f"density must lie in [0, 1], got {density}")
    rng = random.Random(seed)
    tables = {}
    for name, arity in signature.relations:
        table = []
        for tup in itertools.product(range(n), repeat=arity):
            if rng.random() < density:
                table.append(tup)
        tables[name] = table
    return FiniteStructure(signature, n, tables)


def generate(kind: str, params: dict) -> FiniteStructure:
    """Dispatcher used by the command line: kind in {pmodel, nestedEq, random}."""
    if kind == "pmodel":
        return pmodel(params["n"], params["p"])
    if kind == "nestedEq":
        return nested_eq(params["levels"], params["branching"], params["leafSize"])
    if kind == "random":
        sig = Signature(tuple((r["name"], r["arity"]) for r in params["signature"]))
        return random_structure(params["seed"], sig, params["n"], params["density"])
    raise ValidationError(f"unknown generator kind {kind!r}")


# --- tagged pairs ----------------------------------------------------------------


def pair_tag_name(sig: Signature) -> str:
    """First fresh tag name: the preferred one, or numbered fallbacks."""
    taken = set(sig.names())
    if PAIR_TAG not in taken:
        return PAIR_TAG
    for i in itertools.count():
        name = f"{PAIR_TAG}{i}"
        if name not in taken:
            return name
    raise AssertionError("unreachable")


def pair_structure(m: FiniteStructure, n: FiniteStructure) -> FiniteStructure:
    """Pack (m, n) into one structure over the signature plus a unary tag.

    The tag (a fresh unary relation appended to the signature) holds on
    the evens; element x of m becomes 2x, element x of n becomes 2x + 1.
    Relations carry the two copies separately, so no tuple mixes tagged
    and untagged elements.
    """
    if m.signature != n.signature:
        raise ValidationError("structures do not share a signature")
    if m.universe != n.universe:
        raise ValidationError("structures do not share a universe size")
    tag = pair_tag_name(m.signature)
    k = m.universe
    sig = Signature(m.signature.relations + ((tag, 1),))
    tables: dict[str, list] = {
        tag: [(2 * x,) for x in range(k)]
    }
    for name, _ in m.signature.relations:
        tables[name] = [tuple(2 * x for x in t) for t in m.relations[name]] + [
            tuple(2 * x + 1 for x in t) for t in n.relations[name]
        ]
    return FiniteStructure(sig, 2 * k, tables)


def decode_pair(a: FiniteStructure) -> tuple[FiniteStructure, FiniteStructure]:
    """Invert ``pair_structure`` up to the order-preserving relabelings.

    The tag is the last relation of the signature and must be unary.
    Works on any tagged structure whose tag class and its complement have
    equal size: the two parts are pulled back through the unique
    order-preserving bijections, ignoring mixed tuples.  Unbalanced tags
    are rejected.
    """
    if not a.signature.relations:
        raise ValidationError("structure has no relations, hence no tag")
    tag, tag_arity = a.signature.relations[-1]
    if tag_arity != 1:
        raise ValidationError(
            f"last relation {tag!r} has arity {tag_arity}; the tag must be unary"
        )
    tagged = sorted(t[0] for t in a.relations[tag])
    untagged = sorted(set(range(a.universe)) - set(tagged))
    if len(tagged) != len(untagged):
        raise ValidationError(
            f"tag class has {len(tagged)} elements but its complement has "
            f"{len(untagged)}; only balanced tagged structures decode"
        )
    k = len(tagged)
    if k == 0:
        raise ValidationError("tag class is empty")
    back_1 = {e: i for i, e in enumerate(tagged)}
    back_2 = {e: i for i, e in enumerate(untagged)}
    base_sig = Signature(a.signature.relations[:-1])
    left_tables: dict[str, list] = {}
    right_tables: dict[str, list] = {}
    for name, _ in base_sig.relations:
        left_tables[name] = [
            tuple(back_1[x] for x in t)
            for t in a.relations[name]
            if all(x in back_1 for x in t)
        ]
        right_tables[name] = [
            tuple(back_2[x] for x in t)
            for t in a.relations[name]
            if all(x in back_2 for x in t)
        ]
    return (
        FiniteStructure(base_sig, k, left_tables),
        FiniteStructure(base_sig, k, right_tables),
    )


def relabel(s: FiniteStructure, perm: Iterable[int]) -> FiniteStructure:
    """Apply a permutation of the universe; useful for building isomorphic
    copies in tests and oracles."""
    perm = list(perm)
    if sorted(perm) != list(range(s.universe)):
        raise ValidationError("not a permutation of the universe")
    tables = {
        name: [tuple(perm[x] for x in t) for t in table]
        for name, table in s.relations.items()
    }
    return FiniteStructure(s.signature, s.universe, tables)

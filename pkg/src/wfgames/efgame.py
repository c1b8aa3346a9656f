"""Back-and-forth games with set moves along a well-founded tree.

One round: the descending player (I) picks a child of the current tree
node together with a cumulative constraint set C of size at most
``cap_c``; the answering player (II) extends a partial map between the
two structures to one whose domain and range both cover C, keeping the
domain within ``cap_f``.  When the tree node is a leaf, I cannot move and
II wins exactly if the accumulated map is a partial isomorphism.  On a
single-node tree II therefore wins unconditionally.

``solve_ef`` computes the winner by memoized backward induction.  Two
reductions, both winner-preserving, keep the state space small: II only
ever plays partial isomorphisms (a violated map can never recover, since
maps only grow), and II only plays minimal covers (playing less never
hurts: any later extension available from a larger map is available from
a smaller one).  ``ef_winner_brute`` is the independent oracle and does
neither: it unfolds the exists/forall definition over raw histories with
every rule-legal partial function, no memoization, no pruning.

Both structures live on the same universe ``{0, ..., n-1}``; constraint
sets are subsets of that shared universe.  If II has no legal response
(the domain cap is exhausted below a demanded cover), I wins; the
bounded-size analogue of this game makes that situation impossible, so
it is called out explicitly here.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .errors import BudgetError, ValidationError
from .structures import FiniteStructure, is_partial_iso
from .trees import WellFoundedTree, canonical, rank

DEFAULT_POSITION_BUDGET = 500_000
PLAYER_I = "I"
PLAYER_II = "II"


@dataclass(frozen=True)
class EFConfig:
    """Game parameters: the move tree and the two caps (b = cap_c on
    constraint sets, d = cap_f on map domains, b <= d)."""

    tree: WellFoundedTree
    cap_c: int
    cap_f: int

    def __post_init__(self):
        if self.cap_c < 1 or self.cap_f < 1:
            raise ValidationError("caps must be positive")
        if self.cap_c > self.cap_f:
            raise ValidationError(
                f"cap_c={self.cap_c} exceeds cap_f={self.cap_f}; the answering player "
                "could never cover the first maximal demand"
            )


@dataclass(frozen=True)
class EFResult:
    winner: str
    positions_explored: int


def _check_instance(m: FiniteStructure, n: FiniteStructure, cfg: EFConfig) -> None:
    if m.signature != n.signature:
        raise ValidationError("structures do not share a signature")
    if m.universe != n.universe:
        raise ValidationError("structures do not share a universe size")
    if cfg.cap_f > m.universe:
        raise ValidationError(
            f"cap_f={cfg.cap_f} exceeds the universe size {m.universe}"
        )


def _demand_options(C: frozenset, cap_c: int, universe: int) -> list[frozenset]:
    """Legal cumulative constraint sets: supersets of C within the cap."""
    rest = sorted(set(range(universe)) - C)
    out = []
    for k in range(cap_c - len(C) + 1):
        for extra in itertools.combinations(rest, k):
            out.append(C | frozenset(extra))
    return out


def _compatible(
    m: FiniteStructure, n: FiniteStructure, f: dict, x: int, y: int
) -> bool:
    """Whether adding x -> y keeps f a partial isomorphism (f assumed one;
    injectivity of the addition is the caller's concern)."""
    dom = list(f) + [x]
    g = dict(f)
    g[x] = y
    for name, arity in m.signature.relations:
        left, right = m.relations[name], n.relations[name]
        for tup in itertools.product(dom, repeat=arity):
            if x not in tup:
                continue
            if (tup in left) != (tuple(g[v] for v in tup) in right):
                return False
    return True


def _minimal_covers(
    m: FiniteStructure, n: FiniteStructure, f: dict, C: frozenset, cap_f: int
) -> list[dict]:
    """Minimal partial-iso extensions of f whose domain and range cover C.

    Two phases: first the demanded points missing from the domain receive
    images, then each demanded point still missing from the range receives
    a fresh source.  No other pairs are added.
    """
    universe = m.universe
    need_dom = sorted(x for x in C if x not in f)
    if len(f) + len(need_dom) > cap_f:
        return []
    out: list[dict] = []

    def phase_ran(cur: dict, ran: set, todo: list) -> None:
        if not todo:
            out.append(dict(cur))
            return
        if len(cur) + len(todo) > cap_f:
            return
        y = todo[0]
        for x in range(universe):
            if x in cur:
                continue
            if _compatible(m, n, cur, x, y):
                cur[x] = y
                ran.add(y)
                phase_ran(cur, ran, todo[1:])
                del cur[x]
                ran.remove(y)

    def phase_dom(cur: dict, ran: set, todo: list) -> None:
        if not todo:
            phase_ran(cur, ran, sorted(y for y in C if y not in ran))
            return
        x = todo[0]
        for y in range(universe):
            if y in ran:
                continue
            if _compatible(m, n, cur, x, y):
                cur[x] = y
                ran.add(y)
                phase_dom(cur, ran, todo[1:])
                del cur[x]
                ran.remove(y)

    phase_dom(dict(f), set(f.values()), need_dom)
    return out


def solve_ef(
    m: FiniteStructure,
    n: FiniteStructure,
    cfg: EFConfig,
    *,
    position_budget: int = DEFAULT_POSITION_BUDGET,
) -> EFResult:
    """Winner of the game plus the number of distinct positions explored."""
    _check_instance(m, n, cfg)
    t = cfg.tree
    memo: dict = {}

    def record(key):
        if len(memo) >= position_budget:
            raise BudgetError(
                f"position budget of {position_budget} exhausted "
                f"({len(memo)} positions explored)"
            )

    def after_answer(node: int, C: frozenset, f_items: frozenset) -> str:
        # II has just answered (or the game just started); I moves or the
        # game is over.
        key = (0, node, C, f_items)
        if key in memo:
            return memo[key]
        record(key)
        memo[key] = None
        f = dict(f_items)
        if t.is_leaf(node):
            result = PLAYER_II if is_partial_iso(m, n, f) else PLAYER_I
        else:
            result = PLAYER_II
            for q in t.children(node):
                for Cp in _demand_options(C, cfg.cap_c, m.universe):
                    if to_answer(q, Cp, f_items) == PLAYER_I:
                        result = PLAYER_I
                        break
                if result == PLAYER_I:
                    break
        memo[key] = result
        return result

    def to_answer(node: int, C: frozenset, f_items: frozenset) -> str:
        key = (1, node, C, f_items)
        if key in memo:
            return memo[key]
        record(key)
        memo[key] = None
        f = dict(f_items)
        result = PLAYER_I
        for g in _minimal_covers(m, n, f, C, cfg.cap_f):
            if after_answer(node, C, frozenset(g.items())) == PLAYER_II:
                result = PLAYER_II
                break
        memo[key] = result
        return result

    winner = after_answer(t.root, frozenset(), frozenset())
    return EFResult(winner=winner, positions_explored=len(memo))


def ef_winner(
    m: FiniteStructure,
    n: FiniteStructure,
    cfg: EFConfig,
    *,
    position_budget: int = DEFAULT_POSITION_BUDGET,
) -> str:
    return solve_ef(m, n, cfg, position_budget=position_budget).winner


def ef_alpha(
    m: FiniteStructure,
    n: FiniteStructure,
    alpha: int,
    cap_c: int,
    cap_f: int,
    *,
    position_budget: int = DEFAULT_POSITION_BUDGET,
) -> str:
    """The game along the canonical tree of order alpha."""
    cfg = EFConfig(tree=canonical(alpha), cap_c=cap_c, cap_f=cap_f)
    return ef_winner(m, n, cfg, position_budget=position_budget)


def ef_winner_brute(
    m: FiniteStructure,
    n: FiniteStructure,
    cfg: EFConfig,
    *,
    max_universe: int = 4,
    max_rank: int = 3,
    max_cap: int = 2,
) -> str:
    """Oracle with the same contract as ``ef_winner``.

    Plain unfolding of the definition over raw histories: II wins a
    position if for every legal move of I some legal answer of II wins.
    II's legal answers are all rule-legal partial functions (isomorphism
    or not), and nothing is memoized, so this is exponential and guarded
    by deliberately tiny default budgets.
    """
    _check_instance(m, n, cfg)
    if m.universe > max_universe:
        raise BudgetError(
            f"universe {m.universe} exceeds the oracle budget of {max_universe}"
        )
    if rank(cfg.tree) > max_rank:
        raise BudgetError(
            f"tree rank {rank(cfg.tree)} exceeds the oracle budget of {max_rank}"
        )
    if max(cfg.cap_c, cfg.cap_f) > max_cap:
        raise BudgetError(
            f"caps {(cfg.cap_c, cfg.cap_f)} exceed the oracle budget of {max_cap}"
        )

    t = cfg.tree
    universe = m.universe

    def all_answers(f: dict, C: frozenset) -> list[dict]:
        need_dom = [x for x in C if x not in f]
        room = cfg.cap_f - len(f) - len(need_dom)
        if room < 0:
            return []
        free = [x for x in range(universe) if x not in f and x not in need_dom]
        out = []
        for k in range(room + 1):
            for extra in itertools.combinations(free, k):
                dom_new = need_dom + list(extra)
                for images in itertools.product(range(universe), repeat=len(dom_new)):
                    g = dict(f)
                    g.update(zip(dom_new, images))
                    if C <= set(g.values()):
                        out.append(g)
        return out

    def ii_wins(node: int, C: frozenset, f: dict) -> bool:
        if t.is_leaf(node):
            return is_partial_iso(m, n, f)
        for q in t.children(node):
            rest = sorted(set(range(universe)) - C)
            for k in range(cfg.cap_c - len(C) + 1):
                for extra in itertools.combinations(rest, k):
                    Cp = C | frozenset(extra)
                    if not any(ii_wins(q, Cp, g) for g in all_answers(f, Cp)):
                        return False
        return True

    return PLAYER_II if ii_wins(t.root, frozenset(), {}) else PLAYER_I

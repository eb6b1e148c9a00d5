"""Contraction choices over collections, and shuffle-scheme order models.

A contraction assigns to every parallel pair over a tree a filler operation
whose boundary is that pair.  The Leinster variant ranges over all trees of
stage 1..dim, the unital variant over non-linear trees of a reduced pointed
collection; the unital checker tests compatibility of the fillers with the
restriction action along inclusions.

Shuffle schemes model the order-choice layer of the dimension-3 example:
a deterministic compatible linear order on the height-2 nodes of each
2-stage tree, restricted along inclusions by node deletion.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

from .collection import (
    Collection,
    ParallelPair,
    PointedCollection,
    fillers,
    parallel_pairs,
    scope_trees,
    unique_filler_report,
)
from .operads import (
    Operad,
    derive_pointing,
    left_bracketing,
    right_bracketing,
)
from .trees import (
    Tree,
    enumerate_inclusions,
    enumerate_trees,
    is_linear,
    morphism_key,
    node_count,
    tree_key,
)

__all__ = [
    "SCHEMES",
    "ContractionChoice",
    "ShuffleScheme",
    "bracketing_gamma",
    "check_contraction",
    "check_scheme_unital",
    "check_top_strict",
    "check_unital",
    "contraction_scope",
    "scheme_order",
    "search_contraction",
    "shuffle_orders",
]


@dataclass(frozen=True)
class ContractionChoice:
    """A filler table keyed by (tree key, source, target).

    kind is "leinster" (all trees in scope, weak units allowed) or "unital"
    (non-linear trees of a reduced pointed collection).
    """

    kind: str
    table: dict[tuple[str, str, str], str]
    name: str = ""

    def gamma(self, p: Tree, src: str, tgt: str) -> str:
        return self.table[(tree_key(p), src, tgt)]


def _carrier(A: Operad | Collection) -> Collection:
    return A.carrier if isinstance(A, Operad) else A


def contraction_scope(
    c: Collection, bound: int, kind: str
) -> tuple[Tree, ...]:
    if kind == "leinster":
        return scope_trees(c.dim, bound, nonlinear_only=False)
    if kind == "unital":
        return scope_trees(c.dim, bound, nonlinear_only=True)
    raise ValueError(f"unknown contraction kind {kind!r}")


def check_contraction(
    A: Operad | Collection, gamma: ContractionChoice, bound: int
) -> dict:
    """Totality and filler typing of gamma over its scope, as a report."""
    c = _carrier(A)
    instances = 0
    violations: list[dict] = []
    known: set[tuple[str, str, str]] = set()
    for p in contraction_scope(c, bound, gamma.kind):
        key = tree_key(p)
        for pair in parallel_pairs(c, p):
            instances += 1
            known.add((key, pair.src, pair.tgt))
            entry = gamma.table.get((key, pair.src, pair.tgt))
            if entry is None:
                violations.append(
                    {
                        "kind": "totality",
                        "tree": key,
                        "src": pair.src,
                        "tgt": pair.tgt,
                        "detail": "no filler chosen",
                    }
                )
                continue
            if entry not in c.ops_at(p):
                violations.append(
                    {
                        "kind": "typing",
                        "tree": key,
                        "src": pair.src,
                        "tgt": pair.tgt,
                        "detail": f"{entry} is not an operation at {key}",
                    }
                )
                continue
            if p.stage >= 1 and c.boundary(p, entry) != (pair.src, pair.tgt):
                violations.append(
                    {
                        "kind": "typing",
                        "tree": key,
                        "src": pair.src,
                        "tgt": pair.tgt,
                        "detail": f"filler {entry} has boundary "
                        f"{c.boundary(p, entry)}",
                    }
                )
    for key in sorted(set(gamma.table) - known):
        tree, src, tgt = key
        violations.append(
            {
                "kind": "stray",
                "tree": tree,
                "src": src,
                "tgt": tgt,
                "detail": "entry outside the scope",
            }
        )
    return {"passed": not violations, "instances": instances, "violations": violations}


def check_top_strict(A: Operad | Collection, bound: int) -> dict:
    """At top stage every parallel pair must have exactly one filler."""
    c = _carrier(A)
    base = unique_filler_report(c, bound, stages=[c.dim])
    violations = [
        {
            "kind": "top-strict",
            "tree": prob["tree"],
            "src": prob["src"],
            "tgt": prob["tgt"],
            "detail": f"fillers {prob['fillers']}",
        }
        for prob in base["problems"]
    ]
    return {"passed": base["ok"], "violations": violations}


def check_unital(
    P: PointedCollection | Operad,
    gamma: ContractionChoice,
    bound: int,
) -> dict:
    """Filler compatibility with restriction along inclusions.

    For every inclusion f: q -> p of non-linear trees within the bound,
    restricting the filler at p must give the filler at q over the
    restricted pair.  gamma is assumed to pass check_contraction.
    """
    if isinstance(P, Operad):
        P = derive_pointing(P, bound)
    c = P.base
    instances = 0
    violations: list[dict] = []
    for p in scope_trees(c.dim, bound, nonlinear_only=True):
        pkey = tree_key(p)
        pairs = parallel_pairs(c, p)
        for f in enumerate_inclusions(p):
            q = f.source
            if q == p or is_linear(q):
                continue
            qkey = tree_key(q)
            tf = f.truncate() if p.stage >= 2 else None
            for pair in pairs:
                instances += 1
                got = P.act(f, gamma.table[(pkey, pair.src, pair.tgt)])
                if tf is None:
                    ra, rb = pair.src, pair.tgt
                else:
                    ra, rb = P.act(tf, pair.src), P.act(tf, pair.tgt)
                want = gamma.table[(qkey, ra, rb)]
                if got != want:
                    violations.append(
                        {
                            "kind": "unital",
                            "inclusion": morphism_key(f),
                            "src": pair.src,
                            "tgt": pair.tgt,
                            "detail": f"{got} vs {want}",
                        }
                    )
    return {"passed": not violations, "instances": instances, "violations": violations}


def search_contraction(
    A: Operad | Collection, bound: int, unital: bool = False
) -> ContractionChoice | dict:
    """Backtracking search for a contraction choice within the bound.

    Slots are filled smallest tree first, fillers tried in name order; with
    unital set, candidates are filtered against the already-chosen fillers
    of included trees.  Returns the first complete choice, re-verified by
    the checkers, or an exhaustion report.
    """
    c = _carrier(A)
    kind = "unital" if unital else "leinster"
    P = None
    if unital:
        if not isinstance(A, Operad):
            raise ValueError("the unital search needs an operad to derive acts")
        P = derive_pointing(A, bound)

    ordered = sorted(
        contraction_scope(c, bound, kind),
        key=lambda t: (node_count(t), tree_key(t)),
    )
    slots: list[tuple[Tree, ParallelPair, tuple[str, ...]]] = []
    for p in ordered:
        for pair in sorted(parallel_pairs(c, p), key=lambda pr: (pr.src, pr.tgt)):
            cands = tuple(sorted(fillers(c, pair)))
            if not cands:
                return {
                    "found": False,
                    "tree": tree_key(p),
                    "src": pair.src,
                    "tgt": pair.tgt,
                    "detail": "no filler exists",
                }
            slots.append((p, pair, cands))

    constraints: dict[int, list] = {}
    if unital:
        index = {
            (tree_key(p), pair.src, pair.tgt): i
            for i, (p, pair, _) in enumerate(slots)
        }
        for i, (p, pair, _) in enumerate(slots):
            cons = []
            for f in enumerate_inclusions(p):
                q = f.source
                if q == p or is_linear(q):
                    continue
                if p.stage >= 2:
                    tf = f.truncate()
                    ra, rb = P.act(tf, pair.src), P.act(tf, pair.tgt)
                else:
                    ra, rb = pair.src, pair.tgt
                cons.append((f, index[(tree_key(q), ra, rb)]))
            constraints[i] = cons

    chosen: list[str | None] = [None] * len(slots)
    deepest = 0

    def fill(i: int) -> bool:
        nonlocal deepest
        deepest = max(deepest, i)
        if i == len(slots):
            return True
        for cand in slots[i][2]:
            if unital and any(
                P.act(f, cand) != chosen[j] for f, j in constraints[i]
            ):
                continue
            chosen[i] = cand
            if fill(i + 1):
                return True
        chosen[i] = None
        return False

    if not fill(0):
        p, pair, _ = slots[min(deepest, len(slots) - 1)]
        return {
            "found": False,
            "tree": tree_key(p),
            "src": pair.src,
            "tgt": pair.tgt,
            "detail": "every assignment violates the unitality constraints",
        }

    table = {
        (tree_key(p), pair.src, pair.tgt): chosen[i]
        for i, (p, pair, _) in enumerate(slots)
    }
    choice = ContractionChoice(kind, table, name="searched")
    report = check_contraction(A, choice, bound)
    if not report["passed"]:
        raise RuntimeError(f"search produced an invalid choice: {report['violations'][:2]}")
    if unital:
        report = check_unital(P, choice, bound)
        if not report["passed"]:
            raise RuntimeError(
                f"search produced a non-unital choice: {report['violations'][:2]}"
            )
    return choice


_WORD_RULES: dict[str, Callable[[int], str]] = {
    "left": left_bracketing,
    "right": right_bracketing,
    # Deliberately unit-incompatible: parity flips under unit pruning.
    "mixed": lambda m: left_bracketing(m) if m % 2 == 0 else right_bracketing(m),
}


def bracketing_gamma(
    A: Operad, rule: str, bound: int | None = None
) -> ContractionChoice:
    """The comb contraction for the bracketing operad.

    rule picks the stage-1 filler ("left", "right", or the parity-mixed
    negative control); stage-2 fillers are forced by top strictness.
    """
    if rule not in _WORD_RULES:
        raise ValueError(f"unknown bracketing rule {rule!r}")
    word = _WORD_RULES[rule]
    c = A.carrier
    bound = A.max_nodes if bound is None else bound
    table: dict[tuple[str, str, str], str] = {}
    for p in scope_trees(c.dim, bound, nonlinear_only=True):
        key = tree_key(p)
        for pair in parallel_pairs(c, p):
            if p.stage == 1:
                table[(key, pair.src, pair.tgt)] = word(len(p.children))
                continue
            found = fillers(c, pair)
            if len(found) != 1:
                raise ValueError(f"filler at {key} not forced: {found}")
            table[(key, pair.src, pair.tgt)] = found[0]
    return ContractionChoice("unital", table, name=rule)


# ---------------------------------------------------------------------------
# Shuffle orders


def _column_nodes(p: Tree) -> tuple[tuple[int, int], ...]:
    """Height-2 nodes of a 2-stage tree as (column, row), in level order."""
    if p.stage != 2:
        raise ValueError("shuffles live on 2-stage trees")
    out = []
    for i, col in enumerate(p.children):
        out.extend((i, j) for j in range(len(col.children)))
    return tuple(out)


def shuffle_orders(p: Tree) -> tuple[tuple[tuple[int, int], ...], ...]:
    """All linear orders on height-2 nodes keeping each column's row order."""
    if p.stage != 2:
        raise ValueError("shuffles live on 2-stage trees")
    cols = [len(col.children) for col in p.children]
    total = sum(cols)
    out: list[tuple[tuple[int, int], ...]] = []

    def go(pos: tuple[int, ...], acc: tuple[tuple[int, int], ...]) -> None:
        if len(acc) == total:
            out.append(acc)
            return
        for i, n in enumerate(cols):
            if pos[i] < n:
                go(pos[:i] + (pos[i] + 1,) + pos[i + 1 :], acc + ((i, pos[i]),))

    go((0,) * len(cols), ())
    return tuple(out)


@dataclass(frozen=True)
class ShuffleScheme:
    """A deterministic compatible order rule, given by a sort key on
    (column, row)."""

    name: str
    sort_key: Callable[[int, int], tuple] = field(compare=False)


SCHEMES = {
    "col-lr": ShuffleScheme("col-lr", lambda i, j: (i, j)),
    "col-rl": ShuffleScheme("col-rl", lambda i, j: (-i, j)),
    "row-reading": ShuffleScheme("row-reading", lambda i, j: (j, i)),
}


def scheme_order(s: ShuffleScheme, p: Tree) -> tuple[tuple[int, int], ...]:
    """The scheme's order at p, verified compatible with the columns."""
    order = tuple(sorted(_column_nodes(p), key=lambda ij: s.sort_key(*ij)))
    rows = {}
    for i, j in order:
        if j != rows.get(i, 0):
            raise ValueError(f"scheme {s.name} breaks column order at {tree_key(p)}")
        rows[i] = j + 1
    return order


def check_scheme_unital(s: ShuffleScheme, bound: int) -> dict:
    """Restriction of the scheme's order along every inclusion of 2-stage
    trees must give the scheme's order on the smaller tree; unit
    substitution is modeled as node deletion."""
    instances = 0
    violations: list[dict] = []
    for p in enumerate_trees(2, bound):
        order_p = scheme_order(s, p)
        labels = _column_nodes(p)
        for f in enumerate_inclusions(p):
            q = f.source
            if q == p:
                continue
            instances += 1
            small_labels = _column_nodes(q)
            image = {}
            for k, target in enumerate(f.maps[2]):
                image[labels[target]] = small_labels[k]
            got = tuple(image[ij] for ij in order_p if ij in image)
            want = scheme_order(s, q)
            if got != want:
                violations.append(
                    {
                        "kind": "scheme",
                        "inclusion": morphism_key(f),
                        "restricted": [list(ij) for ij in got],
                        "small": [list(ij) for ij in want],
                    }
                )
    return {"passed": not violations, "instances": instances, "violations": violations}

"""Operads over collections: substitution along tree morphisms.

An operad equips a collection with substitution maps, one per morphism of
trees f: p -> q, sending an operation b at q and a tuple of operations over
the fibres of f to an operation at p.  The parts must agree through their
shared boundaries, iterated source and target down to the height of the
highest common ancestor between consecutive leaves of q.  The checker
verifies boundary typing, the unit laws, and that substituting in two stages
matches substituting along the composite morphism.
"""

from __future__ import annotations

import itertools
import random
from functools import lru_cache
from typing import Callable, Iterator, Mapping, Sequence

from .collection import (
    POINT,
    Collection,
    PointedCollection,
    check_pointing,
    scope_trees,
)
from .trees import (
    Tree,
    TreeMorphism,
    analyze_morphism,
    ancestor_chain,
    enumerate_morphisms,
    fibre_embedding,
    hca_height,
    is_linear,
    leaves,
    level_sizes,
    morphism_key,
    node_count,
    parent_maps,
    parse_morphism_key,
    parse_tree_key,
    restrict_to_fibre,
    terminal_morphism,
    tree_key,
    truncate,
    unit_tree,
)

Rule = Callable[["Operad", TreeMorphism, str, tuple[str, ...]], str]


class Operad:
    """A collection together with a substitution rule.

    subst computes sigma_f(b; parts) for inputs that are not forced; a
    substitution with an implicit linear source, or of a unit along the
    morphism to its unit tree, never consults it.  units names the
    distinguished operation at each unit tree, the implicit point unless the
    carrier overrides that fibre.  max_nodes bounds the trees substitution
    will touch, matching how far the carrier was materialised.
    """

    def __init__(
        self,
        carrier: Collection,
        subst: Rule,
        *,
        units: Mapping[int, str] | None = None,
        max_nodes: int | None = None,
        name: str | None = None,
    ) -> None:
        problems = carrier.validate()
        if problems:
            raise ValueError(f"carrier is not a collection: {problems[:3]}")
        self.carrier = carrier
        self.subst = subst
        self.units = dict(units or {})
        self.max_nodes = max_nodes
        self.name = name
        for k, op in self.units.items():
            if op not in carrier.ops_at(unit_tree(k)):
                raise ValueError(f"unit at stage {k} is not an operation")

    def unit(self, stage: int) -> str:
        return self.units.get(stage, POINT)

    def __repr__(self) -> str:
        label = self.name or "operad"
        return f"Operad({label}, dim={self.carrier.dim})"


@lru_cache(maxsize=None)
def _children(t: Tree) -> tuple[tuple[tuple[int, ...], ...], ...]:
    """kids[h][i] lists the height h+1 children of node (h, i)."""
    maps = parent_maps(t)
    sizes = level_sizes(t)
    out = []
    for h in range(t.stage):
        row: list[list[int]] = [[] for _ in range(sizes[h])]
        for child, parent in enumerate(maps[h + 1]):
            row[parent].append(child)
        out.append(tuple(tuple(r) for r in row))
    return tuple(out)


def _boundary_to(c: Collection, p: Tree, op: str, height: int, side: int) -> str:
    """Iterated source (side 0) or target (side 1) of op down to the height."""
    t, x = p, op
    while t.stage > height:
        x = c.boundary(t, x)[side]
        t = truncate(t)
    return x


def fibre_product_violation(
    c: Collection, f: TreeMorphism, parts: Sequence[str]
) -> str | None:
    """Why the parts fail adjacent boundary agreement, or None if they pass."""
    q = f.target
    lvs = leaves(q)
    fibres = analyze_morphism(f)
    for i in range(len(lvs) - 1):
        h = hca_height(q, lvs[i], lvs[i + 1])
        a = _boundary_to(c, fibres[i], parts[i], h, 1)
        b = _boundary_to(c, fibres[i + 1], parts[i + 1], h, 0)
        if a != b:
            return (
                f"parts {i} and {i + 1} disagree at height {h}: {a} vs {b}"
            )
    return None


def parts_tuples(c: Collection, f: TreeMorphism) -> tuple[tuple[str, ...], ...]:
    """All part tuples for f that lie in the fibre product."""
    q = f.target
    lvs = leaves(q)
    fibres = analyze_morphism(f)
    n = len(fibres)
    heights = [hca_height(q, lvs[i], lvs[i + 1]) for i in range(n - 1)]
    opts = [c.ops_at(t) for t in fibres]
    # The boundary walks depend only on (position, op); hoisting them out of
    # the prefix search keeps the search linear in its output.
    out_b = [
        {op: _boundary_to(c, fibres[i], op, heights[i], 1) for op in opts[i]}
        for i in range(n - 1)
    ]
    grouped: list[dict[str, list[str]]] = []
    for i in range(1, n):
        g: dict[str, list[str]] = {}
        for op in opts[i]:
            g.setdefault(
                _boundary_to(c, fibres[i], op, heights[i - 1], 0), []
            ).append(op)
        grouped.append(g)
    out: list[tuple[str, ...]] = []

    def extend(i: int, chosen: tuple[str, ...]) -> None:
        if i == n:
            out.append(chosen)
            return
        if i == 0:
            pool: Sequence[str] = opts[0]
        else:
            pool = grouped[i - 1].get(out_b[i - 1][chosen[-1]], ())
        for op in pool:
            extend(i + 1, chosen + (op,))

    extend(0, ())
    return tuple(out)


def substitute_ops(
    A: Operad,
    f: TreeMorphism,
    b: str,
    parts: Sequence[str],
    memo: dict | None = None,
) -> str:
    """sigma_f(b; parts), validating the inputs first.

    memo, when given, caches results per (f, b, parts); the axiom checker
    replays many identical substitutions.
    """
    p, q = f.source, f.target
    c = A.carrier
    parts = tuple(parts)
    if memo is not None:
        hit = memo.get((f, b, parts))
        if hit is not None:
            return hit
    if A.max_nodes is not None and max(node_count(p), node_count(q)) > A.max_nodes:
        raise ValueError(
            f"bound exceeded: {tree_key(p)} -> {tree_key(q)} is larger than "
            f"{A.max_nodes} nodes"
        )
    if b not in c.ops_at(q):
        raise ValueError(f"{b} is not an operation at {tree_key(q)}")
    fibres = analyze_morphism(f)
    if len(parts) != len(fibres):
        raise ValueError(
            f"arity mismatch: {len(fibres)} fibres but {len(parts)} parts"
        )
    for a, t in zip(parts, fibres):
        if a not in c.ops_at(t):
            raise ValueError(f"part {a} is not an operation at {tree_key(t)}")
    msg = fibre_product_violation(c, f, parts)
    if msg is not None:
        raise ValueError(f"fibre product violation: {msg}")
    if c._implicit(p):
        out = POINT
    elif q == unit_tree(q.stage) and b == A.unit(q.stage):
        out = parts[0]
    else:
        out = A.subst(A, f, b, parts)
        if out not in c.ops_at(p):
            raise ValueError(
                f"substitution produced {out}, not an operation at {tree_key(p)}"
            )
    if memo is not None:
        memo[(f, b, parts)] = out
    return out


def unit_parts(A: Operad, f: TreeMorphism) -> tuple[str, ...]:
    """The tuple of units over the fibres of f, which must all be linear."""
    out = []
    for t in analyze_morphism(f):
        if t == unit_tree(t.stage):
            out.append(A.unit(t.stage))
        elif A.carrier._implicit(t):
            out.append(POINT)
        else:
            raise ValueError(f"no unit at fibre {tree_key(t)}")
    return tuple(out)


def _truncated_parts(
    A: Operad, f: TreeMorphism, parts: Sequence[str], side: int
) -> tuple[str, ...]:
    """Parts for the truncated morphism, one per fibre of tr f.

    A leaf of tr q that was already a leaf of q keeps its part; a node whose
    children were top-height leaves of q takes the source of the first part
    of its block (side 0) or the target of the last (side 1).
    """
    q = f.target
    c = A.carrier
    fibres = analyze_morphism(f)
    kids = _children(q)
    k = q.stage
    out: list[str] = []
    i = 0
    for h, x in leaves(truncate(q)):
        if h == k - 1 and kids[h][x]:
            n = len(kids[h][x])
            j = i if side == 0 else i + n - 1
            out.append(c.boundary(fibres[j], parts[j])[side])
            i += n
        else:
            out.append(parts[i])
            i += 1
    return tuple(out)


@lru_cache(maxsize=None)
def _composite_plan(
    f: TreeMorphism,
) -> tuple[tuple[tuple[int, ...] | tuple[int, int, int, int], ...], ...]:
    """How to source the inner parts for each fibre of a composite with f.

    For each leaf of the i-th fibre of f, either ("use", j): take the part
    over the j-th leaf of p directly, or ("bd", j, side, h): iterate that
    part's boundary on the given side down to height h.  Encoded as tuples
    (0, j) and (1, j, side, h).
    """
    p, q = f.source, f.target
    p_leaves = leaves(p)
    leaf_index = {node: j for j, node in enumerate(p_leaves)}
    kids = _children(p)

    def first_leaf_under(h: int, x: int, last: bool) -> int:
        while (h, x) not in leaf_index:
            x = kids[h][x][-1 if last else 0]
            h += 1
        return leaf_index[(h, x)]

    plans = []
    for i, leaf in enumerate(leaves(q)):
        _, sel = fibre_embedding(f, i)
        chain = ancestor_chain(q, leaf)
        steps: list[tuple[int, ...]] = []
        for h, loc in leaves(fibre_embedding(f, i)[0]):
            x = sel[h][loc]
            if (h, x) in leaf_index:
                steps.append((0, leaf_index[(h, x)]))
                continue
            # A fibre leaf over an internal node of p sits at the junction
            # with a neighbouring fibre; its part is the matching iterated
            # boundary of the nearest part on that side.
            children = kids[h][x]
            nxt = chain[h + 1]
            right = [y for y in children if f.maps[h + 1][y] > nxt]
            if right:
                steps.append((1, first_leaf_under(h + 1, right[0], False), 0, h))
            else:
                left = [y for y in children if f.maps[h + 1][y] < nxt]
                steps.append((1, first_leaf_under(h + 1, left[-1], True), 1, h))
        plans.append(tuple(steps))
    return tuple(plans)


def composite_parts(
    A: Operad,
    g: TreeMorphism,
    f: TreeMorphism,
    f_parts: Sequence[str],
    g_parts: Sequence[str],
    memo: dict | None = None,
) -> tuple[str, ...]:
    """Parts for g;f with sigma_{g;f}(b; result) = sigma_g(sigma_f(b; f_parts); g_parts).

    The i-th entry substitutes the relevant g_parts into f_parts[i] along the
    restriction of g over the i-th fibre of f.
    """
    c = A.carrier
    g_fibres = analyze_morphism(g)
    out = []
    for i, steps in enumerate(_composite_plan(f)):
        inner = []
        for step in steps:
            if step[0] == 0:
                inner.append(g_parts[step[1]])
            else:
                _, j, side, h = step
                inner.append(_boundary_to(c, g_fibres[j], g_parts[j], h, side))
        out.append(
            substitute_ops(
                A, restrict_to_fibre(g, f, i), f_parts[i], tuple(inner), memo
            )
        )
    return tuple(out)


# ---------------------------------------------------------------------------
# Axiom checking


def check_operad(A: Operad, bound: int = 5, *, fail_fast: bool = False) -> dict:
    """Exhaustive axiom check over tree morphisms within the bound.

    Runs boundary typing over every morphism, the unit laws over every tree,
    and two-stage against composite substitution over every composable pair,
    all restricted to trees with at most bound nodes.  Violations are
    recorded smallest trees first, so the first entry is a minimal witness;
    substitution failures are recorded too, never raised.
    """
    c = A.carrier
    instances = {"typing": 0, "units": 0, "assoc": 0}
    violations: list[dict] = []
    memo: dict = {}
    trees = scope_trees(c.dim, bound, nonlinear_only=False)

    by_stage: dict[int, list[Tree]] = {}
    for t in trees:
        by_stage.setdefault(t.stage, []).append(t)
    morphisms = {
        (p, q): enumerate_morphisms(p, q)
        for ts in by_stage.values()
        for q in ts
        for p in ts
    }
    tuples_of = {f: parts_tuples(c, f) for fs in morphisms.values() for f in fs}

    def typing_detail(f: TreeMorphism, b: str, parts: tuple[str, ...]) -> str | None:
        p, q = f.source, f.target
        try:
            out = substitute_ops(A, f, b, parts, memo)
        except ValueError as exc:
            return str(exc)
        if p.stage < 2:
            return None
        for side in (0, 1):
            got = c.boundary(p, out)[side]
            try:
                want = substitute_ops(
                    A,
                    f.truncate(),
                    c.boundary(q, b)[side],
                    _truncated_parts(A, f, parts, side),
                    memo,
                )
            except ValueError as exc:
                return str(exc)
            if got != want:
                return f"boundary {side}: {got} vs {want}"
        return None

    def check_typing() -> None:
        for (p, q), fs in morphisms.items():
            for f in fs:
                for b in c.ops_at(q):
                    for parts in tuples_of[f]:
                        instances["typing"] += 1
                        detail = typing_detail(f, b, parts)
                        if detail is not None:
                            violations.append(
                                {
                                    "kind": "typing",
                                    "morphism": morphism_key(f),
                                    "b": b,
                                    "parts": list(parts),
                                    "detail": detail,
                                }
                            )
                            if fail_fast:
                                return

    def check_units() -> None:
        for p in trees:
            idp = TreeMorphism.identity(p)
            term = terminal_morphism(p)
            one = A.unit(p.stage)
            try:
                ups = unit_parts(A, idp)
            except ValueError as exc:
                violations.append(
                    {
                        "kind": "unit",
                        "morphism": morphism_key(idp),
                        "b": None,
                        "detail": str(exc),
                    }
                )
                if fail_fast:
                    return
                continue
            laws = (
                (idp, lambda b: (idp, b, ups), "identity substitution"),
                (term, lambda b: (term, one, (b,)), "substitution into the unit"),
            )
            for b in c.ops_at(p):
                for mor, inputs, law in laws:
                    instances["units"] += 1
                    try:
                        got = substitute_ops(A, *inputs(b), memo)
                    except ValueError as exc:
                        detail = str(exc)
                    else:
                        detail = None if got == b else f"{law} gave {got}"
                    if detail is not None:
                        violations.append(
                            {
                                "kind": "unit",
                                "morphism": morphism_key(mor),
                                "b": b,
                                "detail": detail,
                            }
                        )
                        if fail_fast:
                            return

    def forced_assoc_count() -> int | None:
        # With at most one operation on every tree in scope, both sides of
        # the law are elements of the same singleton fibre, and the typing
        # pass has already evaluated every substitution either side can
        # involve, so the instances hold without being replayed.
        if violations or any(len(c.ops_at(t)) > 1 for t in trees):
            return None
        into = {t: 0 for t in trees}
        outof = {t: 0 for t in trees}
        for (src, dst), fs in morphisms.items():
            n_ops = len(c.ops_at(dst))
            for f in fs:
                k = len(tuples_of[f])
                outof[src] += n_ops * k
                into[dst] += k
        return sum(outof[t] * into[t] for t in trees)

    def check_assoc() -> None:
        forced = forced_assoc_count()
        if forced is not None:
            instances["assoc"] = forced
            return
        for mid in trees:
            stage_trees = by_stage[mid.stage]
            incoming = [
                (g, tuples_of[g])
                for p in stage_trees
                for g in morphisms[(p, mid)]
                if tuples_of[g]
            ]
            if not incoming:
                continue
            for q in stage_trees:
                q_ops = c.ops_at(q)
                if not q_ops:
                    continue
                for f in morphisms[(mid, q)]:
                    # Middle operations, grouped so the expensive composite
                    # parts are shared by every b.
                    f_insts = []
                    for f_parts in tuples_of[f]:
                        mids = []
                        for b in q_ops:
                            try:
                                mids.append((b, substitute_ops(A, f, b, f_parts, memo)))
                            except ValueError:
                                continue  # recorded by the typing pass
                        if mids:
                            f_insts.append((f_parts, mids))
                    if not f_insts:
                        continue
                    for g, g_tuples in incoming:
                        comp = g.then(f)
                        for f_parts, mids in f_insts:
                            for g_parts in g_tuples:
                                try:
                                    e = composite_parts(
                                        A, g, f, f_parts, g_parts, memo
                                    )
                                except ValueError as exc:
                                    instances["assoc"] += len(mids)
                                    violations.append(
                                        {
                                            "kind": "assoc",
                                            "f": morphism_key(f),
                                            "g": morphism_key(g),
                                            "b": mids[0][0],
                                            "f_parts": list(f_parts),
                                            "g_parts": list(g_parts),
                                            "detail": str(exc),
                                        }
                                    )
                                    if fail_fast:
                                        return
                                    continue
                                for b, mid_op in mids:
                                    instances["assoc"] += 1
                                    try:
                                        lhs = substitute_ops(
                                            A, g, mid_op, g_parts, memo
                                        )
                                        rhs = substitute_ops(A, comp, b, e, memo)
                                    except ValueError as exc:
                                        detail = str(exc)
                                    else:
                                        detail = (
                                            None
                                            if lhs == rhs
                                            else f"{lhs} vs {rhs}"
                                        )
                                    if detail is not None:
                                        violations.append(
                                            {
                                                "kind": "assoc",
                                                "f": morphism_key(f),
                                                "g": morphism_key(g),
                                                "b": b,
                                                "f_parts": list(f_parts),
                                                "g_parts": list(g_parts),
                                                "detail": detail,
                                            }
                                        )
                                        if fail_fast:
                                            return

    check_typing()
    if not (fail_fast and violations):
        check_units()
    if not (fail_fast and violations):
        check_assoc()

    return {
        "passed": not violations,
        "instances": instances,
        "violations": violations,
    }


def is_reduced(A: Operad) -> bool:
    """Every linear tree carries exactly one operation."""
    return all(
        len(names) == 1
        for key, names in A.carrier.ops.items()
        if is_linear(parse_tree_key(key))
    )


def derive_pointing(A: Operad, bound: int = 4) -> PointedCollection:
    """The restriction action along inclusions, substituting units.

    Functoriality and boundary naturality follow from the operad axioms;
    they are checked here over trees within the bound, not assumed.
    """
    if any(is_linear(parse_tree_key(k)) for k in A.carrier.ops):
        raise ValueError("pointings derive from reduced operads only")

    def action(g: TreeMorphism, x: str) -> str:
        return substitute_ops(A, g, x, unit_parts(A, g))

    pc = PointedCollection(A.carrier, action)
    rep = check_pointing(pc, bound)
    if not rep["ok"]:
        raise ValueError(f"substitution does not point: {rep['problems'][:3]}")
    return pc


# ---------------------------------------------------------------------------
# Stock operads


def terminal_operad(n: int, max_nodes: int = 6) -> Operad:
    """One operation at every tree; substitution has nowhere else to go."""
    ops = {}
    boundaries = {}
    for t in scope_trees(n, max_nodes):
        ops[tree_key(t)] = ("t",)
        if not is_linear(truncate(t)):
            boundaries[(tree_key(t), "t")] = ("t", "t")

    def rule(A: Operad, f: TreeMorphism, b: str, parts: tuple[str, ...]) -> str:
        return POINT if is_linear(f.source) else "t"

    return Operad(
        Collection(n, ops, boundaries), rule, max_nodes=max_nodes, name="terminal"
    )


def rgr_operad(n: int, max_nodes: int = 6) -> Operad:
    """Points at linear trees, nothing elsewhere.

    Algebras carry the degenerate cells of reflexive globular sets; every
    fibre injects into the terminal operad's, and substitution is forced.
    """

    def rule(A: Operad, f: TreeMorphism, b: str, parts: tuple[str, ...]) -> str:
        # Valid inputs only exist when the source is linear.
        return POINT

    return Operad(Collection(n, {}), rule, max_nodes=max_nodes, name="rgr")


# Binary bracketings, represented as nested pairs with "*" at the leaves.


def bracketings(m: int) -> tuple[object, ...]:
    """All binary bracketings of m letters; none for m = 0."""
    if m == 0:
        return ()
    if m == 1:
        return ("*",)
    out = []
    for left in range(1, m):
        for a in bracketings(left):
            for b in bracketings(m - left):
                out.append((a, b))
    return tuple(out)


def bracketing_word(t: object) -> str:
    """Canonical word with the leaves numbered left to right."""
    counter = itertools.count()

    def go(x: object) -> str:
        if x == "*":
            return str(next(counter))
        return "(" + go(x[0]) + go(x[1]) + ")"

    return go(t)


@lru_cache(maxsize=None)
def parse_bracketing(word: str) -> object:
    # Cached: rule evaluations parse the same few words millions of times.
    # The parses are shared, never mutated.
    pos = 0

    def go() -> object:
        nonlocal pos
        if word[pos] == "(":
            pos += 1
            left = go()
            right = go()
            if word[pos] != ")":
                raise ValueError(f"unbalanced bracketing {word!r}")
            pos += 1
            return (left, right)
        if not word[pos].isdigit():
            raise ValueError(f"bad bracketing {word!r}")
        pos += 1
        return "*"

    try:
        out = go()
    except IndexError:
        raise ValueError(f"unbalanced bracketing {word!r}") from None
    if pos != len(word):
        raise ValueError(f"trailing input in bracketing {word!r}")
    return out


def left_bracketing(m: int) -> str:
    """(((01)2)3)... with m letters."""
    if m < 1:
        raise ValueError("a bracketing needs at least one letter")
    t: object = "*"
    for _ in range(m - 1):
        t = (t, "*")
    return bracketing_word(t)


def right_bracketing(m: int) -> str:
    if m < 1:
        raise ValueError("a bracketing needs at least one letter")
    t: object = "*"
    for _ in range(m - 1):
        t = ("*", t)
    return bracketing_word(t)


def _graft(t: object, parts: Sequence[object]) -> object:
    """Substitute parts at the leaves; None prunes the leaf and collapses
    the node above it."""
    it = iter(parts)

    def go(x: object) -> object:
        if x == "*":
            return next(it)
        left, right = go(x[0]), go(x[1])
        if left is None:
            return right
        if right is None:
            return left
        return (left, right)

    out = go(t)
    for extra in it:
        raise ValueError("more parts than leaves")
    return out


def _op_tree(op: str, t: Tree) -> object:
    """The bracketing behind an operation at a stage-1 tree; None if nullary."""
    if op == POINT:
        return "*" if len(t.children) == 1 else None
    return parse_bracketing(op)


def _graft_word(b: str, f: TreeMorphism, parts: Sequence[str]) -> str:
    """One grafting step: substitute the parts' bracketings into b's along f."""
    grafted = _graft(
        _op_tree(b, f.target),
        [_op_tree(a, t) for a, t in zip(parts, analyze_morphism(f))],
    )
    return bracketing_word(grafted)


def _make_bracketing_rule() -> Callable[["Operad", TreeMorphism, str, tuple], str]:
    # Axiom checks replay the stage-2 rule over every operation pair at the
    # target, but the truncated parts depend only on (f, parts) and the
    # grafted boundary words only on small stage-1 data; both are cached for
    # the life of the operad.
    tp_cache: dict[tuple, tuple[tuple[str, ...], tuple[str, ...]]] = {}
    word_cache: dict[tuple, str] = {}

    def rule(A: Operad, f: TreeMorphism, b: str, parts: tuple[str, ...]) -> str:
        q = f.target
        if q.stage == 1:
            return _graft_word(b, f, parts)
        key = (f, parts)
        sides = tp_cache.get(key)
        if sides is None:
            sides = (
                _truncated_parts(A, f, parts, 0),
                _truncated_parts(A, f, parts, 1),
            )
            tp_cache[key] = sides
        tf = f.truncate()
        bs = A.carrier.boundary(q, b)
        words = []
        for side in (0, 1):
            wkey = (tf, bs[side], sides[side])
            w = word_cache.get(wkey)
            if w is None:
                w = _graft_word(bs[side], tf, sides[side])
                word_cache[wkey] = w
            words.append(w)
        return f"{words[0]}>{words[1]}"

    return rule


def bracketing_operad(max_nodes: int = 6) -> Operad:
    """Binary bracketings in dimension 2, grafted with strict unit pruning.

    Operations at a stage-1 tree with m branches are the bracketings of m
    letters; at a stage-2 tree they are source and target bracketings of the
    truncation, written "s>t".  Substituting the nullary point deletes the
    letter and collapses the node above it, so fully left and fully right
    bracketings are preserved by unit pruning.
    """
    if max_nodes > 10:
        raise ValueError("bracketing words use single digit positions")
    ops: dict[str, tuple[str, ...]] = {}
    boundaries: dict[tuple[str, str], tuple[str, str]] = {}
    for t in scope_trees(2, max_nodes):
        key = tree_key(t)
        if t.stage == 1:
            ops[key] = tuple(bracketing_word(b) for b in bracketings(len(t.children)))
            continue
        width = len(t.children)
        names = []
        for s in bracketings(width):
            for u in bracketings(width):
                sw, uw = bracketing_word(s), bracketing_word(u)
                names.append(f"{sw}>{uw}")
                if width >= 2:
                    boundaries[(key, f"{sw}>{uw}")] = (sw, uw)
        ops[key] = tuple(names)
    return Operad(
        Collection(2, ops, boundaries),
        _make_bracketing_rule(),
        max_nodes=max_nodes,
        name="bracketing2",
    )


def grafting_operad(max_nodes: int = 6) -> Operad:
    """Binary bracketings in dimension 1, grafted with strict unit pruning.

    The one-dimensional slice of the bracketing picture: operations at a
    stage-1 tree with m branches are the bracketings of m letters, and
    substitution grafts parts at the letters.  Every fibre here is rich, so
    constructions that collapse on singleton-fibred operads stay visible.
    """
    if max_nodes > 10:
        raise ValueError("bracketing words use single digit positions")
    ops = {
        tree_key(t): tuple(
            bracketing_word(b) for b in bracketings(len(t.children))
        )
        for t in scope_trees(1, max_nodes)
    }

    def rule(A: Operad, f: TreeMorphism, b: str, parts: tuple[str, ...]) -> str:
        return _graft_word(b, f, parts)

    return Operad(
        Collection(1, ops, {}), rule, max_nodes=max_nodes, name="bracketing1"
    )


# ---------------------------------------------------------------------------
# Tables


class TableSubst:
    """Substitution read off a finite table.

    Keys are (morphism key, operation, parts); only inputs the shortcut
    paths never answer appear, so every entry is one an axiom check can
    reach.
    """

    def __init__(self, table: Mapping[tuple[str, str, tuple[str, ...]], str]):
        self.table = dict(table)

    def __call__(
        self, A: Operad, f: TreeMorphism, b: str, parts: tuple[str, ...]
    ) -> str:
        key = (morphism_key(f), b, tuple(parts))
        if key not in self.table:
            raise ValueError(f"bound exceeded: no table entry for {key[0]}")
        return self.table[key]


def tabulate(A: Operad, bound: int) -> Operad:
    """Freeze A's substitution into a table over trees within the bound."""
    c = A.carrier
    table: dict[tuple[str, str, tuple[str, ...]], str] = {}
    trees = scope_trees(c.dim, bound, nonlinear_only=False)
    for q in trees:
        for p in trees:
            if p.stage != q.stage or c._implicit(p):
                continue
            unit_target = q == unit_tree(q.stage)
            for f in enumerate_morphisms(p, q):
                for b in c.ops_at(q):
                    if unit_target and b == A.unit(q.stage):
                        continue
                    for parts in parts_tuples(c, f):
                        table[(morphism_key(f), b, parts)] = substitute_ops(
                            A, f, b, parts
                        )
    return Operad(
        c,
        TableSubst(table),
        units=A.units,
        max_nodes=bound,
        name="table",
    )


def mutate_tabulated(A: Operad, seed: int) -> tuple[Operad, dict]:
    """Change one table entry to a different operation at the same tree."""
    if not isinstance(A.subst, TableSubst):
        raise ValueError("only table-backed operads mutate")
    rng = random.Random(seed)
    c = A.carrier
    candidates = []
    for key in sorted(A.subst.table):
        source = parse_morphism_key(key[0]).source
        if len(c.ops_at(source)) > 1:
            candidates.append((key, source))
    if not candidates:
        raise ValueError("no entry has an alternative result")
    key, source = candidates[rng.randrange(len(candidates))]
    old = A.subst.table[key]
    new = rng.choice([x for x in c.ops_at(source) if x != old])
    table = dict(A.subst.table)
    table[key] = new
    mutated = Operad(
        c,
        TableSubst(table),
        units=A.units,
        max_nodes=A.max_nodes,
        name="mutated",
    )
    return mutated, {"entry": list(key), "was": old, "now": new}

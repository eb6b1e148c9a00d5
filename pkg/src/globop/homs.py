"""Dimension change for reduced operads: single-column restriction and
columnwise products.

Write (p) for the tree obtained by adding a new root below p, so (p) has one
column holding p.  For a reduced operad B one dimension up, h(B) has fibre
at p the fibre of B at (p); in the other direction r(A) has fibre at
(p_1..p_m) the product of A's fibres at the columns, substituting
columnwise through the regrouping of source columns over target columns.
h(r(A)) gives back A on the nose, and the comparison nu_B: B -> r(h(B))
restricts an operation to its columns along the canonical inclusions.  The
checkers here replay nu against substitution elementwise and transport
contraction choices through both constructions.
"""

from __future__ import annotations

import itertools
import json
import random
from dataclasses import dataclass
from functools import lru_cache
from typing import Mapping, NamedTuple

from .collection import (
    POINT,
    Collection,
    PointedCollection,
    parallel_pairs,
    scope_trees,
)
from .contraction import (
    ContractionChoice,
    check_contraction,
    check_unital,
    contraction_scope,
)
from .operads import (
    Operad,
    derive_pointing,
    is_reduced,
    parts_tuples,
    substitute_ops,
)
from .trees import (
    Tree,
    TreeMorphism,
    analyze_morphism,
    canonical_inclusion,
    column_components,
    enumerate_morphisms,
    is_linear,
    leaves,
    morphism_key,
    node_count,
    parse_tree_key,
    tree_key,
    truncate,
    unit_tree,
)

__all__ = [
    "AdjunctionWitness",
    "ColumnRegrouping",
    "adjunction_witness",
    "apply_h",
    "apply_h_map",
    "apply_r",
    "apply_r_map",
    "check_nu_contraction",
    "check_nu_operadic",
    "check_operad_map",
    "column_regrouping",
    "compute_nu",
    "lift_contraction_h",
    "lift_contraction_r",
    "mutate_nu",
    "wrap",
    "wrap_morphism",
]


@lru_cache(maxsize=None)
def wrap(t: Tree) -> Tree:
    """(t): a new root with t as its only column."""
    return Tree(t.stage + 1, (t,))


@lru_cache(maxsize=None)
def wrap_morphism(f: TreeMorphism) -> TreeMorphism:
    """The same levelwise maps one height up, new roots matched."""
    # f.maps[0] = (0,) becomes the map on the old roots at height 1.
    return TreeMorphism._raw(wrap(f.source), wrap(f.target), ((0,),) + f.maps)


@lru_cache(maxsize=None)
def _pack(components: tuple[str, ...]) -> str:
    # One-column products keep the bare component name; that is what makes
    # h(r(A)) literally A instead of a renaming of it.
    if len(components) == 1:
        return components[0]
    return json.dumps(list(components), separators=(",", ":"))


@lru_cache(maxsize=None)
def _unpack(name: str, m: int) -> tuple[str, ...]:
    if m == 1:
        return (name,)
    if name == POINT:
        # Implicit fibres: every column of a linear tree is linear.
        return (POINT,) * m
    return tuple(json.loads(name))


class ColumnRegrouping(NamedTuple):
    """Index bookkeeping for substitution through column products.

    For f: p -> q, blocks[i] lists the columns of p sent to column i of q,
    in order, and slot[alpha] is alpha's position inside its block.  Column
    i of q owns the target leaves leaf_offset[i] .. leaf_offset[i] +
    leaf_count[i] - 1, and the fibre of f over the j-th of them has one
    column per member of blocks[i]: the fibre of that member's component
    morphism over leaf j of the column.
    """

    blocks: tuple[tuple[int, ...], ...]
    leaf_offset: tuple[int, ...]
    leaf_count: tuple[int, ...]
    slot: tuple[int, ...]


@lru_cache(maxsize=None)
def column_regrouping(f: TreeMorphism) -> ColumnRegrouping:
    q = f.target
    blocks: list[list[int]] = [[] for _ in q.children]
    slot: list[int] = []
    for alpha, i in enumerate(f.maps[1]):
        slot.append(len(blocks[i]))
        blocks[i].append(alpha)
    counts = tuple(len(leaves(c)) for c in q.children)
    offsets = []
    acc = 0
    for n in counts:
        offsets.append(acc)
        acc += n
    return ColumnRegrouping(
        tuple(tuple(b) for b in blocks), tuple(offsets), counts, tuple(slot)
    )


_components = lru_cache(maxsize=None)(column_components)


@lru_cache(maxsize=None)
def _fibre_widths(f: TreeMorphism) -> tuple[int, ...]:
    return tuple(len(t.children) for t in analyze_morphism(f))


@lru_cache(maxsize=None)
def _subst_plan(
    f: TreeMorphism,
) -> tuple[tuple[TreeMorphism, int, int, int, int], ...]:
    # One row per source column: its component morphism, the leaf window of
    # the target column it lands in, and its slot inside the block there.
    reg = column_regrouping(f)
    return tuple(
        (g, reg.leaf_offset[i], reg.slot[alpha], reg.leaf_count[i], i)
        for alpha, (i, g) in enumerate(_components(f))
    )


def _default_bound(A: Operad, delta: int, bound: int | None) -> int:
    if bound is not None:
        return bound
    if A.max_nodes is None:
        raise ValueError("no bound given and the operad carries none")
    return A.max_nodes + delta


def apply_h(B: Operad, bound: int | None = None) -> Operad:
    """h(B): the fibre at p is B's fibre at (p).

    The result lives one dimension down, over trees within the bound (one
    less than B's own bound by default, since (p) has one node more than p).
    """
    c = B.carrier
    if c.dim < 1:
        raise ValueError("h needs dimension at least 1")
    if not is_reduced(B):
        raise ValueError("h restricts reduced operads only")
    bound = _default_bound(B, -1, bound)
    ops: dict[str, tuple[str, ...]] = {}
    boundaries: dict[tuple[str, str], tuple[str, str]] = {}
    for p in scope_trees(c.dim - 1, bound, nonlinear_only=True):
        wp = wrap(p)
        if B.max_nodes is not None and node_count(wp) > B.max_nodes:
            raise ValueError(f"bound insufficient to evaluate {tree_key(wp)}")
        fibre = c.ops_at(wp)
        if not fibre:
            continue
        key = tree_key(p)
        ops[key] = fibre
        if p.stage >= 2 and not is_linear(truncate(p)):
            # Boundaries at (tr p) carry the same names as h's fibre there.
            for x in fibre:
                boundaries[(key, x)] = c.boundary(wp, x)
    memo: dict = {}

    def rule(A: Operad, f: TreeMorphism, b: str, parts: tuple[str, ...]) -> str:
        return substitute_ops(B, wrap_morphism(f), b, parts, memo)

    return Operad(
        Collection(c.dim - 1, ops, boundaries),
        rule,
        max_nodes=bound,
        name=f"h({B.name})" if B.name else "h",
    )


def apply_r(A: Operad, bound: int | None = None) -> Operad:
    """r(A): the fibre at (p_1..p_m) is the product of A's fibres at the
    columns, named componentwise.

    Substitution distributes over the source columns: the component at
    column alpha substitutes in A along alpha's component morphism, with the
    inner parts collected slotwise from the target leaves its block owns.
    """
    c = A.carrier
    if not is_reduced(A):
        raise ValueError("r extends reduced operads only")
    bound = _default_bound(A, +1, bound)
    dim = c.dim + 1
    ops: dict[str, tuple[str, ...]] = {}
    boundaries: dict[tuple[str, str], tuple[str, str]] = {}
    for p in scope_trees(dim, bound, nonlinear_only=True):
        cols = p.children
        fibres = [c.ops_at(col) for col in cols]
        if not all(fibres):
            # An empty column fibre empties the whole product.
            continue
        key = tree_key(p)
        combos = tuple(itertools.product(*fibres))
        ops[key] = tuple(_pack(combo) for combo in combos)
        if not is_linear(truncate(p)):
            for combo in combos:
                bds = [c.boundary(col, a) for col, a in zip(cols, combo)]
                boundaries[(key, _pack(combo))] = (
                    _pack(tuple(s for s, _ in bds)),
                    _pack(tuple(t for _, t in bds)),
                )
    memo: dict = {}

    def rule(R: Operad, f: TreeMorphism, b: str, parts: tuple[str, ...]) -> str:
        outer = _unpack(b, len(f.target.children))
        by_leaf = [_unpack(x, w) for x, w in zip(parts, _fibre_widths(f))]
        out = []
        for g, off, s, count, i in _subst_plan(f):
            inner = tuple(by_leaf[off + j][s] for j in range(count))
            key = (g, outer[i], inner)
            v = memo.get(key)
            if v is None:
                v = substitute_ops(A, g, outer[i], inner, memo)
            out.append(v)
        return _pack(tuple(out))

    return Operad(
        Collection(dim, ops, boundaries),
        rule,
        max_nodes=bound,
        name=f"r({A.name})" if A.name else "r",
    )


def _image_of(F: Mapping[tuple[str, str], str], t: Tree, op: str) -> str:
    if is_linear(t):
        return POINT
    return F[(tree_key(t), op)]


def apply_h_map(
    B: Operad, F: Mapping[tuple[str, str], str], bound: int | None = None
) -> dict[tuple[str, str], str]:
    """h of an operad map out of B: the values read at one-column trees."""
    bound = _default_bound(B, -1, bound)
    out: dict[tuple[str, str], str] = {}
    for p in scope_trees(B.carrier.dim - 1, bound, nonlinear_only=True):
        wp = wrap(p)
        for op in B.carrier.ops_at(wp):
            out[(tree_key(p), op)] = _image_of(F, wp, op)
    return out


def apply_r_map(
    A: Operad, F: Mapping[tuple[str, str], str], bound: int | None = None
) -> dict[tuple[str, str], str]:
    """r of an operad map out of A, acting on the products componentwise."""
    bound = _default_bound(A, +1, bound)
    c = A.carrier
    out: dict[tuple[str, str], str] = {}
    for p in scope_trees(c.dim + 1, bound, nonlinear_only=True):
        cols = p.children
        fibres = [c.ops_at(col) for col in cols]
        if not all(fibres):
            continue
        key = tree_key(p)
        for combo in itertools.product(*fibres):
            out[(key, _pack(combo))] = _pack(
                tuple(_image_of(F, col, a) for col, a in zip(cols, combo))
            )
    return out


def compute_nu(
    B: Operad,
    bound: int | None = None,
    *,
    pointing: PointedCollection | None = None,
) -> dict[tuple[str, str], str]:
    """nu_B: each operation restricted to its columns along the canonical
    inclusions (p_i) -> p, packed as an r(h(B)) operation.

    The table is verified as it is built: restriction along the identity
    inclusion of a one-column tree must not move the operation, and the
    packed restrictions must commute with source and target.
    """
    c = B.carrier
    bound = _default_bound(B, 0, bound)
    if pointing is None:
        pointing = derive_pointing(B, min(bound, 4))
    nu: dict[tuple[str, str], str] = {}
    for p in scope_trees(c.dim, bound, nonlinear_only=True):
        key = tree_key(p)
        incs = [canonical_inclusion(p, i) for i in range(1, len(p.children) + 1)]
        for b in c.ops_at(p):
            comps = tuple(pointing.act(inc, b) for inc in incs)
            if len(comps) == 1 and comps[0] != b:
                raise ValueError(
                    f"restriction along the identity moved {b} at {key}"
                )
            nu[(key, b)] = _pack(comps)
    _verify_nu_boundaries(c, nu, bound)
    return nu


def _verify_nu_boundaries(
    c: Collection, nu: Mapping[tuple[str, str], str], bound: int
) -> None:
    for p in scope_trees(c.dim, bound, nonlinear_only=True):
        tq = truncate(p)
        if is_linear(tq):
            # Boundaries over a linear truncation are implicit on both ends.
            continue
        key = tree_key(p)
        m = len(p.children)
        for b in c.ops_at(p):
            comps = _unpack(nu[(key, b)], m)
            for side, x in zip((0, 1), c.boundary(p, b)):
                packed = _pack(
                    tuple(
                        c.boundary(wrap(col), a)[side]
                        for col, a in zip(p.children, comps)
                    )
                )
                if packed != nu[(tree_key(tq), x)]:
                    raise ValueError(
                        f"nu does not commute with boundaries at {key}: "
                        f"{packed} vs {nu[(tree_key(tq), x)]}"
                    )


@dataclass
class AdjunctionWitness:
    """The two transports of B with the comparison into their composite.

    A is h(B), rh is r(A), and nu maps each operation of B to its packed
    column restrictions in rh; bound is the node bound everything was
    built at.
    """

    B: Operad
    A: Operad
    rh: Operad
    nu: dict[tuple[str, str], str]
    bound: int

    def nu_of(self, p: Tree, op: str) -> str:
        if is_linear(p):
            return POINT
        return self.nu[(tree_key(p), op)]


def adjunction_witness(B: Operad, bound: int | None = None) -> AdjunctionWitness:
    """Build h(B), r(h(B)) and nu_B at one shared node bound."""
    bound = _default_bound(B, 0, bound)
    A = apply_h(B, bound - 1)
    rh = apply_r(A, bound)
    nu = compute_nu(B, bound)
    return AdjunctionWitness(B, A, rh, nu, bound)


class _StopCheck(Exception):
    pass


def check_operad_map(
    P: Operad,
    Q: Operad,
    F: Mapping[tuple[str, str], str],
    bound: int | None = None,
    *,
    fail_fast: bool = False,
) -> dict:
    """Does F: P -> Q preserve fibres, boundaries, and substitution?

    F maps (tree key, operation) to an operation of Q at the same tree;
    implicit points go to implicit points.  Substitution is replayed over
    every morphism and part tuple within the bound on both sides, smallest
    trees first, so the first violation recorded is a minimal witness.
    Evaluation failures are recorded as violations, never raised.
    """
    cp, cq = P.carrier, Q.carrier
    if cp.dim != cq.dim:
        raise ValueError("operad maps keep the dimension")
    bound = _default_bound(P, 0, bound)
    instances = {"fibre": 0, "subst": 0}
    violations: list[dict] = []

    def note(v: dict) -> None:
        violations.append(v)
        if fail_fast:
            raise _StopCheck

    try:
        for t in scope_trees(cp.dim, bound, nonlinear_only=True):
            key = tree_key(t)
            qops = cq.ops_at(t)
            tq = truncate(t)
            for op in cp.ops_at(t):
                instances["fibre"] += 1
                img = F.get((key, op))
                if img is None:
                    note({"kind": "fibre", "tree": key, "op": op,
                          "detail": "no image"})
                    continue
                if img not in qops:
                    note({"kind": "fibre", "tree": key, "op": op,
                          "detail": f"image {img} is not an operation"})
                    continue
                try:
                    want = tuple(
                        _image_of(F, tq, x) for x in cp.boundary(t, op)
                    )
                except KeyError as e:
                    note({"kind": "fibre", "tree": key, "op": op,
                          "detail": f"no image for boundary {e}"})
                    continue
                got = cq.boundary(t, img)
                if got != want:
                    note({"kind": "fibre", "tree": key, "op": op,
                          "detail": f"boundary {got} vs {want}"})

        trees = scope_trees(cp.dim, bound, nonlinear_only=False)
        by_stage: dict[int, list[Tree]] = {}
        for t in trees:
            by_stage.setdefault(t.stage, []).append(t)
        for stage, ts in sorted(by_stage.items()):
            ut = unit_tree(stage)
            for q in ts:
                unit_q = q == ut
                bs = cp.ops_at(q)
                if not bs:
                    continue
                for p in ts:
                    imp_p = cp._implicit(p)
                    imp_q = cq._implicit(p)
                    pops = frozenset(cp.ops_at(p))
                    qpops = frozenset(cq.ops_at(p))
                    for f in enumerate_morphisms(p, q):
                        tuples = parts_tuples(cp, f)
                        if not tuples:
                            continue
                        fibres = analyze_morphism(f)
                        seen = 0
                        for parts in tuples:
                            try:
                                mapped = tuple(
                                    _image_of(F, t, a)
                                    for t, a in zip(fibres, parts)
                                )
                            except KeyError as e:
                                seen += len(bs)
                                note({"kind": "subst",
                                      "morphism": morphism_key(f),
                                      "parts": list(parts),
                                      "detail": f"no image for part {e}"})
                                continue
                            seen += len(bs)
                            for b in bs:
                                try:
                                    if imp_p:
                                        raw = POINT
                                    elif unit_q and b == P.unit(stage):
                                        raw = parts[0]
                                    else:
                                        raw = P.subst(P, f, b, parts)
                                        if raw not in pops:
                                            raise ValueError(
                                                f"{raw} is not an operation"
                                            )
                                    lhs = _image_of(F, p, raw)
                                except (KeyError, ValueError) as e:
                                    note({"kind": "subst",
                                          "morphism": morphism_key(f),
                                          "op": b, "parts": list(parts),
                                          "detail": f"left side: {e}"})
                                    continue
                                try:
                                    fb = _image_of(F, q, b)
                                    if imp_q:
                                        rhs = POINT
                                    elif unit_q and fb == Q.unit(stage):
                                        rhs = mapped[0]
                                    else:
                                        rhs = Q.subst(Q, f, fb, mapped)
                                        if rhs not in qpops:
                                            raise ValueError(
                                                f"{rhs} is not an operation"
                                            )
                                except (KeyError, ValueError) as e:
                                    note({"kind": "subst",
                                          "morphism": morphism_key(f),
                                          "op": b, "parts": list(parts),
                                          "detail": f"right side: {e}"})
                                    continue
                                if lhs != rhs:
                                    note({"kind": "subst",
                                          "morphism": morphism_key(f),
                                          "op": b, "parts": list(parts),
                                          "detail": f"{lhs} vs {rhs}"})
                        instances["subst"] += seen
    except _StopCheck:
        pass
    return {
        "passed": not violations,
        "instances": instances,
        "violations": violations,
    }


def check_nu_operadic(
    B: Operad,
    bound: int | None = None,
    *,
    witness: AdjunctionWitness | None = None,
    nu: Mapping[tuple[str, str], str] | None = None,
    fail_fast: bool = False,
) -> dict:
    """Substituting in B then restricting equals restricting then
    substituting in r(h(B)), elementwise over every morphism in scope."""
    w = witness if witness is not None else adjunction_witness(B, bound)
    table = w.nu if nu is None else dict(nu)
    report = check_operad_map(B, w.rh, table, w.bound, fail_fast=fail_fast)
    report["operad"] = B.name
    return report


def _reverify(A: Operad, choice: ContractionChoice, bound: int) -> None:
    rep = check_contraction(A, choice, bound)
    if rep["passed"] and choice.kind == "unital":
        rep = check_unital(A, choice, bound)
    if not rep["passed"]:
        raise ValueError(
            f"lifted {choice.kind} choice fails: {rep['violations'][:2]}"
        )


def lift_contraction_h(
    B: Operad,
    gamma: ContractionChoice,
    bound: int | None = None,
    *,
    hB: Operad | None = None,
) -> ContractionChoice:
    """The filler at p is gamma's filler at (p); re-verified over h(B)."""
    bound = _default_bound(B, -1, bound)
    if hB is None:
        hB = apply_h(B, bound)
    c = hB.carrier
    table: dict[tuple[str, str, str], str] = {}
    for p in contraction_scope(c, bound, gamma.kind):
        key = tree_key(p)
        wkey = tree_key(wrap(p))
        for pair in parallel_pairs(c, p):
            entry = gamma.table.get((wkey, pair.src, pair.tgt))
            if entry is None:
                raise ValueError(
                    f"gamma has no filler at {wkey} for "
                    f"({pair.src}, {pair.tgt})"
                )
            table[(key, pair.src, pair.tgt)] = entry
    lifted = ContractionChoice(
        gamma.kind, table, name=f"h({gamma.name})" if gamma.name else "h-lift"
    )
    _reverify(hB, lifted, bound)
    return lifted


def lift_contraction_r(
    A: Operad,
    psi: ContractionChoice,
    bound: int | None = None,
    *,
    rA: Operad | None = None,
) -> ContractionChoice:
    """The filler at (p_1..p_m) packs psi's fillers at the non-linear
    columns and the point at the linear ones; re-verified over r(A)."""
    bound = _default_bound(A, +1, bound)
    if rA is None:
        rA = apply_r(A, bound)
    c = rA.carrier
    table: dict[tuple[str, str, str], str] = {}
    for p in contraction_scope(c, bound, psi.kind):
        key = tree_key(p)
        if is_linear(p):
            for pair in parallel_pairs(c, p):
                table[(key, pair.src, pair.tgt)] = POINT
            continue
        cols = p.children
        m = len(cols)
        for pair in parallel_pairs(c, p):
            xs = _unpack(pair.src, m)
            ys = _unpack(pair.tgt, m)
            comps = []
            for col, x, y in zip(cols, xs, ys):
                if is_linear(col):
                    comps.append(POINT)
                    continue
                entry = psi.table.get((tree_key(col), x, y))
                if entry is None:
                    raise ValueError(
                        f"psi has no filler at {tree_key(col)} for ({x}, {y})"
                    )
                comps.append(entry)
            table[(key, pair.src, pair.tgt)] = _pack(tuple(comps))
    lifted = ContractionChoice(
        psi.kind, table, name=f"r({psi.name})" if psi.name else "r-lift"
    )
    _reverify(rA, lifted, bound)
    return lifted


def check_nu_contraction(
    B: Operad,
    gamma: ContractionChoice,
    bound: int | None = None,
    *,
    witness: AdjunctionWitness | None = None,
) -> dict:
    """nu sends gamma's filler to the filler the double lift picks.

    gamma lifts through h and the lift again through r; for every parallel
    pair in scope, restricting gamma's filler must agree with the double
    lift at the restricted pair.
    """
    w = witness if witness is not None else adjunction_witness(B, bound)
    g1 = lift_contraction_h(B, gamma, w.bound - 1, hB=w.A)
    g2 = lift_contraction_r(w.A, g1, w.bound, rA=w.rh)
    c = B.carrier
    instances = 0
    violations: list[dict] = []
    for p in scope_trees(c.dim, w.bound, nonlinear_only=True):
        key = tree_key(p)
        tq = truncate(p)
        for pair in parallel_pairs(c, p):
            entry = gamma.table.get((key, pair.src, pair.tgt))
            if entry is None:
                violations.append(
                    {"tree": key, "src": pair.src, "tgt": pair.tgt,
                     "detail": "no gamma filler"}
                )
                continue
            instances += 1
            lhs = w.nu_of(p, entry)
            ra = w.nu_of(tq, pair.src)
            rb = w.nu_of(tq, pair.tgt)
            rhs = g2.table.get((key, ra, rb))
            if rhs is None:
                violations.append(
                    {"tree": key, "src": pair.src, "tgt": pair.tgt,
                     "detail": f"no lifted filler at ({ra}, {rb})"}
                )
            elif lhs != rhs:
                violations.append(
                    {"tree": key, "src": pair.src, "tgt": pair.tgt,
                     "detail": f"{lhs} vs {rhs}"}
                )
    return {
        "passed": not violations,
        "instances": instances,
        "violations": violations,
    }


def mutate_nu(
    witness: AdjunctionWitness, seed: int
) -> tuple[dict[tuple[str, str], str], dict]:
    """One nu entry moved to a different operation in the same fibre,
    preferring one with the same boundary."""
    rng = random.Random(seed)
    c = witness.rh.carrier
    candidates = []
    for (key, op), val in witness.nu.items():
        others = [x for x in c.ops_at(parse_tree_key(key)) if x != val]
        if others:
            candidates.append(((key, op), val, others))
    if not candidates:
        raise ValueError("every fibre in scope is a singleton")
    (key, op), old, others = candidates[rng.randrange(len(candidates))]
    t = parse_tree_key(key)
    same = [x for x in others if c.boundary(t, x) == c.boundary(t, old)]
    new = rng.choice(same or others)
    table = dict(witness.nu)
    table[(key, op)] = new
    return table, {"entry": [key, op], "was": old, "now": new}

"""Globular pasting trees.

A k-stage tree describes a k-dimensional pasting shape.  The nested form is
canonical: stage 0 is the point `*`, a tree of stage k >= 1 is a finite
sequence of (k-1)-stage trees (its columns).  The equivalent level form is a
chain of weakly monotone parent maps, one per height, derived on demand.

Node addresses are (height, index) pairs, index counted within the height in
left-to-right order.  Leaves (nodes without children) are ordered depth-first
left-to-right, which agrees with level order within each height.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, Sequence

__all__ = [
    "Tree",
    "TreeMorphism",
    "STAR",
    "analyze_morphism",
    "ancestor_chain",
    "canonical_inclusion",
    "column_components",
    "decompose_inclusion",
    "empty_tree",
    "enumerate_inclusions",
    "enumerate_morphisms",
    "enumerate_trees",
    "fibre_embedding",
    "fibre_over",
    "hca_height",
    "is_linear",
    "leaves",
    "level_sizes",
    "min_stage",
    "morphism_key",
    "node_count",
    "nonlinear_height",
    "parent_maps",
    "parse_tree",
    "parse_tree_key",
    "serialize",
    "subsequence_inclusion",
    "substitute",
    "suspend",
    "tree_from_levels",
    "tree_key",
    "truncate",
    "truncate_to",
    "truncated_fibres",
    "unit_tree",
]


@dataclass(frozen=True)
class Tree:
    """k-stage tree in nested form; children sit exactly one stage below."""

    stage: int
    children: tuple["Tree", ...] = ()

    def __post_init__(self) -> None:
        if self.stage < 0:
            raise ValueError("stage must be non-negative")
        if self.stage == 0 and self.children:
            raise ValueError("a stage-0 tree has no children")
        for child in self.children:
            if child.stage != self.stage - 1:
                raise ValueError("child stage must be parent stage minus one")

    def __hash__(self) -> int:
        # Trees key every cache in the module; recursive field hashing is
        # too slow to redo per lookup.
        h = self.__dict__.get("_hash")
        if h is None:
            h = hash((self.stage, self.children))
            object.__setattr__(self, "_hash", h)
        return h

    def __eq__(self, other: object) -> bool:
        # Same reason as __hash__: cache hits would otherwise pay a full
        # recursive field comparison. Stage plus serialized form determines
        # the tree, and both are cached.
        if self is other:
            return True
        if not isinstance(other, Tree):
            return NotImplemented
        return self.stage == other.stage and serialize(self) == serialize(other)

    def __repr__(self) -> str:
        return f"Tree({serialize(self)}@{self.stage})"


STAR = Tree(0)


def unit_tree(stage: int) -> Tree:
    """U_k: the linear tree with one leaf at full height."""
    t = STAR
    for _ in range(stage):
        t = Tree(t.stage + 1, (t,))
    return t


def empty_tree(stage: int) -> Tree:
    """The stage-k tree with no columns (k-fold suspension of the point)."""
    if stage < 1:
        raise ValueError("empty tree needs stage >= 1")
    return Tree(stage, ())


def serialize(t: Tree) -> str:
    # Cached on the instance: boundary lookups key on serialized forms, so
    # this runs once per distinct tree instead of once per lookup.
    s = t.__dict__.get("_serial")
    if s is None:
        if t.stage == 0:
            s = "*"
        else:
            s = "[" + ",".join(serialize(c) for c in t.children) + "]"
        object.__setattr__(t, "_serial", s)
    return s


@lru_cache(maxsize=None)
def min_stage(t: Tree) -> int:
    """Smallest stage whose nested form has this serialization."""
    if t.stage == 0:
        return 0
    return 1 + max((min_stage(c) for c in t.children), default=0)


def tree_key(t: Tree) -> str:
    """Serialized form, with an @stage suffix only where the form is ambiguous."""
    s = serialize(t)
    if t.stage != min_stage(t):
        return f"{s}@{t.stage}"
    return s


def parse_tree_key(key: str) -> Tree:
    if "@" in key:
        body, _, stage = key.rpartition("@")
        return parse_tree(body, int(stage))
    return parse_tree(key)


def _contains_star(t: Tree) -> bool:
    if t.stage == 0:
        return True
    return any(_contains_star(c) for c in t.children)


def suspend(t: Tree) -> Tree:
    """z: keep every node at its height and add an empty top level."""
    if t.stage == 0:
        return Tree(1, ())
    return Tree(t.stage + 1, tuple(suspend(c) for c in t.children))


def _parse(text: str, pos: int) -> tuple[Tree, int]:
    if pos >= len(text):
        raise ValueError("unexpected end of input")
    ch = text[pos]
    if ch == "*":
        return STAR, pos + 1
    if ch != "[":
        raise ValueError(f"unexpected character {ch!r} at {pos}")
    pos += 1
    children: list[Tree] = []
    if pos < len(text) and text[pos] == "]":
        return Tree(1, ()), pos + 1
    while True:
        child, pos = _parse(text, pos)
        children.append(child)
        if pos >= len(text):
            raise ValueError("unbalanced brackets")
        if text[pos] == ",":
            pos += 1
            continue
        if text[pos] == "]":
            pos += 1
            break
        raise ValueError(f"unexpected character {text[pos]!r} at {pos}")
    # Children parsed at their minimal stages; align star-free ones upward.
    target = max(c.stage for c in children)
    lifted = []
    for c in children:
        if c.stage < target:
            if _contains_star(c):
                raise ValueError("ragged tree: sibling stages disagree")
            for _ in range(target - c.stage):
                c = suspend(c)
        lifted.append(c)
    return Tree(target + 1, tuple(lifted)), pos


def parse_tree(text: str, stage: int | None = None) -> Tree:
    """Parse the canonical form.

    Without an explicit stage the minimal consistent stage is used; a star-free
    form read at a higher stage denotes the suspended tree.
    """
    t, pos = _parse(text.strip(), 0)
    if pos != len(text.strip()):
        raise ValueError("trailing input after tree")
    if stage is not None:
        if stage < t.stage:
            raise ValueError(f"tree {text!r} needs stage >= {t.stage}")
        if stage > t.stage:
            if _contains_star(t):
                raise ValueError(f"tree {text!r} has fixed stage {t.stage}")
            for _ in range(stage - t.stage):
                t = suspend(t)
    return t


@lru_cache(maxsize=None)
def node_count(t: Tree) -> int:
    """Number of non-root nodes."""
    return sum(1 + node_count(c) for c in t.children)


@lru_cache(maxsize=None)
def level_sizes(t: Tree) -> tuple[int, ...]:
    """Sizes of the node levels, height 0..stage."""
    sizes = [1] + [0] * t.stage
    for c in t.children:
        for r, n in enumerate(level_sizes(c)):
            sizes[r + 1] += n
    return tuple(sizes)


@lru_cache(maxsize=None)
def parent_maps(t: Tree) -> tuple[tuple[int, ...], ...]:
    """maps[h] sends each height-h node to its parent index, h = 1..stage.

    maps[0] is an empty placeholder so indices line up with heights.
    """
    maps: list[tuple[int, ...]] = [()]
    if t.stage == 0:
        return tuple(maps)
    maps.append(tuple(0 for _ in t.children))
    for r in range(2, t.stage + 1):
        row: list[int] = []
        off = 0
        for c in t.children:
            row.extend(v + off for v in parent_maps(c)[r - 1])
            off += level_sizes(c)[r - 2]
        maps.append(tuple(row))
    return tuple(maps)


def tree_from_levels(stage: int, maps: Sequence[Sequence[int]]) -> Tree:
    """Rebuild the nested form from parent maps (height 1..stage)."""
    if len(maps) != stage + 1:
        raise ValueError("need one parent map per height plus the placeholder")
    sizes = [1] + [len(m) for m in maps[1:]]
    kids: list[list[list[int]]] = []
    for r in range(stage + 1):
        kids.append([[] for _ in range(sizes[r])])
    for r in range(1, stage + 1):
        prev = -1
        for j, p in enumerate(maps[r]):
            if not 0 <= p < sizes[r - 1]:
                raise ValueError("parent index out of range")
            if p < prev:
                raise ValueError("parent map must be weakly monotone")
            prev = p
            kids[r - 1][p].append(j)

    def build(h: int, i: int) -> Tree:
        if h == stage:
            return Tree(0)
        return Tree(stage - h, tuple(build(h + 1, j) for j in kids[h][i]))

    return build(0, 0)


@lru_cache(maxsize=None)
@lru_cache(maxsize=None)
def leaves(t: Tree) -> tuple[tuple[int, int], ...]:
    """(height, index) of each childless node, depth-first left-to-right."""
    if t.stage == 0 or not t.children:
        return ((0, 0),)
    out: list[tuple[int, int]] = []
    offs = [0] * (t.stage + 1)
    for c in t.children:
        for h, j in leaves(c):
            out.append((h + 1, j + offs[h + 1]))
        for r, n in enumerate(level_sizes(c)):
            offs[r + 1] += n
    return tuple(out)


@lru_cache(maxsize=None)
def is_linear(t: Tree) -> bool:
    """One leaf: the tree is some suspension of a unit tree."""
    if t.stage == 0 or not t.children:
        return True
    if len(t.children) > 1:
        return False
    return is_linear(t.children[0])


@lru_cache(maxsize=None)
def truncate(t: Tree) -> Tree:
    """Drop the top level."""
    if t.stage < 1:
        raise ValueError("cannot truncate a stage-0 tree")
    if t.stage == 1:
        return STAR
    return Tree(t.stage - 1, tuple(truncate(c) for c in t.children))


def truncate_to(t: Tree, height: int) -> Tree:
    if not 0 <= height <= t.stage:
        raise ValueError("truncation height out of range")
    while t.stage > height:
        t = truncate(t)
    return t


def nonlinear_height(t: Tree) -> int:
    """Least height whose truncation is non-linear; 0 for linear trees."""
    if is_linear(t):
        return 0
    for h in range(1, t.stage + 1):
        if not is_linear(truncate_to(t, h)):
            return h
    raise AssertionError("unreachable")


def ancestor_chain(t: Tree, node: tuple[int, int]) -> tuple[int, ...]:
    """Indices of the node's ancestors, chain[r] at height r for r <= height."""
    h, j = node
    maps = parent_maps(t)
    chain = [0] * (h + 1)
    chain[h] = j
    for r in range(h, 0, -1):
        chain[r - 1] = maps[r][chain[r]]
    return tuple(chain)


def hca_height(t: Tree, a: tuple[int, int], b: tuple[int, int]) -> int:
    """Height of the highest common ancestor of two nodes."""
    ca = ancestor_chain(t, a)
    cb = ancestor_chain(t, b)
    h = min(len(ca), len(cb)) - 1
    while ca[h] != cb[h]:
        h -= 1
    return h


def enumerate_trees(stage: int, max_nodes: int) -> tuple[Tree, ...]:
    """All stage-s trees with at most max_nodes non-root nodes.

    Sorted lexicographically on the serialized form.
    """
    return tuple(
        sorted(_enumerate_trees(stage, max_nodes), key=serialize)
    )


@lru_cache(maxsize=None)
def _enumerate_trees(stage: int, max_nodes: int) -> tuple[Tree, ...]:
    if stage == 0:
        return (STAR,)
    out: list[Tree] = []
    for seq in _tree_sequences(stage - 1, max_nodes):
        out.append(Tree(stage, seq))
    return tuple(out)


@lru_cache(maxsize=None)
def _tree_sequences(stage: int, budget: int) -> tuple[tuple[Tree, ...], ...]:
    """Sequences of stage-s trees with total cost (columns + their nodes) <= budget."""
    out: list[tuple[Tree, ...]] = [()]
    if budget >= 1:
        for first in _enumerate_trees(stage, budget - 1):
            cost = 1 + node_count(first)
            for rest in _tree_sequences(stage, budget - cost):
                out.append((first,) + rest)
    return tuple(out)


# ---------------------------------------------------------------------------
# Morphisms


@dataclass(frozen=True)
class TreeMorphism:
    """Levelwise map between trees of the same stage.

    maps[h] assigns each height-h node of source a height-h node of target.
    Constraints: maps[0] = (0,), parents commute, and each sibling block is
    sent weakly monotonely into the image parent's children.
    """

    source: Tree
    target: Tree
    maps: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        p, q = self.source, self.target
        if p.stage != q.stage:
            raise ValueError("morphism needs equal stages")
        if len(self.maps) != p.stage + 1:
            raise ValueError("need one level map per height")
        if self.maps[0] != (0,):
            raise ValueError("height 0 must be the identity")
        sp, sq = level_sizes(p), level_sizes(q)
        pp, pq = parent_maps(p), parent_maps(q)
        for r in range(1, p.stage + 1):
            m = self.maps[r]
            if len(m) != sp[r]:
                raise ValueError(f"level {r} map has wrong length")
            for y, v in enumerate(m):
                if not 0 <= v < sq[r]:
                    raise ValueError(f"level {r} value out of range")
                if pq[r][v] != self.maps[r - 1][pp[r][y]]:
                    raise ValueError(f"level {r} does not commute with parents")
            for y in range(1, sp[r]):
                if pp[r][y] == pp[r][y - 1] and m[y] < m[y - 1]:
                    raise ValueError(f"level {r} not monotone on siblings")

    def __hash__(self) -> int:
        h = self.__dict__.get("_hash")
        if h is None:
            h = hash((self.source, self.target, self.maps))
            object.__setattr__(self, "_hash", h)
        return h

    @classmethod
    def _raw(cls, source: Tree, target: Tree, maps: tuple) -> "TreeMorphism":
        # Constraint checks skipped; only for maps already known valid.
        self = object.__new__(cls)
        object.__setattr__(self, "source", source)
        object.__setattr__(self, "target", target)
        object.__setattr__(self, "maps", maps)
        return self

    @classmethod
    def identity(cls, t: Tree) -> "TreeMorphism":
        maps = tuple(tuple(range(n)) for n in level_sizes(t))
        return cls._raw(t, t, ((0,),) + maps[1:])

    def then(self, g: "TreeMorphism") -> "TreeMorphism":
        """Composite self;g where self: p->q and g: q->r."""
        if self.target != g.source:
            raise ValueError("morphisms do not compose")
        maps = tuple(
            tuple(g.maps[r][v] for v in self.maps[r])
            for r in range(len(self.maps))
        )
        # Valid levelwise maps compose to valid levelwise maps.
        return TreeMorphism._raw(self.source, g.target, maps)

    def truncate(self) -> "TreeMorphism":
        if self.source.stage < 1:
            raise ValueError("cannot truncate a stage-0 morphism")
        out = self.__dict__.get("_trunc")
        if out is None:
            # Truncating a valid morphism keeps every levelwise constraint.
            out = TreeMorphism._raw(
                truncate(self.source), truncate(self.target), self.maps[:-1]
            )
            object.__setattr__(self, "_trunc", out)
        return out

    def is_inclusion(self) -> bool:
        return all(len(set(m)) == len(m) for m in self.maps)

    def __repr__(self) -> str:
        return f"TreeMorphism({morphism_key(self)})"


def morphism_key(f: TreeMorphism) -> str:
    lv = json.dumps([list(m) for m in f.maps], separators=(",", ":"))
    return f"{tree_key(f.source)}=>{tree_key(f.target)}:{lv}"


def parse_morphism_key(key: str) -> TreeMorphism:
    head, _, lv = key.rpartition(":")
    src, _, dst = head.partition("=>")
    maps = tuple(tuple(m) for m in json.loads(lv))
    return TreeMorphism(parse_tree_key(src), parse_tree_key(dst), maps)


def terminal_morphism(p: Tree) -> TreeMorphism:
    """The unique morphism p -> U_k."""
    maps = ((0,),) + tuple((0,) * n for n in level_sizes(p)[1:])
    return TreeMorphism(p, unit_tree(p.stage), maps)


@lru_cache(maxsize=None)
def _children_lists(t: Tree) -> tuple[tuple[tuple[int, ...], ...], ...]:
    """children[h][i]: level-(h+1) indices of the children of node (h, i)."""
    sizes = level_sizes(t)
    maps = parent_maps(t)
    out = []
    for h in range(t.stage):
        row: list[list[int]] = [[] for _ in range(sizes[h])]
        for j, p in enumerate(maps[h + 1]):
            row[p].append(j)
        out.append(tuple(tuple(x) for x in row))
    return tuple(out)


@lru_cache(maxsize=None)
def enumerate_morphisms(p: Tree, q: Tree) -> tuple[TreeMorphism, ...]:
    """All morphisms p -> q, deterministic order."""
    if p.stage != q.stage:
        return ()
    cp, cq = _children_lists(p), _children_lists(q)

    def extend(h: int, built: tuple[tuple[int, ...], ...]) -> Iterator[tuple[tuple[int, ...], ...]]:
        if h > p.stage:
            yield built
            return
        # Per parent node, weakly monotone maps into the image's children.
        per_parent: list[list[tuple[int, ...]]] = []
        for i, mine in enumerate(cp[h - 1]):
            image = built[h - 1][i]
            theirs = cq[h - 1][image]
            if mine and not theirs:
                return
            per_parent.append(
                [c for c in itertools.combinations_with_replacement(theirs, len(mine))]
            )
        for combo in itertools.product(*per_parent):
            row = tuple(itertools.chain.from_iterable(combo))
            yield from extend(h + 1, built + (row,))

    return tuple(
        TreeMorphism(p, q, maps) for maps in extend(1, ((0,),))
    )


def _selection_tree(t: Tree, selected: Sequence[Sequence[int]]) -> tuple[Tree, tuple[tuple[int, ...], ...]]:
    """Tree induced by an ancestor-closed node selection, plus local->global maps."""
    maps = parent_maps(t)
    sel = [tuple(s) for s in selected]
    local_maps: list[tuple[int, ...]] = [()]
    for r in range(1, t.stage + 1):
        pos = {g: i for i, g in enumerate(sel[r - 1])}
        local_maps.append(tuple(pos[maps[r][g]] for g in sel[r]))
    return tree_from_levels(t.stage, local_maps), tuple(sel)


def inclusion_from_selection(t: Tree, selected: Sequence[Sequence[int]]) -> TreeMorphism:
    src, sel = _selection_tree(t, selected)
    return TreeMorphism(src, t, ((0,),) + tuple(sel[1:]))


def enumerate_inclusions(q: Tree, *, nonlinear_only: bool = False) -> tuple[TreeMorphism, ...]:
    """All inclusions f: q' -> q, one per ancestor-closed node selection."""
    sizes = level_sizes(q)
    maps = parent_maps(q)

    results: list[TreeMorphism] = []

    def rec(r: int, selected: list[tuple[int, ...]]) -> None:
        if r > q.stage:
            f = inclusion_from_selection(q, selected)
            if not nonlinear_only or not is_linear(f.source):
                results.append(f)
            return
        allowed = [j for j in range(sizes[r]) if maps[r][j] in selected[r - 1]]
        for k in range(len(allowed) + 1):
            for sub in itertools.combinations(allowed, k):
                rec(r + 1, selected + [sub])

    rec(1, [(0,)])
    results.sort(key=lambda f: (serialize(f.source), f.maps))
    return tuple(results)


def subsequence_inclusion(q: Tree, columns: Sequence[int]) -> TreeMorphism:
    """Inclusion picking the given columns (0-based, strictly increasing)."""
    cols = list(columns)
    if any(b <= a for a, b in zip(cols, cols[1:])):
        raise ValueError("columns must be strictly increasing")
    sizes_per = [level_sizes(c) for c in q.children]
    selected: list[list[int]] = [[0]] + [[] for _ in range(q.stage)]
    for i in cols:
        if not 0 <= i < len(q.children):
            raise ValueError("column index out of range")
        offs = [0] * (q.stage + 1)
        for j in range(i):
            for r, n in enumerate(sizes_per[j]):
                offs[r + 1] += n
        selected[1].append(i)
        for r in range(1, q.children[i].stage + 1):
            base = offs[r + 1]
            selected[r + 1].extend(base + x for x in range(sizes_per[i][r]))
    for row in selected[1:]:
        row.sort()
    return inclusion_from_selection(q, selected)


def canonical_inclusion(p: Tree, i: int) -> TreeMorphism:
    """pi_i: [p_i] -> p for the i-th column, i counted from 1."""
    if not 1 <= i <= len(p.children):
        raise ValueError("column index out of range")
    return subsequence_inclusion(p, [i - 1])


def column_components(f: TreeMorphism) -> tuple[tuple[int, TreeMorphism], ...]:
    """Per column alpha of the source: (target column, component morphism).

    The component acts between the column trees with all heights shifted down
    by one.
    """
    q, p = f.source, f.target
    out: list[tuple[int, TreeMorphism]] = []
    q_offs = _column_offsets(q)
    p_offs = _column_offsets(p)
    for alpha, qa in enumerate(q.children):
        i = f.maps[1][alpha]
        pa = p.children[i]
        maps: list[tuple[int, ...]] = [(0,)]
        for r in range(1, qa.stage + 1):
            src_base = q_offs[alpha][r + 1]
            dst_base = p_offs[i][r + 1]
            n = level_sizes(qa)[r]
            maps.append(tuple(f.maps[r + 1][src_base + x] - dst_base for x in range(n)))
        out.append((i, TreeMorphism(qa, pa, tuple(maps))))
    return tuple(out)


@lru_cache(maxsize=None)
def _column_offsets(t: Tree) -> tuple[tuple[int, ...], ...]:
    """offsets[i][r]: index of column i's first height-r node within t's level r."""
    offs = []
    acc = [0] * (t.stage + 1)
    for c in t.children:
        offs.append(tuple(acc))
        for r, n in enumerate(level_sizes(c)):
            acc[r + 1] += n
    return tuple(offs)


def decompose_inclusion(f: TreeMorphism) -> tuple[tuple[TreeMorphism, ...], TreeMorphism]:
    """Factor an inclusion as stacked column components followed by a
    subsequence inclusion on the hit columns."""
    if not f.is_inclusion():
        raise ValueError("not an inclusion")
    comps = column_components(f)
    cols = [i for i, _ in comps]
    middle = Tree(f.target.stage, tuple(f.target.children[i] for i in cols))
    ss = subsequence_inclusion(f.target, cols)
    stacked: list[TreeMorphism] = [g for _, g in comps]
    # Reconstruction check: stacking the components against middle, then ss.
    stack = _stack_columns(f.source, middle, stacked)
    if stack.then(ss) != f:
        raise AssertionError("inclusion decomposition failed to reassemble")
    return tuple(stacked), ss


def _stack_columns(src: Tree, dst: Tree, comps: Sequence[TreeMorphism]) -> TreeMorphism:
    """Columnwise morphism src -> dst from per-column components."""
    if len(src.children) != len(dst.children) or len(comps) != len(src.children):
        raise ValueError("column counts disagree")
    maps: list[list[int]] = [[0]] + [[] for _ in range(src.stage)]
    d_offs = _column_offsets(dst)
    for alpha, g in enumerate(comps):
        maps[1].append(alpha)
        for r in range(1, g.source.stage + 1):
            base = d_offs[alpha][r + 1]
            maps[r + 1].extend(v + base for v in g.maps[r])
    return TreeMorphism(src, dst, tuple(tuple(m) for m in maps))


# ---------------------------------------------------------------------------
# Substitution and fibres


def substitute(q: Tree, parts: Sequence[Tree]) -> tuple[Tree, TreeMorphism]:
    """Substitute one tree per leaf of q; returns the composite p and f: p -> q.

    parts[i] must have stage equal to the height of q's i-th leaf, and
    consecutive parts must agree once truncated to the height of the leaves'
    highest common ancestor.
    """
    lvs = leaves(q)
    if len(parts) != len(lvs):
        raise ValueError("need exactly one part per leaf")
    for (h, _), t in zip(lvs, parts):
        if t.stage != h:
            raise ValueError("part stage must match leaf height")
    for i in range(len(lvs) - 1):
        h = hca_height(q, lvs[i], lvs[i + 1])
        if truncate_to(parts[i], h) != truncate_to(parts[i + 1], h):
            raise ValueError("adjacent parts disagree on the shared boundary")
    p, maps = _subst(q, tuple(parts))
    return p, TreeMorphism(p, q, maps)


def _subst(q: Tree, parts: tuple[Tree, ...]) -> tuple[Tree, tuple[tuple[int, ...], ...]]:
    if q.stage == 0 or not q.children:
        return q, ((0,),) + ((),) * q.stage
    blocks: list[tuple[Tree, tuple[Tree, ...]]] = []
    idx = 0
    for qi in q.children:
        s_i = len(leaves(qi))
        blocks.append((qi, parts[idx : idx + s_i]))
        idx += s_i
    cols: list[tuple[int, Tree, tuple[tuple[int, ...], ...]]] = []
    for i, (qi, block) in enumerate(blocks):
        width = len(block[0].children)
        for t in block:
            if len(t.children) != width:
                raise ValueError("parts over one column disagree on width")
        for a in range(width):
            sub_parts = tuple(t.children[a] for t in block)
            tree, maps = _subst(qi, sub_parts)
            cols.append((i, tree, maps))
    p = Tree(q.stage, tuple(tree for _, tree, _ in cols))
    out: list[tuple[int, ...]] = [(0,), tuple(i for i, _, _ in cols)]
    q_sizes = [level_sizes(c) for c in q.children]
    for r in range(2, q.stage + 1):
        offs = [0] * len(q.children)
        acc = 0
        for i in range(len(q.children)):
            offs[i] = acc
            acc += q_sizes[i][r - 1]
        row: list[int] = []
        for i, _, maps in cols:
            row.extend(v + offs[i] for v in maps[r - 1])
        out.append(tuple(row))
    return p, tuple(out)


@lru_cache(maxsize=None)
def fibre_embedding(f: TreeMorphism, leaf_index: int) -> tuple[Tree, tuple[tuple[int, ...], ...]]:
    """Fibre of f over the given leaf of its target, with global node indices.

    The fibre over a height-h leaf is an h-stage tree; selection[r] lists the
    source nodes at height r lying over the leaf's height-r ancestor.
    """
    q = f.target
    leaf = leaves(q)[leaf_index]
    chain = ancestor_chain(q, leaf)
    h = leaf[0]
    sizes = level_sizes(f.source)
    selected: list[tuple[int, ...]] = []
    for r in range(h + 1):
        selected.append(
            tuple(y for y in range(sizes[r]) if f.maps[r][y] == chain[r])
        )
    maps = parent_maps(f.source)
    local: list[tuple[int, ...]] = [()]
    for r in range(1, h + 1):
        pos = {g: i for i, g in enumerate(selected[r - 1])}
        local.append(tuple(pos[maps[r][g]] for g in selected[r]))
    return tree_from_levels(h, local), tuple(selected)


def fibre_over(f: TreeMorphism, leaf_index: int) -> Tree:
    return fibre_embedding(f, leaf_index)[0]


@lru_cache(maxsize=None)
def analyze_morphism(f: TreeMorphism) -> tuple[Tree, ...]:
    """The fibres of f, one per leaf of the target."""
    return tuple(fibre_over(f, i) for i in range(len(leaves(f.target))))


def truncated_fibres(f: TreeMorphism) -> tuple[tuple[Tree, int], ...]:
    """Between consecutive leaves i, i+1 of the target: the shared truncation
    of the fibres and its height."""
    q = f.target
    lvs = leaves(q)
    parts = analyze_morphism(f)
    out = []
    for i in range(len(lvs) - 1):
        h = hca_height(q, lvs[i], lvs[i + 1])
        out.append((truncate_to(parts[i], h), h))
    return tuple(out)


@lru_cache(maxsize=None)
def restrict_to_fibre(g: TreeMorphism, f: TreeMorphism, leaf_index: int) -> TreeMorphism:
    """For g: r -> p and f: p -> q, the restriction of g between the fibres of
    g;f and of f over the given leaf of q."""
    if g.target != f.source:
        raise ValueError("morphisms do not compose")
    comp = g.then(f)
    t_tree, t_sel = fibre_embedding(comp, leaf_index)
    p_tree, p_sel = fibre_embedding(f, leaf_index)
    maps: list[tuple[int, ...]] = []
    for r in range(t_tree.stage + 1):
        pos = {glob: i for i, glob in enumerate(p_sel[r])}
        maps.append(tuple(pos[g.maps[r][glob]] for glob in t_sel[r]))
    return TreeMorphism(t_tree, p_tree, tuple(maps))

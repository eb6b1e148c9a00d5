"""Globular families of operations over pasting trees.

A collection assigns a finite set of named operations to each tree of stage
1..dim, with source and target maps one level down.  A linear tree carries
exactly one implicit operation, the point "u", unless its key appears in ops,
which overrides the default; a collection with no overrides is reduced.  A
pointing extends a reduced collection with a restriction action along
inclusions, generated by single node deletions.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

from .trees import (
    Tree,
    TreeMorphism,
    enumerate_trees,
    inclusion_from_selection,
    is_linear,
    leaves,
    level_sizes,
    morphism_key,
    parent_maps,
    parse_tree_key,
    suspend,
    tree_from_levels,
    tree_key,
    truncate,
)

POINT = "u"


def scope_trees(
    dim: int,
    max_nodes: int,
    *,
    nonlinear_only: bool = True,
    stages: Sequence[int] | None = None,
) -> tuple[Tree, ...]:
    """Trees of stage 1..dim with at most max_nodes nodes, smallest first."""
    use = list(stages) if stages is not None else list(range(1, dim + 1))
    out: list[Tree] = []
    for s in use:
        for t in enumerate_trees(s, max_nodes):
            if nonlinear_only and is_linear(t):
                continue
            out.append(t)
    out.sort(key=lambda t: (t.stage, len(serial := tree_key(t)), serial))
    return tuple(out)


@dataclass(frozen=True)
class ParallelPair:
    """A tree with a source and target operation over its truncation."""

    tree: Tree
    src: str
    tgt: str


class Collection:
    """Named operations over trees, with boundaries one level down.

    ops maps tree keys to operation name tuples; a linear tree absent from
    ops carries the implicit point.  boundaries maps (tree_key, op) to the
    (source, target) pair over the truncated tree, and carries an entry
    exactly when that truncation has explicit operations or is non-linear;
    everything over an implicit fibre is the point.
    """

    def __init__(
        self,
        dim: int,
        ops: Mapping[str, Iterable[str]],
        boundaries: Mapping[tuple[str, str], tuple[str, str]] | None = None,
    ) -> None:
        self.dim = dim
        self.ops = {k: tuple(v) for k, v in ops.items()}
        self.boundaries = dict(boundaries or {})

    def _implicit(self, p: Tree) -> bool:
        return is_linear(p) and tree_key(p) not in self.ops

    def ops_at(self, p: Tree) -> tuple[str, ...]:
        if p.stage == 0:
            return (POINT,)
        if p.stage > self.dim:
            return ()
        key = tree_key(p)
        if key in self.ops:
            return self.ops[key]
        return (POINT,) if is_linear(p) else ()

    def boundary(self, p: Tree, op: str) -> tuple[str, str]:
        if p.stage < 1:
            raise ValueError("boundary needs a tree of stage at least 1")
        q = truncate(p)
        if q.stage == 0 or self._implicit(q):
            return (POINT, POINT)
        return self.boundaries[(tree_key(p), op)]

    def src(self, p: Tree, op: str) -> str:
        return self.boundary(p, op)[0]

    def tgt(self, p: Tree, op: str) -> str:
        return self.boundary(p, op)[1]

    def validate(self) -> list[str]:
        """Shape and globularity problems, empty when well formed."""
        problems: list[str] = []
        for key, names in self.ops.items():
            try:
                p = parse_tree_key(key)
            except ValueError:
                problems.append(f"unparseable tree key {key!r}")
                continue
            if tree_key(p) != key:
                problems.append(f"non-canonical tree key {key!r}")
                continue
            if not 1 <= p.stage <= self.dim:
                problems.append(f"tree {key} outside dimension {self.dim}")
                continue
            if len(set(names)) != len(names):
                problems.append(f"duplicate operation names at {key}")
            if POINT in names:
                problems.append(f"reserved name {POINT!r} used at {key}")
            q = truncate(p)
            if q.stage == 0 or self._implicit(q):
                continue
            for x in names:
                if (key, x) not in self.boundaries:
                    problems.append(f"missing boundary for {x} at {key}")
                    continue
                a, b = self.boundaries[(key, x)]
                if a not in self.ops_at(q) or b not in self.ops_at(q):
                    problems.append(f"boundary of {x} at {key} is not an operation")
        # Explicit operations at a linear tree displace the implicit point
        # above it too, otherwise the point there has no boundary to land on.
        for key in sorted(self.ops):
            try:
                q = parse_tree_key(key)
            except ValueError:
                continue
            if tree_key(q) != key or not is_linear(q) or q.stage >= self.dim:
                continue
            for p in _linear_growths(q):
                if tree_key(p) not in self.ops:
                    problems.append(
                        f"linear tree {tree_key(p)} above {key} "
                        "needs explicit operations"
                    )
        known = {
            (key, x)
            for key, names in self.ops.items()
            for x in names
        }
        for entry in self.boundaries:
            if entry not in known:
                problems.append(f"stray boundary entry {entry}")
        if problems:
            return problems
        # Globularity: the two boundaries of a boundary agree.
        for key, names in self.ops.items():
            p = parse_tree_key(key)
            if p.stage < 2:
                continue
            q = truncate(p)
            for x in names:
                a, b = self.boundary(p, x)
                if self.boundary(q, a) != self.boundary(q, b):
                    problems.append(
                        f"boundaries of {x} at {key} are not parallel"
                    )
        return problems


def _linear_growths(q: Tree) -> tuple[Tree, ...]:
    """The linear trees one stage up whose truncation is q."""
    out = [suspend(q)]
    if level_sizes(q)[-1] == 1:
        out.append(tree_from_levels(q.stage + 1, parent_maps(q) + ((0,),)))
    return tuple(out)


def parallel_pairs(c: Collection, p: Tree) -> tuple[ParallelPair, ...]:
    """All source and target candidates for an operation at p."""
    q = truncate(p)
    ops = c.ops_at(q)
    if q.stage == 0:
        return tuple(
            ParallelPair(p, a, b) for a, b in itertools.product(ops, repeat=2)
        )
    bd = {a: c.boundary(q, a) for a in ops}
    return tuple(
        ParallelPair(p, a, b)
        for a, b in itertools.product(ops, repeat=2)
        if bd[a] == bd[b]
    )


def fillers(c: Collection, pair: ParallelPair) -> tuple[str, ...]:
    return tuple(
        x
        for x in c.ops_at(pair.tree)
        if c.boundary(pair.tree, x) == (pair.src, pair.tgt)
    )


def unique_filler_report(
    c: Collection, max_nodes: int, *, stages: Sequence[int] | None = None
) -> dict:
    """Count fillers for every parallel pair in scope; ok means always one."""
    problems = []
    for p in scope_trees(c.dim, max_nodes, stages=stages):
        by_boundary: dict[tuple[str, str], list[str]] = {}
        for x in c.ops_at(p):
            by_boundary.setdefault(c.boundary(p, x), []).append(x)
        for pair in parallel_pairs(c, p):
            found = by_boundary.get((pair.src, pair.tgt), [])
            if len(found) != 1:
                problems.append(
                    {
                        "tree": tree_key(p),
                        "src": pair.src,
                        "tgt": pair.tgt,
                        "fillers": list(found),
                    }
                )
    return {"ok": not problems, "problems": problems}


def bousfield_lifting(
    c: Collection, max_nodes: int, *, stages: Sequence[int] | None = None
) -> dict:
    """Unique lifting against boundary inclusions, split into the two halves:
    every parallel pair admits a filler, and operations are determined by
    their boundaries."""
    missing = []
    collisions = []
    for p in scope_trees(c.dim, max_nodes, stages=stages):
        for pair in parallel_pairs(c, p):
            if not fillers(c, pair):
                missing.append(
                    {"tree": tree_key(p), "src": pair.src, "tgt": pair.tgt}
                )
        by_boundary: dict[tuple[str, str], list[str]] = {}
        for x in c.ops_at(p):
            by_boundary.setdefault(c.boundary(p, x), []).append(x)
        for bd, names in sorted(by_boundary.items()):
            if len(names) > 1:
                collisions.append(
                    {"tree": tree_key(p), "src": bd[0], "tgt": bd[1], "ops": names}
                )
    return {
        "ok": not missing and not collisions,
        "missing": missing,
        "collisions": collisions,
    }


# ---------------------------------------------------------------------------
# Pointings


def deletable_nodes(q: Tree) -> tuple[tuple[int, int], ...]:
    """Childless nodes above the root, largest first.

    Deleting one keeps the node set ancestor-closed, so these generate all
    inclusions into q.
    """
    return tuple(
        sorted(((h, j) for h, j in leaves(q) if h > 0), reverse=True)
    )


def delete_node(q: Tree, node: tuple[int, int]) -> TreeMorphism:
    h, j = node
    if node not in leaves(q) or h == 0:
        raise ValueError("only a childless non-root node can be deleted")
    selected = [
        tuple(x for x in range(n) if (r, x) != node)
        for r, n in enumerate(level_sizes(q))
    ]
    return inclusion_from_selection(q, selected)


def factor_inclusion(f: TreeMorphism) -> tuple[TreeMorphism, ...]:
    """Write an inclusion as single node deletions, big tree first.

    Missing nodes are removed highest first and rightmost first within a
    height, which makes the factorisation canonical.
    """
    if not f.is_inclusion():
        raise ValueError("only inclusions factor into deletions")
    sizes = level_sizes(f.target)
    remaining = [list(range(n)) for n in sizes]
    missing = sorted(
        (
            (h, j)
            for h in range(1, f.target.stage + 1)
            for j in set(range(sizes[h])) - set(f.maps[h])
        ),
        reverse=True,
    )
    gens: list[TreeMorphism] = []
    current = f.target
    for h, j in missing:
        g = delete_node(current, (h, remaining[h].index(j)))
        gens.append(g)
        current = g.source
        remaining[h].remove(j)
    comp = TreeMorphism.identity(current)
    for g in reversed(gens):
        comp = comp.then(g)
    if comp != f:
        raise AssertionError("deletion factorisation failed to recompose")
    return tuple(gens)


class PointedCollection:
    """A collection with a restriction action along inclusions.

    action is only consulted on single node deletions between non-linear
    trees; act extends it to arbitrary inclusions through the canonical
    factorisation, with everything over a linear tree pinned to the point.
    """

    def __init__(
        self, base: Collection, action: Callable[[TreeMorphism, str], str]
    ) -> None:
        for key in base.ops:
            if is_linear(parse_tree_key(key)):
                raise ValueError("pointings act on reduced collections only")
        self.base = base
        self.action = action
        # Factorisation chains of different inclusions share deletion steps.
        self._steps: dict[tuple[TreeMorphism, str], str] = {}

    def act(self, f: TreeMorphism, op: str) -> str:
        if not f.is_inclusion():
            raise ValueError("the action is along inclusions only")
        if is_linear(f.source):
            return POINT
        x = op
        for g in factor_inclusion(f):
            y = self._steps.get((g, x))
            if y is None:
                y = self.action(g, x)
                self._steps[(g, x)] = y
            x = y
        return x


def check_pointing(pc: PointedCollection, max_nodes: int) -> dict:
    """Membership, deletion diamonds, and boundary naturality, in scope."""
    c = pc.base
    problems: list[dict] = []

    def record(kind: str, q: Tree, detail: str) -> None:
        problems.append({"kind": kind, "tree": tree_key(q), "detail": detail})

    for q in scope_trees(c.dim, max_nodes):
        gens = [
            delete_node(q, node)
            for node in deletable_nodes(q)
        ]
        for g in gens:
            if is_linear(g.source):
                continue
            for b in c.ops_at(q):
                x = pc.action(g, b)
                if x not in c.ops_at(g.source):
                    record(
                        "membership",
                        q,
                        f"image of {b} under {morphism_key(g)} is not an operation",
                    )
        # Two deletions commute: both orders land on the same operation.
        for g1, g2 in itertools.combinations(gens, 2):
            for b in c.ops_at(q):
                one = pc.act(g1, b)
                two = pc.act(g2, b)
                d1 = _further_delete(pc, g1, one, g2)
                d2 = _further_delete(pc, g2, two, g1)
                if d1 != d2:
                    record(
                        "diamond",
                        q,
                        f"orders disagree on {b}: {d1} vs {d2}",
                    )
        if q.stage < 2:
            continue
        for g in gens:
            if is_linear(g.source):
                continue
            tg = g.truncate()
            for b in c.ops_at(q):
                x = pc.act(g, b)
                for side in (0, 1):
                    got = c.boundary(g.source, x)[side]
                    want = pc.act(tg, c.boundary(q, b)[side])
                    if got != want:
                        record(
                            "naturality",
                            q,
                            f"boundary {side} of {b} along {morphism_key(g)}: "
                            f"{got} vs {want}",
                        )
    return {"ok": not problems, "problems": problems}


def _further_delete(
    pc: PointedCollection, first: TreeMorphism, op: str, other: TreeMorphism
) -> str:
    """Apply the deletion matching other's missing node after first."""
    q = first.target
    sizes = level_sizes(q)
    (node,) = [
        (h, j)
        for h in range(1, q.stage + 1)
        for j in set(range(sizes[h])) - set(other.maps[h])
    ]
    h, j = node
    kept = sorted(first.maps[h])
    local = kept.index(j)
    g = delete_node(first.source, (h, local))
    if is_linear(g.source):
        return POINT
    return pc.action(g, op)


# ---------------------------------------------------------------------------
# Seeded generation, for exercising the lifting checks


def random_collection(
    seed: int,
    dim: int = 2,
    max_nodes: int = 4,
    max_ops: int = 3,
) -> Collection:
    """A globular collection drawn deterministically from the seed.

    Half the draws start from a choice of exactly one filler per parallel
    pair and are then sometimes perturbed, so verdicts of the lifting checks
    vary across seeds.
    """
    rng = random.Random(seed)
    ops: dict[str, list[str]] = {}
    boundaries: dict[tuple[str, str], tuple[str, str]] = {}
    complete = rng.random() < 0.5
    counter = itertools.count()
    for p in scope_trees(dim, max_nodes):
        key = tree_key(p)
        # Lower stages are already decided, the scope is ordered by stage.
        pairs = parallel_pairs(Collection(dim, ops, boundaries), p)
        chosen: list[ParallelPair] = []
        if complete:
            chosen = list(pairs)
        else:
            for _ in range(rng.randrange(max_ops + 1)):
                if pairs:
                    chosen.append(rng.choice(pairs))
        ops[key] = []
        for pair in chosen:
            name = f"f{next(counter)}"
            ops[key].append(name)
            if not is_linear(truncate(p)):
                boundaries[(key, name)] = (pair.src, pair.tgt)
    if complete and rng.random() < 0.6:
        _perturb(rng, dim, ops, boundaries)
    return Collection(dim, ops, boundaries)


def _perturb(
    rng: random.Random,
    dim: int,
    ops: dict[str, list[str]],
    boundaries: dict[tuple[str, str], tuple[str, str]],
) -> None:
    # Touch only the top stage so no higher boundary can dangle.
    keys = sorted(
        k for k, v in ops.items() if v and parse_tree_key(k).stage == dim
    )
    if not keys:
        return
    key = rng.choice(keys)
    name = rng.choice(ops[key])
    if rng.random() < 0.5:
        ops[key].remove(name)
        boundaries.pop((key, name), None)
    else:
        twin = name + "x"
        ops[key].append(twin)
        if (key, name) in boundaries:
            boundaries[(key, twin)] = boundaries[(key, name)]

"""Tests for the pasting-tree kernel: parsing, level forms, morphisms,
substitution, and fibre analysis."""

import itertools

import pytest
from hypothesis import given, settings, strategies as st

from globop.trees import (
    STAR,
    Tree,
    TreeMorphism,
    analyze_morphism,
    ancestor_chain,
    canonical_inclusion,
    column_components,
    decompose_inclusion,
    empty_tree,
    enumerate_inclusions,
    enumerate_morphisms,
    enumerate_trees,
    fibre_embedding,
    fibre_over,
    hca_height,
    is_linear,
    leaves,
    level_sizes,
    min_stage,
    morphism_key,
    node_count,
    nonlinear_height,
    parent_maps,
    parse_morphism_key,
    parse_tree,
    parse_tree_key,
    restrict_to_fibre,
    serialize,
    subsequence_inclusion,
    substitute,
    suspend,
    terminal_morphism,
    tree_from_levels,
    tree_key,
    truncate,
    truncate_to,
    truncated_fibres,
    unit_tree,
)

# A 2-stage tree with every kind of column: wide, empty, single, wider.
GRAY = "[[*,*],[],[*],[*,*,*,*]]"


def all_childless(t: Tree) -> int:
    """Count childless nodes by direct recursion, root included."""
    if not t.children:
        return 1
    return sum(all_childless(c) for c in t.children)


def tree_strategy(max_stage: int = 3, max_width: int = 3):
    def at(stage: int):
        if stage == 0:
            return st.just(STAR)
        return st.lists(at(stage - 1), max_size=max_width).map(
            lambda cs: Tree(stage, tuple(cs))
        )

    return st.integers(1, max_stage).flatmap(at)


# ---------------------------------------------------------------------------
# Construction and parsing


def test_tree_validation():
    with pytest.raises(ValueError):
        Tree(-1)
    with pytest.raises(ValueError):
        Tree(0, (STAR,))
    with pytest.raises(ValueError):
        Tree(1, (Tree(1, ()),))


def test_parse_basic_forms():
    assert parse_tree("*") is STAR
    t = parse_tree("[*,*]")
    assert t.stage == 1 and len(t.children) == 2
    assert serialize(t) == "[*,*]"
    assert parse_tree("[]") == Tree(1, ())
    assert parse_tree("[[*],[]]") == Tree(2, (Tree(1, (STAR,)), Tree(1, ())))


def test_parse_with_explicit_stage():
    # A star-free form read at a higher stage denotes the suspended tree.
    assert parse_tree("[]", stage=3) == empty_tree(3)
    assert parse_tree("[[],[]]", stage=2) == suspend(parse_tree("[*,*]"))
    assert parse_tree("[[],[]]", stage=3) == suspend(parse_tree("[[],[]]", stage=2))
    assert parse_tree("[*,*]", stage=1) == parse_tree("[*,*]")
    with pytest.raises(ValueError):
        parse_tree("[*,*]", stage=0)
    with pytest.raises(ValueError):
        parse_tree("[*,*]", stage=2)  # stars pin the stage


def test_parse_rejects_malformed_input():
    for bad in ["", "[*", "*]", "[,]", "[*,]", "[*][*]", "x", "[*,[]]", "[[*],*]"]:
        with pytest.raises(ValueError):
            parse_tree(bad)


def test_tree_key_disambiguates_suspensions():
    assert tree_key(parse_tree("[*,*]")) == "[*,*]"
    assert tree_key(empty_tree(2)) == "[]@2"
    assert min_stage(empty_tree(2)) == 1
    for t in [parse_tree(GRAY), empty_tree(3), suspend(parse_tree("[*,*]")), STAR]:
        assert parse_tree_key(tree_key(t)) == t


@given(tree_strategy())
def test_serialize_parse_round_trip(t):
    assert parse_tree(serialize(t), t.stage) == t
    assert parse_tree_key(tree_key(t)) == t


def test_suspension_keeps_every_node_at_its_height():
    t = parse_tree(GRAY)
    z = suspend(t)
    assert z.stage == t.stage + 1
    assert level_sizes(z) == level_sizes(t) + (0,)
    assert leaves(z) == leaves(t)
    assert node_count(z) == node_count(t)


# ---------------------------------------------------------------------------
# Level form


def test_level_data_of_the_four_column_tree():
    t = parse_tree(GRAY)
    assert level_sizes(t) == (1, 4, 7)
    assert node_count(t) == 11
    assert parent_maps(t) == ((), (0, 0, 0, 0), (0, 0, 2, 3, 3, 3, 3))
    assert tree_from_levels(2, parent_maps(t)) == t


def test_tree_from_levels_validates():
    with pytest.raises(ValueError):
        tree_from_levels(1, ((),))  # missing a level
    with pytest.raises(ValueError):
        tree_from_levels(2, ((), (0, 0), (1, 0)))  # not monotone
    with pytest.raises(ValueError):
        tree_from_levels(2, ((), (0,), (1,)))  # parent out of range


@given(tree_strategy())
def test_levels_invert_nesting(t):
    assert tree_from_levels(t.stage, parent_maps(t)) == t


@st.composite
def level_data(draw):
    stage = draw(st.integers(1, 3))
    sizes = [1]
    maps = [()]
    for _ in range(stage):
        if sizes[-1] == 0:
            n = 0
        else:
            n = draw(st.integers(0, 4))
        row = sorted(
            draw(
                st.lists(
                    st.integers(0, sizes[-1] - 1), min_size=n, max_size=n
                )
            )
        ) if n else []
        maps.append(tuple(row))
        sizes.append(n)
    return stage, tuple(maps), tuple(sizes)


@given(level_data())
def test_nesting_inverts_levels(data):
    stage, maps, sizes = data
    t = tree_from_levels(stage, maps)
    assert t.stage == stage
    assert parent_maps(t) == maps
    assert level_sizes(t) == sizes


# ---------------------------------------------------------------------------
# Leaves, addresses, linearity


def test_leaf_order_of_the_four_column_tree():
    t = parse_tree(GRAY)
    # Depth first: two stars, then the bare column, then the rest.
    assert leaves(t) == (
        (2, 0), (2, 1), (1, 1), (2, 2), (2, 3), (2, 4), (2, 5), (2, 6),
    )


def test_leaves_of_degenerate_trees():
    assert leaves(STAR) == ((0, 0),)
    assert leaves(empty_tree(2)) == ((0, 0),)
    assert leaves(unit_tree(3)) == ((3, 0),)


@given(tree_strategy())
def test_leaf_census(t):
    lvs = leaves(t)
    assert len(lvs) == all_childless(t)
    assert len(set(lvs)) == len(lvs)
    # Within one height the depth-first order agrees with the level order.
    for h in range(t.stage + 1):
        at_h = [j for r, j in lvs if r == h]
        assert at_h == sorted(at_h)


def test_ancestor_chains():
    t = parse_tree(GRAY)
    assert ancestor_chain(t, (2, 3)) == (0, 3, 3)
    assert ancestor_chain(t, (1, 1)) == (0, 1)
    assert ancestor_chain(t, (0, 0)) == (0,)
    pairs = list(zip(leaves(t), leaves(t)[1:]))
    assert [hca_height(t, a, b) for a, b in pairs] == [1, 0, 0, 0, 1, 1, 1]


def test_linearity():
    assert is_linear(STAR)
    assert is_linear(unit_tree(4))
    assert is_linear(empty_tree(2))
    assert is_linear(suspend(unit_tree(1)))
    assert not is_linear(parse_tree("[*,*]"))
    assert not is_linear(parse_tree("[[],[]]"))


@given(tree_strategy())
def test_linear_means_at_most_one_node_per_level(t):
    assert is_linear(t) == all(n <= 1 for n in level_sizes(t))


def test_nonlinear_height():
    assert nonlinear_height(parse_tree("[*,*]")) == 1
    assert nonlinear_height(parse_tree("[[*,*]]")) == 2
    assert nonlinear_height(parse_tree("[[*],[*]]")) == 1
    assert nonlinear_height(parse_tree("[[],[]]")) == 1
    assert nonlinear_height(unit_tree(3)) == 0
    assert nonlinear_height(empty_tree(2)) == 0


def test_truncation():
    t = parse_tree(GRAY)
    assert truncate(t) == parse_tree("[*,*,*,*]")
    assert truncate_to(t, 0) is STAR
    assert truncate_to(t, 2) == t
    assert truncate(parse_tree("[[*,*],[]]")) == parse_tree("[*,*]")
    with pytest.raises(ValueError):
        truncate(STAR)


# ---------------------------------------------------------------------------
# Enumeration


def test_enumerate_stage_one():
    got = enumerate_trees(1, 4)
    assert [serialize(t) for t in got] == [
        "[*,*,*,*]", "[*,*,*]", "[*,*]", "[*]", "[]",
    ]


def test_enumerate_counts_by_node_count():
    # Stage 2 trees with n nodes are compositions of n: 2^(n-1) of them.
    by_n = {}
    for t in enumerate_trees(2, 5):
        by_n.setdefault(node_count(t), []).append(t)
    assert {n: len(ts) for n, ts in by_n.items()} == {
        0: 1, 1: 1, 2: 2, 3: 4, 4: 8, 5: 16,
    }
    # Stage 3 counts follow the odd-indexed Fibonacci numbers.
    by_n = {}
    for t in enumerate_trees(3, 4):
        by_n.setdefault(node_count(t), []).append(t)
    assert {n: len(ts) for n, ts in by_n.items()} == {
        0: 1, 1: 1, 2: 2, 3: 5, 4: 13,
    }


def test_enumerate_is_sorted_and_stage_tagged():
    got = enumerate_trees(2, 3)
    assert list(got) == sorted(got, key=serialize)
    assert all(t.stage == 2 for t in got)
    assert len(set(got)) == len(got)


# ---------------------------------------------------------------------------
# Morphisms


def test_morphism_validation():
    p, q = parse_tree("[*,*]"), parse_tree("[*]")
    TreeMorphism(p, q, ((0,), (0, 0)))
    with pytest.raises(ValueError):
        TreeMorphism(p, q, ((0,), (0,)))  # wrong length
    with pytest.raises(ValueError):
        TreeMorphism(p, q, ((0,), (0, 1)))  # out of range
    with pytest.raises(ValueError):
        TreeMorphism(q, p, ((0,), (1, 0)))  # siblings out of order
    with pytest.raises(ValueError):
        TreeMorphism(p, suspend(p), ((0,), (0, 0)))  # stages differ


def test_monotonicity_is_per_sibling_block():
    # Nodes with distinct parents may cross.
    p, q = parse_tree("[[*],[*]]"), parse_tree("[[*,*]]")
    f = TreeMorphism(p, q, ((0,), (0, 0), (1, 0)))
    assert f in enumerate_morphisms(p, q)
    assert len(enumerate_morphisms(p, q)) == 4


def test_identity_and_composition():
    t = parse_tree(GRAY)
    i = TreeMorphism.identity(t)
    assert i.then(i) == i
    f = terminal_morphism(t)
    assert i.then(f) == f
    assert f.then(TreeMorphism.identity(f.target)) == f
    with pytest.raises(ValueError):
        f.then(f)


def test_terminal_morphism():
    p = parse_tree("[*,*]")
    f = terminal_morphism(p)
    assert f.target == unit_tree(1)
    assert f.maps == ((0,), (0, 0))
    assert terminal_morphism(unit_tree(2)) == TreeMorphism.identity(unit_tree(2))


def test_morphism_truncation():
    p = parse_tree("[[*],[*,*]]")
    f = terminal_morphism(p)
    g = f.truncate()
    assert g.source == truncate(p)
    assert g == terminal_morphism(truncate(p))


def test_morphism_key_round_trip():
    p = parse_tree("[[*],[*,*]]")
    for f in enumerate_morphisms(p, p):
        assert parse_morphism_key(morphism_key(f)) == f
    # Keys must survive stage-ambiguous endpoints.
    fs = [g for g in enumerate_inclusions(parse_tree("[[*]]")) if not g.source.children]
    assert len(fs) == 1
    f = fs[0]
    assert f.source == empty_tree(2)
    assert "[]@2" in morphism_key(f)
    assert parse_morphism_key(morphism_key(f)) == f


def brute_morphism_maps(p, q):
    """Levelwise assignments checked directly against the definition."""
    sp, sq = level_sizes(p), level_sizes(q)
    pp, pq = parent_maps(p), parent_maps(q)
    rows = [[(0,)]]
    for r in range(1, p.stage + 1):
        rows.append(list(itertools.product(range(sq[r]), repeat=sp[r])))
    found = set()
    for maps in itertools.product(*rows):
        ok = True
        for r in range(1, p.stage + 1):
            for y, v in enumerate(maps[r]):
                if pq[r][v] != maps[r - 1][pp[r][y]]:
                    ok = False
            for y in range(1, sp[r]):
                if pp[r][y] == pp[r][y - 1] and maps[r][y] < maps[r][y - 1]:
                    ok = False
        if ok:
            found.add(maps)
    return found


def test_enumeration_matches_brute_force_stage_one():
    trees = enumerate_trees(1, 4)
    for p, q in itertools.product(trees, trees):
        got = {f.maps for f in enumerate_morphisms(p, q)}
        assert got == brute_morphism_maps(p, q)


def test_enumeration_matches_brute_force_stage_two():
    trees = enumerate_trees(2, 3)
    for p, q in itertools.product(trees, trees):
        got = {f.maps for f in enumerate_morphisms(p, q)}
        assert got == brute_morphism_maps(p, q)


def test_morphism_counts():
    one = parse_tree("[*]")
    two = parse_tree("[*,*]")
    assert len(enumerate_morphisms(one, two)) == 2
    assert len(enumerate_morphisms(two, one)) == 1
    assert len(enumerate_morphisms(two, two)) == 3
    assert len(enumerate_morphisms(parse_tree("[*,*,*]"), two)) == 4
    assert enumerate_morphisms(two, suspend(two)) == ()


# ---------------------------------------------------------------------------
# Inclusions


def test_inclusion_counts():
    assert len(enumerate_inclusions(parse_tree("[*,*]"))) == 4
    assert len(enumerate_inclusions(parse_tree("[[*]]"))) == 3
    # Ancestor-closed selections: (1+4)(1+1)(1+2)(1+16) for the four columns.
    assert len(enumerate_inclusions(parse_tree(GRAY))) == 510
    only = enumerate_inclusions(parse_tree("[*,*]"), nonlinear_only=True)
    assert [f.source for f in only] == [parse_tree("[*,*]")]


def test_inclusions_are_exactly_the_injective_morphisms():
    q = parse_tree("[[*],[]]")
    want = set()
    for p in enumerate_trees(2, node_count(q)):
        for f in enumerate_morphisms(p, q):
            if f.is_inclusion():
                want.add(morphism_key(f))
    got = {morphism_key(f) for f in enumerate_inclusions(q)}
    assert got == want


def test_inclusion_iff_all_fibres_linear():
    trees = enumerate_trees(2, 3)
    for p, q in itertools.product(trees, trees):
        for f in enumerate_morphisms(p, q):
            assert f.is_inclusion() == all(
                is_linear(x) for x in analyze_morphism(f)
            )


def test_subsequence_inclusion():
    q = parse_tree("[[*],[*,*],[]]")
    f = subsequence_inclusion(q, [0, 2])
    assert f.source == parse_tree("[[*],[]]")
    assert f.maps == ((0,), (0, 2), (0,))
    with pytest.raises(ValueError):
        subsequence_inclusion(q, [2, 0])
    with pytest.raises(ValueError):
        subsequence_inclusion(q, [3])


def test_canonical_inclusion():
    p = parse_tree("[[*],[*,*]]")
    f1 = canonical_inclusion(p, 1)
    assert f1.source == parse_tree("[[*]]")
    assert f1.maps == ((0,), (0,), (0,))
    f2 = canonical_inclusion(p, 2)
    assert f2.source == parse_tree("[[*,*]]")
    assert f2.maps == ((0,), (1,), (1, 2))
    single = parse_tree("[[*,*]]")
    assert canonical_inclusion(single, 1) == TreeMorphism.identity(single)
    with pytest.raises(ValueError):
        canonical_inclusion(p, 0)


def test_column_components():
    q, parts = parse_tree("[[*,*]]"), [parse_tree("[[*],[*]]")] * 2
    _, f = substitute(q, parts)
    comps = column_components(f)
    col = parse_tree("[*,*]")
    assert comps == (
        (0, TreeMorphism.identity(col)),
        (0, TreeMorphism.identity(col)),
    )


def test_decompose_inclusion():
    q = parse_tree(GRAY)
    for f in enumerate_inclusions(q):
        comps, ss = decompose_inclusion(f)
        assert len(comps) == len(f.source.children)
        assert ss.source.children == tuple(
            q.children[i] for i in (ss.maps[1])
        )
    with pytest.raises(ValueError):
        decompose_inclusion(terminal_morphism(parse_tree("[*,*]")))


# ---------------------------------------------------------------------------
# Substitution


def test_substitute_along_a_line():
    q = parse_tree("[*,*]")
    p, f = substitute(q, [parse_tree("[*,*,*]"), parse_tree("[*]")])
    assert p == parse_tree("[*,*,*,*]")
    assert f.maps == ((0,), (0, 0, 0, 1))


def test_substitute_two_high():
    q = parse_tree("[[*,*]]")
    p, f = substitute(q, [parse_tree("[[*],[*]]")] * 2)
    assert p == parse_tree("[[*,*],[*,*]]")
    assert f.maps == ((0,), (0, 0), (0, 1, 0, 1))
    assert analyze_morphism(f) == (parse_tree("[[*],[*]]"),) * 2


def test_substitute_into_a_bare_column():
    q = parse_tree("[[]]")
    p, f = substitute(q, [parse_tree("[*,*]")])
    assert p == parse_tree("[[],[]]")
    assert f.maps == ((0,), (0, 0), ())


def test_substitute_units_is_identity():
    for stage in (1, 2):
        for p in enumerate_trees(stage, 4):
            units = [unit_tree(h) for h, _ in leaves(p)]
            assert substitute(p, units) == (p, TreeMorphism.identity(p))


def test_substitute_into_a_unit_is_terminal():
    for p in enumerate_trees(2, 4):
        assert substitute(unit_tree(2), [p]) == (p, terminal_morphism(p))


def test_substitute_validates_parts():
    q = parse_tree("[[*,*]]")
    good = parse_tree("[[*],[*]]")
    with pytest.raises(ValueError):
        substitute(q, [good])  # wrong count
    with pytest.raises(ValueError):
        substitute(q, [good, parse_tree("[*,*]")])  # wrong stage
    with pytest.raises(ValueError):
        substitute(q, [good, parse_tree("[[*]]")])  # boundary mismatch


# ---------------------------------------------------------------------------
# Fibres


def test_fibres_of_simple_maps():
    p = parse_tree(GRAY)
    assert analyze_morphism(terminal_morphism(p)) == (p,)
    units = tuple(unit_tree(h) for h, _ in leaves(p))
    assert analyze_morphism(TreeMorphism.identity(p)) == units
    f = subsequence_inclusion(parse_tree("[*,*]"), [1])
    assert analyze_morphism(f) == (empty_tree(1), unit_tree(1))


def test_fibre_embedding_reports_global_indices():
    q = parse_tree("[[*,*]]")
    _, f = substitute(q, [parse_tree("[[*],[*]]")] * 2)
    tree, sel = fibre_embedding(f, 0)
    assert tree == parse_tree("[[*],[*]]")
    assert sel == ((0,), (0, 1), (0, 2))
    assert fibre_over(f, 1) == parse_tree("[[*],[*]]")
    assert fibre_embedding(f, 1)[1] == ((0,), (0, 1), (1, 3))


def test_truncated_fibres():
    q = parse_tree("[[*,*]]")
    _, f = substitute(q, [parse_tree("[[*],[*]]")] * 2)
    assert truncated_fibres(f) == ((parse_tree("[*,*]"), 1),)


def test_substitution_and_analysis_are_inverse():
    """Every morphism is rebuilt exactly from its target and fibres."""
    for stage, size in ((1, 4), (2, 3)):
        trees = enumerate_trees(stage, size)
        for p, q in itertools.product(trees, trees):
            for f in enumerate_morphisms(p, q):
                assert substitute(q, analyze_morphism(f)) == (p, f)


def test_restrict_to_fibre():
    p = parse_tree("[[*,*],[*]]")
    f = terminal_morphism(p)
    for g in enumerate_morphisms(parse_tree("[[*],[*],[*]]"), p):
        # Over the unit there is a single fibre and the restriction is g again.
        assert restrict_to_fibre(g, f, 0) == g
    q = parse_tree("[[*,*]]")
    _, h = substitute(q, [parse_tree("[[*],[*]]")] * 2)
    for i in range(2):
        r = restrict_to_fibre(TreeMorphism.identity(h.source), h, i)
        assert r == TreeMorphism.identity(fibre_over(h, i))

"""Contraction choices, unitality, and shuffle-scheme orders."""

import itertools
import math
from functools import cache

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from globop.contraction import (
    SCHEMES,
    ContractionChoice,
    ShuffleScheme,
    bracketing_gamma,
    check_contraction,
    check_scheme_unital,
    check_top_strict,
    check_unital,
    contraction_scope,
    scheme_order,
    search_contraction,
    shuffle_orders,
)
from globop.collection import Collection, scope_trees
from globop.operads import (
    bracketing_operad,
    derive_pointing,
    left_bracketing,
    rgr_operad,
    right_bracketing,
    terminal_operad,
)
from globop.trees import TreeMorphism, parse_tree, tree_key

GRAY = "[[*,*],[],[*],[*,*,*,*]]"


@cache
def bracketing5():
    return bracketing_operad(5)


@cache
def pointing5():
    return derive_pointing(bracketing5(), 5)


def columns_tree(cols):
    return parse_tree("[" + ",".join("[" + ",".join(["*"] * c) + "]" for c in cols) + "]")


def multinomial(cols):
    out = math.factorial(sum(cols))
    for c in cols:
        out //= math.factorial(c)
    return out


def compatible(order, cols):
    for i in range(len(cols)):
        rows = [j for c, j in order if c == i]
        if rows != list(range(cols[i])):
            return False
    return True


def test_gray_tree_has_105_shuffles():
    orders = shuffle_orders(parse_tree(GRAY))
    assert len(orders) == 105 == multinomial([2, 0, 1, 4])
    assert len(set(orders)) == 105
    assert all(compatible(o, [2, 0, 1, 4]) for o in orders)


def test_shuffle_counts_match_the_multinomial():
    from globop.trees import enumerate_trees

    for p in enumerate_trees(2, 6):
        cols = [len(c.children) for c in p.children]
        assert len(shuffle_orders(p)) == multinomial(cols), tree_key(p)


def test_shuffles_match_brute_force_filtering():
    for cols in ([2, 2], [1, 3], [2, 0, 1], [1, 1, 1], [3, 2]):
        p = columns_tree(cols)
        labels = [(i, j) for i, c in enumerate(cols) for j in range(c)]
        brute = {
            perm
            for perm in itertools.permutations(labels)
            if compatible(perm, cols)
        }
        assert set(shuffle_orders(p)) == brute


def test_shuffles_reject_lower_stages():
    with pytest.raises(ValueError, match="2-stage"):
        shuffle_orders(parse_tree("[*,*]"))


@given(st.lists(st.integers(min_value=0, max_value=3), min_size=1, max_size=4))
@settings(max_examples=60, deadline=None)
def test_shuffle_count_property(cols):
    if sum(cols) > 6:
        cols = cols[:2]
    p = columns_tree(cols)
    orders = shuffle_orders(p)
    assert len(orders) == multinomial(cols)
    assert len(set(orders)) == len(orders)
    assert all(compatible(o, cols) for o in orders)


def test_scheme_orders_on_the_gray_tree():
    p = parse_tree(GRAY)
    assert scheme_order(SCHEMES["col-lr"], p) == (
        (0, 0), (0, 1), (2, 0), (3, 0), (3, 1), (3, 2), (3, 3),
    )
    assert scheme_order(SCHEMES["col-rl"], p) == (
        (3, 0), (3, 1), (3, 2), (3, 3), (2, 0), (0, 0), (0, 1),
    )
    assert scheme_order(SCHEMES["row-reading"], p) == (
        (0, 0), (2, 0), (3, 0), (0, 1), (3, 1), (3, 2), (3, 3),
    )


def test_scheme_order_rejects_row_reversal():
    bad = ShuffleScheme("bad", lambda i, j: (i, -j))
    with pytest.raises(ValueError, match="column order"):
        scheme_order(bad, parse_tree("[[*,*]]"))


def test_column_schemes_restrict_along_inclusions():
    for name in ("col-lr", "col-rl"):
        rep = check_scheme_unital(SCHEMES[name], 6)
        assert rep["passed"], rep["violations"][:1]
        assert rep["instances"] == 1561


def test_row_reading_fails_on_the_identity_substitution_witness():
    rep = check_scheme_unital(SCHEMES["row-reading"], 6)
    assert not rep["passed"]
    # f sits in column 0 row 1, g in column 1 row 0; deleting the
    # identity cells reads the big order as (g, f) against (f, g) below.
    witness = "[[*],[*]]=>[[*,*],[*,*]]:[[0],[0,1],[1,2]]"
    found = [v for v in rep["violations"] if v["inclusion"] == witness]
    assert found, [v["inclusion"] for v in rep["violations"][:5]]
    assert found[0]["restricted"] == [[1, 0], [0, 0]]
    assert found[0]["small"] == [[0, 0], [1, 0]]


def test_row_reading_witness_by_hand():
    q = parse_tree("[[*],[*]]")
    p = parse_tree("[[*,*],[*,*]]")
    f = TreeMorphism(q, p, ((0,), (0, 1), (1, 2)))
    assert f.is_inclusion()
    big = scheme_order(SCHEMES["row-reading"], p)
    kept = {(0, 1): (0, 0), (1, 0): (1, 0)}
    restricted = tuple(kept[ij] for ij in big if ij in kept)
    assert restricted == ((1, 0), (0, 0))
    assert scheme_order(SCHEMES["row-reading"], q) == ((0, 0), (1, 0))


def test_scope_kinds():
    c = terminal_operad(2, 4).carrier
    leinster = contraction_scope(c, 4, "leinster")
    unital = contraction_scope(c, 4, "unital")
    assert parse_tree("[*]") in leinster
    assert parse_tree("[*]") not in unital
    assert set(unital) < set(leinster)
    with pytest.raises(ValueError, match="kind"):
        contraction_scope(c, 4, "strict")


def test_comb_tables_fill_every_pair():
    A = bracketing5()
    for rule in ("left", "right", "mixed"):
        g = bracketing_gamma(A, rule)
        rep = check_contraction(A, g, 5)
        assert rep["passed"], rep["violations"][:2]
        assert rep["instances"] == len(g.table) == 378


def test_comb_words():
    A = bracketing5()
    gl = bracketing_gamma(A, "left")
    gr = bracketing_gamma(A, "right")
    assert gl.gamma(parse_tree("[*,*,*,*]"), "u", "u") == "(((01)2)3)"
    assert gr.gamma(parse_tree("[*,*,*,*]"), "u", "u") == "(0(1(23)))"
    two = parse_tree("[[],[],[]]")
    assert gl.gamma(two, "((01)2)", "(0(12))") == "((01)2)>(0(12))"


def test_contraction_check_flags_bad_tables():
    A = bracketing5()
    base = bracketing_gamma(A, "left").table

    table = dict(base)
    del table[("[*,*,*]", "u", "u")]
    rep = check_contraction(A, ContractionChoice("unital", table), 5)
    kinds = {v["kind"] for v in rep["violations"]}
    assert not rep["passed"] and kinds == {"totality"}

    table = dict(base)
    table[("[*,*,*]", "u", "u")] = "(0(1(23)))"
    rep = check_contraction(A, ContractionChoice("unital", table), 5)
    assert [v["kind"] for v in rep["violations"]] == ["typing"]
    assert "not an operation" in rep["violations"][0]["detail"]

    table = dict(base)
    table[("[[],[],[]]", "((01)2)", "(0(12))")] = "((01)2)>((01)2)"
    rep = check_contraction(A, ContractionChoice("unital", table), 5)
    assert [v["kind"] for v in rep["violations"]] == ["typing"]
    assert "boundary" in rep["violations"][0]["detail"]

    table = dict(base)
    table[("[*,*]", "x", "y")] = "(01)"
    rep = check_contraction(A, ContractionChoice("unital", table), 5)
    assert [v["kind"] for v in rep["violations"]] == ["stray"]


def test_comb_rules_are_unit_compatible():
    P = pointing5()
    for rule in ("left", "right"):
        rep = check_unital(P, bracketing_gamma(bracketing5(), rule), 5)
        assert rep["passed"], rep["violations"][:1]
        assert rep["instances"] == 7324


def test_parity_mixed_rule_fails_with_a_unit_insertion_witness():
    rep = check_unital(pointing5(), bracketing_gamma(bracketing5(), "mixed"), 5)
    assert not rep["passed"]
    assert rep["violations"][0] == {
        "kind": "unital",
        "inclusion": "[*,*,*]=>[*,*,*,*]:[[0],[0,1,2]]",
        "src": "u",
        "tgt": "u",
        "detail": "((01)2) vs (0(12))",
    }


def test_unital_check_catches_a_single_mutation():
    A = bracketing5()
    table = dict(bracketing_gamma(A, "left").table)
    table[("[*,*,*,*]", "u", "u")] = "((01)(23))"
    rep = check_unital(pointing5(), ContractionChoice("unital", table), 5)
    assert not rep["passed"]


def test_search_fills_the_terminal_operad():
    T = terminal_operad(2, 4)
    got = search_contraction(T, 4)
    assert isinstance(got, ContractionChoice) and got.kind == "leinster"
    assert len(got.table) == len(scope_trees(2, 4, nonlinear_only=False)) == 21
    got = search_contraction(T, 4, unital=True)
    assert isinstance(got, ContractionChoice) and got.kind == "unital"


def test_search_reports_exhaustion_for_missing_fillers():
    got = search_contraction(rgr_operad(2, 4), 4)
    assert got == {
        "found": False,
        "tree": "[*,*]",
        "src": "u",
        "tgt": "u",
        "detail": "no filler exists",
    }


def test_unital_search_recovers_the_left_comb():
    A = bracketing_operad(4)
    got = search_contraction(A, 4, unital=True)
    assert isinstance(got, ContractionChoice)
    assert got.table == bracketing_gamma(A, "left", 4).table


def test_name_order_prefers_the_left_comb():
    for m in range(2, 7):
        words = sorted(
            {left_bracketing(m), right_bracketing(m)}
            | set(bracketing5().carrier.ops.get("[" + ",".join(["*"] * m) + "]", ()))
        )
        assert words[0] == left_bracketing(m)


def test_top_stage_strictness():
    assert check_top_strict(bracketing_operad(6), 6)["passed"]
    assert check_top_strict(terminal_operad(2, 4), 4)["passed"]
    doubled = Collection(2, {"[[*,*]]": ("x", "y")})
    rep = check_top_strict(doubled, 3)
    assert not rep["passed"]
    assert rep["violations"] == [
        {
            "kind": "top-strict",
            "tree": "[[*,*]]",
            "src": "u",
            "tgt": "u",
            "detail": "fillers ['x', 'y']",
        }
    ]

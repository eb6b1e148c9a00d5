"""The stagewise left adjoint, the lifted tensor, and the convolution comparison."""

import random

import pytest

from globop.enrich import (
    Functor,
    SetGraph,
    arrow_multicategory,
    chain_graph,
    eval_tensor,
    free_e1_algebra,
    gamma_apply,
    terminal_multicategory,
)
from globop.lifting import (
    LiftProblem,
    check_s_algebra,
    day_compare,
    lift_multitensor,
    phi_shriek,
    random_functor,
    recover_on_free,
)


def two_point():
    """A functor on the one-arrow linear part with a merged fibre."""
    return Functor(
        {"d": ("p",), "e": ("q1", "q2")},
        {("1d", "p"): "p", ("u", "p"): "q1", ("1e", "q1"): "q1", ("1e", "q2"): "q2"},
    )


def random_families(A, seed):
    rng = random.Random(seed)
    k = rng.choice([0, 1, 1, 2, 2])
    return [
        {c: tuple(f"g{i}.{c}{j}" for j in range(rng.randint(0, 2))) for c in A.objects}
        for i in range(k)
    ]


# ---------------------------------------------------------------------------
# The coequalizer chain


def test_discrete_linear_part_stabilizes_immediately():
    T = terminal_multicategory(4)
    F1 = Functor({"c": ("x", "y")}, {("m1", "x"): "x", ("m1", "y"): "y"})
    F2 = Functor({"c": ("z",)}, {("m1", "z"): "z"})
    lifted, state = lift_multitensor(T, [F1, F2])
    assert state.stabilized and state.stage == 0
    # nothing to coequalize: the result is the free stage itself
    assert state.sizes[0] == state.sizes[1]
    assert all(state.coeq[e] == e for e in state.coeq)
    # and the reading is the plain tensor, a product count here
    assert len(lifted.values["c"]) == 2


def test_unary_lift_returns_the_input():
    A = arrow_multicategory(4)
    G = two_point()
    lifted, state = lift_multitensor(A, [G])
    assert state.stabilized
    assert {c: len(v) for c, v in lifted.values.items()} == {"d": 1, "e": 2}
    # the embedding y -> class of the unit path matches the actions
    embed = {
        (c, y): state.coeq[(("0", "1"), (A.identities[c], (y,)))]
        for c in A.objects
        for y in G.values[c]
    }
    assert len(set(embed.values())) == 3
    for (c, y), xi in embed.items():
        for d in A.objects:
            for u in A.linear_maps(c, d):
                assert lifted.action[(u, xi)] == embed[(d, G.action[(u, y)])]


def test_stage_sizes_weakly_decrease_after_the_free_stage():
    A = arrow_multicategory(4)
    G = two_point()
    for fs in ([G], [G, G], [G, free_e1_algebra(A, {"d": ("s",)})]):
        _, state = lift_multitensor(A, fs)
        assert state.stabilized
        tail = state.sizes[1:]
        assert all(a >= b for a, b in zip(tail, tail[1:]))


def test_stabilized_output_is_an_algebra():
    A = arrow_multicategory(4)
    G = two_point()
    _, state = lift_multitensor(A, [G, G])
    assert state.stabilized and state.stage == 1
    rep = check_s_algebra(A, state.graph, state.algebra)
    assert rep["passed"]
    assert rep["instances"]["unit"] == 10 and rep["instances"]["assoc"] == 39


def test_coequalizing_map_merges_the_relations():
    # u moved between the multimap and the hom algebra lands in one class
    A = arrow_multicategory(4)
    G = two_point()
    _, state = lift_multitensor(A, [G])
    moved = state.coeq[(("0", "1"), ("u", ("p",)))]
    acted = state.coeq[(("0", "1"), ("1e", ("q1",)))]
    kept = state.coeq[(("0", "1"), ("1e", ("q2",)))]
    assert moved == acted != kept


def test_backward_homs_stay_empty():
    A = arrow_multicategory(4)
    _, state = lift_multitensor(A, [two_point(), two_point()])
    for (a, b), fam in state.graph.homs.items():
        if int(a) > int(b):
            assert not any(fam.values())


def test_problem_validation_and_guards():
    A = arrow_multicategory(4)
    G = two_point()
    broken = Functor(G.values, {k: v for k, v in G.action.items() if k != ("u", "p")})
    with pytest.raises(ValueError, match="not an algebra"):
        lift_multitensor(A, [broken])

    loop = SetGraph(("a",), {("a", "a"): {"d": ("x",), "e": ("y",)}})
    actions = {("a", "a"): {("1d", "x"): "x", ("u", "x"): "y", ("1e", "y"): "y"}}
    assert LiftProblem(A, loop, actions).validate() == []
    with pytest.raises(ValueError, match="not exact"):
        phi_shriek(LiftProblem(A, loop, actions))

    fams = [{"d": (f"x{i}",), "e": (f"z{i}",)} for i in range(5)]
    X = chain_graph(tuple("abcdef"), fams)
    acts = {}
    for i, f in enumerate(fams):
        ab = ("abcdef"[i], "abcdef"[i + 1])
        x, z = f["d"][0], f["e"][0]
        acts[ab] = {("1d", x): x, ("u", x): z, ("1e", z): z}
    with pytest.raises(ValueError, match="arity bound"):
        phi_shriek(LiftProblem(A, X, acts))

    missing = LiftProblem(A, X, {})
    assert any("no algebra structure" in p for p in missing.validate())


# ---------------------------------------------------------------------------
# Recovery on free algebras


def test_free_inputs_recover_the_tensor():
    A = arrow_multicategory(4)
    rep = recover_on_free(A, [{"d": ("y1",)}, {"e": ("y2",)}])
    assert rep["passed"] and rep["size"] == 1

    T = terminal_multicategory(4)
    rep = recover_on_free(T, [{"c": ("a", "b")}, {"c": ("z",)}])
    assert rep["passed"] and rep["size"] == 2


def test_free_recovery_fifty_seeds():
    A = arrow_multicategory(4)
    for seed in range(50):
        rep = recover_on_free(A, random_families(A, seed))
        assert rep["passed"], (seed, rep)


# ---------------------------------------------------------------------------
# Against the convolution oracle


def test_day_comparison_on_the_merged_fibre_instance():
    A = arrow_multicategory(4)
    rep = day_compare(A, [two_point(), free_e1_algebra(A, {"d": ("s",)})])
    assert rep["passed"]
    assert rep["classes"] == 2
    assert rep["stage"] == 1


def test_day_comparison_handles_empty_tensors():
    A = arrow_multicategory(4)
    rep = day_compare(A, [])
    assert rep["passed"] and rep["classes"] == 0
    T = terminal_multicategory(4)
    rep = day_compare(T, [])
    assert rep["passed"] and rep["classes"] == 1


def test_day_comparison_discrete_base():
    T = terminal_multicategory(4)
    F1 = Functor({"c": ("x", "y")}, {("m1", "x"): "x", ("m1", "y"): "y"})
    rep = day_compare(T, [F1, F1])
    assert rep["passed"] and rep["classes"] == 4


def test_day_comparison_seeded_instances():
    A = arrow_multicategory(4)
    rng = random.Random(0)
    for seed in range(30):
        k = rng.choice([1, 2])
        fs = [random_functor(A, 7919 * seed + i) for i in range(k)]
        rep = day_compare(A, fs)
        assert rep["passed"], (seed, rep)
        assert rep["stage"] <= 16


def test_random_functor_is_functorial():
    from globop.enrich import check_functor

    A = arrow_multicategory(4)
    for seed in range(20):
        assert check_functor(A, random_functor(A, seed)) == []

"""Finite multicategories and the tensors they induce on indexed families.

A multicategory C with object set C_0 induces a tensor on C_0-indexed
families of finite sets: E(X_1..X_k) at an output color is the disjoint
union, over input colors and multimaps, of the product of the X_i.  The
path construction Gamma turns the tensor into a monad on graphs whose homs
are families, summing E over object sequences.  This module computes both,
checks the monad and enriched-category laws elementwise, and computes the
convolution tensor on functors as an explicit union-find quotient.

Elements are nested tagged tuples throughout, so every comparison is
structural equality, and every checker reports instance counts and
violations rather than raising.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

__all__ = [
    "ECategory",
    "Functor",
    "Multicategory",
    "SetGraph",
    "acyclic",
    "arrow_multicategory",
    "check_ecategory",
    "check_functor",
    "check_monad_laws",
    "check_multicategory",
    "chain_graph",
    "convolve",
    "ebar_round_trip",
    "eta_element",
    "eval_tensor",
    "extract_Ebar",
    "family_coproduct",
    "family_unit",
    "free_e1_algebra",
    "free_ecategory",
    "gamma_apply",
    "mu_element",
    "path_likeness_report",
    "paths_between",
    "plain_family",
    "seq_graph",
    "terminal_multicategory",
    "union_find",
]

Family = Mapping[str, tuple]


@dataclass(frozen=True)
class Multicategory:
    """Finite sets of multimaps with named substitution.

    multimaps is keyed by (input colors, output color); names must be
    globally unique so subst can work on names alone.  subst(C, g, fs)
    returns the name of the composite of g with the tuple fs.
    """

    objects: tuple[str, ...]
    multimaps: dict[tuple[tuple[str, ...], str], tuple[str, ...]]
    identities: dict[str, str]
    subst: Callable
    arity_bound: int = 4

    def __post_init__(self) -> None:
        sig: dict[str, tuple[tuple[str, ...], str]] = {}
        for (inputs, out), names in self.multimaps.items():
            if out not in self.objects or any(c not in self.objects for c in inputs):
                raise ValueError(f"multimap signature {(inputs, out)} off the object set")
            if len(inputs) > self.arity_bound:
                raise ValueError(f"arity {len(inputs)} exceeds the bound {self.arity_bound}")
            for name in names:
                if name in sig:
                    raise ValueError(f"duplicate multimap name {name!r}")
                sig[name] = (inputs, out)
        for c, e in self.identities.items():
            if sig.get(e) != ((c,), c):
                raise ValueError(f"identity of {c} must be a multimap {c} to {c}")
        if set(self.identities) != set(self.objects):
            raise ValueError("every object needs an identity")
        object.__setattr__(self, "sig", sig)

    def maps(self, inputs: Sequence[str], out: str) -> tuple[str, ...]:
        return self.multimaps.get((tuple(inputs), out), ())

    def arity(self, name: str) -> int:
        return len(self.sig[name][0])

    def compose(self, g: str, fs: Sequence[str]) -> str:
        """Substitute fs into g, with signature checking."""
        fs = tuple(fs)
        inputs, out = self.sig[g]
        if len(fs) != len(inputs):
            raise ValueError(f"{g} takes {len(inputs)} arguments, got {len(fs)}")
        sources: list[str] = []
        for f, b in zip(fs, inputs):
            fi, fo = self.sig[f]
            if fo != b:
                raise ValueError(f"{f} lands in {fo}, not {b}")
            sources.extend(fi)
        got = self.subst(self, g, fs)
        if self.sig.get(got) != (tuple(sources), out):
            raise ValueError(f"substitution produced {got} with the wrong signature")
        return got

    def linear_maps(self, src: str, tgt: str) -> tuple[str, ...]:
        return self.maps((src,), tgt)


def check_multicategory(C: Multicategory) -> dict:
    """Unit and associativity laws of substitution within the arity bound."""
    names = sorted(C.sig)
    instances = {"units": 0, "assoc": 0}
    violations: list[dict] = []

    for g in names:
        inputs, out = C.sig[g]
        instances["units"] += 2
        left = C.compose(C.identities[out], (g,))
        if left != g:
            violations.append({"kind": "unit", "map": g, "detail": f"1;{g} = {left}"})
        right = C.compose(g, tuple(C.identities[c] for c in inputs))
        if right != g:
            violations.append({"kind": "unit", "map": g, "detail": f"{g};1 = {right}"})

    def tuples_into(colors: tuple[str, ...], limit: int):
        """All composable tuples (f_1..f_k) into the given colors, with
        total source arity at most limit."""
        if not colors:
            yield ()
            return
        head, rest = colors[0], colors[1:]
        for f in names:
            fi, fo = C.sig[f]
            if fo != head or len(fi) > limit:
                continue
            for tail in tuples_into(rest, limit - len(fi)):
                yield (f,) + tail

    for g in names:
        inputs, _ = C.sig[g]
        for fs in tuples_into(inputs, C.arity_bound):
            mids = tuple(itertools.chain.from_iterable(C.sig[f][0] for f in fs))
            for hs in tuples_into(mids, C.arity_bound):
                instances["assoc"] += 1
                gf = C.compose(g, fs)
                lhs = C.compose(gf, hs)
                split: list[tuple[str, ...]] = []
                at = 0
                for f in fs:
                    k = len(C.sig[f][0])
                    split.append(hs[at : at + k])
                    at += k
                rhs = C.compose(g, tuple(C.compose(f, h) for f, h in zip(fs, split)))
                if lhs != rhs:
                    violations.append(
                        {
                            "kind": "assoc",
                            "map": g,
                            "detail": f"({g}{fs}){hs}: {lhs} vs {rhs}",
                        }
                    )
    return {"passed": not violations, "instances": instances, "violations": violations}


# ---------------------------------------------------------------------------
# Stock multicategories


def terminal_multicategory(arity_bound: int = 4) -> Multicategory:
    """One object, one multimap per arity."""

    def subst(C: Multicategory, g: str, fs: Sequence[str]) -> str:
        return "m%d" % sum(C.arity(f) for f in fs)

    return Multicategory(
        objects=("c",),
        multimaps={
            (("c",) * k, "c"): ("m%d" % k,) for k in range(arity_bound + 1)
        },
        identities={"c": "m1"},
        subst=subst,
        arity_bound=arity_bound,
    )


def arrow_multicategory(arity_bound: int = 4) -> Multicategory:
    """Two objects d, e, one linear map u from d to e, and the closure of a
    single binary multimap on e under substitution.

    Every input signature into e of arity 2 up to the bound carries exactly
    one multimap, named by its input colors.
    """
    multimaps: dict[tuple[tuple[str, ...], str], tuple[str, ...]] = {
        (("d",), "d"): ("1d",),
        (("e",), "e"): ("1e",),
        (("d",), "e"): ("u",),
    }
    for k in range(2, arity_bound + 1):
        for inputs in itertools.product("de", repeat=k):
            multimaps[(tuple(inputs), "e")] = ("m." + "".join(inputs),)

    def subst(C: Multicategory, g: str, fs: Sequence[str]) -> str:
        sources = "".join("".join(C.sig[f][0]) for f in fs)
        out = C.sig[g][1]
        if len(sources) == 1:
            return C.identities[sources] if sources == out else "u"
        got = C.maps(tuple(sources), out)
        if not got:
            raise ValueError(f"no multimap {sources} to {out}")
        return got[0]

    return Multicategory(
        objects=("d", "e"),
        multimaps=multimaps,
        identities={"d": "1d", "e": "1e"},
        subst=subst,
        arity_bound=arity_bound,
    )


# ---------------------------------------------------------------------------
# Families and the induced tensor


def plain_family(C: Multicategory, elements: Iterable, color: str | None = None) -> dict:
    """A family supported on one color."""
    color = C.objects[0] if color is None else color
    return {color: tuple(elements)}


def family_coproduct(left: Family, right: Family) -> dict:
    """Disjoint union with side tags."""
    out: dict[str, tuple] = {}
    for c in set(left) | set(right):
        out[c] = tuple(("l", x) for x in left.get(c, ())) + tuple(
            ("r", x) for x in right.get(c, ())
        )
    return out


def eval_tensor(C: Multicategory, families: Sequence[Family]) -> dict:
    """The tensor of a sequence of families: at each output color, tagged
    tuples (multimap, inputs) over all input colorings."""
    k = len(families)
    if k > C.arity_bound:
        raise ValueError(f"arity {k} exceeds the bound {C.arity_bound}")
    out: dict[str, tuple] = {c: () for c in C.objects}
    for c in C.objects:
        acc = []
        for inputs in itertools.product(C.objects, repeat=k):
            for m in C.maps(inputs, c):
                for xs in itertools.product(
                    *(fam.get(col, ()) for fam, col in zip(families, inputs))
                ):
                    acc.append((m, xs))
        out[c] = tuple(acc)
    return out


def family_unit(C: Multicategory, fam: Family) -> dict[tuple, tuple]:
    """The unit map into the unary tensor, elementwise."""
    out = {}
    for c, xs in fam.items():
        for x in xs:
            out[(c, x)] = (C.identities[c], (x,))
    return out


# ---------------------------------------------------------------------------
# Graphs with family-valued homs


@dataclass(frozen=True)
class SetGraph:
    objects: tuple[str, ...]
    homs: dict[tuple[str, str], dict[str, tuple]]

    def hom(self, a: str, b: str) -> dict[str, tuple]:
        return self.homs.get((a, b), {})

    def nonempty(self, a: str, b: str) -> bool:
        return any(self.hom(a, b).values())


def chain_graph(labels: Sequence[str], families: Sequence[Family]) -> SetGraph:
    if len(labels) != len(families) + 1:
        raise ValueError("a chain on n homs needs n + 1 labels")
    return SetGraph(
        tuple(labels),
        {
            (labels[i], labels[i + 1]): dict(fam)
            for i, fam in enumerate(families)
        },
    )


def seq_graph(families: Sequence[Family]) -> SetGraph:
    """The graph with objects 0..n and the i-th family from i-1 to i."""
    return chain_graph(tuple(str(i) for i in range(len(families) + 1)), families)


def acyclic(X: SetGraph) -> bool:
    """No directed cycle through nonempty homs, self-loops included."""
    color = {a: 0 for a in X.objects}

    def visit(a: str) -> bool:
        color[a] = 1
        for b in X.objects:
            if X.nonempty(a, b):
                if color[b] == 1 or (color[b] == 0 and not visit(b)):
                    return False
        color[a] = 2
        return True

    return all(color[a] == 2 or visit(a) for a in X.objects)


def _longest_path(X: SetGraph) -> int:
    """Longest nonempty-hom path length in an acyclic graph."""
    best: dict[str, int] = {}

    def go(a: str) -> int:
        if a not in best:
            best[a] = 0
            best[a] = max(
                (1 + go(b) for b in X.objects if X.nonempty(a, b)), default=0
            )
        return best[a]

    return max((go(a) for a in X.objects), default=0)


def paths_between(X: SetGraph, a: str, b: str, bound: int) -> tuple[tuple[str, ...], ...]:
    """Object sequences from a to b along nonempty homs, up to the length
    bound; the empty path appears only from an object to itself."""
    out: list[tuple[str, ...]] = []

    def go(path: tuple[str, ...]) -> None:
        if path[-1] == b:
            out.append(path)
        if len(path) > bound:
            return
        for c in X.objects:
            if X.nonempty(path[-1], c):
                go(path + (c,))

    go((a,))
    return tuple(p for p in out if len(p) - 1 <= bound)


def gamma_apply(
    C: Multicategory, X: SetGraph, path_bound: int = 8
) -> tuple[SetGraph, bool]:
    """Sum the tensor over object sequences, hom by hom.

    Elements are (path, element of the tensor of the hom chain).  The
    exactness flag is true when the result equals the full sum: the
    nonempty-hom graph is acyclic and no path with an actual contribution
    is cut off by the bound (paths longer than the arity bound contribute
    nothing since there are no multimaps of that arity).
    """
    effective = min(path_bound, C.arity_bound)
    homs: dict[tuple[str, str], dict[str, tuple]] = {}
    for a in X.objects:
        for b in X.objects:
            fam: dict[str, list] = {c: [] for c in C.objects}
            for path in paths_between(X, a, b, effective):
                chain = [X.hom(path[i], path[i + 1]) for i in range(len(path) - 1)]
                for c, elts in eval_tensor(C, chain).items():
                    fam[c].extend((path, e) for e in elts)
            if any(fam.values()):
                homs[(a, b)] = {c: tuple(v) for c, v in fam.items()}
    ok = acyclic(X) and (
        path_bound >= C.arity_bound or _longest_path(X) <= path_bound
    )
    return SetGraph(X.objects, homs), ok


def eta_element(C: Multicategory, a: str, b: str, color: str, x) -> tuple:
    return ((a, b), (C.identities[color], (x,)))


def mu_element(C: Multicategory, xi: tuple) -> tuple:
    """Flatten one layer: concatenate paths and substitute multimaps."""
    path, (m, inner) = xi
    if not inner:
        # Nullary composite: the flattened path is the single start object.
        return ((path[0],), (m, ()))
    flat_path: tuple[str, ...] = (path[0],)
    ms, xs = [], []
    for (p, (mi, xsi)) in inner:
        flat_path = flat_path + p[1:]
        ms.append(mi)
        xs.extend(xsi)
    return (flat_path, (C.compose(m, ms), tuple(xs)))


def _map_inner(elt: tuple, fn: Callable) -> tuple:
    path, (m, xs) = elt
    return (path, (m, tuple(fn(x) for x in xs)))


def check_monad_laws(C: Multicategory, X: SetGraph, path_bound: int = 4) -> dict:
    """Unit and multiplication laws of the path construction, elementwise.

    Unit laws run over every element of the once-applied construction;
    associativity runs over the thrice-applied one, which is why the
    default bound is small.
    """
    G1, exact1 = gamma_apply(C, X, path_bound)
    instances = {"unit_outer": 0, "unit_inner": 0, "assoc": 0}
    violations: list[dict] = []

    for (a, b), fam in G1.homs.items():
        for color, elts in fam.items():
            for xi in elts:
                instances["unit_outer"] += 1
                wrapped = ((a, b), (C.identities[color], (xi,)))
                if mu_element(C, wrapped) != xi:
                    violations.append(
                        {"kind": "unit_outer", "hom": (a, b), "element": repr(xi)}
                    )
                instances["unit_inner"] += 1
                path, (m, xs) = xi
                colors = C.sig[m][0]
                inner = tuple(
                    eta_element(C, path[i], path[i + 1], colors[i], x)
                    for i, x in enumerate(xs)
                )
                if mu_element(C, (path, (m, inner))) != xi:
                    violations.append(
                        {"kind": "unit_inner", "hom": (a, b), "element": repr(xi)}
                    )

    G2, _ = gamma_apply(C, G1, path_bound)
    G3, _ = gamma_apply(C, G2, path_bound)
    instances["assoc_skipped"] = 0
    for fam in G3.homs.values():
        for elts in fam.values():
            for zeta in elts:
                # Both flattening orders need composite multimaps whose
                # arity is the count of pieces one or two layers down; skip
                # elements where either would exceed the stored arities.
                _, (_, inner) = zeta
                mid = sum(len(xi[1][1]) for xi in inner)
                base = sum(
                    len(chi[1][1]) for xi in inner for chi in xi[1][1]
                )
                if mid > C.arity_bound or base > C.arity_bound:
                    instances["assoc_skipped"] += 1
                    continue
                instances["assoc"] += 1
                lhs = mu_element(C, mu_element(C, zeta))
                rhs = mu_element(C, _map_inner(zeta, lambda x: mu_element(C, x)))
                if lhs != rhs:
                    violations.append({"kind": "assoc", "element": repr(zeta)})
    return {
        "passed": not violations,
        "instances": instances,
        "violations": violations,
        "exact": exact1,
    }


def extract_Ebar(T: Callable[[SetGraph], SetGraph], families: Sequence[Family]) -> dict:
    """Evaluate a graph endofunctor on the sequence graph and read off the
    hom from the first object to the last."""
    k = len(families)
    return dict(T(seq_graph(families)).hom("0", str(k)))


def ebar_round_trip(
    C: Multicategory, families: Sequence[Family], path_bound: int = 8
) -> dict:
    """The tensor extracted back from its own path construction matches the
    direct tensor, color by color, by stripping the path tag."""
    direct = eval_tensor(C, families)
    spine = tuple(str(i) for i in range(len(families) + 1))
    back = extract_Ebar(lambda g: gamma_apply(C, g, path_bound)[0], families)
    instances = 0
    violations: list[dict] = []
    for c in C.objects:
        got = list(back.get(c, ()))
        want = list(direct.get(c, ()))
        instances += max(len(got), len(want))
        stripped = [e for path, e in got if path == spine]
        if stripped != want or len(stripped) != len(got):
            violations.append({"kind": "ebar", "color": c, "detail": f"{got} vs {want}"})
    return {"passed": not violations, "instances": instances, "violations": violations}


def path_likeness_report(C: Multicategory, X: SetGraph, path_bound: int = 8) -> dict:
    """Build the comparison map from the path-indexed sum into the applied
    construction and certify it bijective, hom by hom."""
    G, exact = gamma_apply(C, X, path_bound)
    instances = 0
    violations: list[dict] = []
    for a in X.objects:
        for b in X.objects:
            image: dict[str, list] = {c: [] for c in C.objects}
            for path in paths_between(X, a, b, min(path_bound, C.arity_bound)):
                chain = [X.hom(path[i], path[i + 1]) for i in range(len(path) - 1)]
                labels = tuple(str(i) for i in range(len(path)))
                piece, _ = gamma_apply(C, chain_graph(labels, chain), path_bound)
                for c, elts in piece.hom("0", labels[-1]).items():
                    for p, e in elts:
                        if p == labels:
                            image[c].append((path, e))
            for c in C.objects:
                instances += 1
                if sorted(image[c]) != sorted(G.hom(a, b).get(c, ())):
                    violations.append({"kind": "path", "hom": (a, b), "color": c})
    return {
        "passed": not violations,
        "instances": instances,
        "violations": violations,
        "exact": exact,
    }


# ---------------------------------------------------------------------------
# Enriched categories


@dataclass(frozen=True)
class ECategory:
    """A graph with chosen composites for object sequences up to a bound.

    kappa maps each object sequence to a dict sending every element of the
    tensor of the hom chain to an element of the endpoint hom.
    """

    graph: SetGraph
    kappa: dict[tuple[str, ...], dict]


def _sequences(objects: Sequence[str], bound: int):
    for n in range(bound + 1):
        yield from itertools.product(objects, repeat=n + 1)


def _tensor_of_chain(C: Multicategory, X: SetGraph, seq: tuple[str, ...]) -> dict:
    return eval_tensor(
        C, [X.hom(seq[i], seq[i + 1]) for i in range(len(seq) - 1)]
    )


def check_ecategory(C: Multicategory, K: ECategory, bound: int = 3) -> dict:
    """Totality, typing, unit, and associativity of the chosen composites.

    Associativity quantifies over every splitting of a sequence into
    consecutive blocks; the unary splittings are exactly the statement
    that each hom is an algebra for the unary part, counted separately.
    """
    X = K.graph
    instances = {"typing": 0, "unit": 0, "assoc": 0, "unary_algebra": 0}
    violations: list[dict] = []

    for seq in _sequences(X.objects, bound):
        if len(seq) - 1 > C.arity_bound:
            continue
        table = K.kappa.get(seq)
        target = X.hom(seq[0], seq[-1])
        for c, elts in _tensor_of_chain(C, X, seq).items():
            for e in elts:
                instances["typing"] += 1
                got = None if table is None else table.get(e)
                if got is None:
                    violations.append(
                        {"kind": "totality", "seq": seq, "element": repr(e)}
                    )
                elif got not in target.get(c, ()):
                    violations.append(
                        {"kind": "typing", "seq": seq, "element": repr(e)}
                    )

    if violations:
        return {"passed": False, "instances": instances, "violations": violations}

    for (a, b) in itertools.product(X.objects, repeat=2):
        for c, xs in X.hom(a, b).items():
            for x in xs:
                instances["unit"] += 1
                if K.kappa[(a, b)][(C.identities[c], (x,))] != x:
                    violations.append({"kind": "unit", "hom": (a, b), "element": repr(x)})

    for seq in _sequences(X.objects, bound):
        n = len(seq) - 1
        if n > C.arity_bound:
            continue
        # Splittings into m consecutive blocks; repeated marks give empty
        # blocks, eaten by nullary inputs of the outer multimap.
        for m in range(1, min(C.arity_bound, bound) + 1):
            for cuts in itertools.combinations_with_replacement(range(n + 1), m - 1):
                marks = (0,) + cuts + (n,)
                outer = tuple(seq[i] for i in marks)
                blocks = [seq[marks[j] : marks[j + 1] + 1] for j in range(m)]
                if any(len(b) - 1 > C.arity_bound for b in blocks):
                    continue
                block_tensors = [_tensor_of_chain(C, X, b) for b in blocks]
                for out_color in C.objects:
                    for in_colors in itertools.product(C.objects, repeat=m):
                        for g in C.maps(in_colors, out_color):
                            for xis in itertools.product(
                                *(bt.get(col, ()) for bt, col in zip(block_tensors, in_colors))
                            ):
                                instances["assoc"] += 1
                                if m == 1 and len(blocks[0]) == 2:
                                    instances["unary_algebra"] += 1
                                flat = (
                                    C.compose(g, tuple(mi for mi, _ in xis)),
                                    tuple(
                                        x
                                        for _, xsi in xis
                                        for x in xsi
                                    ),
                                )
                                lhs = K.kappa[seq][flat]
                                composed = tuple(
                                    K.kappa[blocks[j]][xis[j]] for j in range(m)
                                )
                                rhs = K.kappa[outer][(g, composed)]
                                if lhs != rhs:
                                    violations.append(
                                        {
                                            "kind": "assoc",
                                            "seq": seq,
                                            "blocks": outer,
                                            "detail": f"{lhs} vs {rhs}",
                                        }
                                    )
    return {"passed": not violations, "instances": instances, "violations": violations}


def free_ecategory(C: Multicategory, Y: SetGraph, path_bound: int = 8, bound: int = 3) -> ECategory:
    """The path construction on Y with concatenation as composition."""
    G, _ = gamma_apply(C, Y, path_bound)
    kappa: dict[tuple[str, ...], dict] = {}
    for seq in _sequences(G.objects, bound):
        if len(seq) - 1 > C.arity_bound:
            continue
        table = {}
        for elts in _tensor_of_chain(C, G, seq).values():
            for m, xis in elts:
                table[(m, xis)] = mu_element(C, ((seq[0], seq[-1]), (m, xis)))
        kappa[seq] = table
    return ECategory(G, kappa)


# ---------------------------------------------------------------------------
# Functors on the linear part and convolution


@dataclass(frozen=True)
class Functor:
    """A functor on the linear part, as finite value sets and an action
    table keyed by (linear map name, element)."""

    values: dict[str, tuple]
    action: dict[tuple[str, object], object] = field(default_factory=dict)

    def apply(self, u: str, x):
        return self.action[(u, x)]


def check_functor(C: Multicategory, F: Functor) -> list[str]:
    problems: list[str] = []
    for c in C.objects:
        for x in F.values.get(c, ()):
            for d in C.objects:
                for u in C.linear_maps(c, d):
                    got = F.action.get((u, x))
                    if got is None:
                        problems.append(f"no action of {u} on {x!r}")
                    elif got not in F.values.get(d, ()):
                        problems.append(f"{u} sends {x!r} outside the values at {d}")
            ident = C.identities[c]
            if F.action.get((ident, x)) != x:
                problems.append(f"identity of {c} moves {x!r}")
    for c in C.objects:
        for d in C.objects:
            for e in C.objects:
                for u in C.linear_maps(c, d):
                    for v in C.linear_maps(d, e):
                        vu = C.compose(v, (u,))
                        for x in F.values.get(c, ()):
                            if F.action.get((vu, x)) != F.action.get(
                                (v, F.action.get((u, x)))
                            ):
                                problems.append(
                                    f"actions of {v}({u}) and {vu} differ on {x!r}"
                                )
    return problems


def free_e1_algebra(C: Multicategory, X: Family) -> Functor:
    """The free functor on a family: pairs (linear map into c, element)."""
    values = {
        c: tuple(
            (u, x)
            for d in C.objects
            for u in C.linear_maps(d, c)
            for x in X.get(d, ())
        )
        for c in C.objects
    }
    action = {}
    for c in C.objects:
        for (u, x) in values[c]:
            for d in C.objects:
                for v in C.linear_maps(c, d):
                    action[(v, (u, x))] = (C.compose(v, (u,)), x)
    return Functor(values, action)


def union_find(elements: Iterable, relations: Iterable[tuple]) -> dict:
    """Quotient by the generated equivalence: element to class representative."""
    parent = {x: x for x in elements}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b in relations:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb, key=repr)] = min(ra, rb, key=repr)
    return {x: find(x) for x in parent}


def convolve(C: Multicategory, functors: Sequence[Functor]) -> tuple[Functor, dict]:
    """The convolution tensor of functors on the linear part.

    Computed as the quotient of the direct tensor of the value families by
    the relations moving linear maps between multimap inputs and functor
    actions.  Returns the functor of classes (elements are sorted member
    tuples) together with the element-to-class map.
    """
    for F in functors:
        problems = check_functor(C, F)
        if problems:
            raise ValueError(f"input is not a functor: {problems[0]}")
    k = len(functors)
    raw = eval_tensor(C, [F.values for F in functors])
    elements = [(c, e) for c in C.objects for e in raw[c]]

    relations = []
    for c in C.objects:
        for inner in itertools.product(C.objects, repeat=k):
            for outer in itertools.product(C.objects, repeat=k):
                us = [C.linear_maps(i, o) for i, o in zip(inner, outer)]
                for m in C.maps(outer, c):
                    for choice in itertools.product(*us):
                        moved = C.compose(m, choice)
                        for xs in itertools.product(
                            *(F.values.get(i, ()) for F, i in zip(functors, inner))
                        ):
                            left = (c, (moved, xs))
                            right = (
                                c,
                                (
                                    m,
                                    tuple(
                                        F.apply(u, x)
                                        for F, u, x in zip(functors, choice, xs)
                                    ),
                                ),
                            )
                            relations.append((left, right))
    rep = union_find(elements, relations)
    members: dict = {}
    for x, r in rep.items():
        members.setdefault(r, []).append(x)
    classes = {r: tuple(sorted(ms, key=repr)) for r, ms in members.items()}

    values = {
        c: tuple(
            sorted(
                {classes[rep[(c, e)]] for e in raw[c]},
                key=repr,
            )
        )
        for c in C.objects
    }
    action = {}
    for c in C.objects:
        for cls in values[c]:
            for d in C.objects:
                for v in C.linear_maps(c, d):
                    images = {
                        classes[rep[(d, (C.compose(v, (m, )), xs))]]
                        for _, (m, xs) in cls
                    }
                    if len(images) != 1:
                        raise ValueError(f"action of {v} not constant on a class")
                    action[(v, cls)] = images.pop()
    result = Functor(values, action)
    return result, {x: classes[r] for x, r in rep.items()}

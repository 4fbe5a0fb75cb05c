import random
from fractions import Fraction

import pytest

from vtrees import (
    BoundaryPoint,
    ClopenSet,
    FormatError,
    TypeGraph,
    boundary_point,
    epsilon_neighborhood,
    eventually_periodic_witness,
    is_isolated,
    load_type_graph,
    parse_address,
    parse_eps,
    parse_point,
    point_is_isolated,
    subtree_isomorphic,
    visual_distance,
)
from vtrees.treespace import address_str, eps_exponent, isolated_point_ball

from conftest import BINARY_SPEC, WIDE_SPEC, RAY_SPEC, random_point
from oracles import (
    addresses_at_depth,
    contains_point_bruteforce,
    iso_to_depth,
    max_ball_depth,
    order_iso_to_depth,
)


def pt(tg, prefix, cycle):
    return boundary_point(tg, prefix, cycle)


# ---------------------------------------------------------------------------
# Type graphs


def test_load_binary():
    tg = load_type_graph(BINARY_SPEC)
    assert tg.root_type == "b"
    assert tg.arity("b") == 2
    assert tg.type_at((0, 1, 0)) == "b"


def test_load_wide():
    tg = load_type_graph(WIDE_SPEC)
    assert tg.arity(tg.root_type) == 3
    assert tg.type_at((2,)) == "b"
    assert tg.arity(tg.type_at((2,))) == 2


def test_load_rejects_empty_children():
    with pytest.raises(FormatError, match="empty children"):
        load_type_graph('{"types": {"a": ["a", "b"], "b": []}, "root": "a"}')


def test_load_rejects_unknown_type():
    with pytest.raises(FormatError, match="unknown child type"):
        load_type_graph('{"types": {"a": ["a", "c"]}, "root": "a"}')


def test_load_rejects_missing_root():
    with pytest.raises(FormatError):
        load_type_graph('{"types": {"a": ["a", "a"]}, "root": "z"}')


def test_load_rejects_malformed():
    with pytest.raises(FormatError):
        load_type_graph("not json at all {")
    with pytest.raises(FormatError):
        load_type_graph('{"types": {}}')


# ---------------------------------------------------------------------------
# Subtree isomorphism


def test_subtree_isomorphic_binary(binary):
    assert subtree_isomorphic(binary, "b", "b")


def test_subtree_isomorphic_arity_mismatch(ray):
    # expected value frozen from the depth-2 unrolling oracle
    assert iso_to_depth(ray, "a", "b", 2) is False
    assert subtree_isomorphic(ray, "a", "b") is False


def test_subtree_isomorphic_unordered_but_not_ordered():
    # x and y have the same children up to swapping, with p (binary) and
    # q (a ray) non-isomorphic, so unordered isomorphism holds and the
    # ordered one fails; both frozen from the depth-4 unrolling oracle.
    tg = TypeGraph({"x": ["p", "q"], "y": ["q", "p"],
                    "p": ["p", "p"], "q": ["q"]}, "x")
    assert iso_to_depth(tg, "x", "y", 4) is True
    assert order_iso_to_depth(tg, "x", "y", 4) is False
    assert subtree_isomorphic(tg, "x", "y") is True
    assert not tg.subtree_order_isomorphic("x", "y")
    assert subtree_isomorphic(tg, "p", "q") is False


def test_subtree_isomorphic_matches_oracle_on_random_graphs():
    rng = random.Random(5)
    names = ["t0", "t1", "t2", "t3"]
    for _ in range(25):
        children = {t: [rng.choice(names) for _ in range(rng.randint(1, 3))]
                    for t in names}
        tg = TypeGraph(children, "t0")
        for s in names:
            for t in names:
                # depth 8 is far beyond stabilisation for 4 types
                assert subtree_isomorphic(tg, s, t) == iso_to_depth(tg, s, t, 8)


def test_subtree_isomorphic_rejects_undeclared(binary):
    with pytest.raises(ValueError):
        subtree_isomorphic(binary, "b", "nope")


# ---------------------------------------------------------------------------
# Boundary points and the visual metric


def test_point_canonical_absorbs_prefix(binary):
    assert str(pt(binary, (1,), (1,))) == "(1)^inf"
    assert str(pt(binary, (1, 1), (1,))) == "(1)^inf"
    assert str(pt(binary, (0, 1, 0), (0,))) == "01(0)^inf"


def test_point_canonical_primitive_cycle(binary):
    assert str(pt(binary, (), (0, 0))) == "(0)^inf"
    assert str(pt(binary, (), (1, 0, 1, 0))) == "(10)^inf"
    assert str(pt(binary, (0, 1), (1, 0))) == "01(10)^inf"


def test_point_cycle_respects_types():
    # with two alternating types the one-step cycle must unroll to length 2
    tg = TypeGraph({"a": ["b"], "b": ["a"]}, "a")
    p = boundary_point(tg, (), (0,))
    assert p.cycle == (0, 0)
    assert str(p) == "(00)^inf"


def test_point_equality_is_representation_independent(binary):
    rng = random.Random(11)
    for _ in range(200):
        x = random_point(binary, rng)
        k = rng.randint(1, 3)
        expanded = boundary_point(binary, x.prefix + x.cycle * k, x.cycle)
        assert expanded == x


def test_point_rejects_invalid(binary, ray):
    with pytest.raises(ValueError):
        boundary_point(binary, (2,), (0,))
    with pytest.raises(ValueError):
        boundary_point(ray, (1,), (0, 1))  # type b has a single child
    with pytest.raises(ValueError):
        boundary_point(binary, (), ())


def test_visual_distance_pinned(binary):
    assert visual_distance(pt(binary, (), (0,)), pt(binary, (), (0,))) == 0
    assert visual_distance(pt(binary, (), (0,)), pt(binary, (), (1,))) == 1
    a = pt(binary, (0, 1, 0), (0,))
    b = pt(binary, (0, 1, 1), (1,))
    assert visual_distance(a, b) == Fraction(1, 4)


def test_visual_distance_mixed_graphs(binary, wide):
    with pytest.raises(ValueError):
        visual_distance(pt(binary, (), (0,)), pt(wide, (0,), (0,)))


def test_ultrametric_inequality(binary):
    rng = random.Random(23)
    for _ in range(300):
        x, y, z = (random_point(binary, rng) for _ in range(3))
        assert visual_distance(x, z) <= max(visual_distance(x, y),
                                            visual_distance(y, z))


def test_point_parse_roundtrip(binary, wide):
    rng = random.Random(37)
    for tg in (binary, wide):
        for _ in range(100):
            x = random_point(tg, rng)
            assert parse_point(tg, str(x)) == x
    with pytest.raises(FormatError):
        parse_point(binary, "01")
    with pytest.raises(FormatError):
        parse_point(binary, "01()^inf")


# ---------------------------------------------------------------------------
# Clopen sets


def ball(tg, digits):
    return ClopenSet.ball(tg, parse_address(digits))


def random_clopen(tg, rng, depth=4, count=3):
    out = ClopenSet.empty(tg)
    for _ in range(rng.randint(0, count)):
        addr = []
        t = tg.root_type
        for _ in range(rng.randint(0, depth)):
            i = rng.randrange(tg.arity(t))
            addr.append(i)
            t = tg.children[t][i]
        out = out.union(ClopenSet.ball(tg, addr))
    return out


def test_clopen_pinned(binary):
    assert ball(binary, "0").complement() == ball(binary, "1")
    assert ball(binary, "00").union(ball(binary, "01")) == ball(binary, "0")
    assert ball(binary, "11").contains_point(pt(binary, (), (1,)))
    assert ClopenSet.full(binary).complement().is_empty()


def test_clopen_canonical_normal_form(binary):
    c = ClopenSet.from_balls(binary, [(0, 0), (0, 1), (1, 1)])
    assert c.ball_strs() == ["0", "11"]
    d = ClopenSet.from_balls(binary, [(1, 1), (0,)])
    assert c == d
    assert hash(c) == hash(d)


def test_clopen_algebra_laws(binary, wide):
    rng = random.Random(101)
    for tg in (binary, wide):
        for _ in range(60):
            a = random_clopen(tg, rng)
            b = random_clopen(tg, rng)
            c = random_clopen(tg, rng)
            # de Morgan
            assert (a.union(b)).complement() == a.complement().intersect(b.complement())
            assert (a.intersect(b)).complement() == a.complement().union(b.complement())
            # double complement, absorption
            assert a.complement().complement() == a
            assert a.union(a.intersect(b)) == a
            assert a.intersect(a.union(b)) == a
            # distributivity
            assert a.intersect(b.union(c)) == (a & b) | (a & c)
            # difference and subset
            assert (a - b) == a & ~b
            assert (a & b).subset_of(a)


def test_clopen_mixed_graphs(binary, wide):
    with pytest.raises(ValueError):
        ClopenSet.full(binary).union(ClopenSet.full(wide))


def test_contains_point_matches_bruteforce(binary, wide):
    rng = random.Random(11)
    for tg in (binary, wide):
        for _ in range(150):
            c = random_clopen(tg, rng)
            x = random_point(tg, rng)
            depth = max_ball_depth(c) + len(x.prefix) + len(x.cycle)
            assert c.contains_point(x) == contains_point_bruteforce(c, x, depth)


def test_ray_tree_ball_collapse(ray):
    # below an arity-1 vertex the ball is the same set of ends, and the
    # canonical form must identify the two
    assert ClopenSet.ball(ray, (0, 1)) == ClopenSet.ball(ray, (0, 1, 0))


# ---------------------------------------------------------------------------
# Epsilon neighborhoods


def test_eps_neighborhood_pinned(binary):
    one_inf = pt(binary, (), (1,))
    nb = epsilon_neighborhood(binary, [one_inf], Fraction(1, 4))
    assert nb == ball(binary, "11")
    # frozen from the depth-3 enumeration oracle: exactly the depth-3
    # addresses extending "11" lie within 1/4 of (1)^inf
    hits = [a for a in addresses_at_depth(binary, 3)
            if visual_distance(eventually_periodic_witness(binary, a), one_inf)
            <= Fraction(1, 4) or a[:2] == (1, 1)]
    assert sorted(set(a[:2] for a in hits)) == [(1, 1)]

    both = [pt(binary, (), (0,)), one_inf]
    assert epsilon_neighborhood(binary, both, Fraction(1)).is_all()
    assert epsilon_neighborhood(binary, [], Fraction(1, 8)).is_empty()


def test_eps_neighborhood_rejects_bad_radius(binary):
    with pytest.raises(ValueError):
        epsilon_neighborhood(binary, [], Fraction(1, 3))
    with pytest.raises(ValueError):
        epsilon_neighborhood(binary, [], Fraction(3, 4))


def test_eps_parsing():
    assert parse_eps("1") == 1
    assert parse_eps("2^-3") == Fraction(1, 8)
    assert parse_eps("1/4") == Fraction(1, 4)
    with pytest.raises(FormatError):
        parse_eps("0.3")
    assert eps_exponent(Fraction(1, 16)) == 4


# ---------------------------------------------------------------------------
# Isolated points and witnesses


def test_is_isolated(binary, ray):
    assert not is_isolated(binary, (0, 1))
    # frozen from the reachable-type oracle: from b only b is reachable and
    # it has arity 1; from a the binary branching at a itself is reachable
    assert is_isolated(ray, (1,))
    assert is_isolated(ray, (0, 1))
    assert not is_isolated(ray, ())
    assert not is_isolated(ray, (0,))


def test_point_isolated(ray, binary):
    assert point_is_isolated(boundary_point(ray, (0, 1), (0,)))
    assert not point_is_isolated(boundary_point(ray, (), (0,)))
    assert not point_is_isolated(boundary_point(binary, (), (0,)))
    assert isolated_point_ball(boundary_point(ray, (0, 1), (0,))) == \
        ClopenSet.ball(ray, (0, 1))


def test_witness_pinned(binary, ray):
    assert str(eventually_periodic_witness(binary, (0, 1))) == "01(0)^inf"
    assert str(eventually_periodic_witness(binary, ())) == "(0)^inf"
    assert str(eventually_periodic_witness(ray, ())) == "(0)^inf"


def test_witness_properties(binary, wide, ray):
    rng = random.Random(3)
    for tg in (binary, wide, ray):
        for _ in range(50):
            addr = []
            t = tg.root_type
            for _ in range(rng.randint(0, 5)):
                i = rng.randrange(tg.arity(t))
                addr.append(i)
                t = tg.children[t][i]
            w = eventually_periodic_witness(tg, addr)
            assert ClopenSet.ball(tg, addr).contains_point(w)
            # canonical-form invariants: the cycle is primitive as a typed
            # sequence and re-normalising is a fixed point
            again = boundary_point(tg, w.prefix, w.cycle)
            assert again.prefix == w.prefix and again.cycle == w.cycle


def test_address_formatting():
    assert address_str((0, 1, 1)) == "011"
    assert parse_address("011") == (0, 1, 1)
    assert parse_address("") == ()
    with pytest.raises(FormatError):
        parse_address("0!1")

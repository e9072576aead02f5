import numpy as np
import pytest

from amenlab.groups import (BoundaryCylinders, CXFunction, DepthError, FinitePoints, GroupDescriptor,
                            GroupError, ball, box, free_ball_size, normal_form, space_from_doc, translate)


def test_free_reduction_cancels_adjacent_inverses():
    G = GroupDescriptor.free(2)
    assert normal_form((1, 2, -2, -1, 2), G).word == (2,)
    assert G.element(G.parse_word("aAbB")).is_identity


def test_parse_and_format_round_trip():
    G = GroupDescriptor.free(2)
    for w in ["e", "a", "abA", "BBa"]:
        g = G.element(G.parse_word(w))
        assert G.element(G.parse_word(G.format(g))) == g


@pytest.mark.parametrize("k,r", [(1, 3), (2, 0), (2, 1), (2, 3), (3, 2)])
def test_ball_size_matches_closed_form(k, r):
    G = GroupDescriptor.free(k)
    assert len(ball(G, r)) == free_ball_size(k, r)


def test_ball_is_shortlex_and_lengths_bounded():
    G = GroupDescriptor.free(2)
    B = ball(G, 3)
    assert B[0].is_identity
    assert [g.length for g in B] == sorted(g.length for g in B)
    assert max(g.length for g in B) == 3


def test_group_axioms_free_abelian_and_finite():
    for G in [GroupDescriptor.free_abelian(2), GroupDescriptor.symmetric(3), GroupDescriptor.cyclic(5)]:
        elems = ball(G, 2)
        for a in elems:
            assert (a * a.inverse()).is_identity
            for b in elems:
                for c in elems[:5]:
                    assert (a * b) * c == a * (b * c)


def test_symmetric_group_order_and_noncommutativity():
    G = GroupDescriptor.symmetric(3)
    assert G.order == 6 and len(G.elements()) == 6
    a, b = G.generators
    assert a * b != b * a


def test_box_sizes():
    G = GroupDescriptor.free_abelian(2)
    assert len(box(G, 4)) == 16
    with pytest.raises(GroupError):
        box(GroupDescriptor.free(2), 3)


def test_finite_action_is_an_action():
    G = GroupDescriptor.free(2)
    sp = FinitePoints(G, list("wxyz"), [[1, 2, 3, 0], [1, 0, 3, 2]])
    for g in ball(G, 2):
        for h in ball(G, 2):
            assert np.array_equal(sp.perm(g * h), sp.perm(g)[sp.perm(h)])


def test_invalid_permutation_rejected():
    with pytest.raises(GroupError):
        FinitePoints(GroupDescriptor.free(1), list("ab"), [[0, 0]])


def test_regular_action_of_finite_group():
    G = GroupDescriptor.symmetric(3)
    sp = FinitePoints.regular(G)
    e = sp.index_of(G.identity.data)
    for g in G.elements():
        assert sp.perm(g)[e] == g.data
        assert sorted(sp.perm(g).tolist()) == list(range(6))


def test_boundary_cylinder_counts_and_action():
    G = GroupDescriptor.free(2)
    sp = BoundaryCylinders(G)
    assert sp.size(0) == 1 and sp.size(1) == 4 and sp.size(3) == 4 * 3 * 3
    words = sp.words(3)
    # consecutive letters never cancel
    assert np.all(words[:, 1:] != -words[:, :-1])
    a = G.element(G.parse_word("a"))
    # images are reported at the guaranteed depth len(w) - |g|
    assert sp.act(a, G.parse_word("Abab")) == G.parse_word("bab")
    assert sp.act(a, G.parse_word("bab")) == G.parse_word("ab")
    idx = sp.act_index(a, 2)
    assert idx.shape == (sp.size(2),)


def test_translate_is_an_action_on_functions(rng):
    G = GroupDescriptor.free(2)
    sp = FinitePoints(G, list("wxyz"), [[1, 2, 3, 0], [1, 0, 3, 2]])
    p = CXFunction(sp, rng.normal(size=4))
    a, b = G.generators
    lhs = translate(translate(p, b), a)
    assert lhs.allclose(translate(p, a * b))


def test_cylinder_depth_refinement_round_trip(rng):
    sp = BoundaryCylinders(GroupDescriptor.free(2))
    p = CXFunction(sp, rng.normal(size=sp.size(2)), 2)
    assert p.at_depth(4).at_depth(2).allclose(p)
    with pytest.raises(DepthError):
        p.at_depth(1)


def test_space_from_doc_kinds():
    G = GroupDescriptor.free(2)
    assert space_from_doc(G, {"type": "point"}).size(0) == 1
    assert space_from_doc(G, {"type": "boundary"}).is_cylinder
    S = GroupDescriptor.symmetric(3)
    assert space_from_doc(S, {"type": "regular"}).size(0) == 6
    sp = space_from_doc(G, {"type": "finite", "labels": [0, 1, 2], "action": {"a": [1, 2, 0], "b": [0, 2, 1]}})
    assert sp.size(0) == 3


def test_group_doc_round_trip():
    for G in [GroupDescriptor.free(3), GroupDescriptor.free_abelian(2), GroupDescriptor.symmetric(3)]:
        assert GroupDescriptor.from_doc(G.to_doc()) == G


def naive_reduce(word):
    """Repeatedly scan for an adjacent cancelling pair until none is left."""
    w = list(word)
    changed = True
    while changed:
        changed = False
        for i in range(len(w) - 1):
            if w[i] == -w[i + 1]:
                del w[i:i + 2]
                changed = True
                break
    return tuple(w)


def test_normal_form_matches_naive_reducer(rng):
    G = GroupDescriptor.free(2)
    for _ in range(200):
        w = tuple(int(s) for s in rng.choice([1, -1, 2, -2], size=20))
        assert normal_form(w, G).word == naive_reduce(w)
    u, v = (1, 2, -1), (1, -2, 2)
    assert normal_form(u, G) * normal_form(v, G) == normal_form(u + v, G)


def test_cylinder_translate_matches_enumeration():
    G = GroupDescriptor.free(2)
    sp = BoundaryCylinders(G)
    a = G.element(G.parse_word("a"))
    p = CXFunction.indicator(sp, "ab")
    q = translate(p, a)  # q(x) = p(a^-1 x), exact at depth 3
    assert q.depth == 3
    for i, w in enumerate(sp.words(3)):
        pre = naive_reduce((-1,) + tuple(int(s) for s in w))
        assert q.values[i] == (1.0 if pre[:2] == G.parse_word("ab") else 0.0)
    assert sp.act(a, G.parse_word("Aba")) == G.parse_word("ba")


def test_translation_is_an_isometric_algebra_map(rng):
    sp = FinitePoints(GroupDescriptor.free(2), list("wxyz"), [[1, 2, 3, 0], [1, 0, 3, 2]])
    p, q = CXFunction(sp, rng.normal(size=4)), CXFunction(sp, rng.normal(size=4))
    for g in ball(sp.group, 2):
        assert translate(p, g).sup_norm() == p.sup_norm()
        assert translate(p * q, g).allclose(translate(p, g) * translate(q, g))
    one = CXFunction.constant(sp)
    assert translate(one, sp.group.generators[0]).allclose(one)


def test_cyclic_regular_action():
    G = GroupDescriptor.cyclic(3)
    sp = FinitePoints.regular(G)
    assert sp.perm(G.generators[0])[2] == 0


def test_balls_are_nested():
    G = GroupDescriptor.free(2)
    for r in range(3):
        assert set(ball(G, r)) <= set(ball(G, r + 1))

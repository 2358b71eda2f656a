import math
from fractions import Fraction as F
from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pa_attractors.errors import (BranchSetNotInvariant, DoesNotCommute, NoContinuousSheetRule,
                                  NonHyperbolicPeriod, NotAffineImage, NotHyperbolic)
from pa_attractors.flat import SurfacePoint
from pa_attractors.pseudo_anosov import (CoverMap, LinearTorusMap, build_cover_map, cat_map,
                                         classify_centralizer_element, commutes, deck_involution,
                                         dilatation, eigen_data_interval, identity_map, image_arc,
                                         invariant_foliations, measure_scaling, minimal_period,
                                         parse_composite, periodic_points_torus, perron_eigenvalue,
                                         random_arcs, translation_control)

LAMBDA = (3 + math.sqrt(5)) / 2
NEG = LinearTorusMap(((-1, 0), (0, -1)))


def brute_force_periodic(m, n):
    # independent oracle: scan the grid of denominator |det(M^n - I)|
    mn = m.power(n).matrix
    d = abs((mn[0][0] - 1) * (mn[1][1] - 1) - mn[0][1] * mn[1][0])
    out = []
    for i, j in product(range(d), repeat=2):
        x = (F(i, d), F(j, d))
        if m.power(n)(x) == x:
            out.append(x)
    return sorted(out)


@pytest.mark.parametrize("n,count", [(1, 1), (2, 5), (3, 16), (4, 45), (5, 121), (6, 320)])
def test_periodic_point_counts(n, count):
    # |det(M^n - I)| = L_{2n} - 2 for the cat map
    lucas = [2, 1]
    for _ in range(2 * n):
        lucas.append(lucas[-1] + lucas[-2])
    assert count == lucas[2 * n] - 2
    assert len(periodic_points_torus(cat_map(), n)) == count


@pytest.mark.parametrize("n", [1, 2, 3])
def test_periodic_points_match_brute_force(n):
    assert periodic_points_torus(cat_map(), n) == brute_force_periodic(cat_map(), n)


def test_period_two_orbit():
    pts = periodic_points_torus(cat_map(), 2)
    assert (F(1, 5), F(2, 5)) in pts and (F(4, 5), F(3, 5)) in pts
    assert cat_map()((F(1, 5), F(2, 5))) == (F(4, 5), F(3, 5))
    assert minimal_period(cat_map(), (F(1, 5), F(2, 5))) == 2


def test_non_hyperbolic_period_rejected():
    with pytest.raises(NonHyperbolicPeriod):
        periodic_points_torus(LinearTorusMap(((1, 1), (0, 1))), 1)


def test_dilatation_values():
    assert dilatation(cat_map()) == pytest.approx(LAMBDA, abs=1e-15)
    assert perron_eigenvalue(((3, 1), (2, 1))) == pytest.approx(2 + math.sqrt(3), abs=1e-15)
    enc = eigen_data_interval(((2, 1), (1, 1)))
    assert float(enc.a) <= LAMBDA + 1e-15 and LAMBDA - 1e-15 <= float(enc.b)
    assert float(enc.delta) < 1e-30
    with pytest.raises(NotHyperbolic):
        dilatation(LinearTorusMap(((1, 1), (0, 1))))
    with pytest.raises(NotHyperbolic):
        dilatation(LinearTorusMap(((0, -1), (1, 0))))


def test_torus_map_algebra():
    m = cat_map()
    x = (F(2, 7), F(3, 11))
    assert m.inverse()(m(x)) == x
    assert m.power(3)(x) == m(m(m(x)))
    assert m.power(-2)(m.power(2)(x)) == x
    with pytest.raises(ValueError):
        LinearTorusMap(((2, 0), (0, 1)))


def test_lifts_exist(cover, P):
    assert P.flip == 0
    neg = build_cover_map(NEG, cover)
    assert neg.matrix == ((-1, 0), (0, -1))


def test_lift_errors(cover):
    with pytest.raises(BranchSetNotInvariant):
        build_cover_map(LinearTorusMap(((1, 1), (0, 1))), cover)
    from pa_attractors.cover import slit_double_cover
    wrong = slit_double_cover((F(1, 5), F(2, 5)), (F(3, 5), F(1, 5)))
    with pytest.raises(NoContinuousSheetRule):
        build_cover_map(cat_map(), wrong)


def test_lift_projects_to_base(cover, P):
    for p in cover.random_points(np.random.default_rng(1), 100):
        img = P(p)
        expected = np.array(cat_map()(tuple(p.coords)))
        got = np.array(cover.base(img))
        d = got - expected
        assert np.allclose(d - np.round(d), 0, atol=1e-12)


def test_lift_fixes_marked_point_sheet(cover, P):
    # the centre of D maps into sheet 0 by convention
    c = SurfacePoint(0, cover.center)
    assert P(c).polygon == cover.point(P.planar(cover.center), 0).polygon


def test_lift_is_continuous_along_arcs(cover, P):
    # images of nearby points stay nearby (Lipschitz constant |M| <= lambda)
    rng = np.random.default_rng(5)
    for p in cover.random_points(rng, 200):
        ang = rng.uniform(0, 2 * math.pi)
        from pa_attractors.flat import trace_arc
        q = trace_arc(cover.surface, p, (math.cos(ang), math.sin(ang)), 1e-4).end
        assert cover.distance(P(p), P(q)) <= LAMBDA * 1e-4 + 1e-12


def test_exact_evaluation(cover, P):
    p = SurfacePoint(0, cover.from_ab(F(1, 3), F(1, 7)))
    img = P(p)
    assert all(isinstance(c, F) for c in img.coords)


def test_compose_inverse_power(cover, P, deck):
    pts = cover.random_points(np.random.default_rng(2), 60)
    inv = P.inverse()
    sq = P.power(2)
    comp = deck.compose(sq)
    for p in pts:
        assert cover.distance(inv(P(p)), p) < 1e-9
        assert cover.distance(sq(p), P(P(p))) < 1e-9
        assert cover.distance(comp(p), deck(P(P(p)))) < 1e-9
        assert cover.distance(P.power(-1)(p), inv(p)) < 1e-9
        assert identity_map(cover)(p) == cover.surface.normalize_point(p.polygon, p.coords, 1e-12)


def test_parse_composite(cover, P, deck):
    named = {"P": P, "deck": deck}
    q = parse_composite("deck*P^2", named)
    assert (q.matrix, q.flip) == (deck.compose(P.power(2)).matrix, deck.compose(P.power(2)).flip)
    from pa_attractors.errors import ParseError
    with pytest.raises(ParseError):
        parse_composite("Q", named)
    with pytest.raises(ParseError):
        parse_composite("P^x", named)


def test_commutation(cover, P, deck):
    assert commutes(P, deck)
    assert commutes(P, build_cover_map(NEG, cover))
    assert not commutes(P, translation_control(cover))


def test_measure_scaling_of_P(cover, P):
    fols = invariant_foliations(P)
    sc = measure_scaling(P, fols, random_arcs(cover, 20, seed=3))
    assert sc.nu_s == pytest.approx(LAMBDA, abs=1e-9)
    assert sc.nu_u == pytest.approx(1 / LAMBDA, abs=1e-9)
    assert sc.spread_s < 1e-9 and sc.spread_u < 1e-9


def test_left_eigenvectors():
    fols = invariant_foliations(cat_map())
    M = np.array([[2, 1], [1, 1]], dtype=float)
    es, eu = np.array(fols.stable.covector), np.array(fols.unstable.covector)
    assert np.allclose(es @ M, LAMBDA * es)
    assert np.allclose(eu @ M, eu / LAMBDA)


def test_image_arc_detects_non_lift(cover):
    # a shear does not preserve the branch set; arcs crossing the slit break
    fake = CoverMap(cover, ((1, 1), (0, 1)), (F(0), F(0)), 0)
    arcs = random_arcs(cover, 40, seed=1, length=0.8)
    with pytest.raises(NotAffineImage):
        for a in arcs:
            image_arc(fake, a)


def test_classifier(cover, P, deck):
    fols = invariant_foliations(P)
    arcs = random_arcs(cover, 8)
    v = classify_centralizer_element(deck, P, fols, arcs, samples=50)
    assert (v.kind, v.order) == ("periodic", 2)
    v = classify_centralizer_element(build_cover_map(NEG, cover), P, fols, arcs, samples=50)
    assert (v.kind, v.order) == ("periodic", 2)
    v = classify_centralizer_element(identity_map(cover), P, fols, arcs, samples=50)
    assert (v.kind, v.order) == ("periodic", 1)
    v = classify_centralizer_element(P.inverse(), P, fols, arcs, samples=50)
    assert v.kind == "pseudo-anosov" and v.dilatation == pytest.approx(LAMBDA, abs=1e-9)
    with pytest.raises(DoesNotCommute):
        classify_centralizer_element(translation_control(cover), P, fols, arcs, samples=50)

from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pa_attractors.cover import (SlitCover, cover_from_dict, invariant_slit_cover, slit_class_consistent,
                                 slit_double_cover)
from pa_attractors.errors import BranchSetNotInvariant, DegeneratePath
from pa_attractors.flat import SurfacePoint, cone_points, gauss_bonnet_defect, genus

CAT = ((2, 1), (1, 1))


def test_default_cover_topology(cover):
    s = cover.surface
    assert (s.vertex_count, s.edge_count, s.face_count) == (4, 8, 2)
    assert genus(s) == 2
    angles = [c.angle_over_pi for c in cone_points(s)]
    assert angles == [4, 4] and all(isinstance(a, int) for a in angles)
    assert gauss_bonnet_defect(s) == 0
    assert s.area() == 2


def test_riemann_hurwitz(cover):
    # chi(cover) = 2 chi(torus) - (number of branch points)
    assert cover.surface.euler_characteristic() == 2 * 0 - 2


def test_branch_points(cover):
    assert set(cover.branch_points) == {(F(1, 5), F(2, 5)), (F(4, 5), F(3, 5))}
    b1, b2 = cover.branch_surface_points
    assert b1 != b2


def test_slit_frame_is_unimodular(cover):
    v, w = cover.v, cover.w
    assert v[0] * w[1] - v[1] * w[0] == 1
    assert cover.q == F(2, 5)
    # the slit sits on the bottom side of the fundamental parallelogram
    a0, b0 = cover.ab(cover.start)
    assert (a0, b0) == (cover.alpha, 0)


@pytest.mark.parametrize("vector", [(F(2, 5), F(4, 5)), (F(3, 5), F(1, 5)), (F(-2, 5), F(1, 5))])
def test_any_slit_gives_genus_two(vector):
    c = slit_double_cover((F(4, 5), F(3, 5)), vector)
    assert genus(c.surface) == 2
    assert [cp.angle_over_pi for cp in cone_points(c.surface)] == [4, 4]


def test_slit_too_long_rejected():
    with pytest.raises(ValueError):
        SlitCover((0, 0), (1, 0))


def test_crossings_oracle(cover):
    # lattice coordinates: slit translates are b in Z, frac(a) in (3/10, 7/10)
    p = cover.from_ab(F(1, 2), F(1, 2))
    assert cover.crossings(p, cover.from_ab(F(1, 2), F(3, 2))) == 1
    assert cover.crossings(p, cover.from_ab(F(1, 2), F(7, 2))) == 3
    assert cover.crossings(p, cover.from_ab(F(-1, 10), F(3, 2))) == 0  # passes beside the slit
    assert cover.crossings(p, cover.from_ab(F(1, 2), F(1))) == 0  # endpoint on slit not counted
    with pytest.raises(DegeneratePath):
        cover.crossings(p, cover.from_ab(F(1, 10), F(-1, 2)))  # through the branch point at a = 3/10


def test_point_on_slit_uses_approach_side(cover):
    y = cover.from_ab(F(1, 2), F(1))
    below = cover.point(y, 0, approach=1)
    above = cover.point(y, 0, approach=-1)
    assert below != above
    assert below.polygon == 0 and cover.ab(below.coords)[1] == 1 or below.polygon == 1


def test_deck_swaps_sheets(cover):
    p = SurfacePoint(0, cover.from_ab(F(1, 3), F(1, 4)))
    q = cover.deck(p)
    assert q.polygon == 1 and q.coords == p.coords
    assert cover.deck(q) == p
    assert cover.distance(p, q) > 0.1


@settings(max_examples=50, deadline=None)
@given(st.floats(0, 1, exclude_max=True), st.floats(1e-6, 1 - 1e-6),
       st.floats(0, 1, exclude_max=True), st.floats(1e-6, 1 - 1e-6),
       st.integers(0, 1), st.integers(0, 1))
def test_distance_is_symmetric(cover, a1, b1, a2, b2, s1, s2):
    # b away from Z keeps both points off the slit, where the sheet is ambiguous
    p = SurfacePoint(s1, tuple(float(c) for c in cover.from_ab(a1, b1)))
    q = SurfacePoint(s2, tuple(float(c) for c in cover.from_ab(a2, b2)))
    d1, d2 = cover.distance(p, q), cover.distance(q, p)
    assert d1 == pytest.approx(d2, abs=1e-12)
    assert cover.distance(p, p) == 0.0
    # never shorter than the base torus distance
    base = np.array(cover.base(p)) - np.array(cover.base(q))
    base = np.abs(base - np.round(base))
    assert d1 >= np.hypot(*base) - 1e-12


def test_random_points_avoid_branch_points(cover):
    pts = cover.random_points(np.random.default_rng(0), 500, exclude_radius=0.05)
    for p in pts:
        x = np.array(cover.base(p))
        for b in cover.branch_points:
            d = x - np.array([float(b[0]), float(b[1])])
            d -= np.round(d)
            assert np.hypot(*d) >= 0.05


def test_invariant_slit_search_finds_cat_map_class():
    c = invariant_slit_cover(CAT, (F(1, 5), F(2, 5)), (F(4, 5), F(3, 5)))
    assert slit_class_consistent(c, CAT)
    assert slit_class_consistent(c, ((-1, 0), (0, -1)))


def test_short_slit_is_not_cat_invariant():
    # the straight segment inside the unit square joining the two branch points
    c = slit_double_cover((F(1, 5), F(2, 5)), (F(3, 5), F(1, 5)))
    assert not slit_class_consistent(c, CAT)


def test_invariant_slit_rejects_non_invariant_pair():
    with pytest.raises(BranchSetNotInvariant):
        invariant_slit_cover(CAT, (F(1, 5), F(2, 5)), (F(1, 2), F(1, 2)))


def test_cover_dict_roundtrip(cover):
    doc = cover.to_dict()
    assert doc == {"slit_start": ["4/5", "3/5"], "slit_vector": ["2/5", "4/5"]}
    assert cover_from_dict(doc).surface.polygons == cover.surface.polygons

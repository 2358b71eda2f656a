import math
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pa_attractors.errors import (ArcTangentToLeaves, Disconnected, HitConePoint, NonTranslationGluing,
                                  OutsidePolygon, UnmatchedEdge)
from pa_attractors.flat import (DirectionalFoliation, PlanarPolygon, SurfacePoint, build_surface,
                                cone_points, gauss_bonnet_defect, genus, normalize_point,
                                render_foliation, separatrix_rays, surface_from_dict, surface_to_dict,
                                trace_arc, transversal_measure, unit_square_torus)

SQUARE = [(0, 0), (1, 0), (1, 1), (0, 1)]


def regular_octagon():
    pts = [(math.cos(math.pi / 8 + j * math.pi / 4), math.sin(math.pi / 8 + j * math.pi / 4)) for j in range(8)]
    return build_surface([pts], [(0, i, 0, i + 4) for i in range(4)])


def test_square_torus_is_flat():
    t = unit_square_torus()
    assert genus(t) == 1
    assert cone_points(t) == []
    assert gauss_bonnet_defect(t) == 0
    assert t.area() == 1


def test_regular_octagon_has_one_6pi_cone():
    s = regular_octagon()
    assert genus(s) == 2
    cones = cone_points(s)
    assert [c.angle_over_pi for c in cones] == [6]
    assert len(cones[0].corners) == 8
    assert gauss_bonnet_defect(s) == 0


def test_doubled_triangle_sphere_in_isometric_mode():
    tri = [(0, 0), (1, 0), (0, 1)]
    mirror = [(0, 0), (0, -1), (1, 0)]
    # AB with B'A', BC with C'B', CA with A'C'
    s = build_surface([tri, mirror], [(0, 0, 1, 2), (0, 1, 1, 1), (0, 2, 1, 0)], isometric=True)
    assert (s.vertex_count, s.edge_count, s.face_count) == (3, 3, 2)
    assert genus(s) == 0
    assert sorted(round(c.angle_over_pi, 12) for c in cone_points(s)) == [0.5, 0.5, 1.0]
    assert abs(gauss_bonnet_defect(s)) < 1e-12


def test_doubled_triangle_rejected_as_translation_surface():
    tri = [(0, 0), (1, 0), (0, 1)]
    mirror = [(0, 0), (0, -1), (1, 0)]
    with pytest.raises(NonTranslationGluing):
        build_surface([tri, mirror], [(0, 0, 1, 2), (0, 1, 1, 1), (0, 2, 1, 0)])


def test_gluing_errors():
    with pytest.raises(UnmatchedEdge):
        build_surface([SQUARE], [(0, 0, 0, 2)])
    with pytest.raises(UnmatchedEdge):
        build_surface([SQUARE], [(0, 0, 0, 2), (0, 1, 0, 3), (0, 0, 0, 3)])
    with pytest.raises(NonTranslationGluing):
        build_surface([SQUARE], [(0, 0, 0, 1), (0, 2, 0, 3)])
    with pytest.raises(Disconnected):
        build_surface([SQUARE, [(2, 0), (3, 0), (3, 1), (2, 1)]],
                      [(0, 0, 0, 2), (0, 1, 0, 3), (1, 0, 1, 2), (1, 1, 1, 3)])


def test_polygon_validation():
    with pytest.raises(ValueError):
        PlanarPolygon([(0, 0), (0, 1), (1, 1), (1, 0)])  # clockwise
    with pytest.raises(ValueError):
        PlanarPolygon([(0, 0), (2, 2), (2, 0), (0, 2)])  # self-intersecting
    with pytest.raises(ValueError):
        PlanarPolygon([(0, 0), (1, 0)])


def test_normalize_point_cases():
    t = unit_square_torus()
    assert normalize_point(t, 0, (F(1, 2), F(1, 2))) == SurfacePoint(0, (F(1, 2), F(1, 2)))
    # left edge (id 3) is reported on the right edge (id 1)
    assert normalize_point(t, 0, (F(0), F(1, 3))) == SurfacePoint(0, (F(1), F(1, 3)))
    assert normalize_point(t, 0, (F(1), F(1, 3))) == SurfacePoint(0, (F(1), F(1, 3)))
    # top edge to bottom edge
    assert normalize_point(t, 0, (F(1, 4), F(1))) == SurfacePoint(0, (F(1, 4), F(0)))
    # every corner collapses to one vertex
    assert normalize_point(t, 0, (F(1), F(1))) == SurfacePoint(0, (F(0), F(0)))
    with pytest.raises(OutsidePolygon):
        normalize_point(t, 0, (F(2), F(1, 2)))


def test_trace_on_torus_matches_mod_one():
    t = unit_square_torus()
    d = (1.0, math.sqrt(2))
    arc = trace_arc(t, SurfacePoint(0, (0.1, 0.2)), d, 7.3)
    unit = np.array(d) / np.linalg.norm(d)
    expected = (np.array([0.1, 0.2]) + 7.3 * unit) % 1.0
    assert np.allclose(arc.end.coords, expected, atol=1e-12)
    assert sum(math.dist(a, b) for _, a, b in arc.segments) == pytest.approx(7.3, abs=1e-12)


def test_exact_trace_with_rational_direction():
    t = unit_square_torus()
    arc = trace_arc(t, SurfacePoint(0, (F(1, 10), F(1, 5))), (F(3), F(4)), F(2))
    # unit direction (3/5, 4/5), displacement (6/5, 8/5)
    assert arc.end == SurfacePoint(0, (F(3, 10), F(4, 5)))


def test_trace_hits_cone_point(cover):
    s = cover.surface
    b = cover.branch_surface_points[0]
    start = (b.coords[0] - F(1, 10), b.coords[1] + F(1, 10))
    p = s.normalize_point(0, start)
    with pytest.raises(HitConePoint) as info:
        trace_arc(s, p, (1.0, -1.0), 1.0)
    assert info.value.length == pytest.approx(math.sqrt(2) / 10, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.05, 0.95), st.floats(0.05, 0.95), st.floats(0, 2 * math.pi),
       st.floats(0.1, 3.0), st.floats(0.1, 3.0), st.integers(0, 1))
def test_arc_length_additivity_on_cover(cover, a, b, ang, l1, l2, sheet):
    s = cover.surface
    p = SurfacePoint(sheet, tuple(float(c) for c in cover.from_ab(a, b)))
    d = (math.cos(ang), math.sin(ang))
    try:
        whole = trace_arc(s, p, d, l1 + l2)
        first = trace_arc(s, p, d, l1)
        second = trace_arc(s, first.end, d, l2)
    except HitConePoint:
        return
    assert cover.distance(whole.end, second.end) < 1e-9


@settings(max_examples=40, deadline=None)
@given(st.floats(0.05, 0.95), st.floats(0.05, 0.95), st.floats(0, 2 * math.pi), st.floats(0.1, 4.0))
def test_traced_sheet_matches_slit_crossings(cover, a, b, ang, length):
    # independent oracle: label = start sheet + number of slit translates crossed
    x = tuple(float(c) for c in cover.from_ab(a, b))
    d = (math.cos(ang), math.sin(ang))
    try:
        arc = trace_arc(cover.surface, SurfacePoint(0, x), d, length)
    except HitConePoint:
        return
    y = (x[0] + length * d[0], x[1] + length * d[1])
    assert arc.end.polygon == cover.crossings(x, y) % 2
    assert cover.distance(arc.end, cover.point(y, arc.end.polygon)) < 1e-9


def test_transversal_measure_on_torus():
    t = unit_square_torus()
    f = DirectionalFoliation((0.0, 1.0))  # horizontal leaves, measures vertical extent
    arc = trace_arc(t, SurfacePoint(0, (0.1, 0.1)), (1.0, 2.0), 5.0)
    assert transversal_measure(t, f, arc) == pytest.approx(5.0 * 2 / math.sqrt(5), abs=1e-12)
    flat = trace_arc(t, SurfacePoint(0, (0.1, 0.1)), (1.0, 0.0), 0.5)
    with pytest.raises(ArcTangentToLeaves):
        transversal_measure(t, f, flat)


@given(st.floats(0.01, 2.0), st.floats(0.01, 2.0))
def test_transversal_measure_additive(l1, l2):
    t = unit_square_torus()
    f = DirectionalFoliation((0.3, 0.9))
    p = SurfacePoint(0, (0.25, 0.5))
    d = (0.6, 0.8)
    a1 = trace_arc(t, p, d, l1)
    a2 = trace_arc(t, a1.end, d, l2)
    whole = trace_arc(t, p, d, l1 + l2)
    total = transversal_measure(t, f, a1) + transversal_measure(t, f, a2)
    assert transversal_measure(t, f, whole) == pytest.approx(total, abs=1e-9)


def test_separatrix_counts_on_cover(cover):
    f = DirectionalFoliation((0.8506508083520399, -0.5257311121191336))
    for c in cone_points(cover.surface):
        assert len(separatrix_rays(cover.surface, f, c)) == 4 == c.separatrix_count


def test_render_foliation_svg(cover):
    svg = render_foliation(cover.surface, DirectionalFoliation((1.0, 0.3)), density=1.0)
    assert svg.lstrip().startswith("<?xml")
    assert svg.count('id="separatrix-') == 8
    with pytest.raises(ValueError):
        render_foliation(cover.surface, DirectionalFoliation((1.0, 0.3)), density=0)


def test_surface_dict_roundtrip(cover):
    doc = surface_to_dict(cover.surface)
    assert all(isinstance(x, str) for poly in doc["polygons"] for v in poly for x in v)
    again = surface_from_dict(doc)
    assert again.gluings == cover.surface.gluings
    assert again.polygons == cover.surface.polygons

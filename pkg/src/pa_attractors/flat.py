"""Translation surfaces: planar polygons glued along edges by translations.

Coordinates may be :class:`fractions.Fraction` (exact layer) or ``float``.
Gluing validation and the cone-angle bookkeeping are exact for rational
input; arc tracing works in either arithmetic.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import (ArcTangentToLeaves, Disconnected, HitConePoint, NonTranslationGluing,
                     OutsidePolygon, UnmatchedEdge)

Point = Tuple  # (x, y)
CONE_TOL = 1e-12
FLOAT_TOL = 1e-12


def sub(a, b):
    return (a[0] - b[0], a[1] - b[1])


def add(a, b):
    return (a[0] + b[0], a[1] + b[1])


def scale(c, a):
    return (c * a[0], c * a[1])


def cross(a, b):
    return a[0] * b[1] - a[1] * b[0]


def dot(a, b):
    return a[0] * b[0] + a[1] * b[1]


def norm(a) -> float:
    return math.hypot(float(a[0]), float(a[1]))


def _is_exact(*values) -> bool:
    return all(isinstance(v, (int, Fraction)) for v in values)


def pseudo_angle(d) -> Fraction:
    """Exact monotone proxy for the polar angle of ``d``, with values in [0, 4)."""
    x, y = d
    p = Fraction(y) / (abs(Fraction(x)) + abs(Fraction(y))) if _is_exact(x, y) else y / (abs(x) + abs(y))
    if x < 0:
        return 2 - p
    if y < 0:
        return 4 + p
    return p


def _segments_intersect(p1, p2, q1, q2) -> bool:
    d1 = cross(sub(p2, p1), sub(q1, p1))
    d2 = cross(sub(p2, p1), sub(q2, p1))
    d3 = cross(sub(q2, q1), sub(p1, q1))
    d4 = cross(sub(q2, q1), sub(p2, q1))
    if ((d1 > 0 and d2 < 0) or (d1 < 0 and d2 > 0)) and ((d3 > 0 and d4 < 0) or (d3 < 0 and d4 > 0)):
        return True

    def on_seg(a, b, c):
        return (cross(sub(b, a), sub(c, a)) == 0 and min(a[0], b[0]) <= c[0] <= max(a[0], b[0])
                and min(a[1], b[1]) <= c[1] <= max(a[1], b[1]))

    return on_seg(p1, p2, q1) or on_seg(p1, p2, q2) or on_seg(q1, q2, p1) or on_seg(q1, q2, p2)


@dataclass(frozen=True)
class PlanarPolygon:
    vertices: Tuple[Point, ...]

    def __post_init__(self):
        verts = tuple(tuple(v) for v in self.vertices)
        object.__setattr__(self, "vertices", verts)
        n = len(verts)
        if n < 3:
            raise ValueError("a polygon needs at least 3 vertices")
        if self.signed_area() <= 0:
            raise ValueError("polygon must be positively oriented with nonzero area")
        for i in range(n):
            if verts[i] == verts[(i + 1) % n]:
                raise ValueError("repeated consecutive vertex")
            for j in range(i + 2, n):
                if i == 0 and j == n - 1:
                    continue
                if _segments_intersect(verts[i], verts[(i + 1) % n], verts[j], verts[(j + 1) % n]):
                    raise ValueError("polygon is not simple")

    def __len__(self):
        return len(self.vertices)

    def edge(self, i):
        n = len(self.vertices)
        return self.vertices[i % n], self.vertices[(i + 1) % n]

    def edge_vector(self, i):
        a, b = self.edge(i)
        return sub(b, a)

    def signed_area(self):
        v = self.vertices
        return sum(cross(v[i], v[(i + 1) % len(v)]) for i in range(len(v))) / 2

    def corner_directions(self, i):
        """(outgoing edge direction, reversed incoming direction) at vertex i."""
        n = len(self.vertices)
        vi = self.vertices[i]
        return sub(self.vertices[(i + 1) % n], vi), sub(self.vertices[(i - 1) % n], vi)

    def corner_angle(self, i) -> float:
        out, back = self.corner_directions(i)
        ang = math.atan2(float(cross(out, back)), float(dot(out, back)))
        return ang if ang > 0 else ang + 2 * math.pi

    def locate(self, pt, tol=None):
        """Classify ``pt``: ('vertex', i), ('edge', i, u), ('interior',) or None."""
        exact = tol is None and _is_exact(*pt, *self.vertices[0])
        eps = 0 if exact else (FLOAT_TOL if tol is None else tol)
        n = len(self.vertices)
        for i in range(n):
            a, b = self.edge(i)
            e = sub(b, a)
            length = norm(e)
            if abs(float(cross(e, sub(pt, a)))) <= eps * length:
                u = dot(sub(pt, a), e) / dot(e, e)
                if -eps <= u * length and (u - 1) * length <= eps:
                    if abs(u * length) <= eps:
                        return ("vertex", i)
                    if abs((u - 1) * length) <= eps:
                        return ("vertex", (i + 1) % n)
                    return ("edge", i, u)
        inside = False
        for i in range(n):
            a, b = self.edge(i)
            if (a[1] > pt[1]) != (b[1] > pt[1]):
                xint = a[0] + (pt[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1])
                if pt[0] < xint:
                    inside = not inside
        return ("interior",) if inside else None


@dataclass(frozen=True)
class ConePoint:
    corners: Tuple[Tuple[int, int], ...]  # (polygon, vertex) pairs in the identified class
    angle_over_pi: object  # int for translation surfaces, float otherwise
    location: Point

    @property
    def angle(self) -> float:
        return math.pi * float(self.angle_over_pi)

    @property
    def separatrix_count(self) -> int:
        return int(round(float(self.angle_over_pi)))


@dataclass(frozen=True)
class SurfacePoint:
    polygon: int
    coords: Point

    def as_float(self) -> "SurfacePoint":
        return SurfacePoint(self.polygon, (float(self.coords[0]), float(self.coords[1])))


class _UnionFind:
    def __init__(self, items):
        self.parent = {x: x for x in items}

    def find(self, x):
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


class TranslationSurface:
    """Polygons plus a perfect matching of their edges.

    With ``isometric=True`` partner edges only need equal length; this keeps
    the combinatorial layer (Euler characteristic, genus, cone angles as
    floats) usable for non-translation gluings, but arc tracing is disabled.
    """

    def __init__(self, polygons: Sequence[PlanarPolygon], gluings: Dict, isometric: bool = False):
        self.polygons = tuple(polygons)
        self.gluings = dict(gluings)
        self.isometric = isometric
        self._classes = self._vertex_classes()
        self.vertex_class_of = {c: k for k, members in enumerate(self._classes) for c in members}
        self._angles = [self._class_angle(members) for members in self._classes]

    # combinatorics -------------------------------------------------------
    def _vertex_classes(self):
        corners = [(p, i) for p, poly in enumerate(self.polygons) for i in range(len(poly))]
        uf = _UnionFind(corners)
        for (p, i), (q, j) in self.gluings.items():
            np_, nq = len(self.polygons[p]), len(self.polygons[q])
            uf.union((p, i), (q, (j + 1) % nq))
            uf.union((p, (i + 1) % np_), (q, j))
        classes: Dict = {}
        for c in corners:
            classes.setdefault(uf.find(c), []).append(c)
        return [tuple(sorted(v)) for _, v in sorted(classes.items())]

    def _class_angle(self, members):
        if self.isometric:
            return sum(self.polygons[p].corner_angle(i) for p, i in members) / math.pi
        total = sum(self.polygons[p].corner_angle(i) for p, i in members)
        exact = all(_is_exact(*self.polygons[p].vertices[i]) for p, i in members)
        if exact:
            # count how often the swept direction passes angle zero
            turns = 0
            for p, i in members:
                out, back = self.polygons[p].corner_directions(i)
                if pseudo_angle(back) <= pseudo_angle(out):
                    turns += 1
        else:
            turns = round(total / (2 * math.pi))
        if abs(total - 2 * math.pi * turns) > 1e-9:
            raise ArithmeticError("cone angle bookkeeping mismatch")
        return 2 * turns

    @property
    def vertex_count(self) -> int:
        return len(self._classes)

    @property
    def edge_count(self) -> int:
        return len(self.gluings) // 2

    @property
    def face_count(self) -> int:
        return len(self.polygons)

    def euler_characteristic(self) -> int:
        return self.vertex_count - self.edge_count + self.face_count

    def area(self):
        return sum(p.signed_area() for p in self.polygons)

    def partner(self, p, i):
        return self.gluings[(p, i)]

    def cone_points(self) -> List[ConePoint]:
        out = []
        for members, ang in zip(self._classes, self._angles):
            if self.isometric:
                if abs(ang - 2) < 1e-9:
                    continue
            elif ang == 2:
                continue
            p, i = members[0]
            out.append(ConePoint(corners=members, angle_over_pi=ang,
                                 location=self.polygons[p].vertices[i]))
        return out

    def is_cone_corner(self, p, i) -> bool:
        ang = self._angles[self.vertex_class_of[(p, i)]]
        return abs(float(ang) - 2) > 1e-9

    # points --------------------------------------------------------------
    def normalize_point(self, polygon: int, coords, tol=None) -> SurfacePoint:
        poly = self.polygons[polygon]
        loc = poly.locate(coords, tol)
        if loc is None:
            raise OutsidePolygon(f"{coords} is outside polygon {polygon}")
        if loc[0] == "interior":
            return SurfacePoint(polygon, tuple(coords))
        if loc[0] == "edge":
            _, i, u = loc
            q, j = self.gluings[(polygon, i)]
            if (q, j) < (polygon, i):
                a, b = self.polygons[q].edge(j)
                return SurfacePoint(q, add(b, scale(u, sub(a, b))))
            a, b = poly.edge(i)
            return SurfacePoint(polygon, add(a, scale(u, sub(b, a))))
        _, i = loc
        # vertex: the lowest corner that starts an edge, i.e. lowest (polygon, vertex)
        q, j = self._classes[self.vertex_class_of[(polygon, i)]][0]
        return SurfacePoint(q, self.polygons[q].vertices[j])

    def cross_edge(self, p: int, i: int, point):
        """Image of ``point`` on edge (p, i) in the partner polygon."""
        q, j = self.gluings[(p, i)]
        a, b = self.polygons[p].edge(i)
        a2, b2 = self.polygons[q].edge(j)
        if self.isometric:
            u = dot(sub(point, a), sub(b, a)) / dot(sub(b, a), sub(b, a))
            return q, j, add(b2, scale(u, sub(a2, b2)))
        return q, j, add(point, sub(b2, a))


def build_surface(polygons, gluings, *, isometric: bool = False) -> TranslationSurface:
    """Validate polygons and gluings and return the surface.

    ``gluings`` is an iterable of ``(p, e, p2, e2)`` quadruples (or a dict
    mapping ``(p, e)`` to ``(p2, e2)``).
    """
    polys = [p if isinstance(p, PlanarPolygon) else PlanarPolygon(tuple(map(tuple, p))) for p in polygons]
    pairs = gluings.items() if isinstance(gluings, dict) else [((g[0], g[1]), (g[2], g[3])) for g in gluings]
    table: Dict = {}
    for a, b in pairs:
        a, b = tuple(a), tuple(b)
        for x in (a, b):
            if not (0 <= x[0] < len(polys) and 0 <= x[1] < len(polys[x[0]])):
                raise UnmatchedEdge(f"no such edge {x}")
        if a == b:
            raise UnmatchedEdge(f"edge {a} glued to itself")
        for x, y in ((a, b), (b, a)):
            if table.get(x, y) != y:
                raise UnmatchedEdge(f"edge {x} glued twice")
            table[x] = y
    for p, poly in enumerate(polys):
        for i in range(len(poly)):
            if (p, i) not in table:
                raise UnmatchedEdge(f"edge {(p, i)} has no partner")
    for (p, i), (q, j) in table.items():
        e1, e2 = polys[p].edge_vector(i), polys[q].edge_vector(j)
        if isometric:
            if abs(norm(e1) - norm(e2)) > 1e-12:
                raise NonTranslationGluing(f"edges {(p, i)} and {(q, j)} differ in length")
        elif add(e1, e2) != (0, 0):
            if not (_is_exact(*e1, *e2)) and norm(add(e1, e2)) < 1e-12:
                continue
            raise NonTranslationGluing(f"edges {(p, i)} and {(q, j)} are not equal and opposite")
    uf = _UnionFind(range(len(polys)))
    for (p, _), (q, _) in table.items():
        uf.union(p, q)
    if len({uf.find(p) for p in range(len(polys))}) != 1:
        raise Disconnected("surface is not connected")
    return TranslationSurface(polys, table, isometric=isometric)


def genus(s: TranslationSurface) -> int:
    chi = s.euler_characteristic()
    if chi % 2:
        raise ArithmeticError(f"odd Euler characteristic {chi}")
    return (2 - chi) // 2


def cone_points(s: TranslationSurface) -> List[ConePoint]:
    return s.cone_points()


def normalize_point(s: TranslationSurface, polygon: int, coords, tol=None) -> SurfacePoint:
    return s.normalize_point(polygon, coords, tol)


def gauss_bonnet_defect(s: TranslationSurface):
    """``sum(angle - 2 pi) + 2 pi chi`` in units of pi (zero when the identity holds)."""
    total = sum(c.angle_over_pi - 2 for c in s.cone_points())
    return total + 2 * s.euler_characteristic()


# arcs ------------------------------------------------------------------------

@dataclass(frozen=True)
class StraightArc:
    segments: Tuple[Tuple[int, Point, Point], ...]
    direction: Point  # unit vector, shared by every segment
    length: float

    @property
    def start(self) -> SurfacePoint:
        p, a, _ = self.segments[0]
        return SurfacePoint(p, a)

    @property
    def end(self) -> SurfacePoint:
        p, _, b = self.segments[-1]
        return SurfacePoint(p, b)

    def crossings(self) -> int:
        return len(self.segments) - 1


def _corner_contains(poly: PlanarPolygon, i: int, d) -> bool:
    out, back = poly.corner_directions(i)
    a, b, x = pseudo_angle(out), pseudo_angle(back), pseudo_angle(d)
    if a < b:
        return a <= x < b
    return x >= a or x < b


def trace_arc(s: TranslationSurface, start: SurfacePoint, direction, length) -> StraightArc:
    """Follow the straight line from ``start`` for the given flat length."""
    if s.isometric:
        raise ValueError("arc tracing needs translation gluings")
    if direction[0] == 0 and direction[1] == 0:
        raise ValueError("direction must be nonzero")
    exact = _is_exact(*start.coords, *direction, length)
    if exact:
        # exact tracing only when the direction has rational length
        dl = norm(direction)
        frac_len = Fraction(dl).limit_denominator(10**9)
        if frac_len * frac_len != dot(direction, direction):
            exact = False
    if exact:
        unit = (Fraction(direction[0]) / frac_len, Fraction(direction[1]) / frac_len)
        eps = 0
    else:
        dl = norm(direction)
        unit = (float(direction[0]) / dl, float(direction[1]) / dl)
        start = start.as_float()
        length = float(length)
        eps = FLOAT_TOL
    p = start.polygon
    x = start.coords
    remaining = length
    travelled = 0
    segments = []
    skip_edges = set()
    loc = s.polygons[p].locate(x, None if exact else FLOAT_TOL)
    if loc is None:
        raise OutsidePolygon(f"{x} is outside polygon {p}")
    if loc[0] == "vertex":
        if s.is_cone_corner(p, loc[1]):
            raise HitConePoint(0, start)
        p, x, skip_edges = _leave_vertex(s, p, loc[1], unit)
    elif loc[0] == "edge":
        i = loc[1]
        if cross(s.polygons[p].edge_vector(i), unit) <= 0:
            # moving out through this edge: hop to the partner side
            q, j, x = s.cross_edge(p, i, x)
            p = q
            skip_edges = {j}
        else:
            skip_edges = {i}
    for _ in range(1_000_000):
        poly = s.polygons[p]
        best = None
        for i in range(len(poly)):
            if i in skip_edges:
                continue
            a, b = poly.edge(i)
            e = sub(b, a)
            den = cross(unit, e)
            if den == 0:
                continue
            t = cross(sub(a, x), e) / den
            u = cross(sub(a, x), unit) / den
            if t <= eps:
                continue
            el = norm(e)
            if u * el < -eps or (u - 1) * el > eps:
                continue
            if best is None or t < best[0]:
                best = (t, i, u)
        if best is None:
            raise ArithmeticError("ray failed to leave the polygon")
        t, i, u = best
        if t >= remaining:
            end = add(x, scale(remaining, unit))
            segments.append((p, x, end))
            break
        hit = add(x, scale(t, unit))
        segments.append((p, x, hit))
        remaining -= t
        travelled += t
        a, b = poly.edge(i)
        el = norm(sub(b, a))
        vi = None
        if abs(float(u) * el) <= max(eps, CONE_TOL):
            vi = i
        elif abs(float(u - 1) * el) <= max(eps, CONE_TOL):
            vi = (i + 1) % len(poly)
        if vi is not None:
            if s.is_cone_corner(p, vi):
                raise HitConePoint(travelled, SurfacePoint(p, poly.vertices[vi]))
            if abs(float(u) * el) > eps and abs(float(u - 1) * el) > eps:
                # within the cone tolerance of a regular vertex: treat as an edge crossing
                vi = None
        if vi is not None:
            p, x, skip_edges = _leave_vertex(s, p, vi, unit)
        else:
            q, j, x = s.cross_edge(p, i, hit)
            p = q
            skip_edges = {j}
    else:
        raise ArithmeticError("too many edge crossings")
    return StraightArc(tuple(segments), unit, length)


def _leave_vertex(s, p, vi, unit):
    for q, j in s._classes[s.vertex_class_of[(p, vi)]]:
        poly = s.polygons[q]
        if _corner_contains(poly, j, unit):
            n = len(poly)
            return q, poly.vertices[j], {j, (j - 1) % n}
    raise ArithmeticError("no corner contains the outgoing direction")


# foliations and measures -------------------------------------------------------

@dataclass(frozen=True)
class DirectionalFoliation:
    """Leaves ``eta . x = const`` in every chart; well defined under translations."""

    covector: Point

    def __post_init__(self):
        if self.covector[0] == 0 and self.covector[1] == 0:
            raise ValueError("covector must be nonzero")

    @property
    def leaf_direction(self):
        return (-self.covector[1], self.covector[0])


def transversal_measure(s: TranslationSurface, f: DirectionalFoliation, a: StraightArc,
                        tol: float = 1e-14) -> float:
    """Sum over segments of ``|eta . (end - start)|``."""
    eta = f.covector
    if abs(float(dot(eta, a.direction))) <= tol * norm(eta) and a.length > 0:
        raise ArcTangentToLeaves("arc runs along the leaves")
    return float(sum(abs(dot(eta, sub(end, st))) for _, st, end in a.segments))


def separatrix_rays(s: TranslationSurface, f: DirectionalFoliation, cone: ConePoint):
    """Leaf rays leaving a cone point, one per (corner, direction) sector hit."""
    rays = []
    d = f.leaf_direction
    for q, j in cone.corners:
        poly = s.polygons[q]
        for sign in (1, -1):
            dd = (sign * d[0], sign * d[1])
            if _corner_contains(poly, j, dd):
                rays.append((q, j, dd))
    return rays


def _layout_offsets(s: TranslationSurface, gap: float = 0.3):
    offsets, x = [], 0.0
    for poly in s.polygons:
        xs = [float(v[0]) for v in poly.vertices]
        offsets.append(x - min(xs))
        x += max(xs) - min(xs) + gap
    return offsets


def render_foliation(s: TranslationSurface, f: DirectionalFoliation, density: float,
                     highlight_cones: bool = True) -> str:
    """SVG drawing of the leaves in each polygon, separatrices in red."""
    if density <= 0:
        raise ValueError("density must be positive")
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    from shapely.geometry import LineString, Polygon as ShapelyPolygon

    matplotlib.rcParams["svg.hashsalt"] = "pa-attractors"
    eta = (float(f.covector[0]), float(f.covector[1]))
    en = math.hypot(*eta)
    eta = (eta[0] / en, eta[1] / en)
    leaf = (-eta[1], eta[0])
    fig, ax = plt.subplots(figsize=(3 * len(s.polygons) + 1, 3.5))
    offsets = _layout_offsets(s)
    for k, poly in enumerate(s.polygons):
        verts = [(float(x) + offsets[k], float(y)) for x, y in poly.vertices]
        shp = ShapelyPolygon(verts)
        ax.fill(*zip(*verts), facecolor="#f4f4f4", edgecolor="black", linewidth=0.8)
        vals = [eta[0] * x + eta[1] * y for x, y in verts]
        lo, hi = min(vals), max(vals)
        count = max(1, int(math.ceil((hi - lo) * density * 10)))
        reach = 10.0
        for c in np.linspace(lo, hi, count + 2)[1:-1]:
            base = (eta[0] * c, eta[1] * c)
            line = LineString([(base[0] - reach * leaf[0], base[1] - reach * leaf[1]),
                               (base[0] + reach * leaf[0], base[1] + reach * leaf[1])])
            piece = line.intersection(shp)
            for g in getattr(piece, "geoms", [piece]):
                if g.is_empty or g.geom_type != "LineString":
                    continue
                ax.plot(*g.xy, color="#3060a0", linewidth=0.5)
        ax.text(float(np.mean([v[0] for v in verts])), float(np.mean([v[1] for v in verts])),
                str(k), fontsize=9, color="gray")
    if highlight_cones:
        for cone in s.cone_points():
            for q, j, dd in separatrix_rays(s, f, cone):
                v = s.polygons[q].vertices[j]
                x0, y0 = float(v[0]) + offsets[q], float(v[1])
                dn = math.hypot(float(dd[0]), float(dd[1]))
                (ray,) = ax.plot([x0, x0 + 0.25 * float(dd[0]) / dn], [y0, y0 + 0.25 * float(dd[1]) / dn],
                                 color="crimson", linewidth=1.6)
                ray.set_gid(f"separatrix-{len(ax.lines)}")
                ax.plot([x0], [y0], "o", color="crimson", markersize=4)
    ax.set_aspect("equal")
    ax.axis("off")
    buf = io.StringIO()
    fig.savefig(buf, format="svg", metadata={"Date": None})
    plt.close(fig)
    return buf.getvalue()


# serialization -----------------------------------------------------------------

def parse_number(value):
    """Accept ints, floats and "a/b" strings; rationals stay exact."""
    if isinstance(value, bool):
        raise ValueError("booleans are not numbers")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(value) if value.is_integer() else value
    if isinstance(value, str):
        return Fraction(value.strip())
    if isinstance(value, Fraction):
        return value
    raise ValueError(f"not a number: {value!r}")


def format_number(value) -> object:
    if isinstance(value, Fraction):
        return str(value.numerator) if value.denominator == 1 else f"{value.numerator}/{value.denominator}"
    if isinstance(value, int):
        return str(value)
    return float(value)


def surface_from_dict(doc: dict, isometric: bool = False) -> TranslationSurface:
    polygons = [[(parse_number(x), parse_number(y)) for x, y in poly] for poly in doc["polygons"]]
    gluings = [tuple(int(v) for v in g) for g in doc["gluings"]]
    return build_surface(polygons, gluings, isometric=isometric)


def surface_to_dict(s: TranslationSurface) -> dict:
    glu = sorted((p, i, q, j) for (p, i), (q, j) in s.gluings.items() if (p, i) < (q, j))
    return {"polygons": [[[format_number(x), format_number(y)] for x, y in poly.vertices]
                         for poly in s.polygons],
            "gluings": [list(g) for g in glu]}


def unit_square_torus() -> TranslationSurface:
    sq = [(Fraction(0), Fraction(0)), (Fraction(1), Fraction(0)), (Fraction(1), Fraction(1)), (Fraction(0), Fraction(1))]
    return build_surface([sq], [(0, 0, 0, 2), (0, 1, 0, 3)])

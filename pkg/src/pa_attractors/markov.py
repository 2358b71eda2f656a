"""Markov partitions by eigen-rectangles, on the torus and on the slit cover."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from itertools import product
from typing import List, Optional, Sequence, Tuple

import numpy as np
from shapely.geometry import Point as ShapelyPoint, Polygon as ShapelyPolygon

from .cover import SlitCover, mod1
from .errors import BranchInteriorToRectangle, DegeneratePath, NotHyperbolic
from .flat import SurfacePoint
from .pseudo_anosov import CoverMap, LinearTorusMap, mat_det, mat_inv, mat_vec

SHIFTS = [np.array(n, dtype=float) for n in product(range(-3, 4), repeat=2)]


@dataclass(frozen=True)
class Rectangle:
    """Quadrilateral ``p0 p1 p2 p3`` with unstable sides ``p0p1, p3p2`` and stable sides ``p0p3, p1p2``.

    ``sheet`` is the cover label at the centre, or ``None`` on the torus.
    """

    corners: Tuple[Tuple[float, float], ...]
    sheet: Optional[int] = None

    @classmethod
    def from_sides(cls, corner, u_side, s_side, sheet=None):
        c, u, s = (np.asarray(x, dtype=float) for x in (corner, u_side, s_side))
        pts = (c, c + u, c + u + s, c + s)
        return cls(tuple((float(p[0]), float(p[1])) for p in pts), sheet)

    @property
    def array(self) -> np.ndarray:
        return np.array(self.corners, dtype=float)

    @property
    def center(self) -> np.ndarray:
        return self.array.mean(axis=0)

    @property
    def area(self) -> float:
        return abs(self._signed_area())

    def _signed_area(self) -> float:
        p = self.array
        x, y = p[:, 0], p[:, 1]
        return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))

    def stable_sides(self):
        p = self.array
        return [(p[0], p[3]), (p[1], p[2])]

    def unstable_sides(self):
        p = self.array
        return [(p[0], p[1]), (p[3], p[2])]

    def polygon(self, shift=(0.0, 0.0)) -> ShapelyPolygon:
        return ShapelyPolygon(self.array + np.asarray(shift, dtype=float))

    def interior_mask(self, pts: np.ndarray, tol: float = 1e-12) -> np.ndarray:
        """Vectorized strict-interior test for an ``(N, 2)`` array."""
        p = self.array
        sign = 1.0 if self._signed_area() > 0 else -1.0
        ok = np.ones(len(pts), dtype=bool)
        for i in range(4):
            a, b = p[i], p[(i + 1) % 4]
            e = b - a
            cr = sign * (e[0] * (pts[:, 1] - a[1]) - e[1] * (pts[:, 0] - a[0]))
            ok &= cr > tol * np.hypot(*e)
        return ok


@dataclass(frozen=True)
class MarkovPartition:
    rectangles: Tuple[Rectangle, ...]
    matrix: Tuple[Tuple[int, int], Tuple[int, int]]
    cover: Optional[SlitCover] = field(default=None, repr=False, compare=False)

    @property
    def on_cover(self) -> bool:
        return self.cover is not None

    @property
    def total_area(self) -> float:
        return sum(r.area for r in self.rectangles)


def eigenframe(matrix):
    """Unit right eigenvectors ``(e_u, e_s)`` for the expanding and contracting eigenvalues."""
    a = np.array(matrix, dtype=float)
    vals, vecs = np.linalg.eig(a)
    if np.iscomplexobj(vals) and np.any(np.abs(vals.imag) > 0) or np.isclose(abs(vals[0]), abs(vals[1])):
        raise NotHyperbolic("matrix is not hyperbolic")
    vals = vals.real
    order = np.argsort(-np.abs(vals))
    eu = vecs[:, order[0]].real
    es = vecs[:, order[1]].real
    eu /= np.linalg.norm(eu)
    es /= np.linalg.norm(es)
    # orient so that e_u has positive first coordinate and (e_u, e_s) is positively oriented
    if eu[0] < 0 or (eu[0] == 0 and eu[1] < 0):
        eu = -eu
    if eu[0] * es[1] - eu[1] * es[0] < 0:
        es = -es
    return eu, es


def markov_adler_weiss(m: LinearTorusMap) -> MarkovPartition:
    """Two eigen-parallelograms tiling the torus.

    In eigen-coordinates ``x = u e_u + s e_s`` pick a lattice basis
    ``g1 = (a, -b)``, ``g2 = (c, d)`` with ``a, b, c, d > 0``; then
    ``[0, a] x [0, d]`` and ``[a, a + c] x [d - b, d]`` tile the plane
    under the lattice, areas summing to ``ad + bc = 1``.
    """
    if not m.is_hyperbolic():
        raise NotHyperbolic(f"trace {m.trace} is not hyperbolic")
    eu, es = eigenframe(m.matrix)
    to_eig = np.linalg.inv(np.column_stack([eu, es]))
    best = None
    rng = range(-4, 5)
    for g1 in product(rng, repeat=2):
        u1, s1 = to_eig @ np.array(g1, dtype=float)
        if not (u1 > 0 and s1 < 0):
            continue
        for g2 in product(rng, repeat=2):
            if abs(g1[0] * g2[1] - g1[1] * g2[0]) != 1:
                continue
            u2, s2 = to_eig @ np.array(g2, dtype=float)
            if not (u2 > 0 and s2 > 0):
                continue
            key = (u1 + u2) ** 2 + (s1 - s2) ** 2
            if best is None or key < best[0]:
                best = (key, (u1, -s1, u2, s2))
    if best is None:
        raise ArithmeticError("no admissible lattice basis in the search box")
    a, b, c, d = best[1]
    r1 = Rectangle.from_sides((0.0, 0.0), a * eu, d * es)
    r2 = Rectangle.from_sides(a * eu + (d - b) * es, c * eu, b * es)
    return MarkovPartition((r1, r2), m.matrix)


def _locate_planar(part: MarkovPartition, x: np.ndarray, tol: float = 1e-12):
    """(rectangle index, lattice shift) pairs whose rectangle has ``x`` in its interior."""
    hits = []
    for i, r in enumerate(part.rectangles):
        pts = np.array([x + n for n in SHIFTS])
        mask = r.interior_mask(pts, tol)
        for j in np.flatnonzero(mask):
            hits.append((i, SHIFTS[j]))
    return hits


def refine_at_points(part: MarkovPartition, points: Sequence, tol: float = 1e-12) -> MarkovPartition:
    """Cut rectangles along the stable segment through each point in their interior."""
    rects = list(part.rectangles)
    for pt in points:
        x = np.array([float(pt[0]), float(pt[1])])
        for i, n in _locate_planar(MarkovPartition(tuple(rects), part.matrix), x, tol):
            r = rects[i]
            p = r.array
            u = p[1] - p[0]
            s = p[3] - p[0]
            coef = np.linalg.solve(np.column_stack([u, s]), x + n - p[0])
            alpha = coef[0]
            first = Rectangle.from_sides(p[0], alpha * u, s, r.sheet)
            second = Rectangle.from_sides(p[0] + alpha * u, (1 - alpha) * u, s, r.sheet)
            rects[i:i + 1] = [first, second]
            break
    return replace(part, rectangles=tuple(rects))


def refine_at_branch_points(part: MarkovPartition, cover: SlitCover) -> MarkovPartition:
    return refine_at_points(part, cover.branch_points)


def lift_partition(part: MarkovPartition, cover: SlitCover, refine: bool = False) -> MarkovPartition:
    """Preimage of a torus partition on the cover: two labelled copies per rectangle."""
    if refine:
        part = refine_at_branch_points(part, cover)
    for bp in cover.branch_points:
        x = np.array([float(bp[0]), float(bp[1])])
        hits = _locate_planar(part, x)
        if hits:
            raise BranchInteriorToRectangle(hits[0][0], bp)
    rects = []
    for r in part.rectangles:
        for sheet in (0, 1):
            rects.append(Rectangle(r.corners, sheet))
    return MarkovPartition(tuple(rects), part.matrix, cover)


def _cover_label(cover: SlitCover, r: Rectangle, z: np.ndarray) -> int:
    return (r.sheet + cover.crossings(tuple(r.center), (float(z[0]), float(z[1])))) & 1


def _members(part: MarkovPartition, y, label: Optional[int], tol: float = 1e-12):
    x = np.array([float(y[0]), float(y[1])])
    out = []
    for i, n in _locate_planar(part, x, tol):
        if part.on_cover:
            try:
                if _cover_label(part.cover, part.rectangles[i], x + n) != label:
                    continue
            except DegeneratePath:
                continue
        out.append((i, n))
    return out


def _torus_map(part: MarkovPartition):
    return LinearTorusMap(part.matrix)


def _sample_point(part: MarkovPartition, rng):
    if part.on_cover:
        return part.cover.random_points(rng, 1)[0]
    x = rng.uniform(0.0, 1.0, 2)
    return SurfacePoint(0, (float(x[0]), float(x[1])))


def _seg_distance(p: np.ndarray, a: np.ndarray, b: np.ndarray) -> float:
    e = b - a
    t = np.clip(np.dot(p - a, e) / np.dot(e, e), 0.0, 1.0)
    return float(np.linalg.norm(p - (a + t * e)))


def _on_sides(part: MarkovPartition, y, label, which: str, tol: float) -> bool:
    x = np.array([float(y[0]), float(y[1])])
    for r in part.rectangles:
        sides = r.stable_sides() if which == "s" else r.unstable_sides()
        for n in SHIFTS:
            z = x + n
            for a, b in sides:
                if _seg_distance(z, a, b) <= tol:
                    if part.on_cover:
                        try:
                            if _cover_label(part.cover, r, r.center + 0.999999 * (z - r.center)) != label:
                                continue
                        except DegeneratePath:
                            continue
                    return True
    return False


@dataclass
class ValidationReport:
    cover: bool
    disjoint: bool
    stable_boundary: bool
    unstable_boundary: bool
    area: float
    details: dict = field(default_factory=dict)

    @property
    def boundary(self) -> bool:
        return self.stable_boundary and self.unstable_boundary

    @property
    def passed(self) -> bool:
        return self.cover and self.disjoint and self.boundary

    def as_dict(self) -> dict:
        return {"cover": self.cover, "disjoint": self.disjoint, "stable_boundary": self.stable_boundary,
                "unstable_boundary": self.unstable_boundary, "area": self.area, **self.details}


def markov_validate(part: MarkovPartition, f=None, samples: int = 2000, seed: int = 0,
                    tol: float = 1e-9, side_samples: int = 12) -> ValidationReport:
    """Sampled check of covering, disjointness and the two boundary inclusions.

    ``f`` is the map (a :class:`CoverMap` on the cover, a torus map otherwise).
    Side points are tested under ``f`` for stable sides and ``f^-1`` for
    unstable sides.
    """
    if f is None:
        f = _torus_map(part)
    finv = f.inverse()
    rng = np.random.default_rng(seed)
    expected_area = 2.0 if part.on_cover else 1.0
    area = part.total_area
    uncovered = overlapped = 0
    for _ in range(samples):
        p = _sample_point(part, rng)
        k = len(_members(part, p.coords, p.polygon if part.on_cover else None))
        uncovered += k == 0
        overlapped += k > 1
    overlap_area = 0.0
    base = part.rectangles if not part.on_cover else part.rectangles[::2]
    for i, r in enumerate(base):
        for j, r2 in enumerate(base):
            if j < i:
                continue
            for n in SHIFTS:
                if i == j and not n.any():
                    continue
                overlap_area += r.polygon().intersection(r2.polygon(n)).area
    # boundary inclusions
    bad_s = bad_u = 0
    ts = (np.arange(side_samples) + 0.5) / side_samples
    for r in part.rectangles:
        for which, g in (("s", f), ("u", finv)):
            sides = r.stable_sides() if which == "s" else r.unstable_sides()
            for a, b in sides:
                for t in ts:
                    z = a + t * (b - a)
                    zin = r.center + 0.999999 * (z - r.center)
                    if part.on_cover:
                        try:
                            lab = _cover_label(part.cover, r, zin)
                            src = part.cover.point((float(z[0]), float(z[1])), lab)
                        except DegeneratePath:
                            continue
                    else:
                        src = SurfacePoint(0, (float(z[0]), float(z[1])))
                    img = g(src) if part.on_cover else SurfacePoint(0, g(src.coords))
                    if not _on_sides(part, img.coords, img.polygon if part.on_cover else None, which, tol):
                        if which == "s":
                            bad_s += 1
                        else:
                            bad_u += 1
    details = {"uncovered_samples": uncovered, "overlapping_samples": overlapped,
               "overlap_area": overlap_area, "stable_side_failures": bad_s,
               "unstable_side_failures": bad_u}
    return ValidationReport(
        cover=uncovered == 0 and abs(area - expected_area) <= tol,
        disjoint=overlapped == 0 and overlap_area <= tol,
        stable_boundary=bad_s == 0, unstable_boundary=bad_u == 0, area=area, details=details)


def _generic_interior_point(g, cover: SlitCover, tol: float = 1e-9) -> np.ndarray:
    """Interior point of ``g`` off every slit line, where the sheet label is unambiguous."""
    cands = [g.representative_point(), g.centroid]
    x0, y0, x1, y1 = g.bounds
    rng = np.random.default_rng(0)
    cands += [ShapelyPoint(x0 + u * (x1 - x0), y0 + v * (y1 - y0)) for u, v in rng.uniform(0, 1, (200, 2))]
    for c in cands:
        if not g.contains(c):
            continue
        b = cover.ab((c.x, c.y))[1]
        if abs(b - round(b)) > tol:
            return np.array([c.x, c.y])
    raise DegeneratePath("no interior point off the slit lines")


def transition_matrix(part: MarkovPartition, f=None, tol: float = 1e-12) -> np.ndarray:
    """``A[i, j]`` = number of positive-area pieces of ``f(R_i)`` inside ``R_j`` (with labels on the cover)."""
    mtx = part.matrix
    if isinstance(f, CoverMap):
        mtx = f.matrix
    shift = np.array([float(s) for s in f.shift], dtype=float) if f is not None else np.zeros(2)
    M = np.array(mtx, dtype=float)
    k = len(part.rectangles)
    A = np.zeros((k, k), dtype=int)
    big = [np.array(n, dtype=float) for n in product(range(-5, 6), repeat=2)]
    for i, r in enumerate(part.rectangles):
        img = ShapelyPolygon(r.array @ M.T + shift)
        for j, r2 in enumerate(part.rectangles):
            for n in big:
                piece = img.intersection(r2.polygon(n))
                if piece.area <= tol:
                    continue
                for g in getattr(piece, "geoms", [piece]):
                    if g.area <= tol:
                        continue
                    if part.on_cover:
                        z = _generic_interior_point(g, part.cover)
                        x = np.linalg.solve(M, z - shift)
                        src = part.cover.point(tuple(x), _cover_label(part.cover, r, x))
                        img_pt = f(src)
                        if _cover_label(part.cover, r2, z - n) != img_pt.polygon:
                            continue
                    A[i, j] += 1
    return A


def perron_root(A: np.ndarray) -> float:
    return float(max(abs(np.linalg.eigvals(A.astype(float)))))


def perturb_rectangle(part: MarkovPartition, index: int = 0, amount: float = 0.01) -> MarkovPartition:
    """Negative control: tilt one stable side by moving a corner along the unstable side."""
    rects = list(part.rectangles)
    r = rects[index]
    p = r.array.copy()
    u = p[1] - p[0]
    p[2] = p[2] + amount * u / np.linalg.norm(u)
    rects[index] = Rectangle(tuple((float(x), float(y)) for x, y in p), r.sheet)
    if part.on_cover:
        # keep the twin copy consistent so the defect is purely geometric
        twin = index ^ 1
        rects[twin] = Rectangle(rects[index].corners, rects[twin].sheet)
    return replace(part, rectangles=tuple(rects))

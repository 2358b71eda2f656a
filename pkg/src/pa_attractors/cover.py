"""Double covers of the flat torus branched at two points.

The cover is cut along a straight slit joining the two branch points.  A
fundamental parallelogram ``D`` of the lattice is chosen with the slit lying
on its bottom side; two copies of ``D`` (sheets 0 and 1) glued crosswise
along the slit give a genus-2 translation surface.

Working in lattice coordinates ``(a, b)`` with ``x = c0 + a v + b w``, the
lattice translates of the slit are the segments ``{b in Z, frac(a) in [alpha, beta]}``.
The sheet of the endpoint of a planar path changes once per slit crossing.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import BranchSetNotInvariant, DegeneratePath
from .flat import (SurfacePoint, TranslationSurface, add, build_surface, cross, format_number,
                   norm, parse_number, scale, sub)


def _frac(x):
    return x - math.floor(x)


def _ext_gcd(a: int, b: int):
    if b == 0:
        return (a, 1, 0) if a >= 0 else (-a, -1, 0)
    g, x, y = _ext_gcd(b, a % b)
    return g, y, x - (a // b) * y


def mod1(x):
    return (x[0] - math.floor(x[0]), x[1] - math.floor(x[1]))


class SlitCover:
    """Branched double cover of ``R^2 / Z^2`` with a straight slit.

    ``start`` is a branch point and ``vector`` the slit displacement; the
    other branch point is ``start + vector`` reduced mod 1.  Rational input
    keeps everything exact.
    """

    def __init__(self, start, vector):
        start = tuple(Fraction(c) if not isinstance(c, float) else Fraction(c).limit_denominator(10**12)
                      for c in start)
        vector = tuple(Fraction(c) if not isinstance(c, float) else Fraction(c).limit_denominator(10**12)
                       for c in vector)
        if vector == (0, 0):
            raise ValueError("slit vector must be nonzero")
        # vector = q * v with v primitive integral
        den = math.lcm(vector[0].denominator, vector[1].denominator)
        iv = (int(vector[0] * den), int(vector[1] * den))
        g = math.gcd(*iv)
        v = (iv[0] // g, iv[1] // g)
        q = Fraction(g, den)
        if not 0 < q < 1:
            raise ValueError("slit must be shorter than the primitive lattice vector along it")
        g2, x, y = _ext_gcd(v[0], v[1])
        assert g2 == 1
        # det(v, w) = v0 w1 - v1 w0 = 1 with w = (-y, x)
        w = (-y, x)
        assert v[0] * w[1] - v[1] * w[0] == 1
        self.start = start
        self.vector = vector
        self.v, self.w, self.q = v, w, q
        self.alpha = (1 - q) / 2
        self.beta = (1 + q) / 2
        self.c0 = sub(start, scale(self.alpha, v))
        self.center = add(self.c0, scale(Fraction(1, 2), add(v, w)))
        self.branch_points = (mod1(start), mod1(add(start, vector)))
        self.surface = self._build()

    # geometry ------------------------------------------------------------
    def _build(self) -> TranslationSurface:
        c0, v, w, al, be = self.c0, self.v, self.w, self.alpha, self.beta
        poly = [c0, add(c0, scale(al, v)), add(c0, scale(be, v)), add(c0, v), add(add(c0, v), w),
                add(add(c0, scale(be, v)), w), add(add(c0, scale(al, v)), w), add(c0, w)]
        gluings = []
        for k in (0, 1):
            gluings += [(k, 0, k, 6), (k, 2, k, 4), (k, 3, k, 7)]
        gluings.append((0, 1, 1, 5))
        gluings.append((1, 1, 0, 5))
        return build_surface([poly, list(poly)], gluings)

    @property
    def branch_surface_points(self) -> Tuple[SurfacePoint, SurfacePoint]:
        poly = self.surface.polygons[0]
        return (self.surface.normalize_point(0, poly.vertices[1]),
                self.surface.normalize_point(0, poly.vertices[2]))

    def ab(self, x):
        """Lattice coordinates of a planar point relative to ``c0``."""
        d = sub(x, self.c0)
        v, w = self.v, self.w
        # inverse of [[v0, w0], [v1, w1]] with determinant 1
        return (w[1] * d[0] - w[0] * d[1], -v[1] * d[0] + v[0] * d[1])

    def from_ab(self, a, b):
        return add(self.c0, add(scale(a, self.v), scale(b, self.w)))

    def _on_slit_a(self, a) -> bool:
        f = a - math.floor(a)
        return self.alpha <= f <= self.beta

    def crossings(self, p, q, start_in_domain: bool = False) -> int:
        """Number of slit translates crossed by the segment ``p -> q``.

        Crossings at the endpoint are not counted.  A crossing at the start
        counts only when ``start_in_domain`` is set and ``p`` sits on the
        bottom or top side of ``D`` while the path leaves ``D``.
        """
        a0, b0 = self.ab(p)
        a1, b1 = self.ab(q)
        if b0 == b1:
            if float(b0).is_integer() and a0 != a1:
                lo, hi = min(a0, a1), max(a0, a1)
                if math.floor(lo) != math.floor(hi) or self._on_slit_a(lo) or self._on_slit_a(hi):
                    if self._overlaps_slit(lo, hi):
                        raise DegeneratePath("path runs along a slit")
            return 0
        count = 0
        lo, hi = (b0, b1) if b0 < b1 else (b1, b0)
        for n in range(math.ceil(lo), math.floor(hi) + 1):
            t = (n - b0) / (b1 - b0)
            a = a0 + t * (a1 - a0)
            if t == 1:
                continue
            f = a - math.floor(a)
            if f == self.alpha or f == self.beta:
                raise DegeneratePath("path passes through a branch point")
            inside = self.alpha < f < self.beta
            if t == 0:
                if not inside:
                    continue
                if start_in_domain and ((b0 == 0 and b1 < b0) or (b0 == 1 and b1 > b0)):
                    count += 1
                elif not start_in_domain:
                    raise DegeneratePath("path starts on a slit")
                continue
            if inside:
                count += 1
        return count

    def _overlaps_slit(self, lo, hi) -> bool:
        for m in range(math.floor(lo), math.floor(hi) + 1):
            if max(lo, m + self.alpha) < min(hi, m + self.beta):
                return True
        return False

    def point(self, y, label: int, approach=None) -> SurfacePoint:
        """Cover point over planar ``y`` with the given sheet label.

        ``approach`` is the sign of ``db`` of the path arriving at ``y``; it
        decides the representative when ``y`` lies on a slit translate.
        """
        a, b = self.ab(y)
        fa = a - math.floor(a)
        fb = b - math.floor(b)
        if fb == 0 and approach is not None and approach > 0:
            fb = fb + 1
        coords = self.from_ab(fa, fb)
        tol = None if isinstance(fa, Fraction) and isinstance(fb, Fraction) else 1e-12
        return self.surface.normalize_point(int(label) & 1, coords, tol)

    def reduce(self, y):
        a, b = self.ab(y)
        return self.from_ab(a - math.floor(a), b - math.floor(b))

    def base(self, p: SurfacePoint):
        """Projection to the torus ``[0, 1)^2``."""
        return mod1(p.coords)

    def lift(self, x, sheet: int) -> SurfacePoint:
        return self.point(x, sheet)

    def deck(self, p: SurfacePoint) -> SurfacePoint:
        """Sheet swap.  Points on slit edges move to the partner edge."""
        return self.surface.normalize_point(1 - p.polygon, p.coords, self._tol(p))

    @staticmethod
    def _tol(p):
        return None if all(isinstance(c, Fraction) for c in p.coords) else 1e-12

    def equal(self, p: SurfacePoint, q: SurfacePoint) -> bool:
        a = self.surface.normalize_point(p.polygon, p.coords, self._tol(p))
        b = self.surface.normalize_point(q.polygon, q.coords, self._tol(q))
        return a == b

    def label_at(self, anchor, anchor_label: int, y) -> int:
        return (anchor_label + self.crossings(anchor, y)) & 1

    def branch_translates(self, near, radius: int = 1):
        out = []
        for b in self.branch_points:
            base = (b[0] + math.floor(near[0]), b[1] + math.floor(near[1]))
            for i, j in product(range(-radius, radius + 2), repeat=2):
                out.append((base[0] + i, base[1] + j))
        return out

    def distance(self, p: SurfacePoint, q: SurfacePoint) -> float:
        """Flat distance, exact for nearby points and an upper bound otherwise.

        Straight segments to nearby lattice translates of ``q`` are used when
        they end on the right sheet; otherwise the shortest route through a
        branch point.
        """
        P = tuple(float(c) for c in p.coords)
        Q = tuple(float(c) for c in q.coords)
        d = sub(Q, P)
        base_n = (-round(d[0]), -round(d[1]))
        best = math.inf
        for i, j in product((-1, 0, 1), repeat=2):
            Qn = (Q[0] + base_n[0] + i, Q[1] + base_n[1] + j)
            dist = norm(sub(Qn, P))
            if dist >= best:
                continue
            try:
                lab = (p.polygon + self.crossings(P, Qn, start_in_domain=True)) & 1
            except DegeneratePath:
                lab = None
            if lab == q.polygon:
                best = dist
        # route through a branch point (they are fixed by every covering identification)
        for bpt in self.branch_translates(P):
            d1 = norm(sub(bpt, P))
            if d1 >= best:
                continue
            for i, j in product((-1, 0, 1), repeat=2):
                Qn = (Q[0] + math.floor(bpt[0]) - math.floor(Q[0]) + i,
                      Q[1] + math.floor(bpt[1]) - math.floor(Q[1]) + j)
                best = min(best, d1 + norm(sub(Qn, bpt)))
        return best

    def random_points(self, rng: np.random.Generator, n: int, exclude_radius: float = 1e-6) -> List[SurfacePoint]:
        """Uniform points of the cover away from the branch points."""
        out = []
        bps = [tuple(float(c) for c in b) for b in self.branch_points]
        while len(out) < n:
            a, b = rng.uniform(0.0, 1.0, 2)
            y = tuple(float(c) for c in self.from_ab(a, b))
            ty = mod1(y)
            if any(min(abs(ty[0] - bp[0]) % 1, 1 - abs(ty[0] - bp[0]) % 1) ** 2
                   + min(abs(ty[1] - bp[1]) % 1, 1 - abs(ty[1] - bp[1]) % 1) ** 2 < exclude_radius ** 2
                   for bp in bps):
                continue
            out.append(SurfacePoint(int(rng.integers(0, 2)), y))
        return out

    def to_dict(self) -> dict:
        return {"slit_start": [format_number(c) for c in self.start],
                "slit_vector": [format_number(c) for c in self.vector]}


def slit_double_cover(start, vector) -> SlitCover:
    return SlitCover(start, vector)


def cover_from_dict(doc: dict) -> SlitCover:
    return SlitCover([parse_number(c) for c in doc["slit_start"]],
                     [parse_number(c) for c in doc["slit_vector"]])


def _apply_affine(matrix, shift, x):
    return (matrix[0][0] * x[0] + matrix[0][1] * x[1] + shift[0],
            matrix[1][0] * x[0] + matrix[1][1] * x[1] + shift[1])


def slit_class_consistent(cover: SlitCover, matrix, shift=(0, 0)) -> bool:
    """Whether the affine map preserves the mod-2 slit-crossing class.

    Compares crossing parities of the two generator loops at a generic
    basepoint with those of their images.
    """
    for base in _generic_points(cover):
        try:
            ok = True
            for e in ((1, 0), (0, 1)):
                end = add(base, e)
                c1 = cover.crossings(base, end)
                c2 = cover.crossings(_apply_affine(matrix, shift, base), _apply_affine(matrix, shift, end))
                if (c1 - c2) % 2:
                    ok = False
            return ok
        except DegeneratePath:
            continue
    raise DegeneratePath("no generic basepoint found")


def _generic_points(cover: SlitCover):
    for a, b in ((Fraction(1, 2), Fraction(1, 2)), (Fraction(3, 7), Fraction(5, 11)),
                 (Fraction(13, 29), Fraction(17, 31)), (Fraction(2, 13), Fraction(7, 19)),
                 (Fraction(23, 41), Fraction(11, 37))):
        yield cover.from_ab(a, b)


def invariant_slit_cover(matrix, b1, b2, search: int = 2) -> SlitCover:
    """Shortest slit from ``b1`` to a translate of ``b2`` preserved by ``matrix``.

    ``{b1, b2}`` must be invariant mod 1.
    """
    b1 = tuple(Fraction(c) for c in b1)
    b2 = tuple(Fraction(c) for c in b2)
    img = {mod1(_apply_affine(matrix, (0, 0), b)) for b in (b1, b2)}
    if img != {mod1(b1), mod1(b2)}:
        raise BranchSetNotInvariant("branch pair is not invariant under the matrix")
    cands = []
    for i, j in product(range(-search, search + 1), repeat=2):
        d = (b2[0] - b1[0] + i, b2[1] - b1[1] + j)
        try:
            c = SlitCover(b1, d)
        except ValueError:
            continue
        cands.append((float(d[0]) ** 2 + float(d[1]) ** 2, i, j, c))
    for _, _, _, c in sorted(cands, key=lambda t: t[:3]):
        if slit_class_consistent(c, matrix):
            return c
    raise BranchSetNotInvariant("no invariant straight slit in the search range")


def default_cover() -> SlitCover:
    """Cover of the torus branched at the period-2 orbit ``(1/5, 2/5), (4/5, 3/5)`` of the cat map."""
    return SlitCover((Fraction(4, 5), Fraction(3, 5)), (Fraction(2, 5), Fraction(4, 5)))

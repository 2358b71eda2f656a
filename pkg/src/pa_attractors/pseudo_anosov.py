"""Hyperbolic toral automorphisms, their lifts to the slit cover, and the centralizer.

A lift is stored as an integer matrix, a rational shift and a sheet flip.
The sheet of an image point is found by counting slit crossings along the
image of a path from the centre of ``D`` (the marked point) to the source.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .cover import SlitCover, _generic_points, mod1, slit_class_consistent
from .errors import (BranchSetNotInvariant, DegeneratePath, DoesNotCommute, NoContinuousSheetRule,
                     NonHyperbolicPeriod, NotAffineImage, NotHyperbolic, OrderSearchExceeded)
from .flat import (DirectionalFoliation, StraightArc, SurfacePoint, add, norm, sub, trace_arc,
                   transversal_measure)

Matrix = Tuple[Tuple[int, int], Tuple[int, int]]


def _mat(m) -> Matrix:
    m = tuple(tuple(int(x) for x in row) for row in m)
    if len(m) != 2 or any(len(r) != 2 for r in m):
        raise ValueError("expected a 2x2 matrix")
    return m


def mat_mul(a: Matrix, b: Matrix) -> Matrix:
    return ((a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]),
            (a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]))


def mat_vec(a: Matrix, x):
    return (a[0][0] * x[0] + a[0][1] * x[1], a[1][0] * x[0] + a[1][1] * x[1])


def mat_det(a) -> int:
    return a[0][0] * a[1][1] - a[0][1] * a[1][0]


def mat_inv(a: Matrix) -> Matrix:
    d = mat_det(a)
    if abs(d) != 1:
        raise ValueError("matrix is not invertible over the integers")
    return ((a[1][1] * d, -a[0][1] * d), (-a[1][0] * d, a[0][0] * d))


IDENTITY: Matrix = ((1, 0), (0, 1))


@dataclass(frozen=True)
class LinearTorusMap:
    """``x -> M x + shift (mod 1)`` with ``M`` in GL(2, Z)."""

    matrix: Matrix
    shift: Tuple = (Fraction(0), Fraction(0))

    def __post_init__(self):
        object.__setattr__(self, "matrix", _mat(self.matrix))
        object.__setattr__(self, "shift", tuple(Fraction(s) if not isinstance(s, float) else s
                                                for s in self.shift))
        if abs(mat_det(self.matrix)) != 1:
            raise ValueError(f"determinant {mat_det(self.matrix)} is not +-1")

    @property
    def trace(self) -> int:
        return self.matrix[0][0] + self.matrix[1][1]

    @property
    def det(self) -> int:
        return mat_det(self.matrix)

    def is_hyperbolic(self) -> bool:
        # real eigenvalues off the unit circle: tr^2 - 4 det > 0 and not |tr| <= 2 with det 1
        t, d = self.trace, self.det
        if d == 1:
            return abs(t) > 2
        return t != 0

    def __call__(self, x):
        return mod1(add(mat_vec(self.matrix, x), self.shift))

    def compose(self, other: "LinearTorusMap") -> "LinearTorusMap":
        return LinearTorusMap(mat_mul(self.matrix, other.matrix),
                              add(mat_vec(self.matrix, other.shift), self.shift))

    def power(self, n: int) -> "LinearTorusMap":
        if n < 0:
            return self.inverse().power(-n)
        out = LinearTorusMap(IDENTITY)
        for _ in range(n):
            out = self.compose(out)
        return out

    def inverse(self) -> "LinearTorusMap":
        inv = mat_inv(self.matrix)
        s = mat_vec(inv, self.shift)
        return LinearTorusMap(inv, (-s[0], -s[1]))


def cat_map() -> LinearTorusMap:
    return LinearTorusMap(((2, 1), (1, 1)))


def perron_eigenvalue(m) -> float:
    """Largest eigenvalue modulus of a 2x2 integer matrix, in closed form."""
    a = m.matrix if isinstance(m, LinearTorusMap) else m
    t, d = a[0][0] + a[1][1], mat_det(a)
    disc = t * t - 4 * d
    if disc <= 0:
        return math.sqrt(abs(d))
    return (abs(t) + math.sqrt(disc)) / 2


def periodic_points_torus(m: LinearTorusMap, period: int) -> List[Tuple[Fraction, Fraction]]:
    """All ``x`` with ``m^period(x) = x``, exactly, for a linear map.

    They form the finite group ``(M^n - I)^{-1} Z^2 / Z^2``; it is generated
    by the columns of the rational inverse and enumerated by closure.
    """
    if period < 1:
        raise ValueError("period must be >= 1")
    mn = m.power(period).matrix
    a = ((mn[0][0] - 1, mn[0][1]), (mn[1][0], mn[1][1] - 1))
    d = mat_det(a)
    if d == 0:
        raise NonHyperbolicPeriod(f"M^{period} - I is singular")
    inv = ((Fraction(a[1][1], d), Fraction(-a[0][1], d)), (Fraction(-a[1][0], d), Fraction(a[0][0], d)))
    gens = [mod1((inv[0][0], inv[1][0])), mod1((inv[0][1], inv[1][1]))]
    zero = (Fraction(0), Fraction(0))
    seen = {zero}
    queue = deque([zero])
    while queue:
        x = queue.popleft()
        for g in gens:
            y = mod1(add(x, g))
            if y not in seen:
                seen.add(y)
                queue.append(y)
    if len(seen) != abs(d):
        raise ArithmeticError("closure size disagrees with the determinant")
    return sorted(seen)


def minimal_period(m: LinearTorusMap, x, max_period: int = 10_000) -> int:
    y = m(x)
    n = 1
    while y != mod1(x):
        y = m(y)
        n += 1
        if n > max_period:
            raise ArithmeticError("period search exceeded")
    return n


# lifts to the cover ----------------------------------------------------------

@dataclass(frozen=True)
class CoverMap:
    """Lift of the affine torus map ``x -> M x + shift`` to a slit cover.

    ``flip`` is the sheet of the image of the marked point (sheet 0 over the
    centre of ``D``).  Construct through :func:`build_cover_map` so the sheet
    rule is known to be continuous.
    """

    cover: SlitCover = field(repr=False, compare=False)
    matrix: Matrix
    shift: Tuple
    flip: int = 0
    name: str = field(default="", compare=False)

    def base(self) -> LinearTorusMap:
        return LinearTorusMap(self.matrix, self.shift)

    def planar(self, x):
        return add(mat_vec(self.matrix, x), self.shift)

    def __call__(self, p: SurfacePoint) -> SurfacePoint:
        c = self.cover
        x = p.coords
        if not all(isinstance(v, Fraction) for v in x):
            x = tuple(float(v) for v in x)
        y = self.planar(x)
        y0 = self.planar(c.center)
        for mid in [None] + list(_generic_points(c))[1:]:
            try:
                if mid is None:
                    cnt = c.crossings(y0, y)
                    last = y0
                else:
                    ym = self.planar(mid)
                    cnt = c.crossings(c.center, mid) + c.crossings(mid, x)
                    if cnt:
                        raise DegeneratePath("intermediate point left D")
                    cnt = c.crossings(y0, ym) + c.crossings(ym, y)
                    last = ym
                break
            except DegeneratePath:
                continue
        else:
            raise DegeneratePath("no generic route to the point")
        label = (p.polygon + self.flip + cnt) & 1
        approach = c.ab(y)[1] - c.ab(last)[1]
        return c.point(y, label, approach=approach)

    def compose(self, other: "CoverMap") -> "CoverMap":
        """``self o other``."""
        if other.cover is not self.cover:
            raise ValueError("maps live on different covers")
        matrix = mat_mul(self.matrix, other.matrix)
        shift = add(mat_vec(self.matrix, other.shift), self.shift)
        probe = _probe_point(self.cover)
        target = self(other(probe))
        trial = CoverMap(self.cover, matrix, shift, 0)
        flip = 0 if trial(probe).polygon == target.polygon else 1
        name = f"{self.name}*{other.name}" if self.name and other.name else ""
        return CoverMap(self.cover, matrix, shift, flip, name)

    def inverse(self) -> "CoverMap":
        inv = mat_inv(self.matrix)
        s = mat_vec(inv, self.shift)
        trial = CoverMap(self.cover, inv, (-s[0], -s[1]), 0)
        probe = _probe_point(self.cover)
        flip = 0 if self(trial(probe)).polygon == probe.polygon else 1
        return CoverMap(self.cover, inv, trial.shift, flip, f"{self.name}^-1" if self.name else "")

    def power(self, n: int) -> "CoverMap":
        if n < 0:
            return self.inverse().power(-n)
        out = identity_map(self.cover)
        for _ in range(n):
            out = self.compose(out)
        return CoverMap(self.cover, out.matrix, out.shift, out.flip,
                        f"{self.name}^{n}" if self.name else "")


def _probe_point(cover: SlitCover) -> SurfacePoint:
    return SurfacePoint(0, cover.from_ab(Fraction(3, 7), Fraction(5, 11)))


def identity_map(cover: SlitCover) -> CoverMap:
    return CoverMap(cover, IDENTITY, (Fraction(0), Fraction(0)), 0, "id")


def deck_involution(cover: SlitCover) -> CoverMap:
    return CoverMap(cover, IDENTITY, (Fraction(0), Fraction(0)), 1, "deck")


def build_cover_map(base: LinearTorusMap, cover: SlitCover, *, flip: int = 0,
                    continuity_samples: int = 64, seed: int = 0, name: str = "") -> CoverMap:
    """Lift ``base`` to ``cover``.

    The two lifts differ by the deck involution; ``flip=0`` picks the one
    keeping the marked point on sheet 0.
    """
    images = {base(b) for b in cover.branch_points}
    if images != set(cover.branch_points):
        raise BranchSetNotInvariant(f"branch set {cover.branch_points} maps to {sorted(images)}")
    if not slit_class_consistent(cover, base.matrix, base.shift):
        raise NoContinuousSheetRule("the map does not preserve the slit class mod 2")
    q = CoverMap(cover, base.matrix, base.shift, flip, name)
    bad = sheet_rule_discontinuity(q, continuity_samples, seed)
    if bad:
        raise NoContinuousSheetRule(f"sheet rule jumps across the edges of D ({bad} samples)")
    return q


def sheet_rule_discontinuity(q: CoverMap, samples: int, seed: int = 0, eps: float = 1e-7) -> int:
    """Count sampled edge points of ``D`` where nearby preimages land far apart."""
    c = q.cover
    rng = np.random.default_rng(seed)
    a_lo, a_hi = float(c.alpha), float(c.beta)
    stretch = max(abs(x) for row in q.matrix for x in row) * 2 + 1
    bad = 0
    for _ in range(samples):
        s = int(rng.integers(0, 2))
        a = rng.uniform(0.0, 1.0)
        b = rng.uniform(0.0, 1.0)
        pairs = []
        # across the bottom/top side (slit part switches sheet)
        t = 1 - s if a_lo < a < a_hi else s
        pairs.append((SurfacePoint(s, _fl(c.from_ab(a, eps))), SurfacePoint(t, _fl(c.from_ab(a, 1 - eps)))))
        # across the left/right side
        pairs.append((SurfacePoint(s, _fl(c.from_ab(eps, b))), SurfacePoint(s, _fl(c.from_ab(1 - eps, b)))))
        for p1, p2 in pairs:
            try:
                d = c.distance(q(p1), q(p2))
            except DegeneratePath:
                continue
            if d > 2 * eps * stretch * 4 + 1e-9:
                bad += 1
    return bad


def _fl(x):
    return (float(x[0]), float(x[1]))


def commutes(q1, q2, samples: int = 200, seed: int = 0, tol: float = 1e-9) -> bool:
    """Sampled test of ``q1 o q2 = q2 o q1`` on the cover."""
    cover = q1.cover
    rng = np.random.default_rng(seed)
    for p in cover.random_points(rng, samples):
        try:
            a = q1(q2(p))
            b = q2(q1(p))
        except DegeneratePath:
            continue
        if cover.distance(a, b) > tol:
            return False
    return True


def translation_control(cover: SlitCover, shift=(Fraction(1, 7), Fraction(0))) -> CoverMap:
    """Translation by a non-lattice vector, used as a non-commuting control.

    It does not preserve the branch set, so it is not a lift of a cover
    automorphism; :func:`commutes` still evaluates it pointwise.
    """
    return CoverMap(cover, IDENTITY, tuple(Fraction(s) for s in shift), 0, "translation")


# foliations and dilatation ------------------------------------------------------

def dilatation(q) -> float:
    base = q.base() if isinstance(q, CoverMap) else q
    if not base.is_hyperbolic():
        raise NotHyperbolic(f"trace {base.trace} is not hyperbolic")
    return perron_eigenvalue(base)


@dataclass(frozen=True)
class MeasuredFoliationPair:
    stable: DirectionalFoliation
    unstable: DirectionalFoliation
    dilatation: float


def invariant_foliations(m) -> MeasuredFoliationPair:
    """Eigen-foliations of a hyperbolic matrix.

    The stable foliation's transverse measure is ``|eta_s . dx|`` with
    ``eta_s`` the left eigenvector for the expanding eigenvalue, so the map
    multiplies it by ``lambda``; the unstable one shrinks by ``1/lambda``.
    """
    base = m.base() if isinstance(m, CoverMap) else m
    lam = dilatation(base)
    a = np.array(base.matrix, dtype=float)
    vals, vecs = np.linalg.eig(a.T)
    order = np.argsort(-np.abs(vals))
    es = vecs[:, order[0]].real
    eu = vecs[:, order[1]].real
    es = es / np.linalg.norm(es)
    eu = eu / np.linalg.norm(eu)
    return MeasuredFoliationPair(DirectionalFoliation(tuple(es)), DirectionalFoliation(tuple(eu)), lam)


def eigen_data_interval(matrix, dps: int = 40):
    """Interval enclosure of the expanding eigenvalue, for cross-checks."""
    from mpmath import iv, mp
    a = _mat(matrix)
    iv.dps = dps
    t, d = a[0][0] + a[1][1], mat_det(a)
    return (iv.mpf(abs(t)) + iv.sqrt(iv.mpf(t * t - 4 * d))) / 2


def image_arc(q: CoverMap, arc: StraightArc, tol: float = 1e-9) -> StraightArc:
    """Trace the image of a straight arc and check its far end."""
    c = q.cover
    direction = mat_vec(q.matrix, arc.direction)
    factor = norm(direction)
    start = q(arc.start)
    img = trace_arc(c.surface, start, direction, factor * float(arc.length))
    expected = q(arc.end)
    if c.distance(img.end, expected) > tol * max(1.0, factor * float(arc.length)):
        raise NotAffineImage("traced image does not end at the image of the endpoint")
    return img


def random_arcs(cover: SlitCover, count: int, seed: int = 0, length: float = 0.3) -> List[StraightArc]:
    rng = np.random.default_rng(seed)
    arcs = []
    while len(arcs) < count:
        p = cover.random_points(rng, 1, exclude_radius=1e-3)[0]
        ang = rng.uniform(0, 2 * math.pi)
        try:
            arcs.append(trace_arc(cover.surface, p, (math.cos(ang), math.sin(ang)), length))
        except Exception:  # an arc hitting a cone point is simply resampled
            continue
    return arcs


@dataclass(frozen=True)
class ScalingResult:
    nu_s: float
    nu_u: float
    spread_s: float
    spread_u: float


def measure_scaling(q: CoverMap, fols: MeasuredFoliationPair, arcs: Sequence[StraightArc]) -> ScalingResult:
    """Average ratio ``mu(Q(arc)) / mu(arc)`` for both transverse measures."""
    s = q.cover.surface
    rs, ru = [], []
    for a in arcs:
        img = image_arc(q, a)
        rs.append(transversal_measure(s, fols.stable, img) / transversal_measure(s, fols.stable, a))
        ru.append(transversal_measure(s, fols.unstable, img) / transversal_measure(s, fols.unstable, a))
    rs, ru = np.array(rs), np.array(ru)
    return ScalingResult(float(rs.mean()), float(ru.mean()), float(np.ptp(rs)), float(np.ptp(ru)))


@dataclass(frozen=True)
class CentralizerVerdict:
    kind: str  # "periodic" or "pseudo-anosov"
    order: Optional[int] = None
    dilatation: Optional[float] = None
    nu: Optional[float] = None

    def as_dict(self) -> dict:
        return {"kind": self.kind, "order": self.order, "dilatation": self.dilatation, "nu": self.nu}


def Periodic(order: int, nu: float = 1.0) -> CentralizerVerdict:
    return CentralizerVerdict("periodic", order=order, nu=nu)


def PseudoAnosov(lam: float, nu: Optional[float] = None) -> CentralizerVerdict:
    return CentralizerVerdict("pseudo-anosov", dilatation=lam, nu=nu)


def periodic_order(q: CoverMap, samples: int = 64, seed: int = 0, max_order: int = 64,
                   tol: float = 1e-9) -> int:
    """Least ``m`` with ``q^m`` fixing every sampled point."""
    cover = q.cover
    pts = cover.random_points(np.random.default_rng(seed), samples)
    cur = list(pts)
    for m in range(1, max_order + 1):
        cur = [q(p) for p in cur]
        if all(cover.distance(a, b) <= tol for a, b in zip(cur, pts)):
            return m
    raise OrderSearchExceeded(f"no order up to {max_order}")


def classify_centralizer_element(q: CoverMap, p: CoverMap, fols: Optional[MeasuredFoliationPair] = None,
                                 arcs: Optional[Sequence[StraightArc]] = None, samples: int = 200,
                                 seed: int = 0, tol: float = 1e-9) -> CentralizerVerdict:
    """Periodic or pseudo-Anosov, read off from how ``q`` scales the measures of ``p``."""
    if not commutes(q, p, samples, seed, tol):
        raise DoesNotCommute("q does not commute with p")
    fols = fols or invariant_foliations(p)
    arcs = arcs if arcs is not None else random_arcs(q.cover, 16, seed)
    sc = measure_scaling(q, fols, arcs)
    nu = sc.nu_s
    if abs(nu - 1) < tol and abs(sc.nu_u - 1) < tol:
        return Periodic(periodic_order(q, seed=seed, tol=tol), nu)
    return PseudoAnosov(max(nu, 1 / nu), nu)


def parse_composite(expr: str, named: dict) -> CoverMap:
    """Evaluate words like ``"deck*P^2"`` or ``"P^-1"`` over named maps."""
    from .errors import ParseError
    expr = expr.strip()
    if not expr:
        raise ParseError("empty map expression")
    result = None
    for token in expr.split("*"):
        token = token.strip()
        base, _, exp = token.partition("^")
        base = base.strip()
        if base not in named:
            raise ParseError(f"unknown map {base!r}")
        try:
            e = int(exp) if exp else 1
        except ValueError as err:
            raise ParseError(f"bad exponent in {token!r}") from err
        f = named[base].power(e) if e != 1 else named[base]
        result = f if result is None else result.compose(f)
    return CoverMap(result.cover, result.matrix, result.shift, result.flip, expr)

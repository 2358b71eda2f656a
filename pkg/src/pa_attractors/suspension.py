"""Mapping tori of the slit cover and the product-type model maps on them.

Points of ``S x R`` are identified under ``gamma(z, r) = (J z, r - 1)``; the
canonical representative has ``r`` in [0, 1).  The model map acts by ``P`` on
the fibre coordinate and by the circle-family lift on ``r``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Sequence

import numpy as np

from .circle import (CirclePoint, CorrectTriple, angle_distance, circle_apply, index_orbit,
                     lift_eval, periodic_points)
from .errors import AmbiguousLift, DoesNotCommute, LoopNotClosed, NotPseudoAnosov
from .flat import SurfacePoint
from .pseudo_anosov import (CentralizerVerdict, CoverMap, classify_centralizer_element, commutes,
                            identity_map, invariant_foliations, random_arcs)

EQ_TOL = 1e-9


@dataclass(frozen=True)
class FiberPoint:
    z: SurfacePoint
    r: float


@dataclass(frozen=True)
class QuotientPoint:
    z: SurfacePoint
    r: float


@dataclass(frozen=True)
class MappingTorus:
    J: CoverMap

    @property
    def cover(self):
        return self.J.cover

    @property
    def surface(self):
        return self.J.cover.surface

    @property
    def J_inverse(self) -> CoverMap:
        return self.J.inverse()

    def gamma(self, p: FiberPoint) -> FiberPoint:
        return FiberPoint(self.J(p.z), p.r - 1)

    def gamma_inverse(self, p: FiberPoint) -> FiberPoint:
        return FiberPoint(self.J_inverse(p.z), p.r + 1)


def normalize(t: MappingTorus, p) -> QuotientPoint:
    """Apply ``gamma^floor(r)``."""
    m = math.floor(p.r)
    z = p.z
    if m > 0:
        for _ in range(m):
            z = t.J(z)
    elif m < 0:
        jinv = t.J_inverse
        for _ in range(-m):
            z = jinv(z)
    r = p.r - m
    if r >= 1.0:
        z, r = t.J(z), 0.0
    return QuotientPoint(z, r)


def quotient_equal(t: MappingTorus, a: QuotientPoint, b: QuotientPoint, tol: float = EQ_TOL) -> bool:
    """Tolerant equality of normalized points, aware of the ``r = 0 ~ 1`` seam."""
    d = t.cover.distance
    if abs(a.r - b.r) <= tol and d(a.z, b.z) <= tol:
        return True
    if 1.0 - a.r <= tol and b.r <= tol:
        return d(t.J(a.z), b.z) <= tol
    if 1.0 - b.r <= tol and a.r <= tol:
        return d(t.J(b.z), a.z) <= tol
    return False


@dataclass(frozen=True)
class ModelMap:
    P: CoverMap
    J: CoverMap
    triple: CorrectTriple
    level_shift: float = 0.0  # nonzero only for negative controls
    verdict: Optional[CentralizerVerdict] = field(default=None, compare=False)

    @property
    def torus(self) -> MappingTorus:
        return MappingTorus(self.J)

    @property
    def return_composite(self) -> CoverMap:
        t = self.triple
        comp = self.J.power(t.l).compose(self.P.power(t.k))
        return CoverMap(comp.cover, comp.matrix, comp.shift, comp.flip, _composite_name(self.J.name, t.l, self.P.name, t.k))


def _composite_name(jn, l, pn, k):
    jn, pn = jn or "J", pn or "P"
    parts = []
    if l:
        parts.append(jn if l == 1 else f"{jn}^{l}")
    parts.append(pn if k == 1 else f"{pn}^{k}")
    return "*".join(parts)


def build_model_map(P: CoverMap, J: CoverMap, triple: CorrectTriple, samples: int = 100,
                    seed: int = 0, verify: bool = True) -> ModelMap:
    """Check ``PJ = JP`` and that ``J^l P^k`` is pseudo-Anosov."""
    m = ModelMap(P, J, triple)
    if not verify:
        return m
    if not commutes(P, J, samples, seed):
        raise DoesNotCommute("P and J do not commute")
    comp = m.return_composite
    verdict = classify_centralizer_element(comp, P, samples=samples, seed=seed)
    if verdict.kind != "pseudo-anosov":
        raise NotPseudoAnosov(f"{comp.name} is {verdict.kind}")
    return ModelMap(P, J, triple, verdict=verdict)


def model_apply(m: ModelMap, w: QuotientPoint) -> QuotientPoint:
    return normalize(m.torus, FiberPoint(m.P(w.z), lift_eval(m.triple, w.r)))


def h_projection(w) -> CirclePoint:
    return CirclePoint(w.r)


@dataclass(frozen=True)
class NWComponent:
    index: int
    level: Fraction
    kind: str
    period: int

    @property
    def level_value(self) -> float:
        return float(self.level)


def nw_components(m: ModelMap) -> List[NWComponent]:
    t = m.triple
    size = 2 * t.nk
    out = []
    for i in range(size):
        out.append(NWComponent(i, Fraction(i, size), "attractor" if i % 2 else "repeller",
                               len(index_orbit(t, i))))
    return out


def component_level(m: ModelMap, c: NWComponent) -> float:
    return float(c.level) + m.level_shift


def component_return_map(m: ModelMap, i: int) -> CoverMap:
    if not 0 <= i < 2 * m.triple.nk:
        raise IndexError(f"component index {i} out of range")
    return m.return_composite


def _sample_fiber(m: ModelMap, samples: int, seed: int) -> List[SurfacePoint]:
    return m.P.cover.random_points(np.random.default_rng(seed), samples)


def verify_return_map(m: ModelMap, i: int, samples: int = 1000, seed: int = 0) -> float:
    """Max quotient distance between ``k`` model steps and the composite on level ``i``."""
    comp = component_return_map(m, i)
    level = float(Fraction(i, 2 * m.triple.nk))
    cover = m.P.cover
    worst = 0.0
    for z in _sample_fiber(m, samples, seed):
        w = QuotientPoint(z, level)
        for _ in range(m.triple.k):
            w = model_apply(m, w)
        target = QuotientPoint(comp(z), level)
        if quotient_equal(m.torus, w, target, 0.0):
            continue
        dr = angle_distance(w.r, target.r)
        seam = w.r > 0.5
        zz = m.J(w.z) if (seam and target.r < 0.5) else w.z
        tt = m.J(target.z) if (not seam and target.r > 0.5) else target.z
        worst = max(worst, dr, cover.distance(zz, tt))
    return worst


def component_invariance(m: ModelMap, i: int, samples: int = 100, seed: int = 0,
                         tol: float = EQ_TOL) -> dict:
    """Levels visited by ``k`` model steps from sampled points of component ``i``."""
    t = m.triple
    size = 2 * t.nk
    level = float(Fraction(i, size))
    min_gap = math.inf
    return_err = 0.0
    for z in _sample_fiber(m, samples, seed):
        w = QuotientPoint(z, level)
        for j in range(1, t.k + 1):
            w = model_apply(m, w)
            gap = angle_distance(w.r, level)
            if j < t.k:
                min_gap = min(min_gap, gap)
            else:
                return_err = max(return_err, gap)
    ok = return_err <= tol and (t.k == 1 or min_gap >= 1.0 / size - tol)
    return {"index": i, "period": t.k, "return_error": return_err,
            "min_gap_before_return": None if t.k == 1 else min_gap, "invariant": ok}


def semiconjugacy_residual(m: ModelMap, samples: int = 10_000, seed: int = 0) -> float:
    rng = np.random.default_rng(seed)
    pts = m.P.cover.random_points(rng, samples)
    rs = rng.uniform(0.0, 1.0, samples)
    worst = 0.0
    for z, r in zip(pts, rs):
        w = QuotientPoint(z, float(r))
        lhs = h_projection(model_apply(m, w))
        rhs = circle_apply(m.triple, h_projection(w))
        worst = max(worst, angle_distance(lhs.theta, rhs.theta))
    return worst


def nw_factor_property(m: ModelMap, samples: int = 100, seed: int = 0, tol: float = 1e-12) -> bool:
    """Every sampled point of every ``B_i`` projects into the periodic set of the circle map."""
    periodic = [rec.point.theta for rec in periodic_points(m.triple)]
    zs = _sample_fiber(m, samples, seed)
    for c in nw_components(m):
        lvl = component_level(m, c)
        for z in zs:
            th = h_projection(normalize(m.torus, FiberPoint(z, lvl))).theta
            if min(angle_distance(th, p) for p in periodic) >= tol:
                return False
    return True


# trapping neighbourhoods on the circle factor ----------------------------------

@dataclass(frozen=True)
class TrappingReport:
    index: int
    kind: str
    interval: tuple
    image: tuple
    contained: bool
    margin: float
    lengths: tuple
    nested: bool

    @property
    def final_length(self) -> float:
        return self.lengths[-1]

    def as_row(self) -> dict:
        return {"component": self.index, "kind": self.kind, "lo": self.interval[0], "hi": self.interval[1],
                "image_lo": self.image[0], "image_hi": self.image[1], "contained": self.contained,
                "margin": self.margin, "final_length": self.final_length}


def _return_lift(t: CorrectTriple, r: float) -> float:
    for _ in range(t.k):
        r = lift_eval(t, r)
    return r - t.l


def _return_lift_inverse(t: CorrectTriple, y: float) -> float:
    from scipy.optimize import brentq
    lo, hi = y - 1.0, y + 1.0
    return brentq(lambda r: _return_lift(t, r) - y, lo, hi, xtol=1e-16, rtol=4 * np.finfo(float).eps)


def trapping_check(m, i: int, iterations: int = 50) -> TrappingReport:
    """Interval ``I_i`` of half-width ``1/(4nk)`` around level ``i/(2nk)``.

    Odd ``i``: ``g(I_i)`` lies in the interior of ``I_i`` for the return lift
    ``g = lift^k - l``.  Even ``i``: ``I_i`` lies in the interior of ``g(I_i)``,
    checked through ``g^-1``.  Lengths of the nested images (under ``g`` or
    ``g^-1``) are recorded for ``iterations`` steps.
    """
    t = m.triple if isinstance(m, ModelMap) else m
    size = 2 * t.nk
    if not 0 <= i < size:
        raise IndexError(f"component index {i} out of range")
    c = i / size
    half = 1.0 / (4 * t.nk)
    lo, hi = c - half, c + half
    img = (_return_lift(t, lo), _return_lift(t, hi))
    attractor = i % 2 == 1
    if attractor:
        margin = min(img[0] - lo, hi - img[1])
        step = lambda r: _return_lift(t, r)
    else:
        margin = min(lo - img[0], img[1] - hi)
        step = lambda r: _return_lift_inverse(t, r)
    a, b = lo, hi
    lengths, nested = [], True
    for _ in range(iterations):
        a2, b2 = step(a), step(b)
        nested &= a <= a2 and b2 <= b
        a, b = a2, b2
        lengths.append(b - a)
    return TrappingReport(i, "attractor" if attractor else "repeller", (lo, hi), img, margin > 0,
                          margin, tuple(lengths), bool(nested))


# loops and winding ----------------------------------------------------------------

def vertical_loop(t: MappingTorus, z: SurfacePoint, turns: int = 1, samples: int = 64) -> List[QuotientPoint]:
    """``r`` runs from 0 to ``turns`` at fixed ``z`` (needs ``J z = z`` to close)."""
    n = abs(turns) * samples
    sign = 1 if turns >= 0 else -1
    return [normalize(t, FiberPoint(z, sign * j / samples)) for j in range(n + 1)]


def winding_number(t: MappingTorus, loop: Sequence[QuotientPoint], max_step: float = 0.25) -> int:
    """Net number of upward passes through the seam along a closed discrete loop."""
    if len(loop) < 2:
        raise LoopNotClosed("a loop needs at least two points")
    if not quotient_equal(t, loop[0], loop[-1]):
        raise LoopNotClosed("first and last points differ")
    cover = t.cover
    jinv = t.J_inverse
    wraps = 0
    lifted = loop[0].r
    prev_up = loop[0].z
    for a, b in zip(loop[:-1], loop[1:]):
        d = b.r - a.r
        choices = sorted(((abs(d + s), s) for s in (-1, 0, 1)))
        if choices[0][0] >= 0.5:
            raise AmbiguousLift(f"fiber gap {d} is too large to lift")
        s = choices[0][1]
        # s = +1: upward through the seam (r jumped from ~1 to ~0)
        wraps += s
        lifted += d + s
        up = b.z
        for _ in range(abs(wraps)):
            up = jinv(up) if wraps > 0 else t.J(up)
        if cover.distance(up, prev_up) > max_step:
            raise AmbiguousLift("surface coordinate jumps between consecutive points")
        prev_up = up
    return int(round(lifted - loop[0].r))


def concatenate(a: Sequence[QuotientPoint], b: Sequence[QuotientPoint]) -> List[QuotientPoint]:
    return list(a) + list(b)[1:]


def model_suite(m: ModelMap, semiconj_samples: int = 10_000, return_samples: int = 1000,
                   seed: int = 0, tol_semiconj: float = 1e-12, tol_geom: float = 1e-9) -> List[dict]:
    """All structural checks for one model map, as report rows."""
    t = m.triple
    checks = []
    res = semiconjugacy_residual(m, semiconj_samples, seed)
    checks.append({"name": "semiconjugacy", "passed": res < tol_semiconj, "measured": res,
                   "margin": tol_semiconj - res})
    comps = nw_components(m)
    inv = [component_invariance(m, c.index, min(100, return_samples), seed) for c in comps]
    bad = [r for r in inv if not r["invariant"]]
    checks.append({"name": "component_invariance", "passed": not bad,
                   "measured": max(r["return_error"] for r in inv), "period": t.k,
                   "datum": bad[0] if bad else None})
    comp = component_return_map(m, 1)
    dev = max(verify_return_map(m, i, return_samples if i == 1 else max(1, return_samples // 10), seed)
              for i in range(2 * t.nk))
    checks.append({"name": "return_map", "passed": dev <= tol_geom, "measured": dev,
                   "margin": tol_geom - dev, "composite": comp.name})
    verdict = m.verdict or classify_centralizer_element(comp, m.P, samples=100, seed=seed)
    checks.append({"name": "return_map_pseudo_anosov", "passed": verdict.kind == "pseudo-anosov",
                   "measured": verdict.dilatation, "verdict": verdict.kind})
    traps = [trapping_check(m, c.index) for c in comps]
    # shrinkage is required for attractors only; repellers contract under g^-1 at (2/3)^k per step
    bad_t = [r.as_row() for r in traps
             if not (r.contained and r.nested and (r.kind == "repeller" or r.final_length < 1e-10))]
    checks.append({"name": "trapping", "passed": not bad_t,
                   "measured": min(r.margin for r in traps),
                   "max_attractor_final_length": max(r.final_length for r in traps if r.kind == "attractor"),
                   "datum": bad_t[0] if bad_t else None})
    nw = nw_factor_property(m, 50, seed)
    checks.append({"name": "nw_factor_property", "passed": nw, "measured": nw})
    return checks

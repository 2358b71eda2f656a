"""Morse-Smale circle maps: the lifted family and its periodic-orbit structure.

The lift is ``r -> r + sin(2 pi n k r) / (4 pi n k) + l / k`` on the real line.
It commutes with the unit translation and so descends to a circle
diffeomorphism with rotation number ``l / k``.  Its non-wandering set is the
``2nk`` points ``i / (2nk)``; odd indices are sinks and even indices sources.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, List, Optional

import numpy as np
from numba import njit
from scipy.optimize import brentq

from .errors import BadResidue, NonPositive, NotCoprime

ANGLE_EPS = 1e-10


@dataclass(frozen=True)
class CorrectTriple:
    n: int
    k: int
    l: int

    def __post_init__(self):
        _validate_triple(self.n, self.k, self.l)

    @property
    def nk(self) -> int:
        return self.n * self.k

    @property
    def rotation(self) -> Fraction:
        return Fraction(self.l, self.k)

    def as_list(self) -> list:
        return [self.n, self.k, self.l]


def _validate_triple(n, k, l):
    for name, value in (("n", n), ("k", k), ("l", l)):
        if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
            raise NonPositive(f"{name} must be an integer, got {value!r}")
    if n <= 0 or k <= 0:
        raise NonPositive(f"n and k must be positive, got n={n}, k={k}")
    if k == 1:
        if l != 0:
            raise BadResidue(f"k=1 requires l=0, got l={l}")
        return
    if not 1 <= l <= k - 1:
        raise BadResidue(f"l must lie in [1, {k - 1}] for k={k}, got l={l}")
    if math.gcd(l, k) != 1:
        raise NotCoprime(f"gcd(l, k) = {math.gcd(l, k)} for l={l}, k={k}")


def make_correct_triple(n: int, k: int, l: int) -> CorrectTriple:
    """Validate ``(n, k, l)`` and return it as a :class:`CorrectTriple`."""
    return CorrectTriple(n, k, l)


@dataclass(frozen=True)
class CirclePoint:
    """Point ``exp(2 pi i theta)`` stored by its angle ``theta`` in [0, 1)."""

    theta: float

    def __post_init__(self):
        t = self.theta - math.floor(self.theta)
        if t >= 1.0:
            t = 0.0
        object.__setattr__(self, "theta", t)

    def close_to(self, other: "CirclePoint", eps: float = ANGLE_EPS) -> bool:
        return angle_distance(self.theta, other.theta) < eps


def angle_distance(a: float, b: float) -> float:
    d = (a - b) % 1.0
    return min(d, 1.0 - d)


def lift_eval(t: CorrectTriple, r):
    nk = t.nk
    return r + math.sin(2 * math.pi * nk * r) / (4 * math.pi * nk) + t.l / t.k


def lift_derivative(t: CorrectTriple, r) -> float:
    return 1.0 + 0.5 * math.cos(2 * math.pi * t.nk * r)


def circle_apply(t: CorrectTriple, s) -> CirclePoint:
    theta = s.theta if isinstance(s, CirclePoint) else s
    return CirclePoint(lift_eval(t, theta))


@dataclass(frozen=True)
class LiftedCircleMap:
    """A lift ``f`` of a circle map, i.e. ``f(r + 1) = f(r) + 1``.

    Either built from a triple (fast paths available) or from an arbitrary
    callable; ``derivative`` is optional for the latter.
    """

    func: Callable[[float], float]
    triple: Optional[CorrectTriple] = None
    derivative: Optional[Callable[[float], float]] = field(default=None, compare=False)

    @classmethod
    def from_triple(cls, t: CorrectTriple) -> "LiftedCircleMap":
        return cls(func=lambda r: lift_eval(t, r), triple=t,
                   derivative=lambda r: lift_derivative(t, r))

    def __call__(self, r):
        return self.func(r)

    def inverse(self, y: float) -> float:
        """Preimage under the (strictly increasing) lift, by bracketing."""
        lo, hi = y - 2.0, y + 2.0
        while self.func(lo) > y:
            lo -= 2.0
        while self.func(hi) < y:
            hi += 2.0
        return brentq(lambda r: self.func(r) - y, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)


@njit(cache=True)
def _family_orbit_end(nk, shift, r0, steps):
    whole = math.floor(r0)
    theta = r0 - whole
    c = 1.0 / (4.0 * math.pi * nk)
    w = 2.0 * math.pi * nk
    for _ in range(steps):
        y = theta + c * math.sin(w * theta) + shift
        fl = math.floor(y)
        theta = y - fl
        whole += fl
    return whole, theta


def iterate_lift(m: LiftedCircleMap, r0: float, steps: int) -> float:
    """Apply the lift ``steps`` times to ``r0``."""
    if steps < 0:
        raise ValueError("steps must be non-negative")
    if m.triple is not None:
        whole, theta = _family_orbit_end(m.triple.nk, m.triple.l / m.triple.k, float(r0), steps)
        return whole + theta
    r = r0
    for _ in range(steps):
        r = m(r)
    return r


def rotation_number(m: LiftedCircleMap, r0: float, iterations: int) -> float:
    """Drift average ``(f^N(r0) - r0) / N``.

    The integer and fractional parts are tracked separately so the sine is
    always evaluated on [0, 1).
    """
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    if m.triple is not None:
        whole, theta = _family_orbit_end(m.triple.nk, m.triple.l / m.triple.k, float(r0), iterations)
        return ((whole - math.floor(r0)) + (theta - (r0 - math.floor(r0)))) / iterations
    whole = 0
    theta = r0
    for _ in range(iterations):
        y = m(theta)
        fl = math.floor(y)
        whole += fl
        theta = y - fl
    return (whole + theta - r0) / iterations


@dataclass(frozen=True)
class PeriodicOrbitRecord:
    point: CirclePoint
    index: int
    period: int
    multiplier: float
    kind: str
    residual: float = 0.0

    def as_row(self) -> dict:
        return {"index": self.index, "theta": self.point.theta, "period": self.period,
                "multiplier": self.multiplier, "kind": self.kind}


def index_orbit(t: CorrectTriple, i: int) -> List[int]:
    """Orbit of index ``i`` under ``i -> i + 2nl (mod 2nk)``."""
    size = 2 * t.nk
    orbit = [i % size]
    j = (i + 2 * t.n * t.l) % size
    while j != orbit[0]:
        orbit.append(j)
        j = (j + 2 * t.n * t.l) % size
    return orbit


def periodic_points(t: CorrectTriple, tol: float = 1e-12) -> List[PeriodicOrbitRecord]:
    """All ``2nk`` periodic points of the circle map with their multipliers.

    Locations are analytic (``sin(2 pi n k r) = 0``); each one is then certified
    by its fixed-point residual and by iterating the circle map, and the
    multiplier of the ``k``-th iterate is the chain-rule product along the orbit.
    """
    size = 2 * t.nk
    out = []
    for i in range(size):
        theta = i / size
        residual = abs(lift_eval(t, theta) - theta - t.l / t.k)
        if residual >= tol:
            raise ArithmeticError(f"root residual {residual} at index {i}")
        orbit = index_orbit(t, i)
        period = len(orbit)
        s = CirclePoint(theta)
        for step in range(1, period + 1):
            s = circle_apply(t, s)
            back = angle_distance(s.theta, theta) < tol
            if back != (step == period):
                raise ArithmeticError(f"index {i} does not have period {period}")
        multiplier = 1.0
        for j in orbit:
            multiplier *= lift_derivative(t, j / size)
        out.append(PeriodicOrbitRecord(
            point=CirclePoint(theta), index=i, period=period, multiplier=multiplier,
            kind="sink" if multiplier < 1 else "source", residual=residual))
    return out


def finite_difference_multiplier(m: LiftedCircleMap, r: float, period: int, h: float = 1e-6) -> float:
    """Central-difference derivative of the ``period``-th iterate at ``r``."""
    return (iterate_lift(m, r + h, period) - iterate_lift(m, r - h, period)) / (2 * h)


def find_periodic_points(m: LiftedCircleMap, period: int, drift: int,
                         grid: int = 4096, tol: float = 1e-12) -> List[PeriodicOrbitRecord]:
    """Root-bracketing search for ``f^period(r) = r + drift`` on [0, 1).

    Fallback for lifts outside the family, where no closed form is known.
    Non-hyperbolic roots (multiplier exactly 1) are still reported, as sources.
    """
    def g(r):
        return iterate_lift(m, r, period) - r - drift

    xs = np.linspace(0.0, 1.0, grid + 1)
    vals = [g(x) for x in xs]
    roots = []
    for a, b, fa, fb in zip(xs[:-1], xs[1:], vals[:-1], vals[1:]):
        if fa == 0.0:
            roots.append(float(a))
        elif fa * fb < 0:
            roots.append(brentq(g, a, b, xtol=1e-15))
    out = []
    for idx, r in enumerate(sorted(roots)):
        if m.derivative is not None:
            mult, x = 1.0, r
            for _ in range(period):
                mult *= m.derivative(x)
                x = m(x)
        else:
            mult = finite_difference_multiplier(m, r, period)
        out.append(PeriodicOrbitRecord(point=CirclePoint(r), index=idx, period=period,
                                       multiplier=mult, kind="sink" if mult < 1 else "source",
                                       residual=abs(g(r))))
    return out


def verify_lift_equivariance(m: LiftedCircleMap, samples: int, tol: float = 1e-9,
                             seed: int = 0, span: float = 10.0) -> bool:
    """Check ``f(r + 1) - f(r) - 1 = 0`` on random points of [-span, span]."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    for r in rng.uniform(-span, span, samples):
        if abs(m(r + 1.0) - m(r) - 1.0) >= tol:
            return False
    return True

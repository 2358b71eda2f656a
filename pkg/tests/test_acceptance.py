"""Acceptance criteria 1-8, one PASS/FAIL line each.

Run with ``pytest tests/test_acceptance.py -s`` or as a script.
"""
import math
import sys
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES, random_loop
from pa_attractors.circle import LiftedCircleMap, make_correct_triple, periodic_points, rotation_number
from pa_attractors.errors import DoesNotCommute
from pa_attractors.flat import cone_points, gauss_bonnet_defect, genus, transversal_measure
from pa_attractors.markov import (lift_partition, markov_adler_weiss, markov_validate, perron_root,
                                  perturb_rectangle, transition_matrix)
from pa_attractors.pseudo_anosov import (cat_map, classify_centralizer_element, image_arc,
                                         invariant_foliations, measure_scaling, random_arcs,
                                         translation_control)
from pa_attractors.suspension import (MappingTorus, build_model_map, concatenate, model_suite,
                                      trapping_check, vertical_loop, winding_number)

TRIPLES = [(1, 1, 0), (2, 1, 0), (1, 2, 1), (1, 3, 1), (1, 3, 2), (2, 3, 2)]
LAMBDA = (3 + math.sqrt(5)) / 2
CAT = np.array([[2, 1], [1, 1]], dtype=float)


def record(n, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {n}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def _phi(t, r):
    # independent evaluation of the lifted circle map
    m = t.n * t.k
    return r + math.sin(2 * math.pi * m * r) / (4 * math.pi * m) + t.l / t.k


def _dphi(t, r):
    return 1 + math.cos(2 * math.pi * t.n * t.k * r) / 2


def test_criterion_1_circle_structure():
    t0 = time.perf_counter()
    found = {tr: periodic_points(make_correct_triple(*tr)) for tr in TRIPLES}
    elapsed = time.perf_counter() - t0
    worst = 0.0
    ok = elapsed < 1.0
    for tr, recs in found.items():
        t = make_correct_triple(*tr)
        size = 2 * t.nk
        ok &= len(recs) == size
        for rec in sorted(recs, key=lambda r: r.index):
            th = rec.point.theta
            worst = max(worst, abs(th - rec.index / size), rec.residual)
            # oracle: orbit by direct evaluation, exact period and chain-rule multiplier
            r, mult, back = th, 1.0, []
            for _ in range(t.k):
                mult *= _dphi(t, r)
                r = _phi(t, r)
                back.append(r)
            resid = abs(back[-1] - th - t.l)
            early = [abs(((x - th + 0.5) % 1.0) - 0.5) for x in back[:-1]]
            ok &= rec.period == t.k and all(e > 1e-3 for e in early)
            expected = (1.5 if rec.index % 2 == 0 else 0.5) ** t.k
            worst = max(worst, resid, abs(rec.multiplier - expected), abs(mult - expected))
    ok &= worst < 1e-12
    assert record(1, ok, f"6 triples, 2nk points each, max residual {worst:.2e}, runtime {elapsed:.3f}s")


def test_criterion_2_rotation_number():
    rng = np.random.default_rng(2024)
    worst = 0.0
    for tr in TRIPLES:
        t = make_correct_triple(*tr)
        lift = LiftedCircleMap.from_triple(t)
        for r0 in rng.uniform(0, 1, 5):
            worst = max(worst, abs(rotation_number(lift, float(r0), 1_000_000) - t.l / t.k))
    assert record(2, worst < 1e-6, f"10^6 iterations x 5 seeds x 6 triples, max |est - l/k| = {worst:.2e}")


def test_criterion_3_measure_scaling(cover, P, deck):
    fols = invariant_foliations(P)
    # oracle covectors: left eigenvectors from numpy
    w, V = np.linalg.eig(CAT.T)
    eta_s, eta_u = V[:, np.argmax(w)], V[:, np.argmin(w)]
    arcs = random_arcs(cover, 100, seed=3)
    s = cover.surface
    dev_s = dev_u = dev_oracle = 0.0
    for a in arcs:
        img = image_arc(P, a)
        rs = transversal_measure(s, fols.stable, img) / transversal_measure(s, fols.stable, a)
        ru = transversal_measure(s, fols.unstable, img) / transversal_measure(s, fols.unstable, a)
        dev_s = max(dev_s, abs(rs - LAMBDA))
        dev_u = max(dev_u, abs(ru - 1 / LAMBDA))
        d = np.array([float(c) for c in a.direction])
        o_s = abs(eta_s @ (CAT @ d)) / abs(eta_s @ d)
        o_u = abs(eta_u @ (CAT @ d)) / abs(eta_u @ d)
        dev_oracle = max(dev_oracle, abs(o_s - rs), abs(o_u - ru))
    prods = {}
    for name, q in (("deck", deck), ("P", P), ("deck*P^2", deck.compose(P.power(2)))):
        sc = measure_scaling(q, fols, arcs[:20])
        prods[name] = abs(sc.nu_s * sc.nu_u - 1)
    ok = dev_s < 1e-9 and dev_u < 1e-9 and dev_oracle < 1e-9 and max(prods.values()) < 1e-9
    assert record(3, ok, f"100 arcs, max stable dev {dev_s:.2e}, unstable dev {dev_u:.2e}, "
                         f"max |nu_s nu_u - 1| {max(prods.values()):.2e}")


def test_criterion_4_centralizer(cover, P, deck):
    fols = invariant_foliations(P)
    arcs = random_arcs(cover, 16)
    v_deck = classify_centralizer_element(deck, P, fols, arcs)
    v_p = classify_centralizer_element(P, P, fols, arcs)
    v_dp2 = classify_centralizer_element(deck.compose(P.power(2)), P, fols, arcs)
    try:
        classify_centralizer_element(translation_control(cover), P, fols, arcs)
        raised = False
    except DoesNotCommute:
        raised = True
    ok = ((v_deck.kind, v_deck.order) == ("periodic", 2)
          and v_p.kind == "pseudo-anosov" and abs(v_p.dilatation - LAMBDA) < 1e-9
          and v_dp2.kind == "pseudo-anosov" and abs(v_dp2.dilatation - LAMBDA ** 2) < 1e-9
          and raised)
    assert record(4, ok, f"deck periodic:{v_deck.order}, P dilatation {v_p.dilatation:.12f}, "
                         f"deck*P^2 dilatation {v_dp2.dilatation:.12f}, translation raises DoesNotCommute={raised}")


def test_criterion_5_markov(cover, P):
    lifted = lift_partition(markov_adler_weiss(cat_map()), cover, refine=True)
    rep = markov_validate(lifted, P, samples=2000)
    root = perron_root(transition_matrix(lifted, P))
    bad = markov_validate(perturb_rectangle(lifted, 0, 0.01), P, samples=2000)
    ok = rep.cover and rep.disjoint and rep.boundary and abs(root - LAMBDA) < 1e-9 and not bad.boundary
    assert record(5, ok, f"{len(lifted.rectangles)} rectangles validate, Perron root {root:.12f}, "
                         f"perturbed boundary check passes={bad.boundary}")


def test_criterion_6_model_suite(P, deck):
    t0 = time.perf_counter()
    results = {}
    for tr in [(1, 1, 0), (1, 2, 1)]:
        m = build_model_map(P, deck, make_correct_triple(*tr))
        results[tr] = (m, {c["name"]: c for c in model_suite(m, 10_000, 1000)})
    elapsed = time.perf_counter() - t0
    ok = elapsed < 30.0
    notes = []
    for tr, (m, checks) in results.items():
        ok &= all(c["passed"] for c in checks.values())
        ok &= checks["semiconjugacy"]["measured"] < 1e-12
        ok &= checks["return_map"]["measured"] <= 1e-9
        ok &= checks["return_map_pseudo_anosov"]["verdict"] == "pseudo-anosov"
        traps = [trapping_check(m, i) for i in range(2 * m.triple.nk)]
        ok &= all(r.contained and r.margin > 0 for r in traps)
        attr = max(r.final_length for r in traps if r.kind == "attractor")
        rep = max(r.final_length for r in traps if r.kind == "repeller")
        ok &= attr < 1e-10
        notes.append(f"{tr}: semiconj {checks['semiconjugacy']['measured']:.1e}, "
                     f"return {checks['return_map']['composite']} dev {checks['return_map']['measured']:.1e}, "
                     f"attractor length {attr:.1e} (repeller, inverse iterates: {rep:.1e})")
    assert record(6, ok, "; ".join(notes) + f"; runtime {elapsed:.1f}s")


def test_criterion_7_topology(cover):
    s = cover.surface
    angles = [c.angle_over_pi for c in cone_points(s)]
    seps = [c.separatrix_count for c in cone_points(s)]
    defect = gauss_bonnet_defect(s)
    ok = genus(s) == 2 and angles == [4, 4] and seps == [4, 4] and defect == 0
    assert record(7, ok, f"genus {genus(s)}, cone angles {angles} x pi, separatrices {seps}, "
                         f"Gauss-Bonnet defect {defect}")


def test_criterion_8_winding(cover, deck):
    torus = MappingTorus(deck)
    z0 = cover.branch_surface_points[0]
    w = winding_number(torus, vertical_loop(torus, z0))
    rng = np.random.default_rng(8)
    additive = 0
    for _ in range(20):
        a, na = random_loop(cover, torus, z0, rng)
        b, nb = random_loop(cover, torus, z0, rng)
        wa, wb = winding_number(torus, a), winding_number(torus, b)
        additive += (wa, wb) == (na, nb) and winding_number(torus, concatenate(a, b)) == wa + wb
    assert record(8, w == 1 and additive == 20, f"vertical loop winds {w}, additivity holds for {additive}/20 pairs")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s"]))

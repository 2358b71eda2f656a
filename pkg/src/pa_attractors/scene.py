"""Scene files, suite runners and deterministic reports."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from . import __version__
from .circle import (LiftedCircleMap, make_correct_triple, periodic_points, rotation_number,
                     verify_lift_equivariance)
from .cover import SlitCover, cover_from_dict, default_cover, invariant_slit_cover
from .errors import (DoesNotCommute, NoContinuousSheetRule, BranchSetNotInvariant, PaError,
                     ParseError, SchemaMismatch)
from .flat import (DirectionalFoliation, gauss_bonnet_defect, genus, parse_number, separatrix_rays,
                   surface_from_dict)
from .markov import (lift_partition, markov_adler_weiss, markov_validate, perron_root,
                     perturb_rectangle, transition_matrix)
from .pseudo_anosov import (CoverMap, LinearTorusMap, build_cover_map, classify_centralizer_element,
                            deck_involution, dilatation, eigen_data_interval, identity_map,
                            invariant_foliations, measure_scaling, parse_composite, random_arcs,
                            translation_control)
from .suspension import (MappingTorus, ModelMap, build_model_map, nw_components, nw_factor_property,
                         model_suite, trapping_check, vertical_loop, winding_number)

KINDS = ("circle", "surface", "pa", "centralizer", "model")
CAT = [[2, 1], [1, 1]]


class Tolerances(BaseModel):
    model_config = ConfigDict(extra="forbid")
    geometric: float = Field(1e-9, gt=0)
    semiconjugacy: float = Field(1e-12, gt=0)
    rotation: float = Field(1e-6, gt=0)


Num = Union[int, float, str]


def _num_pair(v):
    if len(v) != 2:
        raise ValueError("expected two numbers")
    return [parse_number(x) for x in v]


class CoverSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")
    slit_start: List[Num]
    slit_vector: List[Num]

    @field_validator("slit_start", "slit_vector")
    @classmethod
    def _pair(cls, v):
        _num_pair(v)
        return v


class _Base(BaseModel):
    model_config = ConfigDict(extra="forbid")


class CirclePayload(_Base):
    triple: List[int] = Field(min_length=3, max_length=3)
    iterations: int = Field(10**6, ge=1)
    rotation_seeds: int = Field(5, ge=1)


class SurfacePayload(_Base):
    polygons: Optional[List[List[List[Num]]]] = None
    gluings: Optional[List[List[int]]] = None
    isometric: bool = False
    cover: Optional[CoverSpec] = None
    foliation: Optional[List[Num]] = None
    expect_genus: Optional[int] = None
    expect_cone_angles_over_pi: Optional[List[int]] = None


class _MapPayload(_Base):
    matrix: List[List[int]] = Field(default_factory=lambda: [list(r) for r in CAT])
    cover: Optional[CoverSpec] = None
    branch: Optional[List[List[Num]]] = None

    @field_validator("matrix")
    @classmethod
    def _square(cls, v):
        if len(v) != 2 or any(len(r) != 2 for r in v):
            raise ValueError("matrix must be 2x2")
        return v


class PaControls(_Base):
    perturb_rectangle: Optional[float] = None


class PaPayload(_MapPayload):
    arcs: int = Field(100, ge=1)
    partition_samples: int = Field(2000, ge=1)
    controls: PaControls = Field(default_factory=PaControls)


class ElementSpec(_Base):
    map: Union[str, Dict[str, List[Num]]]
    expect: Optional[str] = None  # "periodic:2", "pseudo-anosov", "does-not-commute"


class CentralizerPayload(_MapPayload):
    elements: List[ElementSpec]
    samples: int = Field(200, ge=1)
    arcs: int = Field(16, ge=1)


class ModelControls(_Base):
    component_level_shift: Optional[float] = None


class ModelPayload(_MapPayload):
    J: str = "deck"
    triple: List[int] = Field(min_length=3, max_length=3)
    semiconj_samples: int = Field(10_000, ge=1)
    return_samples: int = Field(1000, ge=1)
    controls: ModelControls = Field(default_factory=ModelControls)


PAYLOADS = {"circle": CirclePayload, "surface": SurfacePayload, "pa": PaPayload,
            "centralizer": CentralizerPayload, "model": ModelPayload}


class Scene(_Base):
    kind: Literal["circle", "surface", "pa", "centralizer", "model"]
    payload: Dict[str, Any]
    seed: int = Field(0, ge=0)
    tolerances: Tolerances = Field(default_factory=Tolerances)

    def typed_payload(self):
        return PAYLOADS[self.kind].model_validate(self.payload)


def parse_scene(text: str) -> Scene:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as err:
        raise ParseError(f"invalid JSON: {err}") from err
    return scene_from_dict(doc)


def scene_from_dict(doc) -> Scene:
    if not isinstance(doc, dict):
        raise SchemaMismatch("scene must be a JSON object")
    try:
        scene = Scene.model_validate(doc)
        scene.typed_payload()
    except ValidationError as err:
        raise SchemaMismatch(_short(err)) from err
    except (ValueError, ZeroDivisionError) as err:
        raise ParseError(str(err)) from err
    return scene


def _short(err: ValidationError) -> str:
    parts = []
    for e in err.errors():
        loc = ".".join(str(x) for x in e["loc"])
        parts.append(f"{loc}: {e['msg']}")
    return "; ".join(parts)


def load_scene(path) -> Scene:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as err:
        raise ParseError(f"cannot read {path}: {err}") from err
    return parse_scene(text)


# reports ---------------------------------------------------------------------------

def _clean(x):
    if isinstance(x, Fraction):
        return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    return x


@dataclass
class Report:
    kind: str
    scene: dict
    checks: List[dict]
    tables: Dict[str, List[dict]] = field(default_factory=dict)
    render: Dict[str, Any] = field(default_factory=dict)
    seed: int = 0
    tolerances: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c["passed"] for c in self.checks)

    @property
    def failed(self) -> List[str]:
        return [c["name"] for c in self.checks if not c["passed"]]

    def to_dict(self) -> dict:
        return _clean({"kind": self.kind, "scene": self.scene, "passed": self.passed,
                       "failed_checks": self.failed, "checks": self.checks, "tables": self.tables,
                       "render": self.render,
                       "provenance": {"tool": "pa-attractors", "version": __version__,
                                      "seed": self.seed, "tolerances": self.tolerances}})

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"


def check(name: str, passed: bool, measured=None, **extra) -> dict:
    out = {"name": name, "passed": bool(passed), "measured": measured}
    out.update(extra)
    return out


# builders ---------------------------------------------------------------------

def build_cover(p: _MapPayload) -> SlitCover:
    if p.cover is not None:
        return cover_from_dict(p.cover.model_dump())
    if p.branch is not None:
        if len(p.branch) != 2:
            raise SchemaMismatch("branch must list exactly two points")
        b1, b2 = (_num_pair(b) for b in p.branch)
        return invariant_slit_cover(p.matrix, b1, b2)
    return default_cover()


def named_maps(p: _MapPayload, cover: SlitCover) -> Dict[str, CoverMap]:
    P = build_cover_map(LinearTorusMap(p.matrix), cover, name="P")
    named = {"P": P, "deck": deck_involution(cover), "id": identity_map(cover)}
    try:
        named["neg"] = build_cover_map(LinearTorusMap(((-1, 0), (0, -1))), cover, name="neg")
    except PaError:
        pass
    return named


def resolve_map(spec, named, cover) -> CoverMap:
    if isinstance(spec, dict):
        if set(spec) != {"translation"}:
            raise SchemaMismatch(f"unknown map object keys {sorted(spec)}")
        return translation_control(cover, _num_pair(spec["translation"]))
    return parse_composite(spec, named)


# runners ------------------------------------------------------------------------

def run_circle(scene: Scene) -> Report:
    p = scene.typed_payload()
    t = make_correct_triple(*p.triple)
    tol = scene.tolerances
    recs = periodic_points(t)
    size = 2 * t.nk
    checks = [check("periodic_count", len(recs) == size, len(recs), expected=size)]
    loc_err = max(abs(r.point.theta - r.index / size) for r in recs)
    checks.append(check("periodic_locations", loc_err < tol.semiconjugacy, loc_err))
    bad_period = [r.index for r in recs if r.period != t.k]
    checks.append(check("periods", not bad_period, t.k, datum=bad_period or None))
    mult_err = max(abs(r.multiplier - (1.5 if r.index % 2 == 0 else 0.5) ** t.k) for r in recs)
    checks.append(check("multipliers", mult_err < tol.semiconjugacy, mult_err))
    res = max(r.residual for r in recs)
    checks.append(check("residuals", res < tol.semiconjugacy, res))
    lift = LiftedCircleMap.from_triple(t)
    checks.append(check("lift_equivariance", verify_lift_equivariance(lift, 1000, tol.geometric, scene.seed),
                        True))
    rng = np.random.default_rng(scene.seed)
    starts = rng.uniform(0.0, 1.0, p.rotation_seeds)
    ests = [rotation_number(lift, float(r0), p.iterations) for r0 in starts]
    err = max(abs(e - t.l / t.k) for e in ests)
    checks.append(check("rotation_number", err < tol.rotation, float(np.mean(ests)),
                        expected=Fraction(t.l, t.k), margin=tol.rotation - err))
    rows = [r.as_row() for r in recs]
    return Report("circle", {"triple": t.as_list(), "iterations": p.iterations}, checks,
                  {"periodic_points": rows},
                  {"cobweb": {"triple": t.as_list()}, "rotation": {"triple": t.as_list(), "seed": scene.seed}},
                  scene.seed, tol.model_dump())


def run_surface(scene: Scene) -> Report:
    p = scene.typed_payload()
    if p.cover is not None:
        cover = cover_from_dict(p.cover.model_dump())
        s = cover.surface
        summary = {"cover": cover.to_dict()}
    elif p.polygons is not None and p.gluings is not None:
        s = surface_from_dict({"polygons": p.polygons, "gluings": p.gluings}, isometric=p.isometric)
        summary = {"polygons": len(p.polygons), "isometric": p.isometric}
    else:
        raise SchemaMismatch("surface payload needs either cover or polygons+gluings")
    g = genus(s)
    cones = s.cone_points()
    angles = sorted(c.angle_over_pi for c in cones)
    defect = gauss_bonnet_defect(s)
    exact = not s.isometric
    checks = [check("gauss_bonnet", defect == 0 if exact else abs(defect) < 1e-9, defect)]
    if p.expect_genus is not None:
        checks.append(check("genus", g == p.expect_genus, g, expected=p.expect_genus))
    if p.expect_cone_angles_over_pi is not None:
        checks.append(check("cone_angles", angles == sorted(p.expect_cone_angles_over_pi), angles,
                            expected=sorted(p.expect_cone_angles_over_pi)))
    render = {}
    if p.foliation is not None and not s.isometric:
        f = DirectionalFoliation(tuple(float(parse_number(x)) for x in p.foliation))
        seps = [len(separatrix_rays(s, f, c)) for c in cones]
        checks.append(check("separatrices", seps == [c.separatrix_count for c in cones], seps,
                            expected=[c.separatrix_count for c in cones]))
        render["foliation"] = {"source": "surface", "scene": scene.payload}
    rows = [{"cone": i, "angle_over_pi": c.angle_over_pi, "corners": len(c.corners),
             "x": float(c.location[0]), "y": float(c.location[1])} for i, c in enumerate(cones)]
    summary.update({"genus": g, "euler_characteristic": s.euler_characteristic(),
                    "vertices": s.vertex_count, "edges": s.edge_count, "faces": s.face_count})
    return Report("surface", summary, checks, {"cone_points": rows}, render, scene.seed,
                  scene.tolerances.model_dump())


def run_pa(scene: Scene) -> Report:
    p = scene.typed_payload()
    tol = scene.tolerances
    base = LinearTorusMap(p.matrix)
    cover = build_cover(p)
    checks = []
    try:
        P = build_cover_map(base, cover, name="P")
    except (BranchSetNotInvariant, NoContinuousSheetRule) as err:
        checks.append(check("lift_exists", False, None, datum=str(err)))
        return Report("pa", {"matrix": p.matrix, "cover": cover.to_dict()}, checks, seed=scene.seed,
                      tolerances=tol.model_dump())
    checks.append(check("lift_exists", True, True))
    lam = dilatation(base)
    enclosure = eigen_data_interval(p.matrix)
    slack = 4 * np.finfo(float).eps * lam  # double rounding of the closed form
    checks.append(check("dilatation_enclosure", float(enclosure.a) - slack <= lam <= float(enclosure.b) + slack, lam,
                        interval=[float(enclosure.a), float(enclosure.b)]))
    fols = invariant_foliations(base)
    arcs = random_arcs(cover, p.arcs, scene.seed)
    sc = measure_scaling(P, fols, arcs)
    worst_s = worst_u = 0.0
    s = cover.surface
    from .flat import transversal_measure
    from .pseudo_anosov import image_arc
    for a in arcs:
        img = image_arc(P, a, tol.geometric)
        rs = transversal_measure(s, fols.stable, img) / transversal_measure(s, fols.stable, a)
        ru = transversal_measure(s, fols.unstable, img) / transversal_measure(s, fols.unstable, a)
        worst_s = max(worst_s, abs(rs - lam))
        worst_u = max(worst_u, abs(ru - 1 / lam))
    checks.append(check("stable_measure_scaling", worst_s < tol.geometric, sc.nu_s, expected=lam,
                        max_deviation=worst_s))
    checks.append(check("unstable_measure_scaling", worst_u < tol.geometric, sc.nu_u, expected=1 / lam,
                        max_deviation=worst_u))
    prod_err = abs(sc.nu_s * sc.nu_u - 1)
    checks.append(check("measure_product", prod_err < tol.geometric, sc.nu_s * sc.nu_u))
    part = markov_adler_weiss(base)
    lifted = lift_partition(part, cover, refine=True)
    if p.controls.perturb_rectangle is not None:
        lifted = perturb_rectangle(lifted, 0, p.controls.perturb_rectangle)
    rep = markov_validate(lifted, P, p.partition_samples, scene.seed, tol.geometric)
    checks.append(check("markov_cover", rep.cover, rep.area, datum=rep.details))
    checks.append(check("markov_disjoint", rep.disjoint, rep.details["overlap_area"]))
    checks.append(check("markov_boundary", rep.boundary,
                        rep.details["stable_side_failures"] + rep.details["unstable_side_failures"]))
    A = transition_matrix(lifted, P)
    root = perron_root(A)
    checks.append(check("perron_eigenvalue", abs(root - lam) < tol.geometric, root, expected=lam))
    rows = [{"rectangle": i, "sheet": r.sheet, "area": r.area,
             **{f"x{j}": c[0] for j, c in enumerate(r.corners)},
             **{f"y{j}": c[1] for j, c in enumerate(r.corners)}} for i, r in enumerate(lifted.rectangles)]
    trans = [{"from": i, **{f"to{j}": int(A[i, j]) for j in range(A.shape[1])}} for i in range(A.shape[0])]
    summary = {"matrix": p.matrix, "cover": cover.to_dict(), "dilatation": lam,
               "rectangles": len(lifted.rectangles)}
    render = {"foliation": {"source": "cover", "cover": cover.to_dict(), "matrix": p.matrix},
              "partition": {"cover": cover.to_dict(), "matrix": p.matrix,
                            "perturb": p.controls.perturb_rectangle}}
    return Report("pa", summary, checks, {"rectangles": rows, "transition_matrix": trans}, render,
                  scene.seed, tol.model_dump())


def _expectation(v) -> str:
    if v.kind == "periodic":
        return f"periodic:{v.order}"
    return "pseudo-anosov"


def run_centralizer(scene: Scene) -> Report:
    p = scene.typed_payload()
    tol = scene.tolerances
    cover = build_cover(p)
    named = named_maps(p, cover)
    P = named["P"]
    fols = invariant_foliations(P)
    arcs = random_arcs(cover, p.arcs, scene.seed)
    checks, rows = [], []
    for el in p.elements:
        label = el.map if isinstance(el.map, str) else json.dumps(el.map, sort_keys=True)
        q = resolve_map(el.map, named, cover)
        try:
            v = classify_centralizer_element(q, P, fols, arcs, p.samples, scene.seed, tol.geometric)
            got = _expectation(v)
            sc = measure_scaling(q, fols, arcs)
            prod = sc.nu_s * sc.nu_u
        except DoesNotCommute:
            v, got, prod = None, "does-not-commute", None
        ok = got == el.expect if el.expect is not None else got != "does-not-commute"
        checks.append(check(f"classify[{label}]", ok, got, expected=el.expect,
                            dilatation=None if v is None else v.dilatation))
        if prod is not None:
            checks.append(check(f"nu_product[{label}]", abs(prod - 1) < tol.geometric, prod))
        rows.append({"element": label, "verdict": got,
                     "order": None if v is None else v.order,
                     "dilatation": None if v is None else v.dilatation,
                     "nu": None if v is None else v.nu})
    return Report("centralizer", {"matrix": p.matrix, "cover": cover.to_dict(),
                                  "elements": len(p.elements)},
                  checks, {"verdicts": rows}, {}, scene.seed, tol.model_dump())


def run_model(scene: Scene) -> Report:
    p = scene.typed_payload()
    tol = scene.tolerances
    cover = build_cover(p)
    named = named_maps(p, cover)
    P = named["P"]
    J = parse_composite(p.J, named)
    t = make_correct_triple(*p.triple)
    m = build_model_map(P, J, t, seed=scene.seed)
    rows = model_suite(m, p.semiconj_samples, p.return_samples, scene.seed,
                          tol.semiconjugacy, tol.geometric)
    if p.controls.component_level_shift is not None:
        shifted = ModelMap(P, J, t, level_shift=p.controls.component_level_shift, verdict=m.verdict)
        nw = nw_factor_property(shifted, 50, scene.seed)
        rows = [r for r in rows if r["name"] != "nw_factor_property"]
        rows.append(check("nw_factor_property", nw, nw,
                          datum={"level_shift": p.controls.component_level_shift}))
    torus = MappingTorus(J)
    fixed = [b for b in cover.branch_surface_points if cover.distance(J(b), b) <= tol.geometric]
    if fixed:
        w = winding_number(torus, vertical_loop(torus, fixed[0]))
        rows.append(check("vertical_loop_winding", w == 1, w, expected=1))
    traps = [trapping_check(m, c.index).as_row() for c in nw_components(m)]
    comps = [{"component": c.index, "level": c.level, "kind": c.kind, "period": c.period,
              "margin": tr["margin"]} for c, tr in zip(nw_components(m), traps)]
    summary = {"matrix": p.matrix, "cover": cover.to_dict(), "J": p.J, "triple": t.as_list(),
               "return_map": m.return_composite.name}
    return Report("model", summary, rows, {"components": comps, "trapping": traps},
                  {"components": {"triple": t.as_list(), "J": p.J}}, scene.seed, tol.model_dump())


RUNNERS = {"circle": run_circle, "surface": run_surface, "pa": run_pa,
           "centralizer": run_centralizer, "model": run_model}


def run_scene(scene: Scene) -> Report:
    return RUNNERS[scene.kind](scene)


def default_scenes() -> Dict[str, dict]:
    """Built-in scenes used by the ``all`` subcommand and shipped as examples."""
    cover = {"slit_start": ["4/5", "3/5"], "slit_vector": ["2/5", "4/5"]}
    return {
        "circle": {"kind": "circle", "payload": {"triple": [1, 2, 1]}, "seed": 0},
        "surface": {"kind": "surface", "seed": 0,
                    "payload": {"cover": cover, "foliation": ["0.85065080835204", "-0.52573111211913"],
                                "expect_genus": 2, "expect_cone_angles_over_pi": [4, 4]}},
        "pa": {"kind": "pa", "seed": 0, "payload": {"matrix": CAT, "cover": cover}},
        "centralizer": {"kind": "centralizer", "seed": 0, "payload": {
            "matrix": CAT, "cover": cover,
            "elements": [{"map": "deck", "expect": "periodic:2"},
                         {"map": "P", "expect": "pseudo-anosov"},
                         {"map": "deck*P^2", "expect": "pseudo-anosov"},
                         {"map": {"translation": ["1/7", "0"]}, "expect": "does-not-commute"}]}},
        "model": {"kind": "model", "seed": 0, "payload": {
            "matrix": CAT, "cover": cover, "J": "deck", "triple": [1, 2, 1]}},
    }

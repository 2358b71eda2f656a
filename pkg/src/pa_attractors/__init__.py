"""Attractor models built from pseudo-Anosov maps and Morse-Smale circle maps."""

__version__ = "0.1.0"

from .circle import (CirclePoint, CorrectTriple, LiftedCircleMap, circle_apply, lift_eval,  # noqa: E402
                     make_correct_triple, periodic_points, rotation_number)
from .cover import SlitCover, default_cover, invariant_slit_cover, slit_double_cover  # noqa: E402
from .flat import (DirectionalFoliation, PlanarPolygon, StraightArc, SurfacePoint,  # noqa: E402
                   TranslationSurface, build_surface, cone_points, genus, normalize_point,
                   render_foliation, trace_arc, transversal_measure)
from .pseudo_anosov import (CentralizerVerdict, CoverMap, LinearTorusMap, build_cover_map,  # noqa: E402
                            cat_map, classify_centralizer_element, commutes, deck_involution,
                            dilatation, invariant_foliations, measure_scaling, periodic_points_torus)
from .suspension import (FiberPoint, MappingTorus, ModelMap, QuotientPoint, build_model_map,  # noqa: E402
                         h_projection, model_apply, normalize, nw_components, quotient_equal,
                         trapping_check, winding_number)

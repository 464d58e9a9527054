"""gradedmin: variational certificates on graded seminorm truncations.

Executable machinery for seminorm families and their bounded metric,
bornology dual seminorms of numerical differentials, chart-based Finsler
structures with path-optimized pseudometrics, penalized variational
searches with grid-verified witnesses, Palais-Smale checking, and
certified minimizing-sequence drivers.
"""

__version__ = "0.1.0"

from .space import (Bornology, GradedPoint, SeminormFamily, eval_seminorm,
                    graded_metric, point, validate_bornology)
from .calculus import (C1Config, DifferenceScheme, DifferentialRep, Functional,
                       check_c1, differential, dual_seminorm,
                       gateaux_derivative)
from .finsler import (Chart, CompatibilityConstants, Curve, FinslerStructure,
                      PathOptConfig, TangentRule, curve_length,
                      dual_finsler_norm, estimate_compatibility, finsler_metric,
                      finsler_norm, pseudometric, verify_finsler_axioms)
from .ekeland import (EVPConfig, EkelandWitness, PenaltySpec, ekeland_search,
                      qiu_search, verify_witness)
from .psmin import (CriticalCertificate, DriverConfig, FlatSetting,
                    ManifoldSetting, PSReport, PSTolerances, SequenceGenerator,
                    cluster_point, frechet_min_step, manifold_min_step,
                    minimizing_sequence_driver, ps_check)
from .util import Box

__all__ = [
    "__version__", "Box",
    "Bornology", "GradedPoint", "SeminormFamily", "eval_seminorm",
    "graded_metric", "point", "validate_bornology",
    "C1Config", "DifferenceScheme", "DifferentialRep", "Functional",
    "check_c1", "differential", "dual_seminorm", "gateaux_derivative",
    "Chart", "CompatibilityConstants", "Curve", "FinslerStructure",
    "PathOptConfig", "TangentRule", "curve_length", "dual_finsler_norm",
    "estimate_compatibility", "finsler_metric", "finsler_norm", "pseudometric",
    "verify_finsler_axioms",
    "EVPConfig", "EkelandWitness", "PenaltySpec", "ekeland_search",
    "qiu_search", "verify_witness",
    "CriticalCertificate", "DriverConfig", "FlatSetting", "ManifoldSetting",
    "PSReport", "PSTolerances", "SequenceGenerator", "cluster_point",
    "frechet_min_step", "manifold_min_step", "minimizing_sequence_driver",
    "ps_check",
]

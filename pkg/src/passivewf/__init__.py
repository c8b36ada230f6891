"""Numerical checks of microlocal properties of passive (ground and KMS) states.

Modules:

* :mod:`passivewf.geometry`   spacetime models, null covectors, bicharacteristics, the set R
* :mod:`passivewf.states`     single-mode, field and matrix states; n-point functions
* :mod:`passivewf.microlocal` oscillatory-integral decay scans and classification
* :mod:`passivewf.passivity`  ground, KMS and trace certification; passive mixtures
* :mod:`passivewf.cli`        scenario runner
"""
__version__ = "0.1.0"

from .geometry import (CovectorPoint, SpacetimeModel, causally_separated, cauchy_intersection, classify_null,
                       cylinder, in_R, integrate_bicharacteristic, minkowski_1p1, minkowski_1p3, null_form, related)
from .microlocal import (DecayReport, DirectionGrid, ScanConfig, WFConfig, acs_scan, fit_decay,
                         oscillatory_integral, wf_pair_scan, wf_scan, wf_to_R_compare)
from .passivity import (PassiveMixture, SpectralTestFunction, exp_suppression_probe, ground_check, kms_check, mix,
                        trace_check)
from .states import (CorrelationKernel, FieldState, MatrixTrace, Mixture, SingleModeState, SmearingFunction,
                     field_two_point, matrix_trace_corr, quasifree_npoint, single_mode_corr, wave_residual)

__all__ = [
    "CovectorPoint", "SpacetimeModel", "causally_separated", "cauchy_intersection", "classify_null", "cylinder",
    "in_R", "integrate_bicharacteristic", "minkowski_1p1", "minkowski_1p3", "null_form", "related",
    "DecayReport", "DirectionGrid", "ScanConfig", "WFConfig", "acs_scan", "fit_decay", "oscillatory_integral",
    "wf_pair_scan", "wf_scan", "wf_to_R_compare",
    "PassiveMixture", "SpectralTestFunction", "exp_suppression_probe", "ground_check", "kms_check", "mix",
    "trace_check",
    "CorrelationKernel", "FieldState", "MatrixTrace", "Mixture", "SingleModeState", "SmearingFunction",
    "field_two_point", "matrix_trace_corr", "quasifree_npoint", "single_mode_corr", "wave_residual",
]

"""Numerical Riemannian curvature toolkit.

Pointwise tensor algebra (``tensor_core``), curvature of chart metrics
(``curvature_engine``), a catalogue of test metrics (``metric_zoo``),
closed-form pinching constants (``constants``), randomized inequality
campaigns (``inequality_lab``), pinching audits (``pinching_audit``) and
the command-line front end (``cli``).
"""

from . import constants, curvature_engine, inequality_lab, metric_zoo, pinching_audit, tensor_core

__version__ = "0.1.0"

__all__ = ["constants", "curvature_engine", "inequality_lab", "metric_zoo", "pinching_audit",
           "tensor_core", "__version__"]

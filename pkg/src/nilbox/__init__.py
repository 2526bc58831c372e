"""Nilpotent singularities of planar vector fields.

Unit-time maps by Picard iteration, characteristic curves and maps,
classification, separatrix expansions, box dimensions of discrete orbits,
charts at infinity and Poincare return maps.
"""
__version__ = "0.1.0"

from .system_model import InputError, PlanarSystem, char_data, parse_system, system_from_terms  # noqa: E402
from .classifier import classify  # noqa: E402

__all__ = ["InputError", "PlanarSystem", "char_data", "classify", "parse_system", "system_from_terms", "__version__"]

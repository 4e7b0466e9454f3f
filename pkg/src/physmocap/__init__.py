"""Physics-based motion refinement for sparse inertial motion capture."""

__version__ = "0.1.0"

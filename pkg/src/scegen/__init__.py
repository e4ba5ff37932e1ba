"""scegen: three-stage scenario generation for uncontrolled intersections."""

__version__ = "0.1.0"

"""Diagram rewriting for virtual and welded links.

Local moves (Reidemeister, virtual, forbidden, H(n), CF) as data-driven
tangle replacements on combinatorial maps, constructive unknotting
pipelines emitting certificate traces, and an independent trace checker.
"""

from .diagram import (
    Diagram,
    VlinkError,
    canonical_form,
    component_count,
    components,
    face_count,
    faces,
    gauss_code,
    parse_diagram,
    serialize_diagram,
    validate,
)

__all__ = [
    "Diagram",
    "VlinkError",
    "canonical_form",
    "component_count",
    "components",
    "face_count",
    "faces",
    "gauss_code",
    "parse_diagram",
    "serialize_diagram",
    "validate",
]

__version__ = "0.1.0"

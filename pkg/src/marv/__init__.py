"""Engine for immersive analysis of time-step series of per-fiber data.

Turns tabular fiber studies into three linked chart layouts plus 3D
fiber geometry, exposed through a canonical scene document and a
request/patch wire protocol that any viewer can speak.
"""
from .ingest import (
    Attribute,
    Dataset,
    GeometryBinding,
    StudySeries,
    generate_synthetic,
    load_manifest,
    write_study,
)
from .session import Session, replay
from .stats import attribute_stats, drift_matrix

__version__ = "0.1.0"

__all__ = [
    "Attribute",
    "Dataset",
    "GeometryBinding",
    "StudySeries",
    "Session",
    "attribute_stats",
    "drift_matrix",
    "generate_synthetic",
    "load_manifest",
    "replay",
    "write_study",
    "__version__",
]

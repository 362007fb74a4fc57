"""Analytic zero-set mesh extraction from trilinear hash-encoded SDF networks."""

from .extractor import (
    EdgeCorners,
    ExtractedMesh,
    ExtractionConfig,
    extract,
    intersect_edge,
)
from .hashgrid import FeatureTables, HashGridSpec, corner_hash, encode, grid_marks
from .network import NetworkWeights, SdfNetwork
from .weightfile import load_network, load_weights, save_weights

__all__ = [
    "EdgeCorners",
    "ExtractedMesh",
    "ExtractionConfig",
    "FeatureTables",
    "HashGridSpec",
    "NetworkWeights",
    "SdfNetwork",
    "corner_hash",
    "encode",
    "extract",
    "grid_marks",
    "intersect_edge",
    "load_network",
    "load_weights",
    "save_weights",
]

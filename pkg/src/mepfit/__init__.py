"""Hierarchical Bayesian estimation of MEP recruitment curves."""

from .curves import CurveKind, CurveParams
from .data import MepDataset, load_csv, summarize
from .hierarchy import HierarchyMode, ModelSpec, Pooling, PriorConfig, build
from .nuts import NutsConfig
from .observation import MixtureConfig, MixtureParams, ObservationParams
from .posterior import PosteriorSamples, point_estimate, sample_posterior

__version__ = "0.1.0"

__all__ = [
    "CurveKind",
    "CurveParams",
    "MepDataset",
    "load_csv",
    "summarize",
    "HierarchyMode",
    "ModelSpec",
    "Pooling",
    "PriorConfig",
    "build",
    "NutsConfig",
    "MixtureConfig",
    "MixtureParams",
    "ObservationParams",
    "PosteriorSamples",
    "point_estimate",
    "sample_posterior",
    "__version__",
]

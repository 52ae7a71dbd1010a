"""ELM-based three-class chest X-ray classification.

Stage one (:mod:`covelm.preprocess`) resizes, normalises and applies CLAHE;
stage two (:mod:`covelm.features`) reduces the image to 168 texture and
frequency statistics; stage three (:mod:`covelm.elm`) is an Extreme
Learning Machine solved in closed form. :mod:`covelm.evaluation` and
:mod:`covelm.metrics` implement the cross-validated evaluation.
"""
__version__ = "0.1.0"

from ._kernels import BACKEND
from .elm import CLASSES, ElmModel, predict, train
from .errors import (
    CovElmError,
    DegenerateCurve,
    InvalidInput,
    IoError,
    LayoutMismatch,
    NumericalFailure,
    ParseError,
    VersionError,
)
from .features import LAYOUT_DIGEST, extract_features, select_subset
from .preprocess import GrayImage, preprocess_pipeline

__all__ = [
    "BACKEND",
    "CLASSES",
    "CovElmError",
    "DegenerateCurve",
    "ElmModel",
    "GrayImage",
    "InvalidInput",
    "IoError",
    "LAYOUT_DIGEST",
    "LayoutMismatch",
    "NumericalFailure",
    "ParseError",
    "VersionError",
    "extract_features",
    "predict",
    "preprocess_pipeline",
    "select_subset",
    "train",
]

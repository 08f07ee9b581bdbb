"""Python bindings for quickseg: everything-mode segmentation, prompting, edges, evaluation."""

import json

from ._quickseg import (
    BackendError,
    BoundingBox,
    CapacityError,
    ConfigError,
    DimensionError,
    EmbeddingBackend,
    Error,
    InferenceBackend,
    InputError,
    MalformedRleError,
    MockBackend,
    MockEmbeddingBackend,
    OnnxBackend,
    Scene,
    SchemaError,
    SegmentCache,
    box_iou,
    mask_iou,
    rle_counts_from_string,
    rle_counts_to_string,
    segment_everything,
)
from . import _quickseg

__version__ = "0.1.0"


def rle_encode(mask):
    """Boolean (H, W) array to a COCO compressed RLE dict."""
    return json.loads(_quickseg.rle_encode(mask))


def rle_decode(rle):
    """COCO RLE dict (string or integer counts) to a boolean (H, W) array."""
    return _quickseg.rle_decode(json.dumps(rle))


def everything(cache):
    """Everything-mode document of a SegmentCache as a dict."""
    return json.loads(cache.to_json())


def prompt(cache, spec, embedder=None, closing_iterations=1):
    """Run a prompt dict ({"points"|"box"|"text": ...}) against a cache.

    Returns (indices, candidate_scores, mask).
    """
    return cache.prompt(json.dumps(spec), embedder, closing_iterations)


def proposal_report(annotations, proposals, budgets=(10, 100, 1000), iou_type="bbox"):
    """AR/AUC report from COCO-style annotation and proposal dicts (or lists)."""
    return json.loads(_quickseg.proposal_report(json.dumps(annotations), json.dumps(proposals), list(budgets), iou_type))


def edge_report(predictions, ground_truth, tolerance=-1.0, thresholds=50):
    """ODS/OIS/AP/R50 report from float edge maps and boolean ground-truth maps."""
    return json.loads(_quickseg.edge_report(list(predictions), list(ground_truth), tolerance, thresholds))


__all__ = [
    "BackendError", "BoundingBox", "CapacityError", "ConfigError", "DimensionError", "EmbeddingBackend",
    "Error", "InferenceBackend", "InputError", "MalformedRleError", "MockBackend", "MockEmbeddingBackend",
    "OnnxBackend", "Scene", "SchemaError", "SegmentCache", "box_iou", "edge_report", "everything", "mask_iou",
    "prompt", "proposal_report", "rle_counts_from_string", "rle_counts_to_string", "rle_decode", "rle_encode",
    "segment_everything",
]

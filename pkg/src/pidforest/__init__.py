"""Anomaly detection by partial identification: sparsity forests and exact oracles."""

from pidforest.core import (
    AttributeSpec,
    Dataset,
    Interval,
    Kind,
    ModelFormatError,
    NormalizationTransform,
    SchemaError,
    Subcube,
    normalize,
    sparsity,
)
from pidforest.forest import (
    Forest,
    HyperParams,
    ScoreReport,
    TreeNode,
    deserialize,
    fit,
    score,
    serialize,
)

__all__ = [
    "AttributeSpec",
    "Dataset",
    "Forest",
    "HyperParams",
    "Interval",
    "Kind",
    "ModelFormatError",
    "NormalizationTransform",
    "SchemaError",
    "ScoreReport",
    "Subcube",
    "TreeNode",
    "deserialize",
    "fit",
    "normalize",
    "score",
    "serialize",
    "sparsity",
]

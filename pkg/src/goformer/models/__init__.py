"""Residual and EfficientFormer-style policy/value networks."""

from goformer.models.layers import Module
from goformer.models.network import (
    PRESETS,
    EfficientFormerConfig,
    EfficientNet,
    Network,
    PolicyValueOutput,
    ResidualConfig,
    ResidualNet,
    build_efficientformer,
    build_network,
    build_residual,
    forward,
    load_network,
    parameter_breakdown,
    parameter_count,
    parse_descriptor,
    predict,
)

__all__ = [
    "PRESETS",
    "EfficientFormerConfig",
    "EfficientNet",
    "Module",
    "Network",
    "PolicyValueOutput",
    "ResidualConfig",
    "ResidualNet",
    "build_efficientformer",
    "build_network",
    "build_residual",
    "forward",
    "load_network",
    "parameter_breakdown",
    "parameter_count",
    "parse_descriptor",
    "predict",
]

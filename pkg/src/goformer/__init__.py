"""Go policy/value networks: Residual and EfficientFormer-style models, search and tooling."""

__version__ = "0.1.0"

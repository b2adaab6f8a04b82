"""Errors raised while fusing predictions."""


class FusionError(ValueError):
    """Records for one image cannot be fused."""

"""Secretary problems whose choices are constrained by greedoids, matroids and antimatroids."""

from .errors import DomainError, GreedoidSecretaryError, SizeLimitError, StructuralError

__version__ = "0.1.0"

__all__ = ["DomainError", "GreedoidSecretaryError", "SizeLimitError", "StructuralError", "__version__"]

"""Tree-search planners for tabletop object retrieval and rearrangement."""
from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "__version__"]

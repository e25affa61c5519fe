"""Toy-scale learned enhancement stage for voxpost pipeline outputs."""

from .train import EnhancerConfig, train  # noqa: F401
from .infer import enhance, load_model  # noqa: F401

__version__ = "0.1.0"

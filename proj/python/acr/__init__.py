"""Adaptive confidence regularization for multimodal failure detection.

Thin Python layer over the C++ core: confidence scorers, selective
classification metrics, embedding-space outlier synthesis and the
synthetic-benchmark trainer.
"""

from ._acr import *  # noqa: F401,F403
from ._acr import default_config, run_experiment

__all__ = [name for name in dir() if not name.startswith("_")]


def run(**overrides):
    """Runs one experiment with the default config updated by ``overrides``."""
    config = default_config()
    config.update(overrides)
    return run_experiment(config)

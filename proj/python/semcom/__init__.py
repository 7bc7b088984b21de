"""Semantic-communication simulator: adaptive-depth transformer codec plus
classical Turbo/RS + 64-QAM baselines over simulated AWGN/Rayleigh channels."""

try:
    from ._semcom import *  # noqa: F401,F403  (installed package layout)
except ImportError:  # pragma: no cover - build-tree layout
    from _semcom import *  # noqa: F401,F403

__version__ = "0.1.0"

"""Numerical toolkit for bipartite nonlocal-game strategies.

Submodules:

* ``linalg`` - tensor products, partial traces, Hermitian spectral data
* ``games`` - games, strategies, correlations, winning probabilities
* ``schmidt`` - Schmidt decomposition, supports, purification, restriction
* ``metrics`` - state-dependent support and projectivity defects
* ``naimark`` - Naimark dilations of POVM families and strategies
* ``dilation`` - local-dilation witnesses and residuals in three forms
* ``lab`` - CHSH/trine worked examples, eigengap bounds, operator moments
* ``serialize`` / ``cli`` - wire formats and the command-line surface
"""

from . import dilation, games, lab, linalg, metrics, naimark, schmidt, serialize
from .games import Correlation, NonlocalGame, Strategy

__all__ = [
    "Correlation",
    "NonlocalGame",
    "Strategy",
    "dilation",
    "games",
    "lab",
    "linalg",
    "metrics",
    "naimark",
    "schmidt",
    "serialize",
]

__version__ = "0.1.0"

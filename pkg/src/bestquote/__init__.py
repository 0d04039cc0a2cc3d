"""Stationary laws of the volume at the best quote of a limit order book.

Analytic solvers for a catalogue of Markovian best-quote models built by
killing and resurrecting a birth-death-with-batches process, an event-driven
simulator of the unrestricted mechanism, estimation of the order-flow
parameters from event logs, and a comparison harness.
"""

from .dists import DiscreteDist, DistFamily, from_weights, l2_distance, linf_distance, make_family
from .errors import (BestQuoteError, ConvergenceError, ParameterError, ParseError,
                     TruncationError)
from .params import FlowParams, calibrate_thetas, resurrection_mix
from .stationary import MODEL_IDS, StationaryResult, model_params, solve

__version__ = "0.1.0"

__all__ = [
    "BestQuoteError", "ConvergenceError", "DiscreteDist", "DistFamily", "FlowParams", "MODEL_IDS",
    "ParameterError", "ParseError", "StationaryResult", "TruncationError", "calibrate_thetas",
    "from_weights", "l2_distance", "linf_distance", "make_family", "model_params",
    "resurrection_mix", "solve",
]

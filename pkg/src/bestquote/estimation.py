"""Order-flow parameter estimation from classified event logs.

Logs are CSV with header ``timestamp,kind,size,best_volume,second_volume``.
The five flow kinds drive the rates; ``CANCEL_BEST``/``CANCEL_BOOK`` rows are
accepted so that simulator logs round-trip with their volume columns intact,
but cancellation rates are not counted directly, they come out of the flow
balance instead.

Sizes and volumes are measured in units of the mean partial-market-order size
(rounded half-up, floor one share) before any distribution is fitted.
"""

from __future__ import annotations

import csv
import io
import math
import os
import re
import warnings
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Iterator

import numpy as np

from .dists import DiscreteDist, DistFamily, from_weights
from .errors import EmptyInputError, OrderingError, ParameterError, ParseError
from .params import FlowParams, calibrate_theta1, calibrate_theta2

FLOW_KINDS = ("LIMIT_SPREAD", "LIMIT_BEST", "LIMIT_BOOK", "MARKET_PARTIAL", "MARKET_AGGRESSIVE")
AUX_KINDS = ("CANCEL_BEST", "CANCEL_BOOK")
HEADER = ("timestamp", "kind", "size", "best_volume", "second_volume")
DAY = 86400.0
DEFAULT_WINDOW = (10 * 3600.0, 16 * 3600.0)
ROUNDING_RULE = "half-up, floor 1"

# rate field and size symbol per flow kind
_RATE = {"LIMIT_SPREAD": "lambda0", "LIMIT_BEST": "lambda1", "LIMIT_BOOK": "lambda2",
         "MARKET_PARTIAL": "mu", "MARKET_AGGRESSIVE": "muA"}
_SIGMA = {"LIMIT_SPREAD": "sigma0", "LIMIT_BEST": "sigma1", "LIMIT_BOOK": "sigma2",
          "MARKET_PARTIAL": "sigma_mu", "MARKET_AGGRESSIVE": "sigma_muA"}


class EstimabilityWarning(UserWarning):
    """Some parameters could not be identified from the log."""


@dataclass(frozen=True)
class FlowEvent:
    timestamp: float
    kind: str
    size: int
    best_volume: int | None = None
    second_volume: int | None = None

    def __post_init__(self):
        if self.kind not in FLOW_KINDS and self.kind not in AUX_KINDS:
            raise ParameterError(f"unknown event kind {self.kind!r}")
        if self.size < 1:
            raise ParameterError("event size must be >= 1")


@dataclass
class SessionStats:
    """Summary of the estimation window(s), all sizes in rescaled units."""

    duration: float
    counts: dict
    mean_sizes: dict
    L1: float | None
    L2: float | None
    scale: float = 1.0
    sessions: int = 1
    flags: list = field(default_factory=list)
    best_time: DiscreteDist | None = None
    best_event: DiscreteDist | None = None
    second_time: DiscreteDist | None = None

    @property
    def type0_only(self) -> bool:
        return "type0-only" in self.flags

    def to_dict(self) -> dict:
        return {"duration": self.duration, "counts": dict(self.counts), "mean_sizes": dict(self.mean_sizes),
                "L1": self.L1, "L2": self.L2, "scale": self.scale, "rounding": ROUNDING_RULE,
                "sessions": self.sessions, "flags": list(self.flags)}


# --- parsing ----------------------------------------------------------------------

_HHMM = re.compile(r"^(\d{1,2}):(\d{2})$")


def _clock(text: str) -> float:
    m = _HHMM.match(text.strip())
    if not m or int(m.group(1)) > 24 or int(m.group(2)) > 59:
        raise ParameterError(f"bad time of day {text!r}, expected HH:MM")
    return int(m.group(1)) * 3600.0 + int(m.group(2)) * 60.0


def parse_window(text: str | None) -> tuple[float, float] | None:
    """``"HH:MM-HH:MM"`` to seconds after midnight; ``"all"`` disables windowing."""
    if text is None or text.strip().lower() == "all":
        return None
    parts = text.split("-")
    if len(parts) != 2:
        raise ParameterError(f"bad window {text!r}, expected HH:MM-HH:MM")
    lo, hi = _clock(parts[0]), _clock(parts[1])
    if hi <= lo:
        raise ParameterError("window must have positive duration")
    return lo, hi


def _optional_int(text: str, name: str, lineno: int) -> int | None:
    text = text.strip()
    if not text:
        return None
    try:
        v = int(text)
    except ValueError:
        raise ParseError(f"{name} {text!r} is not an integer", line=lineno) from None
    if v < 0:
        raise ParseError(f"{name} must be nonnegative", line=lineno)
    return v


def _open_lines(source) -> Iterable[str]:
    if isinstance(source, (str, os.PathLike)) and os.path.exists(source):
        return open(source, newline="")
    if isinstance(source, str):
        return io.StringIO(source)
    return source


def iter_events(source) -> Iterator[FlowEvent]:
    """Stream events from a path, CSV text, or an iterable of lines.

    Raises :class:`ParseError` (with the line number) on malformed rows and
    :class:`OrderingError` when timestamps go backwards.
    """
    lines = _open_lines(source)
    try:
        reader = csv.reader(lines)
        header = None
        last_t = -math.inf
        seen = False
        for row in reader:
            lineno = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if header is None:
                header = tuple(c.strip() for c in row)
                if header != HEADER:
                    raise ParseError(f"expected header {','.join(HEADER)}", line=lineno)
                continue
            if len(row) not in (3, 5):
                raise ParseError(f"expected 5 columns, got {len(row)}", line=lineno)
            row = row + ["", ""] if len(row) == 3 else row
            try:
                t = float(row[0])
            except ValueError:
                raise ParseError(f"bad timestamp {row[0]!r}", line=lineno) from None
            if not math.isfinite(t):
                raise ParseError(f"bad timestamp {row[0]!r}", line=lineno)
            kind = row[1].strip()
            if kind not in FLOW_KINDS and kind not in AUX_KINDS:
                raise ParseError(f"unknown kind {kind!r}", line=lineno)
            size = _optional_int(row[2], "size", lineno)
            if size is None or size < 1:
                raise ParseError("size must be a positive integer", line=lineno)
            if t < last_t:
                raise OrderingError(f"timestamp {t!r} precedes {last_t!r}", line=lineno)
            last_t = t
            seen = True
            yield FlowEvent(t, kind, size, _optional_int(row[3], "best_volume", lineno),
                            _optional_int(row[4], "second_volume", lineno))
        if not seen:
            raise EmptyInputError("no events in log")
    finally:
        if lines is not source and hasattr(lines, "close"):
            lines.close()


def in_window(t: float, window: tuple[float, float] | None) -> bool:
    if window is None:
        return True
    tod = t % DAY
    return window[0] <= tod < window[1]


def ingest(source, window: tuple[float, float] | None = DEFAULT_WINDOW) -> list[FlowEvent]:
    """Parse a log and keep the events inside the daily window."""
    events = [e for e in iter_events(source) if in_window(e.timestamp, window)]
    if not events:
        raise EmptyInputError("no events inside the estimation window")
    return events


def to_csv(events: Iterable[FlowEvent]) -> str:
    buf = io.StringIO()
    buf.write(",".join(HEADER) + "\n")
    for e in events:
        b = "" if e.best_volume is None else str(e.best_volume)
        s = "" if e.second_volume is None else str(e.second_volume)
        buf.write(f"{e.timestamp!r},{e.kind},{e.size},{b},{s}\n")
    return buf.getvalue()


def split_sessions(events: list[FlowEvent], window: tuple[float, float] | None = DEFAULT_WINDOW):
    """``[(start, end, events), ...]``, one per trading day inside the window.

    Without a window the whole log is one session from its first to its last
    timestamp.
    """
    if not events:
        raise EmptyInputError("no events")
    if window is None:
        return [(events[0].timestamp, events[-1].timestamp, list(events))]
    out = []
    for e in events:
        day = math.floor(e.timestamp / DAY)
        if not out or out[-1][3] != day:
            out.append((day * DAY + window[0], day * DAY + window[1], [], day))
        out[-1][2].append(e)
    return [(a, b, evs) for a, b, evs, _ in out]


# --- rescaling and fits -------------------------------------------------------------

def _round_half_up(x: float) -> int:
    return max(1, math.floor(x + 0.5))


def trade_scale(events: Iterable[FlowEvent]) -> float:
    """Mean partial-market-order size, or 1 when there are none."""
    sizes = [e.size for e in events if e.kind == "MARKET_PARTIAL"]
    return math.fsum(sizes) / len(sizes) if sizes else 1.0


def rescale_by_trade_size(events: Iterable[FlowEvent], scale: float | None = None) -> list[FlowEvent]:
    """Express sizes and volumes in units of the mean trade size.

    Logs whose mean trade is below two shares are already at unit scale and
    come back unchanged.  Rescaled trades always average below two (each is at
    most one share above its exact quotient), so rescaling is idempotent.
    """
    events = list(events)
    if scale is None:
        scale = trade_scale(events)
    if scale <= 0:
        raise ParameterError("trade scale must be positive")
    if scale < 2.0:
        return events

    def r(v):
        return None if v is None else _round_half_up(v / scale)

    return [FlowEvent(e.timestamp, e.kind, _round_half_up(e.size / scale), r(e.best_volume), r(e.second_volume))
            for e in events]


def fit_geometric_mle(samples) -> float:
    """Maximum-likelihood ``q`` of the geometric law on ``{1, 2, ...}``: one over the mean."""
    x = np.asarray(samples, dtype=float)
    if x.size == 0:
        raise ParameterError("no samples")
    if np.any(x < 1):
        raise ParameterError("geometric samples must be >= 1")
    return float(1.0 / x.mean())


def _counts_dist(values) -> DiscreteDist:
    c = np.bincount(np.asarray(values, dtype=np.int64))
    return from_weights(c[1:].astype(float), offset=1)


# --- time-weighted volumes ------------------------------------------------------------

def _occupancy(sessions, attr: str):
    """Time and event weights of a post-event volume column across sessions.

    Each value holds from its event until the next event carrying the column,
    or the session end.  Time before the first observed value is skipped.
    """
    time_w: dict[int, float] = {}
    event_w: Counter = Counter()
    for start, end, evs in sessions:
        t = np.array([e.timestamp for e in evs if getattr(e, attr) is not None])
        v = np.array([getattr(e, attr) for e in evs if getattr(e, attr) is not None], dtype=np.int64)
        if t.size == 0:
            continue
        stop = np.append(t[1:], max(end, t[-1]))
        d = stop - t
        event_w.update(v.tolist())
        acc = np.bincount(v, weights=d)
        for k in np.nonzero(acc)[0]:
            time_w[int(k)] = time_w.get(int(k), 0.0) + float(acc[k])
    return time_w, event_w


def _weighted_dist(weights: dict) -> DiscreteDist | None:
    weights = {k: w for k, w in weights.items() if w > 0}
    if not weights:
        return None
    if min(weights) < 1:
        weights = {max(k, 1): w for k, w in weights.items()}
    return from_weights(weights, offset=1)


def _weighted_mean(weights: dict) -> float | None:
    total = math.fsum(weights.values())
    if total <= 0:
        return None
    return math.fsum(k * w for k, w in weights.items()) / total


def time_weighted_mean(events: list[FlowEvent], end: float | None = None, attr: str = "best_volume") -> float | None:
    """Time average of a volume column from its first observation to ``end``."""
    if not events:
        return None
    end = events[-1].timestamp if end is None else end
    w, _ = _occupancy([(events[0].timestamp, end, events)], attr)
    return _weighted_mean(w)


# --- estimation -------------------------------------------------------------------------

def estimate(events, window: tuple[float, float] | None = None, snapshots=None,
             rescale: bool = True) -> tuple[FlowParams, SessionStats]:
    """Estimate every flow parameter from classified events.

    Rates are counts over the total session time, except partial market
    orders, counted over the time the best quote holds more than one share
    (when best volumes are logged).  Mean sizes and the
    empirical size laws use rescaled sizes; ``L1``/``L2`` are time averages of
    the post-event volume columns (``L1`` falls back to the mean of
    ``snapshots`` when the log carries no best volumes).  The cancellation
    rates come from the flow balance.
    """
    events = list(events)
    if not events:
        raise EmptyInputError("no events")
    if window is not None:
        events = [e for e in events if in_window(e.timestamp, window)]
        if not events:
            raise EmptyInputError("no events inside the estimation window")
    scale = trade_scale(events) if rescale else 1.0
    if rescale:
        events = rescale_by_trade_size(events, scale)
        if scale < 2.0:
            scale = 1.0
    sessions = split_sessions(events, window)
    duration = math.fsum(b - a for a, b, _ in sessions)
    if not duration > 0:
        raise ParameterError("estimation window has zero duration")

    flags: list[str] = []
    counts = Counter(e.kind for e in events)
    sizes: dict[str, list[int]] = {k: [] for k in FLOW_KINDS}
    for e in events:
        if e.kind in sizes:
            sizes[e.kind].append(e.size)
    rates = {_RATE[k]: counts.get(k, 0) / duration for k in FLOW_KINDS}
    mean_sizes = {_SIGMA[k]: (math.fsum(v) / len(v) if v else None) for k, v in sizes.items()}

    best_tw, best_ew = _occupancy(sessions, "best_volume")
    second_tw, _ = _occupancy(sessions, "second_volume")
    L1 = _weighted_mean(best_tw)
    L2 = _weighted_mean(second_tw)
    if L1 is None:
        if snapshots is not None and len(snapshots):
            snap = [_round_half_up(v / scale) for v in snapshots] if scale != 1.0 else list(snapshots)
            L1 = math.fsum(snap) / len(snap)
            flags.append("L1-from-snapshots")
        else:
            flags.append("L1-missing")
    if L2 is None:
        flags.append("L2-missing")

    if counts.get("MARKET_AGGRESSIVE", 0) == 0:
        flags.append("type0-only")
        warnings.warn("no aggressive market orders: only Type-0 models are estimable", EstimabilityWarning,
                      stacklevel=2)
    if counts.get("LIMIT_BEST", 0) == 0:
        raise ParameterError("no limit orders at the best quote: lambda1 is not estimable")

    def sig(name):
        v = mean_sizes[name]
        return 0.0 if v is None else v

    # Partial market orders only exist while the best quote holds more than one
    # share, so their intensity is counted against that exposure time.  The
    # flow balance keeps the realised outflow.
    realised_mu = rates["mu"]
    observed = math.fsum(best_tw.values())
    if observed > 0:
        above_one = math.fsum(w for k, w in best_tw.items() if k > 1) / observed
        if above_one > 0:
            rates["mu"] = realised_mu / above_one
    kw = dict(rates)
    if L1 is not None:
        kw["theta1"] = calibrate_theta1(rates["lambda1"], sig("sigma1"), realised_mu, sig("sigma_mu"),
                                        rates["muA"], sig("sigma_muA"), L1)
    else:
        warnings.warn("no best-quote volumes: theta1 left at its default", EstimabilityWarning, stacklevel=2)
    if L2 is not None and rates["lambda2"] > 0:
        kw["theta2"] = calibrate_theta2(rates["lambda2"], sig("sigma2"), L2)
    else:
        flags.append("theta2-uncalibrated")

    def family(kind):
        return DistFamily.empirical(_counts_dist(sizes[kind])) if sizes[kind] else DistFamily.unit()

    pi2_emp = _weighted_dist(second_tw)
    params = FlowParams(**kw, g0_spec=family("LIMIT_SPREAD"), g1_spec=family("LIMIT_BEST"),
                        g2_spec=family("LIMIT_BOOK"), pi2_empirical=pi2_emp, L1=L1, L2=L2)
    all_counts = {k: counts.get(k, 0) for k in FLOW_KINDS + AUX_KINDS}
    stats = SessionStats(duration=duration, counts=all_counts, mean_sizes=mean_sizes, L1=L1, L2=L2,
                         scale=scale, sessions=len(sessions), flags=flags,
                         best_time=_weighted_dist(best_tw),
                         best_event=_weighted_dist(dict(best_ew)) if best_ew else None,
                         second_time=pi2_emp)
    return params, stats


def from_event_log(log) -> list[FlowEvent]:
    """Events from a simulator :class:`~bestquote.simulator.EventLog`, without a CSV round trip."""
    from .simulator import KIND_NAMES

    second = log.second
    return [FlowEvent(float(log.time[i]), KIND_NAMES[log.kind[i]], int(log.size[i]), int(log.best[i]),
                      None if second is None else int(second[i]))
            for i in range(len(log.time))]

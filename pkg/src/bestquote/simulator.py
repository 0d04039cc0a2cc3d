"""Event-driven simulation of the best-quote volume.

All flows are competing exponential clocks: aggressive limit orders (reset to
a ``g0`` draw), limit orders at the best quote, unit partial market orders
(never touching the last share), aggressive market orders (promote the second
limit) and per-share cancellations at aggregate rate ``(X-1)*theta1``.

The second limit is either a live queue with its own arrivals and
cancellations (``coupled-queue``) or a fresh draw from a given law at every
aggressive market order (``resample-from-dist``).  After promotion the live
queue restarts from its stationary law (``reset_policy="stationary"``) or from
a single share (``"one"``); aggressive limit orders leave it untouched.

The event loop lives in a compiled extension when available and falls back to
an identical pure-Python loop; both consume the same uniform stream, so a seed
gives the same path on either backend.
"""

from __future__ import annotations

import io
import math
import os
from dataclasses import dataclass, field

import numpy as np

from . import _simkernel_py
from .dists import DiscreteDist, make_family
from .errors import ConfigurationError, EmptyDistributionError, ParameterError
from .params import FlowParams
from .stationary import second_limit_stationary

try:
    from . import _simkernel as _compiled
except ImportError:  # pragma: no cover - depends on the build
    _compiled = None

KIND_NAMES = ("LIMIT_SPREAD", "LIMIT_BEST", "LIMIT_BOOK", "MARKET_PARTIAL",
              "MARKET_AGGRESSIVE", "CANCEL_BEST", "CANCEL_BOOK")
RNG_NAME = "numpy.random.PCG64"
BLOCK = 1 << 16

_py = _simkernel_py


def available_backends() -> list[str]:
    return (["cython"] if _compiled is not None else []) + ["python"]


def default_backend() -> str:
    if _compiled is None or os.environ.get("BESTQUOTE_PURE_PYTHON"):
        return "python"
    return "cython"


BACKEND = default_backend()


@dataclass(frozen=True)
class SimConfig:
    """One replication.  Give an event budget ``events``, a time ``horizon``, or both."""

    params: FlowParams
    events: int | None = None
    horizon: float | None = None
    seed: int = 0
    weighting: str = "time"
    second_limit_mode: str | None = None
    reset_policy: str = "stationary"
    record_path: bool = False
    record_log: bool = False
    x0: int = 1
    backend: str | None = None

    def __post_init__(self):
        if self.events is None and self.horizon is None:
            raise ConfigurationError("need an event budget or a horizon")
        if self.events is not None and self.events < 0:
            raise ConfigurationError("event budget must be >= 0")
        if self.horizon is not None and self.horizon < 0:
            raise ConfigurationError("horizon must be >= 0")
        if self.weighting not in ("time", "event"):
            raise ConfigurationError(f"unknown weighting {self.weighting!r}")
        if self.second_limit_mode not in (None, "coupled-queue", "resample-from-dist"):
            raise ConfigurationError(f"unknown second-limit mode {self.second_limit_mode!r}")
        if self.reset_policy not in ("stationary", "one"):
            raise ConfigurationError(f"unknown reset policy {self.reset_policy!r}")
        if self.x0 < 1:
            raise ConfigurationError("initial volume must be >= 1")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigurationError("seed must be an unsigned 64-bit integer")


@dataclass
class EventLog:
    time: np.ndarray
    kind: np.ndarray
    size: np.ndarray
    best: np.ndarray
    second: np.ndarray | None

    def __len__(self):
        return len(self.time)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("timestamp,kind,size,best_volume,second_volume\n")
        names = KIND_NAMES
        sec = self.second
        for i in range(len(self.time)):
            s2 = "" if sec is None else str(int(sec[i]))
            buf.write(f"{float(self.time[i])!r},{names[self.kind[i]]},{int(self.size[i])},{int(self.best[i])},{s2}\n")
        return buf.getvalue()


@dataclass
class PathRecord:
    """Sample path summary: occupancy per volume and, optionally, the segments."""

    occupancy_time: np.ndarray
    occupancy_visits: np.ndarray
    event_counts: dict
    total_time: float
    volumes: np.ndarray | None = None
    durations: np.ndarray | None = None
    log: EventLog | None = None
    metadata: dict = field(default_factory=dict)

    @property
    def segments(self):
        if self.volumes is None:
            return None
        return list(zip(self.volumes.tolist(), self.durations.tolist()))

    @classmethod
    def from_segments(cls, segments) -> "PathRecord":
        vols = np.array([int(v) for v, _ in segments], dtype=np.int64)
        durs = np.array([float(d) for _, d in segments])
        if np.any(vols < 1):
            raise ParameterError("volumes must be >= 1")
        size = int(vols.max()) + 1 if vols.size else 2
        occ = np.zeros(size)
        vis = np.zeros(size, dtype=np.int64)
        np.add.at(occ, vols, durs)
        np.add.at(vis, vols, 1)
        return cls(occ, vis, {}, math.fsum(durs), vols, durs)


def _cdf(dist: DiscreteDist) -> np.ndarray:
    if dist.offset == 0 and dist.pmf(0) > 0:
        raise ParameterError("size and volume laws must live on {1, 2, ...}")
    p = dist.dense(1, max(dist.stop, 2))
    c = np.cumsum(p)
    c /= c[-1]  # truncated tail lumped onto the last point
    c[-1] = 1.0
    return np.ascontiguousarray(c)


def _second_limit(cfg: SimConfig):
    p = cfg.params
    mode = cfg.second_limit_mode
    if mode is None:
        mode = "coupled-queue" if p.g2_spec is not None and p.lambda2 > 0 else "resample-from-dist"
    if mode == "coupled-queue":
        if p.g2_spec is None or p.lambda2 <= 0 or p.theta2 <= 0:
            if p.muA > 0:
                raise ConfigurationError("coupled second limit needs lambda2 > 0, theta2 > 0 and g2_spec")
            return mode, None, None
        g2 = make_family(p.g2_spec)
        pi2 = second_limit_stationary(p.g2_spec, p.lambda2, p.theta2)
        return mode, g2, pi2
    pi2 = p.pi2_override if p.pi2_override is not None else p.pi2_empirical
    if pi2 is None and p.g2_spec is not None and p.lambda2 > 0:
        pi2 = second_limit_stationary(p.g2_spec, p.lambda2, p.theta2)
    if pi2 is None and p.muA > 0:
        raise ConfigurationError("aggressive market orders need a second-limit source")
    return mode, None, pi2


def _kernel(backend):
    if backend == "cython":
        if _compiled is None:
            raise ConfigurationError("compiled kernel not built")
        return _compiled.run_events
    if backend == "python":
        return _py.run_events
    raise ConfigurationError(f"unknown backend {backend!r}")


def simulate(config: SimConfig) -> PathRecord:
    """Run one replication; deterministic given the seed."""
    p = config.params
    backend = config.backend or default_backend()
    run = _kernel(backend)
    mode, g2, pi2 = _second_limit(config)
    coupled = mode == "coupled-queue" and g2 is not None
    if p.lambda0 + p.lambda1 + p.muA + (p.lambda2 if coupled else 0.0) <= 0:
        raise ConfigurationError("all event rates vanish at volume 1")

    dummy = np.ones(1)
    cdf_g0 = _cdf(make_family(p.g0_spec))
    cdf_g1 = _cdf(make_family(p.g1_spec))
    cdf_g2 = _cdf(g2) if coupled else dummy
    cdf_pi2 = _cdf(pi2) if pi2 is not None else dummy
    rates = (p.lambda0, p.lambda1, p.lambda2 if coupled else 0.0, p.mu, p.muA, p.theta1, p.theta2)

    rng = np.random.Generator(np.random.PCG64(config.seed))
    y0 = _py._draw(cdf_pi2, rng.random()) if coupled else 0
    state = np.array([0.0, 0.0, float(config.x0), float(y0), 0.0])
    budget = config.events if config.events is not None else np.iinfo(np.int64).max
    horizon = config.horizon if config.horizon is not None else math.inf

    cap = max(64, 2 * config.x0, 2 * len(cdf_g0), 2 * len(cdf_pi2))
    occ = np.zeros(cap)
    vis = np.zeros(cap, dtype=np.int64)
    counts = np.zeros(len(KIND_NAMES), dtype=np.int64)
    record = config.record_log or config.record_path
    log_cap = min(budget, 1 << 20) if record else 0
    log_t = np.zeros(log_cap)
    log_k = np.zeros(log_cap, dtype=np.int8)
    log_s = np.zeros(log_cap, dtype=np.int64)
    log_x = np.zeros(log_cap, dtype=np.int64)
    log_y = np.zeros(log_cap, dtype=np.int64)
    log_pos = 0

    if horizon == 0 or budget == 0:
        uniforms = np.zeros((0, 3))
        status = _py.DONE
    else:
        uniforms = rng.random((BLOCK, 3))
        row = 0
        while True:
            status, row, log_pos = run(state, uniforms, row, rates, coupled, config.reset_policy == "one",
                                       budget, horizon, cdf_g0, cdf_g1, cdf_g2, cdf_pi2,
                                       occ, vis, counts, record, log_t, log_k, log_s, log_x, log_y, log_pos)
            if status == _py.NEED_UNIFORMS:
                uniforms = rng.random((BLOCK, 3))
                row = 0
            elif status == _py.GROW:
                occ = np.concatenate([occ, np.zeros(len(occ))])
                vis = np.concatenate([vis, np.zeros(len(vis), dtype=np.int64)])
            elif status == _py.LOG_FULL:
                extra = max(len(log_t), 1)
                log_t = np.concatenate([log_t, np.zeros(extra)])
                log_k = np.concatenate([log_k, np.zeros(extra, dtype=np.int8)])
                log_s = np.concatenate([log_s, np.zeros(extra, dtype=np.int64)])
                log_x = np.concatenate([log_x, np.zeros(extra, dtype=np.int64)])
                log_y = np.concatenate([log_y, np.zeros(extra, dtype=np.int64)])
            else:
                break

    t, comp = state[0], state[1]
    path = PathRecord(
        occupancy_time=occ, occupancy_visits=vis,
        event_counts={name: int(c) for name, c in zip(KIND_NAMES, counts)},
        total_time=float(t - comp),
        metadata={"rng": RNG_NAME, "seed": int(config.seed), "backend": backend,
                  "second_limit_mode": mode, "reset_policy": config.reset_policy,
                  "events": int(state[4]), "x0": int(config.x0), "y0": int(y0),
                  "stopped_by": "horizon" if status == _py.HORIZON else "events"},
    )
    if record:
        n = log_pos
        log = EventLog(log_t[:n].copy(), log_k[:n].copy(), log_s[:n].copy(), log_x[:n].copy(),
                       log_y[:n].copy() if coupled else None)
        if config.record_log:
            path.log = log
        if config.record_path:
            starts = np.concatenate([[0.0], log.time])
            ends = np.concatenate([log.time, [t]]) if status == _py.HORIZON else log.time
            vols = np.concatenate([[config.x0], log.best])[:len(ends)]
            durs = ends - starts[:len(ends)]
            path.volumes = vols.astype(np.int64)
            path.durations = durs
            if durs.size:
                path.total_time = math.fsum(durs)
    return path


def histogram(path: PathRecord, weighting: str = "time") -> DiscreteDist:
    """Volume distribution of a path, time- or event-weighted."""
    if weighting == "time":
        w = path.occupancy_time
    elif weighting == "event":
        w = path.occupancy_visits.astype(float)
    else:
        raise ParameterError(f"unknown weighting {weighting!r}")
    total = math.fsum(w)
    if total <= 0:
        raise EmptyDistributionError("empty path")
    last = int(np.nonzero(w)[0].max())
    return DiscreteDist(1, w[1:last + 1] / total, 0.0)


def merge(paths) -> PathRecord:
    """Pool independent replications into one occupancy record."""
    paths = list(paths)
    size = max(len(p.occupancy_time) for p in paths)
    occ = np.zeros(size)
    vis = np.zeros(size, dtype=np.int64)
    counts = dict.fromkeys(KIND_NAMES, 0)
    for p in paths:
        occ[:len(p.occupancy_time)] += p.occupancy_time
        vis[:len(p.occupancy_visits)] += p.occupancy_visits
        for k, v in p.event_counts.items():
            counts[k] = counts.get(k, 0) + v
    return PathRecord(occ, vis, counts, math.fsum(p.total_time for p in paths))

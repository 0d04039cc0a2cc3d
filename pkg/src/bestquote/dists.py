"""Discrete distributions on the nonnegative integers.

A :class:`DiscreteDist` stores a dense block of probabilities starting at an
absolute index ``offset`` (0 for queue sizes, 1 for volumes at a limit, which
never drop below one share).  Infinite families are truncated adaptively and
the discarded mass is kept in ``tail_mass``.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy import stats

from .errors import EmptyDistributionError, ParameterError

TAIL_TOL = 1e-10
MAX_STATES = 5000
NORM_TOL = 1e-9

KINDS = ("dirac-unit", "geometric", "poisson", "negative-binomial", "empirical")


@dataclass(frozen=True)
class DiscreteDist:
    offset: int
    probs: np.ndarray
    tail_mass: float = 0.0

    def __post_init__(self):
        p = np.array(self.probs, dtype=float)
        if p.ndim != 1:
            raise ParameterError("probabilities must be one-dimensional")
        if self.offset not in (0, 1):
            raise ParameterError(f"support offset must be 0 or 1, got {self.offset}")
        if np.any(p < 0) or not np.all(np.isfinite(p)):
            raise ParameterError("probabilities must be finite and nonnegative")
        total = math.fsum(p) + self.tail_mass
        if abs(total - 1.0) > NORM_TOL:
            raise ParameterError(f"weights sum to {total!r}, expected 1")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    def __len__(self):
        return len(self.probs)

    @property
    def support(self) -> np.ndarray:
        return np.arange(self.offset, self.offset + len(self.probs))

    @property
    def stop(self) -> int:
        """One past the largest represented index."""
        return self.offset + len(self.probs)

    def pmf(self, k: int) -> float:
        i = k - self.offset
        if 0 <= i < len(self.probs):
            return float(self.probs[i])
        return 0.0

    def dense(self, start: int, stop: int) -> np.ndarray:
        """Probabilities on absolute indices ``start..stop-1`` (zero padded)."""
        out = np.zeros(max(stop - start, 0))
        lo = max(start, self.offset)
        hi = min(stop, self.stop)
        if hi > lo:
            out[lo - start:hi - start] = self.probs[lo - self.offset:hi - self.offset]
        return out

    def shift(self, k: int = 1) -> "DiscreteDist":
        """Distribution of ``X + k``.  Only offsets 0 and 1 are representable."""
        new = self.offset + k
        if new in (0, 1):
            return DiscreteDist(new, self.probs, self.tail_mass)
        if new > 1:
            return DiscreteDist(1, np.concatenate([np.zeros(new - 1), self.probs]), self.tail_mass)
        drop = -new
        if np.any(self.probs[:drop] > 0):
            raise ParameterError("shift would move mass below zero")
        return DiscreteDist(0, self.probs[drop:], self.tail_mass)

    def as_dict(self) -> dict[int, float]:
        return {int(k): float(v) for k, v in zip(self.support, self.probs) if v > 0}

    def to_text(self) -> str:
        buf = io.StringIO()
        for k, v in zip(self.support, self.probs):
            buf.write(f"{k} {v:.17g}\n")
        return buf.getvalue()

    @classmethod
    def from_text(cls, text: str) -> "DiscreteDist":
        pairs = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.replace(",", " ").split()
            if len(parts) != 2:
                raise ParameterError(f"line {lineno}: expected 'index probability'")
            pairs[int(parts[0])] = float(parts[1])
        return from_weights(pairs, normalize=False)


def from_weights(weights, offset: int | None = None, normalize: bool = True) -> DiscreteDist:
    """Build a distribution from a ``{index: weight}`` mapping or a sequence.

    A sequence is read from absolute index ``offset`` (default 1).  With
    ``normalize`` the weights are rescaled to sum to one; otherwise the
    shortfall is booked as tail mass.
    """
    if isinstance(weights, DiscreteDist):
        return weights
    if isinstance(weights, Mapping):
        if not weights:
            raise EmptyDistributionError("empty weight mapping")
        keys = [int(k) for k in weights]
        if min(keys) < 0:
            raise ParameterError("negative support index")
        lo = 0 if min(keys) == 0 else 1
        if offset is not None:
            lo = min(lo, offset)
        arr = np.zeros(max(keys) - lo + 1)
        for k, v in weights.items():
            arr[int(k) - lo] += float(v)
    else:
        arr = np.asarray(weights, dtype=float)
        lo = 1 if offset is None else offset
        if arr.size == 0:
            raise EmptyDistributionError("empty weight sequence")
    if np.any(arr < 0):
        raise ParameterError("weights must be nonnegative")
    total = math.fsum(arr)
    if total <= 0:
        raise EmptyDistributionError("weights sum to zero")
    if normalize:
        return DiscreteDist(lo, arr / total, 0.0)
    return DiscreteDist(lo, arr, max(0.0, 1.0 - total))


@dataclass(frozen=True)
class DistFamily:
    """A named parametric family, or an empirical table, for order sizes and volumes."""

    kind: str
    q: float | None = None
    rate: float | None = None
    size: float | None = None
    prob: float | None = None
    weights: DiscreteDist | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ParameterError(f"unknown distribution kind {self.kind!r}")
        if self.kind == "geometric":
            if self.q is None or not 0.0 < self.q <= 1.0:
                raise ParameterError(f"geometric parameter must lie in (0, 1], got {self.q}")
        elif self.kind == "poisson":
            if self.rate is None or self.rate < 0:
                raise ParameterError(f"poisson rate must be >= 0, got {self.rate}")
        elif self.kind == "negative-binomial":
            if self.size is None or self.size <= 0:
                raise ParameterError(f"negative-binomial size must be > 0, got {self.size}")
            if self.prob is None or not 0.0 < self.prob < 1.0:
                raise ParameterError(f"negative-binomial prob must lie in (0, 1), got {self.prob}")
        elif self.kind == "empirical":
            if self.weights is None:
                raise ParameterError("empirical family needs weights")
            object.__setattr__(self, "weights", from_weights(self.weights))

    @classmethod
    def unit(cls):
        return cls("dirac-unit")

    @classmethod
    def geometric(cls, q):
        return cls("geometric", q=q)

    @classmethod
    def poisson(cls, rate):
        return cls("poisson", rate=rate)

    @classmethod
    def negative_binomial(cls, size, prob):
        return cls("negative-binomial", size=size, prob=prob)

    @classmethod
    def empirical(cls, weights):
        return cls("empirical", weights=from_weights(weights))

    def to_dict(self) -> dict:
        if self.kind == "dirac-unit":
            return {"kind": self.kind}
        if self.kind == "geometric":
            return {"kind": self.kind, "q": self.q}
        if self.kind == "poisson":
            return {"kind": self.kind, "rate": self.rate}
        if self.kind == "negative-binomial":
            return {"kind": self.kind, "size": self.size, "prob": self.prob}
        w = self.weights
        return {"kind": self.kind, "offset": w.offset, "probs": [float(v) for v in w.probs]}

    @classmethod
    def from_dict(cls, d: Mapping) -> "DistFamily":
        kind = d.get("kind")
        if kind == "empirical":
            if "probs" in d:
                return cls.empirical(from_weights(d["probs"], offset=int(d.get("offset", 1))))
            return cls.empirical({int(k): v for k, v in d["weights"].items()})
        kw = {k: d[k] for k in ("q", "rate", "size", "prob") if k in d}
        return cls(kind, **kw)


def _adaptive_n(sf, cap):
    # smallest n with sf(n-1) = P(X >= n) below tolerance, relative to index 0
    n = 1
    while n < cap and sf(n - 1) >= TAIL_TOL:
        n *= 2
    n = min(n, cap)
    lo, hi = max(1, n // 2), n
    while lo < hi:
        mid = (lo + hi) // 2
        if sf(mid - 1) < TAIL_TOL:
            hi = mid
        else:
            lo = mid + 1
    return lo


def make_family(kind, params: Mapping | None = None, truncation_N: int | None = None) -> DiscreteDist:
    """Evaluate a family on its support.

    Parameters
    ----------
    kind : str or DistFamily
        One of ``dirac-unit``, ``geometric``, ``poisson``, ``negative-binomial``,
        ``empirical``; or a ready :class:`DistFamily`.
    params : mapping, optional
        Family parameters (``q``; ``rate``; ``size`` and ``prob``; ``weights``).
    truncation_N : int, optional
        Number of leading weights to keep.  When omitted the support is cut as
        soon as the tail drops below ``1e-10`` (at most 5000 states).

    Returns
    -------
    DiscreteDist
        Geometric and dirac families live on ``{1, 2, ...}``; Poisson and
        negative binomial on ``{0, 1, ...}``.
    """
    fam = kind if isinstance(kind, DistFamily) else (
        DistFamily.from_dict({"kind": kind, **(params or {})}) if kind != "empirical"
        else DistFamily.empirical((params or {})["weights"]))
    if truncation_N is not None and truncation_N < 1:
        raise ParameterError("truncation_N must be >= 1")
    cap = truncation_N if truncation_N is not None else MAX_STATES

    if fam.kind == "dirac-unit" or (fam.kind == "geometric" and fam.q == 1.0):
        return DiscreteDist(1, np.ones(1), 0.0)
    if fam.kind == "empirical":
        w = fam.weights
        if truncation_N is None or truncation_N >= len(w):
            return w
        head = w.probs[:truncation_N]
        return DiscreteDist(w.offset, head, max(0.0, 1.0 - math.fsum(head)))

    if fam.kind == "geometric":
        # P(X > n) = (1-q)^n on {1, 2, ...}
        log1m = math.log1p(-fam.q)
        n = cap if truncation_N is not None else min(cap, max(1, math.ceil(math.log(TAIL_TOL) / log1m)))
        k = np.arange(n)
        probs = fam.q * np.exp(k * log1m)
        return DiscreteDist(1, probs, max(0.0, 1.0 - math.fsum(probs)))

    if fam.kind == "poisson":
        rv = stats.poisson(fam.rate)
    else:
        rv = stats.nbinom(fam.size, fam.prob)
    n = cap if truncation_N is not None else _adaptive_n(rv.sf, cap)
    probs = rv.pmf(np.arange(n))
    return DiscreteDist(0, probs, max(0.0, 1.0 - math.fsum(probs)))


def generating_function(dist: DiscreteDist, z: float) -> float:
    if abs(z) > 1:
        raise ParameterError("generating function evaluated outside the unit disc")
    return float(np.dot(dist.probs, np.power(z, dist.support.astype(float))))


def mean(dist: DiscreteDist) -> float:
    return float(np.dot(dist.support, dist.probs))


def _aligned(d1: DiscreteDist, d2: DiscreteDist):
    lo = min(d1.offset, d2.offset)
    hi = max(d1.stop, d2.stop)
    return d1.dense(lo, hi), d2.dense(lo, hi)


def l2_distance(d1: DiscreteDist, d2: DiscreteDist) -> float:
    """Euclidean distance between pmfs aligned on absolute index."""
    a, b = _aligned(d1, d2)
    diff = np.abs(a - b)
    scale = float(diff.max()) if diff.size else 0.0
    if scale == 0.0:
        return 0.0
    # scale first so tiny differences do not underflow when squared
    return scale * math.sqrt(math.fsum((diff / scale) ** 2))


def linf_distance(d1: DiscreteDist, d2: DiscreteDist) -> float:
    a, b = _aligned(d1, d2)
    return float(np.max(np.abs(a - b))) if a.size else 0.0


def mixture(weights: Sequence[float], dists: Sequence[DiscreteDist]) -> DiscreteDist:
    """Convex combination of distributions on a common absolute index."""
    lo = min(d.offset for d in dists)
    hi = max(d.stop for d in dists)
    acc = np.zeros(hi - lo)
    tail = 0.0
    for w, d in zip(weights, dists):
        acc += w * d.dense(lo, hi)
        tail += w * d.tail_mass
    return DiscreteDist(lo, acc, tail)

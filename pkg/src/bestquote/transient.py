"""Transition probabilities of the best-quote queue between two resets.

The queue ``Y`` (best-quote volume minus the protected last share) receives
limit orders at rate ``lambda1`` with sizes ``g1`` and loses each share at
rate ``theta1``; partial market orders (rate ``mu``) are only handled by the
generator oracle.  Closed forms exist for unit and geometric sizes when
``mu == 0``: the initial shares thin binomially and the arrivals form an
independent compound-Poisson-like component.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg, stats
from scipy.special import gammaln, xlogy

from .dists import DiscreteDist, DistFamily, make_family
from .errors import ParameterError, TruncationError


@dataclass(frozen=True)
class TransientKernel:
    """Transition law of ``Y`` for one of the closed-form variants or the oracle."""

    variant: str
    lambda1: float
    theta1: float
    mu: float = 0.0
    q1: float | None = None
    N: int | None = None
    g1: DistFamily | None = None

    def __post_init__(self):
        if self.variant not in ("model1a", "model1b", "oracle"):
            raise ParameterError(f"unknown kernel variant {self.variant!r}")
        if self.theta1 <= 0 or self.lambda1 < 0 or self.mu < 0:
            raise ParameterError("need lambda1 >= 0, mu >= 0, theta1 > 0")
        if self.variant != "oracle" and self.mu != 0:
            raise ParameterError("closed-form transients require mu == 0")
        if self.variant == "model1b" and (self.q1 is None or not 0 < self.q1 < 1):
            raise ParameterError("model1b needs q1 in (0, 1)")
        if self.variant == "oracle" and (self.N is None or self.N < 2):
            raise ParameterError("oracle truncation N must be >= 2")

    @classmethod
    def for_sizes(cls, g1: DistFamily, lambda1: float, theta1: float) -> "TransientKernel":
        if g1.kind == "dirac-unit" or (g1.kind == "geometric" and g1.q == 1.0):
            return cls("model1a", lambda1, theta1)
        if g1.kind == "geometric":
            return cls("model1b", lambda1, theta1, q1=g1.q)
        raise ParameterError(f"no closed-form transient for {g1.kind} limit-order sizes")

    def r(self, i: int, j: int, t: float) -> float:
        if self.variant == "model1a":
            return r_1a(i, j, t, self.lambda1, self.theta1)
        if self.variant == "model1b":
            return r_1b(i, j, t, self.q1, self.lambda1, self.theta1)
        check_indices(self.N, i, j)
        spec = generator_fl(self.lambda1, self.mu, self.theta1, self.g1 or DistFamily.unit(), self.N)
        return float(oracle_expm(spec, t, self.N)[i, j])

    def arrivals(self, t: float, n: int) -> np.ndarray:
        """Law of the shares that arrived during ``[0, t]`` and are still standing."""
        if self.variant == "model1a":
            m = self.lambda1 / self.theta1 * -math.expm1(-self.theta1 * t)
            return stats.poisson.pmf(np.arange(n), m)
        if self.variant == "model1b":
            return _geometric_arrivals(t, n, self.q1, self.lambda1, self.theta1)
        raise ParameterError("arrivals law is only available for closed-form variants")

    def mixed(self, t: float, start: np.ndarray, n: int) -> np.ndarray:
        """``sum_i start[i] * r(i, j, t)`` for ``j < n``.

        ``start`` is the initial law of ``Y`` on ``0..len(start)-1``.
        """
        p = math.exp(-self.theta1 * t)
        survivors = _thinned(start, p)
        return np.convolve(survivors, self.arrivals(t, n))[:n]

    def matrix(self, t: float, n_from: int, n_to: int) -> np.ndarray:
        p = math.exp(-self.theta1 * t)
        a = self.arrivals(t, n_to)
        out = np.empty((n_from, n_to))
        for i in range(n_from):
            b = stats.binom.pmf(np.arange(min(i, n_to - 1) + 1), i, p)
            out[i] = np.convolve(b, a)[:n_to]
        return out


def _thinned(start: np.ndarray, p: float) -> np.ndarray:
    # law of Binomial(I, p) with I ~ start
    n = len(start)
    k = np.arange(n)
    idx = np.nonzero(start)[0]
    if idx.size == 0:
        return np.zeros(1)
    pmf = stats.binom.pmf(k[None, :], idx[:, None], p)
    return start[idx] @ pmf


def _geometric_arrivals(t, n, q, lambda1, theta1):
    # coefficients of [D (1 - w z)]^k (1 - c z)^-k, a compound Poisson law
    # whose log-generating-function coefficients k (c^m - w^m) / m are >= 0
    p = math.exp(-theta1 * t)
    kappa = lambda1 / (theta1 * (1.0 - q))
    c = 1.0 - q
    logD = math.log1p(-c * -math.expm1(-theta1 * t))
    D = math.exp(logD)
    w = c * p / D
    a = np.zeros(n)
    a[0] = math.exp(kappa * logD)
    if n == 1:
        return a
    m = np.arange(1, n)
    with np.errstate(under="ignore"):
        coef = kappa * (np.power(c, m) - np.power(w, m))
    for k in range(1, n):
        a[k] = np.dot(coef[:k], a[k - 1::-1]) / k
    return a


def r_1a(i: int, j: int, t: float, lambda1: float, theta1: float) -> float:
    """Transition probability of the immigration-death queue (unit sizes)."""
    if i < 0 or j < 0 or t < 0:
        raise ParameterError("need i, j >= 0 and t >= 0")
    if t == 0:
        return float(i == j)
    rho = lambda1 / theta1
    one_m_p = -math.expm1(-theta1 * t)
    k = np.arange(min(i, j) + 1)
    logs = (gammaln(i + 1) - gammaln(k + 1) - gammaln(i - k + 1) - gammaln(j - k + 1)
            + xlogy(j - k, rho) - k * theta1 * t + xlogy(i + j - 2 * k, one_m_p)
            - rho * one_m_p)
    return math.fsum(np.exp(logs))


def r_1b(i: int, j: int, t: float, q1: float, lambda1: float, theta1: float) -> float:
    """Transition probability of the queue with geometric limit-order sizes.

    Double-sum closed form in which the second product runs to ``j-1-k-l`` and
    ``(1 - e^{-theta1 t})`` carries the exponent ``i-k+1``.  The inner sum
    alternates, so accuracy degrades for volumes well above a few hundred;
    :meth:`TransientKernel.mixed` uses a cancellation-free recursion instead.
    """
    if i < 0 or j < 0 or t < 0:
        raise ParameterError("need i, j >= 0 and t >= 0")
    if not 0 < q1 < 1:
        raise ParameterError("q1 must lie in (0, 1)")
    if t == 0:
        return float(i == j)
    rho = lambda1 / theta1
    c = 1.0 - q1
    kappa = rho / c
    p = math.exp(-theta1 * t)
    one_m_p = -math.expm1(-theta1 * t)
    logD = math.log1p(-c * one_m_p)

    # log|prod_{a=1}^{l} (rho - a c)| with sign, and log prod_{b=1}^{l} (rho + b c)
    L = max(j, 1)
    minus = rho - c * np.arange(1, L)
    plus = rho + c * np.arange(1, L)
    with np.errstate(divide="ignore"):
        log_minus = np.concatenate([[0.0], np.cumsum(np.log(np.abs(minus)))])
    sign_minus = np.concatenate([[1.0], np.cumprod(np.sign(minus))])
    log_plus = np.concatenate([[0.0], np.cumsum(np.log(plus))])

    vals = []
    for k in range(min(i, j - 1) + 1):
        head = (gammaln(i + 1) - gammaln(k + 1) - gammaln(i - k + 1) - gammaln(j - k + 1)
                + (i - k + 1) * math.log(one_m_p))
        for l in range(j - k):
            s = sign_minus[l] * (-1.0) ** l
            if s == 0:
                continue
            lg = (head + gammaln(j - k) - gammaln(l + 1) - gammaln(j - k - l)
                  - (l + k) * theta1 * t + (kappa - l - 1) * logD
                  + log_minus[l] + log_plus[j - 1 - k - l])
            vals.append(s * math.exp(lg))
    total = q1 * rho * math.fsum(vals)
    if j <= i:
        total += math.exp(gammaln(i + 1) - gammaln(j + 1) - gammaln(i - j + 1)
                          + xlogy(j, p) + xlogy(i - j, one_m_p) + kappa * logD)
    return total


@dataclass(frozen=True)
class GeneratorSpec:
    """Truncated banded generator of a queue with batch arrivals and linear deaths."""

    birth_rate: float
    sizes: DiscreteDist
    fixed_death: float
    per_share_death: float

    def matrix(self, N: int) -> np.ndarray:
        """Rate matrix on ``0..N-1``; batches overshooting the top land on ``N-1``."""
        if N < 2:
            raise TruncationError("generator truncation must be >= 2")
        g = self.sizes.dense(0, N)
        Q = np.zeros((N, N))
        cum = np.cumsum(g)
        tail = np.maximum(1.0 - cum, 0.0)  # P(size > k)
        for i in range(N - 1):
            span = N - 1 - i
            Q[i, i + 1:N - 1] = self.birth_rate * g[1:span]
            Q[i, N - 1] = self.birth_rate * tail[span - 1]
        n = np.arange(1, N)
        Q[n, n - 1] = self.fixed_death + self.per_share_death * n
        Q[np.diag_indices(N)] = 0.0
        Q[np.diag_indices(N)] = -Q.sum(axis=1)
        return Q


def generator_fl(lambda1, mu, theta1, g1, N=None) -> GeneratorSpec:
    """Best-quote queue: batches at rate ``lambda1``, deaths ``mu + n theta1`` for ``n >= 1``."""
    sizes = g1 if isinstance(g1, DiscreteDist) else make_family(g1)
    return GeneratorSpec(lambda1, sizes, mu, theta1)


def generator_sl(lambda2, theta2, g2, N=None) -> GeneratorSpec:
    """Second-limit queue: the best-quote generator without partial market orders."""
    return generator_fl(lambda2, 0.0, theta2, g2)


def oracle_expm(spec, t: float, N: int, method: str = "pade") -> np.ndarray:
    """``exp(t Q_N)`` for the truncated generator.

    ``method`` is ``"pade"`` (scaling and squaring) or ``"uniformization"``.
    """
    if t < 0:
        raise ParameterError("t must be >= 0")
    Q = spec.matrix(N) if isinstance(spec, GeneratorSpec) else np.asarray(spec, dtype=float)
    if t == 0:
        return np.eye(Q.shape[0])
    if method == "pade":
        P = linalg.expm(t * Q)
    elif method == "uniformization":
        P = _uniformized(Q, t)
    else:
        raise ParameterError(f"unknown method {method!r}")
    return np.clip(P, 0.0, None)


def _uniformized(Q, t, tol=1e-14):
    rate = float(np.max(-np.diag(Q)))
    if rate == 0:
        return np.eye(Q.shape[0])
    A = np.eye(Q.shape[0]) + Q / rate
    lt = rate * t
    kmax = int(lt + 10 * math.sqrt(lt) + 30)
    w = stats.poisson.pmf(np.arange(kmax + 1), lt)
    term = np.eye(Q.shape[0])
    out = w[0] * term
    for k in range(1, kmax + 1):
        term = term @ A
        out += w[k] * term
        if k > lt and stats.poisson.sf(k, lt) < tol:
            break
    return out


def check_indices(N: int, *idx: int):
    if max(idx) >= N:
        raise TruncationError(f"state {max(idx)} outside oracle truncation N={N}")

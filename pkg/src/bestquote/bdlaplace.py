"""Laplace transforms of birth-death transition probabilities.

The queue moves up at constant rate ``lambda1`` and down at rate
``mu + n*theta1`` from state ``n >= 1``.  Its transition-probability
transforms are continued fractions whose leading coefficients contain the
polynomials ``B_n(s)``; these grow super-exponentially, so everything here
is expressed through the ratios ``R_k = B_k / B_{k-1}`` and log magnitudes.

For ``m <= n``::

    qhat[m, n](s) = lambda1^(n-m) * (B_m / B_n) / (R_{n+1} + T_n)

and symmetrically for ``m >= n`` with ``prod_{j=n+1}^{m} (mu + j*theta1)``,
where ``T_k`` is the tail fraction ``a_2/(b_2 + a_3/(b_3 + ...))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CFDivergenceError, ParameterError

CF_TOL = 1e-12
TINY = 1e-300
MAX_DEPTH = 100_000


@dataclass(frozen=True)
class BDSpec:
    lambda1: float
    mu: float
    theta1: float

    def __post_init__(self):
        if self.lambda1 < 0 or self.mu < 0 or self.theta1 <= 0:
            raise ParameterError("need lambda1 >= 0, mu >= 0 and theta1 > 0")

    def death(self, n):
        return np.where(np.asarray(n) > 0, self.mu + np.asarray(n) * self.theta1, 0.0)


@dataclass(frozen=True)
class CFResult:
    value: float
    iterations: int
    converged: bool
    est_error: float


def lentz(a, b, b0=0.0, tol=CF_TOL, tiny=TINY, max_depth=MAX_DEPTH) -> CFResult:
    """Evaluate ``b0 + a(1)/(b(1) + a(2)/(b(2) + ...))`` by the modified Lentz method.

    ``a`` and ``b`` are callables of the (1-based) depth.
    """
    f = b0 if b0 != 0 else tiny
    C, D = f, 0.0
    for j in range(1, max_depth + 1):
        aj, bj = a(j), b(j)
        D = bj + aj * D
        if D == 0:
            D = tiny
        C = bj + aj / C
        if C == 0:
            C = tiny
        D = 1.0 / D
        delta = C * D
        f *= delta
        if abs(delta - 1.0) < tol:
            return CFResult(f, j, True, abs(f) * abs(delta - 1.0))
    raise CFDivergenceError(f"continued fraction did not converge in {max_depth} terms",
                            partial_value=f, iterations=max_depth)


def b_ratios(s: float, nmax: int, spec: BDSpec) -> np.ndarray:
    """``R[k] = B_k(s) / B_{k-1}(s)`` for ``k = 1..nmax`` (``R[0]`` is unused)."""
    R = np.empty(nmax + 1)
    R[0] = np.nan
    if nmax >= 1:
        R[1] = s + spec.lambda1
    lam = spec.lambda1
    for k in range(2, nmax + 1):
        d = spec.mu + (k - 1) * spec.theta1
        R[k] = (s + lam + d) - lam * d / R[k - 1]
    return R


def bn(s: float, n: int, spec: BDSpec) -> tuple[float, float]:
    """``B_n(s)`` as ``(sign, log|B_n|)``."""
    if n < 0:
        raise ParameterError("n must be >= 0")
    if n == 0:
        return 1.0, 0.0
    R = b_ratios(s, n, spec)[1:]
    return float(np.prod(np.sign(R))), float(np.sum(np.log(np.abs(R))))


def log_bn(s: float, nmax: int, spec: BDSpec) -> np.ndarray:
    R = b_ratios(s, nmax, spec)
    if np.any(R[1:] <= 0):
        raise ParameterError("B_n(s) changes sign; s must be > 0")
    out = np.zeros(nmax + 1)
    out[1:] = np.cumsum(np.log(R[1:]))
    return out


def tail_fraction(s: float, k: int, spec: BDSpec) -> CFResult:
    """``T_k = a_2/(b_2 + a_3/(b_3 + ...))`` with the coefficients indexed from state ``k``."""
    lam, mu, th = spec.lambda1, spec.mu, spec.theta1
    if lam == 0:
        return CFResult(0.0, 0, True, 0.0)
    return lentz(lambda j: -lam * (mu + (k + j) * th),
                 lambda j: s + lam + mu + (k + j) * th)


def _tails(s: float, kmax: int, spec: BDSpec) -> tuple[np.ndarray, int]:
    # T_k = a_{k+2} / (b_{k+2} + T_{k+1}); seed the top by Lentz, recur downward
    top = tail_fraction(s, kmax, spec)
    T = np.empty(kmax + 1)
    T[kmax] = top.value
    lam, mu, th = spec.lambda1, spec.mu, spec.theta1
    for k in range(kmax - 1, -1, -1):
        d = mu + (k + 1) * th
        T[k] = -lam * d / (s + lam + d + T[k + 1])
    return T, top.iterations


def _check_s(s):
    if not s > 0:
        raise ParameterError("Laplace argument must be > 0")


def laplace_q(m: int, n: int, s: float, spec: BDSpec) -> CFResult:
    """Laplace transform at ``s`` of ``P(Y(t) = n | Y(0) = m)``."""
    if m < 0 or n < 0:
        raise ParameterError("states must be >= 0")
    _check_s(s)
    k = max(m, n)
    logB = log_bn(s, k + 1, spec)
    R_next = math.exp(logB[k + 1] - logB[k])
    tail = tail_fraction(s, k, spec)
    core = 1.0 / (R_next + tail.value)
    if m <= n:
        if spec.lambda1 == 0 and n > m:
            return CFResult(0.0, tail.iterations, True, 0.0)
        logpre = (n - m) * math.log(spec.lambda1) if n > m else 0.0
        val = math.exp(logpre + logB[m] - logB[n]) * core
    else:
        logpre = float(np.sum(np.log(spec.mu + np.arange(n + 1, m + 1) * spec.theta1)))
        val = math.exp(logpre + logB[n] - logB[m]) * core
    return CFResult(val, tail.iterations, tail.converged, abs(val) * tail.est_error * core)


def laplace_q_literal(m: int, n: int, s: float, spec: BDSpec, branch: str | None = None) -> CFResult:
    """Evaluate the fraction exactly as written, coefficients ``a_1 = B_m`` and ``b_1 = B_{n+1}``.

    Only usable while ``B_n`` fits in a double; ``branch`` forces the ``m <= n``
    (``"le"``) or ``m >= n`` (``"ge"``) expansion.
    """
    _check_s(s)
    branch = branch or ("le" if m <= n else "ge")
    lam, mu, th = spec.lambda1, spec.mu, spec.theta1
    lo, hi = (m, n) if branch == "le" else (n, m)
    if branch == "le" and m > n or branch == "ge" and m < n:
        raise ParameterError("branch does not cover this (m, n)")
    B = [1.0, s + lam]
    for k in range(2, hi + 2):
        d = mu + (k - 1) * th
        B.append((s + lam + d) * B[-1] - lam * d * B[-2])

    def a(i):
        if i == 1:
            return B[lo if branch == "le" else n]
        if i == 2:
            return -lam * (mu + (hi + 1) * th) * B[hi]
        return -lam * (mu + (hi + i - 1) * th)

    def b(i):
        if i == 1:
            return B[hi + 1]
        return s + lam + mu + (hi + i - 1) * th

    if branch == "le":
        pre = lam ** (n - m)
    else:
        pre = float(np.prod(mu + np.arange(n + 1, m + 1) * th))
    res = lentz(a, b)
    return CFResult(pre * res.value, res.iterations, res.converged, pre * res.est_error)


def laplace_matrix(s: float, m_count: int, n_count: int, spec: BDSpec) -> np.ndarray:
    """``qhat[m, n](s)`` for ``m < m_count`` and ``n < n_count``."""
    _check_s(s)
    K = max(m_count, n_count)
    logB = log_bn(s, K, spec)
    T, _ = _tails(s, K - 1, spec)
    R_next = np.exp(logB[1:K + 1] - logB[:K])
    core = 1.0 / (R_next + T)  # qhat[k, k]

    m = np.arange(m_count)[:, None]
    n = np.arange(n_count)[None, :]
    S = np.concatenate([[0.0], np.cumsum(np.log(spec.mu + np.arange(1, K) * spec.theta1))])
    with np.errstate(divide="ignore", invalid="ignore"):
        log_lam = math.log(spec.lambda1) if spec.lambda1 > 0 else -np.inf
        up = np.where(n > m, (n - m) * log_lam, 0.0) + logB[m] - logB[n] + np.log(core[n])
        down = S[m] - S[n] + logB[n] - logB[m] + np.log(core[m])
        out = np.exp(np.where(m <= n, up, down))
    return np.nan_to_num(out, nan=0.0)

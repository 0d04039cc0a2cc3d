"""Stationary law of the best-quote volume for the analytic model catalogue.

Models (volume distributions of the five flows per model):

====== ========= ========= ========= =============== ======== ==============
model  g0        g1        g2        pi2             mu > 0   resets
====== ========= ========= ========= =============== ======== ==============
0a     --        unit      --        --              yes      no
0b     --        geometric --        --              yes      no
1a     unit      unit      unit      Poisson         no       yes
1b     geometric geometric geometric neg. binomial   no       yes
1c     empirical geometric --        empirical       no       yes
2a     unit      unit      unit      Poisson         yes      yes
2b     geometric unit      geometric neg. binomial   yes      yes
2c     empirical unit      --        empirical       yes      yes
====== ========= ========= ========= =============== ======== ==============

With resets at total rate ``beta = lambda0 + muA`` to a law ``h``, the
stationary volume is the law of the reset-free queue observed at an
independent Exp(beta) time after a start drawn from ``h``:
``pi_j = beta * sum_i h_i * Laplace[p_ij](beta)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, stats

from . import dists
from .bdlaplace import BDSpec, laplace_matrix
from .dists import DiscreteDist, DistFamily, make_family
from .errors import (IntegrationError, NumericInstabilityError, ParameterError,
                     TruncationError)
from .params import FlowParams, resurrection_mix
from .transient import TransientKernel, generator_fl

MODEL_IDS = ("0a", "0b", "1a", "1b", "1c", "2a", "2b", "2c")
NORM_TOL = 1e-6
QUAD_TOL = 1e-10
TAIL_TOL = 1e-13


@dataclass(frozen=True)
class StationaryResult:
    pi: DiscreteDist
    model_id: str
    truncation_N: int
    quadrature_error: float = 0.0
    normalization_defect: float = 0.0
    metadata: dict = field(default_factory=dict, compare=False)

    def sidecar(self) -> dict:
        return {"model_id": self.model_id, "truncation_N": self.truncation_N,
                "quadrature_error": self.quadrature_error,
                "normalization_defect": self.normalization_defect, **self.metadata}


def _result(probs, model_id, quad_err=0.0, offset=1, **meta):
    probs = np.clip(np.asarray(probs, dtype=float), 0.0, None)
    total = math.fsum(probs)
    defect = abs(1.0 - total)
    if defect > NORM_TOL:
        raise TruncationError(f"model {model_id}: probabilities sum to {total:.12g}")
    pi = DiscreteDist(offset, probs / total, 0.0)
    return StationaryResult(pi, model_id, len(probs), float(quad_err), defect, meta)


# --- second limit -----------------------------------------------------------

def second_limit_stationary(kind, lambda2=None, theta2=None, q2=None, empirical=None) -> DiscreteDist:
    """Stationary volume at the second limit, on ``{1, 2, ...}``.

    ``kind`` is ``"unit"``, ``"geometric"`` or ``"empirical"`` (returned as
    given); a :class:`DistFamily` of sizes is solved numerically.
    """
    if kind == "empirical":
        if empirical is None:
            raise ParameterError("empirical second-limit law not provided")
        return dists.from_weights(empirical)
    if not (lambda2 and lambda2 > 0 and theta2 and theta2 > 0):
        raise ParameterError("second limit needs lambda2 > 0 and theta2 > 0")
    if kind == "unit":
        return make_family("poisson", {"rate": lambda2 / theta2}).shift(1)
    if kind == "geometric":
        if q2 is None or not 0 < q2 < 1:
            raise ParameterError("geometric second-limit sizes need q2 in (0, 1)")
        size = lambda2 / ((1.0 - q2) * theta2)
        return make_family("negative-binomial", {"size": size, "prob": q2}).shift(1)
    if isinstance(kind, DistFamily):
        if kind.kind == "dirac-unit" or (kind.kind == "geometric" and kind.q == 1.0):
            return second_limit_stationary("unit", lambda2, theta2)
        if kind.kind == "geometric":
            return second_limit_stationary("geometric", lambda2, theta2, kind.q)
        return solve_type0(lambda2, 0.0, theta2, kind).pi
    raise ParameterError(f"unknown second-limit kind {kind!r}")


def pi2_for(params: FlowParams) -> DiscreteDist:
    if params.pi2_override is not None:
        return params.pi2_override
    if params.g2_spec is None:
        raise ParameterError("no second-limit source (g2_spec or pi2_override)")
    return second_limit_stationary(params.g2_spec, params.lambda2, params.theta2)


# --- type 0 ------------------------------------------------------------------

def _size_tail(g1: DiscreteDist) -> np.ndarray:
    # P(S > n) for n = 0 .. stop-1, including the truncated tail mass
    g = g1.dense(0, g1.stop)
    return np.maximum(1.0 - np.cumsum(g), 0.0)


def type0_recurrence(lambda1, mu, theta1, g1: DiscreteDist, nmax=dists.MAX_STATES):
    """Unnormalized stationary weights from ``pi_0 = 1``.

    Uses the level-crossing form of the balance equations,
    ``(mu + (n+1) theta1) pi_{n+1} = lambda1 * sum_{k<=n} pi_k P(S > n-k)``,
    which is the running sum of the forward recurrence and has no cancellation.
    Returns ``(weights, log_scale)`` with true weights ``weights * exp(log_scale)``.
    """
    tail = _size_tail(g1)
    ntail = len(tail)
    w = np.zeros(nmax + 1)
    w[0] = 1.0
    log_scale = 0.0
    peak = 1.0
    for n in range(nmax):
        lo = max(0, n - ntail + 1)
        flux = lambda1 * np.dot(w[lo:n + 1], tail[n - lo::-1][:n + 1 - lo])
        w[n + 1] = flux / (mu + (n + 1) * theta1)
        if w[n + 1] > 1e250:
            scale = w[n + 1]
            w[:n + 2] /= scale
            log_scale += math.log(scale)
            peak /= scale
        peak = max(peak, w[n + 1])
        # past the mode, stop once the remaining weights are negligible
        if n > 2 and w[n + 1] < w[n] and w[n + 1] < peak * 1e-18:
            break
    else:
        raise NumericInstabilityError("type-0 recurrence did not reach a negligible tail")
    n_used = n + 1
    return w[:n_used + 1], log_scale


def _integral_I(g1: DiscreteDist):
    """``I(u) = int_u^1 (1 - G(v)) / (1 - v) dv`` as a callable, plus ``I(0)``."""
    tail = _size_tail(g1)
    if g1.tail_mass == 0 and len(tail) == 1:
        return (lambda u: 1.0 - u), 1.0
    n = np.arange(len(tail))

    def I(u):
        return float(np.sum(tail * (1.0 - np.power(u, n + 1)) / (n + 1)))

    return I, I(0.0)


def _geometric_I(q):
    c = 1.0 - q

    def I(u):
        return (math.log1p(-c * u) - math.log(q)) / c

    return I, -math.log(q) / c


def type0_pi0(lambda1, mu, theta1, g1_spec) -> tuple[float, float]:
    """``pi_0`` of the type-0 queue from its integral representation.

    ``1/pi_0 = int_0^1 c u^(c - 1) exp(rho I(u)) du`` with ``c = mu/theta1``
    and ``rho = lambda1/theta1``.  When ``c < 1`` the power is singular at
    zero and the integral is taken in ``w = u^c`` instead.  The
    integrand is scaled by its maximum before quadrature.
    Returns ``(pi0, relative_error_estimate)``.
    """
    fam = g1_spec if isinstance(g1_spec, DistFamily) else None
    if fam is not None and fam.kind == "geometric" and fam.q < 1:
        I, I0 = _geometric_I(fam.q)
    else:
        I, I0 = _integral_I(g1_spec if isinstance(g1_spec, DiscreteDist) else make_family(g1_spec))
    rho = lambda1 / theta1
    if mu == 0:
        return math.exp(-rho * I0), 0.0
    c = mu / theta1
    if c >= 1.0:
        def logf(u):
            return math.log(c) + (c - 1.0) * math.log(u) + rho * I(u) if u > 0 else -math.inf
    else:
        def logf(w):
            return rho * I(w ** (1.0 / c))
    grid = np.linspace(0.0, 1.0, 2049)
    vals = np.array([logf(x) for x in grid])
    k = int(np.argmax(vals))
    peak = vals[k]
    f = lambda x: math.exp(logf(x) - peak)
    pts = [grid[k]] if 0 < k < len(grid) - 1 else None
    val, err = integrate.quad(f, 0.0, 1.0, points=pts, epsabs=0.0, epsrel=1e-12, limit=1000)
    return math.exp(-peak) / val, err / val


def solve_type0(lambda1, mu, theta1, g1_spec, shift: bool = True, model_id: str = "0") -> StationaryResult:
    """Stationary law of the queue without resets (benchmark model).

    Weights come from the recurrence normalised by their sum; the integral
    form of ``pi_0`` is an independent check.
    """
    if not (lambda1 > 0 and theta1 > 0 and mu >= 0):
        raise ParameterError("type 0 needs lambda1 > 0, theta1 > 0, mu >= 0")
    g1 = g1_spec if isinstance(g1_spec, DiscreteDist) else make_family(g1_spec)
    w, log_scale = type0_recurrence(lambda1, mu, theta1, g1)
    total = math.fsum(w)
    probs = w / total
    log_pi0_rec = -math.log(total) - log_scale
    pi0, err = type0_pi0(lambda1, mu, theta1, g1_spec)
    if abs(math.log(pi0) - log_pi0_rec) > 1e-6:
        raise NumericInstabilityError(
            f"type-0 normalisation mismatch: integral {pi0!r} vs recurrence {math.exp(log_pi0_rec)!r}")
    return _result(probs, model_id, err, offset=1 if shift else 0,
                   pi0_integral=pi0, pi0_recurrence=math.exp(log_pi0_rec))


# --- types 1 and 2 -------------------------------------------------------------

def _arrival_bound(kernel_kind, lambda1, theta1, q1=None):
    # a stationary-arrivals quantile bounding the reachable queue length
    rho = lambda1 / theta1
    if kernel_kind == "geometric":
        size = lambda1 / (theta1 * (1.0 - q1))
        return int(stats.nbinom.isf(TAIL_TOL, size, q1)) + 1
    return int(stats.poisson.isf(TAIL_TOL, rho)) + 1 if rho > 0 else 1


def _h_for(params: FlowParams, h: DiscreteDist | None):
    if h is not None:
        return h, None
    mix = resurrection_mix(params, pi2_for(params) if params.muA > 0 else None)
    return mix.h, mix


def solve_model1(variant: str, params: FlowParams, h: DiscreteDist | None = None) -> StationaryResult:
    """Stationary best-quote volume with aggressive market orders only (``mu == 0``)."""
    if variant not in ("a", "b", "c"):
        raise ParameterError(f"unknown type-1 variant {variant!r}")
    if params.mu != 0:
        raise ParameterError("type-1 models require mu == 0")
    beta = params.killing_rate
    h, _ = _h_for(params, h)
    g1 = params.g1_spec
    if variant == "a" and g1.kind != "dirac-unit":
        raise ParameterError("model 1a needs unit limit-order sizes at the best quote")
    if variant in ("b", "c") and g1.kind not in ("geometric", "dirac-unit"):
        raise ParameterError(f"model 1{variant} needs geometric limit-order sizes at the best quote")
    kernel = TransientKernel.for_sizes(g1, params.lambda1, params.theta1)

    start = h.dense(1, h.stop)  # law of Y = X - 1 at a reset
    geo = kernel.variant == "model1b"
    J = h.stop + _arrival_bound("geometric" if geo else "unit", params.lambda1, params.theta1, kernel.q1)

    def f(v):
        if v <= 0.0:
            return kernel.mixed(math.inf, start, J)
        return kernel.mixed(-math.log(v) / beta, start, J)

    # pi = E[law of Y at an Exp(beta) time]; v = exp(-beta t) is uniform on (0, 1)
    val, err = integrate.quad_vec(f, 0.0, 1.0, epsabs=QUAD_TOL, epsrel=0, norm="max", limit=4000)
    if err > 1e3 * QUAD_TOL:
        raise IntegrationError(f"quadrature error estimate {err:.3g} above tolerance")
    return _result(val, f"1{variant}", err, killing_rate=beta)


def solve_model2(variant: str, params: FlowParams, h: DiscreteDist | None = None) -> StationaryResult:
    """Stationary best-quote volume with unit orders at the best quote and ``mu >= 0``."""
    if variant not in ("a", "b", "c"):
        raise ParameterError(f"unknown type-2 variant {variant!r}")
    if params.g1_spec.kind != "dirac-unit":
        raise ParameterError("type-2 models need unit limit-order sizes at the best quote")
    beta = params.killing_rate
    h, _ = _h_for(params, h)
    spec = BDSpec(params.lambda1, params.mu, params.theta1)
    J = h.stop + _arrival_bound("unit", params.lambda1, params.theta1)
    M = h.stop - 1
    Qhat = laplace_matrix(beta, M, J, spec)  # qhat[m, n], m = X0 - 1, n = X - 1
    hv = h.dense(1, h.stop)
    probs = beta * (hv @ Qhat)
    return _result(probs, f"2{variant}", 0.0, killing_rate=beta)


# --- oracle --------------------------------------------------------------------

def killed_generator_oracle(lambda1, mu, theta1, g1, beta, h: DiscreteDist | None, N=300) -> DiscreteDist:
    """Stationary law from a truncated linear system, as an independent check.

    The generator of ``X`` on ``{1..N}`` is the reset-free generator plus
    rate-``beta`` jumps from every state to ``h``.  With ``beta == 0`` this is the
    plain type-0 queue.
    """
    Q = generator_fl(lambda1, mu, theta1, g1).matrix(N)
    if beta > 0:
        hv = h.dense(1, N + 1)
        hv[-1] += max(0.0, 1.0 - math.fsum(hv))  # mass beyond N lands on the top state
        Q = Q + beta * (np.outer(np.ones(N), hv) - np.eye(N))
    A = Q.T.copy()
    A[-1, :] = 1.0
    b = np.zeros(N)
    b[-1] = 1.0
    pi = np.linalg.solve(A, b)
    pi = np.clip(pi, 0.0, None)
    return DiscreteDist(1, pi / pi.sum(), 0.0)


# --- catalogue -------------------------------------------------------------------

def _mean_of(spec: DistFamily | None) -> float:
    if spec is None:
        return 1.0
    return dists.mean(make_family(spec))


def _as_geometric(spec: DistFamily | None) -> DistFamily:
    if spec is None or spec.kind == "dirac-unit":
        return DistFamily.geometric(1.0)
    if spec.kind == "geometric":
        return spec
    return DistFamily.geometric(min(1.0, 1.0 / _mean_of(spec)))


def _as_empirical(spec: DistFamily | None) -> DistFamily:
    if spec is None:
        raise ParameterError("empirical size law required")
    if spec.kind == "empirical":
        return spec
    return DistFamily.empirical(make_family(spec))


def model_params(model_id: str, params: FlowParams) -> FlowParams:
    """Restrict a general parameter set to one catalogue model.

    Unit-size variants keep the share rate: a flow with mean size ``sigma`` at
    rate ``lambda`` becomes unit orders at rate ``lambda*sigma``.  Geometric
    variants take the maximum-likelihood parameter ``1/mean``.  Type-1 models
    drop partial market orders and, when the average volume ``L1`` is known,
    add their share outflow to the cancellation rate.
    """
    if model_id not in MODEL_IDS:
        raise ParameterError(f"unknown model id {model_id!r}")
    kind, variant = model_id
    p = params
    kw: dict = {}
    if kind == "2" or variant == "a":
        kw.update(g1_spec=DistFamily.unit(), lambda1=p.lambda1 * _mean_of(p.g1_spec))
    else:
        kw.update(g1_spec=_as_geometric(p.g1_spec))

    if kind == "0":
        kw.update(lambda0=0.0, muA=0.0)
        return p.replace(**kw)
    if kind == "1":
        theta1 = p.theta1 + p.mu / p.L1 if p.mu > 0 and p.L1 else p.theta1
        kw.update(mu=0.0, theta1=theta1)

    if variant == "a":
        lam2 = p.lambda2 * _mean_of(p.g2_spec) if p.g2_spec is not None else p.lambda2
        kw.update(g0_spec=DistFamily.unit(), g2_spec=DistFamily.unit(), pi2_override=None, lambda2=lam2)
    elif variant == "b":
        if p.g2_spec is None:
            raise ParameterError(f"model {model_id} needs a second-limit size law g2_spec")
        kw.update(g0_spec=_as_geometric(p.g0_spec), g2_spec=_as_geometric(p.g2_spec), pi2_override=None)
    else:
        pi2 = p.pi2_override if p.pi2_override is not None else p.pi2_empirical
        if pi2 is None and p.muA > 0:
            pi2 = pi2_for(p)
        kw.update(g0_spec=_as_empirical(p.g0_spec), pi2_override=pi2, g2_spec=None)
    return p.replace(**kw)


def simulated_model_params(params: FlowParams, coupled: bool | None = None) -> FlowParams:
    """Parameters for the fully empirical simulated benchmark (model 3).

    Every size law is used as observed.  With a live second limit
    (``coupled``, the default whenever ``g2_spec`` and ``lambda2`` are given)
    its arrivals keep the observed size law; otherwise aggressive market orders
    promote a draw from the observed second-limit volume law.
    """
    if coupled is None:
        coupled = params.g2_spec is not None and params.lambda2 > 0
    kw = dict(g0_spec=_as_empirical(params.g0_spec), g1_spec=_as_empirical(params.g1_spec))
    if coupled:
        if params.g2_spec is None or params.lambda2 <= 0:
            raise ParameterError("a live second limit needs g2_spec and lambda2 > 0")
        return params.replace(g2_spec=_as_empirical(params.g2_spec), pi2_override=None, **kw)
    pi2 = params.pi2_override if params.pi2_override is not None else params.pi2_empirical
    if pi2 is None:
        pi2 = pi2_for(params)
    return params.replace(g2_spec=None, pi2_override=pi2, **kw)


def solve(model_id: str, params: FlowParams, restrict: bool = True, truncation: int | None = None) -> StationaryResult:
    """Stationary best-quote volume for any catalogue model.

    ``truncation`` caps the reported support at volume ``N``; the mass cut off
    must stay below the normalisation tolerance.
    """
    p = model_params(model_id, params) if restrict else params
    kind, variant = model_id[0], model_id[1]
    if kind == "0":
        res = solve_type0(p.lambda1, p.mu, p.theta1, p.g1_spec, model_id=model_id)
    elif kind == "1":
        res = solve_model1(variant, p)
    else:
        res = solve_model2(variant, p)
    if truncation is None or res.pi.stop <= truncation + 1:
        return res
    if truncation < 1:
        raise ParameterError("truncation must be >= 1")
    kept = res.pi.dense(1, truncation + 1)
    return _result(kept, model_id, res.quadrature_error, **res.metadata)

"""Model parameters, cancellation-rate calibration and the reset distribution."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields, replace
from typing import Any

from .dists import DiscreteDist, DistFamily, from_weights, make_family, mixture
from .errors import InfeasibleBalanceError, NoKillingError, ParameterError

RATE_FIELDS = ("lambda0", "lambda1", "lambda2", "mu", "muA", "theta1", "theta2")


@dataclass(frozen=True)
class FlowParams:
    """Poisson rates (per second) and size laws of the five order flows.

    ``theta1``/``theta2`` are per-share cancellation rates.  ``pi2_override``
    replaces the modelled second-limit volume by a given law on ``{1, 2, ...}``.
    ``pi2_empirical`` is an observed second-limit law carried alongside
    ``g2_spec`` for the empirical model variants; ``L1``/``L2`` are the observed
    time-averaged volumes.  Both are filled in by estimation.
    """

    lambda0: float = 0.0
    lambda1: float = 0.0
    lambda2: float = 0.0
    mu: float = 0.0
    muA: float = 0.0
    theta1: float = 1.0
    theta2: float = 1.0
    g0_spec: DistFamily = field(default_factory=DistFamily.unit)
    g1_spec: DistFamily = field(default_factory=DistFamily.unit)
    g2_spec: DistFamily | None = field(default_factory=DistFamily.unit)
    pi2_override: DiscreteDist | None = None
    pi2_empirical: DiscreteDist | None = None
    L1: float | None = None
    L2: float | None = None

    def __post_init__(self):
        for name in RATE_FIELDS:
            v = getattr(self, name)
            if v is None or not math.isfinite(v) or v < 0:
                raise ParameterError(f"{name} must be a finite nonnegative rate, got {v!r}")
        if self.theta1 <= 0:
            raise ParameterError("theta1 must be > 0")
        if self.g2_spec is not None and self.pi2_override is not None:
            raise ParameterError("give either g2_spec or pi2_override, not both")
        for name in ("pi2_override", "pi2_empirical"):
            if getattr(self, name) is not None:
                object.__setattr__(self, name, from_weights(getattr(self, name)))

    @property
    def killing_rate(self) -> float:
        return self.lambda0 + self.muA

    def replace(self, **kw) -> "FlowParams":
        return replace(self, **kw)

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {name: getattr(self, name) for name in RATE_FIELDS}
        for name in ("g0_spec", "g1_spec", "g2_spec"):
            spec = getattr(self, name)
            d[name] = None if spec is None else spec.to_dict()
        for name in ("pi2_override", "pi2_empirical"):
            p = getattr(self, name)
            d[name] = None if p is None else {"offset": p.offset, "probs": [float(v) for v in p.probs]}
        d["L1"] = self.L1
        d["L2"] = self.L2
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "FlowParams":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known - {"metadata"}
        if unknown:
            raise ParameterError(f"unknown parameter fields: {sorted(unknown)}")
        kw: dict[str, Any] = {}
        for name in RATE_FIELDS:
            if name in d and d[name] is not None:
                kw[name] = float(d[name])
        for name in ("g0_spec", "g1_spec"):
            if d.get(name) is not None:
                kw[name] = DistFamily.from_dict(d[name])
        if "g2_spec" in d:
            kw["g2_spec"] = None if d["g2_spec"] is None else DistFamily.from_dict(d["g2_spec"])
        if d.get("pi2_override") is not None:
            p = d["pi2_override"]
            kw["pi2_override"] = from_weights(p["probs"], offset=int(p.get("offset", 1)))
            if "g2_spec" not in d:
                kw["g2_spec"] = None
        if d.get("pi2_empirical") is not None:
            p = d["pi2_empirical"]
            kw["pi2_empirical"] = from_weights(p["probs"], offset=int(p.get("offset", 1)))
        for name in ("L1", "L2"):
            if d.get(name) is not None:
                kw[name] = float(d[name])
        return cls(**kw)

    def dumps(self, metadata: dict | None = None) -> str:
        d = self.to_dict()
        if metadata:
            d["metadata"] = metadata
        return json.dumps(d, indent=2, sort_keys=True) + "\n"

    @classmethod
    def loads(cls, text: str) -> "FlowParams":
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParameterError(f"parameter file is not valid JSON: {exc}") from None
        return cls.from_dict(d)


@dataclass(frozen=True)
class ResurrectionMix:
    h: DiscreteDist
    weight_limit: float
    weight_market: float


def calibrate_theta1(lambda1, sigma1, mu, sigma_mu, muA, sigma_muA, L1):
    """Best-quote cancellation rate from ``lambda1*sigma1 = mu*sigma_mu + muA*sigma_muA + theta1*L1``."""
    if not L1 > 0:
        raise ParameterError("average best-quote volume L1 must be positive")
    surplus = lambda1 * sigma1 - mu * sigma_mu - muA * sigma_muA
    if surplus <= 0:
        raise InfeasibleBalanceError(
            f"best-quote inflow {lambda1 * sigma1:g} does not exceed market-order outflow "
            f"{mu * sigma_mu + muA * sigma_muA:g}")
    return surplus / L1


def calibrate_theta2(lambda2, sigma2, L2):
    """Second-limit cancellation rate from ``lambda2*sigma2 = theta2*L2``."""
    if not L2 > 0:
        raise ParameterError("average second-limit volume L2 must be positive")
    if lambda2 * sigma2 <= 0:
        raise InfeasibleBalanceError("second-limit inflow must be positive")
    return lambda2 * sigma2 / L2


def calibrate_thetas(lambda1, sigma1, mu, sigma_mu, muA, sigma_muA, lambda2, sigma2, L1, L2):
    """Cancellation rates that balance mean share inflow and outflow at both limits."""
    return (calibrate_theta1(lambda1, sigma1, mu, sigma_mu, muA, sigma_muA, L1),
            calibrate_theta2(lambda2, sigma2, L2))


def resurrection_mix(params: FlowParams, pi2: DiscreteDist | None, g0: DiscreteDist | None = None) -> ResurrectionMix:
    """Post-reset volume law: ``g0`` w.p. lambda0/(lambda0+muA), else ``pi2``.

    ``pi2`` may be None when ``muA == 0``.
    """
    beta = params.killing_rate
    if beta <= 0:
        raise NoKillingError("lambda0 + muA must be positive for a reset mechanism")
    if g0 is None:
        g0 = make_family(params.g0_spec)
    if pi2 is None:
        if params.muA > 0:
            raise ParameterError("aggressive market orders need a second-limit volume law")
    elif pi2.offset < 1 and pi2.pmf(0) > 0:
        raise ParameterError("second-limit volume must live on {1, 2, ...}")
    wl = params.lambda0 / beta
    wm = params.muA / beta
    if wm == 0.0:
        h = g0
    elif wl == 0.0:
        h = pi2
    else:
        h = mixture([wl, wm], [g0, pi2])
    if h.offset == 0:
        h = DiscreteDist(1, h.probs[1:], h.tail_mass)
    return ResurrectionMix(h=h, weight_limit=wl, weight_market=wm)

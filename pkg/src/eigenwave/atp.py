"""Closed-form average transmit power and outage probabilities."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

from scipy.integrate import quad

from .eigen import (
    AnalyticFormUnavailable,
    ChannelDims,
    inverse_moment_tail,
    log_tail_integral,
    ordered_eigen_pdf,
    outage_cdf,
)
from .policy import (
    InfeasibleSpecError,
    Modulation,
    PolicyParams,
    StreamSpec,
    derive_params,
    feasibility_check,
    power_dynamic,
    power_traditional,
)
from .special import gaussian_q

__all__ = [
    "AtpBreakdown",
    "GlobalOutage",
    "rho_s",
    "rho_delta",
    "atp_traditional",
    "atp_dynamic",
    "individual_op",
    "global_op",
    "stream_atp",
    "system_atp",
    "conditional_ber",
]

QUAD_RTOL = 1e-11


@dataclass(frozen=True)
class AtpBreakdown:
    rho_s_hat: float
    rho_delta: float
    rho_saving: float = 0.0

    @property
    def total(self) -> float:
        return self.rho_s_hat + self.rho_delta - self.rho_saving


class GlobalOutage(NamedTuple):
    bound: float
    exact_if_equal: Optional[float]


def rho_s(dims: ChannelDims, i: int, snr: float, lambda_lo: float) -> float:
    """Average of snr / lambda_i over lambda_i > lambda_lo (zero elsewhere)."""
    if snr < 0.0:
        raise ValueError(f"snr must be >= 0, got {snr!r}")
    return snr * inverse_moment_tail(dims, i, lambda_lo)


def _rho_delta_quad(dims, i, lambda_out, delta, beta):
    def integrand(x):
        return math.log(x * delta / lambda_out) * ordered_eigen_pdf(dims, i, x) / x

    lambda_mea = lambda_out / delta
    pieces = [(lambda_out, lambda_mea)] if lambda_mea > lambda_out else []
    total = 0.0
    for a, b in pieces:
        total += quad(integrand, a, b, epsabs=0.0, epsrel=QUAD_RTOL, limit=200)[0]
    total += quad(integrand, max(lambda_mea, lambda_out), math.inf,
                  epsabs=0.0, epsrel=QUAD_RTOL, limit=200)[0]
    return 2.0 / beta * total


def rho_delta(dims: ChannelDims, i: int, lambda_out: float, delta: float,
              beta: float) -> float:
    """Average of (2/(beta x)) ln(x delta / lambda_out) over x > lambda_out.

    Square arrays put an x^0 term in the expansion, for which no finite
    closed form exists; the whole integral is then done by quadrature.
    """
    if not beta > 0:
        raise ValueError(f"beta must be > 0, got {beta!r}")
    try:
        return 2.0 / beta * log_tail_integral(dims, i, lambda_out, delta)
    except AnalyticFormUnavailable:
        return _rho_delta_quad(dims, i, lambda_out, delta, beta)


def _require_feasible(spec: StreamSpec, params: PolicyParams):
    check = feasibility_check(spec, params.lambda_out, params.lambda_mea)
    if not check:
        raise InfeasibleSpecError(
            f"stream {spec.stream}: target BER {spec.target_ber:.3g} exceeds the "
            f"ceiling {check.ceiling:.3g}")


def atp_traditional(dims: ChannelDims, spec: StreamSpec, params: PolicyParams) -> AtpBreakdown:
    _require_feasible(spec, params)
    i = spec.stream
    return AtpBreakdown(
        rho_s_hat=rho_s(dims, i, params.snr_hat, params.lambda_out),
        rho_delta=rho_delta(dims, i, params.lambda_out, params.delta, spec.modulation.beta),
    )


def atp_dynamic(dims: ChannelDims, spec: StreamSpec, params: PolicyParams) -> AtpBreakdown:
    base = atp_traditional(dims, spec, params)
    saving = rho_s(dims, spec.stream, max(params.snr_hat - params.snr_tilde, 0.0),
                   params.lambda_mea)
    return AtpBreakdown(base.rho_s_hat, base.rho_delta, saving)


def stream_atp(dims: ChannelDims, spec: StreamSpec, policy: str = "traditional",
               params: Optional[PolicyParams] = None) -> AtpBreakdown:
    """Convenience wrapper resolving the policy constants first."""
    params = params or derive_params(dims, spec)
    if policy in ("traditional", "trad"):
        return atp_traditional(dims, spec, params)
    if policy in ("dynamic", "dyn"):
        return atp_dynamic(dims, spec, params)
    raise ValueError(f"unknown policy {policy!r}")


def system_atp(dims: ChannelDims, specs: Sequence[StreamSpec],
               policy: str = "traditional") -> float:
    """Sum of per-stream ATPs; the per-stream problems are independent."""
    return math.fsum(stream_atp(dims, spec, policy).total for spec in specs)


def individual_op(dims: ChannelDims, i: int, lambda_out: float) -> float:
    return outage_cdf(dims, i, lambda_out)


def global_op(dims: ChannelDims, lambda_out_per_stream: Sequence[float]) -> GlobalOutage:
    """Probability that every stream is in outage at once.

    Always bounded by the first stream's individual OP, since the largest
    eigenvalue dominates. With one common threshold the bound is exact.
    """
    thresholds = [float(t) for t in lambda_out_per_stream]
    if len(thresholds) != dims.m:
        raise ValueError(f"need {dims.m} thresholds, got {len(thresholds)}")
    if any(not t > 0 for t in thresholds):
        raise ValueError("thresholds must be > 0")
    bound = outage_cdf(dims, 1, thresholds[0])
    exact = bound if all(t == thresholds[0] for t in thresholds) else None
    return GlobalOutage(bound, exact)


def conditional_ber(dims: ChannelDims, spec: StreamSpec, params: PolicyParams,
                    policy: str = "traditional", bound: str = "exact") -> float:
    """Average BER given transmission, by quadrature over lambda > lambda_out.

    ``bound="exact"`` integrates xi Q(sqrt(beta p lambda)); ``"chernoff"``
    integrates the surrogate (xi/2) exp(-beta p lambda / 2), which the
    traditional rule meets with equality.
    """
    mod: Modulation = spec.modulation
    power = power_dynamic if policy in ("dynamic", "dyn") else power_traditional
    i = spec.stream

    if bound == "exact":
        def ber(gain):
            return mod.xi * gaussian_q(math.sqrt(gain))
    elif bound == "chernoff":
        def ber(gain):
            return 0.5 * mod.xi * math.exp(-0.5 * gain)
    else:
        raise ValueError(f"unknown bound {bound!r}")

    def integrand(x):
        return ber(mod.beta * power(x, params, mod) * x) * ordered_eigen_pdf(dims, i, x)

    lo, mid = params.lambda_out, max(params.lambda_mea, params.lambda_out)
    total = 0.0
    if mid > lo:
        total += quad(integrand, lo, mid, epsabs=0.0, epsrel=QUAD_RTOL, limit=200)[0]
    total += quad(integrand, mid, math.inf, epsabs=0.0, epsrel=QUAD_RTOL, limit=200)[0]
    return total / params.p_transmit

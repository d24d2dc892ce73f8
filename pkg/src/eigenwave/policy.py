"""Per-stream policy constants and the instantaneous power-allocation rules.

Two rules are provided. Both switch a stream off when its eigenvalue is
below the outage threshold ``lambda_out`` and otherwise invert the BER
bound so the average constraint is met with equality in the bound:

* ``power_traditional`` uses the Chernoff bound Q(x) <= exp(-x^2/2)/2;
* ``power_dynamic`` additionally uses the tighter (xi/c) exp(-beta SNR/2)
  bound above ``lambda_mea``, where it is valid because Q(t) exp(t^2/2)
  is decreasing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .eigen import ChannelDims, inverse_moment_tail, outage_cdf
from .special import gaussian_q, inverse_q

__all__ = [
    "Modulation",
    "BPSK",
    "StreamSpec",
    "PolicyParams",
    "Feasibility",
    "InfeasibleSpecError",
    "DegenerateStreamError",
    "BracketError",
    "solve_lambda_out",
    "lambda_out_from_siso_oe",
    "compute_lambda_mea",
    "feasibility_check",
    "snr_hat_from_ber",
    "snr_tilde_and_c",
    "chernoff_gap_db",
    "resolve_lambda_out",
    "derive_params",
    "power_traditional",
    "power_dynamic",
]

BISECT_RTOL = 1e-12
BISECT_MAXITER = 200
LAMBDA_BRACKET = (1e-12, 1e3)


class InfeasibleSpecError(ValueError):
    """The BER target is above the ceiling (xi/2) * lambda_out / lambda_mea."""


class DegenerateStreamError(ArithmeticError):
    """The stream is (numerically) always in outage."""


class BracketError(ValueError):
    """The requested outage probability is not reachable in the bracket."""


@dataclass(frozen=True)
class Modulation:
    """Short-term BER model ``xi * Q(sqrt(beta * SNR))``."""

    xi: float = 1.0
    beta: float = 2.0

    def __post_init__(self):
        if not (self.xi > 0 and self.beta > 0):
            raise ValueError(f"modulation needs xi > 0 and beta > 0, got {self}")


BPSK = Modulation(1.0, 2.0)


@dataclass(frozen=True)
class StreamSpec:
    """Constraints for one eigen-stream.

    Exactly one of ``lambda_out``, ``target_op`` and ``oe`` (SISO outage
    exponent) selects the outage threshold.
    """

    stream: int
    target_ber: float
    modulation: Modulation = BPSK
    lambda_out: Optional[float] = None
    target_op: Optional[float] = None
    oe: Optional[float] = None

    def __post_init__(self):
        chosen = [v for v in (self.lambda_out, self.target_op, self.oe) if v is not None]
        if len(chosen) != 1:
            raise ValueError("set exactly one of lambda_out, target_op, oe")
        if self.lambda_out is not None and not self.lambda_out > 0:
            raise ValueError(f"lambda_out must be > 0, got {self.lambda_out!r}")
        if self.target_op is not None and not 0 < self.target_op < 1:
            raise ValueError(f"target_op must lie in (0, 1), got {self.target_op!r}")
        if self.oe is not None and not self.oe > 0:
            raise ValueError(f"oe must be > 0, got {self.oe!r}")
        if not 0 < self.target_ber < 0.5 * self.modulation.xi:
            raise ValueError(
                f"target_ber must lie in (0, xi/2) = (0, {0.5 * self.modulation.xi}), "
                f"got {self.target_ber!r}")


@dataclass(frozen=True)
class PolicyParams:
    lambda_out: float
    p_transmit: float
    lambda_mea: float
    delta: float
    snr_hat: float
    snr_tilde: float
    c_param: float


class Feasibility(NamedTuple):
    feasible: bool
    ceiling: float

    def __bool__(self):
        return self.feasible


def lambda_out_from_siso_oe(upsilon: float) -> float:
    """Rayleigh SISO threshold whose outage probability is 10**-upsilon."""
    if not upsilon > 0:
        raise ValueError(f"outage exponent must be > 0, got {upsilon!r}")
    return -math.log1p(-10.0 ** (-upsilon))


def solve_lambda_out(dims: ChannelDims, i: int, target_op: float) -> float:
    """Threshold with P(lambda_i < threshold) = target_op, by bisection."""
    if not 0.0 < target_op < 1.0:
        raise ValueError(f"target_op must lie in (0, 1), got {target_op!r}")
    lo, hi = LAMBDA_BRACKET
    f_lo = outage_cdf(dims, i, lo)
    f_hi = outage_cdf(dims, i, hi)
    if not f_lo <= target_op <= f_hi:
        raise BracketError(
            f"target_op={target_op!r} outside [{f_lo!r}, {f_hi!r}] "
            f"reachable on [{lo}, {hi}]")
    for _ in range(BISECT_MAXITER):
        # geometric midpoint while the bracket spans decades
        mid = math.sqrt(lo * hi) if hi > 4.0 * lo else 0.5 * (lo + hi)
        if outage_cdf(dims, i, mid) < target_op:
            lo = mid
        else:
            hi = mid
        if hi - lo <= BISECT_RTOL * hi:
            return 0.5 * (lo + hi)
    raise ArithmeticError(f"bisection did not converge in {BISECT_MAXITER} iterations")


def compute_lambda_mea(dims: ChannelDims, i: int, lambda_out: float) -> float:
    """Transmit probability divided by the inverse-moment tail."""
    p_transmit = 1.0 - outage_cdf(dims, i, lambda_out)
    if p_transmit < 1e-12:
        raise DegenerateStreamError(
            f"stream {i} transmits with probability {p_transmit!r}")
    return p_transmit / inverse_moment_tail(dims, i, lambda_out)


def feasibility_check(spec: StreamSpec, lambda_out: float, lambda_mea: float) -> Feasibility:
    ceiling = 0.5 * spec.modulation.xi * (lambda_out / lambda_mea)
    return Feasibility(spec.target_ber <= ceiling, ceiling)


def snr_hat_from_ber(target_ber: float, mod: Modulation = BPSK) -> float:
    """SNR at which the Chernoff surrogate (xi/2) exp(-beta SNR/2) hits the target."""
    if not 0.0 < target_ber <= 0.5 * mod.xi:
        raise ValueError(f"target_ber must lie in (0, xi/2], got {target_ber!r}")
    return (2.0 / mod.beta) * math.log(0.5 * mod.xi / target_ber)


def snr_tilde_and_c(target_ber: float, mod: Modulation = BPSK) -> tuple[float, float]:
    """Exact-Q SNR for the target and the tight constant c of the dynamic bound.

    ``c`` makes (xi/c) exp(-beta SNR/2) equal to the target at that SNR.
    """
    if not 0.0 < target_ber <= 0.5 * mod.xi:
        raise ValueError(f"target_ber must lie in (0, xi/2], got {target_ber!r}")
    root = inverse_q(target_ber / mod.xi)
    snr_tilde = root * root / mod.beta
    if root == 0.0:
        return 0.0, 2.0
    # c = exp(-root^2/2) / Q(root) without forming the underflowing parts
    c_param = math.exp(-0.5 * root * root - math.log(gaussian_q(root)))
    return snr_tilde, c_param


def chernoff_gap_db(target_ber: float, mod: Modulation = BPSK) -> float:
    """Extra SNR, in dB, that the Chernoff bound demands over the exact Q."""
    snr_tilde, _ = snr_tilde_and_c(target_ber, mod)
    return 10.0 * math.log10(snr_hat_from_ber(target_ber, mod) / snr_tilde)


def resolve_lambda_out(dims: ChannelDims, spec: StreamSpec) -> float:
    if spec.lambda_out is not None:
        return float(spec.lambda_out)
    if spec.oe is not None:
        return lambda_out_from_siso_oe(spec.oe)
    return solve_lambda_out(dims, spec.stream, spec.target_op)


def derive_params(dims: ChannelDims, spec: StreamSpec) -> PolicyParams:
    """Resolve every policy constant for ``spec`` (no feasibility check)."""
    i = dims.check_index(spec.stream)
    lambda_out = resolve_lambda_out(dims, spec)
    p_transmit = 1.0 - outage_cdf(dims, i, lambda_out)
    lambda_mea = compute_lambda_mea(dims, i, lambda_out)
    snr_tilde, c_param = snr_tilde_and_c(spec.target_ber, spec.modulation)
    return PolicyParams(
        lambda_out=lambda_out,
        p_transmit=p_transmit,
        lambda_mea=lambda_mea,
        delta=min(lambda_out / lambda_mea, 1.0),
        snr_hat=snr_hat_from_ber(spec.target_ber, spec.modulation),
        snr_tilde=snr_tilde,
        c_param=c_param,
    )


def _power(lam, snr, params: PolicyParams, mod: Modulation):
    lam = np.asarray(lam, dtype=np.float64)
    on = lam > params.lambda_out
    safe = np.where(on, lam, 1.0)
    snr = np.broadcast_to(snr, lam.shape)
    p = snr / safe + (2.0 / (mod.beta * safe)) * np.log(safe * params.delta / params.lambda_out)
    p = np.where(on, p, 0.0)
    return float(p) if p.ndim == 0 else p


def power_traditional(lam, params: PolicyParams, mod: Modulation = BPSK):
    """Power for eigenvalue(s) ``lam`` under the Chernoff-bound rule."""
    return _power(lam, params.snr_hat, params, mod)


def power_dynamic(lam, params: PolicyParams, mod: Modulation = BPSK):
    """Power under the dynamic-bound rule: ``snr_tilde`` above ``lambda_mea``."""
    snr = np.where(np.asarray(lam) > params.lambda_mea, params.snr_tilde, params.snr_hat)
    return _power(lam, snr, params, mod)

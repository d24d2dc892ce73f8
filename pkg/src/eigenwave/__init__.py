"""Outage probability and minimum average transmit power for eigen-beamformed
MIMO links with per-stream BER and outage constraints."""

__version__ = "0.1.0"

from .atp import (  # noqa: E402
    AtpBreakdown,
    atp_dynamic,
    atp_traditional,
    global_op,
    individual_op,
    rho_delta,
    rho_s,
    stream_atp,
    system_atp,
)
from .eigen import (  # noqa: E402
    ChannelDims,
    build_min_subset_density,
    inverse_moment_tail,
    log_tail_integral,
    ordered_eigen_pdf,
    outage_cdf,
)
from .policy import (  # noqa: E402
    BPSK,
    Modulation,
    PolicyParams,
    StreamSpec,
    derive_params,
    power_dynamic,
    power_traditional,
)

__all__ = [
    "__version__",
    "AtpBreakdown",
    "BPSK",
    "ChannelDims",
    "Modulation",
    "PolicyParams",
    "StreamSpec",
    "atp_dynamic",
    "atp_traditional",
    "build_min_subset_density",
    "derive_params",
    "global_op",
    "individual_op",
    "inverse_moment_tail",
    "log_tail_integral",
    "ordered_eigen_pdf",
    "outage_cdf",
    "power_dynamic",
    "power_traditional",
    "rho_delta",
    "rho_s",
    "stream_atp",
    "system_atp",
]

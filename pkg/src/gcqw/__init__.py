"""Generalized coined quantum walks on a cycle: simulation, spectra and closed-form predictions."""

__version__ = "0.1.0"

from .walk import (  # noqa: E402
    CoinSpec,
    CoinVariant,
    InitialState,
    PhaseProfile,
    WalkConfig,
    WalkState,
    build_coin,
    choose_cycle_size,
    evolve,
    position_distribution,
    return_probability,
    sigma,
    step,
)
from .analytics import (  # noqa: E402
    bessel_j0,
    find_recurrences,
    period_T,
    predict_PkT,
    predict_PT,
    predict_sigma,
    sigma_max,
    tau,
)

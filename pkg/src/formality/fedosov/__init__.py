"""Chart-level resolutions of polyvector fields and polydifferential
operators with polynomial data, and the globalization pipeline."""
from .spaces import ChartSpaces
from .chart import Chart, ConnectionData
from .structures import (
    base_structures, fiberwise_structures, hkr_fiberwise, omega_dglas,
    omega_structures, tau_nu_inverse_morphism,
)

__all__ = [
    "Chart", "ChartSpaces", "ConnectionData", "base_structures",
    "fiberwise_structures", "hkr_fiberwise", "omega_dglas",
    "omega_structures", "tau_nu_inverse_morphism",
]

"""Two-step methane-air chemistry, reactor integration and the ignition-delay model."""

from .forward import CombustionForward, combustion_forward, preexponential_logA
from .mechanism import Mechanism, load_mechanism
from .reactor import (
    KineticsInput, ReactorState, Trajectory, chemical_time_scale, element_totals,
    fixed_step_temperature, ignition_delay, ignition_delay_direct, integrate_reactor,
    reaction_rates,
)

__all__ = [
    "CombustionForward", "KineticsInput", "Mechanism", "ReactorState", "Trajectory",
    "chemical_time_scale", "combustion_forward", "element_totals", "fixed_step_temperature",
    "ignition_delay", "ignition_delay_direct", "integrate_reactor", "load_mechanism",
    "preexponential_logA", "reaction_rates",
]

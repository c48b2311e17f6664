from .base import Jacobian, NoReferenceError, Problem
from .diffusion import DiffusionProblem
from .freefall import FreeFallProblem, power_law_slope
from .wave import AdvectionScheme, WaveProblem, pulse_amplitude

__all__ = [
    "AdvectionScheme",
    "DiffusionProblem",
    "FreeFallProblem",
    "Jacobian",
    "NoReferenceError",
    "Problem",
    "WaveProblem",
    "power_law_slope",
    "pulse_amplitude",
]

"""Continuous operator frames and K-operator frames over matrix C*-algebras."""

from .cstar import PencilResult, Tolerance, pencil_inf, pencil_sup
from .frames import (
    FrameBounds,
    KOperator,
    MeasureSpace,
    OperatorFrame,
    classify,
    frame_gram,
    k_frame_bounds,
    optimal_bounds,
)
from .module import L2Family, ModuleOperator, ModuleVector
from .perturbation import THEOREMS, Certificate

__version__ = "0.1.0"

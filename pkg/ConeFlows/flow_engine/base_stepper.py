from abc import ABC, abstractmethod
from typing import NamedTuple

import numpy as np

from ConeFlows.curve_core import ExtendedNodes
from ConeFlows.schemas import StepperKind


class Advance(NamedTuple):
    nodes: np.ndarray
    max_speed: float
    lambda_used: float


# Interface of what a time stepper is able to do
class BaseStepper(ABC):
    def __init__(self, kind: StepperKind) -> None:
        self.kind = kind

    @abstractmethod
    def nominal_dt(self, state) -> float:
        pass

    @abstractmethod
    def advance(self, state, ghosts: ExtendedNodes, dt: float) -> Advance:
        """Raw node positions after one step of size dt; no projection or resampling."""
        pass

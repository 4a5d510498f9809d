"""Shared attack result record."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass
class AttackResult:
    rho_star: float
    steps: int
    success: bool
    distortion_trace: list[float] = field(default_factory=list)
    final_distortion: float = math.nan
    perturbation: np.ndarray | None = None
    extras: dict = field(default_factory=dict)

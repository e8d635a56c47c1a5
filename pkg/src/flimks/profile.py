"""The shape function phi and its companion psi."""
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Tuple

import numpy as np

logger = logging.getLogger(__name__)


class Side(Enum):
    LEFT = "left"
    RIGHT = "right"


class ConstraintViolation(ValueError):
    """A construction hypothesis does not hold.

    ``report`` lists ``(name, required, actual)`` for every failed condition.
    """

    def __init__(self, message: str, report: List[Tuple[str, float, float]] = None):
        super().__init__(message)
        self.report = list(report or [])


def _as_array(xi):
    arr = np.asarray(xi, dtype=float)
    return arr, arr.ndim == 0


def _out(values: np.ndarray, scalar: bool):
    return float(values) if scalar else values


@dataclass(frozen=True)
class PhiProfile:
    """phi(xi) = lam*xi^2 on [0, 1] and 1 - a_lam/(xi - b_lam) beyond.

    The two branches agree to first order at xi = 1; phi'' jumps there.
    """
    lam: float
    a_lam: float = field(init=False)
    b_lam: float = field(init=False)

    def __post_init__(self):
        lam = float(self.lam)
        if not 0.0 < lam < 1.0:
            raise ValueError(f"lambda must lie in (0, 1), got {self.lam}")
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "a_lam", (1.0 - lam) ** 2 / (2.0 * lam))
        object.__setattr__(self, "b_lam", (3.0 * lam - 1.0) / (2.0 * lam))

    @property
    def ab_sum(self) -> float:
        """a_lam + b_lam, equal to (lam + 1)/2."""
        return 0.5 * (self.lam + 1.0)

    def _split(self, xi):
        arr, scalar = _as_array(xi)
        if np.any(arr < 0):
            raise ValueError(f"xi must be nonnegative, got min {arr.min()}")
        return arr, scalar, arr <= 1.0

    def phi(self, xi):
        arr, scalar, inner = self._split(xi)
        out = np.empty_like(arr)
        out[inner] = self.lam * arr[inner] ** 2
        out[~inner] = 1.0 - self.a_lam / (arr[~inner] - self.b_lam)
        return _out(out, scalar)

    def phi_prime(self, xi):
        arr, scalar, inner = self._split(xi)
        out = np.empty_like(arr)
        out[inner] = 2.0 * self.lam * arr[inner]
        out[~inner] = self.a_lam / (arr[~inner] - self.b_lam) ** 2
        return _out(out, scalar)

    def phi_second(self, xi, side: Side = Side.LEFT):
        """phi''; at xi == 1 exactly the one-sided value picked by ``side``."""
        arr, scalar = _as_array(xi)
        if np.any(arr < 0):
            raise ValueError(f"xi must be nonnegative, got min {arr.min()}")
        inner = arr < 1.0
        if side is Side.LEFT:
            inner |= arr == 1.0
        out = np.empty_like(arr)
        out[inner] = 2.0 * self.lam
        out[~inner] = -2.0 * self.a_lam / (arr[~inner] - self.b_lam) ** 3
        return _out(out, scalar)

    def psi(self, xi):
        arr, scalar = _as_array(xi)
        if np.any(arr < 1.0):
            raise ValueError(f"psi is defined for xi >= 1, got min {arr.min()}")
        out = arr * (arr - self.b_lam) / (arr - self.ab_sum)
        return _out(out, scalar)

    def psi_critical_points(self) -> Tuple[float, float]:
        """Zeros of psi' (xi_minus < 1 < xi_plus)."""
        spread = (1.0 - self.lam) * math.sqrt((self.lam + 1.0) / self.lam)
        return 0.5 * (self.lam + 1.0 - spread), 0.5 * (self.lam + 1.0 + spread)

    def b_ceiling(self, K: float) -> float:
        """Largest B for which psi is controlled on [1, K/sqrt(B)]."""
        return K * K / (4.0 * self.ab_sum ** 2)

    def psi_bound(self, K: float, B: float) -> float:
        """Upper bound max{1/lam, 2K/sqrt(B)} for psi on [1, K/sqrt(B)]."""
        if not K > 1.0:
            raise ValueError(f"K must exceed 1, got {K}")
        if not 0.0 < B < 1.0:
            raise ValueError(f"B must lie in (0, 1), got {B}")
        ceiling = self.b_ceiling(K)
        if B > ceiling:
            raise ConstraintViolation(
                f"B={B} exceeds K^2/(4(a+b)^2)={ceiling}",
                [("B <= K^2/(4(a+b)^2)", ceiling, B)],
            )
        return max(1.0 / self.lam, 2.0 * K / math.sqrt(B))

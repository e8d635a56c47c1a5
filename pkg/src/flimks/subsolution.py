"""Composite blow-up subsolution and its time coefficients.

The lower profile is A(t)*phi(s/B(t)) for s <= K*sqrt(B(t)) and the linear
tail D(t)*s + E(t) beyond, with A, D, E chosen so that both branches agree
to first order at the junction and the outer tail hits the pinned mass.
"""
import logging
import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .problem import ProblemSetup
from .profile import ConstraintViolation, PhiProfile, Side

logger = logging.getLogger(__name__)


class ExtinctionReached(ValueError):
    """Requested time is at or beyond the extinction time of B."""


@dataclass(frozen=True)
class SubsolutionParams:
    profile: PhiProfile
    K: float
    delta: float
    B0: float
    kappa: float
    c1: float
    T_ext: float
    A_T: float
    n: int
    R_n: float
    mass_level: float

    @property
    def lam(self) -> float:
        return self.profile.lam

    @classmethod
    def build(cls, profile: PhiProfile, K: float, delta: float, B0: float,
              kappa: float, c1: float, setup: ProblemSetup) -> "SubsolutionParams":
        """Assemble the parameters and check the construction hypotheses."""
        if not kappa > 0:
            raise ValueError(f"kappa must be positive, got {kappa}")
        if not 0.0 < delta < 1.0:
            raise ValueError(f"delta must lie in (0, 1), got {delta}")

        report = []
        if not K > 1.0:
            report.append(("K > 1", 1.0, K))
        if not 0.0 < B0 < 1.0:
            report.append(("0 < B0 < 1", 1.0, B0))
        if not K * math.sqrt(max(B0, 0.0)) < setup.R_n:
            report.append(("K*sqrt(B0) < R^n", setup.R_n, K * math.sqrt(max(B0, 0.0))))
        if B0 > profile.b_ceiling(K):
            report.append(("B0 <= K^2/(4(a+b)^2)", profile.b_ceiling(K), B0))
        if report:
            names = ", ".join(row[0] for row in report)
            raise ConstraintViolation(f"subsolution hypotheses violated: {names}", report)

        n = setup.n
        T_ext = (2.0 * n / kappa) * B0 ** (1.0 / (2.0 * n))
        A_T = setup.mass_level / (1.0 + profile.a_lam * setup.R_n / (K * K))
        return cls(profile=profile, K=float(K), delta=float(delta), B0=float(B0),
                   kappa=float(kappa), c1=float(c1), T_ext=T_ext, A_T=A_T,
                   n=n, R_n=setup.R_n, mass_level=setup.mass_level)


@dataclass(frozen=True)
class TimeCoeffs:
    """Coefficients at time t; fields are arrays when t is."""
    t: np.ndarray
    B: np.ndarray
    N: np.ndarray
    A: np.ndarray
    D: np.ndarray
    E: np.ndarray
    Aprime: np.ndarray
    Dprime: np.ndarray
    Eprime: np.ndarray
    Bprime: np.ndarray


def _check_setup(params: SubsolutionParams, setup: ProblemSetup):
    if setup.n != params.n or not math.isclose(setup.R_n, params.R_n, rel_tol=1e-12):
        raise ValueError(f"setup (n={setup.n}, R^n={setup.R_n}) does not match params "
                         f"(n={params.n}, R^n={params.R_n})")
    if not math.isclose(setup.mass_level, params.mass_level, rel_tol=1e-12):
        raise ValueError(f"setup mass level {setup.mass_level} does not match params {params.mass_level}")


def B_of_t(params: SubsolutionParams, n: int, t):
    """Closed-form solution of B' = -kappa*B^(1-1/(2n)), B(0) = B0."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise ValueError(f"time must be nonnegative, got {t_arr.min()}")
    if np.any(t_arr >= params.T_ext):
        raise ExtinctionReached(f"t={t_arr.max()} reaches extinction time {params.T_ext}")
    base = params.B0 ** (1.0 / (2.0 * n)) - params.kappa * t_arr / (2.0 * n)
    if np.any(base <= 0):
        raise ExtinctionReached(f"B vanished before t={t_arr.max()} (T_ext={params.T_ext})")
    B = base ** (2 * n)
    Bprime = -params.kappa * B ** (1.0 - 1.0 / (2.0 * n))
    if t_arr.ndim == 0:
        return float(B), float(Bprime)
    return B, Bprime


def coeffs(params: SubsolutionParams, setup: ProblemSetup, t) -> TimeCoeffs:
    _check_setup(params, setup)
    B, Bprime = B_of_t(params, setup.n, t)
    B = np.asarray(B)
    Bprime = np.asarray(Bprime)
    a = params.profile.a_lam
    b = params.profile.b_lam
    ab = params.profile.ab_sum
    K = params.K
    Rn = setup.R_n
    level = setup.mass_level
    root = np.sqrt(B)

    N = K * K + a * Rn - 2.0 * ab * K * root + ab * b * B
    if np.any(N <= 0):
        raise ConstraintViolation(
            f"N(t) <= 0 (min {np.min(N)}); B exceeds K^2/(4(a+b)^2)",
            [("N > 0", 0.0, float(np.min(N)))],
        )
    A = level * (K - b * root) ** 2 / N
    D = level * a / N
    E = level - Rn * D
    lever = (K / root - b) * Bprime / N ** 2
    Aprime = level * (a * K * K - a * b * Rn) * lever
    Dprime = level * a * ab * lever
    Eprime = -Rn * Dprime

    fields = dict(t=np.asarray(t, dtype=float), B=B, N=N, A=A, D=D, E=E,
                  Aprime=Aprime, Dprime=Dprime, Eprime=Eprime, Bprime=Bprime)
    if np.ndim(t) == 0:
        fields = {key: float(value) for key, value in fields.items()}
    return TimeCoeffs(**fields)


def junction(params: SubsolutionParams, B: float) -> float:
    """Position K*sqrt(B) where the inner and outer branches meet."""
    return params.K * math.sqrt(B)


def _split_s(params: SubsolutionParams, setup: ProblemSetup, s, t, side: Side):
    if np.ndim(t) != 0:
        raise ValueError("pointwise evaluation takes a scalar time")
    s_arr = np.atleast_1d(np.asarray(s, dtype=float))
    if np.any(s_arr < 0) or np.any(s_arr > setup.R_n):
        raise ValueError(f"s must lie in [0, {setup.R_n}]")
    tc = coeffs(params, setup, t)
    s_join = junction(params, tc.B)
    inner = s_arr < s_join
    if side is Side.LEFT:
        inner |= s_arr == s_join
    return s_arr, tc, inner


def _shaped(values: np.ndarray, s):
    return float(values[0]) if np.ndim(s) == 0 else values


def w_lower(params: SubsolutionParams, setup: ProblemSetup, s, t, side: Side = Side.LEFT):
    s_arr, tc, inner = _split_s(params, setup, s, t, side)
    out = tc.D * s_arr + tc.E
    out[inner] = tc.A * params.profile.phi(s_arr[inner] / tc.B)
    return _shaped(out, s)


def w_lower_s(params: SubsolutionParams, setup: ProblemSetup, s, t, side: Side = Side.LEFT):
    s_arr, tc, inner = _split_s(params, setup, s, t, side)
    out = np.full_like(s_arr, tc.D)
    out[inner] = tc.A / tc.B * params.profile.phi_prime(s_arr[inner] / tc.B)
    return _shaped(out, s)


def w_lower_ss(params: SubsolutionParams, setup: ProblemSetup, s, t, side: Side = Side.LEFT):
    """Second s-derivative; ``side`` resolves s exactly on either kink line."""
    s_arr, tc, inner = _split_s(params, setup, s, t, side)
    out = np.zeros_like(s_arr)
    out[inner] = tc.A / tc.B ** 2 * params.profile.phi_second(s_arr[inner] / tc.B, side)
    return _shaped(out, s)


def w_lower_t(params: SubsolutionParams, setup: ProblemSetup, s, t, side: Side = Side.LEFT):
    s_arr, tc, inner = _split_s(params, setup, s, t, side)
    out = tc.Dprime * s_arr + tc.Eprime
    xi = s_arr[inner] / tc.B
    profile = params.profile
    out[inner] = tc.Aprime * profile.phi(xi) - tc.A * profile.phi_prime(xi) * xi * tc.Bprime / tc.B
    return _shaped(out, s)


def matching_residuals(params: SubsolutionParams, setup: ProblemSetup, t) -> Tuple:
    """Relative value, slope and time-derivative gaps at s = K*sqrt(B(t))."""
    tc = coeffs(params, setup, t)
    profile = params.profile
    root = np.sqrt(tc.B)
    xi_join = params.K / root

    inner_value = tc.A * profile.phi(xi_join)
    outer_value = tc.D * params.K * root + tc.E
    value_gap = np.abs(inner_value - outer_value) / setup.mass_level

    inner_slope = tc.A / tc.B * profile.phi_prime(xi_join)
    slope_gap = np.abs(inner_slope - tc.D) / tc.D

    lhs_terms = (tc.Aprime * profile.phi(xi_join),
                 -params.K * tc.A * tc.Bprime * profile.phi_prime(xi_join) / tc.B ** 1.5)
    rhs_terms = (tc.Dprime * params.K * root, tc.Eprime)
    scale = sum(np.abs(term) for term in lhs_terms + rhs_terms)
    tderiv_gap = np.abs(sum(lhs_terms) - sum(rhs_terms)) / scale

    if np.ndim(t) == 0:
        return float(value_gap), float(slope_gap), float(tderiv_gap)
    return value_gap, slope_gap, tderiv_gap


def gradient_witness(params: SubsolutionParams, setup: ProblemSetup, t):
    """lam*A(t)/B(t): mean-value lower bound for sup u of any dominating solution."""
    tc = coeffs(params, setup, t)
    return params.lam * tc.A / tc.B

"""The degenerate parabolic operator on discrete profiles and on the subsolution.

All flux expressions are written with ``q = s^(1-1/n)`` pulled through the
square roots, so nothing overflows as s or B(t) go to zero.
"""
import json
import logging
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Dict, List, NamedTuple, Tuple

import numpy as np

from .problem import ProblemSetup, RadialState
from .profile import Side
from .subsolution import SubsolutionParams, TimeCoeffs, coeffs

logger = logging.getLogger(__name__)

SIGN_TOLERANCE_FACTOR = 1e-8


class Region(Enum):
    VERY_INNER = "very_inner"
    INTERMEDIATE = "intermediate"
    OUTER = "outer"


def _q(s, n: int):
    return np.asarray(s, dtype=float) ** (1.0 - 1.0 / n)


def _safe_ratio(num, den):
    num = np.asarray(num, dtype=float)
    den = np.asarray(den, dtype=float)
    out = np.zeros(np.broadcast(num, den).shape)
    np.divide(num, den, out=out, where=den > 0)
    return out


def grid_derivatives(s, w) -> Tuple[np.ndarray, np.ndarray]:
    """Three-point first and second differences at interior nodes of a non-uniform grid."""
    s = np.asarray(s, dtype=float)
    w = np.asarray(w, dtype=float)
    if s.size < 3 or s.shape != w.shape:
        raise ValueError("need matching s and w with at least 3 nodes")
    h_m = s[1:-1] - s[:-2]
    h_p = s[2:] - s[1:-1]
    scale = h_m * h_p * (h_m + h_p)
    w_s = (h_m ** 2 * w[2:] - h_p ** 2 * w[:-2] + (h_p ** 2 - h_m ** 2) * w[1:-1]) / scale
    w_ss = 2.0 * (h_m * w[2:] - (h_m + h_p) * w[1:-1] + h_p * w[:-2]) / scale
    return w_s, w_ss


def flux_terms(s, w, w_s, w_ss, setup: ProblemSetup) -> Tuple[np.ndarray, np.ndarray]:
    """(diffusion, taxis), the two terms subtracted from w_t by the operator.

    |diffusion| <= n q |w_s| and |taxis| <= n chi q |w_s| hold for any input.
    """
    n = setup.n
    q = _q(s, n)
    w_s = np.asarray(w_s, dtype=float)
    w_ss = np.asarray(w_ss, dtype=float)
    curvature = n * q * w_ss
    diffusion = n * q * _safe_ratio(w_s * curvature, np.hypot(w_s, curvature))
    excess = np.asarray(w, dtype=float) - setup.mu * np.asarray(s, dtype=float) / n
    taxis = n * setup.chi * w_s * _safe_ratio(excess * q, np.hypot(q, excess))
    return diffusion, taxis


def spatial_rhs(s, w, setup: ProblemSetup) -> Tuple[np.ndarray, np.ndarray]:
    """Right-hand side at interior nodes together with the slopes used."""
    w_s, w_ss = grid_derivatives(s, w)
    diffusion, taxis = flux_terms(s[1:-1], w[1:-1], w_s, w_ss, setup)
    return diffusion + taxis, w_s


def discrete_residual(s, w, w_t, setup: ProblemSetup) -> np.ndarray:
    """Operator residual at interior nodes; ``w_t`` is full-length or interior-only."""
    w_t = np.asarray(w_t, dtype=float)
    if w_t.size == np.size(s):
        w_t = w_t[1:-1]
    rhs, _ = spatial_rhs(np.asarray(s, dtype=float), np.asarray(w, dtype=float), setup)
    return w_t - rhs


class DiscreteResidual(NamedTuple):
    s: np.ndarray
    residual: np.ndarray
    degenerate: List[int]


def eval_P_discrete(state: RadialState, setup: ProblemSetup, w_t) -> DiscreteResidual:
    """Residual on the interior of a discrete profile.

    Nodes where the discrete slope is not positive lie outside the operator's
    domain and are reported in ``degenerate`` (indices into ``state.s_grid``).
    """
    s = state.s_grid
    w_s, _ = grid_derivatives(s, state.w)
    degenerate = [int(i) + 1 for i in np.flatnonzero(w_s <= 0.0)]
    if degenerate:
        logger.warning(f"{len(degenerate)} nodes with w_s <= 0 at t={state.t}")
    residual = discrete_residual(s, state.w, w_t, setup)
    return DiscreteResidual(s=s[1:-1].copy(), residual=residual, degenerate=degenerate)


def j_terms(params: SubsolutionParams, setup: ProblemSetup, s, t,
            side: Side = Side.LEFT, chi_sign: float = 1.0, tc: TimeCoeffs = None):
    """Scaled diffusion and taxis parts J1, J2 of the inner-branch residual."""
    tc = tc if tc is not None else coeffs(params, setup, t)
    n = setup.n
    s = np.asarray(s, dtype=float)
    xi = s / tc.B
    profile = params.profile
    phi = profile.phi(xi)
    dphi = profile.phi_prime(xi)
    ddphi = profile.phi_second(xi, side)

    xi_q = _q(xi, n)
    curvature = n * xi_q * ddphi
    scaled_slope = tc.B ** (1.0 / n) * dphi
    J1 = -n * tc.B ** (1.0 - 1.0 / n) * xi_q * _safe_ratio(curvature, np.hypot(scaled_slope, curvature))

    q = _q(s, n)
    excess = tc.A * phi - setup.mu * tc.B * xi / n
    J2 = -chi_sign * n * setup.chi * _safe_ratio(excess * q, np.hypot(q, excess))
    return J1, J2


def _inner_residual(params, setup, tc, s, side, chi_sign):
    profile = params.profile
    xi = s / tc.B
    J1, J2 = j_terms(params, setup, s, tc.t, side=side, chi_sign=chi_sign, tc=tc)
    bracket = -xi * tc.Bprime + J1 + J2
    return tc.Aprime * profile.phi(xi) + tc.A * profile.phi_prime(xi) / tc.B * bracket


def _outer_residual(setup, tc, s):
    n = setup.n
    q = _q(s, n)
    excess = tc.D * s + tc.E - setup.mu * s / n
    taxis = n * setup.chi * tc.D * _safe_ratio(excess * q, np.hypot(q, excess))
    return tc.Dprime * s + tc.Eprime - taxis


def eval_P_subsolution(params: SubsolutionParams, setup: ProblemSetup, s, t,
                       side: Side = Side.LEFT, chi_sign: float = 1.0):
    """Operator applied to the subsolution, assembled branch by branch."""
    tc = coeffs(params, setup, t)
    s_arr = np.atleast_1d(np.asarray(s, dtype=float))
    if np.any(s_arr < 0) or np.any(s_arr > setup.R_n):
        raise ValueError(f"s must lie in [0, {setup.R_n}]")
    s_join = params.K * np.sqrt(tc.B)
    inner = s_arr < s_join
    if side is Side.LEFT:
        inner |= s_arr == s_join
    out = np.empty_like(s_arr)
    out[inner] = _inner_residual(params, setup, tc, s_arr[inner], side, chi_sign)
    out[~inner] = _outer_residual(setup, tc, s_arr[~inner])
    return float(out[0]) if np.ndim(s) == 0 else out


def comparison_sensitivities(s, y0, y1, y2, setup: ProblemSetup):
    """Partial derivatives of the right-hand side in (w, w_s, w_ss).

    The comparison argument needs d/dw_ss >= 0 together with
    |d/dw_s| <= n(1+chi) s^(1-1/n) and |d/dw| <= n chi |w_s|.
    """
    n = setup.n
    chi = setup.chi
    q = _q(s, n)
    y0 = np.asarray(y0, dtype=float)
    y1 = np.asarray(y1, dtype=float)
    y2 = np.asarray(y2, dtype=float)
    hyp3 = np.hypot(y1, n * q * y2) ** 3
    d_y2 = _safe_ratio(n ** 2 * q ** 2 * y1 ** 3, hyp3)
    excess = y0 - setup.mu * np.asarray(s, dtype=float) / n
    radius = np.hypot(q, excess)
    d_y1 = (_safe_ratio(n ** 4 * q ** 4 * y2 ** 3, hyp3)
            + n * chi * _safe_ratio(excess * q, radius))
    d_y0 = n * chi * y1 * _safe_ratio(q ** 3, radius ** 3)
    return d_y0, d_y1, d_y2


@dataclass
class GridSpec:
    s_nodes: int = 1000
    t_nodes: int = 1000
    t_fraction: float = 0.99

    def __post_init__(self):
        if self.s_nodes < 3:
            raise ValueError(f"s_nodes must be at least 3, got {self.s_nodes}")
        if self.t_nodes < 1:
            raise ValueError(f"t_nodes must be positive, got {self.t_nodes}")
        if not 0.0 < self.t_fraction < 1.0:
            raise ValueError(f"t_fraction must lie in (0, 1), got {self.t_fraction}")


@dataclass
class ResidualField:
    region: Region
    s: np.ndarray
    t: np.ndarray
    residual: np.ndarray

    @property
    def max_residual(self) -> float:
        return float(np.max(self.residual)) if self.residual.size else float("-inf")

    def worst(self, count: int = 1) -> List[Tuple[float, float, str, float]]:
        order = np.argsort(self.residual)[::-1][:count]
        return [(float(self.s[i]), float(self.t[i]), self.region.value, float(self.residual[i]))
                for i in order]


@dataclass
class CertReport:
    passed: bool
    tol_sign: float
    grid: GridSpec
    T_ext: float
    chi_sign: float
    region_max: Dict[str, float]
    offenders: List[Tuple[float, float, str, float]] = field(default_factory=list)
    fields: Dict[Region, ResidualField] = field(default_factory=dict, repr=False)

    def to_dict(self) -> dict:
        return {
            "verdict": "PASS" if self.passed else "FAIL",
            "tol_sign": self.tol_sign,
            "T_ext": self.T_ext,
            "chi_sign": self.chi_sign,
            "grid": asdict(self.grid),
            "region_max": dict(self.region_max),
            "offenders": [
                {"s": s, "t": t, "region": region, "residual": value}
                for s, t, region, value in self.offenders
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def time_samples(params: SubsolutionParams, grid: GridSpec) -> np.ndarray:
    """Midpoints of a uniform partition of [0, t_fraction*T_ext]."""
    horizon = grid.t_fraction * params.T_ext
    return (np.arange(grid.t_nodes) + 0.5) * horizon / grid.t_nodes


def region_samples(params: SubsolutionParams, setup: ProblemSetup, B: float, per_region: int) -> Dict[Region, np.ndarray]:
    """Cell midpoints in each region; no sample falls on either kink line."""
    mid = (np.arange(per_region) + 0.5) / per_region
    s_join = params.K * np.sqrt(B)
    return {
        Region.VERY_INNER: B * mid,
        Region.INTERMEDIATE: B * (s_join / B) ** mid,
        Region.OUTER: s_join + (setup.R_n - s_join) * mid,
    }


def certify_subsolution(params: SubsolutionParams, setup: ProblemSetup, grid: GridSpec = None,
                        chi_sign: float = 1.0, max_offenders: int = 10) -> CertReport:
    """Sample the subsolution residual region by region and compare with tol_sign."""
    grid = grid or GridSpec()
    tol_sign = SIGN_TOLERANCE_FACTOR * setup.mass_level / params.T_ext
    per_region = max(grid.s_nodes // 3, 1)
    samples = {region: ([], [], []) for region in Region}

    for t in time_samples(params, grid):
        tc = coeffs(params, setup, float(t))
        for region, s in region_samples(params, setup, tc.B, per_region).items():
            if region is Region.OUTER:
                residual = _outer_residual(setup, tc, s)
            else:
                residual = _inner_residual(params, setup, tc, s, Side.LEFT, chi_sign)
            bucket = samples[region]
            bucket[0].append(s)
            bucket[1].append(np.full_like(s, t))
            bucket[2].append(residual)

    fields = {
        region: ResidualField(region, np.concatenate(s), np.concatenate(t), np.concatenate(r))
        for region, (s, t, r) in samples.items()
    }
    region_max = {region.value: rf.max_residual for region, rf in fields.items()}
    passed = all(value <= tol_sign for value in region_max.values())

    offenders = []
    if not passed:
        candidates = [row for rf in fields.values() for row in rf.worst(max_offenders)]
        offenders = sorted((row for row in candidates if row[3] > tol_sign),
                           key=lambda row: row[3], reverse=True)[:max_offenders]
        logger.warning(f"certification FAIL: worst residual {offenders[0][3]:.3e} "
                       f"in {offenders[0][2]} at s={offenders[0][0]:.3e}, t={offenders[0][1]:.4g}")
    else:
        logger.info(f"certification PASS on {grid.s_nodes}x{grid.t_nodes} samples, "
                    f"max residual {max(region_max.values()):.3e} <= {tol_sign:.3e}")
    return CertReport(passed=passed, tol_sign=tol_sign, grid=grid, T_ext=params.T_ext,
                      chi_sign=chi_sign, region_max=region_max, offenders=offenders, fields=fields)

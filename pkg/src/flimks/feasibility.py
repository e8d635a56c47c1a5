"""Deterministic parameter selection for the blow-up subsolution.

Every hypothesis the construction relies on is evaluated again as a row of
the constraints table, so a report can be audited without rerunning the
selection.
"""
import csv
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Dict, List, NamedTuple, Optional

import numpy as np
from scipy.optimize import brentq

from .problem import ProblemSetup
from .profile import ConstraintViolation, PhiProfile
from .subsolution import SubsolutionParams, w_lower

logger = logging.getLogger(__name__)

# lambda candidates for n = 1, scanned in ascending order
LAMBDA_SCAN = tuple(round(0.50 + 0.05 * i, 2) for i in range(10)) + (0.99,)
N_GE_2_LAMBDA = 0.5
K_MARGIN = 1e-6
B0_START_CAP = 0.5
B0_FLOOR = 1e-30


class Regime(Enum):
    BOUNDED = "bounded"
    BLOWUP_CONSTRUCTIBLE = "blowup_constructible"
    UNDETERMINED = "undetermined"


class ConstraintRow(NamedTuple):
    name: str
    required: float
    actual: float
    satisfied: bool


class PartialParams(NamedTuple):
    """Profile and K, enough to evaluate the outer-region rate."""
    profile: PhiProfile
    K: float


def _at_most(name: str, actual: float, bound: float) -> ConstraintRow:
    return ConstraintRow(name, float(bound), float(actual), bool(actual <= bound))


def _below(name: str, actual: float, bound: float) -> ConstraintRow:
    return ConstraintRow(name, float(bound), float(actual), bool(actual < bound))


def _above(name: str, actual: float, bound: float) -> ConstraintRow:
    return ConstraintRow(name, float(bound), float(actual), bool(actual > bound))


@dataclass
class FeasibilityReport:
    feasible: bool
    params: Optional[SubsolutionParams] = None
    constraints: List[ConstraintRow] = field(default_factory=list)
    kappa_components: Dict[str, float] = field(default_factory=dict)
    reason: Optional[str] = None

    def violated(self) -> List[ConstraintRow]:
        return [row for row in self.constraints if not row.satisfied]

    def to_dict(self) -> dict:
        result = {
            "feasible": self.feasible,
            "reason": self.reason,
            "constraints": [row._asdict() for row in self.constraints],
            "kappa_components": dict(self.kappa_components),
        }
        if self.params is not None:
            p = self.params
            result["params"] = {
                "lambda": p.lam, "a_lam": p.profile.a_lam, "b_lam": p.profile.b_lam,
                "K": p.K, "delta": p.delta, "B0": p.B0, "kappa": p.kappa,
                "c1": p.c1, "T_ext": p.T_ext, "A_T": p.A_T,
            }
        return result

    def to_csv(self, path) -> Path:
        path = Path(path)
        with path.open("w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(["name", "required", "actual", "satisfied"])
            for row in self.constraints:
                writer.writerow([row.name, f"{row.required:.10g}", f"{row.actual:.10g}",
                                 "true" if row.satisfied else "false"])
        return path


def kappa_outer(setup: ProblemSetup, params) -> float:
    """Largest rate for which the linear outer tail stays a subsolution.

    ``params`` needs ``profile`` and ``K`` only.
    """
    n = setup.n
    K = params.K
    ab = params.profile.ab_sum
    level = setup.mass_level
    root = math.sqrt(1.0 + K ** (2.0 / n - 2.0) * level ** 2)
    return n * setup.m * setup.chi * K / (2.0 * ab * setup.omega_n * setup.R_n * root)


def M_profile(params: SubsolutionParams, setup: ProblemSetup, r):
    """Mass threshold M(r) = omega_n * w_lower(r^n, 0)."""
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr < 0) or np.any(r_arr > setup.R * (1.0 + 1e-12)):
        raise ValueError(f"r must lie in [0, {setup.R}]")
    s = np.minimum(r_arr ** setup.n, setup.R_n)
    return setup.omega_n * w_lower(params, setup, s, 0.0)


def _b0_rows(setup: ProblemSetup, profile: PhiProfile, K: float, delta: float, B0: float) -> List[ConstraintRow]:
    """Rows that depend on B0; A_T depends on K only."""
    n = setup.n
    ab = profile.ab_sum
    lam = profile.lam
    A_T = setup.mass_level / (1.0 + profile.a_lam * setup.R_n / (K * K))
    rows = [
        _below("0 < B0 < 1", B0, 1.0),
        _below("K*sqrt(B0) < R^n", K * math.sqrt(B0), setup.R_n),
        _at_most("B0 <= K^2/(4(a+b)^2)", B0, K * K / (4.0 * ab ** 2)),
        _at_most("outer: B0 <= K^2/(16(a+b)^2)", B0, K * K / (16.0 * ab ** 2)),
        _at_most("very inner: B0 <= (n/(4 chi mu))^n", B0, (n / (4.0 * setup.chi * setup.mu)) ** n),
        _at_most("taxis numerator: mu/(n A_T) max(B0/lam, 2K sqrt(B0)) <= delta",
                 setup.mu / (n * A_T) * max(B0 / lam, 2.0 * K * math.sqrt(B0)), delta),
    ]
    if n >= 2:
        # s^(2-2/n)/(A phi)^2 on the intermediate region, with A >= A_T and phi >= lam
        dominance = ((1.0 + profile.a_lam * setup.R_n / (K * K)) ** 2
                     * K ** (2.0 - 2.0 / n) * B0 ** (1.0 - 1.0 / n) / (lam * setup.mass_level) ** 2)
        rows.append(_at_most("taxis denominator: (1+a R^n/K^2)^2 K^(2-2/n) B0^(1-1/n)/(lam m/omega)^2 <= delta",
                             dominance, delta))
    return rows


def _shrink_b0(setup: ProblemSetup, profile: PhiProfile, K: float, delta: float):
    B0 = min(profile.b_ceiling(K), B0_START_CAP)
    while B0 >= B0_FLOOR:
        rows = _b0_rows(setup, profile, K, delta, B0)
        if all(row.satisfied for row in rows):
            return B0, rows
        logger.debug(f"B0={B0:.3e} rejected by {[row.name for row in rows if not row.satisfied]}")
        B0 *= 0.5
    return None, _b0_rows(setup, profile, K, delta, B0 * 2.0)


def _one_dimensional_recipe(setup: ProblemSetup):
    """lambda, delta, c1 and K for n = 1 (mass measured as m/omega_1)."""
    level = setup.mass_level
    chi = setup.chi
    rows = [_above("m/omega_1 > m_c", level, setup.m_crit)]
    if not level > setup.m_crit:
        reason = "m <= m_c" if setup.m <= setup.m_crit else "m/omega_1 <= m_c"
        return None, rows, f"{reason} (m={setup.m:.6g}, omega_1=2, m_c={setup.m_crit:.6g})"

    lam = next((cand for cand in LAMBDA_SCAN
                if level * chi / math.sqrt(1.0 / cand ** 2 + level ** 2) > 1.0), None)
    if lam is None:
        return None, rows, "no lambda in scan makes (m/omega_1) chi / sqrt(1/lambda^2 + (m/omega_1)^2) exceed 1"

    def margin(d: float) -> float:
        return (1.0 - d) * level * chi / math.sqrt((1.0 + d) / lam ** 2 + level ** 2) - 1.0

    delta = 0.5 * brentq(margin, 0.0, 1.0)
    c1 = margin(delta)
    profile = PhiProfile(lam)
    a, b = profile.a_lam, profile.b_lam
    K = max(math.sqrt(max(b, 0.0) * setup.R) * (1.0 + K_MARGIN),
            math.sqrt(a * setup.R / (math.sqrt(1.0 + delta) - 1.0)) * (1.0 + K_MARGIN),
            1.0 + K_MARGIN)
    rows += [
        _above("c1 > 0", c1, 0.0),
        _above("K > 1", K, 1.0),
        _above("K > sqrt(b R)", K, math.sqrt(max(b, 0.0) * setup.R)),
        _at_most("(1 + a R/K^2)^2 <= 1 + delta", (1.0 + a * setup.R / K ** 2) ** 2, 1.0 + delta),
    ]
    return (profile, delta, c1, K, c1 / K), rows, None


def _higher_dimensional_recipe(setup: ProblemSetup):
    n = setup.n
    chi = setup.chi

    def margin(d: float) -> float:
        return n * ((1.0 - d) * chi / math.sqrt(1.0 + d) - 1.0)

    delta = 0.5 * brentq(margin, 0.0, 1.0)
    c1 = margin(delta)
    profile = PhiProfile(N_GE_2_LAMBDA)
    b = profile.b_lam
    K = max(math.sqrt(max(b, 0.0) * setup.R_n), 1.0) * (1.0 + K_MARGIN)
    rows = [
        _above("c1 > 0", c1, 0.0),
        _above("K > 1", K, 1.0),
        _above("K > sqrt(b R^n)", K, math.sqrt(max(b, 0.0) * setup.R_n)),
    ]
    return (profile, delta, c1, K, c1 * K ** (-1.0 / n)), rows, None


def select_params(setup: ProblemSetup) -> FeasibilityReport:
    if not setup.chi > 1.0:
        row = _above("chi > 1", setup.chi, 1.0)
        logger.info(f"infeasible: chi={setup.chi} <= 1")
        return FeasibilityReport(False, constraints=[row], reason=f"chi <= 1 (chi={setup.chi:.6g})")

    recipe = _one_dimensional_recipe if setup.n == 1 else _higher_dimensional_recipe
    chosen, rows, reason = recipe(setup)
    if chosen is None:
        logger.info(f"infeasible: {reason}")
        return FeasibilityReport(False, constraints=rows, reason=reason)

    profile, delta, c1, K, kappa_taxis = chosen
    rows.insert(0, _above("chi > 1", setup.chi, 1.0))
    components = {
        "kappa_taxis": kappa_taxis,
        "kappa_outer": kappa_outer(setup, PartialParams(profile, K)),
        "kappa_very_inner": setup.n / 4.0,
    }
    kappa = min(components.values())

    B0, b0_rows = _shrink_b0(setup, profile, K, delta)
    rows += b0_rows
    if B0 is None:
        logger.info(f"infeasible: B0 floor reached for {setup}")
        return FeasibilityReport(False, constraints=rows, kappa_components=components,
                                 reason="B0 floor reached")

    rows += [
        _at_most("kappa <= kappa_taxis", kappa, components["kappa_taxis"]),
        _at_most("kappa <= kappa_outer", kappa, components["kappa_outer"]),
        _at_most("kappa <= n/4", kappa, components["kappa_very_inner"]),
    ]
    try:
        params = SubsolutionParams.build(profile, K, delta, B0, kappa, c1, setup)
    except ConstraintViolation as e:
        logger.error(f"selected parameters fail their own hypotheses: {e}")
        return FeasibilityReport(False, constraints=rows, kappa_components=components, reason=str(e))

    feasible = all(row.satisfied for row in rows)
    logger.info(f"selected lambda={profile.lam}, K={K:.6g}, delta={delta:.4g}, B0={B0:.3e}, "
                f"kappa={kappa:.4g}, T_ext={params.T_ext:.4g} for n={setup.n}, chi={setup.chi}, m={setup.m}")
    return FeasibilityReport(feasible, params=params if feasible else None, constraints=rows,
                             kappa_components=components,
                             reason=None if feasible else "constraint rows violated")


def classify_regime(setup: ProblemSetup) -> Regime:
    """Boundedness criteria first, then whether blow-up data can be built."""
    if setup.n >= 2 and setup.chi < 1.0:
        return Regime.BOUNDED
    if setup.n == 1 and setup.m < setup.m_crit:
        return Regime.BOUNDED
    if select_params(setup).feasible:
        return Regime.BLOWUP_CONSTRUCTIBLE
    return Regime.UNDETERMINED

"""Problem definition and the mass-accumulation transform."""
import logging
import math
from dataclasses import dataclass, replace
from typing import Optional, Tuple

import numpy as np
from scipy.integrate import cumulative_trapezoid, trapezoid
from scipy.special import gamma

logger = logging.getLogger(__name__)


def surface_measure(n: int) -> float:
    """(n-1)-measure of the unit sphere in R^n."""
    return 2.0 * math.pi ** (n / 2.0) / float(gamma(n / 2.0))


@dataclass(frozen=True)
class ProblemSetup:
    """Physical problem on the ball B_R(0) in R^n.

    ``volume`` is |B_R(0)|, ``mu`` the spatial average m/volume of the mass
    and ``m_crit`` the critical one-dimensional mass 1/sqrt(chi^2 - 1) (infinite when chi <= 1).
    """
    n: int
    R: float
    chi: float
    m: float
    omega_n: float
    volume: float
    mu: float
    m_crit: float

    @property
    def R_n(self) -> float:
        return self.R ** self.n

    @property
    def mass_level(self) -> float:
        """Pinned value of w at s = R^n."""
        return self.m / self.omega_n

    def with_mass(self, m: float) -> "ProblemSetup":
        return make_setup(self.n, self.R, self.chi, m)


def make_setup(n: int, R: float, chi: float, m: float) -> ProblemSetup:
    if int(n) != n or n < 1:
        raise ValueError(f"dimension n must be an integer >= 1, got {n}")
    if not R > 0:
        raise ValueError(f"radius R must be positive, got {R}")
    if not chi > 0:
        raise ValueError(f"sensitivity chi must be positive, got {chi}")
    if not m > 0:
        raise ValueError(f"mass m must be positive, got {m}")
    n = int(n)
    omega_n = surface_measure(n)
    volume = omega_n * R ** n / n
    mu = m / volume
    m_crit = 1.0 / math.sqrt(chi * chi - 1.0) if chi > 1.0 else math.inf
    return ProblemSetup(n=n, R=float(R), chi=float(chi), m=float(m),
                        omega_n=omega_n, volume=volume, mu=mu, m_crit=m_crit)


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class RadialState:
    """Mass accumulation profile w over an s-grid at time t."""
    s_grid: np.ndarray
    w: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        s = _frozen(self.s_grid)
        w = _frozen(self.w)
        if s.ndim != 1 or s.shape != w.shape:
            raise ValueError(f"s_grid and w must be 1-d of equal length, got {s.shape} and {w.shape}")
        if s.size < 2:
            raise ValueError("a state needs at least two nodes")
        if np.any(np.diff(s) <= 0):
            raise ValueError("s_grid must be strictly increasing")
        if s[0] < 0:
            raise ValueError(f"s_grid must start at or above 0, got {s[0]}")
        object.__setattr__(self, "s_grid", s)
        object.__setattr__(self, "w", w)

    @classmethod
    def pinned(cls, s_grid, w, t: float, setup: ProblemSetup) -> "RadialState":
        """Build a state with the boundary values imposed exactly."""
        w = np.array(w, dtype=float)
        w[0] = 0.0
        w[-1] = setup.mass_level
        return cls(s_grid=s_grid, w=w, t=t)

    def at_time(self, w, t: float) -> "RadialState":
        return replace(self, w=w, t=t)

    def is_monotone(self) -> bool:
        return bool(np.all(np.diff(self.w) >= 0.0))

    def check_pins(self, setup: ProblemSetup) -> Tuple[bool, Optional[str]]:
        if self.w[0] != 0.0:
            return False, f"w at s=0 is {self.w[0]}, expected 0"
        if self.w[-1] != setup.mass_level:
            return False, f"w at s=R^n is {self.w[-1]}, expected {setup.mass_level}"
        return True, None


def accumulate(r_grid, u_radial, setup: ProblemSetup, s_grid=None, t: float = 0.0) -> RadialState:
    """Mass accumulation of a sampled radial density.

    The composite trapezoid values are rescaled so that w(R^n) = m/omega_n.
    With ``s_grid`` the profile is interpolated onto those nodes.
    """
    r = np.asarray(r_grid, dtype=float)
    u = np.asarray(u_radial, dtype=float)
    if r.shape != u.shape or r.ndim != 1 or r.size < 2:
        raise ValueError("r_grid and u_radial must be 1-d arrays of equal length >= 2")
    if np.any(u < 0):
        bad = int(np.argmax(u < 0))
        raise ValueError(f"negative density sample u={u[bad]} at r={r[bad]}")
    if np.any(np.diff(r) <= 0):
        raise ValueError("r_grid must be strictly increasing")
    if r[0] != 0.0 or not math.isclose(r[-1], setup.R, rel_tol=1e-12):
        raise ValueError(f"r_grid must cover [0, {setup.R}], got [{r[0]}, {r[-1]}]")

    n = setup.n
    w = cumulative_trapezoid(r ** (n - 1) * u, r, initial=0.0)
    if not w[-1] > 0:
        raise ValueError("density carries no mass")
    w *= setup.mass_level / w[-1]

    s_nodes = r ** n
    s_nodes[-1] = setup.R_n
    if s_grid is not None:
        s_target = np.asarray(s_grid, dtype=float)
        w = np.interp(s_target, s_nodes, w)
        s_nodes = s_target
    return RadialState.pinned(s_nodes, w, t, setup)


def reconstruct_u_v(state: RadialState, setup: ProblemSetup) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Density u = n w_s and signal v (gauge v(R) = 0) on r = s^(1/n)."""
    s = state.s_grid
    w = state.w
    if s.size < 3:
        raise ValueError(f"reconstruction needs at least 3 nodes, got {s.size}")
    n = setup.n
    r = s ** (1.0 / n)

    # second order one-sided stencils at the ends
    w_s = np.gradient(w, s, edge_order=2)
    u = n * w_s

    v_r = np.zeros_like(s)
    inner = s > 0
    v_r[inner] = s[inner] ** (1.0 / n - 1.0) * (setup.mu * s[inner] / n - w[inner])
    v_int = cumulative_trapezoid(v_r, r, initial=0.0)
    v = v_int - v_int[-1]
    return r, u, v


def total_mass(state: RadialState, setup: ProblemSetup) -> float:
    return setup.omega_n * (state.w[-1] - state.w[0])


def quadrature_mass(state: RadialState, setup: ProblemSetup) -> float:
    """Mass of the reconstructed density, integrated in s."""
    _, u, _ = reconstruct_u_v(state, setup)
    return setup.omega_n / setup.n * float(trapezoid(u, state.s_grid))

"""Method-of-lines integration of the mass-accumulation problem."""
import csv
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Tuple

import numpy as np

from .operators import comparison_sensitivities, grid_derivatives, spatial_rhs
from .problem import ProblemSetup, RadialState, accumulate, quadrature_mass
from .run_state import RunContext, RunOutcome
from .subsolution import SubsolutionParams, gradient_witness, w_lower

logger = logging.getLogger(__name__)

SCHEMES = ("euler", "heun")
INIT_MODES = ("threshold", "uniform", "bump", "profile")
STEP_FLOOR_FACTOR = 1e-14
CLAMP_TOLERANCE_FACTOR = 1e-6
THRESHOLD_CHECK_POINTS = 1000
SMOOTHING_NODES = 32


class ThresholdCheckError(ValueError):
    """Initial data does not dominate the mass threshold M(r)."""


class StepFloorError(RuntimeError):
    """The stable time step fell below the floor."""

    def __init__(self, message: str, t: float, dt: float):
        super().__init__(message)
        self.t = t
        self.dt = dt


@dataclass
class SolverConfig:
    s_nodes: int = 512
    grading: Optional[float] = None
    cfl: float = 0.4
    t_end: float = 50.0
    blowup_threshold: float = 1000.0
    monitor_tolerance: float = 1e-3
    scheme: str = "euler"
    trace_stride: int = 1
    max_steps: int = 20_000_000

    def __post_init__(self):
        if self.s_nodes < 16:
            raise ValueError(f"s_nodes must be at least 16, got {self.s_nodes}")
        if not 0.0 < self.cfl < 1.0:
            raise ValueError(f"cfl must lie in (0, 1), got {self.cfl}")
        if self.grading is not None and not 1.0 <= self.grading <= 2.0:
            raise ValueError(f"grading must lie in [1, 2], got {self.grading}")
        for name in ("t_end", "blowup_threshold", "monitor_tolerance"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if self.trace_stride < 1 or self.max_steps < 1:
            raise ValueError("trace_stride and max_steps must be positive")

    def grading_for(self, n: int) -> float:
        if self.grading is not None:
            return self.grading
        return 1.0 if n == 1 else 1.5


@dataclass
class InitSpec:
    """Initial data selection; ``None`` fields take setup-dependent defaults."""
    mode: str = "threshold"
    margin: float = 0.05
    smoothing: Optional[float] = None
    floor: Optional[float] = None
    width: float = 0.1
    perturbation: float = 0.0
    profile: Optional[str] = None

    def __post_init__(self):
        if self.mode not in INIT_MODES:
            raise ValueError(f"init mode must be one of {INIT_MODES}, got {self.mode!r}")
        if self.margin < 0:
            raise ValueError(f"margin must be nonnegative, got {self.margin}")
        if not self.width > 0:
            raise ValueError(f"width must be positive, got {self.width}")
        if self.mode == "profile" and not self.profile:
            raise ValueError("profile mode needs a CSV path")


def make_grid(setup: ProblemSetup, config: SolverConfig) -> np.ndarray:
    """Graded nodes s_i = R^n (i/N)^gamma, refined towards s = 0."""
    gamma = config.grading_for(setup.n)
    frac = np.linspace(0.0, 1.0, config.s_nodes)
    s = setup.R_n * frac ** gamma
    s[-1] = setup.R_n
    return s


def uniform_state(setup: ProblemSetup, s_grid, perturbation: float = 0.0) -> RadialState:
    """Constant density with an optional monotone sine perturbation."""
    if not abs(perturbation) < 1.0:
        raise ValueError(f"perturbation must lie in (-1, 1), got {perturbation}")
    s = np.asarray(s_grid, dtype=float)
    x = s / setup.R_n
    w = setup.mass_level * (x + perturbation * np.sin(math.pi * x) / math.pi)
    return RadialState.pinned(s, w, 0.0, setup)


def bump_state(setup: ProblemSetup, s_grid, width: float, floor: float = 0.01, samples: int = 4001) -> RadialState:
    """Concentrated data u ~ exp(-(r/width)^2) + floor."""
    r = np.linspace(0.0, setup.R, samples)
    u = np.exp(-(r / width) ** 2) + floor
    return accumulate(r, u, setup, s_grid=s_grid)


def profile_state(setup: ProblemSetup, s_grid, path) -> RadialState:
    """Radial density read from a CSV file with columns r,u."""
    rows = []
    with Path(path).open(newline="") as handle:
        for line_no, record in enumerate(csv.DictReader(handle), start=2):
            try:
                rows.append((float(record["r"]), float(record["u"])))
            except (KeyError, TypeError, ValueError) as e:
                raise ValueError(f"{path}:{line_no}: expected numeric columns r,u ({e})")
    if len(rows) < 2:
        raise ValueError(f"{path}: need at least two samples")
    r, u = (np.array(column) for column in zip(*rows))
    return accumulate(r, u, setup, s_grid=s_grid)


def _bump_weights(nodes: int) -> Tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes on [0, 1] weighted by exp(-1/(1-y^2)), normalised."""
    x, weights = np.polynomial.legendre.leggauss(nodes)
    y = 0.5 * (x + 1.0)
    rho = np.exp(-1.0 / (1.0 - y ** 2))
    mass = 0.5 * weights * rho
    return y, mass / mass.sum()


def _smoothed_lower(params: SubsolutionParams, setup: ProblemSetup, s: np.ndarray, width: float) -> np.ndarray:
    if width == 0:
        return w_lower(params, setup, s, 0.0)
    y, weights = _bump_weights(SMOOTHING_NODES)
    shift = width * np.outer(s / (s + width), y)
    shifted = np.minimum(s[:, None] + shift, setup.R_n)
    values = w_lower(params, setup, shifted.ravel(), 0.0).reshape(shifted.shape)
    return values @ weights


def init_from_threshold(params: SubsolutionParams, setup: ProblemSetup, s_grid,
                        smoothing: Optional[float] = None, margin: float = 0.05,
                        floor: Optional[float] = None) -> RadialState:
    """Smooth data whose mass inside every ball dominates M(r).

    The lower profile is averaged over forward shifts of size at most
    ``smoothing*s/(s+smoothing)``, lifted by ``floor*s/n`` and rescaled to
    the level m(1+margin)/omega_n. The returned state is pinned for
    ``setup.with_mass(m*(1+margin))``.
    """
    width = setup.R_n / 100.0 if smoothing is None else float(smoothing)
    eps_pos = 0.5 * margin * setup.mu if floor is None else float(floor)
    if width < 0 or eps_pos < 0 or margin < 0:
        raise ValueError("smoothing, floor and margin must be nonnegative")
    run_setup = setup.with_mass(setup.m * (1.0 + margin))
    target = run_setup.mass_level

    def build(s: np.ndarray) -> np.ndarray:
        w = _smoothed_lower(params, setup, s, width) + eps_pos * s / setup.n
        top = _smoothed_lower(params, setup, np.array([setup.R_n]), width)[0] + eps_pos * setup.R_n / setup.n
        return w * (target / top)

    s = np.asarray(s_grid, dtype=float)
    w0 = build(s)

    r_check = np.linspace(0.0, setup.R, THRESHOLD_CHECK_POINTS)
    s_check = np.minimum(r_check ** setup.n, setup.R_n)
    deficit = w_lower(params, setup, s_check, 0.0) - build(s_check)
    worst = int(np.argmax(deficit))
    if deficit[worst] > 1e-12 * setup.mass_level:
        raise ThresholdCheckError(
            f"initial mass falls below M(r) by {setup.omega_n * deficit[worst]:.3e} at r={r_check[worst]:.4g}; "
            f"use a smaller smoothing width (now {width:g}) or a larger margin (now {margin:g})"
        )
    logger.info(f"threshold-dominating data built: smoothing={width:g}, floor={eps_pos:.3e}, "
                f"mass={run_setup.m:.6g}")
    return RadialState.pinned(s, w0, 0.0, run_setup)


def build_initial_state(spec: InitSpec, setup: ProblemSetup, s_grid,
                        params: Optional[SubsolutionParams] = None) -> Tuple[RadialState, ProblemSetup]:
    """Initial state and the setup whose mass it carries."""
    if spec.mode == "threshold":
        if params is None:
            raise ValueError("threshold-dominating data needs feasible subsolution parameters")
        state = init_from_threshold(params, setup, s_grid, spec.smoothing, spec.margin, spec.floor)
        return state, setup.with_mass(setup.m * (1.0 + spec.margin))
    if spec.mode == "uniform":
        return uniform_state(setup, s_grid, spec.perturbation), setup
    if spec.mode == "bump":
        floor = 0.01 if spec.floor is None else spec.floor
        return bump_state(setup, s_grid, spec.width, floor), setup
    return profile_state(setup, s_grid, spec.profile), setup


def sup_u(state: RadialState, setup: ProblemSetup) -> float:
    """n times the largest cell slope of w."""
    return setup.n * float(np.max(np.diff(state.w) / np.diff(state.s_grid)))


def stable_dt(state: RadialState, setup: ProblemSetup, config: SolverConfig) -> float:
    """cfl * min(transport limit, explicit diffusion limit)."""
    s = state.s_grid
    w_s, w_ss = grid_derivatives(s, state.w)
    q = s[1:-1] ** (1.0 - 1.0 / setup.n)
    speed = float(np.max(setup.n * q * (1.0 + setup.chi) * np.maximum(w_s, 0.0)))
    transport = float(np.min(np.diff(s))) / (1.0 + speed)

    _, _, diffusivity = comparison_sensitivities(s[1:-1], state.w[1:-1], w_s, w_ss, setup)
    h_m = s[1:-1] - s[:-2]
    h_p = s[2:] - s[1:-1]
    active = diffusivity > 0
    if np.any(active):
        limit = float(np.min(h_m[active] * h_p[active] / (2.0 * diffusivity[active])))
    else:
        limit = math.inf
    return config.cfl * min(transport, limit)


def _rhs(s: np.ndarray, w: np.ndarray, setup: ProblemSetup) -> np.ndarray:
    rhs = np.zeros_like(w)
    rhs[1:-1], _ = spatial_rhs(s, w, setup)
    return rhs


def _pin(w: np.ndarray, setup: ProblemSetup) -> np.ndarray:
    w[0] = 0.0
    w[-1] = setup.mass_level
    return w


def _advance(state: RadialState, setup: ProblemSetup, config: SolverConfig,
             dt: float) -> Tuple[RadialState, float]:
    s = state.s_grid
    w = np.array(state.w)
    stage = _pin(w + dt * _rhs(s, w, setup), setup)
    if config.scheme == "heun":
        second = _pin(stage + dt * _rhs(s, stage, setup), setup)
        stage = _pin(0.5 * (w + second), setup)

    clamped = np.minimum(np.maximum.accumulate(stage), setup.mass_level)
    clamp = float(np.max(np.abs(clamped - stage)))
    return RadialState.pinned(s, clamped, state.t + dt, setup), clamp


def step(state: RadialState, setup: ProblemSetup, config: SolverConfig) -> RadialState:
    """One explicit step of the stable size, truncated at t_end."""
    dt_stable = stable_dt(state, setup, config)
    if dt_stable < STEP_FLOOR_FACTOR * config.t_end:
        raise StepFloorError(f"stable step {dt_stable:.3e} below floor at t={state.t:.6g}", state.t, dt_stable)
    dt = min(dt_stable, config.t_end - state.t) if state.t < config.t_end else dt_stable
    new_state, _ = _advance(state, setup, config, dt)
    return new_state


@dataclass
class RunReport:
    outcome: RunOutcome
    t_detect: Optional[float]
    t_final: float
    steps: int
    sup_u0: float
    T_ext: Optional[float] = None
    slope_witness: Optional[float] = None
    max_clamp: float = 0.0
    clamp_limit: float = math.inf
    message: Optional[str] = None
    times: np.ndarray = field(default_factory=lambda: np.empty(0), repr=False)
    sup_u: np.ndarray = field(default_factory=lambda: np.empty(0), repr=False)
    min_defect: np.ndarray = field(default_factory=lambda: np.empty(0), repr=False)
    mass: np.ndarray = field(default_factory=lambda: np.empty(0), repr=False)
    dt: np.ndarray = field(default_factory=lambda: np.empty(0), repr=False)
    final_state: Optional[RadialState] = field(default=None, repr=False)

    @property
    def detected_before_bound(self) -> Optional[bool]:
        """Whether blow-up was detected before 1.2*T_ext (None without a subsolution)."""
        if self.T_ext is None:
            return None
        return self.outcome.is_blowup and self.t_detect is not None and self.t_detect <= 1.2 * self.T_ext

    @property
    def clamp_ok(self) -> bool:
        """Whether every monotonicity clamp stayed within the accepted size."""
        return self.max_clamp <= self.clamp_limit

    @property
    def worst_defect(self) -> Optional[float]:
        finite = self.min_defect[np.isfinite(self.min_defect)]
        return float(finite.min()) if finite.size else None

    def to_dict(self) -> dict:
        return {
            "outcome": self.outcome.value,
            "t_detect": self.t_detect,
            "t_final": self.t_final,
            "steps": self.steps,
            "sup_u0": self.sup_u0,
            "sup_u_final": float(self.sup_u[-1]) if self.sup_u.size else None,
            "T_ext": self.T_ext,
            "detected_before_1.2_T_ext": self.detected_before_bound,
            "slope_witness": self.slope_witness,
            "worst_defect": self.worst_defect,
            "max_clamp": self.max_clamp,
            "clamp_limit": self.clamp_limit,
            "clamp_ok": self.clamp_ok,
            "mass_drift": self.mass_drift,
            "message": self.message,
            "trace_rows": int(self.times.size),
        }

    @property
    def mass_drift(self) -> Optional[float]:
        if self.mass.size == 0:
            return None
        return float(np.max(np.abs(self.mass - self.mass[0])) / self.mass[0])

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def write_trace_csv(self, path) -> Path:
        path = Path(path)
        with path.open("w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(["t", "sup_u", "min_defect", "mass", "dt"])
            for row in zip(self.times, self.sup_u, self.min_defect, self.mass, self.dt):
                writer.writerow([f"{value:.10g}" for value in row])
        return path


def _defect(state: RadialState, params: Optional[SubsolutionParams], base_setup: Optional[ProblemSetup]) -> float:
    if params is None or state.t >= params.T_ext:
        return math.nan
    return float(np.min(state.w - w_lower(params, base_setup, state.s_grid, state.t)))


def run(state0: RadialState, setup: ProblemSetup, config: SolverConfig,
        params: Optional[SubsolutionParams] = None,
        base_setup: Optional[ProblemSetup] = None) -> RunReport:
    """Integrate until t_end, blow-up detection, step collapse or monitor breach.

    ``setup`` carries the mass of the data; with ``params`` the comparison
    defect min(w - w_lower) is monitored against the subsolution built for
    ``base_setup`` (defaults to ``setup``).
    """
    ok, error = state0.check_pins(setup)
    if not ok:
        raise ValueError(f"initial state is not pinned for this setup: {error}")
    if params is not None and base_setup is None:
        base_setup = setup

    ctx = RunContext()
    state = state0
    u0 = sup_u(state, setup)
    trigger = config.blowup_threshold * u0
    breach_level = -config.monitor_tolerance * (base_setup or setup).mass_level
    clamp_limit = CLAMP_TOLERANCE_FACTOR * setup.mass_level
    ctx.record(state.t, u0, _defect(state, params, base_setup), quadrature_mass(state, setup), 0.0)
    logger.info(f"run start: n={setup.n}, chi={setup.chi}, m={setup.m:.6g}, nodes={state.s_grid.size}, "
                f"scheme={config.scheme}, t_end={config.t_end}")

    while not ctx.finished:
        if state.t >= config.t_end:
            ctx.update_state(RunOutcome.BOUNDED_AT_HORIZON, None, f"reached t_end={config.t_end}")
            break
        if ctx.steps >= config.max_steps:
            ctx.update_state(RunOutcome.STEP_FLOOR, state.t, f"step budget of {config.max_steps} exhausted")
            break
        dt_stable = stable_dt(state, setup, config)
        if dt_stable < STEP_FLOOR_FACTOR * config.t_end:
            logger.debug(f"stable step {dt_stable:.3e} below floor at t={state.t:.6g}")
            ctx.update_state(RunOutcome.STEP_FLOOR, state.t, f"stable step {dt_stable:.3e} below floor")
            break
        dt = min(dt_stable, config.t_end - state.t)
        state, clamp = _advance(state, setup, config, dt)
        ctx.steps += 1
        if clamp > ctx.max_clamp:
            if clamp > clamp_limit >= ctx.max_clamp:
                logger.warning(f"monotonicity clamp {clamp:.3e} exceeds tolerance at t={state.t:.6g}")
            ctx.max_clamp = clamp

        current = sup_u(state, setup)
        defect = _defect(state, params, base_setup)
        if current >= trigger:
            ctx.update_state(RunOutcome.BLEW_UP, state.t, f"sup u={current:.4g} >= {trigger:.4g}")
        elif defect < breach_level:
            ctx.update_state(RunOutcome.MONITOR_BREACH, state.t, f"comparison defect {defect:.3e}")
        if ctx.finished or ctx.steps % config.trace_stride == 0 or state.t >= config.t_end:
            ctx.record(state.t, current, defect, quadrature_mass(state, setup), dt)

    witness = None
    if params is not None and ctx.t_detect is not None and ctx.t_detect < params.T_ext:
        witness = float(gradient_witness(params, base_setup, ctx.t_detect))
    logger.info(f"run stop: {ctx.outcome.value} at t={state.t:.6g} after {ctx.steps} steps ({ctx.message})")
    return RunReport(
        outcome=ctx.outcome, t_detect=ctx.t_detect, t_final=state.t, steps=ctx.steps, sup_u0=u0,
        T_ext=params.T_ext if params is not None else None, slope_witness=witness,
        max_clamp=ctx.max_clamp, clamp_limit=clamp_limit, message=ctx.message,
        times=np.array(ctx.times), sup_u=np.array(ctx.sup_u), min_defect=np.array(ctx.min_defect),
        mass=np.array(ctx.mass), dt=np.array(ctx.dt), final_state=state,
    )

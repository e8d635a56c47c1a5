"""State tracking for a single simulation run."""
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional


class RunOutcome(Enum):
    RUNNING = "running"
    BLEW_UP = "blew_up"
    BOUNDED_AT_HORIZON = "bounded_at_horizon"
    MONITOR_BREACH = "monitor_breach"
    STEP_FLOOR = "step_floor"

    @property
    def is_blowup(self) -> bool:
        """Step-floor collapse counts as blow-up in progress."""
        return self in (RunOutcome.BLEW_UP, RunOutcome.STEP_FLOOR)


@dataclass
class RunContext:
    """Mutable bookkeeping carried through the time loop."""
    outcome: RunOutcome = RunOutcome.RUNNING
    t_detect: Optional[float] = None
    steps: int = 0
    max_clamp: float = 0.0
    message: Optional[str] = None
    times: List[float] = field(default_factory=list)
    sup_u: List[float] = field(default_factory=list)
    min_defect: List[float] = field(default_factory=list)
    mass: List[float] = field(default_factory=list)
    dt: List[float] = field(default_factory=list)

    def update_state(self, new_state: RunOutcome, t: Optional[float] = None, message: Optional[str] = None):
        """Move to a terminal outcome, recording when and why."""
        self.outcome = new_state
        self.t_detect = t
        self.message = message

    @property
    def finished(self) -> bool:
        return self.outcome is not RunOutcome.RUNNING

    def record(self, t: float, sup_u: float, min_defect: float, mass: float, dt: float):
        self.times.append(t)
        self.sup_u.append(sup_u)
        self.min_defect.append(min_defect)
        self.mass.append(mass)
        self.dt.append(dt)

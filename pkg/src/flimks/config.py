"""Flat key-value configuration files."""
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from .operators import GridSpec
from .problem import ProblemSetup, make_setup
from .solver import INIT_MODES, SCHEMES, InitSpec, SolverConfig

logger = logging.getLogger(__name__)


class ConfigError(ValueError):
    def __init__(self, message: str, line: Optional[int] = None):
        super().__init__(f"line {line}: {message}" if line is not None else message)
        self.line = line


class ConfigValidator:
    LINE_PATTERN = re.compile(r'^\s*([A-Za-z_][\w.]*)\s*=\s*(.*?)\s*$')
    KEY_PATTERN = re.compile(r'^(problem|solver|init|certify|sweep)\.[A-Za-z_]+$')

    # key -> (kind, choices)
    KEYS = {
        'problem.n': ('int', None),
        'problem.R': ('float', None),
        'problem.chi': ('float', None),
        'problem.m': ('float', None),
        'solver.s_nodes': ('int', None),
        'solver.grading': ('float', None),
        'solver.cfl': ('float', None),
        'solver.t_end': ('float', None),
        'solver.blowup_threshold': ('float', None),
        'solver.monitor_tolerance': ('float', None),
        'solver.scheme': ('choice', SCHEMES),
        'solver.trace_stride': ('int', None),
        'solver.max_steps': ('int', None),
        'init.mode': ('choice', INIT_MODES),
        'init.margin': ('float', None),
        'init.smoothing': ('float', None),
        'init.floor': ('float', None),
        'init.width': ('float', None),
        'init.perturbation': ('float', None),
        'init.profile': ('str', None),
        'certify.s_nodes': ('int', None),
        'certify.t_nodes': ('int', None),
        'certify.t_fraction': ('float', None),
        'sweep.chi': ('floats', None),
        'sweep.m': ('floats', None),
    }

    @staticmethod
    def split_line(line: str) -> Optional[Tuple[str, str]]:
        """Strip comments; None for blank lines."""
        text = line.split('#', 1)[0].strip()
        if not text:
            return None
        match = ConfigValidator.LINE_PATTERN.match(text)
        if not match:
            return ('', text)
        return match.group(1), match.group(2)

    @staticmethod
    def validate_entry(key: str, value: str) -> Tuple[bool, Optional[str]]:
        """
        Check one key/value pair.
        Returns (is_valid, error_message)
        """
        if not key:
            return False, f"expected 'key = value', got {value!r}"
        if not ConfigValidator.KEY_PATTERN.match(key):
            return False, f"malformed key {key!r}; keys look like 'section.name'"
        if key not in ConfigValidator.KEYS:
            return False, f"unknown key {key!r}"
        if value == '':
            return False, f"missing value for {key}"

        kind, choices = ConfigValidator.KEYS[key]
        try:
            ConfigValidator.convert(kind, value)
        except ValueError:
            return False, f"{key} expects {'a list of numbers' if kind == 'floats' else 'a ' + kind}, got {value!r}"
        if choices is not None and value not in choices:
            return False, f"{key} must be one of {', '.join(choices)}, got {value!r}"
        return True, None

    @staticmethod
    def convert(kind: str, value: str) -> Any:
        if kind == 'int':
            return int(value)
        if kind == 'float':
            return float(value)
        if kind == 'floats':
            return [float(item) for item in value.split(',')]
        return value


@dataclass
class AppConfig:
    """Parsed configuration; only keys present in the file override defaults."""
    values: Dict[str, Any] = field(default_factory=dict)
    base_dir: Path = field(default_factory=Path.cwd)
    solver: SolverConfig = field(default_factory=SolverConfig)
    init: InitSpec = field(default_factory=InitSpec)
    grid: GridSpec = field(default_factory=GridSpec)

    def has(self, key: str) -> bool:
        return key in self.values

    def setup(self) -> ProblemSetup:
        missing = [key for key in ('problem.n', 'problem.chi', 'problem.m') if key not in self.values]
        if missing:
            raise ConfigError(f"missing required keys: {', '.join(missing)}")
        return make_setup(self.values['problem.n'], self.values.get('problem.R', 1.0),
                          self.values['problem.chi'], self.values['problem.m'])

    @property
    def sweep_chi(self) -> List[float]:
        if 'sweep.chi' in self.values:
            return self.values['sweep.chi']
        return [self.values['problem.chi']] if 'problem.chi' in self.values else []

    @property
    def sweep_m(self) -> List[float]:
        if 'sweep.m' in self.values:
            return self.values['sweep.m']
        return [self.values['problem.m']] if 'problem.m' in self.values else []


def _section(values: Dict[str, Any], prefix: str) -> Dict[str, Any]:
    return {key.split('.', 1)[1]: value for key, value in values.items() if key.startswith(prefix + '.')}


def parse_config(text: str, base_dir: Path = None) -> AppConfig:
    base_dir = Path(base_dir) if base_dir is not None else Path.cwd()
    values: Dict[str, Any] = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        entry = ConfigValidator.split_line(line)
        if entry is None:
            continue
        key, raw = entry
        is_valid, error = ConfigValidator.validate_entry(key, raw)
        if not is_valid:
            raise ConfigError(error, line_no)
        if key in values:
            raise ConfigError(f"duplicate key {key}", line_no)
        values[key] = ConfigValidator.convert(ConfigValidator.KEYS[key][0], raw)

    init_values = _section(values, 'init')
    if 'profile' in init_values:
        path = Path(init_values['profile'])
        init_values['profile'] = str(path if path.is_absolute() else base_dir / path)
    try:
        solver = SolverConfig(**_section(values, 'solver'))
        init = InitSpec(**init_values)
        grid = GridSpec(**_section(values, 'certify'))
    except ValueError as e:
        raise ConfigError(str(e))
    logger.debug(f"parsed {len(values)} config keys")
    return AppConfig(values=values, base_dir=base_dir, solver=solver, init=init, grid=grid)


def load_config(path) -> AppConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ConfigError(f"cannot read {path}: {e}")
    return parse_config(text, base_dir=path.parent)

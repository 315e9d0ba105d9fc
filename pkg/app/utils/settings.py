import copy
import json
import logging
import os

from dotenv import load_dotenv

logger = logging.getLogger(__name__)

DATA_DIR = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "data")
DEFAULT_SETTINGS_FILE = os.path.join(DATA_DIR, "settings.json")

DEFAULT_SETTINGS = {
    "quadrature": {
        "abs_tol": 1e-10,
        "limit": 200
    },
    "grazing": {
        "tol_factor": 1e-9,
        "nudge_multiple": 10
    },
    "integrator": {
        "rtol": 1e-12,
        "atol": 1e-14,
        "event_tol": 1e-12,
        "max_revolutions": 2,
        "max_radius_factor": 10.0
    },
    "finite_difference": {
        "epsilon_step": 1e-6,
        "root_derivative_step": 1e-5
    },
    "fit": {
        "epsilons": [0.02, 0.01, 0.005, 0.0025],
        "max_epsilon": 0.05,
        "terms": 3
    },
    "roots": {
        "xtol": 1e-10,
        "derivative_floor": 1e-6,
        "even_root_floor": 1e-3
    },
    "run": {
        "jobs": 1,
        "log_level": "INFO"
    }
}

# (environment variable, section, key, cast)
ENVIRONMENT_OVERRIDES = [
    ("MELNIKOV_QUAD_TOL", "quadrature", "abs_tol", float),
    ("MELNIKOV_RTOL", "integrator", "rtol", float),
    ("MELNIKOV_ATOL", "integrator", "atol", float),
    ("MELNIKOV_EVENT_TOL", "integrator", "event_tol", float),
    ("MELNIKOV_JOBS", "run", "jobs", int),
    ("MELNIKOV_LOG_LEVEL", "run", "log_level", str),
]


class Settings:
    def __init__(self, settings_file=DEFAULT_SETTINGS_FILE, use_environment=True):
        """Load numerics defaults from the settings file, then apply environment overrides."""
        self.settings_file = settings_file
        self.settings = self._load_settings()
        if use_environment:
            self._apply_environment()

    def _load_settings(self):
        """Load settings from JSON file, falling back to the built-in defaults."""
        settings = copy.deepcopy(DEFAULT_SETTINGS)
        if self.settings_file and os.path.exists(self.settings_file):
            try:
                with open(self.settings_file, 'r') as f:
                    stored = json.load(f)
                for section, values in stored.items():
                    settings.setdefault(section, {}).update(values)
            except Exception as e:
                logger.warning("Error loading settings from %s: %s", self.settings_file, e)
        return settings

    def _apply_environment(self):
        load_dotenv()
        for variable, section, key, cast in ENVIRONMENT_OVERRIDES:
            raw = os.environ.get(variable)
            if raw is None or raw == "":
                continue
            try:
                self.settings[section][key] = cast(raw)
            except ValueError:
                logger.warning("Ignoring %s=%r: not a valid %s", variable, raw, cast.__name__)

    def get(self, section, key, default=None):
        return self.settings.get(section, {}).get(key, default)

    @property
    def quad_tol(self):
        return float(self.get("quadrature", "abs_tol"))

    @property
    def jobs(self):
        return max(1, int(self.get("run", "jobs", 1)))

    @property
    def log_level(self):
        return str(self.get("run", "log_level", "INFO")).upper()

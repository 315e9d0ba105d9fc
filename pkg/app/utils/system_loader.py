import json
import logging
import os

from app.utils.errors import ConfigError, InvalidInputError
from app.utils.model import (
    PerturbedSystem,
    ShapeFunction,
    ZonePartition,
    van_der_pol_harness,
    zero_harness,
)
from app.utils.settings import DATA_DIR

logger = logging.getLogger(__name__)

DEFAULT_SYSTEM_FILE = os.path.join(DATA_DIR, "systems", "example_system.json")

HARNESS_FACTORIES = {
    "van_der_pol": van_der_pol_harness,
    "zero": zero_harness,
}


def _require(definition, key):
    if key not in definition:
        raise ConfigError("missing required field", field=key)
    return definition[key]


def build_shape(spec):
    """Shape function from a definition entry: a name or {"type": ..., ...}."""
    if isinstance(spec, str):
        spec = {"type": spec}
    if not isinstance(spec, dict):
        raise ConfigError(f"expected a name or an object, got {spec!r}", field="shape")

    kind = spec.get("type")
    if kind == "linear":
        return ShapeFunction.linear()
    if kind == "cubic":
        return ShapeFunction.cubic()
    if kind == "power":
        return ShapeFunction.power(_require(spec, "k"))
    if kind == "polynomial":
        coefficients = _require(spec, "coefficients")
        if not isinstance(coefficients, list):
            raise ConfigError("must be a list of h' coefficients, low to high", field="coefficients")
        return ShapeFunction.polynomial(coefficients, label=spec.get("label", "custom-polynomial"))
    raise ConfigError(f"unknown shape {kind!r}; expected linear, cubic, power or polynomial", field="shape")


def system_from_definition(definition):
    """Build a PerturbedSystem or a harness system from a parsed definition."""
    if not isinstance(definition, dict):
        raise ConfigError("system definition must be an object", field="system")

    kind = definition.get("kind", "piecewise")
    if kind in HARNESS_FACTORIES:
        return HARNESS_FACTORIES[kind]()
    if kind != "piecewise":
        raise ConfigError(f"unknown kind {kind!r}", field="kind")

    breakpoints = _require(definition, "breakpoints")
    slopes = _require(definition, "slopes")
    if not isinstance(breakpoints, list):
        raise ConfigError("must be a list", field="breakpoints")
    if not isinstance(slopes, list):
        raise ConfigError("must be a list", field="slopes")
    strict_mode = definition.get("strict_mode", True)
    if not isinstance(strict_mode, bool):
        raise ConfigError(f"must be true or false, got {strict_mode!r}", field="strict_mode")

    try:
        partition = ZonePartition(tuple(breakpoints), tuple(slopes), strict_mode=strict_mode)
        shape = build_shape(definition.get("shape", "linear"))
    except ConfigError:
        raise
    except InvalidInputError as e:
        raise ConfigError(str(e).split(": ", 1)[-1], field=e.field)
    return PerturbedSystem(partition, shape, label=definition.get("label", "piecewise-duffing"))


class SystemLoader:
    def __init__(self, system_file=DEFAULT_SYSTEM_FILE):
        """Read a system definition file; a missing file is a ConfigError."""
        self.system_file = system_file
        self.definition = self._load_definition()

    def _load_definition(self):
        if not os.path.exists(self.system_file):
            raise ConfigError(f"file not found: {self.system_file}", field="system")
        try:
            with open(self.system_file, 'r') as f:
                return json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigError(f"{self.system_file} is not valid JSON ({e.msg}, line {e.lineno})", field="system")

    def build(self):
        system = system_from_definition(self.definition)
        logger.info("Loaded system %s from %s", system.label, self.system_file)
        return system


def load_system(path):
    return SystemLoader(path).build()

import json
import os

import pytest

from app.utils.errors import ConfigError
from app.utils.model import GeneralHarnessSystem, PerturbedSystem
from app.utils.settings import DEFAULT_SETTINGS, Settings
from app.utils.system_loader import (
    SystemLoader,
    build_shape,
    load_system,
    system_from_definition,
)


def test_bundled_definitions_load(systems_dir):
    for name in sorted(os.listdir(systems_dir)):
        system = load_system(os.path.join(systems_dir, name))
        assert isinstance(system, (PerturbedSystem, GeneralHarnessSystem))


def test_example_definition(systems_dir):
    system = load_system(os.path.join(systems_dir, "example_system.json"))
    assert system.partition.breakpoints == (1.0, 2.0)
    assert system.partition.slopes == (1.0, 2.0, 3.0)
    assert system.shape.label == "linear"


def test_van_der_pol_kind(systems_dir):
    system = load_system(os.path.join(systems_dir, "van_der_pol.json"))
    assert isinstance(system, GeneralHarnessSystem)
    assert system.label == "van-der-pol"


@pytest.mark.parametrize("definition, field", [
    ({"slopes": [1, 2]}, "breakpoints"),
    ({"breakpoints": [1.0]}, "slopes"),
    ({"breakpoints": [1.0, 2.0], "slopes": [3, 2, 1]}, "slopes"),
    ({"breakpoints": [2.0, 1.0], "slopes": [1, 2, 3]}, "breakpoints"),
    ({"breakpoints": [1.0], "slopes": [1, 2], "shape": "quartic"}, "shape"),
    ({"breakpoints": [1.0], "slopes": [1, 2], "shape": {"type": "polynomial"}}, "coefficients"),
    ({"breakpoints": [1.0], "slopes": [1, 2], "strict_mode": "yes"}, "strict_mode"),
    ({"kind": "filippov"}, "kind"),
    ([1, 2, 3], "system"),
])
def test_validation_names_the_field(definition, field):
    with pytest.raises(ConfigError) as excinfo:
        system_from_definition(definition)
    assert excinfo.value.field == field
    assert field in str(excinfo.value)


def test_relaxed_slopes_are_accepted():
    system = system_from_definition({"breakpoints": [1.0, 2.0], "slopes": [3, 2, 1], "strict_mode": False})
    assert system.partition.slopes == (3.0, 2.0, 1.0)


def test_shapes():
    assert build_shape("cubic").h(2.0) == pytest.approx(4.0)
    assert build_shape({"type": "power", "k": 6}).h(1.0) == pytest.approx(1.0 / 6.0)
    assert build_shape({"type": "polynomial", "coefficients": [1.0, 0.0, 3.0]}).h(1.0) == pytest.approx(2.0)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError) as excinfo:
        SystemLoader(str(tmp_path / "missing.json"))
    assert "file not found" in str(excinfo.value)


def test_invalid_json(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{ not json")
    with pytest.raises(ConfigError):
        SystemLoader(str(path))


def test_polynomial_definition_from_file(tmp_path, cubic_system):
    path = tmp_path / "cubic.json"
    path.write_text(json.dumps({
        "kind": "piecewise",
        "breakpoints": [1.0, 2.0],
        "slopes": [1.0, 2.0, 3.0],
        "shape": {"type": "polynomial", "coefficients": [0.0, 0.0, 0.0, 1.0]},
    }))
    reloaded = load_system(str(path))
    assert reloaded.partition == cubic_system.partition
    assert reloaded.shape.h(1.5) == pytest.approx(cubic_system.shape.h(1.5))


class TestSettings:
    def test_defaults_when_file_is_missing(self, tmp_path):
        settings = Settings(str(tmp_path / "none.json"), use_environment=False)
        assert settings.settings == DEFAULT_SETTINGS
        assert settings.quad_tol == 1e-10
        assert settings.jobs == 1

    def test_file_overrides_defaults(self, tmp_path):
        path = tmp_path / "settings.json"
        path.write_text(json.dumps({"quadrature": {"abs_tol": 1e-9}}))
        settings = Settings(str(path), use_environment=False)
        assert settings.quad_tol == 1e-9
        assert settings.get("quadrature", "limit") == 200

    def test_environment_overrides_file(self, tmp_path, monkeypatch):
        monkeypatch.setenv("MELNIKOV_JOBS", "3")
        monkeypatch.setenv("MELNIKOV_RTOL", "not-a-number")
        settings = Settings(str(tmp_path / "none.json"))
        assert settings.jobs == 3
        assert settings.get("integrator", "rtol") == 1e-12

"""
Basic structure tests
"""
from src.cli import build_parser
from src.config import settings


def test_package_structure():
    """Test that package structure exists"""
    import src
    assert hasattr(src, '__path__')
    assert src.__version__ == settings.version


def test_imports():
    """Test that subpackages can be imported"""
    from src import analysis, config, features, pipeline, utils

    for module in (analysis, config, features, pipeline, utils):
        assert module is not None


def test_utils_exports():
    """Errors and helpers are exported from src.utils"""
    from src.utils import DomainError, NumericalError, SphereEnergyError, get_logger, make_rng

    assert issubclass(DomainError, SphereEnergyError)
    assert issubclass(NumericalError, SphereEnergyError)
    assert issubclass(DomainError, ValueError)
    assert get_logger("src.test") is not None
    assert make_rng(0, 1).integers(10) == make_rng(0, 1).integers(10)


def test_settings_paths():
    """Config and schema directories exist"""
    assert settings.config_dir.exists()
    assert settings.schemas_dir.exists()
    assert settings.logging_config.exists()


def test_every_subcommand_has_a_schema():
    """Each CLI subcommand validates against its own schema"""
    parser = build_parser()
    sub = next(a for a in parser._actions if a.dest == "subcommand")
    for name in sub.choices:
        assert (settings.schemas_dir / f"{name}.schema.json").exists(), name


def test_settings_env_override(monkeypatch):
    """Settings read SPHERE_ENERGY_ variables"""
    from src.config.settings import Settings

    monkeypatch.setenv("SPHERE_ENERGY_N_STARTS", "7")
    assert Settings().n_starts == 7

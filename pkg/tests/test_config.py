import pytest
import tomlkit

from knotmu.config import Settings, Tolerance, config_path, ensure_table, load_settings, save_settings


def test_defaults():
    tol = Tolerance()
    assert (tol.eq_tol, tol.sep_tol, tol.endpoint_tol) == (1e-9, 1e-6, 1e-6)
    s = Settings()
    assert s.max_retries == 8
    assert s.grid_resolution == 1024


@pytest.mark.parametrize("kwargs", [{"eq_tol": 0.0}, {"sep_tol": -1.0}, {"eq_tol": 1e-3, "sep_tol": 1e-6}])
def test_tolerance_rejects_bad_values(kwargs):
    with pytest.raises(ValueError):
        Tolerance(**kwargs)


@pytest.mark.parametrize("resolution", [128, 1000])
def test_grid_resolution_must_be_power_of_two(resolution):
    with pytest.raises(ValueError):
        Settings(grid_resolution=resolution)


def test_with_overrides_splits_tolerance_and_engine_fields():
    s = Settings().with_overrides(sep_tol=1e-5, max_retries=3, eq_tol=None)
    assert s.tolerance.sep_tol == 1e-5
    assert s.tolerance.eq_tol == 1e-9, "None overrides must be ignored"
    assert s.max_retries == 3


def test_precedence_file_then_env_then_overrides(tmp_path):
    path = tmp_path / "knotmu.toml"
    path.write_text("[tolerance]\nsep_tol = 2e-6\neq_tol = 1e-10\n\n[engine]\nmax_retries = 4\n", encoding="utf-8")

    from_file = load_settings(path=path, env={})
    assert from_file.tolerance.sep_tol == 2e-6
    assert from_file.tolerance.eq_tol == 1e-10
    assert from_file.max_retries == 4

    from_env = load_settings(path=path, env={"KNOTMU_SEP_TOL": "3e-6", "KNOTMU_MAX_RETRIES": "5"})
    assert from_env.tolerance.sep_tol == 3e-6
    assert from_env.max_retries == 5

    explicit = load_settings(path=path, env={"KNOTMU_SEP_TOL": "3e-6"}, sep_tol=4e-6)
    assert explicit.tolerance.sep_tol == 4e-6


def test_bad_environment_value_names_the_variable(tmp_path):
    with pytest.raises(ValueError, match="KNOTMU_EQ_TOL"):
        load_settings(path=tmp_path / "none.toml", env={"KNOTMU_EQ_TOL": "tiny"})


def test_config_path_from_environment(tmp_path, monkeypatch):
    target = tmp_path / "elsewhere.toml"
    monkeypatch.setenv("KNOTMU_CONFIG", str(target))
    assert config_path() == target
    assert config_path(tmp_path / "x.toml") == tmp_path / "x.toml"


def test_save_settings_keeps_unrelated_tables(tmp_path):
    path = tmp_path / "knotmu.toml"
    path.write_text('[render]\ntheme = "dark"\n', encoding="utf-8")
    save_settings(Settings().with_overrides(max_retries=2, sep_tol=5e-6), path)

    doc = tomlkit.parse(path.read_text(encoding="utf-8"))
    assert doc["render"]["theme"] == "dark"
    assert doc["engine"]["max_retries"] == 2

    again = load_settings(path=path, env={})
    assert again.max_retries == 2
    assert again.tolerance.sep_tol == 5e-6


def test_ensure_table_reuses_existing():
    doc = tomlkit.parse("[engine]\nmax_retries = 1\n")
    table = ensure_table(doc, "engine")
    assert table["max_retries"] == 1
    fresh = ensure_table(doc, "tolerance")
    fresh["eq_tol"] = 1e-9
    assert "tolerance" in doc

"""
Tests for JSON run configuration parsing.
"""

import json

import pytest

from app.cli.run_config import RunConfig, load_run_config, parse_run_config
from app.errors import ConfigError


@pytest.fixture
def full_doc():
    return {
        "cantilever": {"spring": 1e-3, "omega0": 62831.85307179586, "quality": 100.0, "temperature": 4.0},
        "geometry": {"radius": 1e-6, "gap": 1e-8, "normal": [0, 0, 1]},
        "material": {"rho_a": 5e28, "rho_b": 5e28, "kappa": 1e-40, "debye_frequency": 1e16},
        "simulation": {"dt": 2.5e-6, "duration": 0.5, "seed": 3},
        "mode": {"kind": "euler_bernoulli", "length": 2e-4, "index": 1},
    }


class TestParseRunConfig:
    """Sections, defaults and problem collection"""

    def test_full_document(self, full_doc):
        cfg = parse_run_config(full_doc)
        assert cfg.cantilever.spring == pytest.approx(1e-3, rel=1e-14)
        assert cfg.geometry.gap == 1e-8
        assert cfg.material.dist.is_debye
        assert cfg.simulation.seed == 3
        assert cfg.simulation.params is cfg.cantilever
        assert cfg.mode.mode_index == 1

    def test_empty_document(self):
        assert parse_run_config({}) == RunConfig()

    def test_mass_instead_of_spring(self, full_doc):
        full_doc["cantilever"] = {"mass": 1e-12, "omega0": 1e4, "quality": 10.0, "temperature": 0.0}
        cfg = parse_run_config(full_doc)
        assert cfg.cantilever.mass == 1e-12

    def test_simulation_seed_defaults_to_environment(self, full_doc, monkeypatch):
        monkeypatch.setenv("CASIMIR_SEED", "42")
        del full_doc["simulation"]["seed"]
        assert parse_run_config(full_doc).simulation.seed == 42

    def test_every_problem_reported_with_path(self, full_doc):
        full_doc["cantilever"]["quality"] = -1
        full_doc["geometry"]["gap"] = "tiny"
        full_doc["material"]["kappa"] = None
        full_doc["extras"] = {}
        with pytest.raises(ConfigError) as excinfo:
            parse_run_config(full_doc, source="run.json")
        problems = excinfo.value.problems
        assert "cantilever.quality: must be > 0" in problems
        assert any(p.startswith("geometry.gap: must be a number") for p in problems)
        assert "material.kappa: missing" in problems
        assert any(p.startswith("extras: unknown section") for p in problems)
        assert str(excinfo.value).startswith("run.json: ")

    @pytest.mark.parametrize(
        "cantilever",
        [
            {"omega0": 1.0, "quality": 1.0, "temperature": 1.0},
            {"mass": 1.0, "spring": 1.0, "omega0": 1.0, "quality": 1.0, "temperature": 1.0},
        ],
    )
    def test_mass_and_spring_are_exclusive(self, cantilever):
        with pytest.raises(ConfigError, match="exactly one of mass or spring"):
            parse_run_config({"cantilever": cantilever})

    def test_distribution_source_is_either_or(self, full_doc, tmp_path):
        table = tmp_path / "dist.csv"
        table.write_text("omega,p\n0,0\n1e16,1\n")
        full_doc["material"]["distribution_csv"] = str(table)
        with pytest.raises(ConfigError, match="either debye_frequency or distribution_csv"):
            parse_run_config(full_doc)
        del full_doc["material"]["debye_frequency"]
        cfg = parse_run_config(full_doc)
        assert not cfg.material.dist.is_debye

    def test_relative_paths_resolve_against_config_dir(self, full_doc, tmp_path):
        (tmp_path / "mode.csv").write_text("z,phi\n0,0\n1e-4,0.5\n2e-4,1\n")
        full_doc["mode"] = {"kind": "tabulated", "csv": "mode.csv"}
        path = tmp_path / "run.json"
        path.write_text(json.dumps(full_doc))
        cfg = load_run_config(path)
        assert cfg.mode.length == pytest.approx(2e-4)

    def test_domain_errors_become_problems(self, full_doc):
        full_doc["geometry"]["normal"] = [0, 0, 2]
        full_doc["mode"]["index"] = 99
        with pytest.raises(ConfigError) as excinfo:
            parse_run_config(full_doc)
        problems = excinfo.value.problems
        assert any(p.startswith("geometry.normal:") for p in problems)
        assert any(p.startswith("mode.index:") for p in problems)

    def test_simulation_needs_cantilever(self, full_doc):
        del full_doc["cantilever"]
        with pytest.raises(ConfigError, match="requires a cantilever section"):
            parse_run_config(full_doc)

    def test_unknown_mode_kind(self, full_doc):
        full_doc["mode"]["kind"] = "parabolic"
        with pytest.raises(ConfigError, match="mode.kind"):
            parse_run_config(full_doc)

    def test_require(self):
        with pytest.raises(ConfigError, match="geometry: section is required"):
            RunConfig().require("geometry")


class TestLoadRunConfig:
    """File handling"""

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="not found"):
            load_run_config(tmp_path / "absent.json")

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text("{not json")
        with pytest.raises(ConfigError, match="invalid JSON"):
            load_run_config(path)

    def test_not_utf8(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_bytes(b"{\"cantilever\": \"\xff\"}")
        with pytest.raises(ConfigError, match="UTF-8"):
            load_run_config(path)

    def test_top_level_must_be_object(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text("[1, 2]")
        with pytest.raises(ConfigError, match="JSON object"):
            load_run_config(path)

"""
Run configuration: one JSON document with `cantilever`, `geometry`, `material`,
`simulation` and `mode` sections. Every problem is collected with its dotted
path before anything is raised, so a user fixes a file in one pass.
"""

import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional

from app import config
from app.atomic.ensemble import SpectralDistribution, load_distribution_csv
from app.errors import CasimirError, ConfigError
from app.experiment.predict import CantileverParams
from app.experiment.simulate import SimulationConfig
from app.geometry.mode_shape import ModeShape, load_mode_shape_csv
from app.geometry.tip_sample import DipoleCoupling, MaterialSpec, TipSampleGeometry

logger = logging.getLogger(__name__)

SECTIONS = ("cantilever", "geometry", "material", "simulation", "mode")


@dataclass(frozen=True)
class RunConfig:
    """Validated sections of a run configuration; absent sections stay None"""
    cantilever: Optional[CantileverParams] = None
    geometry: Optional[TipSampleGeometry] = None
    material: Optional[MaterialSpec] = None
    simulation: Optional[SimulationConfig] = None
    mode: Optional[ModeShape] = None

    def require(self, *sections: str) -> "RunConfig":
        missing = [name for name in sections if getattr(self, name) is None]
        if missing:
            raise ConfigError([f"{name}: section is required for this command" for name in missing])
        return self


class _Reader:
    """Pulls typed values out of nested dicts while recording path-qualified problems"""

    def __init__(self, base_dir: Optional[Path] = None):
        self.problems: List[str] = []
        self.base_dir = base_dir

    def section(self, doc: Dict[str, Any], name: str) -> Optional[Dict[str, Any]]:
        value = doc.get(name)
        if value is None:
            return None
        if not isinstance(value, dict):
            self.problems.append(f"{name}: must be an object")
            return None
        return value

    def number(self, section: Dict[str, Any], path: str, key: str, required: bool = True,
               minimum: Optional[float] = None, strict: bool = True, default: Optional[float] = None):
        where = f"{path}.{key}"
        if key not in section or section[key] is None:
            if required:
                self.problems.append(f"{where}: missing")
            return default
        value = section[key]
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            self.problems.append(f"{where}: must be a number, got {value!r}")
            return default
        value = float(value)
        if not math.isfinite(value):
            self.problems.append(f"{where}: must be finite")
            return default
        if minimum is not None:
            if strict and not value > minimum:
                self.problems.append(f"{where}: must be > {minimum:g}")
                return default
            if not strict and not value >= minimum:
                self.problems.append(f"{where}: must be >= {minimum:g}")
                return default
        return value

    def path(self, section: Dict[str, Any], where: str, key: str) -> Optional[Path]:
        value = section.get(key)
        if value is None:
            return None
        if not isinstance(value, str):
            self.problems.append(f"{where}.{key}: must be a file path string")
            return None
        p = Path(value)
        if not p.is_absolute() and self.base_dir is not None:
            p = self.base_dir / p
        return p

    def build(self, where: str, factory, *args, **kwargs):
        """Construct a domain object, turning its own validation error into a problem"""
        try:
            return factory(*args, **kwargs)
        except CasimirError as e:
            self.problems.append(f"{where}: {e}")
            return None


def _cantilever(reader: _Reader, doc) -> Optional[CantileverParams]:
    section = reader.section(doc, "cantilever")
    if section is None:
        return None
    omega0 = reader.number(section, "cantilever", "omega0", minimum=0)
    quality = reader.number(section, "cantilever", "quality", minimum=0)
    temperature = reader.number(section, "cantilever", "temperature", minimum=0, strict=False)
    has_mass, has_spring = "mass" in section, "spring" in section
    if has_mass == has_spring:
        reader.problems.append("cantilever: give exactly one of mass or spring")
        return None
    if has_mass:
        mass = reader.number(section, "cantilever", "mass", minimum=0)
        if None in (mass, omega0, quality, temperature):
            return None
        return reader.build("cantilever", CantileverParams, mass, omega0, quality, temperature)
    spring = reader.number(section, "cantilever", "spring", minimum=0)
    if None in (spring, omega0, quality, temperature):
        return None
    return reader.build("cantilever", CantileverParams.from_spring, spring, omega0, quality, temperature)


def _geometry(reader: _Reader, doc) -> Optional[TipSampleGeometry]:
    section = reader.section(doc, "geometry")
    if section is None:
        return None
    radius = reader.number(section, "geometry", "radius", minimum=0)
    gap = reader.number(section, "geometry", "gap", minimum=0)
    normal = section.get("normal", [0.0, 0.0, 1.0])
    if not (isinstance(normal, list) and len(normal) == 3 and all(isinstance(c, (int, float)) for c in normal)):
        reader.problems.append("geometry.normal: must be a list of three numbers")
        return None
    if None in (radius, gap):
        return None
    return reader.build("geometry.normal", TipSampleGeometry, radius, gap, tuple(normal))


def _material(reader: _Reader, doc) -> Optional[MaterialSpec]:
    section = reader.section(doc, "material")
    if section is None:
        return None
    rho_a = reader.number(section, "material", "rho_a", minimum=0)
    rho_b = reader.number(section, "material", "rho_b", minimum=0)
    kappa = reader.number(section, "material", "kappa")
    table = reader.path(section, "material", "distribution_csv")
    dist = None
    if table is not None:
        if "debye_frequency" in section:
            reader.problems.append("material: give either debye_frequency or distribution_csv, not both")
            return None
        dist = reader.build("material.distribution_csv", load_distribution_csv, table)
    else:
        omega_d = reader.number(section, "material", "debye_frequency", minimum=0)
        if omega_d is not None:
            dist = SpectralDistribution.debye(omega_d)
    if None in (rho_a, rho_b, kappa, dist):
        return None
    return MaterialSpec(rho_a, rho_b, DipoleCoupling(kappa), dist)


def _mode(reader: _Reader, doc) -> Optional[ModeShape]:
    section = reader.section(doc, "mode")
    if section is None:
        return None
    kind = section.get("kind", "linear")
    if kind == "tabulated":
        table = reader.path(section, "mode", "csv")
        if table is None:
            reader.problems.append("mode.csv: required for a tabulated mode")
            return None
        length = reader.number(section, "mode", "length", required=False, minimum=0)
        return reader.build("mode.csv", load_mode_shape_csv, table, length)
    length = reader.number(section, "mode", "length", minimum=0)
    if length is None:
        return None
    if kind == "linear":
        return ModeShape.linear(length)
    if kind == "euler_bernoulli":
        index = section.get("index", 1)
        if isinstance(index, bool) or not isinstance(index, int):
            reader.problems.append(f"mode.index: must be an integer, got {index!r}")
            return None
        return reader.build("mode.index", ModeShape.euler_bernoulli, length, index)
    reader.problems.append(f"mode.kind: must be linear, euler_bernoulli or tabulated, got {kind!r}")
    return None


def _simulation(reader: _Reader, doc, params: Optional[CantileverParams]) -> Optional[SimulationConfig]:
    section = reader.section(doc, "simulation")
    if section is None:
        return None
    dt = reader.number(section, "simulation", "dt", minimum=0)
    duration = reader.number(section, "simulation", "duration", minimum=0)
    extra_psd = reader.number(section, "simulation", "extra_force_psd", required=False, minimum=0,
                              strict=False, default=0.0)
    extra_damping = reader.number(section, "simulation", "extra_damping", required=False, default=0.0)
    if "seed" in section:
        seed = section["seed"]
    else:
        try:
            seed = config.seed_from_env()
        except ValueError as e:
            reader.problems.append(f"simulation.seed: {e}")
            return None
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        reader.problems.append(f"simulation.seed: must be a non-negative integer, got {seed!r}")
        return None
    if params is None:
        if "cantilever" not in doc:
            reader.problems.append("simulation: requires a cantilever section")
        return None
    if None in (dt, duration):
        return None
    return reader.build(
        "simulation", SimulationConfig,
        dt=dt, duration=duration, params=params, seed=seed,
        extra_force_psd=extra_psd, extra_damping=extra_damping,
    )


def parse_run_config(doc: Any, source: Optional[str] = None, base_dir: Optional[Path] = None) -> RunConfig:
    """
    Validate a decoded JSON document.

    Raises:
        ConfigError: listing every problem found, each prefixed by its dotted path
    """
    if not isinstance(doc, dict):
        raise ConfigError("top level must be a JSON object", source=source)
    reader = _Reader(base_dir)
    unknown = sorted(set(doc) - set(SECTIONS))
    for name in unknown:
        reader.problems.append(f"{name}: unknown section (expected one of {', '.join(SECTIONS)})")
    cantilever = _cantilever(reader, doc)
    result = RunConfig(
        cantilever=cantilever,
        geometry=_geometry(reader, doc),
        material=_material(reader, doc),
        simulation=_simulation(reader, doc, cantilever),
        mode=_mode(reader, doc),
    )
    if reader.problems:
        raise ConfigError(reader.problems, source=source)
    logger.debug(f"[RunConfig] parsed sections: {[n for n in SECTIONS if getattr(result, n) is not None]}")
    return result


def load_run_config(path) -> RunConfig:
    """Read and validate a JSON run configuration file"""
    path = Path(path)
    if not path.is_file():
        raise ConfigError("file not found", source=str(path))
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except UnicodeDecodeError as e:
        raise ConfigError(f"not UTF-8 text: {e}", source=str(path))
    except json.JSONDecodeError as e:
        raise ConfigError(f"invalid JSON: {e}", source=str(path))
    except OSError as e:
        raise ConfigError(f"cannot read: {e}", source=str(path))
    return parse_run_config(doc, source=str(path), base_dir=path.parent)

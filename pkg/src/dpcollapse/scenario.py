"""Scenario configuration, orchestration and report emission.

Scenario files are YAML mappings. Every physical value states its unit,
either in the key (``mass_kg: 1.0e-23``) or in the value
(``mass: "1.0e-23 kg"``). See the README for the full schema.
"""
from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Any, Optional

import yaml

from . import collapse, energy
from .distributions import DistributionModel, Shape, SuperpositionSpec
from .energy import Interaction, Method, Weighting
from .units import (
    CHARGE,
    CONSTANTS,
    ENERGY,
    FORCE,
    LENGTH,
    MASS,
    TIME,
    Dimension,
    Quantity,
    convert_to_eV,
)

SCHEMA_VERSION = 1
DEFAULT_SEED = energy.DEFAULT_SEED
DEFAULT_MC_SAMPLES = 200_000
FORMATS = ("table", "json", "csv")
SHAPES = tuple(s.value for s in Shape)
WEIGHTINGS = tuple(w.value for w in Weighting)


class ConfigError(ValueError):
    def __init__(self, message: str, field: str | None = None, line: int | None = None):
        self.field = field
        self.line = line
        where = []
        if field is not None:
            where.append(f"field '{field}'")
        if line is not None:
            where.append(f"line {line}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)


class ComputationError(RuntimeError):
    """A scenario failed while computing; carries the scenario name."""


PRESETS: dict[str, dict[str, Any]] = {
    "penrose_micron": {
        "description": "1 um uniform sphere, mass inverted from G m^2/a = 1e-19 eV",
        "shape": "sphere",
        "size_m": 1.0e-6,
        "mass_kg": 1.5e-17,
        "charge_C": None,
        "separations_m": (2.0e-6, 1.0e-5, 1.0e-4),
        "n_list": None,
        "weighting": "full",
    },
    "trapped_ion": {
        "description": "singly charged ion, 1e-23 kg, branches 0.1 um apart",
        "shape": "gaussian",
        "size_m": 1.0e-8,
        "mass_kg": 1.0e-23,
        "charge_C": CONSTANTS.elementary_charge.value,
        "separations_m": (1.0e-7,),
        "n_list": None,
        "weighting": "full",
    },
    "n_component_sweep": {
        "description": "N-branch bound vs coincident self-energy, shell radius = particle radius",
        "shape": "sphere",
        "size_m": 1.0e-6,
        "mass_kg": 1.5e-17,
        "charge_C": None,
        "separations_m": (1.0e-6,),
        "n_list": (1, 2, 3, 4, 5, 10, 20, 50, 100),
        "weighting": "full",
    },
}

@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    shape: str
    mass_kg: float
    separations_m: tuple[float, ...]
    size_m: Optional[float] = None
    charge_C: Optional[float] = None
    n_list: Optional[tuple[int, ...]] = None
    preset: Optional[str] = None
    weighting: str = "born"
    convention_factor: float = energy.DEFAULT_CONVENTION
    mc_samples: int = DEFAULT_MC_SAMPLES
    seed: int = DEFAULT_SEED
    output_format: str = "table"

    def __post_init__(self):
        validate(self)

    def model(self) -> DistributionModel:
        charge = None if self.charge_C is None else Quantity(self.charge_C, CHARGE)
        size = None if self.size_m is None else Quantity(self.size_m, LENGTH)
        return DistributionModel(Shape(self.shape), Quantity(self.mass_kg, MASS), size, charge)


def validate(cfg: ScenarioConfig) -> None:
    if not cfg.name:
        raise ConfigError("name required", "name")
    if cfg.preset is not None and cfg.preset not in PRESETS:
        raise ConfigError(f"unknown preset {cfg.preset!r}; choose from {sorted(PRESETS)}", "preset")
    if cfg.shape not in SHAPES:
        raise ConfigError(f"shape must be one of {SHAPES}", "shape")
    if not (math.isfinite(cfg.mass_kg) and cfg.mass_kg > 0.0):
        raise ConfigError("mass must be positive", "mass_kg")
    if cfg.shape == "point":
        if cfg.size_m is not None:
            raise ConfigError("a point particle takes no size", "size_m")
    elif cfg.size_m is None or not (math.isfinite(cfg.size_m) and cfg.size_m > 0.0):
        raise ConfigError("size must be positive for extended shapes", "size_m")
    if cfg.charge_C is not None and not math.isfinite(cfg.charge_C):
        raise ConfigError("charge must be finite", "charge_C")
    if not cfg.separations_m:
        raise ConfigError("at least one separation required", "separations_m")
    for d in cfg.separations_m:
        if not (math.isfinite(d) and d > 0.0):
            raise ConfigError("separations must be positive", "separations_m")
    if cfg.n_list is not None:
        if not cfg.n_list or any(isinstance(n, bool) or not isinstance(n, int) or n < 1 for n in cfg.n_list):
            raise ConfigError("n_list must be a nonempty list of integers >= 1", "n_list")
    if cfg.weighting not in WEIGHTINGS:
        raise ConfigError(f"weighting must be one of {WEIGHTINGS}", "weighting")
    if not (math.isfinite(cfg.convention_factor) and cfg.convention_factor > 0.0):
        raise ConfigError("convention_factor must be positive", "convention_factor")
    if cfg.mc_samples < energy.MIN_MC_SAMPLES:
        raise ConfigError(f"mc_samples must be >= {energy.MIN_MC_SAMPLES}", "mc_samples")
    if cfg.output_format not in FORMATS:
        raise ConfigError(f"output_format must be one of {FORMATS}", "output_format")


# --- parsing -----------------------------------------------------------------

_UNITS: dict[str, tuple[float, Dimension]] = {
    "kg": (1.0, MASS),
    "m": (1.0, LENGTH),
    "s": (1.0, TIME),
    "C": (1.0, CHARGE),
    "e": (CONSTANTS.elementary_charge.value, CHARGE),
    "J": (1.0, ENERGY),
    "eV": (CONSTANTS.electronvolt.value, ENERGY),
    "N": (1.0, FORCE),
}

# key -> (canonical field, expected dimension, scale applied to a bare number)
_UNIT_KEYS: dict[str, tuple[str, Dimension, Optional[float]]] = {
    "mass_kg": ("mass_kg", MASS, 1.0),
    "mass": ("mass_kg", MASS, None),
    "size_m": ("size_m", LENGTH, 1.0),
    "size": ("size_m", LENGTH, None),
    "charge_C": ("charge_C", CHARGE, 1.0),
    "charge_e": ("charge_C", CHARGE, CONSTANTS.elementary_charge.value),
    "charge": ("charge_C", CHARGE, None),
    "separations_m": ("separations_m", LENGTH, 1.0),
    "separations": ("separations_m", LENGTH, None),
}
_PLAIN_KEYS = {"name", "preset", "shape", "n_list", "weighting", "convention_factor",
               "mc_samples", "seed", "output_format"}
_ALLOWED = set(_UNIT_KEYS) | _PLAIN_KEYS | {"overrides"}
_OVERRIDABLE = set(_UNIT_KEYS) | {"shape", "n_list"}


def parse_quantity(text: Any, dim: Dimension, key: str, line: int | None) -> float:
    """Parse ``"<number> <unit>"`` into an SI float of dimension ``dim``."""
    if not isinstance(text, str):
        raise ConfigError("missing unit; write e.g. '1.0e-23 kg' or use a unit-suffixed key", key, line)
    parts = text.split()
    if len(parts) == 1:
        raise ConfigError(f"missing unit in {text!r}", key, line)
    if len(parts) != 2:
        raise ConfigError(f"expected '<number> <unit>', got {text!r}", key, line)
    number, unit = parts
    if unit not in _UNITS:
        raise ConfigError(f"unknown unit {unit!r}; allowed: {sorted(_UNITS)}", key, line)
    scale, unit_dim = _UNITS[unit]
    if unit_dim != dim:
        raise ConfigError(f"unit {unit!r} is not a {dim.symbol()} unit", key, line)
    return _number(number, key, line) * scale


def _number(value: Any, key: str, line: int | None) -> float:
    if isinstance(value, bool):
        raise ConfigError("expected a number", key, line)
    try:
        out = float(value)  # YAML 1.1 reads "1e-23" as a string
    except (TypeError, ValueError):
        raise ConfigError(f"expected a number, got {value!r}", key, line) from None
    if not math.isfinite(out):
        raise ConfigError("value must be finite", key, line)
    return out


def _integer(value: Any, key: str, line: int | None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"expected an integer, got {value!r}", key, line)
    return value


def _line_map(node: yaml.Node | None, prefix: str = "") -> dict[str, int]:
    lines: dict[str, int] = {}
    if isinstance(node, yaml.MappingNode):
        for key_node, value_node in node.value:
            key = f"{prefix}{key_node.value}"
            lines[key] = key_node.start_mark.line + 1
            lines.update(_line_map(value_node, key + "."))
    return lines


def _convert_unit_key(key: str, value: Any, line: int | None) -> tuple[str, Any]:
    target, dim, scale = _UNIT_KEYS[key]
    if target == "separations_m":
        items = value if isinstance(value, list) else [value]
        if scale is None:
            return target, tuple(parse_quantity(v, dim, key, line) for v in items)
        return target, tuple(_number(v, key, line) * scale for v in items)
    if value is None and target == "charge_C":
        return target, None
    if scale is None:
        return target, parse_quantity(value, dim, key, line)
    return target, _number(value, key, line) * scale


def _physical_fields(data: dict, lines: dict[str, int], prefix: str = "") -> dict[str, Any]:
    out: dict[str, Any] = {}
    seen: dict[str, str] = {}
    for key, value in data.items():
        line = lines.get(prefix + key)
        if key in _UNIT_KEYS:
            target, converted = _convert_unit_key(key, value, line)
        elif key == "shape":
            target, converted = "shape", value
        elif key == "n_list":
            items = value if isinstance(value, list) else [value]
            target, converted = "n_list", None if value is None else tuple(
                _integer(v, key, line) for v in items
            )
        else:
            continue
        if target in seen:
            raise ConfigError(f"duplicates field '{seen[target]}'", prefix + key, line)
        seen[target] = key
        out[target] = converted
    return out


def parse_scenario(text: str) -> ScenarioConfig:
    try:
        root = yaml.compose(text, Loader=yaml.SafeLoader)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(f"malformed YAML: {exc}", line=None if mark is None else mark.line + 1) from None
    if data is None:
        raise ConfigError("name required", "name")
    if not isinstance(data, dict):
        raise ConfigError("scenario document must be a mapping")
    lines = _line_map(root)

    for key in data:
        if key not in _ALLOWED:
            raise ConfigError("unknown key", str(key), lines.get(str(key)))

    preset = data.get("preset")
    overrides = data.get("overrides") or {}
    if not isinstance(overrides, dict):
        raise ConfigError("overrides must be a mapping", "overrides", lines.get("overrides"))
    for key in overrides:
        if key not in _OVERRIDABLE:
            raise ConfigError("not an overridable field", f"overrides.{key}", lines.get(f"overrides.{key}"))
    if "overrides" in data and preset is None:
        raise ConfigError("overrides require a preset", "overrides", lines.get("overrides"))

    fields: dict[str, Any] = {}
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}", "preset", lines.get("preset"))
        for key in data:
            if key in _OVERRIDABLE:
                raise ConfigError(
                    "conflicts with field 'preset'; put preset changes under 'overrides'",
                    key,
                    lines.get(key),
                )
        fields.update({k: v for k, v in PRESETS[preset].items() if k != "description"})
        fields.update(_physical_fields(overrides, lines, "overrides."))
    else:
        fields.update(_physical_fields(data, lines))
        for required in ("shape", "mass_kg", "separations_m"):
            if required not in fields:
                raise ConfigError("field required for a custom scenario", required)

    name = data.get("name", preset)
    if name is None:
        raise ConfigError("name required", "name")
    fields["name"] = str(name)
    fields["preset"] = preset

    if "weighting" in data:
        fields["weighting"] = data["weighting"]
    if "convention_factor" in data:
        fields["convention_factor"] = _number(data["convention_factor"], "convention_factor", lines.get("convention_factor"))
    for key in ("mc_samples", "seed"):
        if key in data:
            fields[key] = _integer(data[key], key, lines.get(key))
    if "output_format" in data:
        fields["output_format"] = data["output_format"]

    try:
        return ScenarioConfig(**fields)
    except ConfigError as exc:
        if exc.line is None and exc.field is not None:
            line = lines.get(exc.field) or lines.get(f"overrides.{exc.field}")
            raise ConfigError(str(exc).rsplit(" (", 1)[0], exc.field, line) from None
        raise


def preset_config(name: str, **overrides) -> ScenarioConfig:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}", "preset")
    fields = {k: v for k, v in PRESETS[name].items() if k != "description"}
    fields.update(name=name, preset=name)
    fields.update(overrides)
    return ScenarioConfig(**fields)


def config_to_yaml(cfg: ScenarioConfig) -> str:
    """Canonical YAML for ``cfg``; :func:`parse_scenario` inverts it exactly."""
    physical = {
        "shape": cfg.shape,
        "mass_kg": cfg.mass_kg,
        "size_m": cfg.size_m,
        "charge_C": cfg.charge_C,
        "separations_m": list(cfg.separations_m),
        "n_list": None if cfg.n_list is None else list(cfg.n_list),
    }
    physical = {k: v for k, v in physical.items() if v is not None or k == "charge_C" and cfg.preset}
    doc: dict[str, Any] = {"name": cfg.name}
    if cfg.preset is not None:
        doc["preset"] = cfg.preset
        doc["overrides"] = physical
    else:
        doc.update(physical)
    doc.update(
        weighting=cfg.weighting,
        convention_factor=cfg.convention_factor,
        mc_samples=cfg.mc_samples,
        seed=cfg.seed,
        output_format=cfg.output_format,
    )
    return yaml.safe_dump(doc, sort_keys=False)


# --- running -----------------------------------------------------------------


@dataclass
class EnergyReport:
    scenario: str
    kind: str  # "separation" or "n_component"
    columns: list[tuple[str, str]]
    rows: list[dict[str, Any]]
    metadata: dict[str, Any] = field(default_factory=dict)


SEPARATION_COLUMNS = [
    ("d_m", "m"),
    ("dE_grav_J", "J"),
    ("dE_grav_eV", "eV"),
    ("dE_grav_se_J", "J"),
    ("dE_em_J", "J"),
    ("ratio_em_grav", "1"),
    ("tau_s", "s"),
    ("F_grav_N", "N"),
    ("F_em_N", "N"),
    ("accel_m_s2", "m/s^2"),
]

N_COMPONENT_COLUMNS = [
    ("n", "1"),
    ("r_m", "m"),
    ("a_m", "m"),
    ("bound_full_J", "J"),
    ("ratio_full", "1"),
    ("bound_born_J", "J"),
    ("ratio_born", "1"),
]

STABLE = "stable"


def _metadata(cfg: ScenarioConfig, method: str) -> dict[str, Any]:
    return {
        "schema_version": SCHEMA_VERSION,
        "preset": cfg.preset,
        "shape": cfg.shape,
        "convention_factor": cfg.convention_factor,
        "weighting_mode": cfg.weighting,
        "method": method,
        "mc_samples": cfg.mc_samples,
        "seed": cfg.seed,
        "constants": CONSTANTS.version,
        "warnings": [],
    }


def _separation_rows(cfg: ScenarioConfig, oracle: bool) -> EnergyReport:
    base = cfg.model()
    weighting = Weighting(cfg.weighting)
    method = Method.MONTE_CARLO if oracle else None
    rows = []
    used_mc = oracle
    caught: list[str] = []
    for d in cfg.separations_m:
        spec = SuperpositionSpec.two_branch(base, d)
        d_q = Quantity(d, LENGTH)
        with warnings.catch_warnings(record=True) as log:
            warnings.simplefilter("always")
            grav = energy.delta_e(
                spec, Interaction.GRAVITY, cfg.convention_factor, weighting,
                method=method, samples=cfg.mc_samples, seed=cfg.seed,
            )
            em = None
            if cfg.charge_C is not None:
                em = energy.delta_e(
                    spec, Interaction.ELECTROMAGNETIC, cfg.convention_factor, weighting,
                    method=method, samples=cfg.mc_samples, seed=cfg.seed,
                )
            f_grav = energy.mutual_force(base, d_q, Interaction.GRAVITY)
            f_em = None if em is None else energy.mutual_force(base, d_q, Interaction.ELECTROMAGNETIC)
        caught.extend(f"d={d!r} m: {w.message}" for w in log)
        used_mc = used_mc or grav.method is Method.MONTE_CARLO
        estimate = collapse.collapse_time(grav)
        rows.append({
            "d_m": d,
            "dE_grav_J": grav.value.value,
            "dE_grav_eV": convert_to_eV(grav.value),
            "dE_grav_se_J": None if grav.std_error is None else grav.std_error.value,
            "dE_em_J": None if em is None else em.value.value,
            "ratio_em_grav": None if em is None else energy.coupling_ratio(base.total_charge, base.total_mass),
            "tau_s": STABLE if estimate.stable else estimate.tau.value,
            "F_grav_N": f_grav.value,
            "F_em_N": None if f_em is None else f_em.value,
            "accel_m_s2": None if f_em is None else (f_em / base.total_mass).value,
        })
    meta = _metadata(cfg, Method.MONTE_CARLO.value if used_mc else Method.CLOSED_FORM.value)
    meta["warnings"] = caught
    if base.is_extended:
        point = energy.point_estimate(base.total_mass, base.size)
        meta["point_estimate_J"] = point.value
        meta["point_estimate_eV"] = convert_to_eV(point)
    if cfg.preset == "penrose_micron":
        meta["tau_ratio_size_x10"] = collapse.size_scaling_tau(
            10.0, base.total_mass / ((4.0 / 3.0) * math.pi * base.size**3), base.size
        )
    return EnergyReport(cfg.name, "separation", list(SEPARATION_COLUMNS), rows, meta)


def _n_component_rows(cfg: ScenarioConfig, oracle: bool) -> EnergyReport:
    if cfg.size_m is None:
        raise ConfigError("the N-component bound needs a particle size", "size_m")
    m = Quantity(cfg.mass_kg, MASS)
    a = Quantity(cfg.size_m, LENGTH)
    rows = []
    for r_val in cfg.separations_m:
        r = Quantity(r_val, LENGTH)
        for n in cfg.n_list:
            full = collapse.n_component_bound(n, m, r, a, collapse.MassConvention.FULL_MASS_PER_COMPONENT)
            born = collapse.n_component_bound(n, m, r, a, collapse.MassConvention.BORN_WEIGHTED)
            rows.append({
                "n": n,
                "r_m": r_val,
                "a_m": cfg.size_m,
                "bound_full_J": full.bound.value,
                "ratio_full": full.violation_ratio,
                "bound_born_J": born.bound.value,
                "ratio_born": born.violation_ratio,
            })
    meta = _metadata(cfg, Method.CLOSED_FORM.value)
    meta["coincident_self_energy_J"] = (0.6 * CONSTANTS.G * m**2 / a).value
    if oracle:
        # the coincident self-energy is the only integral in the bound
        value, se = energy.self_energy(
            cfg.model(), method=Method.MONTE_CARLO, samples=cfg.mc_samples, seed=cfg.seed
        )
        meta["method"] = Method.MONTE_CARLO.value
        meta["coincident_self_energy_mc_J"] = value.value
        meta["coincident_self_energy_mc_se_J"] = se.value
    return EnergyReport(cfg.name, "n_component", list(N_COMPONENT_COLUMNS), rows, meta)


def run_scenario(cfg: ScenarioConfig, *, oracle: bool = False) -> EnergyReport:
    """Compute the report for ``cfg``.

    ``oracle=True`` forces the Monte Carlo path for every integral so the
    output can be diffed against the closed-form run.
    """
    try:
        if cfg.n_list is not None:
            return _n_component_rows(cfg, oracle)
        return _separation_rows(cfg, oracle)
    except ConfigError:
        raise
    except (ValueError, ArithmeticError) as exc:
        raise ComputationError(f"scenario {cfg.name!r}: {exc}") from exc


# --- emission ----------------------------------------------------------------


def _fmt_number(x: float) -> str:
    return f"{x:.8e}"


def _to_json(obj: Any, indent: int = 0) -> str:
    pad = "  " * (indent + 1)
    end = "  " * indent
    if obj is None or isinstance(obj, (bool, str)):
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        if not math.isfinite(obj):
            raise ValueError("non-finite number in report")
        return _fmt_number(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_to_json(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [f"{pad}{_to_json(v, indent + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def report_to_dict(report: EnergyReport) -> dict[str, Any]:
    return {
        "schema_version": SCHEMA_VERSION,
        "scenario": report.scenario,
        "kind": report.kind,
        "columns": [{"name": n, "unit": u} for n, u in report.columns],
        "rows": report.rows,
        "metadata": report.metadata,
    }


def _cell(value: Any, sig: int) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.{sig - 1}e}"
    return str(value)


def emit_report(report: EnergyReport, fmt: str = "table") -> bytes:
    if fmt == "json":
        return (_to_json(report_to_dict(report)) + "\n").encode()
    names = [n for n, _ in report.columns]
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(names)
        for row in report.rows:
            writer.writerow([_cell(row[n], 9) for n in names])
        return buf.getvalue().encode()
    if fmt != "table":
        raise ValueError(f"unknown format {fmt!r}")
    header = [f"{n} [{u}]" for n, u in report.columns]
    body = [[_cell(row[n], 4) or "-" for n in names] for row in report.rows]
    widths = [max(len(h), *(len(r[i]) for r in body)) for i, h in enumerate(header)]
    lines = [f"scenario: {report.scenario}"]
    lines.append("  ".join(h.rjust(w) for h, w in zip(header, widths)))
    lines.append("  ".join("-" * w for w in widths))
    lines.extend("  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in body)
    lines.append("")
    for key, value in report.metadata.items():
        if key == "warnings":
            for w in value:
                lines.append(f"# warning: {w}")
            continue
        shown = _cell(value, 6) if isinstance(value, float) else value
        lines.append(f"# {key}: {shown}")
    return ("\n".join(lines) + "\n").encode()


def with_overrides(cfg: ScenarioConfig, **changes) -> ScenarioConfig:
    changes = {k: v for k, v in changes.items() if v is not None}
    return dataclasses.replace(cfg, **changes) if changes else cfg

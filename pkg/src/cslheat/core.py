"""Physical constants, model parameters, and experiment specification files.

Everything is SI internally and in the JSON spec files: lengths in meters,
densities in kg/m^3, rates in 1/s, temperatures in K, powers in W.

JSON spec schema (version 1), top-level keys:

    version     int, must be 1
    csl         {"lambda": collapse rate [1/s], "r_c": correlation length [m]}
    mass_model  {"type": "point" | "cuboid" | "sphere" | "cylinder"
                         | "layered_stack", ...}  (see below)
    thermal     optional {"gamma_th": [1/s], "temperature": [K]}
    quadrature  optional {"rel_tol", "u_max", "mc_samples", "rng_seed"};
                defaults rel_tol=1e-9, u_max=8, mc_samples=200000, rng_seed=0
    task        optional free-form object with task parameters for the CLI

Mass-model variants:

    point          {"mass", "position": [x,y,z]?}
    cuboid         {"lx", "ly", "lz", "material"}
    sphere         {"radius", "material"}
    cylinder       {"radius", "height", "material"}   (axis along z)
    layered_stack  {"lx", "ly", "layers": [{"material", "thickness"}, ...]}

plus an optional "offset": [x,y,z] rigid translation on any variant.
A material is either an inline {"name", "density"} object or the name of
a built-in material (see BUILTIN_MATERIALS).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, replace
from pathlib import Path

from .geometry import (
    Cuboid,
    Cylinder,
    Layer,
    LayeredStack,
    MassModel,
    Material,
    PointMass,
    Sphere,
    total_mass,
)

CONSTANTS_VERSION = "codata2018"


@dataclass(frozen=True)
class PhysicalConstants:
    """CODATA-2018 constants; fixed, no runtime override.

    The nucleon mass reference is the proton mass.  (Proton vs neutron
    differs by 0.14%, which matters only for closed-form regression
    values; those are stated against the proton choice.)
    """

    hbar: float = 1.054571817e-34  # J*s
    m_nucleon: float = 1.67262192369e-27  # kg, proton
    k_boltzmann: float = 1.380649e-23  # J/K


CONSTANTS = PhysicalConstants()

BUILTIN_MATERIALS = {
    "silicon": 2329.0,
    "silica": 2200.0,
    "sapphire": 3980.0,
    "aluminum": 2700.0,
    "copper": 8960.0,
    "niobium": 8570.0,
    "tungsten": 19300.0,
    "gold": 19320.0,
}

SPEC_VERSION = 1

_QUAD_DEFAULTS = {"rel_tol": 1e-9, "u_max": 8.0, "mc_samples": 200_000, "rng_seed": 0}


@dataclass(frozen=True)
class CslParams:
    """Collapse-model free parameters: rate lambda [1/s], length r_c [m]."""

    lambda_rate: float
    r_c: float


@dataclass(frozen=True)
class QuadratureSpec:
    """Numerical controls shared by the heating integrals.

    rel_tol     target relative accuracy of deterministic quadrature
    u_max       dimensionless cutoff for |k| * r_c (Gaussian tail
                exp(-u_max^2) is 1.6e-28 at the default 8)
    mc_samples  Monte-Carlo sample count
    rng_seed    seed of the counter-based (Philox) generator
    """

    rel_tol: float = 1e-9
    u_max: float = 8.0
    mc_samples: int = 200_000
    rng_seed: int = 0


@dataclass(frozen=True)
class ThermalModel:
    """Environmental heating channel: damping rate [1/s] and temperature [K]."""

    gamma_th: float
    temperature: float


@dataclass(frozen=True)
class ExperimentSpec:
    version: int
    csl: CslParams
    mass_model: MassModel
    quadrature: QuadratureSpec
    thermal: ThermalModel | None = None
    task: dict | None = None


class ParseError(ValueError):
    """Malformed spec document; carries the position when known."""


class ValidationError(ValueError):
    """A spec value violates an invariant; `field` names the offender."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


@dataclass(frozen=True)
class Violation:
    field: str
    message: str


def _require_keys(obj: dict, allowed: set[str], required: set[str], path: str):
    for key in obj:
        if key not in allowed:
            raise ValidationError(f"{path}.{key}", "unknown key")
    for key in required:
        if key not in obj:
            raise ValidationError(f"{path}.{key}", "missing required key")


def _number(obj: dict, key: str, path: str) -> float:
    val = obj[key]
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ValidationError(f"{path}.{key}", f"expected a number, got {val!r}")
    return float(val)


def _vector3(obj: dict, key: str, path: str) -> tuple[float, float, float]:
    val = obj[key]
    if not isinstance(val, list) or len(val) != 3:
        raise ValidationError(f"{path}.{key}", "expected a 3-element array")
    return tuple(float(v) for v in val)


def parse_material(val, path: str = "material") -> Material:
    """Material from an inline {name, density} object or a built-in name."""
    if isinstance(val, str):
        if val not in BUILTIN_MATERIALS:
            raise ValidationError(path, f"unknown material {val!r}")
        return Material(val, BUILTIN_MATERIALS[val])
    if isinstance(val, dict):
        _require_keys(val, {"name", "density"}, {"name", "density"}, path)
        return Material(str(val["name"]), _number(val, "density", path))
    raise ValidationError(path, "material must be a name or a {name, density} object")


def _parse_model(obj, path: str = "mass_model") -> MassModel:
    if not isinstance(obj, dict):
        raise ValidationError(path, "expected an object")
    kind = obj.get("type")
    common = {"type", "offset"}
    offset = _vector3(obj, "offset", path) if "offset" in obj else (0.0, 0.0, 0.0)
    if kind == "point":
        _require_keys(obj, common | {"mass", "position"}, {"mass"}, path)
        pos = _vector3(obj, "position", path) if "position" in obj else (0.0, 0.0, 0.0)
        return PointMass(_number(obj, "mass", path), pos, offset)
    if kind == "cuboid":
        _require_keys(obj, common | {"lx", "ly", "lz", "material"},
                      {"lx", "ly", "lz", "material"}, path)
        return Cuboid(
            _number(obj, "lx", path),
            _number(obj, "ly", path),
            _number(obj, "lz", path),
            parse_material(obj["material"], f"{path}.material"),
            offset,
        )
    if kind == "sphere":
        _require_keys(obj, common | {"radius", "material"}, {"radius", "material"}, path)
        return Sphere(
            _number(obj, "radius", path),
            parse_material(obj["material"], f"{path}.material"),
            offset,
        )
    if kind == "cylinder":
        _require_keys(obj, common | {"radius", "height", "material"},
                      {"radius", "height", "material"}, path)
        return Cylinder(
            _number(obj, "radius", path),
            _number(obj, "height", path),
            parse_material(obj["material"], f"{path}.material"),
            offset,
        )
    if kind == "layered_stack":
        _require_keys(obj, common | {"lx", "ly", "layers"}, {"lx", "ly", "layers"}, path)
        raw_layers = obj["layers"]
        if not isinstance(raw_layers, list) or not raw_layers:
            raise ValidationError(f"{path}.layers", "expected a non-empty array")
        layers = []
        for i, entry in enumerate(raw_layers):
            lpath = f"{path}.layers[{i}]"
            if not isinstance(entry, dict):
                raise ValidationError(lpath, "expected an object")
            _require_keys(entry, {"material", "thickness"}, {"material", "thickness"}, lpath)
            layers.append(
                Layer(
                    parse_material(entry["material"], f"{lpath}.material"),
                    _number(entry, "thickness", lpath),
                )
            )
        return LayeredStack(
            _number(obj, "lx", path), _number(obj, "ly", path), tuple(layers), offset
        )
    raise ValidationError(f"{path}.type", f"unknown mass model type {kind!r}")


def load_spec(path) -> ExperimentSpec:
    """Load and fully validate a JSON experiment spec.

    Defaults are filled in (and therefore appear when the spec is
    serialized again).  Raises ParseError on malformed JSON and
    ValidationError naming the offending field on invariant violations.
    """
    text = Path(path).read_text()
    return loads_spec(text)


def loads_spec(text: str) -> ExperimentSpec:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(
            f"malformed spec document at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    if not isinstance(doc, dict):
        raise ParseError("spec document must be a JSON object")

    _require_keys(
        doc,
        {"version", "csl", "mass_model", "thermal", "quadrature", "task"},
        {"version", "csl", "mass_model"},
        "spec",
    )
    version = doc["version"]
    if version != SPEC_VERSION:
        raise ValidationError("version", f"unsupported spec version {version!r}")

    csl_obj = doc["csl"]
    if not isinstance(csl_obj, dict):
        raise ValidationError("csl", "expected an object")
    _require_keys(csl_obj, {"lambda", "r_c"}, {"lambda", "r_c"}, "csl")
    csl = CslParams(_number(csl_obj, "lambda", "csl"), _number(csl_obj, "r_c", "csl"))

    model = _parse_model(doc["mass_model"])

    thermal = None
    if doc.get("thermal") is not None:
        tobj = doc["thermal"]
        if not isinstance(tobj, dict):
            raise ValidationError("thermal", "expected an object")
        _require_keys(tobj, {"gamma_th", "temperature"}, {"gamma_th", "temperature"},
                      "thermal")
        thermal = ThermalModel(
            _number(tobj, "gamma_th", "thermal"),
            _number(tobj, "temperature", "thermal"),
        )

    qobj = doc.get("quadrature") or {}
    if not isinstance(qobj, dict):
        raise ValidationError("quadrature", "expected an object")
    _require_keys(qobj, set(_QUAD_DEFAULTS), set(), "quadrature")
    merged = {**_QUAD_DEFAULTS, **qobj}
    quadrature = QuadratureSpec(
        rel_tol=float(merged["rel_tol"]),
        u_max=float(merged["u_max"]),
        mc_samples=int(merged["mc_samples"]),
        rng_seed=int(merged["rng_seed"]),
    )

    task = doc.get("task")
    if task is not None and not isinstance(task, dict):
        raise ValidationError("task", "expected an object")

    spec = ExperimentSpec(
        version=SPEC_VERSION,
        csl=csl,
        mass_model=model,
        quadrature=quadrature,
        thermal=thermal,
        task=task,
    )
    violations = validate_spec(spec)
    if violations:
        first = violations[0]
        raise ValidationError(first.field, first.message)
    return spec


def _validate_model(model: MassModel, out: list[Violation], path: str = "mass_model"):
    def positive(value, field):
        if not (value > 0):
            out.append(Violation(f"{path}.{field}", f"must be > 0, got {value!r}"))

    if isinstance(model, PointMass):
        positive(model.mass, "mass")
    elif isinstance(model, Cuboid):
        positive(model.lx, "lx")
        positive(model.ly, "ly")
        positive(model.lz, "lz")
        positive(model.material.density, "material.density")
    elif isinstance(model, Sphere):
        positive(model.radius, "radius")
        positive(model.material.density, "material.density")
    elif isinstance(model, Cylinder):
        positive(model.radius, "radius")
        positive(model.height, "height")
        positive(model.material.density, "material.density")
    elif isinstance(model, LayeredStack):
        positive(model.lx, "lx")
        positive(model.ly, "ly")
        if not model.layers:
            out.append(Violation(f"{path}.layers", "must have at least one layer"))
        for i, layer in enumerate(model.layers):
            if not (layer.thickness > 0):
                out.append(
                    Violation(
                        f"{path}.layers[{i}].thickness",
                        f"must be > 0, got {layer.thickness!r}",
                    )
                )
            if not (layer.material.density > 0):
                out.append(
                    Violation(
                        f"{path}.layers[{i}].material.density",
                        f"must be > 0, got {layer.material.density!r}",
                    )
                )
    else:
        out.append(Violation(path, f"unknown model type {type(model).__name__}"))
        return
    try:
        if not (total_mass(model) > 0):
            out.append(Violation(path, "total mass must be > 0"))
    except (TypeError, ValueError):
        out.append(Violation(path, "total mass is not computable"))


def validate_spec(spec: ExperimentSpec) -> list[Violation]:
    """All invariant violations in the spec; empty iff the spec is valid.

    Violations are data, not exceptions: every specs produced by load_spec
    validates to [].
    """
    out: list[Violation] = []
    if not (spec.csl.lambda_rate >= 0):
        out.append(Violation("csl.lambda_rate", "must be >= 0"))
    if not (spec.csl.r_c > 0):
        out.append(Violation("csl.r_c", "must be > 0"))
    _validate_model(spec.mass_model, out)
    if spec.thermal is not None:
        if not (spec.thermal.gamma_th >= 0):
            out.append(Violation("thermal.gamma_th", "must be >= 0"))
        if not (spec.thermal.temperature >= 0):
            out.append(Violation("thermal.temperature", "must be >= 0"))
    q = spec.quadrature
    if not (0 < q.rel_tol < 1e-2):
        out.append(Violation("quadrature.rel_tol", "must be in (0, 1e-2)"))
    if not (q.u_max >= 6):
        out.append(Violation("quadrature.u_max", "must be >= 6"))
    if not (q.mc_samples >= 1000):
        out.append(Violation("quadrature.mc_samples", "must be >= 1000"))
    return out


def _material_to_dict(material: Material) -> dict:
    return {"name": material.name, "density": material.density}


def _model_to_dict(model: MassModel) -> dict:
    if isinstance(model, PointMass):
        out = {"type": "point", "mass": model.mass, "position": list(model.position)}
    elif isinstance(model, Cuboid):
        out = {
            "type": "cuboid",
            "lx": model.lx,
            "ly": model.ly,
            "lz": model.lz,
            "material": _material_to_dict(model.material),
        }
    elif isinstance(model, Sphere):
        out = {
            "type": "sphere",
            "radius": model.radius,
            "material": _material_to_dict(model.material),
        }
    elif isinstance(model, Cylinder):
        out = {
            "type": "cylinder",
            "radius": model.radius,
            "height": model.height,
            "material": _material_to_dict(model.material),
        }
    elif isinstance(model, LayeredStack):
        out = {
            "type": "layered_stack",
            "lx": model.lx,
            "ly": model.ly,
            "layers": [
                {"material": _material_to_dict(l.material), "thickness": l.thickness}
                for l in model.layers
            ],
        }
    else:
        raise TypeError(f"not a mass model: {model!r}")
    out["offset"] = list(model.offset)
    return out


def spec_to_dict(spec: ExperimentSpec) -> dict:
    out = {
        "version": spec.version,
        "csl": {"lambda": spec.csl.lambda_rate, "r_c": spec.csl.r_c},
        "mass_model": _model_to_dict(spec.mass_model),
        "quadrature": {
            "rel_tol": spec.quadrature.rel_tol,
            "u_max": spec.quadrature.u_max,
            "mc_samples": spec.quadrature.mc_samples,
            "rng_seed": spec.quadrature.rng_seed,
        },
    }
    if spec.thermal is not None:
        out["thermal"] = {
            "gamma_th": spec.thermal.gamma_th,
            "temperature": spec.thermal.temperature,
        }
    if spec.task is not None:
        out["task"] = spec.task
    return out


def dumps_spec(spec: ExperimentSpec) -> str:
    return json.dumps(spec_to_dict(spec), indent=2, sort_keys=True)


def canonical_spec_json(spec: ExperimentSpec) -> str:
    """Canonical serialization: sorted keys, no whitespace, exact floats."""
    return json.dumps(spec_to_dict(spec), sort_keys=True, separators=(",", ":"))


def spec_hash(spec: ExperimentSpec) -> str:
    """SHA-256 of the canonical serialization, for result traceability."""
    return hashlib.sha256(canonical_spec_json(spec).encode()).hexdigest()


def with_seed(spec: ExperimentSpec, seed: int) -> ExperimentSpec:
    """Copy of the spec with the Monte-Carlo seed replaced."""
    return replace(spec, quadrature=replace(spec.quadrature, rng_seed=int(seed)))

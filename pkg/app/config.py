"""
Configuration settings for adslens runs.

Static defaults live in module-level tables; a run is described by a TOML
file parsed into a RunConfig.
"""

import logging
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import asdict, dataclass, field, replace
from typing import Any, Dict, Optional, Tuple

from src.initial_data import FAMILY_REGISTRY
from src.utils import ConfigError

logger = logging.getLogger(__name__)


# Pipelines in execution order
PIPELINES = (
    "clifford",
    "killing",
    "weitzenbock",
    "decay",
    "energy-conditions",
    "mass",
    "q-matrices",
    "rigidity",
)

# Default parameters
DEFAULT_PARAMS = {
    "radii": (3.0, 4.0, 5.0, 6.0),
    "n_theta": 24,
    "n_psi": 48,
    "fd_step": 1e-4,
    "weitzenbock_steps": (1e-2, 5e-3),
    "seed": 0,
    "threads": 1,
    "killing_points": 50,
    "weitzenbock_fields": 3,
    "sample_points": 20,
    "quadratic_form_samples": 100,
}

DEFAULT_TOLERANCES = {
    "clifford": 1e-15,
    "killing": 1e-8,
    "gram_determinant": 1e-6,
    "weitzenbock_floor": 1e-7,
    "weitzenbock_ratio_low": 3.5,
    "weitzenbock_ratio_high": 4.5,
    "decay_growth": 0.1,
    "constraint": 1e-7,
    "identity": 1e-12,
    "rigidity": 1e-9,
    "extrapolation_rtol": 1e-3,
    "extrapolation_atol": 1e-9,
    "positivity_atol": 1e-12,
    "positivity_rtol": 1e-10,
    "bookkeeping": 1e-10,
    "fd_consistency": 1e-6,
}

# Family parameter defaults, taken from the registry schemas
FAMILY_DEFAULTS = {
    name: {key: schema["default"] for key, schema in entry["parameters"].items()}
    for name, entry in FAMILY_REGISTRY.items()
}

_SECTIONS = {
    "parameters": None,
    "quadrature": ("radii", "n_theta", "n_psi"),
    "steps": ("fd_step", "weitzenbock_steps"),
    "tolerances": tuple(DEFAULT_TOLERANCES),
    "pipelines": ("selected",),
    "output": ("report", "csv"),
}
_TOP_LEVEL = ("family", "kappa", "tau", "seed", "threads")


@dataclass(frozen=True)
class RunConfig:
    """A validated run description; radii are in units of 1/kappa."""
    family: str
    kappa: float
    parameters: Dict[str, Any] = field(default_factory=dict)
    tau: Optional[float] = None
    radii: Tuple[float, ...] = DEFAULT_PARAMS["radii"]
    n_theta: int = DEFAULT_PARAMS["n_theta"]
    n_psi: int = DEFAULT_PARAMS["n_psi"]
    fd_step: float = DEFAULT_PARAMS["fd_step"]
    weitzenbock_steps: Tuple[float, ...] = DEFAULT_PARAMS["weitzenbock_steps"]
    tolerances: Dict[str, float] = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    pipelines: Tuple[str, ...] = PIPELINES
    report: Optional[str] = None
    csv: Optional[str] = None
    seed: int = DEFAULT_PARAMS["seed"]
    threads: int = DEFAULT_PARAMS["threads"]

    @property
    def scaled_radii(self) -> Tuple[float, ...]:
        return tuple(r / self.kappa for r in self.radii)

    def family_parameters(self) -> Dict[str, Any]:
        params = dict(self.parameters)
        if self.tau is not None:
            params["tau"] = self.tau
        return params

    def to_dict(self) -> Dict[str, Any]:
        out = asdict(self)
        out["radii"] = list(self.radii)
        out["weitzenbock_steps"] = list(self.weitzenbock_steps)
        out["pipelines"] = list(self.pipelines)
        return out


def get_tolerance(config: RunConfig, name: str) -> float:
    """Tolerance override from the config, else the default."""
    return float(config.tolerances.get(name, DEFAULT_TOLERANCES[name]))


def get_family_defaults(name: str) -> Dict[str, Any]:
    """Default parameter map of a registered family."""
    return dict(FAMILY_DEFAULTS[name])


def _number(key: str, value: Any, positive: bool = True) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"'{key}' must be a number, got {value!r}")
    if positive and value <= 0:
        raise ConfigError(f"'{key}' must be positive, got {value!r}")
    return float(value)


def _integer(key: str, value: Any, minimum: int) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"'{key}' must be an integer, got {value!r}")
    if value < minimum:
        raise ConfigError(f"'{key}' must be at least {minimum}, got {value!r}")
    return value


def _number_list(key: str, value: Any) -> Tuple[float, ...]:
    if not isinstance(value, list) or not value:
        raise ConfigError(f"'{key}' must be a non-empty array")
    return tuple(_number(key, v) for v in value)


def _check_keys(section: str, table: Dict[str, Any], allowed) -> None:
    for key in table:
        if key not in allowed:
            dotted = f"{section}.{key}" if section else key
            raise ConfigError(f"Unknown key '{dotted}'")


def parse_config(text: str) -> RunConfig:
    """
    Parse and validate a TOML run description.

    Raises:
        ConfigError: syntax error (with line and column), unknown key or invalid value
    """
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"Config parse error: {exc}") from exc

    _check_keys("", raw, _TOP_LEVEL + tuple(_SECTIONS))
    for section, allowed in _SECTIONS.items():
        if section in raw:
            if not isinstance(raw[section], dict):
                raise ConfigError(f"'{section}' must be a table")
            if allowed is not None:
                _check_keys(section, raw[section], allowed)

    if "family" not in raw:
        raise ConfigError("Missing required key 'family'")
    if "kappa" not in raw:
        raise ConfigError("Missing required key 'kappa'")
    family = raw["family"]
    if family not in FAMILY_REGISTRY:
        raise ConfigError(f"Unknown family '{family}'; registered families: {sorted(FAMILY_REGISTRY)}")
    kappa = _number("kappa", raw["kappa"])

    parameters = dict(raw.get("parameters", {}))
    schema = FAMILY_REGISTRY[family]["parameters"]
    _check_keys("parameters", parameters, schema)
    tau = raw.get("tau")
    if tau is not None:
        tau = _number("tau", tau)
        if "tau" in parameters:
            raise ConfigError("'tau' given both at top level and in 'parameters'")
        if tau <= 1.5:
            raise ConfigError(f"'tau' must exceed 3/2, got {tau}")

    quadrature = raw.get("quadrature", {})
    radii = _number_list("quadrature.radii", quadrature.get("radii", list(DEFAULT_PARAMS["radii"])))
    if any(b <= a for a, b in zip(radii, radii[1:])):
        raise ConfigError("radii not increasing")
    if len(radii) < 3:
        raise ConfigError("'quadrature.radii' needs at least three entries")
    n_theta = _integer("quadrature.n_theta", quadrature.get("n_theta", DEFAULT_PARAMS["n_theta"]), 1)
    n_psi = _integer("quadrature.n_psi", quadrature.get("n_psi", DEFAULT_PARAMS["n_psi"]), 1)

    steps = raw.get("steps", {})
    fd_step = _number("steps.fd_step", steps.get("fd_step", DEFAULT_PARAMS["fd_step"]))
    weitzenbock_steps = _number_list(
        "steps.weitzenbock_steps", steps.get("weitzenbock_steps", list(DEFAULT_PARAMS["weitzenbock_steps"]))
    )
    if len(weitzenbock_steps) != 2 or weitzenbock_steps[1] >= weitzenbock_steps[0]:
        raise ConfigError("'steps.weitzenbock_steps' must be two decreasing steps")

    tolerances = dict(DEFAULT_TOLERANCES)
    for key, value in raw.get("tolerances", {}).items():
        tolerances[key] = _number(f"tolerances.{key}", value)

    selected = raw.get("pipelines", {}).get("selected", list(PIPELINES))
    if not isinstance(selected, list) or not all(isinstance(s, str) for s in selected):
        raise ConfigError("'pipelines.selected' must be an array of names")
    for name in selected:
        if name not in PIPELINES:
            raise ConfigError(f"Unknown pipeline '{name}' in 'pipelines.selected'")
    # execution order is fixed, duplicates collapse
    pipelines = tuple(p for p in PIPELINES if p in selected)

    output = raw.get("output", {})
    for key in ("report", "csv"):
        if key in output and not isinstance(output[key], str):
            raise ConfigError(f"'output.{key}' must be a path string")

    seed = _integer("seed", raw.get("seed", DEFAULT_PARAMS["seed"]), 0)
    threads = _integer("threads", raw.get("threads", DEFAULT_PARAMS["threads"]), 1)

    config = RunConfig(
        family=family,
        kappa=kappa,
        parameters=parameters,
        tau=tau,
        radii=radii,
        n_theta=n_theta,
        n_psi=n_psi,
        fd_step=fd_step,
        weitzenbock_steps=weitzenbock_steps,
        tolerances=tolerances,
        pipelines=pipelines,
        report=output.get("report"),
        csv=output.get("csv"),
        seed=seed,
        threads=threads,
    )
    logger.debug("Parsed config for family %s", family)
    return config


def _toml_value(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, str):
        escaped = value.replace("\\", "\\\\").replace('"', '\\"')
        return f'"{escaped}"'
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_toml_value(v) for v in value) + "]"
    raise ConfigError(f"Cannot serialise value {value!r}")


def serialize_config(config: RunConfig) -> str:
    """TOML text that parse_config maps back to an equal RunConfig."""
    lines = [f"family = {_toml_value(config.family)}", f"kappa = {_toml_value(config.kappa)}"]
    if config.tau is not None:
        lines.append(f"tau = {_toml_value(config.tau)}")
    lines.append(f"seed = {config.seed}")
    lines.append(f"threads = {config.threads}")

    def section(name: str, items: Dict[str, Any]) -> None:
        lines.append("")
        lines.append(f"[{name}]")
        for key in sorted(items):
            if items[key] is not None:
                lines.append(f"{key} = {_toml_value(items[key])}")

    section("parameters", config.parameters)
    section("quadrature", {"radii": list(config.radii), "n_theta": config.n_theta, "n_psi": config.n_psi})
    section("steps", {"fd_step": config.fd_step, "weitzenbock_steps": list(config.weitzenbock_steps)})
    section("tolerances", config.tolerances)
    section("pipelines", {"selected": list(config.pipelines)})
    section("output", {"report": config.report, "csv": config.csv})
    return "\n".join(lines) + "\n"


def with_overrides(config: RunConfig, **changes: Any) -> RunConfig:
    """Copy of config with CLI overrides (threads, seed, pipelines) applied."""
    changes = {k: v for k, v in changes.items() if v is not None}
    return replace(config, **changes)

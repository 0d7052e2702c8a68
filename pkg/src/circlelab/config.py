"""Scenario configuration: parsing, validation, and canonical hashing.

Scenario files come in two equivalent forms: a flat ``key = value`` text
format (hand-editable, one option per line, ``#`` comments) and a JSON
object with the same keys.  ``schemas/scenario.schema.json`` documents
the JSON form.  A scenario is identified by the SHA-256 hash of its
canonical JSON (everything except the output directory), which is what
the runner uses to refuse mixing different experiments in one directory.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field
from typing import Any, Dict, Tuple

from .errors import ConfigError
from .potential import PeriodicPotential, load_potential

__all__ = [
    "SCENARIO_KINDS",
    "PROCESS_KINDS",
    "ScenarioConfig",
    "load_scenario",
    "parse_scenario_text",
    "scenario_from_dict",
]

SCENARIO_KINDS = ("ergodic", "localization", "metastability",
                  "pdmp-vs-diffusion", "drift", "doeblin", "hitting")
PROCESS_KINDS = ("diffusion", "pdmp", "both")

# Kind-specific option keys with their parsers and defaults.  A scalar
# default of None means "required only if the kind needs it"; all listed
# options have working defaults so minimal configs run out of the box.


def _float_list(value):
    if isinstance(value, (list, tuple)):
        return tuple(float(v) for v in value)
    return tuple(float(tok) for tok in str(value).replace(",", " ").split())


_OPTION_SPECS: Dict[str, Any] = {
    "burn_in": float,
    "record_every": int,
    "save_paths": int,
    "eta": float,
    "m_grid": _float_list,
    "max_time": float,
    "kappa": float,
    "u0_grid": _float_list,
    "t_grid": _float_list,
    "lambda_grid": _float_list,
    "eta_fractions": _float_list,
    "box": _float_list,
    "grid_points": int,
    "tolerance": float,
    "epsilon": float,
    "u_threshold": float,
}


@dataclass(frozen=True)
class ScenarioConfig:
    """A validated experiment description.

    Core fields cover every scenario kind; kind-specific knobs live in
    ``options`` (already parsed to their target types).
    """

    kind: str
    potential: PeriodicPotential
    process: str = "diffusion"
    lam: float = 1.0
    dt: float = 1e-3
    horizon: float = 100.0
    replicas: int = 1
    x0: float = 0.0
    u0: float = 0.0
    y0: int = 1
    root_seed: int = 0
    out_dir: str = "run"
    options: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in SCENARIO_KINDS:
            raise ConfigError(
                f"field 'kind': {self.kind!r} is not one of {SCENARIO_KINDS}")
        if self.process not in PROCESS_KINDS:
            raise ConfigError(
                f"field 'process': {self.process!r} is not one of "
                f"{PROCESS_KINDS}")
        if self.replicas < 1:
            raise ConfigError("field 'replicas': must be >= 1")
        if self.horizon <= 0.0:
            raise ConfigError("field 'horizon': must be > 0")
        if self.process in ("diffusion", "both") and self.dt <= 0.0:
            raise ConfigError("field 'dt': must be > 0 for the diffusion")
        if self.process in ("pdmp", "both") and self.lam <= 0.0:
            raise ConfigError("field 'lambda': must be > 0 for the "
                              "velocity-jump process")
        if self.y0 not in (-1, 1):
            raise ConfigError("field 'y0': must be -1 or +1")
        for key in self.options:
            if key not in _OPTION_SPECS:
                raise ConfigError(f"field {key!r}: unknown option")

    def processes(self) -> Tuple[str, ...]:
        return ("diffusion", "pdmp") if self.process == "both" \
            else (self.process,)

    def option(self, key: str, default):
        return self.options.get(key, default)

    def to_dict(self, include_out_dir: bool = True) -> Dict[str, Any]:
        d: Dict[str, Any] = {
            "kind": self.kind,
            "potential": self.potential.to_record(),
            "process": self.process,
            "lambda": self.lam,
            "dt": self.dt,
            "horizon": self.horizon,
            "replicas": self.replicas,
            "x0": self.x0,
            "u0": self.u0,
            "y0": self.y0,
            "root_seed": self.root_seed,
            "options": {k: (list(v) if isinstance(v, tuple) else v)
                        for k, v in sorted(self.options.items())},
        }
        if include_out_dir:
            d["out_dir"] = self.out_dir
        return d

    def config_hash(self) -> str:
        """SHA-256 of the canonical JSON form, excluding the output dir."""
        canonical = json.dumps(self.to_dict(include_out_dir=False),
                               sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _parse_option(key: str, raw) -> Any:
    parser = _OPTION_SPECS[key]
    try:
        return parser(raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"field {key!r}: {exc}") from exc


def scenario_from_dict(data: Dict[str, Any],
                       base_dir: str = ".") -> ScenarioConfig:
    """Build a config from the JSON object form.

    The potential may be an inline record (dict) or a path to a potential
    file, resolved relative to the scenario file.
    """
    if not isinstance(data, dict):
        raise ConfigError("scenario must be a JSON object")
    known = {"kind", "potential", "process", "lambda", "dt", "horizon",
             "replicas", "x0", "u0", "y0", "root_seed", "out_dir", "options"}
    core: Dict[str, Any] = {}
    options: Dict[str, Any] = {}
    for key, value in data.items():
        if key in known:
            core[key] = value
        elif key in _OPTION_SPECS:
            options[key] = _parse_option(key, value)
        else:
            raise ConfigError(f"field {key!r}: unknown key")
    for key, value in core.get("options", {}).items():
        if key not in _OPTION_SPECS:
            raise ConfigError(f"field {key!r}: unknown option")
        options[key] = _parse_option(key, value)

    if "kind" not in core:
        raise ConfigError("field 'kind': missing")
    if "potential" not in core:
        raise ConfigError("field 'potential': missing")
    pot_spec = core["potential"]
    if isinstance(pot_spec, dict):
        potential = PeriodicPotential.from_record(pot_spec)
    elif isinstance(pot_spec, str):
        potential = load_potential(os.path.join(base_dir, pot_spec))
    else:
        raise ConfigError("field 'potential': must be a record or a path")

    def _num(key, conv, default):
        if key not in core:
            return default
        try:
            return conv(core[key])
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"field {key!r}: {exc}") from exc

    return ScenarioConfig(
        kind=str(core["kind"]),
        potential=potential,
        process=str(core.get("process", "diffusion")),
        lam=_num("lambda", float, 1.0),
        dt=_num("dt", float, 1e-3),
        horizon=_num("horizon", float, 100.0),
        replicas=_num("replicas", int, 1),
        x0=_num("x0", float, 0.0),
        u0=_num("u0", float, 0.0),
        y0=_num("y0", int, 1),
        root_seed=_num("root_seed", int, 0),
        out_dir=str(core.get("out_dir", "run")),
        options=options,
    )


def parse_scenario_text(text: str, base_dir: str = ".") -> ScenarioConfig:
    """Parse the flat ``key = value`` scenario form."""
    data: Dict[str, Any] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(
                f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key in data:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        data[key] = value
    return scenario_from_dict(data, base_dir=base_dir)


def load_scenario(path) -> ScenarioConfig:
    """Load a scenario file in either the JSON or the flat text form."""
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    base_dir = os.path.dirname(os.path.abspath(path))
    if text.lstrip().startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
        return scenario_from_dict(data, base_dir=base_dir)
    return parse_scenario_text(text, base_dir=base_dir)

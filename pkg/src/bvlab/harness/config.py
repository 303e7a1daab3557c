"""
Scenario configuration files: flat sectioned key = value text, ``#`` comments.

Sections [geometry], [flux], [initial], [solver] are required, [output] is
optional. Every key is checked against a schema; unknown or misplaced keys
are rejected with the line they appear on.
"""

import configparser
import re
from dataclasses import dataclass, field
from pathlib import Path

from ..geometry import spherical_band, surface_of_revolution, weighted_interval
from ..problem import FluxFamily, InitialSpec, MollifierSpec, Scenario


class ConfigError(ValueError):
    """Invalid configuration; ``line`` and ``key`` locate the problem when known."""

    def __init__(self, message, line=None, key=None, path=None):
        self.line, self.key, self.path = line, key, path
        where = f"{path}:" if path else ""
        where += f"line {line}: " if line else (" " if path else "")
        super().__init__(f"{where}{message}".strip())


def _floats(text):
    return tuple(float(v) for v in text.replace(",", " ").split())


def _ints(text):
    return tuple(int(v) for v in text.replace(",", " ").split())


def _bool(text):
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


GEOMETRY_KEYS = {
    "weighted-interval": {"x_lo": float, "x_hi": float, "weight": str, "beta": float},
    "spherical-band": {"theta0": float, "theta1": float},
    "surface-of-revolution": {"s_lo": float, "s_hi": float, "profile": str, "alpha": float, "length": float},
}

SCHEMA = {
    "geometry": {"kind": str},
    "flux": {"h": str, "a": float, "a_mode": str, "period": float, "c": float, "c_slope": float},
    "initial": {"profile": str, "value": float, "left": float, "right": float, "position": float,
                "start": float, "stop": float, "amplitude": float, "center": float, "width": float,
                "offset": float, "mode": int, "csv": str},
    "solver": {"horizon": float, "resolution": _ints, "cfl": float, "viscosity": float,
               "truncation": float, "clamp": _bool},
    "output": {"cadence": int, "name": str, "snapshots": _bool, "oracle": str},
}
REQUIRED = {"geometry": ("kind",), "flux": ("h",), "initial": ("profile",), "solver": ("horizon", "resolution")}
ORACLES = ("auto", "none", "characteristic", "reference", "shock-exit", "boundary-rarefaction", "step-shock")


@dataclass
class ScenarioConfig:
    scenario: Scenario
    path: Path
    values: dict = field(default_factory=dict)   # parsed values per section, for echoing
    lines: dict = field(default_factory=dict)

    @property
    def name(self) -> str:
        return self.scenario.name

    @property
    def oracle(self) -> str:
        return self.scenario.oracle


def _line_index(text: str):
    """(section, key) -> line number, scanning the raw text."""
    index, section = {}, None
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = re.match(r"^\[([^\]]+)\]$", line)
        if m:
            section = m.group(1).strip().lower()
            index.setdefault((section, None), no)
            continue
        m = re.match(r"^([^=:]+?)\s*[=:]", line)
        if m and section is not None:
            index.setdefault((section, m.group(1).strip().lower()), no)
    return index


def parse_config_text(text: str, path="<string>", base_dir=None) -> ScenarioConfig:
    lines = _line_index(text)
    parser = configparser.ConfigParser(interpolation=None, comment_prefixes=("#",),
                                       inline_comment_prefixes=("#",), strict=True)
    try:
        parser.read_string(text, source=str(path))
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc.message if hasattr(exc, 'message') else exc}",
                          getattr(exc, "lineno", None), path=path) from exc

    values = {}
    for section in parser.sections():
        sec = section.lower()
        if sec not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]", lines.get((sec, None)), path=path)
        schema = dict(SCHEMA[sec])
        if sec == "geometry":
            kind = parser[section].get("kind")
            if kind not in GEOMETRY_KEYS:
                raise ConfigError(f"[geometry] kind: unknown geometry {kind!r}",
                                  lines.get(("geometry", "kind")), "kind", path)
            schema.update(GEOMETRY_KEYS[kind])
        parsed = {}
        for key, raw in parser[section].items():
            line = lines.get((sec, key))
            if key not in schema:
                raise ConfigError(f"unknown key {key!r} in [{sec}]", line, key, path)
            try:
                parsed[key] = schema[key](raw.strip())
            except ValueError as exc:
                raise ConfigError(f"[{sec}] {key}: {exc}", line, key, path) from exc
        values[sec] = parsed
    for sec, keys in REQUIRED.items():
        if sec not in values:
            raise ConfigError(f"missing section [{sec}]", path=path)
        for key in keys:
            if key not in values[sec]:
                raise ConfigError(f"missing key {key!r} in [{sec}]", lines.get((sec, None)), key, path)
    values.setdefault("output", {})
    try:
        scenario = _build(values, Path(base_dir) if base_dir else Path(path).parent, Path(path))
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"invalid scenario: {exc}", path=path) from exc
    return ScenarioConfig(scenario, Path(path), values, lines)


def load_config(path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}", path=path) from exc
    return parse_config_text(text, path, path.parent)


def _build(values: dict, base_dir: Path, path: Path) -> Scenario:
    g = dict(values["geometry"])
    kind = g.pop("kind")
    if kind == "weighted-interval":
        geom = weighted_interval(g.get("x_lo", 0.0), g.get("x_hi", 1.0), g.get("weight", "one"), g.get("beta", 0.0))
    elif kind == "spherical-band":
        geom = spherical_band(g.get("theta0", 0.7853981633974483), g.get("theta1", 1.5707963267948966))
    else:
        geom = surface_of_revolution(g.get("s_lo", 0.0), g.get("s_hi", 1.0), g.get("profile", "cylinder"),
                                     g.get("alpha", 0.0), g.get("length", 1.0))
    f = values["flux"]
    flux = FluxFamily(geom, f["h"], f.get("a", 1.0), f.get("a_mode", "constant"), f.get("period", 1.0),
                      f.get("c", 0.0), f.get("c_slope", 0.0))
    ini = dict(values["initial"])
    profile = ini.pop("profile")
    if profile not in InitialSpec.PROFILES:
        raise ValueError(f"unknown initial profile {profile!r}")
    csv = ini.pop("csv", None)
    if profile == "csv":
        if csv is None:
            raise ValueError("profile csv needs a csv path")
        csv = str((base_dir / csv).resolve())
    init = InitialSpec(profile, ini, csv)
    s = values["solver"]
    o = values["output"]
    oracle = o.get("oracle", "auto")
    if oracle not in ORACLES:
        raise ValueError(f"unknown oracle {oracle!r}")
    mol = MollifierSpec(s.get("truncation", 3.0), s.get("clamp", True))
    return Scenario(geom, flux, init, s["horizon"], tuple(s["resolution"]), s.get("cfl", 0.45),
                    s.get("viscosity", 0.0), mol, o.get("cadence", 4), o.get("name", path.stem),
                    o.get("snapshots", True), oracle)


def echo(cfg: ScenarioConfig) -> dict:
    """JSON-friendly copy of the parsed values."""
    return {sec: {k: (list(v) if isinstance(v, tuple) else v) for k, v in vals.items()}
            for sec, vals in cfg.values.items()}


CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


def shipped_configs():
    return sorted(CONFIG_DIR.glob("*.cfg"))


def shipped(name: str) -> ScenarioConfig:
    return load_config(CONFIG_DIR / (name if name.endswith(".cfg") else name + ".cfg"))

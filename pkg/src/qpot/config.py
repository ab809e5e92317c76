"""Config-file parsing and serialization.

The format is flat ``key = value`` text grouped under ``[section]``
headers, one experiment per file. Values are SI numbers, optionally with
a unit suffix (``z0 = 2.3um``, ``t_final = 2ms``), booleans, bare words
or comma-separated lists of any of these. ``#`` starts a comment. Unknown
sections and unknown keys are errors rather than silent no-ops.
"""

import re

from .core import Grid1D, PhysicalParams, default_grid
from .errors import ConfigError
from .experiments import SweepSpec
from .propagate import EvolveConfig

# longest-match first so "ms" wins over "m" and "us" over "s"
_UNIT_FACTORS = [
    ("rad/s", 1.0),
    ("nm", 1e-9),
    ("um", 1e-6),
    ("mm", 1e-3),
    ("ns", 1e-9),
    ("us", 1e-6),
    ("ms", 1e-3),
    ("kg", 1.0),
    ("Hz", 1.0),
    ("m", 1.0),
    ("s", 1.0),
    ("J", 1.0),
]

_NUMBER = re.compile(
    r"^\s*([+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)\s*([A-Za-z/]*)\s*$"
)


def parse_quantity(text):
    """A number with an optional SI unit suffix, returned in base SI."""
    m = _NUMBER.match(text)
    if not m:
        raise ConfigError(f"cannot parse quantity {text!r}")
    value = float(m.group(1))
    suffix = m.group(2)
    if not suffix:
        return value
    for unit, factor in _UNIT_FACTORS:
        if suffix == unit:
            return value * factor
    raise ConfigError(f"unknown unit suffix {suffix!r} in {text!r}")


def parse_bool(text):
    t = text.strip().lower()
    if t in ("true", "yes", "on", "1"):
        return True
    if t in ("false", "no", "off", "0"):
        return False
    raise ConfigError(f"cannot parse boolean {text!r}")


def parse_int(text):
    try:
        return int(text.strip())
    except ValueError:
        raise ConfigError(f"cannot parse integer {text!r}") from None


def parse_word(text):
    return text.strip()


def parse_list(item_parser):
    def parse(text):
        items = [s for s in (p.strip() for p in text.split(",")) if s]
        if not items:
            raise ConfigError("empty list value")
        return tuple(item_parser(s) for s in items)

    return parse


def parse_rule(text):
    """Width rule: 'ratio 0.5' or 'fixed 1um'."""
    parts = text.split(None, 1)
    if len(parts) != 2 or parts[0] not in ("ratio", "fixed"):
        raise ConfigError(f"cannot parse width rule {text!r}; "
                          "expected 'ratio R' or 'fixed SIGMA'")
    return (parts[0], parse_quantity(parts[1]))


_SCHEMA = {
    "params": {
        "mass": parse_quantity,
        "c4": parse_quantity,
        "z0": parse_quantity,
        "sigma": parse_quantity,
        "c1": parse_quantity,
        "c2": parse_quantity,
        "delta": parse_quantity,
        "absorber_strength": parse_quantity,
        "trap_omega": parse_quantity,
    },
    "grid": {
        "z_max": parse_quantity,
        "n_points": parse_int,
    },
    "evolve": {
        "dt": parse_quantity,
        "t_final": parse_quantity,
        "snapshot_stride": parse_int,
        "store_wavefunctions": parse_bool,
        "packet": parse_word,
        "include_trap": parse_bool,
        "include_absorber": parse_bool,
    },
    "sweep": {
        "z0_values": parse_list(parse_quantity),
        "sigma_rule": parse_rule,
        "t_average_window": parse_quantity,
        "variants": parse_list(parse_word),
    },
    "compare": {
        "t_average_window": parse_quantity,
        "include_trap": parse_bool,
    },
    "fitted": {
        "engineered_z0": parse_quantity,
        "engineered_sigma": parse_quantity,
        "gaussian_z0": parse_quantity,
        "gaussian_sigma": parse_quantity,
        "auto_fit": parse_bool,
        "t_average_window": parse_quantity,
        "include_trap": parse_bool,
    },
    "prepare": {
        "slopes": parse_list(parse_quantity),
        "slope_z0_values": parse_list(parse_quantity),
        "t_window": parse_quantity,
        "include_trap": parse_bool,
    },
    "fields": {
        "support_cut": parse_quantity,
    },
    "profile": {
        "use_abs": parse_bool,
    },
    "converge": {
        "t_final": parse_quantity,
        "dt_ladder": parse_list(parse_quantity),
        "n_refinements": parse_int,
        "packet": parse_word,
    },
}


def parse_config_text(text):
    """Parse config text into {section: {key: typed value}}."""
    sections = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1].strip()
            if name not in _SCHEMA:
                raise ConfigError(f"line {lineno}: unknown section [{name}]")
            if name in sections:
                raise ConfigError(f"line {lineno}: duplicate section [{name}]")
            sections[name] = {}
            current = name
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        if current is None:
            raise ConfigError(f"line {lineno}: key outside any [section]")
        key, value = (part.strip() for part in line.split("=", 1))
        schema = _SCHEMA[current]
        if key not in schema:
            raise ConfigError(f"line {lineno}: unknown key {key!r} in [{current}]")
        if key in sections[current]:
            raise ConfigError(f"line {lineno}: duplicate key {key!r} in [{current}]")
        try:
            sections[current][key] = schema[key](value)
        except ConfigError as exc:
            raise ConfigError(f"line {lineno}: {exc}") from None
    return sections


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        return parse_config_text(fh.read())


def params_from(cfg):
    return PhysicalParams(**cfg.get("params", {}))


def grid_from(cfg, params=None):
    section = cfg.get("grid")
    if not section:
        return default_grid(params)
    if "z_max" in section and "n_points" in section:
        return Grid1D(z_max=section["z_max"], n_points=section["n_points"])
    base = default_grid(params)
    return Grid1D(
        z_max=section.get("z_max", base.z_max),
        n_points=section.get("n_points", base.n_points),
    )


def evolve_from(cfg, **overrides):
    section = dict(cfg.get("evolve", {}))
    section.pop("packet", None)
    section.pop("include_trap", None)
    section.pop("include_absorber", None)
    section.update(overrides)
    return EvolveConfig(**section)


def sweep_from(cfg):
    section = cfg.get("sweep")
    if not section:
        raise ConfigError("config has no [sweep] section")
    if "z0_values" not in section:
        raise ConfigError("[sweep] requires z0_values")
    return SweepSpec(**section)


def sweep_to_text(spec):
    """Serialize a SweepSpec so that parsing the text reproduces it."""
    kind, value = spec.sigma_rule
    lines = [
        "[sweep]",
        "z0_values = " + ", ".join(repr(v) for v in spec.z0_values),
        f"sigma_rule = {kind} {value!r}",
        f"t_average_window = {spec.t_average_window!r}",
        "variants = " + ", ".join(spec.variants),
    ]
    return "\n".join(lines) + "\n"


def config_to_text(cfg):
    """Render a parsed config back to file form (used by run manifests)."""
    out = []
    for name, section in cfg.items():
        out.append(f"[{name}]")
        for key, value in section.items():
            if isinstance(value, tuple) and len(value) == 2 and value[0] in (
                "ratio", "fixed",
            ) and key == "sigma_rule":
                out.append(f"{key} = {value[0]} {value[1]!r}")
            elif isinstance(value, tuple):
                out.append(f"{key} = " + ", ".join(
                    v if isinstance(v, str) else repr(v) for v in value
                ))
            elif isinstance(value, bool):
                out.append(f"{key} = {'true' if value else 'false'}")
            elif isinstance(value, float):
                out.append(f"{key} = {value!r}")
            else:
                out.append(f"{key} = {value}")
        out.append("")
    return "\n".join(out)

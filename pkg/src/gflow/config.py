"""Strict sectioned key=value config files.

Every command validates its config against a schema: unknown sections or
keys are errors (with the offending line number), values are typed, and
missing keys either take their declared default or fail if required.
`--set section.key=value` overrides behave as if the assignment appeared
in the file. The fully resolved config is written back out next to the
command's outputs so a run is reproducible from its artifacts alone.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .errors import ConfigError

REQUIRED = object()


@dataclass(frozen=True)
class Field:
    type: str  # int | float | bool | str | ints | floats | strs
    default: object = REQUIRED
    choices: Optional[tuple] = None

    def convert(self, raw: str, where: str):
        try:
            value = _CONVERTERS[self.type](raw)
        except (ValueError, KeyError):
            raise ConfigError(f"{where}: cannot parse {raw!r} as {self.type}")
        if self.choices is not None and value not in self.choices:
            raise ConfigError(f"{where}: {value!r} not one of {list(self.choices)}")
        return value


def _parse_bool(raw: str) -> bool:
    lowered = raw.strip().lower()
    if lowered in ("true", "yes", "1", "on"):
        return True
    if lowered in ("false", "no", "0", "off"):
        return False
    raise ValueError(raw)


def _parse_list(raw: str, item):
    stripped = raw.strip()
    if not stripped:
        return ()
    return tuple(item(part.strip()) for part in stripped.split(","))


_CONVERTERS = {
    "int": lambda raw: int(raw.strip()),
    "float": lambda raw: float(raw.strip()),
    "bool": _parse_bool,
    "str": lambda raw: raw.strip(),
    "ints": lambda raw: _parse_list(raw, int),
    "floats": lambda raw: _parse_list(raw, float),
    "strs": lambda raw: _parse_list(raw, str),
}


def parse_config_text(text: str, origin: str) -> dict:
    """Raw parse: {(section, key): (value, lineno)}. Layout errors only."""
    out = {}
    section = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#") or stripped.startswith(";"):
            continue
        if stripped.startswith("[") and stripped.endswith("]"):
            section = stripped[1:-1].strip()
            if not section:
                raise ConfigError(f"{origin}:{lineno}: empty section name")
            continue
        if "=" not in stripped:
            raise ConfigError(f"{origin}:{lineno}: expected 'key = value' or '[section]', got {stripped!r}")
        if section is None:
            raise ConfigError(f"{origin}:{lineno}: assignment before any [section]")
        key, _, value = stripped.partition("=")
        key = key.strip()
        if not key:
            raise ConfigError(f"{origin}:{lineno}: empty key")
        if (section, key) in out:
            raise ConfigError(f"{origin}:{lineno}: duplicate key {section}.{key}")
        out[(section, key)] = (value.strip(), lineno)
    return out


def apply_overrides(raw: dict, overrides, origin: str = "--set") -> dict:
    out = dict(raw)
    for i, ov in enumerate(overrides or (), start=1):
        head, eq, value = ov.partition("=")
        if not eq or "." not in head:
            raise ConfigError(f"{origin} #{i}: expected section.key=value, got {ov!r}")
        section, _, key = head.partition(".")
        out[(section.strip(), key.strip())] = (value.strip(), 0)
    return out


def resolve(raw: dict, schema: dict, origin: str) -> dict:
    """Validate against schema -> {section: {key: typed value}}."""
    for (section, key), (_, lineno) in raw.items():
        where = f"{origin}:{lineno}" if lineno else f"{origin} (--set)"
        if section not in schema:
            raise ConfigError(f"{where}: unknown section [{section}]")
        if key not in schema[section]:
            raise ConfigError(f"{where}: unknown key {section}.{key}")
    cfg = {}
    for section, fields in schema.items():
        cfg[section] = {}
        for key, spec in fields.items():
            if (section, key) in raw:
                value_str, lineno = raw[(section, key)]
                where = f"{origin}:{lineno}" if lineno else f"{origin} (--set {section}.{key})"
                cfg[section][key] = spec.convert(value_str, where)
            elif spec.default is REQUIRED:
                raise ConfigError(f"{origin}: missing required key {section}.{key}")
            else:
                cfg[section][key] = spec.default
    return cfg


def load_config(path, schema: dict, overrides=None) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}")
    raw = parse_config_text(text, str(path))
    raw = apply_overrides(raw, overrides)
    return resolve(raw, schema, str(path))


def format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ",".join(format_value(v) for v in value)
    return str(value)


def write_resolved(path, cfg: dict) -> None:
    lines = []
    for section in cfg:
        lines.append(f"[{section}]")
        for key, value in cfg[section].items():
            lines.append(f"{key} = {format_value(value)}")
        lines.append("")
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text("\n".join(lines))

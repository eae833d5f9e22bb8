"""Scenario files: flat ``key = value`` lines grouped under ``[section]`` headers.

Schema (``#`` starts a comment)::

    [scenario]
    name = kwell_symmetric(4)     # builtin, or use ``input = path`` for a field file
    h = 0.2, 0.15, 0.1            # required, positive, strictly decreasing
    window = full                 # or "a,b"
    degrees = 0                   # optional, defaults to the scenario's degrees
    coefficient_field = GF(2)
    method = auto                 # auto | structured | jacobi | lanczos
    seed = 0

    [output]
    dir = out
    prefix = run

Every error carries the offending line number and exits with code 2.
"""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field

from .coefficients import get_field
from .errors import ConfigError, InputError
from .field import LevelWindow

METHODS = ("auto", "structured", "jacobi", "lanczos")

SCHEMA = {
    "scenario": ("name", "input", "h", "window", "degrees", "coefficient_field", "method", "seed"),
    "output": ("dir", "prefix"),
}


@dataclass(frozen=True)
class Scenario:
    name: str = ""
    input: str = ""
    h: tuple = ()
    window: LevelWindow = dc_field(default_factory=LevelWindow.full)
    degrees: tuple | None = None
    coefficient_field: str = "GF(2)"
    method: str = "auto"
    seed: int = 0
    out_dir: str = "out"
    prefix: str = ""

    @property
    def label(self) -> str:
        return self.prefix or (self.name or "field").split("(")[0]

    def to_text(self) -> str:
        lines = ["[scenario]"]
        if self.name:
            lines.append(f"name = {self.name}")
        if self.input:
            lines.append(f"input = {self.input}")
        lines.append("h = " + ", ".join(repr(float(h)) for h in self.h))
        lines.append("window = " + ("full" if self.window.is_full else f"{self.window.a!r},{self.window.b!r}"))
        if self.degrees is not None:
            lines.append("degrees = " + ", ".join(str(p) for p in self.degrees))
        lines += [f"coefficient_field = {self.coefficient_field}", f"method = {self.method}",
                  f"seed = {self.seed}", "", "[output]", f"dir = {self.out_dir}"]
        if self.prefix:
            lines.append(f"prefix = {self.prefix}")
        return "\n".join(lines) + "\n"


def parse_h_list(text: str) -> tuple:
    try:
        hs = tuple(float(t) for t in text.replace(";", ",").split(",") if t.strip())
    except ValueError:
        raise InputError(f"h list must be comma-separated numbers, got {text!r}") from None
    validate_h(hs)
    return hs


def validate_h(hs):
    if not hs:
        raise InputError("h list is empty")
    if any(not h > 0 for h in hs):
        raise InputError("h values must be positive")
    if any(b >= a for a, b in zip(hs, hs[1:])):
        raise InputError("h values must be strictly decreasing")


def _convert(key: str, value: str, lineno: int):
    try:
        if key == "h":
            return parse_h_list(value)
        if key == "window":
            return LevelWindow.parse(value)
        if key == "degrees":
            return tuple(int(t) for t in value.split(",") if t.strip())
        if key == "seed":
            return int(value)
        if key == "method":
            if value not in METHODS:
                raise InputError(f"method must be one of {', '.join(METHODS)}")
            return value
        if key == "coefficient_field":
            get_field(value)
            return value
        return value
    except (InputError, ValueError) as exc:
        raise ConfigError(f"line {lineno}: bad value for {key!r}: {exc}") from None


_RENAME = {("output", "dir"): "out_dir", ("output", "prefix"): "prefix"}


def parse_config_text(text: str) -> Scenario:
    section = None
    seen: dict = {}
    kw = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"line {lineno}: malformed section header {raw.strip()!r}")
            section = line[1:-1].strip()
            if section not in SCHEMA:
                raise ConfigError(f"line {lineno}: unknown section [{section}]")
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        if section is None:
            raise ConfigError(f"line {lineno}: key outside any section")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in SCHEMA[section]:
            raise ConfigError(f"line {lineno}: unknown key {key!r} in [{section}]")
        if (section, key) in seen:
            raise ConfigError(f"line {lineno}: duplicate key {key!r} (first on line {seen[section, key]})")
        seen[section, key] = lineno
        kw[_RENAME.get((section, key), key)] = _convert(key, value, lineno)
    end = len(text.splitlines())
    if "h" not in kw:
        raise ConfigError(f"line {end} (end of file): missing required key 'h' in [scenario]")
    if bool(kw.get("name")) == bool(kw.get("input")):
        raise ConfigError(f"line {end} (end of file): exactly one of 'name' or 'input' is required")
    return Scenario(**kw)


def parse_config(path) -> Scenario:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    return parse_config_text(text)

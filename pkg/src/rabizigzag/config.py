"""Plain-text run configuration: ``key = value`` lines with ``#`` comments.

Values are resolved in increasing precedence: built-in defaults, the config
file, ``RABIZZ_<KEY>`` environment variables, explicit command-line flags.
Numeric values may use ``pi`` (``3*pi/4``, ``-pi/2``).
"""

from __future__ import annotations

import ast
import math
import operator
import os
from dataclasses import dataclass, field

from .errors import ConfigError
from .model import ModelParams

__all__ = ["RunConfig", "parse_text", "load", "resolve", "parse_number", "ENV_PREFIX", "KEYS"]

ENV_PREFIX = "RABIZZ_"

# key -> (kind, default); a default of None means "no default"
KEYS: dict[str, tuple[str, object]] = {
    "omega": ("float", 1.0),
    "delta": ("float", 50.0),
    "g1": ("float", None),
    "j1": ("float", None),
    "j1_over_j2": ("float", None),
    "j2": ("float", 0.05),
    "theta": ("float", None),
    "n_cavities": ("int", 6),
    "seed": ("int", 20240917),
    "workers": ("int", 1),
    "out": ("str", "rabizz-out"),
    "n_random": ("int", 20),
    "tol_grad": ("float", None),
    # scan
    "axis1": ("str", None),
    "axis1_min": ("float", None),
    "axis1_max": ("float", None),
    "axis1_n": ("int", None),
    "axis2": ("str", None),
    "axis2_min": ("float", None),
    "axis2_max": ("float", None),
    "axis2_n": ("int", None),
    "refine": ("bool", False),
    # current sweep and triple point
    "ratio_min": ("float", 0.0),
    "ratio_max": ("float", 0.3),
    "ratio_n": ("int", 31),
    "thetas": ("floats", "0, pi/4, -pi/4, pi/2, -pi/2, 3*pi/4, -3*pi/4"),
    "n_coarse": ("int", 25),
    # exponents
    "side": ("str", "both"),
    "modes": ("ints", "0"),
    "window_min": ("float", 1e-4),
    "window_max": ("float", 1e-2),
    "n_points": ("int", 12),
    "closing_threshold": ("float", 1e-5),
    # exact diagonalization
    "n_max": ("int", None),
    "n_max_list": ("ints", None),
    "solver": ("str", "iterative"),
    "ed_tol": ("float", 1e-10),
    "dim_cap": ("int", 500_000),
    "dump_vector": ("bool", False),
}

_OPS = {
    ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
    ast.Div: operator.truediv, ast.Pow: operator.pow,
    ast.USub: operator.neg, ast.UAdd: operator.pos,
}


def parse_number(text: str) -> float:
    """Evaluate a numeric literal or simple arithmetic involving ``pi``."""

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id == "pi":
            return math.pi
        if isinstance(node, ast.BinOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.operand))
        raise ValueError(f"unsupported expression {text!r}")

    try:
        return ev(ast.parse(text.strip(), mode="eval"))
    except (SyntaxError, ZeroDivisionError) as exc:
        raise ValueError(f"cannot parse number {text!r}") from exc


def _convert(key: str, kind: str, raw):
    if not isinstance(raw, str):
        return raw
    try:
        if kind == "float":
            return parse_number(raw)
        if kind == "int":
            val = parse_number(raw)
            if val != int(val):
                raise ValueError(f"expected an integer, got {raw!r}")
            return int(val)
        if kind == "bool":
            low = raw.strip().lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(f"expected a boolean, got {raw!r}")
        if kind == "floats":
            return [parse_number(x) for x in raw.split(",") if x.strip()]
        if kind == "ints":
            return [int(parse_number(x)) for x in raw.split(",") if x.strip()]
        return raw.strip()
    except ValueError as exc:
        raise ConfigError(f"{key}: {exc}") from exc


def parse_text(text: str, source: str = "<config>") -> dict[str, str]:
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in KEYS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if key in raw:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        raw[key] = value
    return raw


def load(path) -> dict[str, str]:
    try:
        with open(path, encoding="utf-8") as fh:
            return parse_text(fh.read(), str(path))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc


def _env_overrides(environ) -> dict[str, str]:
    out = {}
    for name, value in environ.items():
        if not name.startswith(ENV_PREFIX):
            continue
        key = name[len(ENV_PREFIX):].lower()
        if key not in KEYS:
            raise ConfigError(f"unknown key {key!r} from environment variable {name}")
        out[key] = value
    return out


@dataclass
class RunConfig:
    command: str
    values: dict = field(default_factory=dict)
    sources: dict = field(default_factory=dict)

    def __getitem__(self, key):
        return self.values[key]

    def get(self, key, default=None):
        val = self.values.get(key)
        return default if val is None else val

    def require(self, *keys):
        for key in keys:
            if self.values.get(key) is None:
                raise ConfigError(f"missing required key {key!r} for command {self.command!r}")

    def model(self, **override) -> ModelParams:
        """Model parameters; ``j1_over_j2`` wins over ``j1`` when both are given."""
        v = dict(self.values, **override)
        if v.get("j1_over_j2") is not None and v.get("j1") is not None and "j1" not in override:
            raise ConfigError("give either j1 or j1_over_j2, not both")
        for key in ("g1", "theta"):
            if v.get(key) is None:
                raise ConfigError(f"missing required key {key!r} for command {self.command!r}")
        j1 = v.get("j1")
        if v.get("j1_over_j2") is not None:
            j1 = v["j1_over_j2"] * v["j2"]
        if j1 is None:
            raise ConfigError(f"missing required key 'j1_over_j2' for command {self.command!r}")
        try:
            return ModelParams(omega=v["omega"], delta=v["delta"], g1=v["g1"], j1=j1, j2=v["j2"],
                               theta=v["theta"], n_cavities=v["n_cavities"])
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def echo(self) -> str:
        lines = [f"# resolved configuration for command {self.command}"]
        for key in sorted(self.values):
            val = self.values[key]
            # the output location never influences results
            if val is None or key == "out":
                continue
            lines.append(f"{key} = {_render(val)}  # {self.sources.get(key, 'default')}")
        return "\n".join(lines) + "\n"


def _render(val) -> str:
    if isinstance(val, bool):
        return "true" if val else "false"
    if isinstance(val, float):
        return repr(val)
    if isinstance(val, list):
        return ", ".join(_render(x) for x in val)
    return str(val)


def resolve(command: str, file_values: dict[str, str], flags: dict | None = None,
            environ=None) -> RunConfig:
    environ = os.environ if environ is None else environ
    values, sources = {}, {}
    for key, (kind, default) in KEYS.items():
        values[key] = _convert(key, kind, default) if isinstance(default, str) and kind != "str" else default
    layers = (("file", file_values), ("env", _env_overrides(environ)), ("flag", flags or {}))
    for name, layer in layers:
        for key, raw in layer.items():
            if raw is None:
                continue
            values[key] = _convert(key, KEYS[key][0], raw)
            sources[key] = name
    return RunConfig(command, values, sources)

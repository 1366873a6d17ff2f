"""Model files: TOML with tagged tables for the jump law, mixing measure and kernel.

Example::

    name = "supou-atom"

    [model]
    a = 0.0
    b = 0.0
    centering = "auto"          # auto | small-jump-mean | raw

    [levy]
    family = "atom-list"
    atoms = [[1.0, 1.0]]

    [mixing]
    family = "finite-atoms"
    atoms = [[1.0, 1.0]]

    [kernel]
    variant = "supou"

    [windows]                   # optional
    eps = 1e-12

    [grid]                      # optional
    t_max = 1e4
    points_per_decade = 8

Numbers may be written as the strings ``"inf"`` / ``"-inf"``.
"""

from __future__ import annotations

import copy
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from .kernels import make_kernel
from .measures import levy_measure, mixing_measure
from .simulate import ModelSpec, Windows

# legacy spelling accepted on input
CENTERING_ALIASES = {"paper-thm1": "small-jump-mean"}

SECTIONS = {"name", "model", "levy", "mixing", "kernel", "windows", "grid", "run"}
MODEL_KEYS = {"a": float, "b": float, "centering": str}
WINDOW_KEYS = {"s_min", "eps", "v_window", "scaled_cutoff", "tol"}
GRID_DEFAULTS = {"t_max": 1e4, "points_per_decade": 8}


class ConfigError(ValueError):
    """Schema violation in a model file; names the key and the constraint."""

    def __init__(self, key: str, constraint: str):
        super().__init__(f"{key}: {constraint}")
        self.key, self.constraint = key, constraint


def _numbers(obj):
    # "inf" strings -> floats, recursively
    if isinstance(obj, str) and obj.strip().lower() in ("inf", "+inf", "-inf", "infinity"):
        return -math.inf if obj.strip().startswith("-") else math.inf
    if isinstance(obj, list):
        return [_numbers(v) for v in obj]
    if isinstance(obj, dict):
        return {k: _numbers(v) for k, v in obj.items()}
    return obj


def load_raw(path: str | Path) -> dict:
    """Parse a TOML model file or a run manifest (JSON with a ``config`` entry)."""
    p = Path(path)
    try:
        text = p.read_bytes()
    except OSError as exc:
        raise ConfigError("model", f"cannot read {p}: {exc.strerror}") from exc
    if p.suffix == ".json":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError("model", f"invalid JSON: {exc}") from exc
        return data.get("config", data)
    try:
        return tomllib.loads(text.decode())
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError("model", f"invalid TOML: {exc}") from exc


@dataclass
class ResolvedConfig:
    raw: dict
    model: ModelSpec
    grid: dict
    run: dict

    def record(self) -> dict:
        """Fully resolved configuration (defaults filled in), JSON-ready."""
        out = copy.deepcopy(self.raw)
        out["model"] = {"a": self.model.a, "b": self.model.b, "centering": self.model.centering}
        out["windows"] = self.model.windows.record()
        out["grid"] = dict(self.grid)
        out["run"] = dict(self.run)
        out["name"] = self.model.name
        return out


def _table(raw: dict, key: str, required: bool = True) -> dict:
    val = raw.get(key)
    if val is None:
        if required:
            raise ConfigError(key, "required table is missing")
        return {}
    if not isinstance(val, dict):
        raise ConfigError(key, "must be a table")
    return dict(val)


def build(raw: dict) -> ResolvedConfig:
    """Validate a parsed model file and construct the model objects."""
    unknown = set(raw) - SECTIONS
    if unknown:
        raise ConfigError(sorted(unknown)[0], f"unknown top-level key (allowed: {sorted(SECTIONS)})")
    data = _numbers(raw)
    mod = _table(data, "model", required=False)
    for k in mod:
        if k not in MODEL_KEYS:
            raise ConfigError(f"model.{k}", "unknown key")
    try:
        a = float(mod.get("a", 0.0))
        b = float(mod.get("b", 0.0))
    except (TypeError, ValueError) as exc:
        raise ConfigError("model.a/b", "must be numbers") from exc
    if b < 0:
        raise ConfigError("model.b", "must be >= 0")
    centering = mod.get("centering", "auto")
    centering = CENTERING_ALIASES.get(centering, centering)
    if centering not in ("auto", "small-jump-mean", "raw"):
        raise ConfigError("model.centering", "must be one of auto, small-jump-mean, raw")

    kern = _table(data, "kernel")
    variant = kern.pop("variant", None)
    if variant is None:
        raise ConfigError("kernel.variant", "required")
    try:
        kernel = make_kernel(variant, **kern)
    except KeyError as exc:
        raise ConfigError(f"kernel.{exc.args[0]}", f"required for variant {variant!r}") from exc
    except (TypeError, ValueError) as exc:
        raise ConfigError("kernel", str(exc)) from exc

    lev = _table(data, "levy")
    fam = lev.pop("family", None)
    if fam is None:
        raise ConfigError("levy.family", "required")
    try:
        levy = levy_measure(fam, **lev)
    except KeyError as exc:
        raise ConfigError(f"levy.{exc.args[0]}", f"required for family {fam!r}") from exc
    except (TypeError, ValueError) as exc:
        raise ConfigError("levy", str(exc)) from exc

    mix = _table(data, "mixing", required=False)
    if mix:
        mfam = mix.pop("family", None)
        if mfam is None:
            raise ConfigError("mixing.family", "required")
        try:
            mixing = mixing_measure(mfam, **mix)
        except KeyError as exc:
            raise ConfigError(f"mixing.{exc.args[0]}", f"required for family {mfam!r}") from exc
        except (TypeError, ValueError) as exc:
            raise ConfigError("mixing", str(exc)) from exc
    else:
        mixing = kernel.default_mixing()
        if mixing is None:
            raise ConfigError("mixing", f"required for kernel {variant!r}")

    win = _table(data, "windows", required=False)
    for k in win:
        if k not in WINDOW_KEYS:
            raise ConfigError(f"windows.{k}", f"unknown key (allowed: {sorted(WINDOW_KEYS)})")
    if win.get("s_min") is not None and float(win["s_min"]) > 0:
        raise ConfigError("windows.s_min", "must be <= 0")
    if win.get("eps") is not None and float(win["eps"]) <= 0:
        raise ConfigError("windows.eps", "must be > 0")
    windows = Windows(
        s_min=None if win.get("s_min") is None else float(win["s_min"]),
        eps=None if win.get("eps") is None else float(win["eps"]),
        v_window=None if win.get("v_window") is None else tuple(float(v) for v in win["v_window"]),
        scaled_cutoff=None if win.get("scaled_cutoff") is None else float(win["scaled_cutoff"]),
        tol=float(win.get("tol", 1e-6)),
    )
    grid = dict(GRID_DEFAULTS)
    grid.update(_table(data, "grid", required=False))
    if float(grid["t_max"]) < 1:
        raise ConfigError("grid.t_max", "must be >= 1")
    if int(grid["points_per_decade"]) < 1:
        raise ConfigError("grid.points_per_decade", "must be >= 1")
    grid = {"t_max": float(grid["t_max"]), "points_per_decade": int(grid["points_per_decade"])}
    name = str(data.get("name", "model"))
    model = ModelSpec(a, b, levy, mixing, kernel, windows, centering, name)
    return ResolvedConfig(raw, model, grid, _table(data, "run", required=False))


def load(path: str | Path) -> ResolvedConfig:
    return build(load_raw(path))

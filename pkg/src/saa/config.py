"""Run configuration: JSON document to dataclasses, with validation."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Mapping

from saa.errors import ConfigError


@dataclass(frozen=True)
class Tolerances:
    eps_sing: float = 1e-9  # |h_c0c| below this is degenerate
    eps_cls: float = 1e-9  # band around |h_I| = 1 for classification
    tol_inv: float = 1e-7  # locus drift flagging an extremal as invalid
    tol_sglc: float = 1e-8  # strict Legendre margin
    tol_t: float = 1e-8  # relative time tolerance of root refinement (times T)
    tol_eig: float = 1e-8  # relative eigenvalue cut for the Morse index

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not isinstance(v, (int, float)) or not v > 0:
                raise ConfigError(f"tolerance {f.name} must be a positive number, got {v!r}")


@dataclass(frozen=True)
class Seed:
    q0: tuple
    p_guess: tuple


@dataclass(frozen=True)
class RunConfig:
    system: Mapping[str, Any]
    seed: Seed
    T: float
    n_steps: int = 20000
    grid: int = 400
    tolerances: Tolerances = field(default_factory=Tolerances)
    project: bool = False
    convention: str = "rev"
    morse_check: bool = False
    dump_jacobian: bool = False
    out: str = "out"

    def __post_init__(self):
        if not self.T > 0:
            raise ConfigError(f"T must be positive, got {self.T!r}")
        if self.n_steps < 10:
            raise ConfigError(f"n_steps must be >= 10, got {self.n_steps}")
        if self.grid < 1:
            raise ConfigError(f"grid must be >= 1, got {self.grid}")
        if self.convention not in ("rev", "fwd"):
            raise ConfigError(f"convention must be 'rev' or 'fwd', got {self.convention!r}")

    def with_overrides(self, **kw) -> "RunConfig":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})

    def to_dict(self) -> dict:
        d = asdict(self)
        d["system"] = dict(self.system)
        return d


_TOP_KEYS = {"system", "seed", "T", "n_steps", "grid", "tolerances", "project", "convention", "morse_check",
             "dump_jacobian", "out"}


def _vector(doc: Mapping, key: str) -> tuple:
    v = doc.get(key)
    if not isinstance(v, list) or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in v):
        raise ConfigError(f"seed.{key} must be a list of numbers")
    return tuple(float(x) for x in v)


def config_from_dict(doc: Any) -> RunConfig:
    if not isinstance(doc, Mapping):
        raise ConfigError("config must be a JSON object")
    unknown = set(doc) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    for key in ("system", "seed", "T"):
        if key not in doc:
            raise ConfigError(f"config is missing required key {key!r}")
    if not isinstance(doc["system"], Mapping):
        raise ConfigError("'system' must be an object")
    seed = doc["seed"]
    if not isinstance(seed, Mapping):
        raise ConfigError("'seed' must be an object with q0 and p_guess")
    tol = doc.get("tolerances", {})
    if not isinstance(tol, Mapping):
        raise ConfigError("'tolerances' must be an object")
    try:
        tolerances = Tolerances(**tol)
    except TypeError as exc:
        raise ConfigError(f"bad tolerances: {exc}") from exc
    try:
        T = float(doc["T"])
        n_steps = int(doc.get("n_steps", 20000))
        grid = int(doc.get("grid", 400))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad numeric field: {exc}") from exc
    return RunConfig(
        system=dict(doc["system"]),
        seed=Seed(_vector(seed, "q0"), _vector(seed, "p_guess")),
        T=T,
        n_steps=n_steps,
        grid=grid,
        tolerances=tolerances,
        project=bool(doc.get("project", False)),
        convention=str(doc.get("convention", "rev")),
        morse_check=bool(doc.get("morse_check", False)),
        dump_jacobian=bool(doc.get("dump_jacobian", False)),
        out=str(doc.get("out", "out")),
    )


def load_config(path: str | Path) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from exc
    return config_from_dict(doc)

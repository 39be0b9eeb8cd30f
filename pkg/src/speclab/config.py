"""Experiment configuration: one JSON document per run."""

from __future__ import annotations

import json
import re
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .errors import ConfigError
from .grid import Grid, PotentialSpec, build_grid
from .profiles import DyadicFamily, make_dyadic_family, profile_from_dict

CHECK_TYPES = (
    "gaussian_bound",
    "decay_sweep",
    "oscillatory_ratio",
    "feynman_kac",
    "hebisch_series",
    "littlewood_paley",
)


@dataclass
class GridParams:
    x_min: float = -20.0
    x_max: float = 20.0
    n_points: int = 1024
    boundary: str = "dirichlet"

    def build(self) -> Grid:
        return build_grid(self.x_min, self.x_max, self.n_points, self.boundary)


@dataclass
class FamilyParams:
    kind: str = "inhomogeneous"
    j_range: list = field(default_factory=lambda: [-8, 8])
    partition: str = "linear"
    bump: dict = field(default_factory=lambda: {"name": "bump", "params": {"a": 1.0}})

    def build(self) -> DyadicFamily:
        j_min, j_max = self.j_range
        return make_dyadic_family(self.kind, j_min, j_max, profile_from_dict(self.bump), self.partition)


@dataclass
class QuadratureParams:
    tol: float = 1e-8
    k_trunc: int = 256
    n_y: int = 25
    n_r: int = 481


@dataclass
class MonteCarloParams:
    paths: int = 100_000
    steps: int | None = None
    seed: int = 0


_SECTIONS = {
    "grid": GridParams,
    "family": FamilyParams,
    "quadrature": QuadratureParams,
    "monte_carlo": MonteCarloParams,
}


@dataclass
class ExperimentConfig:
    name: str
    description: str = ""
    claim: str = ""
    potential: dict = field(default_factory=lambda: {"kind": "free"})
    grid: GridParams = field(default_factory=GridParams)
    family: FamilyParams = field(default_factory=FamilyParams)
    alpha: list = field(default_factory=lambda: [0])
    N: list = field(default_factory=lambda: [0, 1, 2])
    t_grid: list = field(default_factory=lambda: [0.1, 1.0, 10.0])
    quadrature: QuadratureParams = field(default_factory=QuadratureParams)
    monte_carlo: MonteCarloParams = field(default_factory=MonteCarloParams)
    output_dir: str | None = None
    checks: list = field(default_factory=list)

    def potential_spec(self) -> PotentialSpec:
        return PotentialSpec.from_dict(self.potential)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    @classmethod
    def from_dict(cls, d: dict, text: str | None = None) -> "ExperimentConfig":
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object", 1)
        known = {f.name for f in fields(cls)}
        for key in d:
            if key not in known:
                raise ConfigError(f"unknown field {key!r}", _line_of(text, key))
        if "name" not in d:
            raise ConfigError("missing required field 'name'", 1)
        kw = dict(d)
        for key, typ in _SECTIONS.items():
            if key in kw:
                sub = kw[key]
                if not isinstance(sub, dict):
                    raise ConfigError(f"{key!r} must be an object", _line_of(text, key))
                allowed = {f.name for f in fields(typ)}
                bad = [k for k in sub if k not in allowed]
                if bad:
                    raise ConfigError(f"unknown field {bad[0]!r} in {key!r}", _line_of(text, bad[0]))
                kw[key] = typ(**sub)
        cfg = cls(**kw)
        cfg._validate(text)
        return cfg

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(exc.msg, exc.lineno) from None
        return cls.from_dict(d, text)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        return cls.from_json(Path(path).read_text())

    def _validate(self, text):
        try:
            self.potential_spec()
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad potential: {exc}", _line_of(text, "potential")) from None
        if self.grid.n_points < 16 or not self.grid.x_min < self.grid.x_max:
            raise ConfigError("grid needs n_points >= 16 and x_min < x_max", _line_of(text, "grid"))
        if len(self.family.j_range) != 2 or self.family.j_range[0] > self.family.j_range[1]:
            raise ConfigError("family.j_range must be [j_min, j_max]", _line_of(text, "j_range"))
        if any(a not in (0, 1) for a in self.alpha):
            raise ConfigError("alpha entries must be 0 or 1", _line_of(text, "alpha"))
        if any(t <= 0 for t in self.t_grid):
            raise ConfigError("t_grid entries must be positive", _line_of(text, "t_grid"))
        names = set()
        for chk in self.checks:
            if not isinstance(chk, dict) or "type" not in chk or "name" not in chk:
                raise ConfigError("each check needs 'type' and 'name'", _line_of(text, "checks"))
            if chk["type"] not in CHECK_TYPES:
                raise ConfigError(f"unknown check type {chk['type']!r}", _line_of(text, chk["type"]))
            if chk["name"] in names:
                raise ConfigError(f"duplicate check name {chk['name']!r}", _line_of(text, chk["name"]))
            names.add(chk["name"])


def _line_of(text: str | None, token: str) -> int | None:
    """First line containing the JSON string ``"token"``."""
    if text is None:
        return None
    pat = re.compile(r'"' + re.escape(str(token)) + r'"')
    for i, line in enumerate(text.splitlines(), 1):
        if pat.search(line):
            return i
    return None

"""JSON run configuration."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

from .coeffs import as_alpha
from .spectral import Grid2D, ModelSpec

__all__ = ["ConfigError", "RunConfig"]

_REQUIRED = ("model", "alpha", "epsilon", "scheme", "grid", "dt", "t_final", "initial")
_INITIAL_KINDS = ("zero", "constant", "seven_circles", "uniform_random", "manufactured")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    """Everything needed to reproduce one simulation.

    ``grid`` is ``{"nx": int, "ny": int, "domain": "0-2pi" | "pm-pi"}`` and
    ``initial`` is ``{"kind": ...}`` plus kind-specific keys
    (``value`` for ``constant``; ``lo``, ``hi``, ``seed`` for ``uniform_random``).
    """

    model: str
    alpha: float
    epsilon: float
    scheme: str
    grid: dict
    dt: float
    t_final: float
    initial: dict
    c0_shift: float = 1.0
    snapshots: int = 10
    dealias: bool = False
    output_dir: str | None = None

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.model not in ("AC", "CH"):
            raise ConfigError(f"model must be AC or CH, got {self.model!r}")
        if self.scheme not in ("SAV", "IMEX"):
            raise ConfigError(f"scheme must be SAV or IMEX, got {self.scheme!r}")
        try:
            as_alpha(self.alpha)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.scheme == "IMEX" and self.model != "AC":
            raise ConfigError("the IMEX scheme is defined for the Allen-Cahn model only")
        if not (self.dt > 0 and self.t_final > 0 and self.epsilon > 0):
            raise ConfigError("dt, t_final and epsilon must be positive")
        n = self.t_final / self.dt
        if abs(n - round(n)) > 1e-9 * max(1.0, n) or round(n) < 1:
            raise ConfigError("t_final must be a whole number of time steps")
        for key in ("nx", "ny", "domain"):
            if key not in self.grid:
                raise ConfigError(f"grid needs key {key!r}")
        if self.grid["domain"] not in ("0-2pi", "pm-pi"):
            raise ConfigError(f"grid domain must be '0-2pi' or 'pm-pi', got {self.grid['domain']!r}")
        kind = self.initial.get("kind")
        if kind not in _INITIAL_KINDS:
            raise ConfigError(f"initial kind must be one of {_INITIAL_KINDS}, got {kind!r}")
        if kind == "manufactured" and (self.model != "AC" or self.grid["domain"] != "pm-pi"):
            raise ConfigError("the manufactured problem needs AC on [-pi, pi]^2")
        if kind == "seven_circles" and self.grid["domain"] != "0-2pi":
            raise ConfigError("seven-circle data needs the [0, 2pi]^2 domain")
        if not self.c0_shift >= 0:
            raise ConfigError("c0_shift must be non-negative")

    @property
    def n_steps(self):
        return int(round(self.t_final / self.dt))

    def space(self) -> Grid2D:
        g = self.grid
        origin = 0.0 if g["domain"] == "0-2pi" else -math.pi
        return Grid2D(int(g["nx"]), int(g["ny"]), x0=origin, y0=origin, dealias=self.dealias)

    def model_spec(self) -> ModelSpec:
        return ModelSpec(self.model, float(self.epsilon))

    @classmethod
    def from_dict(cls, data: dict):
        missing = [k for k in _REQUIRED if k not in data]
        if missing:
            raise ConfigError(f"config is missing required keys: {', '.join(missing)}")
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        return cls(**data)

    @classmethod
    def from_json(cls, text: str):
        return cls.from_dict(json.loads(text))

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_json(fh.read())

    def to_dict(self):
        return asdict(self)

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

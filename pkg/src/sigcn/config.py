"""Run configuration: JSON file, then explicit overrides, on top of defaults."""

import json
from dataclasses import asdict, dataclass, fields
from pathlib import Path

from .episodes import GeneratorConfig
from .errors import ConfigError, MissingFileError


@dataclass
class Config:
    t: float = 0.7
    k: int = 5
    s: int = 10
    alpha: float = 0.5
    beta: float = 0.5
    region_grid: int = 4
    channels: int = 8
    height: int = 16
    width: int = 16
    shots: int = 1
    sigma: float = 0.0
    noise_mid: float = 0.6
    noise_high: float = 0.4
    aspp_rates: tuple = (1, 2, 4)
    lr: float = 0.05
    steps: int = 500
    seed: int = 0

    def validate(self) -> "Config":
        if not 0.0 <= self.t <= 1.0:
            raise ConfigError(f"t={self.t} outside [0, 1]")
        if min(self.k, self.s, self.region_grid) < 1:
            raise ConfigError("k, s and region_grid must be >= 1")
        if self.alpha < 0 or self.beta < 0:
            raise ConfigError("alpha and beta must be >= 0")
        if self.region_grid > min(self.height, self.width):
            raise ConfigError("region_grid exceeds the feature map size")
        if not self.aspp_rates or min(self.aspp_rates) < 1:
            raise ConfigError("aspp_rates must be positive")
        if self.lr <= 0 or self.steps < 0:
            raise ConfigError("lr must be > 0 and steps >= 0")
        self.generator().validate()
        return self

    def generator(self) -> GeneratorConfig:
        return GeneratorConfig(self.channels, self.height, self.width, self.shots, self.sigma,
                               self.noise_mid, self.noise_high)

    def replace(self, **overrides) -> "Config":
        known = {f.name for f in fields(self)}
        unknown = set(overrides) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        values = asdict(self)
        values.update({k: v for k, v in overrides.items() if v is not None})
        values["aspp_rates"] = tuple(int(r) for r in values["aspp_rates"])
        return Config(**values).validate()

    def to_json(self) -> str:
        d = asdict(self)
        d["aspp_rates"] = list(d["aspp_rates"])
        return json.dumps(d, indent=2, sort_keys=True)


def load_config(path=None, **overrides) -> Config:
    """Defaults < JSON file < overrides (``None`` overrides are ignored)."""
    base = {}
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise MissingFileError(f"no config file at {p}")
        try:
            base = json.loads(p.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{p}: invalid JSON ({exc})") from exc
        if not isinstance(base, dict):
            raise ConfigError(f"{p}: config must be a JSON object")
    return Config().replace(**{**base, **{k: v for k, v in overrides.items() if v is not None}})

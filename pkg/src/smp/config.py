"""Run configuration shared by the command-line front end and figure recipes."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field, fields
from fractions import Fraction
from pathlib import Path
from typing import Optional

from .analytics import DiscreteRandomSpec, DiscreteUniformSpec
from .continuum import ContinuousUniformSpec, StateDependentSpec
from .distributions import LawError, PointMass, law_from_dict

MODELS = ("discrete_uniform", "discrete_random", "continuous_uniform", "state_dependent")
OUTPUTS = ("occupation", "moments", "bursts", "histogram", "passage", "stationary",
           "cumulative", "interval", "paths")
CONFIG_DIR = Path(__file__).parent / "configs"


class ConfigError(ValueError):
    """Invalid configuration; ``field`` names the offending entry."""

    def __init__(self, field_name, message):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass
class RunConfig:
    model: str
    params: dict = field(default_factory=dict)
    outputs: list = field(default_factory=list)
    seed: int = 0
    ntraj: int = 100_000
    horizon: Optional[float] = None
    snapshots: list = field(default_factory=list)
    gammas: list = field(default_factory=lambda: [1.0])
    tau: Optional[int] = None
    M: list = field(default_factory=list)
    output_dir: str = "out"

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d, check_specs=True):
        if not isinstance(d, dict):
            raise ConfigError("config", "top level must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(sorted(unknown)[0], "unknown config field")
        if "model" not in d:
            raise ConfigError("model", "missing")
        cfg = cls(**d)
        cfg.validate(check_specs)
        return cfg

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, ensure_ascii=False)

    @classmethod
    def from_json(cls, text):
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError("config", f"malformed JSON ({exc})") from None
        return cls.from_dict(d)

    def digest(self):
        return hashlib.sha256(self.to_json().encode("utf-8")).hexdigest()

    def _param(self, name, kind=float, required=True):
        if name not in self.params:
            if required:
                raise ConfigError(f"params.{name}", "missing")
            return None
        v = self.params[name]
        try:
            if kind is float:
                if isinstance(v, list):
                    return [float(x) for x in v]
                return float(v)
            return kind(v)
        except (TypeError, ValueError):
            raise ConfigError(f"params.{name}", f"not a valid {kind.__name__}: {v!r}") from None

    def validate(self, check_specs=True):
        if self.model not in MODELS:
            raise ConfigError("model", f"must be one of {list(MODELS)}, got {self.model!r}")
        for o in self.outputs:
            if o not in OUTPUTS:
                raise ConfigError("outputs", f"unknown product {o!r}")
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed", "must be an integer in [0, 2**64)")
        if not isinstance(self.ntraj, int) or self.ntraj < 0:
            raise ConfigError("ntraj", "must be a nonnegative integer")
        if self.horizon is not None and not self.horizon >= 0:
            raise ConfigError("horizon", "must be nonnegative")
        if self.tau is not None and (not isinstance(self.tau, int) or self.tau < 0):
            raise ConfigError("tau", "must be a nonnegative integer")
        for m in self.M:
            if not isinstance(m, int) or m < 0:
                raise ConfigError("M", "levels must be nonnegative integers")
        for g in self.gammas:
            if not isinstance(g, (int, float)) or not math.isfinite(g):
                raise ConfigError("gammas", "must be finite numbers")
        if self.horizon is not None:
            for s in self.snapshots:
                if not 0 <= s <= self.horizon:
                    raise ConfigError("snapshots", f"time {s} outside [0, horizon]")
        if not check_specs:
            return self
        try:
            self.build_specs()
        except ConfigError:
            raise
        except (LawError, ValueError) as exc:
            raise ConfigError("params", str(exc)) from None
        return self

    def r_values(self):
        r = self.params.get("r")
        return [float(x) for x in r] if isinstance(r, list) else [float(r)]

    def build_specs(self):
        """Model specs for this config (several when a parameter is a list)."""
        if self.model == "discrete_uniform":
            mu = self._param("mu")
            if isinstance(mu, list):
                raise ConfigError("params.mu", "must be a single number")
            self._param("r")
            return [DiscreteUniformSpec(mu, r) for r in self.r_values()]
        if self.model == "discrete_random":
            self._param("r")
            laws = {}
            for name, default in (("multiplier_law", None), ("reset_law", PointMass(1.0)),
                                  ("initial_law", PointMass(1.0))):
                if name in self.params:
                    try:
                        laws[name] = law_from_dict(self.params[name])
                    except LawError as exc:
                        raise ConfigError(f"params.{name}", str(exc)) from None
                elif default is None:
                    raise ConfigError(f"params.{name}", "missing")
                else:
                    laws[name] = default
            return [DiscreteRandomSpec(laws["multiplier_law"], laws["reset_law"], r, laws["initial_law"])
                    for r in self.r_values()]
        if self.model == "continuous_uniform":
            lam, q = self._param("lambda"), self._param("q")
            try:
                return [ContinuousUniformSpec(lam, q)]
            except ValueError as exc:
                raise ConfigError("params", str(exc)) from None
        lambda0, q = self._param("lambda0"), self._param("q")
        alphas = self._param("alpha")
        alphas = alphas if isinstance(alphas, list) else [alphas]
        for a in alphas:
            if a < 0:
                raise ConfigError("params.alpha", "must be >= 0 (otherwise probability leaks)")
        try:
            return [StateDependentSpec.algebraic(lambda0, a, q) for a in alphas]
        except ValueError as exc:
            raise ConfigError("params", str(exc)) from None

    def exact_param(self, name):
        """Decimal parameter as an exact rational (``0.1`` -> ``1/10``)."""
        v = self.params[name]
        return Fraction(str(v)) if not isinstance(v, str) else Fraction(v)


def load_config(path_or_name):
    """Read a config file; bare names fall back to the shipped figure recipes."""
    p = Path(path_or_name)
    if not p.exists() and (CONFIG_DIR / p.name).exists():
        p = CONFIG_DIR / p.name
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path_or_name}: {exc.strerror}") from None
    return RunConfig.from_json(text)

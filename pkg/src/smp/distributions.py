"""Parameter laws for multipliers and reset values.

A law describes the positive random variable (a multiplier ``mu`` or a reset
value ``s``). Each law knows its exact ``gamma``-order moments and the Fourier
transform of its log-variable density, ``E[exp(-2 pi i eta ln mu)]``, which
accepts complex ``eta`` so that ``eta = i gamma / (2 pi)`` recovers the moment.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass, field
import numpy as np
from scipy import integrate

from .rng import RandomStream

TWO_PI = 2.0 * math.pi
_NORM_TOL = 1e-12
_RESCALE_TOL = 1e-9
QUAD_RTOL = 1e-9


class LawError(ValueError):
    """Invalid law parameters."""


class QuadratureWarning(RuntimeWarning):
    """Quadrature finished above the requested tolerance."""


def _phase(eta, nu):
    return np.exp(-1j * TWO_PI * np.asarray(eta) * nu)


@dataclass(frozen=True)
class ParamLaw:
    """Base class; concrete laws are the frozen dataclasses below."""

    kind = "abstract"

    def moment(self, gamma):
        raise NotImplementedError

    def log_moment(self, gamma):
        """``ln E[mu**gamma]``, computed without overflow where possible."""
        return math.log(self.moment(gamma))

    def transform(self, u1, u2):
        """Map two arrays of uniforms to draws of the law."""
        return np.exp(self.log_transform(u1, u2))

    def log_transform(self, u1, u2):
        raise NotImplementedError

    def log_char(self, eta):
        raise NotImplementedError

    def log_density(self, nu):
        """Density of ``nu = ln mu`` (continuous laws only)."""
        raise NotImplementedError(f"{self.kind} has no log-axis density")

    @property
    def log_support(self):
        raise NotImplementedError

    @property
    def quad_window(self):
        """Finite integration range on the log axis."""
        return self.log_support

    def to_dict(self):
        raise NotImplementedError


@dataclass(frozen=True)
class PointMass(ParamLaw):
    value: float
    kind = "point_mass"

    def __post_init__(self):
        if not self.value > 0:
            raise LawError(f"point_mass value must be positive, got {self.value}")

    def moment(self, gamma):
        return _safe_pow_exp(gamma * math.log(self.value))

    def log_moment(self, gamma):
        return gamma * math.log(self.value)

    def transform(self, u1, u2):
        return np.full(np.shape(u1), float(self.value))

    def log_transform(self, u1, u2):
        return np.full(np.shape(u1), math.log(self.value))

    def log_char(self, eta):
        return _phase(eta, math.log(self.value))

    @property
    def log_support(self):
        v = math.log(self.value)
        return v, v

    def to_dict(self):
        return {"kind": self.kind, "value": self.value}


@dataclass(frozen=True)
class TwoDelta(ParamLaw):
    """Mass ``a`` at ``mu0`` and ``1 - a`` at ``1 / mu0``."""

    a: float
    mu0: float
    kind = "two_delta"

    def __post_init__(self):
        if not 0.0 <= self.a <= 1.0:
            raise LawError(f"two_delta a must lie in [0, 1], got {self.a}")
        if not self.mu0 > 1.0:
            raise LawError(f"two_delta mu0 must exceed 1, got {self.mu0}")

    @property
    def atoms(self):
        return ((self.mu0, self.a), (1.0 / self.mu0, 1.0 - self.a))

    def moment(self, gamma):
        L = math.log(self.mu0)
        return self.a * _safe_pow_exp(gamma * L) + (1.0 - self.a) * _safe_pow_exp(-gamma * L)

    def log_moment(self, gamma):
        L = math.log(self.mu0)
        terms = [math.log(w) + s * gamma * L for s, w in ((1, self.a), (-1, 1.0 - self.a)) if w > 0]
        return _logsumexp(terms)

    def transform(self, u1, u2):
        return np.where(np.asarray(u1) < self.a, self.mu0, 1.0 / self.mu0)

    def log_transform(self, u1, u2):
        L = math.log(self.mu0)
        return np.where(np.asarray(u1) < self.a, L, -L)

    def log_char(self, eta):
        L = math.log(self.mu0)
        return self.a * _phase(eta, L) + (1.0 - self.a) * _phase(eta, -L)

    @property
    def log_support(self):
        L = math.log(self.mu0)
        return -L, L

    def to_dict(self):
        return {"kind": self.kind, "a": self.a, "mu0": self.mu0}


@dataclass(frozen=True)
class LogUniform(ParamLaw):
    """``ln mu`` uniform on ``[ln lo, ln hi]``."""

    lo: float
    hi: float
    kind = "log_uniform"

    def __post_init__(self):
        if not 0 < self.lo < self.hi:
            raise LawError(f"log_uniform needs 0 < lo < hi, got lo={self.lo}, hi={self.hi}")

    def moment(self, gamma):
        a, b = math.log(self.lo), math.log(self.hi)
        if gamma == 0:
            return 1.0
        # (e^{gb} - e^{ga}) / (g (b - a)) written through expm1
        hi = max(gamma * a, gamma * b)
        d = abs(gamma * (b - a))
        try:
            return math.exp(hi) * -math.expm1(-d) / (d)
        except OverflowError:
            return math.inf

    def log_moment(self, gamma):
        a, b = math.log(self.lo), math.log(self.hi)
        if gamma == 0:
            return 0.0
        hi = max(gamma * a, gamma * b)
        d = abs(gamma * (b - a))
        return hi + math.log(-math.expm1(-d)) - math.log(d)

    def log_transform(self, u1, u2):
        a, b = math.log(self.lo), math.log(self.hi)
        return a + np.asarray(u1) * (b - a)

    def log_char(self, eta):
        a, b = math.log(self.lo), math.log(self.hi)
        eta = np.asarray(eta)
        z = -1j * TWO_PI * eta * (b - a)
        with np.errstate(invalid="ignore", divide="ignore"):
            ratio = np.where(z == 0, 1.0, np.expm1(z) / np.where(z == 0, 1.0, z))
        return _phase(eta, a) * ratio

    def log_density(self, nu):
        a, b = math.log(self.lo), math.log(self.hi)
        nu = np.asarray(nu, dtype=float)
        return np.where((nu >= a) & (nu <= b), 1.0 / (b - a), 0.0)

    @property
    def log_support(self):
        return math.log(self.lo), math.log(self.hi)

    def to_dict(self):
        return {"kind": self.kind, "lo": self.lo, "hi": self.hi}


@dataclass(frozen=True)
class LogNormal(ParamLaw):
    """``ln mu ~ Normal(mean_log, sd_log**2)``."""

    mean_log: float
    sd_log: float
    kind = "log_normal"

    def __post_init__(self):
        if not self.sd_log > 0:
            raise LawError(f"log_normal sd_log must be positive, got {self.sd_log}")

    def moment(self, gamma):
        return _safe_pow_exp(self.log_moment(gamma))

    def log_moment(self, gamma):
        return gamma * self.mean_log + 0.5 * (gamma * self.sd_log) ** 2

    def log_transform(self, u1, u2):
        # Box-Muller; 1 - u keeps the log argument in (0, 1]
        radius = np.sqrt(-2.0 * np.log1p(-np.asarray(u1)))
        return self.mean_log + self.sd_log * radius * np.cos(TWO_PI * np.asarray(u2))

    def log_char(self, eta):
        eta = np.asarray(eta)
        return np.exp(-1j * TWO_PI * eta * self.mean_log
                      - 2.0 * math.pi ** 2 * eta ** 2 * self.sd_log ** 2)

    def log_density(self, nu):
        z = (np.asarray(nu, dtype=float) - self.mean_log) / self.sd_log
        return np.exp(-0.5 * z * z) / (self.sd_log * math.sqrt(TWO_PI))

    @property
    def log_support(self):
        return -math.inf, math.inf

    @property
    def quad_window(self):
        return self.mean_log - 40 * self.sd_log, self.mean_log + 40 * self.sd_log

    def to_dict(self):
        return {"kind": self.kind, "mean_log": self.mean_log, "sd_log": self.sd_log}


@dataclass(frozen=True)
class EmpiricalAtoms(ParamLaw):
    """Finite list of ``(value, weight)`` atoms.

    Weights within 1e-9 of unit total are rescaled; anything further off is
    rejected.
    """

    atoms: tuple = field(default=())
    kind = "empirical_atoms"

    def __post_init__(self):
        atoms = tuple((float(v), float(w)) for v, w in self.atoms)
        if not atoms:
            raise LawError("empirical_atoms needs at least one atom")
        for v, w in atoms:
            if not v > 0:
                raise LawError(f"atom value must be positive, got {v}")
            if w < 0:
                raise LawError(f"atom weight must be nonnegative, got {w}")
        total = math.fsum(w for _, w in atoms)
        if abs(total - 1.0) > _RESCALE_TOL:
            raise LawError(f"atom weights sum to {total!r}, not 1")
        if abs(total - 1.0) > 0:
            atoms = tuple((v, w / total) for v, w in atoms)
        object.__setattr__(self, "atoms", atoms)

    @property
    def _values(self):
        return np.array([v for v, _ in self.atoms])

    @property
    def _weights(self):
        return np.array([w for _, w in self.atoms])

    def moment(self, gamma):
        return math.fsum(w * _safe_pow_exp(gamma * math.log(v)) for v, w in self.atoms)

    def log_moment(self, gamma):
        return _logsumexp([math.log(w) + gamma * math.log(v) for v, w in self.atoms if w > 0])

    def _index(self, u):
        cum = np.cumsum(self._weights)
        idx = np.searchsorted(cum, np.asarray(u), side="right")
        return np.minimum(idx, len(self.atoms) - 1)

    def transform(self, u1, u2):
        return self._values[self._index(u1)]

    def log_transform(self, u1, u2):
        return np.log(self._values)[self._index(u1)]

    def log_char(self, eta):
        eta = np.asarray(eta)
        out = np.zeros(np.shape(eta), dtype=complex)
        for v, w in self.atoms:
            out = out + w * _phase(eta, math.log(v))
        return out

    @property
    def log_support(self):
        logs = np.log(self._values)
        return float(logs.min()), float(logs.max())

    def to_dict(self):
        return {"kind": self.kind, "atoms": [[v, w] for v, w in self.atoms]}


_KINDS = {
    "point_mass": (PointMass, ("value",)),
    "two_delta": (TwoDelta, ("a", "mu0")),
    "log_uniform": (LogUniform, ("lo", "hi")),
    "log_normal": (LogNormal, ("mean_log", "sd_log")),
    "empirical_atoms": (EmpiricalAtoms, ("atoms",)),
}


def law_from_dict(d):
    """Build a law from its JSON form, e.g. ``{"kind": "two_delta", "a": 0.5, "mu0": 2.0}``."""
    if not isinstance(d, dict) or "kind" not in d:
        raise LawError("law must be an object with a 'kind' field")
    try:
        cls, names = _KINDS[d["kind"]]
    except KeyError:
        raise LawError(f"unknown law kind {d['kind']!r}; expected one of {sorted(_KINDS)}") from None
    extra = set(d) - set(names) - {"kind"}
    if extra:
        raise LawError(f"unexpected fields for {d['kind']}: {sorted(extra)}")
    missing = [n for n in names if n not in d]
    if missing:
        raise LawError(f"missing fields for {d['kind']}: {missing}")
    if cls is EmpiricalAtoms:
        return EmpiricalAtoms(tuple(tuple(a) for a in d["atoms"]))
    return cls(*(float(d[n]) for n in names))


def sample(law: ParamLaw, stream: RandomStream, size=None):
    """Draw from ``law`` using ``stream``; a float when ``size`` is None."""
    n = 1 if size is None else int(size)
    u = stream.uniforms(2 * n).reshape(n, 2)
    out = law.transform(u[:, 0], u[:, 1])
    return float(out[0]) if size is None else out


def law_moment(law: ParamLaw, gamma: float) -> float:
    """Exact ``E[mu**gamma]``; ``math.inf`` when it overflows a double."""
    if not math.isfinite(gamma):
        raise ValueError("gamma must be finite")
    return law.moment(gamma)


def log_char(law: ParamLaw, eta):
    """Fourier transform of the log-variable density at ``eta`` (real or complex).

    Scalar input gives a Python complex; arrays give complex arrays.
    """
    out = law.log_char(eta)
    return complex(out) if np.ndim(out) == 0 else out


def log_char_quad(law: ParamLaw, eta: float, rtol: float = QUAD_RTOL):
    """Quadrature evaluation of ``log_char`` for laws with a log-axis density.

    Returns ``(value, abserr)``; warns with :class:`QuadratureWarning` when the
    reported error exceeds ``rtol``.
    """
    lo, hi = law.quad_window
    f = law.log_density
    w = TWO_PI * float(eta)
    kw = dict(epsrel=rtol, epsabs=1e-14, limit=400)
    re_, e1 = integrate.quad(lambda v: float(f(v)) * math.cos(w * v), lo, hi, **kw)
    im_, e2 = integrate.quad(lambda v: float(f(v)) * math.sin(w * v), lo, hi, **kw)
    err = math.hypot(e1, e2)
    value = complex(re_, -im_)
    if err > rtol * max(abs(value), 1e-300):
        warnings.warn(f"log_char quadrature error {err:.3g} above rtol {rtol}", QuadratureWarning)
    return value, err


def _safe_pow_exp(v):
    try:
        return math.exp(v)
    except OverflowError:
        return math.inf


def _logsumexp(terms):
    m = max(terms)
    if m == -math.inf:
        return m
    return m + math.log(math.fsum(math.exp(t - m) for t in terms))

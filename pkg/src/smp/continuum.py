"""Continuous-time multiplicative growth with resets to ``x = 1``.

Uniform model: ``dx/dt = lam * x`` between resets arriving at rate ``q``.
State-dependent model: ``dx/dt = lam(x)``, resets at hazard ``q(x)``; the
algebraic family ``lam(x) = lambda0 * x**(1 - alpha)`` with constant ``q``
has a closed-form stationary law.

User-supplied ``lam`` / ``q`` callables must be re-entrant; they are called
from quadrature routines and possibly from several threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import integrate

QUAD_RTOL = 1e-8
LEAK_CUTOFF = 1e12
LEAK_THRESHOLD = 1e3


class NormalizationError(RuntimeError):
    """The stationary density cannot be normalized."""


def _default_f0(x):
    x = np.asarray(x, dtype=float)
    return np.where(x >= 1, np.exp(1.0 - np.minimum(x, 1e300)), 0.0)


def _default_f0_cdf(x):
    x = np.asarray(x, dtype=float)
    return np.where(x >= 1, -np.expm1(1.0 - np.maximum(x, 1.0)), 0.0)


def _default_f0_ppf(u):
    return 1.0 - np.log1p(-np.asarray(u))


def _quad_tail(f, a, rtol=QUAD_RTOL):
    """``int_a^inf f(x) dx`` through ``u = 1/x`` (requires ``a >= 1``)."""
    val, err = integrate.quad(lambda u: f(1.0 / u) / (u * u), 0.0, 1.0 / a,
                              epsrel=rtol, epsabs=0.0, limit=500)
    return val, err


def integrate_density(f, lo=1.0, hi=math.inf, breakpoints=(), rtol=QUAD_RTOL):
    """Integrate a scalar density on ``[lo, hi]`` with optional breakpoints.

    The range is cut at the breakpoints; the unbounded piece is compactified.
    """
    cuts = sorted(b for b in breakpoints if lo < b < hi)
    edges = [lo, *cuts, hi]
    total = err = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        if math.isinf(b):
            if a < 1:
                raise ValueError("unbounded integration needs lo >= 1")
            v, e = _quad_tail(f, a, rtol)
        else:
            v, e = integrate.quad(f, a, b, epsrel=rtol, epsabs=0.0, limit=500)
        total += v
        err += e
    return total, err


@dataclass(frozen=True)
class ContinuousUniformSpec:
    """Constant growth rate ``lam`` and reset rate ``q``.

    ``f0`` is the initial density on ``[f0_support, inf)``; ``f0_cdf`` and
    ``f0_ppf`` are optional helpers (the CDF falls back to quadrature, the
    inverse CDF is needed only for simulation). The default initial density
    is ``exp(1 - x)``.
    """

    lam: float
    q: float
    f0: Callable = _default_f0
    f0_support: float = 1.0
    f0_cdf: Optional[Callable] = _default_f0_cdf
    f0_ppf: Optional[Callable] = _default_f0_ppf

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError(f"lam must be positive, got {self.lam}")
        if not self.q > 0:
            raise ValueError(f"q must be positive, got {self.q}")
        if self.f0_support < 1:
            raise ValueError("initial density must live on [1, inf)")

    @property
    def exponent(self):
        """Tail exponent ``q / lam`` (density decays as ``x**(-1 - q/lam)``)."""
        return self.q / self.lam

    def initial_cdf(self, x):
        if self.f0_cdf is not None:
            return np.asarray(self.f0_cdf(x), dtype=float)
        out = []
        for xi in np.atleast_1d(np.asarray(x, dtype=float)):
            if xi <= self.f0_support:
                out.append(0.0)
            else:
                out.append(integrate.quad(lambda v: float(self.f0(v)), self.f0_support, xi,
                                          epsrel=QUAD_RTOL, limit=500)[0])
        return np.asarray(out).reshape(np.shape(x))

    def check_normalized(self, tol=1e-9):
        total, _ = integrate_density(lambda v: float(self.f0(v)), lo=self.f0_support)
        if abs(total - 1) > tol:
            raise ValueError(f"initial density integrates to {total}, not 1")
        return total


def transient_density(spec: ContinuousUniformSpec, x, t: float):
    """Density at ``x >= 1`` and time ``t``.

    Above ``exp(lam t)`` it is the shifted, damped initial density; below it
    the power law ``(q/lam) x**(-1-q/lam)`` has already settled.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    x = np.asarray(x, dtype=float)
    shift = math.exp(-spec.lam * t)
    damp = math.exp(-(spec.lam + spec.q) * t)
    xs = x * shift
    initial = damp * np.where(xs >= spec.f0_support, spec.f0(np.maximum(xs, spec.f0_support)), 0.0)
    settled = spec.exponent * np.power(np.maximum(x, 1.0), -1.0 - spec.exponent)
    out = np.where(xs > 1.0, initial, settled)
    out = np.where(x < 1.0, 0.0, out)
    return out if out.ndim else float(out)


def transient_cdf(spec: ContinuousUniformSpec, x, t: float):
    """``P(X_t <= x)`` for the uniform model."""
    x = np.asarray(x, dtype=float)
    edge = spec.lam * t
    logx = np.log(np.maximum(x, 1.0))
    settled = -np.expm1(-spec.exponent * np.minimum(logx, edge))
    above = np.exp(-spec.q * t) * spec.initial_cdf(np.maximum(x, 1.0) * math.exp(-edge))
    out = np.where(logx > edge, settled + above, settled)
    out = np.where(x < 1.0, 0.0, out)
    return out if out.ndim else float(out)


def stationary_density_uniform(spec: ContinuousUniformSpec, x):
    x = np.asarray(x, dtype=float)
    out = np.where(x >= 1, spec.exponent * np.power(np.maximum(x, 1.0), -1.0 - spec.exponent), 0.0)
    return out if out.ndim else float(out)


def stationary_cdf_uniform(spec: ContinuousUniformSpec, x):
    x = np.asarray(x, dtype=float)
    out = np.where(x >= 1, -np.expm1(-spec.exponent * np.log(np.maximum(x, 1.0))), 0.0)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class StateDependentSpec:
    """Growth rate ``lam_fn(x) > 0`` and reset hazard ``q_fn(x) >= 0`` on ``[1, inf)``.

    Build the algebraic family with :meth:`algebraic`. ``hazard_bound`` is an
    upper bound on ``q`` used by thinning in simulation.
    """

    lam_fn: Callable
    q_fn: Callable
    family: Optional[tuple] = None
    hazard_bound: Optional[float] = None

    @classmethod
    def algebraic(cls, lambda0: float, alpha: float, q: float) -> "StateDependentSpec":
        if not lambda0 > 0:
            raise ValueError(f"lambda0 must be positive, got {lambda0}")
        if not q > 0:
            raise ValueError(f"q must be positive, got {q}")
        return cls(
            lam_fn=lambda x: lambda0 * np.power(x, 1.0 - alpha),
            q_fn=lambda x: q + 0.0 * np.asarray(x, dtype=float),
            family=(float(lambda0), float(alpha), float(q)),
            hazard_bound=float(q),
        )

    @property
    def is_algebraic(self):
        return self.family is not None

    @property
    def constant_q(self):
        return self.family[2] if self.family is not None else None


@dataclass(frozen=True)
class LeakCheck:
    no_leak: bool
    integral: float
    method: str  # "analytic" or "heuristic"
    detail: str = ""


def _rate_ratio(spec, x):
    return float(spec.q_fn(x)) / float(spec.lam_fn(x))


def check_no_leak(spec: StateDependentSpec) -> LeakCheck:
    """Decide whether ``int_1^inf q/lam dx`` diverges (no probability escapes).

    The algebraic family is decided exactly. Other inputs use a heuristic:
    the integral up to ``1e12`` is computed on a log axis and the verdict is
    "diverges" if it exceeds ``1e3`` or if its per-decade increments are not
    shrinking. The method field says which route produced the verdict.
    """
    if spec.is_algebraic:
        lambda0, alpha, q = spec.family
        if alpha >= 0:
            return LeakCheck(True, math.inf, "analytic", f"alpha={alpha} >= 0")
        return LeakCheck(False, q / (lambda0 * -alpha), "analytic", f"alpha={alpha} < 0")

    def g(s):
        x = math.exp(s)
        return _rate_ratio(spec, x) * x

    try:
        g(0.0)
    except Exception as exc:
        raise ValueError(f"rate functions are not evaluable: {exc}") from exc
    decade = math.log(10.0)
    n_dec = int(round(math.log10(LEAK_CUTOFF)))
    increments = []
    for i in range(n_dec):
        v, _ = integrate.quad(g, i * decade, (i + 1) * decade, epsrel=1e-10, epsabs=1e-300, limit=200)
        increments.append(v)
    total = math.fsum(increments)
    last, prev = increments[-1], increments[-2]
    non_decaying = last > 0 and last >= 0.9 * prev
    no_leak = total > LEAK_THRESHOLD or non_decaying
    detail = (f"heuristic: integral to {LEAK_CUTOFF:.0e} = {total:.6g}; "
              f"last decade {last:.3g}, previous {prev:.3g}")
    return LeakCheck(no_leak, total, "heuristic", detail)


def _algebraic_density(lambda0, alpha, q, x):
    x = np.asarray(x, dtype=float)
    xs = np.maximum(x, 1.0)
    if alpha == 0:
        out = (q / lambda0) * np.power(xs, -1.0 - q / lambda0)
    else:
        out = q / (lambda0 * np.power(xs, 1.0 - alpha)) * np.exp(-q * (np.power(xs, alpha) - 1.0) / (lambda0 * alpha))
    return np.where(x >= 1, out, 0.0)


def _algebraic_cdf(lambda0, alpha, q, x):
    x = np.asarray(x, dtype=float)
    xs = np.maximum(x, 1.0)
    if alpha == 0:
        arg = (q / lambda0) * np.log(xs)
    else:
        arg = q * (np.power(xs, alpha) - 1.0) / (lambda0 * alpha)
    return np.where(x >= 1, -np.expm1(-arg), 0.0)


class StationaryGeneral:
    """Normalized stationary density of the state-dependent model.

    ``norm`` is the asymptotic reset flux, fixed by unit normalization.
    """

    def __init__(self, spec: StateDependentSpec, rtol: float = QUAD_RTOL):
        self.spec = spec
        self.rtol = rtol
        self.leak = check_no_leak(spec)
        if not self.leak.no_leak:
            raise NormalizationError(f"probability leaks to large x ({self.leak.detail or self.leak.method})")
        if spec.is_algebraic:
            self.norm = spec.family[2]
            self.norm_error = 0.0
        else:
            total, err = integrate_density(self._unnormalized, rtol=rtol)
            if not (math.isfinite(total) and total > 0):
                raise NormalizationError(f"normalization integral is {total}; {self.leak.detail}")
            self.norm = 1.0 / total
            self.norm_error = err / total

    def exponent_integral(self, x):
        """``int_1^x q/lam dx'``."""
        if x <= 1:
            return 0.0
        v, _ = integrate.quad(lambda s: _rate_ratio(self.spec, math.exp(s)) * math.exp(s),
                              0.0, math.log(x), epsrel=self.rtol * 1e-2, epsabs=0.0, limit=500)
        return v

    def _unnormalized(self, x):
        return math.exp(-self.exponent_integral(x)) / float(self.spec.lam_fn(x))

    def __call__(self, x):
        if self.spec.is_algebraic:
            out = _algebraic_density(*self.spec.family, x)
            return out if np.ndim(out) else float(out)
        xs = np.asarray(x, dtype=float)
        flat = [self.norm * self._unnormalized(v) if v >= 1 else 0.0 for v in xs.ravel()]
        out = np.asarray(flat).reshape(xs.shape)
        return out if out.ndim else float(out)

    def cdf(self, x):
        if self.spec.is_algebraic:
            out = _algebraic_cdf(*self.spec.family, x)
            return out if np.ndim(out) else float(out)
        xs = np.asarray(x, dtype=float)
        flat = xs.ravel()
        svals = np.log(np.maximum(flat, 1.0))
        order = np.unique(svals)
        spec, norm = self.spec, self.norm

        # in s = ln x: E' = q x / lam, F' = norm exp(-E) x / lam
        def rhs(s, z):
            xv = math.exp(s)
            lam = float(spec.lam_fn(xv))
            return [float(spec.q_fn(xv)) * xv / lam, norm * math.exp(-z[0]) * xv / lam]

        if order[-1] > 0:
            sol = integrate.solve_ivp(rhs, (0.0, float(order[-1])), [0.0, 0.0], method="DOP853",
                                      t_eval=order, rtol=self.rtol * 1e-2, atol=1e-14)
            if not sol.success:
                raise NormalizationError(f"cdf integration failed: {sol.message}")
            table = dict(zip(order.tolist(), np.minimum(sol.y[1], 1.0).tolist()))
        else:
            table = {}
        out = np.array([table.get(sv, 0.0) if v > 1 else 0.0 for sv, v in zip(svals.tolist(), flat)])
        out = out.reshape(xs.shape)
        return out if out.ndim else float(out)

    def reset_flux(self):
        """Recompute the reset flux ``int q f dx`` from the normalized density."""
        v, _ = integrate_density(lambda x: float(self.spec.q_fn(x)) * float(self(x)), rtol=self.rtol)
        return v


def stationary_density_general(spec: StateDependentSpec, x):
    """Stationary density of the state-dependent model (normalized)."""
    return StationaryGeneral(spec)(x)

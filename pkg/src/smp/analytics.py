"""Closed-form results for the discrete-time processes.

Uniform process: ``x`` is multiplied by ``mu`` with probability ``1 - r`` or
reset to 1 with probability ``r``, so ``x_t = mu**m`` for an integer level
``m``. Random process: multipliers, reset values and the initial value are
drawn from :mod:`smp.distributions` laws.

Moments share one affine recursion ``M_{t+1} = phi * M_t + drive``; powers of
``phi`` are taken in log space so horizons of 1e6 steps never overflow.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .distributions import ParamLaw, PointMass, TwoDelta, log_char

BRACKET_STEP = 1.0
BRACKET_CAP = 512.0
ROOT_TOL = 1e-12
DEFAULT_GRID_POINTS = 2 ** 14
ALIASING_TOL = 1e-3


class DomainError(ValueError):
    """Parameters outside a formula's domain."""


class RootFindingError(RuntimeError):
    """Root bracketing or bisection failed."""


class AliasingWarning(RuntimeWarning):
    """Probability mass may fall outside the inversion window."""


def _check_r(r):
    if not 0 < r < 1:
        raise DomainError(f"reset probability r must lie in (0, 1), got {r}")


@dataclass(frozen=True)
class DiscreteUniformSpec:
    mu: float
    r: float

    def __post_init__(self):
        if not self.mu > 0 or self.mu == 1:
            raise DomainError(f"mu must be positive and != 1, got {self.mu}")
        _check_r(self.r)

    @property
    def log_mu(self):
        return math.log(self.mu)


@dataclass(frozen=True)
class DiscreteRandomSpec:
    multiplier_law: ParamLaw
    reset_law: ParamLaw = PointMass(1.0)
    r: float = 0.1
    initial_law: ParamLaw = PointMass(1.0)

    def __post_init__(self):
        _check_r(self.r)

    @classmethod
    def from_uniform(cls, spec: DiscreteUniformSpec) -> "DiscreteRandomSpec":
        return cls(PointMass(spec.mu), PointMass(1.0), spec.r, PointMass(1.0))


@dataclass(frozen=True)
class MomentResult:
    """A moment value with its convergence diagnostics.

    ``log_value`` is always finite for finite ``t``; ``value`` is ``inf``
    only when the double overflows. ``divergence_rate`` is ``ln phi`` with
    ``phi`` the per-step growth factor of the moment.
    """

    value: float
    log_value: float
    convergent: bool
    stationary: float
    divergence_rate: float
    timescale: float


@dataclass
class MomentSeries:
    gamma: float
    times: list
    values: list
    convergent: bool
    stationary_value: float
    variance_defined: bool
    log_values: list = field(default_factory=list)


def critical_exponent(mu: float, r: float) -> float:
    """Moment order at which the stationary uniform-process moments diverge."""
    if not mu > 1:
        raise DomainError(f"critical exponent needs mu > 1, got {mu}")
    _check_r(r)
    return abs(math.log1p(-r) / math.log(mu))


def occupation_probability(spec: DiscreteUniformSpec, m: int, t, p0=None):
    """Probability of level ``m`` at time ``t`` (``t=math.inf`` for stationary).

    ``p0`` is an optional sequence of initial level probabilities (default:
    all mass at level 0). Exact when ``spec.r`` and ``p0`` hold Fractions.
    """
    r = spec.r
    if m < 0:
        return 0 * r
    if t == math.inf:
        return r * (1 - r) ** m
    if t < 0 or int(t) != t:
        raise DomainError(f"t must be a nonnegative integer or inf, got {t}")
    t = int(t)
    if p0 is not None:
        total = sum(p0)
        if abs(total - 1) > 1e-12:
            raise DomainError(f"initial distribution sums to {total}, not 1")
    if m < t:
        return r * (1 - r) ** m
    if p0 is None:
        return (1 - r) ** m if m == t else 0 * r
    j = m - t
    return (p0[j] if j < len(p0) else 0 * r) * (1 - r) ** t


def occupation_vector(spec: DiscreteUniformSpec, t: int, p0=None):
    """Levels ``0 .. t + len(p0) - 1`` at time ``t``."""
    top = t + (len(p0) - 1 if p0 is not None else 0)
    return [occupation_probability(spec, m, t, p0) for m in range(top + 1)]


def stationary_density(spec: DiscreteUniformSpec, x, normalized: bool = True):
    """Power-law density ``C x**(-1 - gamma_c)`` on ``[1, inf)``.

    With ``normalized=True`` the prefactor is ``|ln(1-r)| / ln mu`` and the
    density has unit mass. ``normalized=False`` gives ``r / ln mu``, the
    literal change of variables applied to ``r (1-r)**m``, whose mass is
    ``r / |ln(1-r)|``.
    """
    if not spec.mu > 1:
        raise DomainError("the power-law tail exists for mu > 1 only")
    x = np.asarray(x, dtype=float)
    if np.any(x < 1):
        raise DomainError("stationary density is supported on x >= 1")
    gc = critical_exponent(spec.mu, spec.r)
    pref = -math.log1p(-spec.r) if normalized else spec.r
    return pref / spec.log_mu * x ** (-1.0 - gc)


def _log_geom(log_phi, t):
    """``ln(sum_{j<t} phi**j)`` for ``t >= 1``."""
    if log_phi == 0:
        return math.log(t)
    if log_phi > 0:
        a = t * log_phi + math.log(-math.expm1(-t * log_phi))
        b = log_phi + math.log(-math.expm1(-log_phi))
        return a - b
    return math.log(-math.expm1(t * log_phi)) - math.log(-math.expm1(log_phi))


def _affine_moment(log_init, log_drive, log_phi, t):
    """Solve ``M_{t+1} = phi M_t + drive`` in log space."""
    if log_phi == -math.inf:
        stationary = math.exp(log_drive)
    elif log_phi < 0:
        stationary = math.exp(log_drive - math.log(-math.expm1(log_phi)))
    else:
        stationary = math.inf
    convergent = log_phi < 0
    timescale = math.inf if log_phi == 0 else 1.0 / abs(log_phi)
    if t == math.inf:
        value = stationary
        log_value = math.log(stationary) if convergent else math.inf
    else:
        t = int(t)
        if t < 0:
            raise DomainError("t must be nonnegative")
        if t == 0:
            log_value = log_init
        elif log_phi == -math.inf:
            log_value = log_drive
        else:
            log_value = np.logaddexp(log_init + t * log_phi, log_drive + _log_geom(log_phi, t))
        log_value = float(log_value)
        try:
            value = math.exp(log_value)
        except OverflowError:
            value = math.inf
    return MomentResult(value, log_value, convergent, stationary, log_phi, timescale)


def moment(spec: DiscreteUniformSpec, gamma: float, t, initial_moment: float = 1.0) -> MomentResult:
    """``<x**gamma>_t`` of the uniform process; ``t=math.inf`` for the limit.

    The closed form ``S + (M0 - S) phi**t`` is evaluated as the equivalent
    ``M0 phi**t + r sum_{j<t} phi**j``, which has no removable singularity at
    ``phi = 1``.
    """
    if not initial_moment > 0:
        raise DomainError("initial moment must be positive")
    log_phi = math.log1p(-spec.r) + gamma * spec.log_mu
    return _affine_moment(math.log(initial_moment), math.log(spec.r), log_phi, t)


def moment_series(spec: DiscreteUniformSpec, gamma: float, times, initial_moment: float = 1.0) -> MomentSeries:
    results = [moment(spec, gamma, t, initial_moment) for t in times]
    lim = moment(spec, gamma, math.inf)
    var_phi = math.log1p(-spec.r) + 2 * gamma * spec.log_mu
    return MomentSeries(
        gamma=gamma,
        times=list(times),
        values=[m.value for m in results],
        convergent=lim.convergent,
        stationary_value=lim.stationary,
        variance_defined=var_phi < 0,
        log_values=[m.log_value for m in results],
    )


def stationary_moment_exact(mu, r, gamma: int) -> Fraction | None:
    """Exact rational stationary moment for integer ``gamma``; None if divergent."""
    mu, r = Fraction(mu), Fraction(r)
    phi = (1 - r) * mu ** int(gamma)
    if phi >= 1:
        return None
    return r / (1 - phi)


def cumulative_average_mean(spec: DiscreteUniformSpec, t: int) -> float:
    """Expected running average ``(t+1)^-1 sum_{tau<=t} x_tau``."""
    if t < 0:
        raise DomainError("t must be nonnegative")
    phi = (1 - spec.r) * spec.mu
    if abs(phi - 1.0) < 1e-12:
        return math.fsum(moment(spec, 1.0, tau).value for tau in range(t + 1)) / (t + 1)
    s = spec.r / (1 - phi)
    log_phi = math.log(phi)
    # (1 - phi^{t+1}) / (1 - phi) without cancellation
    geom = math.exp(_log_geom(log_phi, t + 1))
    return s + (1 - s) * geom / (t + 1)


@dataclass(frozen=True)
class PassageStats:
    mean_wait: float
    mean_draws: float
    ratio: float


def passage_statistics(M: int, r: float) -> PassageStats:
    """Mean first-passage time to level ``M`` and the matching i.i.d.-draw count.

    ``mean_draws`` is the expected number of stationary draws up to and
    including the first draw ``>= M``, counted only when that draw equals
    ``M`` (zero otherwise).
    """
    if M < 0:
        raise DomainError("M must be nonnegative")
    _check_r(r)
    growth = math.exp(-M * math.log1p(-r))
    wait = (growth - 1.0) / r
    draws = r * growth
    return PassageStats(wait, draws, -math.expm1(M * math.log1p(-r)) / r ** 2)


def general_moment(spec: DiscreteRandomSpec, gamma: float, t) -> MomentResult:
    """``<x**gamma>_t`` for random multipliers, reset values and initial value."""
    log_mu_mom = spec.multiplier_law.log_moment(gamma)
    log_phi = math.log1p(-spec.r) + log_mu_mom
    log_drive = math.log(spec.r) + spec.reset_law.log_moment(gamma)
    return _affine_moment(spec.initial_law.log_moment(gamma), log_drive, log_phi, t)


def _interval_closed_form(law: TwoDelta, r: float):
    a, mu0 = law.a, law.mu0
    L = math.log(mu0)
    if a == 1:
        return -math.inf, abs(math.log1p(-r)) / L
    if a == 0:
        return -abs(math.log1p(-r)) / L, math.inf
    c = 1 - r
    disc = math.sqrt(1 - 4 * a * (1 - a) * c * c)
    den = 2 * a * c
    return math.log((1 - disc) / den) / L, math.log((1 + disc) / den) / L


def _root_side(h, sign):
    """Root of convex ``h`` with ``h(0) < 0`` on the side ``sign``."""
    lo, g = 0.0, 0.0
    while True:
        g = lo + BRACKET_STEP
        if g > BRACKET_CAP:
            return sign * math.inf
        val = h(sign * g)
        if val >= 0:
            break
        lo = g
    hi = g
    for _ in range(200):
        if hi - lo <= ROOT_TOL:
            break
        mid = 0.5 * (lo + hi)
        if h(sign * mid) >= 0:
            hi = mid
        else:
            lo = mid
    else:
        raise RootFindingError(f"bisection did not reach {ROOT_TOL} in bracket [{lo}, {hi}]")
    return sign * 0.5 * (lo + hi)


def convergence_interval(law: ParamLaw, r: float, method: str = "auto"):
    """Moment orders ``(gamma_minus, gamma_plus)`` with convergent stationary moments.

    ``method`` is ``"auto"`` (closed form for :class:`TwoDelta`, numeric
    otherwise), ``"closed"`` or ``"numeric"``. Missing roots within the
    search cap come back as infinities.
    """
    _check_r(r)
    if method == "closed" or (method == "auto" and isinstance(law, TwoDelta)):
        if not isinstance(law, TwoDelta):
            raise DomainError("closed form exists for two_delta laws only")
        return _interval_closed_form(law, r)
    if method not in ("auto", "numeric"):
        raise ValueError(f"unknown method {method!r}")
    log_c = math.log1p(-r)

    def h(g):
        try:
            return log_c + law.log_moment(g)
        except OverflowError:
            return math.inf

    return _root_side(h, -1.0), _root_side(h, 1.0)


def log_char_solution(spec: DiscreteRandomSpec, eta, t):
    """Fourier transform of the log-variable density at time ``t`` (or ``inf``)."""
    q = log_char(spec.multiplier_law, eta)
    g = log_char(spec.reset_law, eta)
    r = spec.r
    stat = r * g / (1 - (1 - r) * q)
    if t == math.inf:
        return stat
    g0 = log_char(spec.initial_law, eta)
    return stat + (g0 - stat) * ((1 - r) * q) ** int(t)


@dataclass
class LogDensityGrid:
    """Stationary log-variable density sampled on a uniform grid.

    For lattice laws the density is a train of point masses, so
    ``density * dy`` at a grid point is the mass sitting there.
    """

    y: np.ndarray
    density: np.ndarray
    dy: float
    eta_max: float
    mass_outside_bound: float
    aliasing_risk: bool

    @property
    def mass(self):
        return self.density * self.dy


def _tail_bound(spec, y_lo, y_hi):
    """Chernoff bound on stationary mass outside ``[y_lo, y_hi]``."""
    try:
        g_minus, g_plus = convergence_interval(spec.multiplier_law, spec.r)
    except RootFindingError:
        return math.inf
    upper = lower = math.inf
    for frac in (0.1, 0.25, 0.5, 0.75, 0.9):
        g = frac * min(g_plus, 64.0)
        if g > 0:
            m = general_moment(spec, g, math.inf).stationary
            upper = min(upper, m * math.exp(-g * y_hi))
        g = frac * max(g_minus, -64.0)
        if g < 0:
            m = general_moment(spec, g, math.inf).stationary
            lower = min(lower, m * math.exp(-g * y_lo))
    if spec.multiplier_law.log_support[0] >= 0 and spec.reset_law.log_support[0] >= y_lo:
        lower = 0.0
    return upper + lower


def stationary_log_density_grid(spec: DiscreteRandomSpec, y_lo: float, y_hi: float,
                                n: int = DEFAULT_GRID_POINTS) -> LogDensityGrid:
    """Invert the stationary characteristic function on ``n`` points of ``[y_lo, y_hi)``.

    Frequencies are ``k / L`` for ``|k| <= n/2`` with ``L = y_hi - y_lo``, so
    the truncation sits at the Nyquist value ``n / (2 L)``.
    """
    if not y_hi > y_lo or n < 2:
        raise DomainError("need y_hi > y_lo and n >= 2")
    width = y_hi - y_lo
    dy = width / n
    k = np.fft.fftfreq(n, d=1.0 / n)
    eta = k / width
    ghat = log_char_solution(spec, eta, math.inf)
    coeff = ghat * np.exp(2j * np.pi * eta * y_lo)
    density = np.real(np.fft.ifft(coeff)) / dy
    y = y_lo + dy * np.arange(n)
    outside = _tail_bound(spec, y_lo, y_hi)
    risk = outside > ALIASING_TOL
    if risk:
        warnings.warn(f"stationary mass outside [{y_lo}, {y_hi}] may reach {outside:.3g}", AliasingWarning)
    return LogDensityGrid(y, density, dy, n / (2 * width), outside, risk)

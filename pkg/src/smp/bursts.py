"""Exact combinatorics of single realizations of the uniform process.

A realization up to horizon ``tau`` is a sequence of ``tau`` grow/reset
choices made at steps ``t = 1 .. tau`` starting from level 0 at ``t = 0``.
It splits into ``k`` bursts (maximal runs between resets); the last burst is
cut by the horizon and is counted like any other. A burst whose top level is
``m`` spans ``m + 1`` time points.

All quantities are computed in exact rational arithmetic. Functions take the
reset probability as a float, int or :class:`fractions.Fraction` and return a
float unless ``exact=True``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import product
from math import comb

MAX_ENUMERATION_TAU = 20


def as_fraction(r) -> Fraction:
    """Exact rational form of ``r`` (strings such as ``"0.1"`` parse as 1/10)."""
    if isinstance(r, Fraction):
        return r
    if isinstance(r, str):
        return Fraction(r)
    return Fraction(r)


def _check_r(r):
    if not 0 <= r <= 1:
        raise ValueError(f"reset probability must lie in [0, 1], got {r}")


def _out(value, exact):
    return value if exact else float(value)


def burst_count_pmf(tau: int, k: int, r, exact: bool = False):
    """Probability that the first ``tau`` steps contain ``k - 1`` resets.

    Zero for ``k`` outside ``1 .. tau + 1``.
    """
    r = as_fraction(r)
    _check_r(r)
    if not 1 <= k <= tau + 1:
        return _out(Fraction(0), exact)
    return _out(comb(tau, k - 1) * (1 - r) ** (tau - k + 1) * r ** (k - 1), exact)


def burst_duration_count(tau: int, k: int, m: int) -> int:
    """Number of bursts with top level ``m`` among all realizations with ``k`` bursts.

    Counted over the ``C(tau, k-1)`` compositions of ``tau + 1`` into ``k``
    parts, so the truncated final burst is included.
    """
    if tau < 0 or m < 0:
        return 0
    if k == 1:
        return 1 if m == tau else 0
    if 1 < k <= tau - m + 1:
        return k * comb(tau - m - 1, k - 2)
    return 0


def visit_count(tau: int, k: int, m: int) -> int:
    """Total visits to level ``m`` over all realizations with ``k`` bursts."""
    if tau < 0 or m < 0:
        return 0
    if 1 <= k <= tau - m + 1:
        return k * comb(tau - m, k - 1)
    return 0


def time_average_occupation(m: int, tau: int, r, exact: bool = False):
    """Probability of level ``m`` at a uniformly chosen time in ``0 .. tau``."""
    r = as_fraction(r)
    _check_r(r)
    if not 0 <= m <= tau:
        return _out(Fraction(0), exact)
    return _out((1 + r * (tau - m)) * (1 - r) ** m / (1 + tau), exact)


def time_average_mixture(m: int, tau: int, r, exact: bool = False):
    """Left-hand side of the time-average law: burst-count mixture of visit shares."""
    r = as_fraction(r)
    total = Fraction(0)
    for k in range(1, tau + 2):
        norm = sum(visit_count(tau, k, mm) for mm in range(tau + 1))
        total += burst_count_pmf(tau, k, r, exact=True) * Fraction(visit_count(tau, k, m), norm)
    return _out(total, exact)


@dataclass
class BurstTable:
    """Exact burst statistics for one horizon.

    ``K[k, m]`` and ``M[k, m]`` are integer counts over all ``2**tau``
    realizations; ``rho[k]`` is the burst-count distribution (exact).
    """

    tau: int
    K: dict
    M: dict
    rho: dict

    @classmethod
    def from_formulas(cls, tau: int, r) -> "BurstTable":
        ks = range(1, tau + 2)
        ms = range(tau + 1)
        return cls(
            tau=tau,
            K={(k, m): burst_duration_count(tau, k, m) for k in ks for m in ms},
            M={(k, m): visit_count(tau, k, m) for k in ks for m in ms},
            rho={k: burst_count_pmf(tau, k, r, exact=True) for k in ks},
        )

    def check(self):
        if sum(self.rho.values()) != 1:
            raise AssertionError("burst-count probabilities do not sum to 1")
        for k in range(1, self.tau + 2):
            visits = sum(self.M[k, m] for m in range(self.tau + 1))
            if visits != (self.tau + 1) * comb(self.tau, k - 1):
                raise AssertionError(f"visit total mismatch at k={k}")
        if any(v < 0 for v in list(self.K.values()) + list(self.M.values())):
            raise AssertionError("negative count")


@dataclass
class Enumeration:
    """Brute-force statistics over every grow/reset sequence.

    ``occupation[t][m]`` is the exact probability of level ``m`` at time
    ``t``; ``time_average[m]`` the exact time-average occupation law.
    """

    tau: int
    r: Fraction
    table: BurstTable
    occupation: list
    time_average: list


def _reset_weight(r, n_resets, n_steps):
    return (1 - r) ** (n_steps - n_resets) * r ** n_resets


@lru_cache(maxsize=None)
def _tallies(tau):
    """Integer tallies over all sequences; independent of ``r``."""
    K = {(k, m): 0 for k in range(1, tau + 2) for m in range(tau + 1)}
    M = dict(K)
    visits = {}
    # occupation[t][(level, resets so far)] counted over full sequences
    occ = [dict() for _ in range(tau + 1)]
    for seq in product((False, True), repeat=tau):
        k = sum(seq) + 1
        level = n_res = 0
        path = [0]
        for t, is_reset in enumerate(seq, start=1):
            if is_reset:
                level = 0
                n_res += 1
            else:
                level += 1
            path.append(level)
            key = (level, n_res)
            occ[t][key] = occ[t].get(key, 0) + 1
        for i, m in enumerate(path):
            M[k, m] += 1
            visits[k - 1, m] = visits.get((k - 1, m), 0) + 1
            if i == tau or seq[i]:
                K[k, m] += 1
    return K, M, visits, occ


def enumerate_realizations(tau: int, r, initial=None) -> Enumeration:
    """Enumerate all ``2**tau`` realizations exactly.

    ``initial`` optionally maps starting level to an exact probability; the
    burst table and time-average law always use the default start at level 0.
    """
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    if tau > MAX_ENUMERATION_TAU:
        raise ValueError(f"tau={tau} exceeds enumeration cap {MAX_ENUMERATION_TAU}")
    r = as_fraction(r)
    _check_r(r)
    initial = {0: Fraction(1)} if initial is None else {int(k): as_fraction(v) for k, v in initial.items()}
    if sum(initial.values()) != 1:
        raise ValueError("initial distribution must sum to 1")

    K, M, visits, occ = _tallies(tau)
    n_by_resets = [0] * (tau + 1)
    for (n_res, m), count in visits.items():
        n_by_resets[n_res] += count
    rho = {}
    for k in range(1, tau + 2):
        # every realization contributes tau + 1 visits
        rho[k] = Fraction(n_by_resets[k - 1], tau + 1) * _reset_weight(r, k - 1, tau)

    top = max(initial) + tau
    occupation = [[Fraction(0)] * (top + 1) for _ in range(tau + 1)]
    for m0, p in initial.items():
        occupation[0][m0] += p
    for t in range(1, tau + 1):
        # each t-prefix appears 2**(tau - t) times among the full sequences
        mult = 2 ** (tau - t)
        for (level, n_res), count in occ[t].items():
            w = Fraction(count, mult) * _reset_weight(r, n_res, t)
            if n_res:
                occupation[t][level] += w
            else:
                # no reset yet: the path still carries the initial level
                for m0, p in initial.items():
                    occupation[t][level + m0] += p * w
    time_average = [Fraction(0)] * (tau + 1)
    for (n_res, m), count in visits.items():
        time_average[m] += Fraction(count, tau + 1) * _reset_weight(r, n_res, tau)
    table = BurstTable(tau=tau, K=dict(K), M=dict(M), rho=rho)
    return Enumeration(tau=tau, r=r, table=table, occupation=occupation, time_average=time_average)

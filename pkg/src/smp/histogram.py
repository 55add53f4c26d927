"""Histograms on the log axis ``y = ln x``."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass
class LogHistogram:
    """Uniform bins of width ``dy`` starting at ``y_lo``.

    Out-of-range samples land in ``underflow`` / ``overflow`` so that
    ``counts.sum() + underflow + overflow == total`` always holds.
    """

    y_lo: float
    dy: float
    nbins: int
    counts: np.ndarray = field(default=None)
    underflow: int = 0
    overflow: int = 0
    total: int = 0

    def __post_init__(self):
        if self.counts is None:
            self.counts = np.zeros(self.nbins, dtype=np.int64)
        if not self.dy > 0 or self.nbins < 1:
            raise ValueError("need dy > 0 and at least one bin")

    @classmethod
    def spanning(cls, y_lo, y_hi, dy):
        return cls(y_lo, dy, max(1, int(math.ceil((y_hi - y_lo) / dy - 1e-9))))

    @classmethod
    def for_levels(cls, log_mu, max_level):
        """Bins centred on the lattice ``y = m * ln(mu)``, one per level."""
        dy = abs(log_mu)
        if log_mu > 0:
            return cls(-0.5 * dy, dy, max_level + 1)
        return cls(-(max_level + 0.5) * dy, dy, max_level + 1)

    @property
    def y_hi(self):
        return self.y_lo + self.dy * self.nbins

    @property
    def edges(self):
        return self.y_lo + self.dy * np.arange(self.nbins + 1)

    @property
    def centers(self):
        return self.y_lo + self.dy * (np.arange(self.nbins) + 0.5)

    def add(self, y):
        y = np.asarray(y, dtype=float).ravel()
        idx = np.floor((y - self.y_lo) / self.dy)
        under = idx < 0
        over = idx >= self.nbins
        inside = ~(under | over)
        self.counts += np.bincount(idx[inside].astype(np.int64), minlength=self.nbins)
        self.underflow += int(under.sum())
        self.overflow += int(over.sum())
        self.total += y.size
        return self

    def add_level_counts(self, level_counts, log_mu):
        """Add integer counts indexed by lattice level (see :meth:`for_levels`)."""
        level_counts = np.asarray(level_counts, dtype=np.int64)
        n = min(len(level_counts), self.nbins)
        if log_mu > 0:
            self.counts[:n] += level_counts[:n]
        else:
            self.counts[self.nbins - n:] += level_counts[:n][::-1]
        self.overflow += int(level_counts[n:].sum())
        self.total += int(level_counts.sum())
        return self

    def merge(self, other: "LogHistogram"):
        if (other.y_lo, other.dy, other.nbins) != (self.y_lo, self.dy, self.nbins):
            raise ValueError("cannot merge histograms with different binning")
        self.counts += other.counts
        self.underflow += other.underflow
        self.overflow += other.overflow
        self.total += other.total
        return self

    def fractions(self):
        return self.counts / self.total if self.total else np.zeros(self.nbins)

    def density(self):
        """Per-bin density on the ``y`` axis: count / (total * dy)."""
        return self.fractions() / self.dy

    def level_fractions(self, log_mu):
        """Fractions ordered by lattice level (inverse of :meth:`add_level_counts`)."""
        f = self.fractions()
        return f if log_mu > 0 else f[::-1]

    def to_dict(self):
        return {
            "y_lo": self.y_lo,
            "dy": self.dy,
            "nbins": self.nbins,
            "counts": [int(c) for c in self.counts],
            "underflow": self.underflow,
            "overflow": self.overflow,
            "total": self.total,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(d["y_lo"], d["dy"], d["nbins"], np.asarray(d["counts"], dtype=np.int64),
                   d["underflow"], d["overflow"], d["total"])


def tv_distance(hist: LogHistogram, cdf) -> float:
    """Total-variation distance between a histogram and a law given by its CDF in ``x``.

    Under- and overflow bins take part as two extra cells.
    """
    if not hist.total:
        raise ValueError("empty histogram")
    edges_x = np.exp(hist.edges)
    c = np.asarray(cdf(edges_x), dtype=float)
    expected = np.diff(c)
    under_p, over_p = c[0], 1.0 - c[-1]
    n = hist.total
    return 0.5 * (np.abs(hist.counts / n - expected).sum()
                  + abs(hist.underflow / n - under_p) + abs(hist.overflow / n - over_p))

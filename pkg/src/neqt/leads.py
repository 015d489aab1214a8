"""Closed-form Green functions of a semi-infinite one-dimensional lead.

The lead is the open tight-binding chain on sites 0, 1, 2, ... with hopping
-c_R and on-site bias v, so its band is [v - 2 c_R, v + 2 c_R].  Everything
here is an explicit boundary value on the real axis; no small imaginary part
is ever needed.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np

_TINY_ANGLE = 1e-12


def surface_green(E, bias: float = 0.0, hopping: float = 1.0):
    """Boundary value g(E) of the lead Green function at its contact site.

    In band (|E - v| <= 2 c_R):  g = exp(-i theta)/c_R with
    theta = arccos((E - v)/2c_R); above the band g = exp(-chi)/c_R and below
    g = -exp(-chi)/c_R with chi = arccosh(|E - v|/2c_R).  Total function of
    real E, continuous across the band edges, with Im g <= 0.

    Accepts scalar or ndarray E.
    """
    E = np.asarray(E, dtype=float)
    c = float(hopping)
    u = (E - bias) / (2.0 * c)
    out = np.empty(u.shape, dtype=complex)

    inband = np.abs(u) <= 1.0
    theta = np.arccos(np.clip(u, -1.0, 1.0))
    out[inband] = np.exp(-1j * theta[inband]) / c

    off = ~inband
    if np.any(off):
        chi = np.arccosh(np.maximum(np.abs(u[off]), 1.0))
        out[off] = np.sign(u[off]) * np.exp(-chi) / c
    return out if out.ndim else complex(out)


def spectral_factor(E, hopping: float = 1.0):
    """Band spectral weight r(E) = sqrt((2/(pi c^2)) (1 - (E/2c)^2)), 0 off band.

    Normalized so that the contact-site spectral density of the lead equals
    r(E)/sqrt(2 pi).
    """
    E = np.asarray(E, dtype=float)
    c = float(hopping)
    val = (2.0 / (np.pi * c * c)) * (1.0 - (E / (2.0 * c)) ** 2)
    out = np.sqrt(np.maximum(val, 0.0))
    return out if out.ndim else float(out)


def lead_resolvent_entry(x: int, y: int, E, bias: float = 0.0, hopping: float = 1.0):
    """Boundary value <delta_x | (h_lead + v - E - i0)^{-1} | delta_y>.

    Closed form for the open chain: with a = min(x, y) + 1, b = max(x, y) + 1
    and s = (-1)^(x+y),

        in band   -s sin(a*theta) exp(-i b theta) / (c sin(theta)),
        above     -s sinh(a*chi) exp(-b chi) / (c sinh(chi)),
        below       sinh(a*chi) exp(-b chi) / (c sinh(chi)),

    where theta/chi parametrize E - v as for `surface_green`.  Satisfies the
    defining three-term recursion on every branch, is finite and continuous
    at the band edges, and is symmetric in (x, y).  Accepts scalar or ndarray
    E.
    """
    if x < 0 or y < 0:
        raise ValueError("lead site indices must be >= 0")
    E = np.asarray(E, dtype=float)
    c = float(hopping)
    a = min(x, y) + 1
    b = max(x, y) + 1
    sgn = (-1.0) ** (x + y)
    u = (E - bias) / (2.0 * c)
    out = np.empty(u.shape, dtype=complex)

    inband = np.abs(u) <= 1.0
    theta = np.arccos(np.clip(u[inband], -1.0, 1.0))
    # ratio sin(a t)/sin(t) is stable except exactly at t = 0, pi
    interior = (theta > _TINY_ANGLE) & (theta < np.pi - _TINY_ANGLE)
    ratio = np.empty_like(theta)
    ratio[interior] = np.sin(a * theta[interior]) / np.sin(theta[interior])
    lo = ~interior & (theta <= _TINY_ANGLE)
    hi = ~interior & (theta >= np.pi - _TINY_ANGLE)
    ratio[lo] = a
    ratio[hi] = a * (-1.0) ** (a - 1)
    out[inband] = -sgn * ratio * np.exp(-1j * b * theta) / c

    off = ~inband
    if np.any(off):
        uo = u[off]
        chi = np.arccosh(np.maximum(np.abs(uo), 1.0))
        good = chi > _TINY_ANGLE
        r = np.empty_like(chi)
        r[good] = np.sinh(a * chi[good]) / np.sinh(chi[good])
        r[~good] = a
        val = r * np.exp(-b * chi) / c
        val[uo > 0] *= -sgn
        out[off] = val
    return out if out.ndim else complex(out)


@dataclass(frozen=True)
class BandGeometry:
    """Band intervals of the biased leads and their pairwise overlaps."""

    biases: tuple[float, ...]
    hopping: float

    @classmethod
    def from_config(cls, config) -> "BandGeometry":
        return cls(tuple(float(ld.bias) for ld in config.leads), float(config.hopping))

    @property
    def n_leads(self) -> int:
        return len(self.biases)

    def band(self, j: int) -> tuple[float, float]:
        v, c = self.biases[j], self.hopping
        return (v - 2.0 * c, v + 2.0 * c)

    @property
    def thresholds(self) -> tuple[float, ...]:
        """Sorted distinct band edges of all leads."""
        pts = sorted({self.band(j)[k] for j in range(self.n_leads) for k in (0, 1)})
        return tuple(pts)

    def overlap(self, j: int, k: int) -> Optional[tuple[float, float]]:
        """Intersection of bands j and k, or None if they do not overlap."""
        lo = max(self.band(j)[0], self.band(k)[0])
        hi = min(self.band(j)[1], self.band(k)[1])
        return (lo, hi) if lo < hi else None

    @lru_cache(maxsize=None)
    def _segments(self, lo: float, hi: float) -> tuple[tuple[float, float], ...]:
        cuts = [lo] + [t for t in self.thresholds if lo < t < hi] + [hi]
        return tuple((cuts[i], cuts[i + 1]) for i in range(len(cuts) - 1))

    def band_segments(self, j: int) -> tuple[tuple[float, float], ...]:
        """Band of lead j split at every threshold falling inside it."""
        return self._segments(*self.band(j))

    def union_segments(self) -> tuple[tuple[float, float], ...]:
        """The union of all bands, split at every interior threshold."""
        segs = []
        for i in range(len(self.thresholds) - 1):
            lo, hi = self.thresholds[i], self.thresholds[i + 1]
            mid = 0.5 * (lo + hi)
            if any(b[0] < mid < b[1] for b in map(self.band, range(self.n_leads))):
                segs.append((lo, hi))
        return tuple(segs)

"""Gaussian basis kernels and the impact functions built from them.

Kernel indices are 0-based. All kernels are truncated to zero beyond the
impact support ``support``.
"""
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erf

_SQRT2 = np.sqrt(2.0)


@dataclass(frozen=True, eq=False)
class BasisConfig:
    """Centers and bandwidth of ``m_count`` unnormalized Gaussian kernels."""

    m_count: int
    centers: np.ndarray = field(repr=False)
    bandwidth: float
    support: float

    def __post_init__(self):
        centers = np.asarray(self.centers, dtype=float)
        object.__setattr__(self, "centers", centers)
        if self.m_count < 1:
            raise ValueError("m_count must be >= 1")
        if centers.shape != (self.m_count,):
            raise ValueError(f"expected {self.m_count} centers, got shape {centers.shape}")
        if not self.bandwidth > 0:
            raise ValueError("bandwidth must be positive")
        if not self.support > 0:
            raise ValueError("support must be positive")
        if np.any(np.diff(centers) <= 0):
            raise ValueError("centers must be strictly increasing")
        if centers[0] < 0 or centers[-1] > self.support:
            raise ValueError("centers must lie in [0, support]")

    @classmethod
    def evenly_spaced(cls, m_count, support, bandwidth=None):
        """Centers at (m-1)*support/(M-1); default bandwidth is half the spacing."""
        if m_count == 1:
            centers = np.zeros(1)
            spacing = support
        else:
            centers = np.linspace(0.0, support, m_count)
            spacing = support / (m_count - 1)
        if bandwidth is None:
            bandwidth = spacing / 2.0
        return cls(m_count, centers, float(bandwidth), float(support))

    @classmethod
    def synthetic_default(cls):
        return cls.evenly_spaced(7, 5.0)

    @classmethod
    def real_data_default(cls):
        # 90-day horizon sampled every 72 hours
        return cls.evenly_spaced(31, 90.0, 1.5)

    def __eq__(self, other):
        if not isinstance(other, BasisConfig):
            return NotImplemented
        return (
            self.m_count == other.m_count
            and self.bandwidth == other.bandwidth
            and self.support == other.support
            and np.array_equal(self.centers, other.centers)
        )

    # Vectorized forms: trailing axis of the result indexes kernels.

    def values(self, t):
        """g_m(t) for every kernel; shape ``t.shape + (M,)``."""
        t = np.asarray(t, dtype=float)[..., None]
        out = np.exp(-0.5 * ((t - self.centers) / self.bandwidth) ** 2)
        return np.where((t >= 0) & (t <= self.support), out, 0.0)

    def integrals(self, t):
        """G_m(t) = integral of g_m over [0, t]; saturates at ``support``."""
        t = np.clip(np.asarray(t, dtype=float), 0.0, self.support)[..., None]
        scale = self.bandwidth * _SQRT2
        lower = erf(self.centers / scale)
        return self.bandwidth * np.sqrt(np.pi / 2.0) * (erf((t - self.centers) / scale) + lower)


def _check_index(m, cfg):
    if not 0 <= m < cfg.m_count:
        raise IndexError(f"kernel index {m} out of range for {cfg.m_count} kernels")


def basis_value(m, t, cfg):
    _check_index(m, cfg)
    if t < 0:
        raise ValueError("elapsed time must be non-negative")
    return float(cfg.values(t)[m])


def basis_integral(m, t, cfg):
    _check_index(m, cfg)
    if t < 0:
        raise ValueError("elapsed time must be non-negative")
    return float(cfg.integrals(t)[m])


def impact_value(coef, c, c_src, t, cfg):
    """phi_{c,c_src}(t) = sum_m coef[c, c_src, m] g_m(t). Accepts array ``t``."""
    return cfg.values(t) @ np.asarray(coef)[c, c_src]


def impact_integral(coef, c, c_src, horizon, cfg):
    return float(cfg.integrals(horizon) @ np.asarray(coef)[c, c_src])

"""Weibull base intensity, conditional intensity and exact log-likelihood."""
from dataclasses import dataclass, field

import numpy as np

from .basis import BasisConfig


@dataclass(frozen=True, eq=False)
class EventSequence:
    """Events ``(times[i], types[i])`` observed on ``(t_begin, t_end]``.

    Types are 0-based here; files store them 1-based.
    """

    times: np.ndarray
    types: np.ndarray
    t_begin: float
    t_end: float

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float).reshape(-1)
        types = np.asarray(self.types, dtype=np.int64).reshape(-1)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "types", types)
        object.__setattr__(self, "t_begin", float(self.t_begin))
        object.__setattr__(self, "t_end", float(self.t_end))
        if times.shape != types.shape:
            raise ValueError("times and types must have equal length")
        if not (self.t_begin >= 0 and self.t_end > self.t_begin):
            raise ValueError(f"invalid window [{self.t_begin}, {self.t_end}]")
        if times.size:
            if np.any(np.diff(times) <= 0):
                raise ValueError("event times must be strictly increasing")
            if times[0] <= self.t_begin or times[0] <= 0:
                raise ValueError("event times must lie in (t_begin, t_end] and be > 0")
            if times[-1] > self.t_end:
                raise ValueError("event time beyond window end")
            if types.min() < 0:
                raise ValueError("negative event type")

    def __len__(self):
        return self.times.size

    def __eq__(self, other):
        if not isinstance(other, EventSequence):
            return NotImplemented
        return (
            self.t_begin == other.t_begin
            and self.t_end == other.t_end
            and np.array_equal(self.times, other.times)
            and np.array_equal(self.types, other.types)
        )

    def history_before(self, t):
        k = np.searchsorted(self.times, t, side="left")
        return self.times[:k], self.types[:k]


@dataclass(frozen=True, eq=False)
class ModelParams:
    coef: np.ndarray = field(repr=False)
    mu: np.ndarray
    rho: np.ndarray
    basis: BasisConfig

    def __post_init__(self):
        coef = np.asarray(self.coef, dtype=float)
        mu = np.asarray(self.mu, dtype=float).reshape(-1)
        rho = np.asarray(self.rho, dtype=float).reshape(-1)
        object.__setattr__(self, "coef", coef)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "rho", rho)
        c = mu.size
        if coef.shape != (c, c, self.basis.m_count):
            raise ValueError(f"coef shape {coef.shape} != {(c, c, self.basis.m_count)}")
        if rho.shape != mu.shape:
            raise ValueError("mu and rho must have equal length")
        if np.any(mu <= 0) or np.any(rho <= 0):
            raise ValueError("mu and rho must be positive")
        if np.any(coef < 0):
            raise ValueError("impact coefficients must be non-negative")

    @property
    def c_count(self):
        return self.mu.size

    @property
    def max_support(self):
        return self.basis.support

    def replace(self, **changes):
        kw = dict(coef=self.coef, mu=self.mu, rho=self.rho, basis=self.basis)
        kw.update(changes)
        return ModelParams(**kw)

    def excitation(self, dt, src):
        """phi_{c, src[k]}(dt[k]) for every target c; shape (C, K)."""
        g = self.basis.values(dt)  # (K, M)
        return np.einsum("ckm,km->ck", self.coef[:, src, :], g)

    def group_norms(self):
        return np.linalg.norm(self.coef, axis=2)


def base_intensity(mu, rho, t):
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("base intensity is undefined for t <= 0")
    return mu * rho * t ** (rho - 1.0)


def base_integral(mu, rho, t0, t1):
    """mu * (t1**rho - t0**rho) with 0**rho = 0."""
    if t0 < 0 or t1 < t0:
        raise ValueError("need 0 <= t0 <= t1")
    return mu * (_pow0(t1, rho) - _pow0(t0, rho))


def weibull_event_density(mu, rho, t):
    h = base_intensity(mu, rho, t)
    return h * np.exp(-mu * np.asarray(t, dtype=float) ** rho)


def weibull_survival(mu, rho, t):
    return np.exp(-mu * _pow0(t, rho))


def _pow0(t, rho):
    t = np.asarray(t, dtype=float)
    return np.where(t > 0, np.abs(t) ** rho, 0.0)


def _xlogx_pow(t, rho):
    """t**rho * ln t with the t -> 0+ limit 0."""
    t = np.asarray(t, dtype=float)
    safe = np.where(t > 0, t, 1.0)
    return np.where(t > 0, safe ** rho * np.log(safe), 0.0)


def conditional_intensity(params, seq, c, t):
    """lambda_c(t) using events strictly before ``t`` within the support."""
    if t <= 0:
        raise ValueError("intensity is undefined for t <= 0")
    times, types = seq.history_before(t)
    keep = times >= t - params.max_support
    exc = params.excitation(t - times[keep], types[keep])[c].sum()
    return float(base_intensity(params.mu[c], params.rho[c], t) + exc)


def intensity_vector(params, times, types, t):
    """All C intensities at ``t`` given history arrays (already truncated or not)."""
    keep = (times < t) & (times >= t - params.max_support)
    exc = params.excitation(t - times[keep], types[keep]).sum(axis=1)
    return base_intensity(params.mu, params.rho, t) + exc


class CompiledDataset:
    """Flattened events plus all (event, earlier event) pairs inside the support.

    Kernel values on pairs and kernel integrals to the window end depend only on
    data and basis, so they are computed once and reused by every EM iteration.
    """

    def __init__(self, sequences, basis, c_count):
        self.sequences = list(sequences)
        self.basis = basis
        self.c_count = int(c_count)
        n = len(self.sequences)
        self.t_begin = np.array([s.t_begin for s in self.sequences], dtype=float)
        self.t_end = np.array([s.t_end for s in self.sequences], dtype=float)
        lengths = np.array([len(s) for s in self.sequences], dtype=np.int64)
        offsets = np.concatenate([[0], np.cumsum(lengths)])
        if n:
            self.times = np.concatenate([s.times for s in self.sequences])
            self.types = np.concatenate([s.types for s in self.sequences])
        else:
            self.times = np.zeros(0)
            self.types = np.zeros(0, dtype=np.int64)
        if self.types.size and self.types.max() >= self.c_count:
            raise ValueError(f"event type {self.types.max()} out of range for C={self.c_count}")
        self.seq_index = np.repeat(np.arange(n), lengths)

        dst, src = [], []
        for k, s in enumerate(self.sequences):
            lo = np.searchsorted(s.times, s.times - basis.support, side="left")
            idx = np.arange(len(s))
            counts = idx - lo
            d = np.repeat(idx, counts)
            # j runs lo_i .. i-1 for each i
            starts = np.repeat(lo - np.concatenate([[0], np.cumsum(counts)[:-1]]), counts)
            j = starts + np.arange(counts.sum())
            dst.append(d + offsets[k])
            src.append(j + offsets[k])
        self.pair_dst = np.concatenate(dst) if dst else np.zeros(0, dtype=np.int64)
        self.pair_src = np.concatenate(src) if src else np.zeros(0, dtype=np.int64)
        self.pair_dt = self.times[self.pair_dst] - self.times[self.pair_src]
        self.pair_g = basis.values(self.pair_dt)
        self.pair_key = self.types[self.pair_dst] * self.c_count + self.types[self.pair_src]

        self.event_G = basis.integrals(self.t_end[self.seq_index] - self.times)
        # G sums grouped by source type: (C, M)
        self.G_by_type = np.zeros((self.c_count, basis.m_count))
        np.add.at(self.G_by_type, self.types, self.event_G)
        self.event_count = np.bincount(self.types, minlength=self.c_count)

    @property
    def n_sequences(self):
        return len(self.sequences)

    @property
    def n_events(self):
        return self.times.size

    def window_power_sum(self, rho):
        """sum_n (T_e^rho_c - T_b^rho_c) per type."""
        rho = np.asarray(rho)[:, None]
        return (_pow0(self.t_end[None, :], rho) - _pow0(self.t_begin[None, :], rho)).sum(axis=1)

    def window_log_power_sum(self, rho):
        """sum_n (ln T_e T_e^rho - ln T_b T_b^rho) per type."""
        rho = np.asarray(rho)[:, None]
        return (_xlogx_pow(self.t_end[None, :], rho) - _xlogx_pow(self.t_begin[None, :], rho)).sum(axis=1)

    def base_at_events(self, params):
        c = self.types
        return params.mu[c] * params.rho[c] * self.times ** (params.rho[c] - 1.0)

    def pair_terms(self, params):
        """a_{c_i c_j m} g_m(t_i - t_j) per pair and kernel; shape (P, M)."""
        coef = params.coef.reshape(self.c_count * self.c_count, -1)
        return coef[self.pair_key] * self.pair_g

    def intensities(self, params):
        """Returns (base, pair_terms, lambda) at every event."""
        base = self.base_at_events(params)
        terms = self.pair_terms(params)
        lam = base + np.bincount(self.pair_dst, weights=terms.sum(axis=1), minlength=self.n_events)
        return base, terms, lam

    def compensator(self, params):
        base = float(params.mu @ self.window_power_sum(params.rho))
        exc = float(np.einsum("abm,bm->", params.coef, self.G_by_type))
        return base + exc

    def log_likelihood(self, params, lam=None):
        if lam is None:
            lam = self.intensities(params)[2]
        if lam.size and not np.all(np.isfinite(lam) & (lam > 0)):
            raise FloatingPointError("non-finite or non-positive intensity at an event")
        value = float(np.sum(np.log(lam))) - self.compensator(params)
        if not np.isfinite(value):
            raise FloatingPointError("log-likelihood is not finite")
        return value


def compile_dataset(sequences, params_or_basis, c_count=None):
    if isinstance(params_or_basis, ModelParams):
        return CompiledDataset(sequences, params_or_basis.basis, params_or_basis.c_count)
    return CompiledDataset(sequences, params_or_basis, c_count)


def log_likelihood(params, dataset):
    """Exact log-likelihood of a list of sequences (or a CompiledDataset)."""
    if not isinstance(dataset, CompiledDataset):
        dataset = compile_dataset(dataset, params)
    return dataset.log_likelihood(params)

"""Thinning simulation and the synthetic sine/square benchmark."""
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .intensity import EventSequence, base_intensity

KINDS = ("sine", "square", "zero")

# reserved key for draws that are not tied to a sequence
_PARAM_STREAM = 0
_SEQUENCE_STREAM = 1


def make_rng(seed, *key):
    """Counter-based generator keyed by ``(seed, *key)``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True, eq=False)
class GroundTruth:
    """Exact impact functions ``A (1 - cos(w t + phase))`` on ``[0, (2 pi - phase)/w]``.

    ``kinds[c][c']`` is ``sine``, ``square`` or ``zero``. A square kernel takes the
    sine's peak value ``2A`` where the sine is at or above ``square_level * A`` and
    zero elsewhere; with the default level this keeps the integral of the sine.
    """

    kinds: np.ndarray
    amplitude: np.ndarray
    omega: np.ndarray
    phase: np.ndarray
    mu: np.ndarray
    rho: np.ndarray
    square_level: float = 1.0
    horizon: float = 50.0
    epsilon: float = 1e-6

    def __post_init__(self):
        for name in ("amplitude", "omega", "phase"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        object.__setattr__(self, "kinds", np.asarray(self.kinds, dtype=object))
        object.__setattr__(self, "mu", np.asarray(self.mu, dtype=float))
        object.__setattr__(self, "rho", np.asarray(self.rho, dtype=float))
        c = self.mu.size
        for name in ("kinds", "amplitude", "omega", "phase"):
            if getattr(self, name).shape != (c, c):
                raise ValueError(f"{name} must be {c}x{c}")
        bad = [k for k in self.kinds.ravel() if k not in KINDS]
        if bad:
            raise ValueError(f"unknown impact kind {bad[0]!r}")
        zero = self.kinds == "zero"
        if np.any(zero != (self.amplitude == 0)):
            raise ValueError("zero kind must coincide with zero amplitude")
        with np.errstate(divide="ignore", invalid="ignore"):
            end = np.where(zero, 0.0, (2 * np.pi - self.phase) / self.omega)
        object.__setattr__(self, "_end", end)
        object.__setattr__(self, "_square", self.kinds == "square")

    @property
    def c_count(self):
        return self.mu.size

    def support_end(self):
        """(C, C) support lengths; zero-kind pairs get 0."""
        return self._end.copy()

    @property
    def max_support(self):
        return float(self.support_end().max(initial=0.0))

    def nonzero_pairs(self):
        return self.kinds != "zero"

    def _values(self, c, c_src, t):
        t = np.asarray(t, dtype=float)
        a, w, ph = self.amplitude[c, c_src], self.omega[c, c_src], self.phase[c, c_src]
        sine = a * (1.0 - np.cos(w * t + ph))
        inside = (t >= 0) & (t <= self._end[c, c_src]) & (a > 0)
        square = np.where(sine >= self.square_level * a, 2.0 * a, 0.0)
        val = np.where(self._square[c, c_src], square, sine)
        return np.where(inside, val, 0.0)

    def jump_offsets(self):
        """Lags at which a square kernel switches on; the excitation of a
        history is piecewise constant between these, so its supremum over a
        window sits at one of them rather than on a coarse grid."""
        if not self._square.any():
            return np.zeros(0)
        theta = np.arccos(np.clip(1.0 - self.square_level, -1.0, 1.0))
        on = np.maximum(theta - self.phase, 0.0) / self.omega
        return np.unique(on[self._square])

    def impact(self, c, c_src, t):
        return self._values(c, c_src, t)

    def excitation(self, dt, src):
        """phi_{c, src[k]}(dt[k]) for every target c; shape (C, K)."""
        dt = np.asarray(dt, dtype=float)
        src = np.asarray(src, dtype=np.int64)
        c = np.arange(self.c_count)[:, None]
        return self._values(c, src[None, :], dt[None, :])

    def with_kind(self, kind):
        kinds = np.where(self.kinds == "zero", "zero", kind).astype(object)
        return GroundTruth(kinds, self.amplitude, self.omega, self.phase, self.mu, self.rho,
                           self.square_level, self.horizon, self.epsilon)


def true_impact_value(truth, c, c_src, t):
    return truth.impact(c, c_src, t)


@dataclass(frozen=True)
class SimConfig:
    horizon: float = 50.0
    seed: int = 0
    epsilon: float = 1e-6
    bound_grid: int = 64
    bound_margin: float = 1.05

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.bound_margin < 1:
            raise ValueError("bound_margin must be >= 1")
        if self.bound_grid < 2:
            raise ValueError("bound_grid must be >= 2")
        if not self.horizon > self.epsilon:
            raise ValueError("horizon must exceed epsilon")


@dataclass
class ThinningStats:
    candidates: int = 0
    accepted: int = 0
    bound_violations: int = 0
    max_bound_ratio: float = 0.0


def _base_sup(model, t0, t1):
    # Weibull hazard is monotone, so its supremum is at one end of the window
    return np.maximum(base_intensity(model.mu, model.rho, t0),
                      base_intensity(model.mu, model.rho, t1)).sum()


def simulate_with_stats(model, cfg, stream=0):
    """Ogata thinning for ``model`` (ModelParams or GroundTruth) on ``[eps, T]``."""
    rng = make_rng(cfg.seed, _SEQUENCE_STREAM, stream)
    stats = ThinningStats()
    lookahead = model.max_support
    if lookahead <= 0:
        lookahead = cfg.horizon
    offsets = np.linspace(0.0, lookahead, cfg.bound_grid)
    jumps = model.jump_offsets() if hasattr(model, "jump_offsets") else np.zeros(0)
    times, types = [], []
    hist_t = np.zeros(0)
    hist_c = np.zeros(0, dtype=np.int64)
    t = cfg.epsilon
    while t < cfg.horizon:
        lo = np.searchsorted(hist_t, t - model.max_support, side="left")
        ht, hc = hist_t[lo:], hist_c[lo:]
        bound = _base_sup(model, t, t + lookahead)
        if ht.size:
            grid = t + offsets
            if jumps.size:
                knots = (ht[:, None] + jumps[None, :]).ravel()
                knots = knots[(knots > t) & (knots < t + lookahead)]
                grid = np.concatenate([grid, knots, np.nextafter(knots, np.inf)])
            dt = (grid[:, None] - ht[None, :]).ravel()
            src = np.broadcast_to(hc, (grid.size, ht.size)).ravel()
            exc = model.excitation(dt, src).sum(axis=0).reshape(grid.size, ht.size).sum(axis=1)
            bound += exc.max()
        bound *= cfg.bound_margin
        if not np.isfinite(bound):
            raise FloatingPointError(f"intensity bound is not finite at t={t}")
        if bound <= 0:
            break
        gap = rng.exponential(1.0 / bound)
        u = rng.uniform()
        if gap > lookahead:
            t += lookahead
            continue
        t += gap
        if t > cfg.horizon:
            break
        stats.candidates += 1
        lam = base_intensity(model.mu, model.rho, t)
        if ht.size:
            lam = lam + model.excitation(t - ht, hc).sum(axis=1)
        total = lam.sum()
        if not np.isfinite(total):
            raise FloatingPointError(f"intensity is not finite at t={t}")
        stats.max_bound_ratio = max(stats.max_bound_ratio, total / bound)
        if total > bound:
            stats.bound_violations += 1
        cum = np.cumsum(lam)
        if cum[-1] < bound * u:
            continue
        c_new = int(np.searchsorted(cum, bound * u, side="left"))
        times.append(t)
        types.append(c_new)
        hist_t = np.append(hist_t, t)
        hist_c = np.append(hist_c, c_new)
        stats.accepted += 1
    seq = EventSequence(np.array(times), np.array(types, dtype=np.int64), cfg.epsilon, cfg.horizon)
    return seq, stats


def thinning_simulate(model, cfg, stream=0):
    return simulate_with_stats(model, cfg, stream)[0]


def _simulate_one(args):
    return thinning_simulate(*args)


def simulate_many(model, cfg, n_sequences, threads=1, first_stream=0):
    """Independent sequences; stream ``first_stream + k`` seeds sequence ``k``."""
    jobs = [(model, cfg, first_stream + k) for k in range(n_sequences)]
    if threads <= 1 or n_sequences < 2:
        return [_simulate_one(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(_simulate_one, jobs, chunksize=max(1, n_sequences // (4 * threads))))


def benchmark_truth(kind, seed, horizon=50.0, constant_base=False, epsilon=1e-6):
    """Five-type ground truth with uniform mu in [0, 0.2] and rho in [0.5, 1.5]."""
    if kind not in ("sine", "square"):
        raise ValueError(f"kind must be 'sine' or 'square', got {kind!r}")
    rng = make_rng(seed, _PARAM_STREAM)
    c = 5
    mu = rng.uniform(0.0, 0.2, size=c)
    rho = rng.uniform(0.5, 1.5, size=c)
    if constant_base:
        rho = np.ones(c)
    amp = np.zeros((c, c))
    omega = np.ones((c, c))
    phase = np.zeros((c, c))
    first, last = [0, 1, 2], [3, 4]
    # rows are targets c, columns sources c'
    for tgt in range(c):
        for src in range(c):
            if tgt in first and src in first:
                amp[tgt, src], omega[tgt, src], phase[tgt, src] = 0.05, 0.6 * np.pi, 0.0
            elif tgt in last and src in last:
                amp[tgt, src], omega[tgt, src], phase[tgt, src] = 0.05, 0.4 * np.pi, np.pi
            elif (tgt == 3 and src in first) or (src == 3 and tgt in first):
                amp[tgt, src], omega[tgt, src], phase[tgt, src] = 0.02, 0.2 * np.pi, np.pi
    kinds = np.where(amp > 0, kind, "zero").astype(object)
    return GroundTruth(kinds, amp, omega, phase, mu, rho, horizon=horizon, epsilon=epsilon)


def synth_protocol(kind, n_sequences, horizon=50.0, seed=0, constant_base=False, threads=1,
                   first_stream=0):
    """Dataset of ``n_sequences`` independent sequences plus its ground truth."""
    if n_sequences < 1:
        raise ValueError("n_sequences must be >= 1")
    truth = benchmark_truth(kind, seed, horizon, constant_base)
    cfg = SimConfig(horizon=horizon, seed=seed, epsilon=truth.epsilon)
    return simulate_many(truth, cfg, n_sequences, threads, first_stream), truth

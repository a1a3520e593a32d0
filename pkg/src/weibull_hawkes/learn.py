"""EM learning of the Weibull-base Hawkes model with sparse-group penalties.

The inner loop alternates an E-step (responsibilities) with closed-form updates
of ``mu`` and the coefficient tensor; the outer loop then takes projected
gradient steps on ``rho`` and checks convergence and early stopping.
"""
import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .basis import BasisConfig
from .intensity import CompiledDataset, ModelParams, compile_dataset

log = logging.getLogger(__name__)

MU_FLOOR = 1e-12


@dataclass(frozen=True)
class FitConfig:
    """Hyper-parameters.

    The step on ``rho_c`` is ``alpha_rho * rho_c**2 / max(sum of p_ii over type-c
    events, 1)`` times the gradient, so ``alpha_rho`` is dimensionless and
    independent of dataset size; values below 2 are stable.
    """

    alpha_s: float = 10.0
    alpha_g: float = 100.0
    alpha_rho: float = 0.5
    k_rho_steps: int = 5
    inner_tol: float = 1e-6
    max_inner: int = 100
    max_outer: int = 200
    validation_fraction: float = 0.2
    patience: int = 3
    rho_floor: float = 1e-3
    freeze_rho: bool = False
    group_norm_floor: float = 1e-10

    def __post_init__(self):
        if self.alpha_s < 0 or self.alpha_g < 0:
            raise ValueError("penalty weights must be non-negative")
        if not self.alpha_rho > 0:
            raise ValueError("alpha_rho must be positive")
        for name in ("k_rho_steps", "max_inner", "max_outer"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if not 0 <= self.validation_fraction < 1:
            raise ValueError("validation_fraction must lie in [0, 1)")
        if self.patience < 0:
            raise ValueError("patience must be >= 0")
        if not (self.inner_tol > 0 and self.rho_floor > 0 and self.group_norm_floor > 0):
            raise ValueError("tolerances and floors must be positive")


MODES = {
    # name: (freeze_rho, use alpha_s, use alpha_g)
    "wb-sgl": (False, True, True),
    "wb-s": (False, True, False),
    "wb-gl": (False, False, True),
    "wb": (False, False, False),
    "mle-sgl": (True, True, True),
    "mle-s": (True, True, False),
    "mle-gl": (True, False, True),
    "mle": (True, False, False),
}


def config_for_mode(mode, alpha_s=10.0, alpha_g=100.0, **overrides):
    try:
        freeze, use_s, use_g = MODES[mode]
    except KeyError:
        raise ValueError(f"unknown mode {mode!r}; choose from {sorted(MODES)}") from None
    return FitConfig(alpha_s=alpha_s if use_s else 0.0, alpha_g=alpha_g if use_g else 0.0,
                     freeze_rho=freeze, **overrides)


@dataclass
class Responsibilities:
    base: np.ndarray  # p_ii per event
    pairs: np.ndarray  # p_ijm per (pair, kernel)
    lam: np.ndarray


@dataclass
class FitReport:
    params: ModelParams
    objective_trace: list = field(default_factory=list)
    validation_trace: list = field(default_factory=list)
    stop_reason: str = "max_iterations"
    outer_iterations: int = 0
    inner_iterations: int = 0
    best_iteration: int = 0

    def to_dict(self):
        return {
            "objective_trace": [float(v) for v in self.objective_trace],
            "validation_trace": [float(v) for v in self.validation_trace],
            "stop_reason": self.stop_reason,
            "outer_iterations": self.outer_iterations,
            "inner_iterations": self.inner_iterations,
            "best_iteration": self.best_iteration,
        }


def _as_compiled(data, params):
    if isinstance(data, CompiledDataset):
        return data
    if hasattr(data, "times") and hasattr(data, "t_end"):
        data = [data]
    return compile_dataset(data, params)


def responsibilities(params, data):
    """E-step weights: share of each event's intensity owed to the base or to
    each (earlier event, kernel) pair. Rows sum to one per event."""
    data = _as_compiled(data, params)
    base, terms, lam = data.intensities(params)
    return Responsibilities(base / lam, terms / lam[data.pair_dst, None], lam)


def penalty(coef, alpha_s, alpha_g):
    return alpha_s * float(coef.sum()) + alpha_g * float(np.linalg.norm(coef, axis=2).sum())


def objective(params, data, cfg, lam=None):
    """Penalized negative log-likelihood."""
    return -data.log_likelihood(params, lam) + penalty(params.coef, cfg.alpha_s, cfg.alpha_g)


def update_mu(resp, data, rho):
    num = np.bincount(data.types, weights=resp.base, minlength=data.c_count)
    den = data.window_power_sum(rho)
    return np.maximum(num / den, MU_FLOOR)


def pair_responsibility_sums(resp, data):
    """sum of p_ijm grouped by (target type, source type); shape (C, C, M)."""
    c, m = data.c_count, data.basis.m_count
    out = np.empty((c * c, m))
    for k in range(m):
        out[:, k] = np.bincount(data.pair_key, weights=resp.pairs[:, k], minlength=c * c)
    return out.reshape(c, c, m)


def update_a(resp, data, coef_prev, alpha_s=0.0, alpha_g=0.0, group_norm_floor=1e-10):
    """Positive root of A a^2 + B a + C = 0 per coefficient.

    A uses the previous iterate's group norm, B the kernel integrals of the
    source type plus alpha_s, and C the negated responsibility mass.
    """
    neg_c = pair_responsibility_sums(resp, data)
    b = data.G_by_type[None, :, :] + alpha_s
    if alpha_g > 0:
        norms = np.maximum(np.linalg.norm(coef_prev, axis=2), group_norm_floor)
        a_quad = (alpha_g / norms)[:, :, None]
    else:
        a_quad = np.zeros_like(neg_c)
    # rationalized root avoids cancellation when 4AC << B^2
    disc = np.sqrt(b * b + 4.0 * a_quad * neg_c)
    den = b + disc
    if np.any((den <= 0) & (neg_c > 0)):
        raise FloatingPointError("degenerate coefficient update: no kernel mass for a source type")
    with np.errstate(divide="ignore", invalid="ignore"):
        new = np.where(neg_c > 0, 2.0 * neg_c / den, 0.0)
    return new


def grad_rho(resp, data, params):
    """d(-log L)/d rho_c with responsibilities evaluated at ``params``."""
    c = data.c_count
    log_t = np.log(data.times)
    events = np.bincount(data.types, weights=resp.base * log_t, minlength=c)
    events += np.bincount(data.types, weights=resp.base, minlength=c) / params.rho
    return params.mu * data.window_log_power_sum(params.rho) - events


def update_rho(rho, grad, cfg, base_mass=1.0):
    """One projected gradient step; ``base_mass`` is sum of p_ii per type."""
    rho = np.asarray(rho, dtype=float)
    if cfg.freeze_rho:
        return rho.copy()
    step = cfg.alpha_rho * rho ** 2 / np.maximum(base_mass, 1.0)
    return np.maximum(rho - step * np.asarray(grad), cfg.rho_floor)


def rho_steps(params, data, cfg):
    """``k_rho_steps`` gradient steps on rho.

    Each step refreshes the responsibilities, so the gradient is that of the
    exact likelihood, and re-solves mu in closed form for the new rho. Holding
    mu fixed instead leaves rho crawling along the narrow mu-rho valley.
    """
    if cfg.freeze_rho:
        return params
    for _ in range(cfg.k_rho_steps):
        resp = responsibilities(params, data)
        g = grad_rho(resp, data, params)
        mass = np.bincount(data.types, weights=resp.base, minlength=data.c_count)
        rho = update_rho(params.rho, g, cfg, mass)
        params = params.replace(rho=rho, mu=update_mu(resp, data, rho))
    return params


def em_inner_step(params, data, cfg):
    resp = responsibilities(params, data)
    mu = update_mu(resp, data, params.rho)
    coef = update_a(resp, data, params.coef, cfg.alpha_s, cfg.alpha_g, cfg.group_norm_floor)
    return params.replace(mu=mu, coef=coef)


def initial_params(data, basis, rng):
    c, m = data.c_count, basis.m_count
    span = float(np.sum(data.t_end - data.t_begin))
    rate = np.maximum(data.event_count / span, MU_FLOOR)
    mu = rng.uniform(0.5, 1.5, size=c) * rate
    coef = rng.uniform(0.0, 0.1 / (c * m), size=(c, c, m))
    return ModelParams(coef, np.maximum(mu, MU_FLOOR), np.ones(c), basis)


def split_validation(sequences, fraction, rng):
    n = len(sequences)
    n_val = int(round(fraction * n)) if fraction > 0 else 0
    if n_val == 0 or n_val >= n:
        return list(sequences), []
    perm = rng.permutation(n)
    val_idx = set(perm[:n_val].tolist())
    train = [s for i, s in enumerate(sequences) if i not in val_idx]
    val = [s for i, s in enumerate(sequences) if i in val_idx]
    return train, val


def em_fit(dataset, cfg=FitConfig(), init_seed=0, basis=None, c_count=None, init=None):
    """Fit a model to ``dataset`` (list of EventSequence). Returns a FitReport."""
    if len(dataset) == 0:
        raise ValueError("empty dataset")
    if init is not None:
        basis = init.basis
        c_count = init.c_count
    if basis is None:
        basis = BasisConfig.synthetic_default()
    if c_count is None:
        c_count = int(max((s.types.max() for s in dataset if len(s)), default=0)) + 1
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(int(init_seed))))
    train, val = split_validation(dataset, cfg.validation_fraction, rng)
    data = CompiledDataset(train, basis, c_count)
    val_data = CompiledDataset(val, basis, c_count) if val else None
    params = init if init is not None else initial_params(data, basis, rng)

    report = FitReport(params)
    best_val = -np.inf
    stale = 0
    prev_obj = objective(params, data, cfg)
    for outer in range(1, cfg.max_outer + 1):
        inner_prev = prev_obj
        for _ in range(cfg.max_inner):
            params = em_inner_step(params, data, cfg)
            report.inner_iterations += 1
            cur = objective(params, data, cfg)
            if abs(inner_prev - cur) <= cfg.inner_tol * max(abs(cur), 1.0):
                inner_prev = cur
                break
            inner_prev = cur
        params = rho_steps(params, data, cfg)
        obj = objective(params, data, cfg)
        report.objective_trace.append(obj)
        report.outer_iterations = outer

        if val_data is not None:
            vll = val_data.log_likelihood(params)
            report.validation_trace.append(vll)
            if vll > best_val:
                best_val, stale = vll, 0
                report.params, report.best_iteration = params, outer
            else:
                stale += 1
        else:
            report.params, report.best_iteration = params, outer

        log.debug("outer %d objective %.6f", outer, obj)
        if abs(prev_obj - obj) <= cfg.inner_tol * max(abs(obj), 1.0):
            report.stop_reason = "converged"
            break
        if val_data is not None and stale >= max(cfg.patience, 1):
            report.stop_reason = "early_stopped"
            break
        prev_obj = obj
    return report

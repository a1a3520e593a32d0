"""Evaluation criteria comparing a fitted model to ground truth and test data."""
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .intensity import base_integral, log_likelihood


@dataclass
class MetricsReport:
    loglike_test: Optional[float] = None
    e_mu: Optional[float] = None
    e_rho: Optional[float] = None
    e_h: Optional[float] = None
    e_phi: Optional[float] = None
    granger_accuracy: Optional[float] = None

    def to_dict(self):
        # metrics that do not apply are left out, never reported as zero
        return {k: float(v) for k, v in asdict(self).items() if v is not None}


def rel_err_vector(estimate, truth):
    estimate = np.asarray(estimate, dtype=float)
    truth = np.asarray(truth, dtype=float)
    norm = np.linalg.norm(truth)
    if norm == 0:
        raise ValueError("relative error undefined for an all-zero truth vector")
    return float(np.linalg.norm(estimate - truth) / norm)


def _cell_integrals(mu, rho, edges):
    # exact integral of the Weibull hazard over each grid cell
    return mu * (np.where(edges[1:] > 0, edges[1:] ** rho, 0.0)
                 - np.where(edges[:-1] > 0, edges[:-1] ** rho, 0.0))


def rel_err_base(est, truth, window, steps=10_000):
    """Mean over types of int |h_est - h_true| / int h_true on ``window``.

    The numerator sums |cell integral of the difference| over ``steps`` cells.
    Cell integrals are exact, so the hazard singularity at t = 0 for shape < 1
    does no harm; only the cell holding the single sign change is approximate.
    """
    t_b, t_e = map(float, window)
    if not t_e > t_b:
        raise ValueError("window must have positive length")
    edges = np.linspace(t_b, t_e, steps + 1)
    ratios = []
    for mu_e, rho_e, mu_t, rho_t in zip(est.mu, est.rho, truth.mu, truth.rho):
        diff = _cell_integrals(mu_e, rho_e, edges) - _cell_integrals(mu_t, rho_t, edges)
        den = base_integral(mu_t, rho_t, t_b, t_e)
        ratios.append(np.abs(diff).sum() / den)
    return float(np.mean(ratios))


def _trapezoid(y, t):
    return float(np.sum(0.5 * (y[..., 1:] + y[..., :-1]) * np.diff(t)))


def impact_curves(model, grid):
    """(C, C, len(grid)) impact values for a ModelParams or GroundTruth."""
    c = model.c_count
    if hasattr(model, "basis"):
        return np.einsum("abm,km->abk", model.coef, model.basis.values(grid))
    out = np.empty((c, c, grid.size))
    for i in range(c):
        for j in range(c):
            out[i, j] = model.impact(i, j, grid)
    return out


def abs_err_impact(est, truth, horizon=None, steps=10_000):
    """Sum over all pairs of the integrated absolute impact deviation on [0, horizon]."""
    if horizon is None:
        horizon = max(est.max_support, truth.max_support)
    grid = np.linspace(0.0, float(horizon), steps + 1)
    dev = np.abs(impact_curves(est, grid) - impact_curves(truth, grid))
    return _trapezoid(dev, grid)


def predicted_edges(params, zero_threshold=1e-2):
    norms = params.group_norms()
    top = norms.max()
    if top == 0:
        return np.zeros_like(norms, dtype=bool)
    return norms > zero_threshold * top


def granger_accuracy(est, truth, zero_threshold=1e-2):
    if not zero_threshold > 0:
        raise ValueError("zero_threshold must be positive")
    pred = predicted_edges(est, zero_threshold)
    if hasattr(truth, "nonzero_pairs"):
        actual = truth.nonzero_pairs()
    else:
        actual = predicted_edges(truth, zero_threshold)
    return float(np.mean(pred == actual))


def evaluate(est, test_sequences=None, truth=None, window=None, zero_threshold=1e-2, steps=10_000):
    """All metrics that apply given what is available."""
    report = MetricsReport()
    if test_sequences is not None:
        report.loglike_test = log_likelihood(est, test_sequences)
    if truth is not None:
        if truth.c_count != est.c_count:
            raise ValueError(f"model has C={est.c_count}, truth has C={truth.c_count}")
        report.e_mu = rel_err_vector(est.mu, truth.mu)
        report.e_rho = rel_err_vector(est.rho, truth.rho)
        if window is None:
            if hasattr(truth, "horizon"):
                window = (truth.epsilon, truth.horizon)
            elif test_sequences:
                window = (min(s.t_begin for s in test_sequences), max(s.t_end for s in test_sequences))
        if window is not None:
            report.e_h = rel_err_base(est, truth, window, steps)
        report.e_phi = abs_err_impact(est, truth, steps=steps)
        report.granger_accuracy = granger_accuracy(est, truth, zero_threshold)
    return report

"""Infectivity matrices, Granger-causality graphs and trigger-pattern labels.

Matrix entry ``[c, c']`` is the integrated impact of source type ``c'`` on
target type ``c``; an edge ``c' -> c`` exists when that impact is non-zero.
"""
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np


@dataclass(frozen=True)
class TriggerConfig:
    delay_frac: float = 0.1
    min_delay: float = 1.0
    stable_window: float = 50.0
    stable_frac: float = 0.1
    peak_salience: float = 0.5
    grid_points: int = 10_000


@dataclass
class Edge:
    source: int
    target: int
    weight: float


@dataclass
class TriggerPattern:
    source: int
    target: int
    pattern: str  # delay | stable | unstable
    peak_time: float
    delay_length: Optional[float] = None
    decay_time_to_10pct: Optional[float] = None
    peaks: list = field(default_factory=list)


@dataclass
class InfectivityReport:
    matrix: np.ndarray
    edges: list
    patterns: list

    def to_dict(self, one_based=True):
        off = 1 if one_based else 0

        def shift(d):
            d = dict(d)
            d["source"] += off
            d["target"] += off
            return d

        return {
            "matrix": self.matrix.tolist(),
            "edges": [shift(asdict(e)) for e in self.edges],
            "patterns": [shift(asdict(p)) for p in self.patterns],
        }


def infectivity_matrix(params):
    """(C, C) integrals of every impact function over its full support."""
    return params.coef @ params.basis.integrals(params.basis.support)


def causality_graph(params, threshold=1e-2):
    """Edges ``c' -> c`` whose group norm exceeds ``threshold`` times the largest."""
    if threshold < 0:
        raise ValueError("threshold must be non-negative")
    norms = params.group_norms()
    top = norms.max()
    if top == 0:
        return []
    inf = infectivity_matrix(params)
    tgt, src = np.nonzero(norms > threshold * top)
    return [Edge(int(s), int(t), float(inf[t, s])) for t, s in zip(tgt, src)]


def _local_peaks(y):
    left = np.concatenate([[-np.inf], y[:-1]])
    right = np.concatenate([y[1:], [-np.inf]])
    return np.nonzero((y >= left) & (y > right))[0]


def classify_curve(grid, phi, cfg=TriggerConfig()):
    """Label one impact curve sampled on ``grid``. Returns a dict of pattern fields."""
    peak_idx = int(np.argmax(phi))
    peak = phi[peak_idx]
    if not peak > 0:
        raise ValueError("cannot classify an all-zero impact function")
    out = {"peak_time": float(grid[peak_idx]), "delay_length": None,
           "decay_time_to_10pct": None, "peaks": []}

    first_rise = grid[np.argmax(phi >= cfg.delay_frac * peak)]
    if first_rise >= cfg.min_delay:
        out.update(pattern="delay", delay_length=float(first_rise))
        return out

    above = np.nonzero(phi >= cfg.stable_frac * peak)[0]
    last = above[-1]
    if last + 1 < grid.size:
        decay = float(grid[last + 1])
        out["decay_time_to_10pct"] = decay
        if decay <= cfg.stable_window:
            out["pattern"] = "stable"
            return out
    out["pattern"] = "unstable"
    salient = [i for i in _local_peaks(phi) if phi[i] >= cfg.peak_salience * peak]
    out["peaks"] = [float(grid[i]) for i in salient]
    return out


def classify_triggers(params, cfg=TriggerConfig(), threshold=1e-2):
    """Trigger pattern for every edge of the causality graph."""
    grid = np.linspace(0.0, params.basis.support, cfg.grid_points)
    g = params.basis.values(grid)
    patterns = []
    for e in causality_graph(params, threshold):
        phi = g @ params.coef[e.target, e.source]
        if not phi.max() > 0:
            continue
        patterns.append(TriggerPattern(e.source, e.target, **classify_curve(grid, phi, cfg)))
    return patterns


def infectivity_report(params, threshold=1e-2, cfg=TriggerConfig()):
    return InfectivityReport(infectivity_matrix(params), causality_graph(params, threshold),
                             classify_triggers(params, cfg, threshold))


def top_impact_curves(params, k, points=1000):
    """The ``k`` largest-infectivity impact functions as (source, target, t, phi)."""
    inf = infectivity_matrix(params)
    order = np.argsort(-inf, axis=None, kind="stable")[:k]
    grid = np.linspace(0.0, params.basis.support, points)
    g = params.basis.values(grid)
    curves = []
    for flat in order:
        tgt, src = np.unravel_index(flat, inf.shape)
        curves.append((int(src), int(tgt), grid, g @ params.coef[tgt, src]))
    return curves

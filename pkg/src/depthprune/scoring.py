"""Domain-aware redundancy scoring.

Pipeline: per-domain mean of per-sample in/out similarities, z-normalization
across the pruneable layer set, and an alpha-mixed ranking combining the
normalized non-math and math scores.
"""

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import (AlphaOutOfRange, EmptyDomain, EmptyInput,
                     LayerSetMismatch, MissingLayerCoverage)

EPSILON = 1e-8

DEFAULT_ALPHA = 0.7


@dataclass(frozen=True)
class DomainScoreTable:
    domain: str
    raw: dict            # layer -> mean similarity over the domain's samples
    sample_count: int
    mu: float = 0.0
    sigma: float = 0.0
    epsilon: float = EPSILON
    normalized: dict = None


@dataclass(frozen=True)
class MixedRanking:
    alpha: float
    scores: dict         # layer -> combined score
    order: tuple         # layers sorted by score desc, ties to higher index


def rank_order(scores: dict) -> tuple:
    """Descending score order; equal scores put the deeper layer first."""
    return tuple(sorted(scores, key=lambda l: (-scores[l], -l)))


def aggregate_domain(records, domain: str, pruneable) -> DomainScoreTable:
    """Mean per-sample similarity per pruneable layer, subtasks merged flat."""
    pruneable = frozenset(pruneable)
    sums = {l: 0.0 for l in pruneable}
    counts = {l: 0 for l in pruneable}
    sample_ids = set()
    for rec in records:
        if rec.domain != domain:
            continue
        sample_ids.add(rec.sample_id)
        if rec.layer in sums:
            sums[rec.layer] += rec.sim
            counts[rec.layer] += 1
    if not sample_ids:
        raise EmptyDomain(f"no records for domain {domain!r}")
    for l in sorted(pruneable):
        if counts[l] == 0:
            raise MissingLayerCoverage(f"domain {domain!r} has no samples covering layer {l}")
    raw = {l: sums[l] / counts[l] for l in pruneable}
    return DomainScoreTable(domain=domain, raw=raw, sample_count=len(sample_ids))


def znormalize(table: DomainScoreTable) -> DomainScoreTable:
    """Fill mu/sigma (population stats over the pruneable set) and normalized scores."""
    values = np.array([table.raw[l] for l in sorted(table.raw)], dtype=np.float64)
    mu = float(values.mean())
    sigma = float(values.std())  # population stdev: stats over a fixed layer set
    if sigma == 0.0:
        normalized = {l: 0.0 for l in table.raw}
    else:
        normalized = {l: (table.raw[l] - mu) / (sigma + table.epsilon) for l in table.raw}
    return replace(table, mu=mu, sigma=sigma, normalized=normalized)


def mixed_ranking(math_table: DomainScoreTable, nonmath_table: DomainScoreTable,
                  alpha: float) -> MixedRanking:
    """R_l = alpha * nonmath + (1 - alpha) * math over normalized scores."""
    if not (0.0 <= alpha <= 1.0):
        raise AlphaOutOfRange(f"alpha must be in [0, 1], got {alpha}")
    if math_table.normalized is None or nonmath_table.normalized is None:
        raise LayerSetMismatch("both tables must be normalized before mixing")
    if set(math_table.normalized) != set(nonmath_table.normalized):
        raise LayerSetMismatch("math and nonmath tables cover different layer sets")
    scores = {l: alpha * nonmath_table.normalized[l] + (1.0 - alpha) * math_table.normalized[l]
              for l in math_table.normalized}
    return MixedRanking(alpha=alpha, scores=scores, order=rank_order(scores))


def single_domain_ranking(table: DomainScoreTable) -> MixedRanking:
    """Ranking by one domain's normalized scores alone."""
    if table.normalized is None:
        raise LayerSetMismatch("table must be normalized before ranking")
    alpha = 1.0 if table.domain == "nonmath" else 0.0
    scores = dict(table.normalized)
    return MixedRanking(alpha=alpha, scores=scores, order=rank_order(scores))


@dataclass(frozen=True)
class HeatmapMatrix:
    subtasks: tuple
    layers: tuple
    values: np.ndarray   # (num_subtasks, num_layers) mean sims

    def to_csv(self) -> str:
        lines = ["subtask," + ",".join(f"layer_{l}" for l in self.layers)]
        for i, tag in enumerate(self.subtasks):
            lines.append(tag + "," + ",".join(repr(float(v)) for v in self.values[i]))
        return "\n".join(lines) + "\n"


def heatmap_matrix(records) -> HeatmapMatrix:
    """Mean in/out similarity per (subtask, layer) over all samples."""
    if not records:
        raise EmptyInput("no records to build a heatmap from")
    subtasks = []
    for rec in records:
        if rec.subtask not in subtasks:
            subtasks.append(rec.subtask)
    layers = tuple(sorted({rec.layer for rec in records}))
    sums = np.zeros((len(subtasks), len(layers)))
    counts = np.zeros_like(sums)
    srow = {s: i for i, s in enumerate(subtasks)}
    lcol = {l: j for j, l in enumerate(layers)}
    for rec in records:
        i, j = srow[rec.subtask], lcol[rec.layer]
        sums[i, j] += rec.sim
        counts[i, j] += 1
    with np.errstate(invalid="ignore"):
        values = np.where(counts > 0, sums / np.maximum(counts, 1), math.nan)
    return HeatmapMatrix(subtasks=tuple(subtasks), layers=layers, values=values)

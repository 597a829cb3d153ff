"""Comparison rankers: linear-CKA adjacency, triplet interlacing, random.

All three consume activation records from the log, reuse only pooled
output vectors and stored similarities, and respect the protected
endpoint set through the pruneable layer set they are given.
"""

from dataclasses import dataclass

import numpy as np

from .errors import (BudgetInfeasible, BudgetTooLarge, DegenerateFeatures,
                     MissingSubtask)
from .linalg import center_rows, cosine
from .planner import PrunePlan
from .probes import MATH_SUBTASKS, NONMATH_SUBTASKS
from .rng import SeededStream

ALL_SUBTASKS = MATH_SUBTASKS + NONMATH_SUBTASKS  # 9 pseudo-samples


def feature_matrices(records) -> dict:
    """Per-layer (9, d) matrices: one row per subtask, mean pooled_out."""
    layers = sorted({rec.layer for rec in records})
    sums = {}
    counts = {}
    for rec in records:
        key = (rec.layer, rec.subtask)
        if key not in sums:
            sums[key] = np.zeros(rec.pooled_out.shape[0])
            counts[key] = 0
        sums[key] += np.asarray(rec.pooled_out, dtype=np.float64)
        counts[key] += 1
    features = {}
    for layer in layers:
        rows = []
        for tag in ALL_SUBTASKS:
            key = (layer, tag)
            if key not in sums:
                raise MissingSubtask(f"layer {layer} has no records for subtask {tag!r}")
            rows.append(sums[key] / counts[key])
        features[layer] = np.vstack(rows)
    return features


def linear_cka(x: np.ndarray, y: np.ndarray) -> float:
    """Linear CKA of two (n, d) feature matrices after column centering."""
    xc = center_rows(x)
    yc = center_rows(y)
    denom_x = np.linalg.norm(xc.T @ xc)
    denom_y = np.linalg.norm(yc.T @ yc)
    if denom_x == 0.0 or denom_y == 0.0:
        raise DegenerateFeatures("centered feature matrix has zero Frobenius norm")
    num = np.linalg.norm(xc.T @ yc) ** 2
    return float(num / (denom_x * denom_y))


@dataclass(frozen=True)
class CkaTable:
    features: dict      # layer -> (9, d) matrix
    adjacency: dict     # layer l -> CKA(X_l, X_{l+1})
    redundancy: dict    # pruneable layer l' -> score attributed to the later layer
    degenerate: frozenset


def cka_rank(records, pruneable) -> CkaTable:
    """Adjacent-layer CKA redundancy; high CKA(l, l+1) marks l+1 pruneable."""
    pruneable = sorted(pruneable)
    features = feature_matrices(records)
    adjacency = {}
    redundancy = {}
    degenerate = set()
    for later in pruneable:
        earlier = later - 1
        if earlier not in features or later not in features:
            raise MissingSubtask(f"no features for adjacency pair ({earlier}, {later})")
        try:
            value = linear_cka(features[earlier], features[later])
        except DegenerateFeatures:
            value = 0.0
            degenerate.add(later)
        adjacency[earlier] = value
        redundancy[later] = value
    return CkaTable(features=features, adjacency=adjacency,
                    redundancy=redundancy, degenerate=frozenset(degenerate))


def _adjacent_sims(features: dict, layers) -> dict:
    """S_l = mean over the 9 subtask rows of cosine(row_l, row_{l+1})."""
    sims = {}
    for l in layers:
        if l + 1 not in features:
            continue
        vals = [cosine(features[l][i], features[l + 1][i]) for i in range(len(ALL_SUBTASKS))]
        sims[l] = float(np.mean(vals))
    return sims


def _inout_redundancy(records) -> dict:
    """Domain-agnostic per-layer mean of stored in/out similarities."""
    sums, counts = {}, {}
    for rec in records:
        sums[rec.layer] = sums.get(rec.layer, 0.0) + rec.sim
        counts[rec.layer] = counts.get(rec.layer, 0) + 1
    return {l: sums[l] / counts[l] for l in sums}


def interlace_solution(records, pruneable, k: int):
    """Solve the triplet selection; returns (pruned, anchors, inout, num_layers).

    Triplets (l, l+1, l+2) over the pruneable range are scored by the mean
    of the two adjacent similarities, accepted greedily under a strict
    non-overlap constraint, and each accepted triplet removes the more
    redundant of its first two layers while keeping l+2 as an anchor.
    If non-overlapping triplets cannot cover the budget, remaining removals
    are filled from the highest in/out-redundancy layers subject to the
    >= 2 spacing constraint and anchor preservation; if that still falls
    short, the budget is infeasible.
    """
    pruneable = sorted(pruneable)
    pset = set(pruneable)
    n_mid = len(pruneable)
    if k > n_mid:
        raise BudgetInfeasible(f"k = {k} exceeds pruneable count {n_mid}")
    features = feature_matrices(records)
    num_layers = max(features) + 1
    sims = _adjacent_sims(features, [l for l in pruneable if l + 1 in features])
    inout = _inout_redundancy(records)

    triplets = []
    for l in pruneable:
        if l + 1 in pset and l in sims and (l + 1) in sims and l + 2 < num_layers:
            score = (sims[l] + sims[l + 1]) / 2.0
            triplets.append((score, l))
    # descending score; equal scores favor the earlier start
    triplets.sort(key=lambda t: (-t[0], t[1]))

    used = set()
    anchors = set()
    pruned = []
    for _, l in triplets:
        if len(pruned) >= k:
            break
        members = {l, l + 1, l + 2}
        if members & used:
            continue
        used |= members
        anchors.add(l + 2)
        # remove the more redundant of l / l+1; ties remove l+1
        if inout.get(l, -2.0) > inout.get(l + 1, -2.0):
            pruned.append(l)
        else:
            pruned.append(l + 1)

    if len(pruned) < k:
        candidates = sorted((l for l in pruneable if l not in pruned and l not in anchors),
                            key=lambda l: (-inout.get(l, -2.0), -l))
        for l in candidates:
            if len(pruned) >= k:
                break
            if all(abs(l - q) >= 2 for q in pruned):
                pruned.append(l)

    if len(pruned) < k:
        raise BudgetInfeasible(
            f"interlace can supply only {len(pruned)} spaced removals for budget {k}")
    return tuple(pruned), frozenset(anchors), inout, num_layers


def interlace_plan(records, pruneable, k: int, budget_fraction: float = None) -> PrunePlan:
    """Triplet-based spaced pruning; see interlace_solution for the rules."""
    pruneable = sorted(pruneable)
    pruned, _, inout, num_layers = interlace_solution(records, pruneable, k)
    protected = frozenset(range(num_layers)) - frozenset(pruneable)
    if budget_fraction is None:
        budget_fraction = k / len(pruneable)
    plan = PrunePlan(method="interlace", budget_fraction=budget_fraction, k=k,
                     num_layers=num_layers, protected=protected,
                     pruned=pruned, scores={l: inout[l] for l in pruneable})
    plan.validate()
    return plan


def random_plan(pruneable, k: int, seed: int, num_layers: int = None,
                budget_fraction: float = None) -> PrunePlan:
    """k distinct layers drawn uniformly without replacement, seeded."""
    pruneable = sorted(pruneable)
    if k > len(pruneable):
        raise BudgetTooLarge(f"k = {k} exceeds pruneable count {len(pruneable)}")
    if num_layers is None:
        num_layers = max(pruneable) + 2  # assume one protected layer after the last pruneable
    stream = SeededStream(seed)
    pruned = stream.sample_without_replacement(pruneable, k)
    protected = frozenset(range(num_layers)) - frozenset(pruneable)
    if budget_fraction is None:
        budget_fraction = k / len(pruneable)
    plan = PrunePlan(method="random", budget_fraction=budget_fraction, k=k,
                     num_layers=num_layers, protected=protected,
                     pruned=tuple(pruned), seed=seed)
    plan.validate()
    return plan

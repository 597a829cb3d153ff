"""Budgeted prune-plan construction and serialization."""

import json
import math
from dataclasses import dataclass

from .errors import BudgetOutOfRange, RankingCoverageMismatch, SchemaViolation
from .scoring import MixedRanking, rank_order

METHODS = ("ours-math", "ours-nonmath", "ours-mixed", "cka", "interlace", "random")

DEFAULT_BUDGETS = (0.10, 0.25, 0.40)

_PLAN_KEYS = {"method", "alpha", "budget_fraction", "k", "num_layers",
              "protected", "pruned", "scores", "seed"}


def default_protected(num_layers: int) -> frozenset:
    return frozenset({0, num_layers - 1})


def budget_k(p: float, n_mid: int) -> int:
    """K = floor(p * n_mid), guarded against float representation of p."""
    if not (0.0 <= p <= 1.0):
        raise BudgetOutOfRange(f"budget fraction must be in [0, 1], got {p}")
    if n_mid < 0:
        raise BudgetOutOfRange(f"n_mid must be >= 0, got {n_mid}")
    return int(math.floor(p * n_mid + 1e-9))


@dataclass(frozen=True)
class PrunePlan:
    method: str
    budget_fraction: float
    k: int
    num_layers: int
    protected: frozenset
    pruned: tuple          # rank order
    alpha: float = None    # ours-mixed only
    scores: dict = None    # layer -> justifying score
    seed: int = None       # random only

    def validate(self):
        if self.method not in METHODS:
            raise SchemaViolation(f"method: unknown tag {self.method!r}")
        n_mid = self.num_layers - len(self.protected)
        if self.k != budget_k(self.budget_fraction, n_mid):
            raise SchemaViolation(
                f"k: {self.k} != floor({self.budget_fraction} * {n_mid})")
        if len(self.pruned) != self.k:
            raise SchemaViolation(f"pruned: has {len(self.pruned)} layers but k = {self.k}")
        if len(set(self.pruned)) != len(self.pruned):
            raise SchemaViolation("pruned: duplicate layer index")
        for layer in self.pruned:
            if not (0 <= layer < self.num_layers):
                raise SchemaViolation(f"pruned: layer {layer} outside [0, {self.num_layers})")
            if layer in self.protected:
                raise SchemaViolation(f"pruned: layer {layer} is protected")
        for p in self.protected:
            if not (0 <= p < self.num_layers):
                raise SchemaViolation(f"protected: layer {p} outside [0, {self.num_layers})")


def make_plan(ranking, p: float, num_layers: int, protected, method: str,
              seed: int = None) -> PrunePlan:
    """Truncate a descending ranking to the budget K.

    ranking is a MixedRanking or a plain {layer: score} map covering exactly
    the pruneable set.
    """
    protected = frozenset(protected)
    if isinstance(ranking, MixedRanking):
        scores = dict(ranking.scores)
        alpha = ranking.alpha
    else:
        scores = dict(ranking)
        alpha = None
    l_mid = frozenset(range(num_layers)) - protected
    if set(scores) != l_mid:
        raise RankingCoverageMismatch(
            f"ranking covers {sorted(scores)}, pruneable set is {sorted(l_mid)}")
    k = budget_k(p, len(l_mid))
    order = rank_order(scores)
    plan = PrunePlan(method=method, budget_fraction=p, k=k, num_layers=num_layers,
                     protected=protected, pruned=order[:k], alpha=alpha,
                     scores=scores, seed=seed)
    plan.validate()
    return plan


def serialize_plan(plan: PrunePlan) -> str:
    plan.validate()
    obj = {
        "method": plan.method,
        "alpha": plan.alpha,
        "budget_fraction": plan.budget_fraction,
        "k": plan.k,
        "num_layers": plan.num_layers,
        "protected": sorted(plan.protected),
        "pruned": list(plan.pruned),
        "scores": {str(l): plan.scores[l] for l in sorted(plan.scores)} if plan.scores else None,
        "seed": plan.seed,
    }
    return json.dumps(obj, separators=(",", ":")) + "\n"


def parse_plan(text) -> PrunePlan:
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaViolation(f"plan: invalid JSON ({exc.msg})") from exc
    if not isinstance(obj, dict):
        raise SchemaViolation("plan: not an object")
    unknown = set(obj) - _PLAN_KEYS
    if unknown:
        raise SchemaViolation(f"plan: unknown key {sorted(unknown)[0]!r}")
    missing = _PLAN_KEYS - set(obj)
    if missing:
        raise SchemaViolation(f"plan: missing key {sorted(missing)[0]!r}")
    scores = obj["scores"]
    if scores is not None:
        try:
            scores = {int(l): float(s) for l, s in scores.items()}
        except (TypeError, ValueError) as exc:
            raise SchemaViolation("scores: keys must be layer indices") from exc
    plan = PrunePlan(
        method=obj["method"],
        budget_fraction=obj["budget_fraction"],
        k=obj["k"],
        num_layers=obj["num_layers"],
        protected=frozenset(obj["protected"]),
        pruned=tuple(obj["pruned"]),
        alpha=obj["alpha"],
        scores=scores,
        seed=obj["seed"],
    )
    plan.validate()
    return plan

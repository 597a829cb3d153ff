"""Budget x method sweeps, output-fidelity metrics, and CSV reports."""

from dataclasses import dataclass

import numpy as np

from .baselines import cka_rank, interlace_plan, random_plan
from .capture import capture_run
from .errors import BudgetOutOfRange, DepthPruneError, InconsistentDepth, ModelMismatch
from .model import apply_prune_plan, build_model
from .planner import budget_k, make_plan
from .probes import DOMAINS, default_probe_sets
from .scoring import (aggregate_domain, heatmap_matrix, mixed_ranking,
                      single_domain_ranking, znormalize)

KL_FLOOR = 1e-12

SWEEP_CSV_HEADER = "method,budget,domain,seed,top1_agreement,final_hidden_cosine,mean_kl,num_probes"

REGIME_RANKING_SENSITIVE = "ranking-sensitive"
REGIME_TRANSITION = "transition"
REGIME_STRUCTURE_DOMINATED = "structure-dominated"


@dataclass(frozen=True)
class FidelityReport:
    method: str
    budget_fraction: float
    domain: str
    top1_agreement: float
    final_hidden_cosine: float
    mean_kl: float
    num_probes: int
    seed: int


@dataclass(frozen=True)
class RegimeLabel:
    budget_fraction: float
    label: str


def classify_regime(p: float) -> RegimeLabel:
    """Fixed budget bands: <=15% ranking-sensitive, <=32% transition, above structure-dominated."""
    if not (0.0 <= p <= 1.0):
        raise BudgetOutOfRange(f"budget fraction must be in [0, 1], got {p}")
    if p <= 0.15:
        label = REGIME_RANKING_SENSITIVE
    elif p <= 0.32:
        label = REGIME_TRANSITION
    else:
        label = REGIME_STRUCTURE_DOMINATED
    return RegimeLabel(budget_fraction=p, label=label)


def _floored_softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    p = np.exp(z)
    p /= p.sum(axis=-1, keepdims=True)
    p = np.maximum(p, KL_FLOOR)
    return p / p.sum(axis=-1, keepdims=True)


def fidelity(base, pruned, probes, method: str = "", budget_fraction: float = 0.0,
             seed: int = 0, base_traces=None) -> FidelityReport:
    """Position-wise output agreement of pruned vs unpruned model on a probe set."""
    cb, cp = base.config, pruned.config
    if (cb.vocab_size, cb.max_seq_len, cb.hidden_dim) != (cp.vocab_size, cp.max_seq_len, cp.hidden_dim):
        raise ModelMismatch("base and pruned models disagree on vocab/max_seq_len/hidden_dim")
    samples = list(probes.all_samples())
    if not samples:
        raise ModelMismatch("probe set is empty")
    agree = 0
    positions = 0
    cos_sum = 0.0
    kl_sum = 0.0
    for idx, (_, tokens) in enumerate(samples):
        tb = base_traces[idx] if base_traces is not None else base.forward_with_hooks(tokens)
        tp = pruned.forward_with_hooks(tokens)
        t = tb.logits.shape[0]
        agree += int(np.sum(np.argmax(tb.logits, axis=1) == np.argmax(tp.logits, axis=1)))
        positions += t
        hb, hp = tb.h_out[-1], tp.h_out[-1]
        dots = np.einsum("td,td->t", hb, hp)
        norms = np.linalg.norm(hb, axis=1) * np.linalg.norm(hp, axis=1)
        cos_sum += float(np.sum(dots / norms))
        pb = _floored_softmax(tb.logits)
        pp = _floored_softmax(tp.logits)
        kl_sum += float(np.sum(pb * np.log(pb / pp)))
    return FidelityReport(
        method=method,
        budget_fraction=budget_fraction,
        domain=probes.domain,
        top1_agreement=agree / positions,
        final_hidden_cosine=cos_sum / positions,
        mean_kl=kl_sum / positions,
        num_probes=len(samples),
        seed=seed,
    )


def plan_for_method(method: str, header, records, p: float, alpha: float = 0.7,
                    seed: int = None):
    """Build the PrunePlan for one method tag at budget p from log data."""
    protected = frozenset(header.protected_layers)
    num_layers = header.num_layers
    l_mid = sorted(set(range(num_layers)) - protected)
    k = budget_k(p, len(l_mid))
    if method in ("ours-math", "ours-nonmath", "ours-mixed"):
        math_t = znormalize(aggregate_domain(records, "math", l_mid))
        nonmath_t = znormalize(aggregate_domain(records, "nonmath", l_mid))
        if method == "ours-math":
            ranking = dict(single_domain_ranking(math_t).scores)
        elif method == "ours-nonmath":
            ranking = dict(single_domain_ranking(nonmath_t).scores)
        else:
            ranking = mixed_ranking(math_t, nonmath_t, alpha)
        return make_plan(ranking, p, num_layers, protected, method)
    if method == "cka":
        table = cka_rank(records, l_mid)
        return make_plan(table.redundancy, p, num_layers, protected, "cka")
    if method == "interlace":
        return interlace_plan(records, l_mid, k, budget_fraction=p)
    if method == "random":
        if seed is None:
            raise DepthPruneError("random method requires a seed")
        return random_plan(l_mid, k, seed, num_layers=num_layers, budget_fraction=p)
    raise DepthPruneError(f"unknown method {method!r}")


def sweep(config, methods, budgets, seeds, alpha: float = 0.7, probe_counts=None,
          probe_seed: int = 0):
    """Full evaluation grid.

    Returns (reports, plans, heatmap): one FidelityReport per
    (method, budget, domain, seed), one plan per (method, budget) with
    random plans taken at the first seed, and the candidate heatmap.
    """
    if not methods:
        raise DepthPruneError("no methods selected")
    if not budgets:
        raise DepthPruneError("no budgets selected")
    if not seeds:
        raise DepthPruneError("no seeds selected")
    model = build_model(config)
    probe_sets = default_probe_sets(config, probe_seed, probe_counts)
    header, records = capture_run(model, probe_sets)
    base_traces = {
        ps.domain: [model.forward_with_hooks(tokens) for _, tokens in ps.all_samples()]
        for ps in probe_sets
    }
    heatmap = heatmap_matrix(records)

    reports = []
    grid_plans = {}
    cache = {}
    for method in methods:
        for p in budgets:
            for seed in seeds:
                plan = plan_for_method(method, header, records, p, alpha=alpha, seed=seed)
                if (method, p) not in grid_plans:
                    grid_plans[(method, p)] = plan
                key = plan.pruned
                if key not in cache:
                    cache[key] = apply_prune_plan(model, plan)
                pruned_model = cache[key]
                for ps in probe_sets:
                    reports.append(fidelity(
                        model, pruned_model, ps, method=method, budget_fraction=p,
                        seed=seed, base_traces=base_traces[ps.domain]))
    plans = [grid_plans[k] for k in sorted(grid_plans, key=lambda mk: (mk[0], mk[1]))]
    return reports, plans, heatmap


def sweep_csv(reports) -> str:
    rows = []
    for r in reports:
        rows.append(",".join([
            r.method, repr(float(r.budget_fraction)), r.domain, str(r.seed),
            repr(float(r.top1_agreement)), repr(float(r.final_hidden_cosine)),
            repr(float(r.mean_kl)), str(r.num_probes),
        ]))
    rows.sort()
    return SWEEP_CSV_HEADER + "\n" + "\n".join(rows) + "\n"


def removal_pattern_grid(plans) -> str:
    """0/1 grid CSV of pruned layers per (method, budget) plus a protected-layer flag row."""
    if not plans:
        raise InconsistentDepth("no plans given")
    depths = {plan.num_layers for plan in plans}
    if len(depths) != 1:
        raise InconsistentDepth(f"plans disagree on depth: {sorted(depths)}")
    num_layers = depths.pop()
    header = "method,budget," + ",".join(f"layer_{l}" for l in range(num_layers))
    protected = sorted(set().union(*(plan.protected for plan in plans)))
    lines = [header]
    flag = ["1" if l in protected else "0" for l in range(num_layers)]
    lines.append("protected,," + ",".join(flag))
    for plan in sorted(plans, key=lambda pl: (pl.method, pl.budget_fraction)):
        cells = ["1" if l in plan.pruned else "0" for l in range(num_layers)]
        lines.append(f"{plan.method},{repr(float(plan.budget_fraction))}," + ",".join(cells))
    return "\n".join(lines) + "\n"

import numpy as np
import pytest

from depthprune.errors import (BudgetOutOfRange, InconsistentDepth,
                               ModelMismatch)
from depthprune.model import ToyModelConfig, apply_prune_plan, build_model
from depthprune.planner import PrunePlan, default_protected
from depthprune.probes import generate_probes
from depthprune.report import (classify_regime, fidelity, removal_pattern_grid,
                               sweep, sweep_csv)

CFG = ToyModelConfig()


# ---- regimes ---------------------------------------------------------------

@pytest.mark.parametrize("p,label", [
    (0.0, "ranking-sensitive"),
    (0.10, "ranking-sensitive"),
    (0.15, "ranking-sensitive"),
    (0.1500001, "transition"),
    (0.25, "transition"),
    (0.32, "transition"),
    (0.33, "structure-dominated"),
    (0.40, "structure-dominated"),
    (1.0, "structure-dominated"),
])
def test_classify_regime(p, label):
    assert classify_regime(p).label == label


def test_classify_regime_out_of_range():
    with pytest.raises(BudgetOutOfRange):
        classify_regime(1.2)
    with pytest.raises(BudgetOutOfRange):
        classify_regime(-0.01)


def test_regime_partition_total():
    for p in np.linspace(0, 1, 101):
        assert classify_regime(float(p)).label in {
            "ranking-sensitive", "transition", "structure-dominated"}


# ---- fidelity --------------------------------------------------------------

def test_fidelity_identity_case():
    model = build_model(CFG)
    probes = generate_probes("math", 3, seed=0, config=CFG)
    rep = fidelity(model, model, probes)
    assert rep.top1_agreement == 1.0
    assert rep.mean_kl == 0.0
    assert rep.final_hidden_cosine == pytest.approx(1.0, abs=1e-12)
    assert rep.num_probes == 15


def test_fidelity_chance_agreement_between_unrelated_models():
    base = build_model(ToyModelConfig(seed=1))
    other = build_model(ToyModelConfig(seed=2))
    probes = generate_probes("nonmath", 20, seed=0, config=CFG)
    rep = fidelity(base, other, probes)
    positions = sum(len(t) for _, t in probes.all_samples())
    assert positions >= 2000
    p = 1 / CFG.vocab_size
    sigma = np.sqrt(p * (1 - p) / positions)
    assert abs(rep.top1_agreement - p) < 3 * sigma
    assert 0.0 <= rep.top1_agreement <= 1.0
    assert rep.mean_kl >= 0.0
    assert -1.0 <= rep.final_hidden_cosine <= 1.0


def test_fidelity_model_mismatch():
    base = build_model(CFG)
    other = build_model(ToyModelConfig(vocab_size=32))
    probes = generate_probes("math", 1, seed=0, config=ToyModelConfig(vocab_size=32))
    with pytest.raises(ModelMismatch):
        fidelity(base, other, probes)


def test_fidelity_degrades_under_real_pruning():
    model = build_model(CFG)
    plan = PrunePlan(method="random", budget_fraction=0.3, k=3, num_layers=12,
                     protected=default_protected(12), pruned=(4, 6, 8), seed=0)
    pruned = apply_prune_plan(model, plan)
    probes = generate_probes("math", 5, seed=0, config=CFG)
    rep = fidelity(model, pruned, probes)
    assert rep.mean_kl > 0.0
    assert rep.top1_agreement < 1.0


# ---- sweep -----------------------------------------------------------------

SWEEP_ARGS = dict(methods=["ours-math", "random"], budgets=[0.0, 0.25],
                  seeds=[0], probe_counts={"math": 4, "nonmath": 4})


def test_sweep_row_count_and_order():
    reports, plans, heatmap = sweep(CFG, **SWEEP_ARGS)
    assert len(reports) == 2 * 2 * 2 * 1  # methods x budgets x domains x seeds
    text = sweep_csv(reports)
    lines = text.strip().split("\n")
    assert lines[0].startswith("method,budget,domain,seed")
    assert lines[1:] == sorted(lines[1:])


def test_sweep_zero_budget_is_identity():
    reports, _, _ = sweep(CFG, **SWEEP_ARGS)
    for rep in reports:
        if rep.budget_fraction == 0.0:
            assert rep.top1_agreement == 1.0
            assert rep.mean_kl == 0.0


def test_sweep_deterministic_bytes():
    a = sweep_csv(sweep(CFG, **SWEEP_ARGS)[0])
    b = sweep_csv(sweep(CFG, **SWEEP_ARGS)[0])
    assert a.encode() == b.encode()


# ---- removal grid ----------------------------------------------------------

def grid_plans():
    protected = default_protected(12)
    return [
        PrunePlan(method="cka", budget_fraction=0.2, k=2, num_layers=12,
                  protected=protected, pruned=(3, 7)),
        PrunePlan(method="interlace", budget_fraction=0.2, k=2, num_layers=12,
                  protected=protected, pruned=(2, 9)),
        PrunePlan(method="random", budget_fraction=0.0, k=0, num_layers=12,
                  protected=protected, pruned=(), seed=0),
    ]


def test_grid_csv_structure():
    text = removal_pattern_grid(grid_plans())
    lines = text.strip().split("\n")
    assert lines[0] == "method,budget," + ",".join(f"layer_{l}" for l in range(12))
    assert lines[1].startswith("protected,,")
    flags = lines[1].split(",")[2:]
    assert flags[0] == "1" and flags[11] == "1" and flags[5] == "0"
    for line, plan in zip(lines[2:], sorted(grid_plans(), key=lambda p: (p.method, p.budget_fraction))):
        cells = [int(c) for c in line.split(",")[2:]]
        assert sum(cells) == plan.k
        assert all(cells[l] == 1 for l in plan.pruned)


def test_grid_empty_plan_all_zeros():
    text = removal_pattern_grid(grid_plans())
    random_row = [l for l in text.strip().split("\n") if l.startswith("random")][0]
    assert set(random_row.split(",")[2:]) == {"0"}


def test_grid_inconsistent_depth():
    plans = grid_plans()
    plans.append(PrunePlan(method="cka", budget_fraction=0.0, k=0, num_layers=10,
                           protected=default_protected(10), pruned=()))
    with pytest.raises(InconsistentDepth):
        removal_pattern_grid(plans)

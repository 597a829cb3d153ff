import pytest

from depthprune.errors import UnknownDomain
from depthprune.model import ToyModelConfig
from depthprune.probes import (DEFAULT_COUNTS, MATH_SUBTASKS, NONMATH_SUBTASKS,
                               default_probe_sets, generate_probes)

CFG = ToyModelConfig()


def test_math_subtask_tags():
    ps = generate_probes("math", 2, seed=0, config=CFG)
    assert tuple(tag for tag, _ in ps.subtasks) == MATH_SUBTASKS
    assert len(MATH_SUBTASKS) == 5


def test_nonmath_subtask_tags():
    ps = generate_probes("nonmath", 2, seed=0, config=CFG)
    assert tuple(tag for tag, _ in ps.subtasks) == NONMATH_SUBTASKS
    assert len(NONMATH_SUBTASKS) == 4


def test_unknown_domain():
    with pytest.raises(UnknownDomain):
        generate_probes("code", 2, seed=0, config=CFG)


def test_deterministic_under_seed():
    a = generate_probes("math", 3, seed=42, config=CFG)
    b = generate_probes("math", 3, seed=42, config=CFG)
    assert a == b
    c = generate_probes("math", 3, seed=43, config=CFG)
    assert a != c


def test_tokens_in_vocab_and_length():
    for domain in ("math", "nonmath"):
        ps = generate_probes(domain, 5, seed=1, config=CFG)
        for _, tokens in ps.all_samples():
            assert 1 <= len(tokens) <= CFG.max_seq_len
            assert all(0 <= t < CFG.vocab_size for t in tokens)


def test_default_ratio_five_to_four():
    sets = default_probe_sets(CFG, seed=0)
    counts = {ps.domain: ps.num_samples for ps in sets}
    # equal per-subtask counts give the 5:4 domain ratio
    assert counts["math"] * 4 == counts["nonmath"] * 5
    assert counts["math"] == 5 * DEFAULT_COUNTS["math"]


def test_per_subtask_count_map():
    ps = generate_probes("math", {"Math-CoT": 3, "Math-Direct": 1}, seed=0, config=CFG)
    got = {tag: len(samples) for tag, samples in ps.subtasks}
    assert got["Math-CoT"] == 3 and got["Math-Direct"] == 1 and got["Math-Verify"] == 0


def test_subtask_count_rejects_foreign_tag():
    with pytest.raises(UnknownDomain):
        generate_probes("math", {"Captioning": 2}, seed=0, config=CFG)


def test_respects_small_max_seq_len():
    cfg = ToyModelConfig(max_seq_len=8)
    ps = generate_probes("nonmath", 2, seed=0, config=cfg)
    assert all(len(tokens) <= 8 for _, tokens in ps.all_samples())

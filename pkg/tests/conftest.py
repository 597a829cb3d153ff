import numpy as np
import pytest

from depthprune.actlog import ActivationRecord, DomainInfo, LogHeader
from depthprune.capture import capture_run
from depthprune.model import ToyModelConfig, build_model
from depthprune.probes import (MATH_SUBTASKS, NONMATH_SUBTASKS,
                               default_probe_sets)

SMALL_COUNTS = {"math": 10, "nonmath": 10}


@pytest.fixture(scope="session")
def small_config():
    return ToyModelConfig()


@pytest.fixture(scope="session")
def small_model(small_config):
    return build_model(small_config)


@pytest.fixture(scope="session")
def small_probes(small_config):
    return default_probe_sets(small_config, seed=0, counts=SMALL_COUNTS)


@pytest.fixture(scope="session")
def small_capture(small_model, small_probes):
    return capture_run(small_model, small_probes)


def make_synthetic_records(num_layers, hidden_dim=8, samples_per_subtask=2,
                           seed=0, sims=None):
    """Valid records covering all 9 subtasks at every layer.

    sims, when given, maps layer -> similarity used for every record at
    that layer; otherwise sims are drawn uniformly from [0, 1).
    """
    rng = np.random.default_rng(seed)
    domains = (
        DomainInfo("math", MATH_SUBTASKS, 5 * samples_per_subtask),
        DomainInfo("nonmath", NONMATH_SUBTASKS, 4 * samples_per_subtask),
    )
    header = LogHeader(model_id="synthetic", num_layers=num_layers,
                       hidden_dim=hidden_dim,
                       protected_layers=frozenset({0, num_layers - 1}),
                       domains=domains)
    records = []
    sample_id = 0
    for domain, subtasks in (("math", MATH_SUBTASKS), ("nonmath", NONMATH_SUBTASKS)):
        for subtask in subtasks:
            for _ in range(samples_per_subtask):
                for layer in range(num_layers):
                    if sims is not None:
                        sim = float(sims[layer])
                    else:
                        sim = float(rng.uniform(0.0, 1.0))
                    records.append(ActivationRecord(
                        sample_id=sample_id, layer=layer, domain=domain,
                        subtask=subtask, sim=sim,
                        pooled_in=rng.standard_normal(hidden_dim).astype(np.float32),
                        pooled_out=rng.standard_normal(hidden_dim).astype(np.float32),
                    ))
                sample_id += 1
    return header, records

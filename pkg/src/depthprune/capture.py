"""Run probe suites through a model and emit activation records."""

import numpy as np

from .actlog import ActivationRecord, DomainInfo, LogHeader
from .linalg import mean_pool, token_cosine_mean


def model_id_for(config) -> str:
    return (f"toy-L{config.num_layers}-d{config.hidden_dim}-h{config.num_heads}"
            f"-v{config.vocab_size}-s{config.seed}")


def capture_run(model, probe_sets):
    """Capture one ActivationRecord per (sample, retained layer).

    Samples are numbered sequentially across probe sets in the given order,
    so records are deterministic in (sample_id, layer).
    """
    cfg = model.config
    domains = tuple(
        DomainInfo(ps.domain, tuple(tag for tag, _ in ps.subtasks), ps.num_samples)
        for ps in probe_sets
    )
    header = LogHeader(
        model_id=model_id_for(cfg),
        num_layers=cfg.num_layers,
        hidden_dim=cfg.hidden_dim,
        protected_layers=model.protected_layers,
        domains=domains,
    )
    records = []
    sample_id = 0
    for ps in probe_sets:
        for subtask, tokens in ps.all_samples():
            trace = model.forward_with_hooks(tokens)
            for lid, h_in, h_out in zip(trace.layer_ids, trace.h_in, trace.h_out):
                sim = token_cosine_mean(h_in, h_out)
                sim = min(1.0, max(-1.0, sim))
                records.append(ActivationRecord(
                    sample_id=sample_id,
                    layer=lid,
                    domain=ps.domain,
                    subtask=subtask,
                    sim=sim,
                    pooled_in=np.asarray(mean_pool(h_in), dtype=np.float32),
                    pooled_out=np.asarray(mean_pool(h_out), dtype=np.float32),
                ))
            sample_id += 1
    return header, records

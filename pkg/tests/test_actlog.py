import io
import json

import numpy as np
import pytest

from depthprune.actlog import (ActivationRecord, DomainInfo, LogHeader,
                               log_to_bytes, read_log, write_log)
from depthprune.errors import SchemaViolation, TruncatedFile


def header_4x2():
    return LogHeader(
        model_id="toy", num_layers=4, hidden_dim=2,
        protected_layers=frozenset({0, 3}),
        domains=(DomainInfo("math", ("Math-CoT",), 1),
                 DomainInfo("nonmath", ("Captioning",), 0)),
    )


def record(sample_id=0, layer=1, dim=2, sim=0.5, domain="math", subtask="Math-CoT"):
    return ActivationRecord(
        sample_id=sample_id, layer=layer, domain=domain, subtask=subtask, sim=sim,
        pooled_in=np.arange(dim, dtype=np.float32),
        pooled_out=np.arange(dim, dtype=np.float32) + 0.25,
    )


def test_empty_stream_header_only():
    buf = io.StringIO()
    assert write_log(header_4x2(), [], buf) == 0
    lines = buf.getvalue().splitlines()
    assert len(lines) == 1
    header, records = read_log(io.StringIO(buf.getvalue()))
    assert records == []
    assert header == header_4x2()


def test_round_trip_single_record():
    rec = record(sim=0.123456789)
    data = log_to_bytes(header_4x2(), [rec])
    header, records = read_log(io.StringIO(data.decode()))
    assert header == header_4x2()
    assert len(records) == 1
    got = records[0]
    assert (got.sample_id, got.layer, got.domain, got.subtask) == (0, 1, "math", "Math-CoT")
    assert got.sim == float(np.float32(rec.sim))
    np.testing.assert_array_equal(got.pooled_in, rec.pooled_in)
    np.testing.assert_array_equal(got.pooled_out, rec.pooled_out)


def test_round_trip_preserves_float32_bits():
    rng = np.random.default_rng(0)
    recs = [ActivationRecord(i, 1, "math", "Math-CoT", float(rng.uniform(-1, 1)),
                             rng.standard_normal(2).astype(np.float32),
                             rng.standard_normal(2).astype(np.float32))
            for i in range(20)]
    data = log_to_bytes(header_4x2(), recs)
    _, got = read_log(io.StringIO(data.decode()))
    for a, b in zip(recs, got):
        np.testing.assert_array_equal(a.pooled_in, b.pooled_in)
        np.testing.assert_array_equal(a.pooled_out, b.pooled_out)
        assert b.sim == float(np.float32(a.sim))


def test_write_rejects_wrong_dim():
    with pytest.raises(SchemaViolation, match="pooled_in"):
        write_log(header_4x2(), [record(dim=3)], io.StringIO())


def test_write_rejects_duplicate_pair():
    with pytest.raises(SchemaViolation, match="duplicate"):
        write_log(header_4x2(), [record(), record()], io.StringIO())


def test_write_rejects_unknown_subtask():
    with pytest.raises(SchemaViolation, match="subtask"):
        write_log(header_4x2(), [record(subtask="Grounding")], io.StringIO())


def test_read_rejects_sim_out_of_range():
    data = log_to_bytes(header_4x2(), [record()]).decode().splitlines()
    obj = json.loads(data[1])
    obj["sim"] = 1.5
    text = data[0] + "\n" + json.dumps(obj) + "\n"
    with pytest.raises(SchemaViolation, match="line 2"):
        read_log(io.StringIO(text))


def test_read_rejects_unknown_key():
    data = log_to_bytes(header_4x2(), [record()]).decode().splitlines()
    obj = json.loads(data[1])
    obj["extra"] = 1
    text = data[0] + "\n" + json.dumps(obj) + "\n"
    with pytest.raises(SchemaViolation, match="extra"):
        read_log(io.StringIO(text))


def test_read_rejects_duplicate_pair():
    data = log_to_bytes(header_4x2(), [record()]).decode().splitlines()
    text = data[0] + "\n" + data[1] + "\n" + data[1] + "\n"
    with pytest.raises(SchemaViolation, match="duplicate"):
        read_log(io.StringIO(text))


def test_truncated_last_line():
    data = log_to_bytes(header_4x2(), [record()]).decode()
    with pytest.raises(TruncatedFile):
        read_log(io.StringIO(data[:-10]))


def test_empty_file():
    with pytest.raises(TruncatedFile):
        read_log(io.StringIO(""))


def test_bad_header_layer_range():
    header = LogHeader(model_id="x", num_layers=4, hidden_dim=2,
                       protected_layers=frozenset({7}), domains=())
    with pytest.raises(SchemaViolation, match="protected"):
        write_log(header, [], io.StringIO())

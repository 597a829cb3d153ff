"""Activation-log file format.

Line-delimited JSON: line 1 is the header object, every following line is
one (sample, layer) record.  Pooled vectors are rounded to float32 before
writing so the decimal form round-trips bit-stably across implementations.
"""

import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import SchemaViolation, SinkFailure, TruncatedFile

SCHEMA_VERSION = 1

_HEADER_KEYS = {"schema_version", "model_id", "num_layers", "hidden_dim",
                "protected_layers", "domains"}
_DOMAIN_KEYS = {"domain", "subtasks", "sample_count"}
_RECORD_KEYS = {"sample_id", "layer", "domain", "subtask", "sim",
                "pooled_in", "pooled_out"}


@dataclass(frozen=True)
class DomainInfo:
    domain: str
    subtasks: tuple
    sample_count: int


@dataclass(frozen=True)
class LogHeader:
    model_id: str
    num_layers: int
    hidden_dim: int
    protected_layers: frozenset
    domains: tuple  # of DomainInfo
    schema_version: int = SCHEMA_VERSION

    def validate(self):
        if self.schema_version != SCHEMA_VERSION:
            raise SchemaViolation(f"schema_version: unsupported value {self.schema_version}")
        if self.num_layers <= 0:
            raise SchemaViolation(f"num_layers: must be positive, got {self.num_layers}")
        if self.hidden_dim <= 0:
            raise SchemaViolation(f"hidden_dim: must be positive, got {self.hidden_dim}")
        for p in self.protected_layers:
            if not (0 <= p < self.num_layers):
                raise SchemaViolation(f"protected_layers: index {p} outside [0, {self.num_layers})")
        for d in self.domains:
            if d.sample_count < 0:
                raise SchemaViolation(f"domains: negative sample_count for {d.domain}")
            if len(set(d.subtasks)) != len(d.subtasks):
                raise SchemaViolation(f"domains: duplicate subtask tag in {d.domain}")

    def subtasks_of(self, domain: str):
        for d in self.domains:
            if d.domain == domain:
                return d.subtasks
        return None


@dataclass(frozen=True)
class ActivationRecord:
    sample_id: int
    layer: int
    domain: str
    subtask: str
    sim: float
    pooled_in: np.ndarray = field(compare=False)
    pooled_out: np.ndarray = field(compare=False)

    def validate(self, header: LogHeader):
        if not (0 <= self.layer < header.num_layers):
            raise SchemaViolation(f"layer: {self.layer} outside [0, {header.num_layers})")
        subtasks = header.subtasks_of(self.domain)
        if subtasks is None:
            raise SchemaViolation(f"domain: unknown tag {self.domain!r}")
        if self.subtask not in subtasks:
            raise SchemaViolation(f"subtask: {self.subtask!r} not declared for domain {self.domain!r}")
        if not math.isfinite(self.sim) or not (-1.0 <= self.sim <= 1.0):
            raise SchemaViolation(f"sim: {self.sim} outside [-1, 1]")
        for name, vec in (("pooled_in", self.pooled_in), ("pooled_out", self.pooled_out)):
            if vec.ndim != 1 or vec.shape[0] != header.hidden_dim:
                raise SchemaViolation(f"{name}: dim {vec.shape} != hidden_dim {header.hidden_dim}")
            if not np.all(np.isfinite(vec)):
                raise SchemaViolation(f"{name}: non-finite entry")


def _vec_to_list(vec: np.ndarray) -> list:
    # float32 rounding, emitted as shortest round-tripping decimals
    return [float(x) for x in np.asarray(vec, dtype=np.float32)]


def _header_to_json(header: LogHeader) -> str:
    obj = {
        "schema_version": header.schema_version,
        "model_id": header.model_id,
        "num_layers": header.num_layers,
        "hidden_dim": header.hidden_dim,
        "protected_layers": sorted(header.protected_layers),
        "domains": [
            {"domain": d.domain, "subtasks": list(d.subtasks), "sample_count": d.sample_count}
            for d in header.domains
        ],
    }
    return json.dumps(obj, separators=(",", ":"))


def write_log(header: LogHeader, records, destination) -> int:
    """Write header plus records to a text sink; returns record count."""
    header.validate()
    seen = set()
    count = 0
    try:
        destination.write(_header_to_json(header) + "\n")
        for rec in records:
            rec.validate(header)
            key = (rec.sample_id, rec.layer)
            if key in seen:
                raise SchemaViolation(f"sample_id: duplicate (sample_id, layer) pair {key}")
            seen.add(key)
            obj = {
                "sample_id": rec.sample_id,
                "layer": rec.layer,
                "domain": rec.domain,
                "subtask": rec.subtask,
                "sim": float(np.float32(rec.sim)),
                "pooled_in": _vec_to_list(rec.pooled_in),
                "pooled_out": _vec_to_list(rec.pooled_out),
            }
            destination.write(json.dumps(obj, separators=(",", ":")) + "\n")
            count += 1
        destination.flush()
    except OSError as exc:
        raise SinkFailure(f"I/O failure while writing log: {exc}") from exc
    return count


def _parse_header(line: str) -> LogHeader:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise SchemaViolation(f"line 1: invalid header ({exc.msg})") from exc
    if not isinstance(obj, dict):
        raise SchemaViolation("line 1: header is not an object")
    unknown = set(obj) - _HEADER_KEYS
    if unknown:
        raise SchemaViolation(f"line 1: unknown header key {sorted(unknown)[0]!r}")
    missing = _HEADER_KEYS - set(obj)
    if missing:
        raise SchemaViolation(f"line 1: missing header key {sorted(missing)[0]!r}")
    domains = []
    for d in obj["domains"]:
        unknown = set(d) - _DOMAIN_KEYS
        if unknown:
            raise SchemaViolation(f"line 1: unknown domain key {sorted(unknown)[0]!r}")
        missing = _DOMAIN_KEYS - set(d)
        if missing:
            raise SchemaViolation(f"line 1: missing domain key {sorted(missing)[0]!r}")
        domains.append(DomainInfo(d["domain"], tuple(d["subtasks"]), d["sample_count"]))
    header = LogHeader(
        model_id=obj["model_id"],
        num_layers=obj["num_layers"],
        hidden_dim=obj["hidden_dim"],
        protected_layers=frozenset(obj["protected_layers"]),
        domains=tuple(domains),
        schema_version=obj["schema_version"],
    )
    header.validate()
    return header


def _parse_record(line: str, lineno: int, last_line: bool) -> ActivationRecord:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        if last_line:
            raise TruncatedFile(f"line {lineno}: truncated record") from exc
        raise SchemaViolation(f"line {lineno}: invalid record ({exc.msg})") from exc
    if not isinstance(obj, dict):
        raise SchemaViolation(f"line {lineno}: record is not an object")
    unknown = set(obj) - _RECORD_KEYS
    if unknown:
        raise SchemaViolation(f"line {lineno}: unknown record key {sorted(unknown)[0]!r}")
    missing = _RECORD_KEYS - set(obj)
    if missing:
        raise SchemaViolation(f"line {lineno}: missing record key {sorted(missing)[0]!r}")
    return ActivationRecord(
        sample_id=obj["sample_id"],
        layer=obj["layer"],
        domain=obj["domain"],
        subtask=obj["subtask"],
        sim=float(obj["sim"]),
        pooled_in=np.asarray(obj["pooled_in"], dtype=np.float32),
        pooled_out=np.asarray(obj["pooled_out"], dtype=np.float32),
    )


def read_log(source):
    """Parse and validate a complete activation log; returns (header, records)."""
    lines = source.read().split("\n")
    # trailing newline leaves one empty string
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise TruncatedFile("empty log file")
    header = _parse_header(lines[0])
    records = []
    seen = set()
    for i, line in enumerate(lines[1:], start=2):
        rec = _parse_record(line, i, last_line=(i == len(lines)))
        try:
            rec.validate(header)
        except SchemaViolation as exc:
            raise SchemaViolation(f"line {i}: {exc}") from exc
        key = (rec.sample_id, rec.layer)
        if key in seen:
            raise SchemaViolation(f"line {i}: duplicate (sample_id, layer) pair {key}")
        seen.add(key)
        records.append(rec)
    return header, records


def write_log_path(header: LogHeader, records, path) -> int:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        return write_log(header, records, fh)


def read_log_path(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return read_log(fh)
    except OSError as exc:
        raise SinkFailure(f"cannot read log {path}: {exc}") from exc


def log_to_bytes(header: LogHeader, records) -> bytes:
    buf = io.StringIO()
    write_log(header, records, buf)
    return buf.getvalue().encode("utf-8")

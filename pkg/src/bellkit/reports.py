"""Report objects and their canonical JSON / CSV serialization.

JSON output is canonical: sorted keys, two-space indentation, and floats
written in Python's shortest round-trip form, so parsing a file and emitting
it again reproduces the same bytes.
"""

import csv
from dataclasses import dataclass, field
from datetime import datetime, timezone
import io
import json
import math

import numpy as np

from . import __version__
from .scenario import Correlation

# Fixed vocabulary for the ``claims`` map: which checked statement a payload entry supports.
CLAIM_TAGS = frozenset({
    "tilted_quantum_value",
    "tilted_local_bound",
    "tilted_parameters",
    "satwap_quantum_value",
    "satwap_local_bound",
    "satwap_local_bound_formula",
    "sos_certificate",
    "power_identities",
    "self_test_isometry",
    "self_test_state",
    "witness_marginal",
    "witness_blocks",
    "witness_proof_identities",
    "witness_lower_bound",
    "witness_truncation",
    "ternary_relations",
    "embezzlement_error",
    "embezzle_satwap_block",
    "embezzle_tilted_block",
    "embezzle_exact_marginals",
    "schmidt_structure",
    "seesaw_target",
    "lhv_bound",
    "diagnostic",
})


def to_plain(value):
    """Convert numpy scalars/arrays and tuples into JSON-ready Python values."""
    if isinstance(value, dict):
        return {str(k): to_plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_plain(value.tolist())
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        v = float(value)
        if not math.isfinite(v):
            raise ValueError(f"non-finite value {v!r} cannot be serialized")
        return v
    if isinstance(value, (np.complexfloating, complex)):
        return {"re": float(value.real), "im": float(value.imag)}
    return value


@dataclass
class Report:
    command: str
    parameters: dict = field(default_factory=dict)
    payload: dict = field(default_factory=dict)
    claims: dict = field(default_factory=dict)
    tables: dict = field(default_factory=dict)
    boundary_policies: dict = field(default_factory=dict)
    timestamp: str = ""

    def __post_init__(self):
        if not self.timestamp:
            self.timestamp = datetime.now(timezone.utc).isoformat(timespec="seconds")

    def add(self, key, value, claim="diagnostic"):
        if claim not in CLAIM_TAGS:
            raise ValueError(f"unknown claim tag {claim!r}")
        self.payload[key] = to_plain(value)
        self.claims[key] = claim

    def add_table(self, name, corr):
        table = corr.table if isinstance(corr, Correlation) else np.asarray(corr)
        self.tables[name] = np.array(table, dtype=float)

    def to_dict(self):
        return {
            "metadata": {
                "version": __version__,
                "command": self.command,
                "parameters": to_plain(self.parameters),
                "timestamp": self.timestamp,
                "boundary_policies": to_plain(self.boundary_policies),
            },
            "payload": to_plain(self.payload),
            "claims": dict(self.claims),
            "tables": {name: {"shape": list(t.shape), "rows": table_rows(t)}
                       for name, t in self.tables.items()},
        }

    def to_json(self):
        return canonical_json(self.to_dict())

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["table", "s", "t", "a", "b", "p"])
        for name, t in sorted(self.tables.items()):
            for s, tt, a, b, p in table_rows(t):
                writer.writerow([name, s, tt, a, b, repr(p)])
        return buf.getvalue()


def table_rows(table):
    """Flatten ``table[s, t, a, b]`` into ``(s, t, a, b, p)`` rows in C order."""
    t = np.asarray(table, dtype=float)
    return [[int(s), int(tt), int(a), int(b), float(t[s, tt, a, b])]
            for s, tt, a, b in np.ndindex(t.shape)]


def canonical_json(obj):
    return json.dumps(to_plain(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def emit(report, fmt="json", path=None):
    """Serialize ``report``; write to ``path`` if given and return the text."""
    if fmt == "json":
        text = report.to_json()
    elif fmt == "csv":
        text = report.to_csv()
    else:
        raise ValueError(f"unknown format {fmt!r}")
    if path is not None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return text


def error_payload(exc):
    """Machine-readable description of a failure."""
    out = {"error": type(exc).__name__, "message": str(exc)}
    for attr in ("field", "constraint"):
        if hasattr(exc, attr):
            out[attr] = getattr(exc, attr)
    return out

"""Suite reports: aggregation, JSON/CSV serialisation, schema validation."""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from datetime import datetime, timezone
from functools import cached_property
from typing import Optional

import jsonschema

from . import __version__
from .catalog import CheckResult, SuiteRecord

VOLATILE_KEYS = ("started_at", "duration_s")
CSV_HEADER = ("check", "side", "n", "k", "trial", "margin", "pass")

_NUM_OR_NULL = {"type": ["number", "null"]}
RECORD_SCHEMA = {
    "type": "object",
    "required": ["check_name", "margin", "pass", "tol_used", "input_digest",
                 "ensemble", "n", "k", "trial"],
    "properties": {
        "check_name": {"type": "string"},
        "variant": {"type": ["string", "null"]},
        "side": {"enum": [1, 2, None]},
        "margin": _NUM_OR_NULL,
        "pass": {"type": "boolean"},
        "tol_used": _NUM_OR_NULL,
        "input_digest": {"type": "string"},
        "scalar_lhs": _NUM_OR_NULL,
        "scalar_rhs": _NUM_OR_NULL,
        "matrix_margin": _NUM_OR_NULL,
        "error": {"type": ["string", "null"]},
        "ensemble": {"type": "string"},
        "n": {"type": "integer", "minimum": 1},
        "k": {"type": "integer", "minimum": 1},
        "trial": {"type": "integer", "minimum": 0},
    },
}
REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["metadata", "summary", "records"],
    "properties": {
        "metadata": {
            "type": "object",
            "required": ["version", "trials", "tol_abs", "tol_rel", "total_checks",
                         "failures", "passed", "records_included", "records_sha256"],
            "properties": {
                "trials": {"type": "integer", "minimum": 1},
                "total_checks": {"type": "integer", "minimum": 0},
                "failures": {"type": "integer", "minimum": 0},
                "passed": {"type": "boolean"},
                "records_included": {"enum": ["all", "failures"]},
                "records_sha256": {"type": "string", "pattern": "^[0-9a-f]{64}$"},
            },
        },
        "summary": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["check", "count", "failures", "min_margin"],
                "properties": {
                    "check": {"type": "string"},
                    "count": {"type": "integer", "minimum": 1},
                    "failures": {"type": "integer", "minimum": 0},
                    "min_margin": _NUM_OR_NULL,
                },
            },
        },
        "records": {"type": "array", "items": RECORD_SCHEMA},
    },
}


def _clean(x):
    """JSON has no NaN; error entries carry null margins."""
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return x


def record_dict(rec: SuiteRecord) -> dict:
    out = {key: _clean(val) for key, val in rec.result.to_record().items()}
    out.update(ensemble=rec.ensemble, n=rec.n, k=rec.k, trial=rec.trial)
    return out


class Report:
    """Ordered check results from one suite run, plus run metadata.

    ``records`` is treated as final once the report exists; aggregates are cached.
    """

    def __init__(self, metadata: dict, records: list[SuiteRecord],
                 started_at: Optional[float] = None, duration: Optional[float] = None):
        self.metadata = dict(metadata)
        self.records = records
        self.started_at = started_at
        self.duration = duration

    @cached_property
    def failures(self) -> list[SuiteRecord]:
        return [r for r in self.records if not r.result.passed]

    @property
    def passed(self) -> bool:
        return not self.failures

    def summary(self) -> list[dict]:
        """Per check label: count, failures and minimum margin, in first-seen order."""
        return [dict(row) for row in self._summary]

    @cached_property
    def _summary(self) -> list[dict]:
        rows: dict[tuple, dict] = {}
        for rec in self.records:
            res: CheckResult = rec.result
            key = (res.check_name, res.variant, res.side)
            row = rows.get(key)
            if row is None:
                row = rows[key] = {"check": res.label, "count": 0, "failures": 0,
                                   "min_margin": None}
            row["count"] += 1
            if not res.passed:
                row["failures"] += 1
            if math.isfinite(res.margin):
                cur = row["min_margin"]
                row["min_margin"] = res.margin if cur is None else min(cur, res.margin)
        return list(rows.values())

    @cached_property
    def records_sha256(self) -> str:
        """Fingerprint of every record, so a failures-only report still pins the full run."""
        sha = hashlib.sha256()
        for rec in self.records:
            res = rec.result
            sha.update(f"{res.check_name}|{res.variant}|{res.side}|{rec.ensemble}|{rec.n}|{rec.k}|"
                       f"{rec.trial}|{res.margin!r}|{res.passed}|{res.input_digest}\n".encode())
        return sha.hexdigest()

    def to_dict(self, records: str = "failures") -> dict:
        if records not in ("all", "failures"):
            raise ValueError(f"records must be 'all' or 'failures', got {records!r}")
        chosen = self.records if records == "all" else self.failures
        meta = {
            "version": __version__,
            **self.metadata,
            "total_checks": len(self.records),
            "failures": len(self.failures),
            "passed": self.passed,
            "records_included": records,
            "records_sha256": self.records_sha256,
        }
        if self.started_at is not None:
            meta["started_at"] = datetime.fromtimestamp(self.started_at, timezone.utc).isoformat()
        if self.duration is not None:
            meta["duration_s"] = self.duration
        return {
            "metadata": meta,
            "summary": self.summary(),
            "records": [record_dict(r) for r in chosen],
        }

    def to_json(self, records: str = "failures") -> str:
        return json.dumps(self.to_dict(records), indent=1, allow_nan=False) + "\n"

    def to_csv(self, records: str = "all") -> str:
        chosen = self.records if records == "all" else self.failures
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for rec in chosen:
            res = rec.result
            name = res.check_name if not res.variant else f"{res.check_name}:{res.variant}"
            writer.writerow([name, "" if res.side is None else res.side, rec.n, rec.k,
                             rec.trial, repr(res.margin), "true" if res.passed else "false"])
        return buf.getvalue()


def validate_report(doc: dict) -> None:
    """Raise ``jsonschema.ValidationError`` unless ``doc`` is a well-formed report.

    Also checks each record's pass flag against its margin and tolerance.
    """
    jsonschema.validate(doc, REPORT_SCHEMA)
    for rec in doc["records"]:
        if rec["margin"] is None:
            if rec["pass"]:
                raise jsonschema.ValidationError(f"record without margin marked pass: {rec}")
            continue
        if rec["pass"] != (rec["margin"] >= -rec["tol_used"]):
            raise jsonschema.ValidationError(f"pass flag inconsistent with margin: {rec}")


def strip_volatile(doc: dict) -> dict:
    """Copy of a report dict without timestamp/duration fields."""
    out = json.loads(json.dumps(doc))
    for key in VOLATILE_KEYS:
        out["metadata"].pop(key, None)
    return out

"""JSON run reports emitted by the CLI."""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from typing import Any

import jsonschema

SCHEMA_VERSION = "d2ptas.report/1"

# fields that legitimately differ between identical invocations
NONDETERMINISTIC_FIELDS = ("duration_s",)

REPORT_SCHEMA: dict = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["schema", "command", "status", "input", "params", "result", "seed", "duration_s"],
    "additionalProperties": False,
    "properties": {
        "schema": {"const": SCHEMA_VERSION},
        "command": {"enum": ["solve", "oracle", "bench", "check"]},
        "status": {"enum": ["ok", "refused", "failed"]},
        "input": {
            "type": ["object", "null"],
            "required": ["n", "d", "sha256"],
            "properties": {
                "n": {"type": "integer", "minimum": 1},
                "d": {"type": "integer", "minimum": 1},
                "sha256": {"type": "string", "pattern": "^[0-9a-f]{64}$"},
            },
        },
        "params": {"type": "object"},
        "result": {"type": "object"},
        "seed": {"type": ["integer", "null"], "minimum": 0},
        "duration_s": {"type": "number", "minimum": 0},
    },
}


@dataclass
class RunReport:
    command: str
    params: dict
    result: dict
    seed: int | None = None
    input: dict | None = None
    status: str = "ok"
    duration_s: float = 0.0
    schema: str = field(default=SCHEMA_VERSION)

    def to_dict(self) -> dict:
        data = asdict(self)
        return {"schema": data.pop("schema"), **data}

    def to_json(self) -> str:
        # float repr is the shortest string that parses back to the same double
        return json.dumps(self.to_dict(), allow_nan=False)

    @classmethod
    def from_json(cls, text: str) -> "RunReport":
        data = json.loads(text)
        validate(data)
        return cls(**data)


def validate(data: dict) -> None:
    jsonschema.validate(data, REPORT_SCHEMA)


def input_digest(path, n: int, d: int) -> dict:
    with open(path, "rb") as fh:
        digest = hashlib.sha256(fh.read()).hexdigest()
    return {"n": n, "d": d, "sha256": digest}


def strip_nondeterministic(data: dict) -> dict:
    return {k: v for k, v in data.items() if k not in NONDETERMINISTIC_FIELDS}


def centers_payload(centers: Any) -> list:
    return [[float(x) for x in row] for row in centers]

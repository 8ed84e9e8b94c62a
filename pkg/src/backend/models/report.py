"""
Machine-readable reports written by the command-line front door

Documents are serialized with orjson (indented, sorted keys). JSON has no
non-finite numbers, so inf, -inf and nan are stored as string markers and
restored on load.
"""

import logging
import math
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Iterable, List, Union

import numpy as np
import orjson
import sympy as sp
from pydantic import BaseModel, Field, ValidationError, field_validator
from sympy.logic.boolalg import BooleanAtom

from backend.utils.errors import ConfigurationError

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1

_MARKERS = {"inf": math.inf, "-inf": -math.inf, "nan": math.nan}


def _encode(value: Any) -> Any:
    """Plain JSON values with non-finite floats replaced by markers"""
    if isinstance(value, dict):
        return {str(k): _encode(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_encode(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_encode(v) for v in value.tolist()]
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, BooleanAtom):
        return bool(value)
    if isinstance(value, sp.Rational):
        return str(value)
    if isinstance(value, sp.Float):
        value = float(value)
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, float) and not math.isfinite(value):
        if math.isnan(value):
            return "nan"
        return "inf" if value > 0 else "-inf"
    return value


def _decode(value: Any) -> Any:
    if isinstance(value, dict):
        return {k: _decode(v) for k, v in value.items()}
    if isinstance(value, list):
        return [_decode(v) for v in value]
    if isinstance(value, str) and value in _MARKERS:
        return _MARKERS[value]
    return value


class ReportDocument(BaseModel):
    """One command run: what was asked, what came out, and how"""

    schema_version: int = SCHEMA_VERSION
    command: Dict[str, Any]
    parameters: Dict[str, Any] = Field(default_factory=dict)
    results: List[Dict[str, Any]] = Field(default_factory=list)
    provenance: Dict[str, Any] = Field(default_factory=dict)

    @field_validator("schema_version")
    @classmethod
    def _known_schema(cls, value: int) -> int:
        if value != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema version {value}")
        return value

    @field_validator("results")
    @classmethod
    def _tolerance_recorded(cls, value: List[Dict[str, Any]]) -> List[Dict[str, Any]]:
        for i, entry in enumerate(value):
            if "tolerance" not in entry:
                raise ValueError(f"result {i} does not record the tolerance it was checked against")
        return value

    def to_json(self) -> bytes:
        return orjson.dumps(_encode(self.model_dump()), option=orjson.OPT_INDENT_2 | orjson.OPT_SORT_KEYS)

    @classmethod
    def from_json(cls, data: Union[bytes, str]) -> "ReportDocument":
        try:
            payload = orjson.loads(data)
        except orjson.JSONDecodeError as exc:
            raise ConfigurationError(f"report is not valid JSON: {exc}") from exc
        try:
            return cls(**_decode(payload))
        except (ValidationError, TypeError) as exc:
            raise ConfigurationError(f"report does not match schema v{SCHEMA_VERSION}: {exc}") from exc

    def write(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(self.to_json())
        logger.info("wrote %s report to %s", self.command.get("name", "?"), path)
        return path

    @classmethod
    def load(cls, path: Union[str, Path]) -> "ReportDocument":
        path = Path(path)
        if not path.exists():
            raise ConfigurationError(f"report file not found: {path}")
        return cls.from_json(path.read_bytes())


def merge_reports(documents: Iterable[ReportDocument]) -> ReportDocument:
    """Concatenate results in the given order; sources are kept in the provenance"""
    documents = list(documents)
    if not documents:
        raise ConfigurationError("nothing to merge")
    versions = {doc.schema_version for doc in documents}
    if len(versions) != 1:
        raise ConfigurationError(f"cannot merge schema versions {sorted(versions)}")

    results: List[Dict[str, Any]] = []
    for doc in documents:
        name = doc.command.get("name")
        results.extend({**entry, "source_command": name} for entry in doc.results)
    return ReportDocument(
        command={"name": "report-merge", "sources": [doc.command for doc in documents]},
        parameters={"sources": [doc.parameters for doc in documents]},
        results=results,
        provenance={"merged_from": [doc.provenance for doc in documents]},
    )

"""Model files (JSON) and sample exports (CSV).

Model file layout::

    {
      "format_version": 1,
      "dimension": D,
      "attributes": [
        {"label": "...", "weights": [...], "means": [[...], ...], "stddevs": [[...], ...],
         "origin": {...}}          # optional, free-form provenance
      ]
    }

Only standard deviations are ever written; variances never appear on disk.
Floats are written with Python's shortest round-trip repr, so a save/load
cycle reproduces every value bit for bit.
"""

from __future__ import annotations

import csv
import json
from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

from .core import AttributeSpace, GaussianMixture
from .errors import MidAttrError, ParseError, UnsupportedVersion, ValidationError

FORMAT_VERSION = 1
SAMPLE_HEADER = ("attribute", "mode", "lambda", "component")


def space_to_dict(space: AttributeSpace, origins: Mapping[str, Any] | None = None) -> dict:
    attributes = []
    for label, mix in space.items():
        entry = {
            "label": label,
            "weights": mix.weights.tolist(),
            "means": mix.means.tolist(),
            "stddevs": mix.stddevs.tolist(),
        }
        if origins and label in origins:
            entry["origin"] = origins[label]
        attributes.append(entry)
    return {"format_version": FORMAT_VERSION, "dimension": space.dim, "attributes": attributes}


def save_space(space: AttributeSpace, path, origins: Mapping[str, Any] | None = None) -> None:
    """Write ``space`` as a model file. ``origins`` maps labels to provenance dicts."""
    text = json.dumps(space_to_dict(space, origins), indent=1, allow_nan=False)
    Path(path).write_text(text + "\n", encoding="utf-8")


def _located(label: str, exc: Exception) -> ValidationError:
    return ValidationError(f"attribute {label!r}: {exc}")


def space_from_dict(doc: Any) -> tuple[AttributeSpace, dict[str, Any]]:
    if not isinstance(doc, dict):
        raise ParseError("model file must contain a JSON object")
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise UnsupportedVersion(f"unsupported format_version {version!r} (expected {FORMAT_VERSION})")
    for key in ("dimension", "attributes"):
        if key not in doc:
            raise ParseError(f"model file missing key {key!r}")
    dimension = doc["dimension"]
    attributes = doc["attributes"]
    if not isinstance(attributes, list):
        raise ParseError("'attributes' must be a list")

    entries = []
    origins = {}
    for i, entry in enumerate(attributes):
        if not isinstance(entry, dict):
            raise ParseError(f"attributes[{i}] must be an object")
        label = entry.get("label")
        where = label if isinstance(label, str) else f"#{i}"
        missing = [k for k in ("label", "weights", "means", "stddevs") if k not in entry]
        if missing:
            raise ParseError(f"attribute {where!r} missing keys {missing}")
        try:
            weights = np.asarray(entry["weights"], dtype=float)
            means = np.asarray(entry["means"], dtype=float)
            stddevs = np.asarray(entry["stddevs"], dtype=float)
        except (TypeError, ValueError) as exc:
            raise ParseError(f"attribute {where!r}: non-numeric or ragged arrays ({exc})") from None
        if means.ndim != 2 or stddevs.ndim != 2:
            raise _located(where, "means and stddevs must be K x D arrays")
        bad = np.argwhere(~(stddevs > 0))
        if bad.size:
            k, d = bad[0]
            raise ValidationError(
                f"attribute {where!r} component {k} dimension {d}: stddev must be > 0, got {stddevs[k, d]!r}")
        if means.shape[1] != dimension:
            raise _located(where, f"means have dimension {means.shape[1]}, file declares {dimension}")
        try:
            mix = GaussianMixture(weights, means, stddevs)
        except MidAttrError as exc:
            raise _located(where, exc) from None
        entries.append((label, mix))
        if "origin" in entry:
            origins[label] = entry["origin"]
    try:
        space = AttributeSpace(entries)
    except MidAttrError as exc:
        raise ValidationError(str(exc)) from None
    return space, origins


def load_space_with_origins(path) -> tuple[AttributeSpace, dict[str, Any]]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise OSError(exc.errno, f"cannot read model file: {exc.strerror}", str(path)) from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON ({exc})") from None
    return space_from_dict(doc)


def load_space(path) -> AttributeSpace:
    """Read and validate a model file.

    Raises
    ------
    OSError
        If the file cannot be read.
    ParseError
        On malformed JSON or a missing/mistyped field.
    UnsupportedVersion
        If ``format_version`` is not 1.
    ValidationError
        If a mixture violates an invariant; the message names the attribute
        (and component, for stddev errors).
    """
    return load_space_with_origins(path)[0]


@dataclass(frozen=True)
class SampleMeta:
    """Per-row metadata columns of a sample export."""

    attribute: str
    mode: str
    lam: str
    component: int


def format_lambda(labels: Sequence[str], weights) -> str:
    return ";".join(f"{lab}={float(w)!r}" for lab, w in zip(labels, weights))


def sample_header(dim: int) -> list[str]:
    return list(SAMPLE_HEADER) + [f"dim_{d}" for d in range(dim)]


def export_samples(samples, metadata: Sequence[SampleMeta], path, dim: int | None = None) -> None:
    """Write samples as CSV: header, then metadata columns and D value columns per row."""
    values = np.asarray(samples, dtype=float)
    if values.ndim == 1 and values.size == 0:
        values = values.reshape(0, dim or 0)
    if values.ndim != 2:
        raise ValidationError("samples must be an (n, D) array")
    if dim is not None and values.shape[1] != dim:
        raise ValidationError(f"samples have dimension {values.shape[1]}, expected {dim}")
    if len(metadata) != values.shape[0]:
        raise ValidationError(f"{len(metadata)} metadata rows for {values.shape[0]} samples")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(sample_header(values.shape[1]))
        for meta, row in zip(metadata, values):
            writer.writerow([meta.attribute, meta.mode, meta.lam, meta.component]
                            + [repr(float(v)) for v in row])


def read_samples(path) -> tuple[list[SampleMeta], np.ndarray]:
    """Parse a sample export back into metadata and an (n, D) value array."""
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise OSError(exc.errno, f"cannot read sample file: {exc.strerror}", str(path)) from None
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty sample file") from None
        if tuple(header[:4]) != SAMPLE_HEADER:
            raise ParseError(f"{path}: unexpected header {header[:4]}")
        dim = len(header) - 4
        if header[4:] != [f"dim_{d}" for d in range(dim)]:
            raise ParseError(f"{path}: value columns must be dim_0..dim_{dim - 1}")
        metas, rows = [], []
        for lineno, rec in enumerate(reader, start=2):
            if len(rec) != len(header):
                raise ParseError(f"{path}:{lineno}: expected {len(header)} fields, got {len(rec)}")
            try:
                metas.append(SampleMeta(rec[0], rec[1], rec[2], int(rec[3])))
                rows.append([float(v) for v in rec[4:]])
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: {exc}") from None
    values = np.array(rows, dtype=float).reshape(len(rows), dim)
    if not np.all(np.isfinite(values)):
        raise ParseError(f"{path}: non-finite sample values")
    return metas, values


def report_to_dict(result, labels: Sequence[str]) -> dict:
    """Sidecar report for a barycenter run."""
    lam = {lab: float(w) for lab, w in zip(labels, result.weights.values)}
    return {
        "objective": float(result.objective),
        "mode": result.mode,
        "lambda": lam,
        "candidates": [
            {"indices": list(rec.indices), "weight": rec.weight,
             "merged": [list(t) for t in rec.merged]}
            for rec in result.provenance
        ],
    }


def write_json(doc: Mapping, path) -> None:
    Path(path).write_text(json.dumps(doc, indent=1, allow_nan=False) + "\n", encoding="utf-8")


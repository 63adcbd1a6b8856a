"""JSON documents for system specs and normal forms.

A spec document looks like::

    {"name": "rigid body",
     "K": [1, 0, 0, 1, 0, 1],   # k11 k12 k13 k22 k23 k33
     "k": [0, 0, 0],
     "A": [1, 0, 0, 2, 0, 3],
     "a": [0, 0, 0]}

Floats are written with ``repr`` precision, so documents round-trip exactly.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from quadham.linalg3 import SymMat3
from quadham.normal_form import (
    AffineMap3,
    Convention,
    NormalForm,
    PencilCertificate,
    StepKind,
    TransformStep,
)
from quadham.poisson import SystemSpec


class DocumentError(ValueError):
    """Malformed document; the message names the offending field."""


def _numbers(doc: dict, key: str, count: int) -> list:
    if key not in doc:
        raise DocumentError(f"field {key!r} is missing")
    raw = doc[key]
    if not isinstance(raw, list) or len(raw) != count:
        raise DocumentError(f"field {key!r}: expected a list of {count} numbers, got {raw!r}")
    out = []
    for x in raw:
        if isinstance(x, bool) or not isinstance(x, (int, float)) or not math.isfinite(x):
            raise DocumentError(f"field {key!r}: {x!r} is not a finite number")
        out.append(float(x))
    return out


def spec_from_dict(doc: dict) -> SystemSpec:
    if not isinstance(doc, dict):
        raise DocumentError("spec document must be a JSON object")
    name = doc.get("name", "")
    if not isinstance(name, str):
        raise DocumentError(f"field 'name': expected a string, got {name!r}")
    return SystemSpec(
        K=SymMat3(tuple(_numbers(doc, "K", 6))),
        k=np.array(_numbers(doc, "k", 3)),
        A=SymMat3(tuple(_numbers(doc, "A", 6))),
        a=np.array(_numbers(doc, "a", 3)),
        name=name,
    )


def spec_to_dict(spec: SystemSpec) -> dict:
    doc = {
        "K": list(spec.K.entries),
        "k": spec.k.tolist(),
        "A": list(spec.A.entries),
        "a": spec.a.tolist(),
    }
    if spec.name:
        doc["name"] = spec.name
    return doc


def read_spec(path) -> SystemSpec:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise DocumentError(f"cannot read spec file {path}: {exc.strerror}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentError(f"spec file {path} is not valid JSON: {exc}") from exc
    return spec_from_dict(doc)


def write_spec(spec: SystemSpec, path) -> None:
    Path(path).write_text(json.dumps(spec_to_dict(spec), indent=2) + "\n")


def _encode(value):
    if isinstance(value, np.ndarray):
        return {"array": value.tolist()}
    return value


def _decode(value):
    if isinstance(value, dict) and set(value) == {"array"}:
        return np.array(value["array"], dtype=float)
    return value


def _map_to_dict(m: AffineMap3) -> dict:
    return {"M": m.M.ravel().tolist(), "c": m.c.tolist()}


def _map_from_dict(doc: dict) -> AffineMap3:
    return AffineMap3(np.array(_numbers(doc, "M", 9)).reshape(3, 3), _numbers(doc, "c", 3))


def normal_form_to_dict(nf: NormalForm) -> dict:
    cert = None
    if nf.certificate is not None:
        c = nf.certificate
        cert = {
            "alpha": c.alpha,
            "beta": c.beta,
            "min_eigenvalue": c.min_eigenvalue,
            "convention": c.convention.value,
        }
    return {
        "lambdas": nf.lambdas.tolist(),
        "d": nf.d.tolist(),
        "map": _map_to_dict(nf.map),
        "steps": [
            {
                "kind": s.kind.value,
                "map": _map_to_dict(s.map),
                "payload": {k: _encode(v) for k, v in s.payload.items()},
            }
            for s in nf.steps
        ],
        "certificate": cert,
    }


def normal_form_from_dict(doc: dict) -> NormalForm:
    steps = tuple(
        TransformStep(
            StepKind(s["kind"]),
            _map_from_dict(s["map"]),
            {k: _decode(v) for k, v in s.get("payload", {}).items()},
        )
        for s in doc["steps"]
    )
    cert = doc.get("certificate")
    if cert is not None:
        cert = PencilCertificate(
            cert["alpha"], cert["beta"], cert["min_eigenvalue"], Convention(cert["convention"])
        )
    return NormalForm(
        np.array(_numbers(doc, "lambdas", 3)),
        np.array(_numbers(doc, "d", 3)),
        _map_from_dict(doc["map"]),
        steps,
        cert,
    )


def dumps_normal_form(nf: NormalForm) -> str:
    return json.dumps(normal_form_to_dict(nf), indent=2) + "\n"


def loads_normal_form(text: str) -> NormalForm:
    return normal_form_from_dict(json.loads(text))

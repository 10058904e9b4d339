"""JSON schemas for matrices, states, tensors and operator tensors.

Complex matrix::

    {"dim": n, "re": [[...], ...], "im": [[...], ...]}

A density-matrix file is a complex matrix object, optionally with
``"schema_version"`` and ``"type": "density_matrix"``.

Operator tensor::

    {"schema_version": 1, "type": "operator_tensor", "d": 3, "rank": l,
     "dim": n, "index_order": "C", "note": "...",
     "components": [{"index": [i1, ..., il], "re": [[...]], "im": [[...]]}, ...]}

``components`` lists every index tuple in C (row-major) order, indices
zero-based, x = 0, y = 1, z = 2.

Real tensor::

    {"d": 3, "rank": l, "data": nested lists of shape (d,)*l}
"""

from __future__ import annotations

import itertools
import json

import numpy as np

from qorient.quantum import DensityMatrix, OperatorTensor
from qorient.tensors import SymmetricTracelessTensor

SCHEMA_VERSION = 1


class SchemaError(ValueError):
    pass


def matrix_to_json(m) -> dict:
    m = np.asarray(m, dtype=complex)
    return {"dim": int(m.shape[0]), "re": m.real.tolist(), "im": m.imag.tolist()}


def matrix_from_json(obj: dict) -> np.ndarray:
    try:
        n = int(obj["dim"])
        re = np.array(obj["re"], dtype=float)
        im = np.array(obj.get("im", np.zeros((n, n))), dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"malformed matrix object: {exc}") from exc
    if re.shape != (n, n) or im.shape != (n, n):
        raise SchemaError(f"matrix arrays must be {n}x{n}")
    return re + 1j * im


def state_to_json(rho: DensityMatrix) -> dict:
    return {"schema_version": SCHEMA_VERSION, "type": "density_matrix", **matrix_to_json(rho.data)}


def load_state(path) -> DensityMatrix:
    """Read a density-matrix JSON file. The state is returned unchecked."""
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise SchemaError(f"cannot read state file {path}: {exc}") from exc
    return DensityMatrix(matrix_from_json(obj), check=False)


def tensor_to_json(t: SymmetricTracelessTensor) -> dict:
    return {"d": t.d, "rank": t.l, "data": np.asarray(t.data).tolist()}


def tensor_from_json(obj: dict) -> SymmetricTracelessTensor:
    return SymmetricTracelessTensor(int(obj["d"]), int(obj["rank"]), np.array(obj["data"], dtype=float))


def operator_tensor_to_json(op: OperatorTensor) -> dict:
    comps = []
    for idx in itertools.product(range(op.d), repeat=op.l):
        comps.append({"index": list(idx), **{k: v for k, v in matrix_to_json(op.components[idx]).items() if k != "dim"}})
    return {
        "schema_version": SCHEMA_VERSION,
        "type": "operator_tensor",
        "d": op.d,
        "rank": op.l,
        "dim": op.dim,
        "index_order": "C",
        "note": op.note,
        "components": comps,
    }


def operator_tensor_from_json(obj: dict) -> OperatorTensor:
    try:
        d, l, n = int(obj["d"]), int(obj["rank"]), int(obj["dim"])
        comps = np.zeros((d,) * l + (n, n), dtype=complex)
        seen = set()
        for entry in obj["components"]:
            idx = tuple(int(i) for i in entry["index"])
            comps[idx] = matrix_from_json({"dim": n, "re": entry["re"], "im": entry["im"]})
            seen.add(idx)
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise SchemaError(f"malformed operator tensor: {exc}") from exc
    if len(seen) != d**l:
        raise SchemaError("operator tensor is missing components")
    return OperatorTensor(d, l, comps, obj.get("note", ""))


def dumps(obj) -> str:
    """Deterministic JSON text (sorted keys, fixed separators, trailing newline)."""
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=False) + "\n"

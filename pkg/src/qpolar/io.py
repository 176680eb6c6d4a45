"""JSON serialization of polarization states.

Format (basis index ``k`` is ``|N-k, k>``)::

    {"N": 3, "kind": "pure",  "amplitudes": [[re, im], ...]}
    {"N": 3, "kind": "mixed", "matrix": [[[re, im], ...], ...]}
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .fock import check_state


def _pairs(a: np.ndarray):
    return np.stack([a.real, a.imag], axis=-1).tolist()


def state_to_dict(state) -> dict:
    state = np.asarray(state, dtype=complex)
    if state.ndim == 1:
        return {"N": state.shape[0] - 1, "kind": "pure", "amplitudes": _pairs(state)}
    return {"N": state.shape[0] - 1, "kind": "mixed", "matrix": _pairs(state)}


def state_from_dict(d: dict) -> np.ndarray:
    """Parse and validate; returns a ket for ``pure`` and a matrix for ``mixed``."""
    kind = d.get("kind")
    if kind == "pure":
        arr = np.asarray(d["amplitudes"], dtype=float)
    elif kind == "mixed":
        arr = np.asarray(d["matrix"], dtype=float)
    else:
        raise ValueError(f"state kind must be 'pure' or 'mixed', got {kind!r}")
    if arr.ndim != (2 if kind == "pure" else 3) or arr.shape[-1] != 2:
        raise ValueError("entries must be [re, im] pairs")
    state = arr[..., 0] + 1j * arr[..., 1]
    if state.shape[0] != int(d["N"]) + 1:
        raise ValueError(f"N = {d['N']} does not match {state.shape[0]} basis entries")
    check_state(state)
    return state


def dumps_state(state) -> str:
    return json.dumps(state_to_dict(state), indent=2)


def loads_state(text: str) -> np.ndarray:
    return state_from_dict(json.loads(text))


def read_state(path) -> np.ndarray:
    return loads_state(Path(path).read_text())


def write_state(state, path) -> None:
    Path(path).write_text(dumps_state(state) + "\n")

"""JSON state files.

Layout::

    {"dims": [2, 2], "kind": "ensemble",
     "weights": ["1/2", "1/2"], "vectors": [[[1, 0], [0, 0], ...], ...]}

``kind`` is ``density`` (field ``density``: D x D matrix), ``ensemble``
(``weights`` and ``vectors``) or ``family`` (``family: {h, a}``). A complex
scalar is ``[re, im]``; each part is a JSON number or a ``"p/q"`` string.
Exact emission writes every part as a canonical fraction string so that
parse followed by emit reproduces the file byte for byte.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Any

import numpy as np

from .scalars import Gauss, Mode, fmt_float, parse_exact, parse_float
from .states import (
    DensityMatrix,
    Ensemble,
    FamilyParams,
    density_from_ensemble,
    ensemble_from_density,
    family_state,
)

KINDS = ("density", "ensemble", "family")


class StateFileError(ValueError):
    """Malformed state file; the message names the offending field."""


@dataclass
class LoadedState:
    kind: str
    dims: tuple[int, ...]
    mode: Mode
    ensemble: Ensemble | None = None
    density: DensityMatrix | None = None
    family: FamilyParams | None = None

    def get_ensemble(self) -> Ensemble:
        if self.ensemble is None:
            self.ensemble = ensemble_from_density(self.density)
        return self.ensemble

    def get_density(self) -> DensityMatrix:
        if self.density is None:
            self.density = density_from_ensemble(self.ensemble)
        return self.density


def _scalar(tok, mode: Mode, where: str):
    try:
        if isinstance(tok, list):
            if len(tok) != 2:
                raise ValueError("complex scalar must be [re, im]")
            re, im = tok
        else:
            re, im = tok, 0
        if mode is Mode.EXACT:
            return Gauss(parse_exact(re), parse_exact(im))
        return complex(parse_float(re), parse_float(im))
    except (ValueError, ZeroDivisionError, TypeError) as exc:
        raise StateFileError(f"{where}: bad scalar {tok!r} ({exc})") from None


def _real(tok, mode: Mode, where: str):
    z = _scalar(tok, mode, where)
    if mode is Mode.EXACT:
        if z.imag:
            raise StateFileError(f"{where}: weight must be real")
        return z.real
    if z.imag:
        raise StateFileError(f"{where}: weight must be real")
    return z.real


def _matrix(data, shape, mode, where):
    if not isinstance(data, list) or len(data) != shape[0]:
        raise StateFileError(f"{where}: expected {shape[0]} rows")
    out = np.empty(shape, dtype=object if mode is Mode.EXACT else complex)
    for i, row in enumerate(data):
        if not isinstance(row, list) or len(row) != shape[1]:
            raise StateFileError(f"{where}[{i}]: expected {shape[1]} entries")
        for j, tok in enumerate(row):
            out[i, j] = _scalar(tok, mode, f"{where}[{i}][{j}]")
    return out


def parse_state(doc: Any, mode: Mode = Mode.EXACT) -> LoadedState:
    if not isinstance(doc, dict):
        raise StateFileError("top level: expected a JSON object")
    dims = doc.get("dims")
    if not isinstance(dims, list) or not dims or not all(isinstance(d, int) and not isinstance(d, bool) and d >= 2 for d in dims):
        raise StateFileError("dims: expected a nonempty list of integers >= 2")
    dims = tuple(dims)
    D = int(np.prod(dims))
    kind = doc.get("kind")
    if kind not in KINDS:
        raise StateFileError(f"kind: expected one of {', '.join(KINDS)}, got {kind!r}")
    try:
        if kind == "density":
            m = _matrix(doc.get("density"), (D, D), mode, "density")
            return LoadedState(kind, dims, mode, density=DensityMatrix(dims, m))
        if kind == "ensemble":
            w = doc.get("weights")
            vecs = doc.get("vectors")
            if not isinstance(w, list) or not w:
                raise StateFileError("weights: expected a nonempty list")
            if not isinstance(vecs, list) or len(vecs) != len(w):
                raise StateFileError("vectors: expected one vector per weight")
            probs = tuple(_real(t, mode, f"weights[{i}]") for i, t in enumerate(w))
            V = _matrix(vecs, (len(w), D), mode, "vectors")
            return LoadedState(kind, dims, mode, ensemble=Ensemble(dims, probs, V))
        fam = doc.get("family")
        if not isinstance(fam, dict):
            raise StateFileError("family: expected an object with h and a")
        if dims != (2, 2, 2, 2):
            raise StateFileError("dims: family states live on [2, 2, 2, 2]")
        h = _matrix(fam.get("h"), (4, 4), mode, "family.h")
        a = fam.get("a")
        if not isinstance(a, list) or len(a) != 8:
            raise StateFileError("family.a: expected 8 scalars")
        av = tuple(_scalar(t, mode, f"family.a[{i}]") for i, t in enumerate(a))
        p = FamilyParams(h, av)
        return LoadedState(kind, dims, mode, ensemble=family_state(p), family=p)
    except StateFileError:
        raise
    except ValueError as exc:  # StateError and friends
        raise StateFileError(f"{kind}: {exc}") from None


def load_state(path: str, mode: Mode = Mode.EXACT) -> LoadedState:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise StateFileError(f"{path}: {exc.strerror or exc}") from None
    except json.JSONDecodeError as exc:
        raise StateFileError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from None
    return parse_state(doc, mode)


# emission ---------------------------------------------------------------------------

def _part(x, mode):
    if mode is Mode.EXACT:
        return str(Fraction(x))
    return float(fmt_float(float(x)))


def encode_scalar(z, mode: Mode):
    if mode is Mode.EXACT:
        z = Gauss.coerce(z)
        return [_part(z.real, mode), _part(z.imag, mode)]
    z = complex(z)
    return [_part(z.real, mode), _part(z.imag, mode)]


def _encode_matrix(M, mode):
    return [[encode_scalar(x, mode) for x in row] for row in M]


def state_document(st: LoadedState) -> dict:
    mode = st.mode
    doc: dict = {"dims": list(st.dims), "kind": st.kind}
    if st.kind == "density":
        doc["density"] = _encode_matrix(st.density.matrix, mode)
    elif st.kind == "ensemble":
        e = st.ensemble
        doc["weights"] = [_part(p, mode) for p in e.probs]
        doc["vectors"] = _encode_matrix(e.vectors, mode)
    else:
        from .classify import family_lambda

        p = st.family
        doc["family"] = {
            "h": _encode_matrix(p.h, mode),
            "a": [encode_scalar(x, mode) for x in p.a],
            "lambda": [encode_scalar(x, mode) for x in family_lambda(p).lambdas],
        }
    return doc


def dumps_state(st: LoadedState) -> str:
    return json.dumps(state_document(st), indent=1) + "\n"


def state_digest(st: LoadedState) -> str:
    canon = json.dumps(state_document(st), sort_keys=True, separators=(",", ":"))
    return "sha256:" + hashlib.sha256(canon.encode("utf-8")).hexdigest()


def ensemble_state(e: Ensemble) -> LoadedState:
    return LoadedState("ensemble", tuple(e.dims), e.mode, ensemble=e)


def family_loaded(p: FamilyParams) -> LoadedState:
    return LoadedState("family", (2, 2, 2, 2), p.mode, ensemble=family_state(p), family=p)

"""Command line front end: ``detvar analyze | compare | ppt | example``.

Exit codes: 0 for any verdict, 2 for input errors, 3 for numeric failures.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import time
from fractions import Fraction

import numpy as np

from . import __version__
from .classify import (
    compare_fingerprints,
    family_equivalence,
    family_lambda,
    fingerprint,
    separability_verdict,
)
from .polynomials import PolynomialError
from .report import SCHEMA, _num, analysis_document, fingerprint_document, render_analysis
from .scalars import DEFAULT_TOL, Mode, scalar_str
from .statefile import (
    StateFileError,
    dumps_state,
    family_loaded,
    ensemble_state,
    load_state,
    state_digest,
)
from .states import (
    StateError,
    identity_family_params,
    bell_family_params,
    ppt_check,
    smolin_state,
)
from .varieties import CutError, parse_cut

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3


class InputError(Exception):
    pass


def _settings(args):
    tol, seed = DEFAULT_TOL, 0
    try:
        if os.environ.get("EV_TOL"):
            tol = float(os.environ["EV_TOL"])
        if os.environ.get("EV_SEED"):
            seed = int(os.environ["EV_SEED"])
    except ValueError as exc:
        raise InputError(f"bad environment override: {exc}") from None
    if args.tol is not None:
        tol = args.tol
    if args.seed is not None:
        seed = args.seed
    if not tol > 0:
        raise InputError("tolerance must be positive")
    return tol, seed


def _emit(args, doc: dict, text: str):
    out = json.dumps(doc, indent=2, sort_keys=False) + "\n" if args.json else text + "\n"
    sys.stdout.write(out)


def _state_info(st):
    return {"digest": state_digest(st), "kind": st.kind, "dims": list(st.dims)}


def _family_invariants(st) -> dict:
    if st.family is None:
        return {}
    lams = family_lambda(st.family).lambdas
    return {"lambda": [_num(x) for x in lams]}


def cmd_analyze(args) -> int:
    tol, seed = _settings(args)
    mode = Mode(args.mode)
    st = load_state(args.state, mode)
    cut = parse_cut(args.cut, st.dims)
    t0 = time.perf_counter()
    rep = separability_verdict(st.get_ensemble(), cut, args.rank_threshold, tol, seed)
    elapsed = time.perf_counter() - t0 if args.timing else None
    doc = analysis_document(rep, _state_info(st), tol, _family_invariants(st), elapsed)
    _emit(args, doc, render_analysis(doc))
    return EXIT_OK


def cmd_compare(args) -> int:
    tol, seed = _settings(args)
    mode = Mode(args.mode)
    s1, s2 = load_state(args.state1, mode), load_state(args.state2, mode)
    if s1.dims != s2.dims:
        raise InputError(f"dims differ: {list(s1.dims)} vs {list(s2.dims)}")
    cut = parse_cut(args.cut, s1.dims)
    doc = {"schema": SCHEMA, "command": "compare", "cut": cut.text, "mode": mode.value, "tol": tol, "seed": seed,
           "states": [_state_info(s1), _state_info(s2)]}
    if s1.family is not None and s2.family is not None:
        i1, i2 = family_lambda(s1.family), family_lambda(s2.family)
        res = family_equivalence(i1, i2, tol, seed)
        doc.update({
            "method": "family_equivalence",
            "lambda": [[_num(x) for x in i1.lambdas], [_num(x) for x in i2.lambdas]],
            "result": res.status,
            "refuted_assignments": res.refuted,
        })
        if res.status == "EQUIVALENT":
            doc["witness"] = {
                "sigma": list(res.sigma),
                "T1": [[scalar_str(x) for x in row] for row in res.T1],
                "T2": [[scalar_str(x) for x in row] for row in res.T2],
                "label": res.label,
            }
        if res.unresolved:
            doc["unresolved_assignments"] = [list(s) for s in res.unresolved]
        text = f"{doc['result']} (lambda {doc['lambda'][0]} vs {doc['lambda'][1]}; {res.refuted}/24 assignments refuted)"
    elif state_digest(s1) == state_digest(s2):
        doc.update({"method": "identical_state", "result": "EQUIVALENT",
                    "witness": {"local_maps": "identity", "label": "variety-level"}})
        text = "EQUIVALENT (identical states, identity witness)"
    else:
        r1 = separability_verdict(s1.get_ensemble(), cut, args.rank_threshold, tol, seed)
        r2 = separability_verdict(s2.get_ensemble(), cut, args.rank_threshold, tol, seed)
        ftol = max(tol, 1e-6)
        match = compare_fingerprints(fingerprint(r1), fingerprint(r2), ftol)
        doc.update({
            "method": "fingerprint",
            "result": "MATCH" if match else "MISMATCH",
            "fingerprints": [fingerprint_document(r1), fingerprint_document(r2)],
            "note": "necessary invariants only",
        })
        text = f"{doc['result']} (necessary variety invariants at {cut.text})"
    _emit(args, doc, text)
    return EXIT_OK


def _parse_bipartition(text: str, k: int):
    parts = text.replace(" ", "").split("|")
    if len(parts) != 2 or not all(parts) or not all(p.isalpha() for p in parts):
        raise InputError(f"malformed bipartition {text!r}; expected e.g. 'AB|CD'")
    return parts[0], parts[1]


def cmd_ppt(args) -> int:
    tol, seed = _settings(args)
    mode = Mode(args.mode)
    st = load_state(args.state, mode)
    s1, s2 = _parse_bipartition(args.bipartition, len(st.dims))
    rho = st.get_density()
    res = ppt_check(rho, (s1, s2))
    doc = {"schema": SCHEMA, "command": "ppt", "state": _state_info(st), "bipartition": f"{s1}|{s2}",
           "mode": mode.value, "result": res.label, "min_eigenvalue": float(format(res.min_eigenvalue, ".12g")),
           "partial_transpose_equals_rho": bool(res.equals_rho)}
    cert = res.certificate
    if mode is Mode.EXACT:
        c = {"psd": cert.psd, "pivots": len(cert.pivots)}
        if not cert.psd:
            c["witness"] = [scalar_str(x) for x in cert.witness]
            c["value"] = scalar_str(cert.value)
        doc["certificate"] = c
    text = f"{res.label} at {s1}|{s2}; min eigenvalue {doc['min_eigenvalue']}; partial transpose equals rho: {res.equals_rho}"
    if mode is Mode.EXACT and not cert.psd:
        text += f"; exact witness value {doc['certificate']['value']}"
    _emit(args, doc, text)
    return EXIT_OK


def _parse_a(text: str):
    try:
        vals = [Fraction(x.strip()) for x in text.split(",")]
    except (ValueError, ZeroDivisionError) as exc:
        raise InputError(f"--a: {exc}") from None
    if len(vals) != 8:
        raise InputError("--a needs 8 comma-separated values")
    return vals


def cmd_example(args) -> int:
    mode = Mode(args.mode)
    if args.name == "smolin":
        st = ensemble_state(smolin_state(mode))
    else:
        if args.paper:
            p = bell_family_params(mode)
        else:
            if args.h != "identity":
                raise InputError("--h supports 'identity' (or use --paper)")
            a = _parse_a(args.a) if args.a else [Fraction(1)] * 8
            p = identity_family_params(a if mode is Mode.EXACT else [float(x) for x in a], mode)
        st = family_loaded(p)
    text = dumps_state(st)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="detvar", description="Determinantal-variety invariants of multipartite states.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--mode", choices=["exact", "float"], default="exact")
    common.add_argument("--tol", type=float, default=None, help="float tolerance (env EV_TOL)")
    common.add_argument("--seed", type=int, default=None, help="seed for randomized steps (env EV_SEED)")
    common.add_argument("--rank-threshold", type=int, default=None, dest="rank_threshold")
    common.add_argument("--json", action="store_true", help="emit the JSON report")
    sub = ap.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", parents=[common], help="variety, factorization and verdict at a cut")
    a.add_argument("state")
    a.add_argument("cut")
    a.add_argument("--timing", action="store_true", help="include wall time (breaks byte-identical output)")
    a.set_defaults(func=cmd_analyze)

    c = sub.add_parser("compare", parents=[common], help="equivalence of two states")
    c.add_argument("state1")
    c.add_argument("state2")
    c.add_argument("cut", nargs="?", default="A:B|CD")
    c.set_defaults(func=cmd_compare)

    p = sub.add_parser("ppt", parents=[common], help="partial transpose test")
    p.add_argument("state")
    p.add_argument("bipartition")
    p.set_defaults(func=cmd_ppt)

    e = sub.add_parser("example", parents=[common], help="write a built-in state file")
    e.add_argument("name", choices=["smolin", "family"])
    e.add_argument("--paper", action="store_true", help="Bell-type h preset with all a = 1")
    e.add_argument("--h", default="identity")
    e.add_argument("--a", default=None, help="eight comma-separated rationals")
    e.add_argument("-o", "--output", default=None)
    e.set_defaults(func=cmd_example)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InputError, StateFileError, CutError, StateError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (PolynomialError, np.linalg.LinAlgError, ArithmeticError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())

"""Structured reports (schema 1) and their plain-text rendering."""
from __future__ import annotations

from .classify import VarietyReport, fingerprint
from .polynomials import LinearForm
from .scalars import Mode, scalar_str

SCHEMA = 1


def _num(x):
    """JSON-safe scalar: exact values as text, floats as [re, im] pairs."""
    if isinstance(x, (int, float)) and not isinstance(x, bool):
        return x
    if isinstance(x, complex):
        return [float(format(x.real, ".12g")), float(format(x.imag, ".12g"))]
    return scalar_str(x)


def _form(form: LinearForm, groups) -> dict:
    return {
        "group": form.group + 1,
        "coeffs": [scalar_str(c) for c in form.coeffs],
        "form": form.to_poly(groups).render(),
    }


def _group_label(I, cut) -> str:
    """Row basis label as digits of the group's parties, e.g. '101'."""
    (idx,) = I
    digits = []
    for p in reversed(cut.row_groups[0]):
        d = cut.dims[p]
        digits.append(str(idx % d))
        idx //= d
    return "".join(reversed(digits))


def factorization_section(rep: VarietyReport) -> dict:
    lin = rep.linearity
    groups = rep.variety.groups
    if lin.kind == "LINEAR" and lin.factors:
        return {
            "type": "linear_forms",
            "constant": scalar_str(lin.constant),
            "numeric": lin.numeric,
            "groups": [
                [dict(_form(f, groups), multiplicity=m) for f, m in forms] for forms in lin.factors
            ],
        }
    if lin.segre is not None and (lin.segre.found or lin.segre.linear):
        seg = lin.segre
        return {
            "type": "segre" if seg.found else "disjoint_rows",
            "label": seg.label,
            "row_supports": [[_group_label(I, rep.cut) for I in s] for s in seg.supports],
            "spans": list(seg.spans),
            "common_span": seg.common_span,
        }
    if lin.certificate is not None and lin.certificate.get("type") == "coefficient_minor":
        c = dict(lin.certificate)
        c["minor"] = scalar_str(c["minor"])
        out = {"type": "not_separable", "certificate": c}
        if lin.bilinear:
            out["bilinear_factors"] = [
                {
                    "matrix": [[scalar_str(x) for x in row] for row in b.matrix],
                    "det": scalar_str(b.det),
                    "multiplicity": b.multiplicity,
                    "exact": b.exact,
                    "form": b.to_poly(groups).render(),
                }
                for b in lin.bilinear
            ]
            f = rep.variety.nonzero()[0].poly
            rest = f
            from .polynomials import divide_exact

            for b in lin.bilinear:
                L = b.to_poly(groups)
                if f.mode is Mode.FLOAT or not b.exact:
                    rest, L = rest.to_float(), L.to_float()
                for _ in range(b.multiplicity):
                    q = divide_exact(rest, L)
                    if q is None:
                        rest = None
                        break
                    rest = q
                if rest is None:
                    break
            if rest is not None:
                out["cofactor"] = rest.render()
        return out
    if lin.certificate is not None:
        return {"type": lin.certificate.get("type", "certificate"),
                "certificate": {k: _num(v) if not isinstance(v, (list, str)) else v for k, v in lin.certificate.items()}}
    return {"type": "none"}


def analysis_document(rep: VarietyReport, state_info: dict, tol: float, invariants: dict | None = None,
                      timing: float | None = None) -> dict:
    vp = rep.variety
    minors = []
    for m in vp.minors:
        md = m.poly.multidegree()
        minors.append({
            "rows": list(m.rows),
            "cols": list(m.cols),
            "poly": m.poly.render(),
            "radicand": m.radicand,
            "multidegree": list(md) if md is not None else None,
        })
    doc = {
        "schema": SCHEMA,
        "command": "analyze",
        "state": state_info,
        "cut": rep.cut.text,
        "mode": rep.mode.value,
        "tol": tol,
        "seed": rep.seed,
        "pencil": {"D_P": rep.shape[0], "D_Q": rep.shape[1], "g": rep.shape[2], "groups": list(vp.groups)},
        "rank_threshold": vp.t,
        "flag": vp.flag,
        "minors": minors,
        "linearity": rep.linearity.kind,
        "factorization": factorization_section(rep),
        "verdict": rep.verdict,
        "note": rep.note,
        "invariants": invariants or {},
    }
    if timing is not None:
        doc["timing_seconds"] = timing
    return doc


def render_analysis(doc: dict) -> str:
    lines = [
        f"state   {doc['state']['digest']} ({doc['state']['kind']}, dims {doc['state']['dims']})",
        f"cut     {doc['cut']}   mode {doc['mode']}   seed {doc['seed']}",
        f"pencil  D_P={doc['pencil']['D_P']} D_Q={doc['pencil']['D_Q']} g={doc['pencil']['g']}",
    ]
    if doc["flag"]:
        lines.append(f"flag    {doc['flag']}")
    nz = [m for m in doc["minors"] if m["poly"] != "0"]
    lines.append(f"minors  {len(doc['minors'])} of size {doc['rank_threshold']} ({len(nz)} nonzero)")
    for m in nz[:4]:
        body = m["poly"] if m["radicand"] == 1 else f"sqrt({m['radicand']}) * ({m['poly']})"
        lines.append(f"  {body}")
    if len(nz) > 4:
        lines.append(f"  ... {len(nz) - 4} more")
    fac = doc["factorization"]
    if fac["type"] == "linear_forms":
        for forms in fac["groups"]:
            for f in forms:
                lines.append(f"  factor ({f['form']})^{f['multiplicity']}")
    elif fac["type"] == "not_separable":
        for b in fac.get("bilinear_factors", []):
            lines.append(f"  factor ({b['form']})^{b['multiplicity']}   det C = {b['det']}")
    elif fac["type"] in ("segre", "disjoint_rows"):
        lines.append(f"  {fac['label']}  row supports {fac['row_supports']}  spans {fac['spans']}")
    for k, v in doc["invariants"].items():
        lines.append(f"  {k}: {v}")
    lines.append(f"verdict {doc['verdict']}" + (f"  ({doc['note']})" if doc["note"] else ""))
    return "\n".join(lines)


def fingerprint_document(rep: VarietyReport) -> dict:
    fp = fingerprint(rep)
    if "kappa" in fp:
        fp["kappa"] = [_num(complex(round(z.real, 9) + 0.0, round(z.imag, 9) + 0.0)) for z in fp["kappa"]]
    return fp

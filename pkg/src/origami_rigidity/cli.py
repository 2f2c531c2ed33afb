"""Command-line front end.

Reports go to stdout and diagnostics to stderr.  Exit status is 0 on
success, 1 when an analysis fails and 2 on bad input or usage.
"""
from __future__ import annotations

import argparse
import json
import sys
import warnings
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from ._errors import AnalysisError, GeometryWarning, ModelError
from .barjoint import correspondence_check, double_cone, framework_to_dict
from .derivatives import constraint_system, jacobian_coo
from .fixtures import BUILTIN, fixture_document
from .model import load_creased_paper
from .stability import (
    extend_to_second_order,
    find_stabilizing_stress,
    is_prestress_stable,
    second_order_classify,
)
from .statics import counting_report, resolve_load, stress_report
from .tolerances import DEFAULT

__all__ = ["AnalysisReport", "analyze", "build_parser", "main"]


class InputError(Exception):
    """Bad user input (exit code 2)."""


def _floats(a) -> list | None:
    return None if a is None else [float(x) for x in np.asarray(a, dtype=float).reshape(-1)]


@dataclass
class AnalysisReport:
    I: int  # noqa: E741
    J: int
    H: int
    K: int
    Z: int
    rank: int
    m: int
    s: int
    firstOrderRigid: bool
    staticallyRigid: bool
    prestressStable: bool
    secondOrderRigid: bool
    secondOrderMode: str          # "exact" or "sampled"
    rigidImplied: bool
    countingIdentity: bool
    correspondence: bool
    omega: list | None = None
    secondOrderReason: str = ""

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, d: dict) -> "AnalysisReport":
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in names})

    @classmethod
    def from_json(cls, text: str) -> "AnalysisReport":
        return cls.from_dict(json.loads(text))

    def ladder_violations(self) -> list[str]:
        out = []
        if self.firstOrderRigid and not self.prestressStable:
            out.append("first-order rigid but not prestress stable")
        if self.prestressStable and not self.secondOrderRigid:
            out.append("prestress stable but not second-order rigid")
        if self.secondOrderRigid and not self.rigidImplied:
            out.append("second-order rigid but rigidity not implied")
        return out

    def to_text(self) -> str:
        yn = lambda b: "yes" if b else "no"  # noqa: E731
        lines = [
            f"structure: I={self.I} J={self.J} H={self.H} K={self.K} Z={self.Z}",
            f"rank(JA)={self.rank}  flexes m={self.m}  self-stresses s={self.s}",
            "",
            "rigidity ladder:",
            f"  first-order rigid   <=> statically rigid : {yn(self.firstOrderRigid)} / {yn(self.staticallyRigid)}",
            f"    ==> prestress stable                   : {yn(self.prestressStable)}",
            f"    ==> {'second-order rigid (' + self.secondOrderMode + ')':35s}: {yn(self.secondOrderRigid)}",
            f"    ==> rigid                              : {yn(self.rigidImplied) if self.rigidImplied else 'not implied'}",
            "",
            f"counting identity: {'holds' if self.countingIdentity else 'FAILS'}",
            f"double-cone correspondence: {'agrees' if self.correspondence else 'DISAGREES'}",
        ]
        if self.secondOrderReason:
            lines.append(f"second-order note: {self.secondOrderReason}")
        if self.omega is not None and self.prestressStable and self.m:
            lines.append("stabilising self-stress: " + " ".join(f"{x:.6g}" for x in self.omega))
        return "\n".join(lines)


def analyze(paper, tol_rank: float | None = None, tol_pd: float | None = None,
            samples: int = 10_000, seed: int = 0) -> AnalysisReport:
    """Run the full rigidity ladder on a creased paper."""
    sysm = constraint_system(paper, tol_rank)
    tol_pd = paper.tol.pd if tol_pd is None else tol_pd
    omega = find_stabilizing_stress(sysm, tol_pd=tol_pd, seed=seed)
    prestress = omega is not None
    so = second_order_classify(sysm, samples=samples, seed=seed, tol_pd=tol_pd)
    counting = counting_report(paper, sysm.m)
    corr = correspondence_check(paper, sysm.tol_rank)
    c = paper.counts()
    first = sysm.m == 0
    return AnalysisReport(
        I=c["I"], J=c["J"], H=c["H"], K=c["K"], Z=c["Z"],
        rank=sysm.rank, m=sysm.m, s=sysm.s,
        firstOrderRigid=first, staticallyRigid=first,
        prestressStable=prestress, secondOrderRigid=so.rigid,
        secondOrderMode="sampled" if so.sampled else "exact",
        rigidImplied=first or prestress or so.rigid,
        countingIdentity=counting.holds, correspondence=corr.agrees,
        omega=_floats(omega), secondOrderReason=so.reason,
    )


# ---------------------------------------------------------------------------
# helpers


def _load_paper(path: str, args):
    tol = DEFAULT
    if args.tol_rank is not None:
        tol = tol.with_overrides(rank=args.tol_rank)
    if args.tol_pd is not None:
        tol = tol.with_overrides(pd=args.tol_pd)
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", GeometryWarning)
            paper = load_creased_paper(Path(path), tol)
    except FileNotFoundError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc})") from exc
    except (ModelError, ValueError, KeyError, TypeError) as exc:
        raise InputError(f"{path}: {exc}") from exc
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    return paper


def _load_vector(path: str, key: str, length: int) -> np.ndarray:
    try:
        doc = json.loads(Path(path).read_text())
        v = np.asarray(doc[key] if isinstance(doc, dict) else doc, dtype=float).reshape(-1)
    except FileNotFoundError as exc:
        raise InputError(f"cannot read {path}") from exc
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{path}: expected JSON with a numeric '{key}' array") from exc
    if v.shape != (length,):
        raise InputError(f"{path}: '{key}' must have length {length}, got {v.size}")
    return v


def _emit(args, payload: dict, text: str | None = None):
    if args.format == "json":
        print(json.dumps(payload, indent=2))
    else:
        print(text if text is not None else _plain(payload))


def _plain(d: dict) -> str:
    out = []
    for k, v in d.items():
        if isinstance(v, list) and v and isinstance(v[0], list):
            out.append(f"{k}:")
            out.extend("  " + " ".join(f"{x:.12g}" if isinstance(x, float) else str(x) for x in row) for row in v)
        elif isinstance(v, list):
            out.append(f"{k}: " + " ".join(f"{x:.12g}" if isinstance(x, float) else str(x) for x in v))
        else:
            out.append(f"{k}: {v}")
    return "\n".join(out)


def _matrix_text(A: np.ndarray) -> str:
    return "\n".join(" ".join(f"{x: .16e}" for x in row) for row in A)


# ---------------------------------------------------------------------------
# subcommands


def cmd_analyze(args):
    paper = _load_paper(args.file, args)
    rep = analyze(paper, args.tol_rank, args.tol_pd, args.samples, args.seed)
    if args.format == "json":
        print(rep.to_json())
    else:
        print(rep.to_text())
    for v in rep.ladder_violations():
        print(f"warning: {v}", file=sys.stderr)


def cmd_count(args):
    paper = _load_paper(args.file, args)
    c = paper.counts()
    rows = sum(u.rows for u in paper.units)
    payload = {"I": c["I"], "J": c["J"], "H": c["H"], "K": c["K"], "jacobian_shape": [rows, c["J"]]}
    _emit(args, payload)


def cmd_jacobian(args):
    sysm = constraint_system(_load_paper(args.file, args), args.tol_rank)
    JA = np.asarray(sysm.jacobian)
    if args.sparse:
        i, j, v = jacobian_coo(JA, 1e-15)
        if args.format == "json":
            print(json.dumps({"shape": list(JA.shape), "entries": [[int(a), int(b), float(c)] for a, b, c in zip(i, j, v)]}))
        else:
            print(f"# shape {JA.shape[0]} {JA.shape[1]}")
            print("\n".join(f"{a} {b} {c:.16e}" for a, b, c in zip(i, j, v)))
    elif args.format == "json":
        print(json.dumps({"shape": list(JA.shape), "matrix": JA.tolist()}))
    else:
        print(_matrix_text(JA))


def cmd_hessian(args):
    sysm = constraint_system(_load_paper(args.file, args), args.tol_rank)
    i, j, k, v = sysm.hessian.coo()
    if args.format == "json":
        print(json.dumps({"shape": list(sysm.hessian.shape),
                          "entries": [[int(a), int(b), int(c), float(d)] for a, b, c, d in zip(i, j, k, v)]}))
    else:
        print("# shape " + " ".join(map(str, sysm.hessian.shape)))
        print("\n".join(f"{a} {b} {c} {d:.16e}" for a, b, c, d in zip(i, j, k, v)))


def cmd_flexes(args):
    sysm = constraint_system(_load_paper(args.file, args), args.tol_rank)
    F = sysm.flexes.vectors
    _emit(args, {"m": sysm.m, "flexes": F.T.tolist()})


def cmd_self_stresses(args):
    paper = _load_paper(args.file, args)
    sysm = constraint_system(paper, args.tol_rank)
    W = sysm.stresses.vectors
    payload = {"s": sysm.s, "stresses": [stress_report(paper, w) for w in W.T]}
    if args.format == "json":
        print(json.dumps(payload, indent=2))
    else:
        lines = [f"s: {sysm.s}"]
        for n, w in enumerate(payload["stresses"]):
            lines.append(f"stress {n}:")
            for e in w:
                extra = f" force={_fmt(e['force'])}" if "force" in e else ""
                lines.append(f"  {e['kind']} {e['unit']}: torque={_fmt(e['torque'])}{extra}")
        print("\n".join(lines))


def _fmt(v):
    return "[" + ", ".join(f"{x:.6g}" for x in v) + "]"


def cmd_resolve_load(args):
    paper = _load_paper(args.file, args)
    sysm = constraint_system(paper, args.tol_rank)
    load = _load_vector(args.load, "load", paper.J)
    res = resolve_load(sysm.jacobian, load, sysm.tol_rank)
    payload = {"resolvable": res.resolvable, "residual": res.residual,
               "stress": stress_report(paper, res.stress), "stress_vector": _floats(res.stress),
               "self_stress_dimension": res.stresses.dim}
    if not res.resolvable:
        payload["witness"] = _floats(res.witness)
        payload["work"] = res.work
    _emit(args, payload)


def _stability_payload(classification, sysm, sampled, omega=None, eig=None, t=None):
    d = {"classification": classification, "m": sysm.m, "s": sysm.s,
         "restricted_eigenvalues": _floats(eig) if eig is not None else [], "sampled": sampled}
    if omega is not None:
        d["omega"] = _floats(omega)
    if t is not None:
        d["certified_t"] = float(t)
    return d


def cmd_prestress(args):
    paper = _load_paper(args.file, args)
    sysm = constraint_system(paper, args.tol_rank)
    if args.stress:
        omega = _load_vector(args.stress, "stress", sysm.shape[0])
    else:
        omega = find_stabilizing_stress(sysm, tol_pd=args.tol_pd, seed=args.seed)
        if omega is None:
            _emit(args, _stability_payload("NotPrestressStable", sysm, False))
            return
    v = is_prestress_stable(sysm, omega, tol_pd=args.tol_pd)
    _emit(args, _stability_payload("PrestressStable" if v.stable else "NotPrestressStable", sysm, False,
                                   omega, v.restricted_eigenvalues, v.certified_t))


def cmd_second_order(args):
    paper = _load_paper(args.file, args)
    sysm = constraint_system(paper, args.tol_rank)
    if args.flex:
        rho1 = _load_vector(args.flex, "flex", paper.J)
        ext = extend_to_second_order(sysm, rho1, args.tol_pd)
        d = {"extendable": ext.extendable, "rho1": _floats(ext.rho1), "form_values": _floats(ext.form_values)}
        if ext.extendable:
            d["rho2"] = _floats(ext.rho2)
        else:
            d["omega"] = _floats(ext.omega)
        _emit(args, d)
        return
    r = second_order_classify(sysm, samples=args.samples, seed=args.seed, tol_pd=args.tol_pd)
    d = _stability_payload(r.classification, sysm, r.sampled, r.omega)
    d["exact"] = r.exact
    d["reason"] = r.reason
    if r.rho1 is not None:
        d["rho1"] = _floats(r.rho1)
        d["rho2"] = _floats(r.rho2)
    _emit(args, d)


def cmd_double_cone(args):
    paper = _load_paper(args.file, args)
    fw = double_cone(paper)
    payload = framework_to_dict(fw)
    if args.output:
        Path(args.output).write_text(json.dumps(payload, indent=2))
        print(f"wrote {args.output}", file=sys.stderr)
        rep = correspondence_check(paper)
        _emit(args, {"joints": fw.v, "bars": fw.e, "correspondence": rep.agrees,
                     "framework_flexes": rep.framework_flexes, "framework_stresses": rep.framework_stresses})
    else:
        print(json.dumps(payload, indent=2))


def cmd_fixtures(args):
    out = Path(args.output)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise InputError(f"cannot create {out}: {exc}") from exc
    written = []
    for name in BUILTIN:
        p = out / f"{name}.json"
        p.write_text(json.dumps(fixture_document(name), indent=2))
        written.append(str(p))
    _emit(args, {"written": written}, "\n".join(written))


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("text", "json"), default="text")
    common.add_argument("--tol-rank", type=float, default=None, help="relative singular-value threshold")
    common.add_argument("--tol-pd", type=float, default=None, help="positive-definiteness threshold")
    common.add_argument("--samples", type=int, default=10_000, help="sphere samples for second-order search")
    common.add_argument("--seed", type=int, default=0)

    p = argparse.ArgumentParser(prog="origami-rigidity", description="Rigidity analysis of rigid origami.")
    sub = p.add_subparsers(dest="command", required=True, metavar="command")

    def add(name, func, help_, file=True):
        sp = sub.add_parser(name, parents=[common], help=help_)
        if file:
            sp.add_argument("file", help="creased paper JSON")
        sp.set_defaults(func=func)
        return sp

    add("analyze", cmd_analyze, "run the full rigidity ladder")
    add("count", cmd_count, "structure counts and Jacobian shape")
    sp = add("jacobian", cmd_jacobian, "export the Jacobian")
    sp.add_argument("--sparse", action="store_true", help="coordinate triples instead of dense rows")
    add("hessian", cmd_hessian, "export the Hessian as coordinate quadruples")
    add("flexes", cmd_flexes, "first-order flex basis")
    add("self-stresses", cmd_self_stresses, "self-stress basis")
    sp = add("resolve-load", cmd_resolve_load, "resolve a crease-torque load")
    sp.add_argument("--load", required=True, help='JSON file {"load": [...]}')
    sp = add("prestress", cmd_prestress, "prestress stability")
    g = sp.add_mutually_exclusive_group()
    g.add_argument("--stress", help='JSON file {"stress": [...]}')
    g.add_argument("--search", action="store_true", help="search for a stabilising stress (default)")
    sp = add("second-order", cmd_second_order, "second-order rigidity")
    g = sp.add_mutually_exclusive_group()
    g.add_argument("--flex", help='JSON file {"flex": [...]}')
    g.add_argument("--classify", action="store_true", help="classify the structure (default)")
    sp = add("double-cone", cmd_double_cone, "export the double-coning framework")
    sp.add_argument("-o", "--output", help="write the framework JSON here and print a summary")
    sp = add("fixtures", cmd_fixtures, "write the built-in fixtures", file=False)
    sp.add_argument("output", nargs="?", default="fixtures", help="output directory")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    try:
        args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except AnalysisError as exc:
        print(f"analysis error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

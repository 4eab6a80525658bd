"""Command-line interface: ``orthospec <command> [options]``.

Exit codes: 0 success, 1 a check ran and failed, 2 input error,
3 insufficient data, 4 certification failure.
"""

from __future__ import annotations

import argparse
import hashlib
import itertools
import json
import math
import sys
import time
from importlib import metadata

from . import covers as CV
from . import identities as ID
from . import ortho_enum as OE
from . import spectra as SP
from . import surfaces as SF
from .dirichlet import ResourceCapError, UncertifiedDomainError
from .hyp_core import GeometryError

SCHEMA_RUN = "orthospec.run/1"

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_INSUFFICIENT, EXIT_CERT = 0, 1, 2, 3, 4


class CLIError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0+unknown"


def _finite(obj):
    # strict JSON has no inf/nan; they become null
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    return obj


def _dumps(obj) -> str:
    return json.dumps(_finite(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def _hash_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()[:16]


def _read(path: str):
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise CLIError(EXIT_INPUT, f"{path}: {exc.strerror}") from exc
    try:
        return json.loads(raw), _hash_bytes(raw)
    except json.JSONDecodeError as exc:
        raise CLIError(EXIT_INPUT, f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from exc


def _load_surface(path: str):
    d, h = _read(path)
    try:
        if d.get("schema") == SF.SCHEMA_SURFACE:
            return SF.surface_from_json_obj(d), h
        if "base" in d:
            return CV.cover_from_json_obj(d), h
        return SF.build_from_pants_graph(SF.SurfaceSpec.from_json_obj(d)), h
    except (SF.SpecError, KeyError, TypeError) as exc:
        raise CLIError(EXIT_INPUT, f"{path}: {exc}") from exc


def _load_spectrum(path: str):
    d, h = _read(path)
    try:
        return OE.spectrum_from_json_obj(d), h
    except (KeyError, TypeError, ValueError) as exc:
        raise CLIError(EXIT_INPUT, f"{path}: not a spectrum file ({exc})") from exc


def _manifest(args, inputs: dict, **extra) -> dict:
    # wall time goes to stderr so reruns stay byte-identical
    m = {
        "command": args.command,
        "inputs": inputs,
        "cutoff": args.cutoff,
        "tol": args.tol,
        "seed": args.seed,
        "precision": args.precision,
        "tool_version": _version(),
    }
    m.update(extra)
    return m


def _emit(args, text: str):
    if args.output in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(args.output, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _require_cert(args, ok: bool, what: str):
    if args.require_certified and not ok:
        raise CLIError(EXIT_CERT, f"{what} is not certified")


def _cutoff(args, default=None) -> float:
    L = args.cutoff if args.cutoff is not None else default
    if L is None:
        raise CLIError(EXIT_INPUT, "--cutoff is required")
    if not (L >= 0 and math.isfinite(L)):
        raise CLIError(EXIT_INPUT, "--cutoff must be a finite non-negative number")
    return float(L)


# ---------------------------------------------------------------- commands


def cmd_build(args) -> int:
    d, h = _read(args.spec)
    try:
        if "base" in d:
            surf = CV.cover_from_json_obj(d)
        else:
            surf = SF.build_from_pants_graph(SF.SurfaceSpec.from_json_obj(d))
    except (SF.SpecError, KeyError, TypeError) as exc:
        raise CLIError(EXIT_INPUT, f"{args.spec}: {exc}") from exc
    rep = SF.validate_surface(surf)
    out = surf.to_json_obj()
    out["validation"] = rep.to_json_obj()
    out["manifest"] = _manifest(args, {"spec": h}, certificates={"domain": surf.certified,
                                                                  "validation": rep.ok})
    _require_cert(args, surf.certified, "Dirichlet domain")
    _emit(args, _dumps(out))
    return EXIT_OK if rep.ok else EXIT_CERT


def cmd_spectrum(args) -> int:
    surf, h = _load_surface(args.surface)
    L = _cutoff(args)
    spec = OE.ortho_spectrum(surf, L, keep_reps=False)
    _require_cert(args, spec.certified, "spectrum")
    if args.format == "csv":
        _emit(args, OE.spectrum_to_csv(spec))
    else:
        out = OE.spectrum_to_json_obj(spec)
        out["manifest"] = _manifest(args, {"surface": h}, certificates={"spectrum": spec.certified})
        _emit(args, _dumps(out))
    return EXIT_OK


def cmd_verify(args) -> int:
    surf, hs = _load_surface(args.surface)
    spec, hp = _load_spectrum(args.spectrum)
    if spec.fingerprint and spec.fingerprint != surf.fingerprint():
        raise CLIError(EXIT_INPUT, "spectrum fingerprint does not match the surface")
    _require_cert(args, spec.certified, "spectrum")
    audit = OE.audit_spectrum(surf, spec)
    reports = []
    which = ["basmajian", "bridgeman"] if args.identity == "both" else [args.identity]
    for name in which:
        if name == "basmajian":
            r = ID.basmajian_check(spec, surf, tol=args.tol if args.tol is not None else 1e-3)
        else:
            r = ID.bridgeman_check(spec, surf, tol=args.tol if args.tol is not None else 1e-2)
        reports.append(r.to_json_obj())
    verdicts = [r["verdict"] for r in reports]
    ok = audit["ok"] and all(v == "pass" for v in verdicts)
    inconclusive = audit["ok"] and "fail" not in verdicts and not ok
    out = {"schema": SCHEMA_RUN, "audit": audit, "reports": reports,
           "verdict": "pass" if ok else "inconclusive" if inconclusive else "fail",
           "manifest": _manifest(args, {"surface": hs, "spectrum": hp},
                                 certificates={"spectrum": spec.certified})}
    _emit(args, _dumps(out))
    if inconclusive:
        return EXIT_INSUFFICIENT
    return EXIT_OK if ok else EXIT_FAIL


def cmd_covers(args) -> int:
    if args.k < 1:
        raise CLIError(EXIT_INPUT, "--k must be >= 1")
    if args.k > 4 and not args.force:
        raise CLIError(EXIT_INPUT, "--k above 4 exceeds the default cap (use --force)")
    L = _cutoff(args, 6.0)
    tol = args.tol if args.tol is not None else 1e-8
    n = 2 ** args.k
    X = CV.build_special_X(n, args.gamma)
    la = math.acosh(1.5) / n
    base = OE.ortho_spectrum(X, L, keep_reps=False)
    _require_cert(args, base.certified, "base spectrum")
    rows, spectra = [], []
    ok = True
    for m in range(args.k + 1):
        C = CV.cover_family(args.k, m, X)
        s = OE.ortho_spectrum(C, L, keep_reps=False)
        _require_cert(args, s.certified, f"cover m={m} spectrum")
        spectra.append(s)
        sysl = OE.systole(C, 4 * la * 2 ** args.k)
        expected = la * 2 ** (args.k - m)
        # multiplicity audit: every base length appears degree times as often
        mult = _multiplicity_audit(base, s, n, tol)
        ok &= bool(abs(sysl - expected) <= 1e-8) and mult["ok"]
        rows.append({"m": m, "entries": len(s), "systole": sysl, "expected_systole": expected,
                     "systole_ratio": sysl / la, "multiplicity_audit": mult,
                     "certified": s.certified})
    comps = []
    for a, b in itertools.combinations(range(len(spectra)), 2):
        c = SP.compare_spectra(spectra[a], spectra[b], tol)
        ok &= c.isospectral
        comps.append({"a": a, "b": b, **c.to_json_obj()})
    out = {"schema": SCHEMA_RUN, "k": args.k, "gamma": args.gamma, "l_alpha": la,
           "base_entries": len(base), "covers": rows, "comparisons": comps,
           "verdict": "pass" if ok else "fail",
           "manifest": _manifest(args, {}, certificates={"base": base.certified})}
    _emit(args, _dumps(out))
    return EXIT_OK if ok else EXIT_FAIL


def _multiplicity_audit(base, cover, degree: int, tol: float) -> dict:
    b = sorted(base.lengths)
    c = sorted(cover.lengths)
    L = min(base.cutoff, cover.cutoff) - tol
    b = [x for x in b if x <= L]
    c = [x for x in c if x <= L]
    if len(c) != degree * len(b):
        return {"ok": False, "base": len(b), "cover": len(c), "degree": degree}
    err = float(max((abs(c[k] - b[k // degree]) for k in range(len(c))), default=0.0))
    return {"ok": bool(err <= tol), "base": len(b), "cover": len(c), "degree": degree, "max_error": err}


def cmd_exponents(args) -> int:
    surf, h = _load_surface(args.surface)
    try:
        cuts = sorted(float(x) for x in args.cutoffs.split(","))
    except ValueError as exc:
        raise CLIError(EXIT_INPUT, f"--cutoffs: {exc}") from exc
    if len(cuts) < 4:
        raise SP.InsufficientDataError(f"need >= 4 cutoffs, got {len(cuts)}")
    big = OE.ortho_spectrum(surf, cuts[-1], keep_reps=False)
    _require_cert(args, big.certified, "spectrum")
    fam = [big.truncate(L) for L in cuts]
    fo = SP.ortho_exponent(fam)
    fd = SP.divergence_exponent(fam)
    R = args.radius if args.radius is not None else max(8.0, cuts[-1] - 2.0)
    items = SP.boundary_interval_radii(surf, R, with_feet=True)
    items2 = SP.boundary_interval_radii(surf, 1.25 * R, with_feet=True)
    period = surf.boundary_lengths[0]
    C1, C2 = SP.radius_constant(items, period), SP.radius_constant(items2, period)
    fp = SP.packing_exponent([t[0] for t in items2])
    viol = sum(1 for r, l, _ in items2 if r > math.exp(-l) * (1 + 1e-12))
    out = {"schema": SCHEMA_RUN, "ortho_exponent": fo.to_json_obj(),
           "divergence_exponent": fd.to_json_obj(), "packing_exponent": fp.to_json_obj(),
           "agreement": abs(fo.estimate - fp.estimate),
           "radius_constant": {"R": R, "C": C1, "R_grown": 1.25 * R, "C_grown": C2,
                               "relative_change": abs(C2 - C1) / C1},
           "upper_bound_violations": viol, "n_radii": len(items2),
           "manifest": _manifest(args, {"surface": h}, cutoffs=cuts,
                                 certificates={"spectrum": big.certified})}
    if args.radii_csv:
        with open(args.radii_csv, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("radius,length,foot\n")
            for r, l, f in items2:
                fh.write(f"{float(r)!r},{float(l)!r},{float(f)!r}\n")
    _emit(args, _dumps(out))
    return EXIT_OK


def _round(x, digits=9):
    return float(round(x, digits))


def cmd_reconstruct(args) -> int:
    spec, h = _load_spectrum(args.spectrum)
    _require_cert(args, spec.certified, "spectrum")
    tp = SP.reconstruct_torus(spec)
    d = tp.details
    # reported at 1e-9 so that the two twist signs print identically
    res = {"l_gamma": _round(tp.l_gamma), "l_alpha": _round(tp.l_alpha),
           "twist_abs": _round(tp.twist_abs),
           "simple_ortho": _round(d["t"]), "once_around_ortho": _round(d["once_around"]),
           "crossing_ortho": _round(d["crossing"]), "verified": "verification" in d}
    out = {"schema": SCHEMA_RUN, "result": res,
           "manifest": _manifest(args, {"spectrum": h}, certificates={"spectrum": spec.certified},
                                 reported_decimals=9)}
    _emit(args, _dumps(out))
    return EXIT_OK


def cmd_compare(args) -> int:
    A, ha = _load_spectrum(args.a)
    B, hb = _load_spectrum(args.b)
    c = SP.compare_spectra(A, B, args.tol if args.tol is not None else 1e-8)
    out = {"schema": SCHEMA_RUN, **c.to_json_obj(),
           "manifest": _manifest(args, {"a": ha, "b": hb})}
    _emit(args, _dumps(out))
    return EXIT_OK


def cmd_pinching(args) -> int:
    try:
        eps = tuple(float(x) for x in args.eps.split(","))
    except ValueError as exc:
        raise CLIError(EXIT_INPUT, f"--eps: {exc}") from exc
    res = SP.pinching_experiment(eps, args.gamma, args.n)
    out = {"schema": SCHEMA_RUN, **res, "manifest": _manifest(args, {})}
    _emit(args, _dumps(out))
    return EXIT_OK


# ---------------------------------------------------------------- parser


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("global options")
    g.add_argument("--cutoff", type=float, default=None, help="length cutoff L")
    g.add_argument("--tol", type=float, default=None, help="tolerance (command-specific default)")
    g.add_argument("--threads", type=int, default=1, help="worker threads (output does not depend on it)")
    g.add_argument("--require-certified", action="store_true", help="exit 4 unless certified")
    g.add_argument("--seed", type=int, default=0, help="seed for randomized sweeps")
    g.add_argument("--precision", choices=["double", "extended"], default="double")
    g.add_argument("-o", "--output", default=None, help="output file (default stdout)")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    p = argparse.ArgumentParser(prog="orthospec", description="Ortho spectra of hyperbolic surfaces.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("build", parents=[common], help="build and validate a surface from a JSON spec")
    s.add_argument("spec")
    s.set_defaults(func=cmd_build)

    s = sub.add_parser("spectrum", parents=[common], help="ortho spectrum up to --cutoff")
    s.add_argument("surface")
    s.add_argument("--format", choices=["json", "csv"], default="json")
    s.set_defaults(func=cmd_spectrum)

    s = sub.add_parser("verify", parents=[common], help="Basmajian / Bridgeman-Kahn partial sums")
    s.add_argument("surface")
    s.add_argument("spectrum")
    s.add_argument("--identity", choices=["basmajian", "bridgeman", "both"], default="both")
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("covers", parents=[common], help="cyclic covers of the special one-holed torus")
    s.add_argument("--k", type=int, default=2)
    s.add_argument("--gamma", type=float, default=2.0)
    s.add_argument("--force", action="store_true", help="allow k > 4")
    s.set_defaults(func=cmd_covers)

    s = sub.add_parser("exponents", parents=[common], help="ortho and packing exponents")
    s.add_argument("surface")
    s.add_argument("--cutoffs", default="8,10,12,14,16")
    s.add_argument("--radius", type=float, default=None, help="ball radius for boundary lifts")
    s.add_argument("--radii-csv", default=None)
    s.set_defaults(func=cmd_exponents)

    s = sub.add_parser("reconstruct", parents=[common], help="one-holed torus from its spectrum")
    s.add_argument("spectrum")
    s.set_defaults(func=cmd_reconstruct)

    s = sub.add_parser("compare", parents=[common], help="compare two spectra")
    s.add_argument("a")
    s.add_argument("b")
    s.set_defaults(func=cmd_compare)

    s = sub.add_parser("pinching", parents=[common], help="crossing orthos on pinched tori")
    s.add_argument("--eps", default="0.4,0.2,0.1")
    s.add_argument("--gamma", type=float, default=2.0)
    s.add_argument("--n", type=int, default=5)
    s.set_defaults(func=cmd_pinching)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    t0 = time.perf_counter()
    try:
        if args.precision == "extended":
            raise CLIError(EXIT_INPUT, "--precision extended is not available; enumeration runs in double")
        if args.threads < 1:
            raise CLIError(EXIT_INPUT, "--threads must be >= 1")
        code = args.func(args)
    except CLIError as exc:
        print(f"orthospec: error: {exc}", file=sys.stderr)
        return exc.code
    except (SF.SpecError, CV.DisconnectedCoverError, SP.ReconstructionError) as exc:
        print(f"orthospec: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SP.InsufficientDataError as exc:
        print(f"orthospec: insufficient data: {exc}", file=sys.stderr)
        return EXIT_INSUFFICIENT
    except (OE.CertificationError, UncertifiedDomainError, ResourceCapError) as exc:
        print(f"orthospec: certification failure: {exc}", file=sys.stderr)
        return EXIT_CERT
    except (GeometryError, ValueError) as exc:
        print(f"orthospec: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    print(f"orthospec: {args.command} finished in {time.perf_counter() - t0:.2f}s", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())

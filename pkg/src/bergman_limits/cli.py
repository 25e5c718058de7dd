"""Batch CLI: parse configurations, run computations, emit versioned artifacts.

Every output embeds the run manifest (domain, weights, truncation, shell,
sequence family, thresholds, tool version and a content hash); reruns with an
identical manifest are byte-identical.  Exit codes: 0 success, 1 verification
failure, 2 symbol parse error, 3 admissibility failure, 4 accuracy failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import bergman as bg
from . import limits as lm
from . import bandstruct as bs
from . import toeplitz as tp
from . import verify as vf
from .domains import from_name
from .errors import AccuracyError, NotAdmissibleError, SymbolParseError
from .quadrature import default_orders, make_context
from .symbols import parse_symbol


def _parse_shell(text: str):
    try:
        tmin, tmax, grid = text.split(":")
        return float(tmin), float(tmax), int(grid)
    except ValueError:
        raise SymbolParseError(f"bad --shell {text!r}, expected tmin:tmax:grid") from None


def _sequences(dom, spec: str):
    if spec.startswith("rays"):
        n = int(spec[4:] or 8)
        return lm.default_sequences(dom, nrays=n)
    raise SymbolParseError(f"unknown --sequences {spec!r} (use raysN)")


def build_manifest(args, dom, ctx) -> dict:
    ro, ao = default_orders(dom)
    m = {
        "tool": "bergman-limits",
        "version": __version__,
        "domain": str(dom),
        "nu": ctx.nu,
        "p": ctx.p,
        "degree": args.degree,
        "radial_order": ro,
        "angular_order": ao,
        "symbol": getattr(args, "symbol", None),
        "shell": getattr(args, "shell", None),
        "sequences": getattr(args, "sequences", None),
        "m_steps": getattr(args, "m", None),
        "thresholds": {
            "sigma_floor": 1e-2, "berezin_tol": 1e-2, "norm_tol": 1e-2,
        },
        "seed": args.seed,
        "threads": args.threads,
    }
    digest = hashlib.sha256(
        json.dumps(m, sort_keys=True).encode()).hexdigest()
    m["content_hash"] = digest
    return m


def _dump(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def _write_json(path: Path, payload: dict):
    _dump(path, json.dumps(payload, sort_keys=True, indent=1) + "\n")


def cmd_spectrum(args) -> int:
    dom = from_name(args.domain)
    ctx = make_context(dom, args.nu, args.p)
    if not ctx.admissible:
        raise NotAdmissibleError(f"(nu,nu,p)=({args.nu},{args.nu},{args.p}) "
                                 "fails the admissibility inequalities")
    sym = parse_symbol(args.symbol, dom)
    basis = bg.build_basis(dom, ctx, args.degree)
    tmin, tmax, grid = _parse_shell(args.shell)
    elem = tp.ToeplitzElement.toeplitz(sym)
    est = lm.essential_spectrum_berezin(elem, (tmin, tmax), grid, basis)
    eigs = lm.finite_section_eigenvalues(elem, basis)
    manifest = build_manifest(args, dom, ctx)
    out = Path(args.out)
    payload = json.loads(est.to_json(manifest))
    payload["finite_section"] = [[float(e.real), float(e.imag)] for e in eigs]
    _write_json(out / "spectrum.json", payload)
    csv_text = est.to_csv() + "".join(
        f"{e.real:.17e},{e.imag:.17e},FiniteSection\n" for e in eigs)
    _dump(out / "spectrum.csv", csv_text)
    print(f"spectrum: {len(est.points)} shell points, "
          f"{len(eigs)} finite-section eigenvalues -> {out}")
    return 0


def cmd_verify(args) -> int:
    dom = from_name(args.domain)
    ctx = make_context(dom, args.nu, args.p)
    if not ctx.admissible:
        raise NotAdmissibleError("weight context not admissible")
    suites = vf.run_all(dom, ctx, fault=args.inject_fault)
    manifest = build_manifest(args, dom, ctx)
    ok = all(s["pass"] for s in suites)
    _write_json(Path(args.out) / "verify.json",
                {"schema": "verify-report/1", "manifest": manifest,
                 "suites": suites, "all_pass": ok})
    for s in suites:
        flag = "PASS" if s["pass"] else "FAIL"
        print(f"[{flag}] {s['name']}: residual {s['residual']:.3e} "
              f"(tol {s['tolerance']:.1e})")
    return 0 if ok else 1


def _operator_from_args(args, dom, ctx, basis):
    sym = parse_symbol(args.symbol, dom)
    return tp.ToeplitzElement.toeplitz(sym)


def cmd_compactness(args) -> int:
    dom = from_name(args.domain)
    ctx = make_context(dom, args.nu, args.p)
    if not ctx.admissible:
        raise NotAdmissibleError("weight context not admissible")
    basis = bg.build_basis(dom, ctx, args.degree)
    elem = _operator_from_args(args, dom, ctx, basis)
    seqs = _sequences(dom, args.sequences)
    tmin, tmax, grid = _parse_shell(args.shell)
    v = lm.compactness_test(elem, seqs, args.m, (tmin, tmax), basis)
    manifest = build_manifest(args, dom, ctx)
    _write_json(Path(args.out) / "compactness.json", {
        "schema": "verdict-report/1", "manifest": manifest,
        "kind": "compactness", "verdict": v.verdict,
        "evidence": {
            "berezin_outer": v.berezin_outer,
            "approximant_norm": v.approximant_norm,
            "band_final_over_initial": v.band_final_over_initial,
            "per_sequence": v.evidence["per_sequence"],
            "band_profile": v.evidence["band_profile"],
        }})
    print(f"compactness: {v.verdict} (Berezin outer {v.berezin_outer:.3e}, "
          f"approximant norm {v.approximant_norm:.3e})")
    return 0


def cmd_fredholm(args) -> int:
    dom = from_name(args.domain)
    ctx = make_context(dom, args.nu, args.p)
    if not ctx.admissible:
        raise NotAdmissibleError("weight context not admissible")
    basis = bg.build_basis(dom, ctx, args.degree)
    elem = _operator_from_args(args, dom, ctx, basis)
    seqs = _sequences(dom, args.sequences)
    lamb = complex(args.lam_re, args.lam_im)
    v = lm.fredholm_test(elem, seqs, args.m, lamb, basis)
    manifest = build_manifest(args, dom, ctx)
    _write_json(Path(args.out) / "fredholm.json", {
        "schema": "verdict-report/1", "manifest": manifest,
        "kind": "fredholm", "verdict": v.verdict,
        "evidence": {"sigma_min": v.sigma_min,
                     "per_sequence": v.per_sequence,
                     "lambda": [lamb.real, lamb.imag]}})
    print(f"fredholm at lambda={lamb}: {v.verdict} (sigma_min {v.sigma_min:.3e})")
    return 0


def cmd_band(args) -> int:
    dom = from_name(args.domain)
    ctx = make_context(dom, args.nu, args.p)
    if not ctx.admissible:
        raise NotAdmissibleError("weight context not admissible")
    basis = bg.build_basis(dom, ctx, args.degree)
    if args.symbol == "P":
        nop = bs.node_projection(ctx, bs.band_rule(dom, ctx.nu))
    else:
        elem = _operator_from_args(args, dom, ctx, basis)
        nop = bs.node_operator(elem, basis)
    profile = bs.band_profile(nop)
    manifest = build_manifest(args, dom, ctx)
    _write_json(Path(args.out) / "band.json", {
        "schema": "band-profile/1", "manifest": manifest,
        "profile": [[om, val] for om, val in profile]})
    _dump(Path(args.out) / "band.csv",
          "omega,norm\n" + "".join(f"{om:.17e},{v:.17e}\n" for om, v in profile))
    print("band profile:", ", ".join(f"{om:g}:{v:.3e}" for om, v in profile))
    return 0


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bergman-limits",
                                 description=__doc__.splitlines()[0])
    ap.add_argument("--threads", type=int,
                    default=int(os.environ.get("BERGMAN_LIMITS_THREADS", "0")))
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, symbol=True):
        p.add_argument("--domain", default="disk")
        p.add_argument("--nu", type=float, default=0.0)
        p.add_argument("--p", type=float, default=2.0, dest="p")
        p.add_argument("--degree", type=int, default=30)
        if symbol:
            p.add_argument("--symbol", required=True)
        p.add_argument("--shell", default="0.95:0.99:160")
        p.add_argument("--sequences", default="rays8")
        p.add_argument("--m", type=int, default=8)
        p.add_argument("--out", default="out")
        p.add_argument("--seed", type=int, default=0)

    sp = sub.add_parser("spectrum", help="Berezin-shell essential spectrum estimate")
    common(sp)
    sp.set_defaults(func=cmd_spectrum)

    vp = sub.add_parser("verify", help="run the invariant suites")
    common(vp, symbol=False)
    vp.add_argument("--inject-fault", choices=["branch"], default=None,
                    help="deliberately corrupt a computation (self-test hook)")
    vp.set_defaults(func=cmd_verify)

    cp = sub.add_parser("compactness", help="Theorem-A style compactness verdict")
    common(cp)
    cp.set_defaults(func=cmd_compactness)

    fp = sub.add_parser("fredholm", help="limit-operator Fredholm verdict")
    common(fp)
    fp.add_argument("--lam-re", type=float, default=0.0)
    fp.add_argument("--lam-im", type=float, default=0.0)
    fp.set_defaults(func=cmd_fredholm)

    bp = sub.add_parser("band", help="band profile of T_symbol (or P with --symbol P)")
    common(bp)
    bp.set_defaults(func=cmd_band)
    return ap


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    if args.threads:
        try:
            import numba
            numba.set_num_threads(max(1, args.threads))
        except ImportError:
            pass
    try:
        return args.func(args)
    except SymbolParseError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except NotAdmissibleError as e:
        print(f"error: {e}", file=sys.stderr)
        return 3
    except AccuracyError as e:
        print(f"error: {e}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())

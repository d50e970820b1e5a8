"""Command-line front end: ``saa {classify,analyze,morse,dump-frames} --config PATH``.

Exit codes: 0 when a verdict was reached, 2 for an inconclusive analysis and
1 for any error.  ``SAA_LOG`` selects the log level (error, info, debug).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from saa.config import RunConfig, load_config
from saa.errors import SaaError
from saa.field_dsl import system_from_config
from saa.flow import SingularExtremal, integrate, seed_on_locus, write_extremal_csv, write_jacobian_csv
from saa.hamiltonian import CotangentPoint, bracket_bundle, classify_point, regular_control, singular_feedback
from saa.jacobi import ScanResult, analyze_extremal, conjugate_scan, frames
from saa.second_variation import assemble_qt, morse_index, projected_spectrum, write_spectrum_csv

log = logging.getLogger("saa")

EXIT_OK, EXIT_ERROR, EXIT_INCONCLUSIVE = 0, 1, 2


def _setup_logging() -> None:
    level = os.environ.get("SAA_LOG", "error").upper()
    logging.basicConfig(level=getattr(logging, level, logging.ERROR), format="%(levelname)s %(name)s: %(message)s")


def _num(x):
    """JSON-safe float (non-finite values become strings)."""
    x = float(x)
    return x if math.isfinite(x) else repr(x)


def _dump_json(doc: dict, path: Path | None, timestamp: bool) -> str:
    if timestamp:
        doc = dict(doc, generated_at=datetime.now(timezone.utc).isoformat())
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if path is not None:
        path.write_text(text, encoding="utf-8")
    return text


def _steps_multiple(n_steps: int, base: int) -> int:
    k = -(-n_steps // base) * base
    if k != n_steps:
        log.info("n_steps rounded up from %d to %d (multiple of %d)", n_steps, k, base)
    return k


def _prepare(cfg: RunConfig):
    sys_ = system_from_config(cfg.system)
    if len(cfg.seed.q0) != sys_.n or len(cfg.seed.p_guess) != sys_.n:
        raise SaaError(f"seed vectors must have length n = {sys_.n}")
    return sys_


def _extremal(cfg: RunConfig, sys_, n_steps: int) -> SingularExtremal:
    tol = cfg.tolerances
    lam0 = seed_on_locus(sys_, cfg.seed.q0, cfg.seed.p_guess, eps_sing=tol.eps_sing)
    return integrate(sys_, lam0, cfg.T, n_steps, project=cfg.project, tol_inv=tol.tol_inv, eps_sing=tol.eps_sing)


def _write_detscan(scan: ScanResult | None, path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "det", "smin"])
        if scan is not None:
            for row in zip(scan.t, scan.det, scan.smin):
                w.writerow([repr(float(x)) for x in row])


def _tolerance_doc(cfg: RunConfig) -> dict:
    t = cfg.tolerances
    return {k: getattr(t, k) for k in ("eps_sing", "eps_cls", "tol_inv", "tol_sglc", "tol_t", "tol_eig")}


def cmd_classify(cfg: RunConfig, args) -> int:
    sys_ = _prepare(cfg)
    lam = CotangentPoint(cfg.seed.q0, cfg.seed.p_guess)
    b = bracket_bundle(sys_, lam)
    cls = classify_point(b, cfg.tolerances.eps_cls)
    doc = {
        "classification": cls.kind,
        "gap": _num(cls.gap),
        "norm_hI": _num(b.norm_hI),
        "h0c": _num(b.h0c),
        "h00c": _num(b.h00c),
        "hc0c": _num(b.hc0c),
    }
    u = regular_control(b, cfg.tolerances.eps_cls)
    try:
        r = singular_feedback(b, cfg.tolerances.eps_sing)
        doc["r"] = _num(r)
        if u is None:
            u = r * b.hI
    except SaaError as exc:
        doc["r"] = None
        doc["r_error"] = str(exc)
    doc["u"] = None if u is None else [_num(x) for x in u]
    out = Path(args.out or cfg.out) if (args.out or args.write) else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    sys.stdout.write(_dump_json(doc, out / "classify.json" if out else None, not args.no_timestamp))
    return EXIT_OK


def cmd_analyze(cfg: RunConfig, args) -> int:
    sys_ = _prepare(cfg)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    tol = cfg.tolerances
    n_steps = _steps_multiple(cfg.n_steps, 2 * cfg.grid if cfg.morse_check else 2)
    t0 = time.perf_counter()
    ext = _extremal(cfg, sys_, n_steps)
    write_extremal_csv(ext, out / "extremal.csv")
    if cfg.dump_jacobian:
        write_jacobian_csv(ext, out / "jacobian.csv")
    rep, scan = analyze_extremal(ext, sys_, cfg.convention, tol.tol_sglc, tol.tol_t * cfg.T)
    _write_detscan(scan, out / "detscan.csv")
    doc = {
        "glc_min": _num(rep.glc_min),
        "sglc": rep.sglc_holds,
        "conjugate_times": [{"t": _num(t), "multiplicity": k} for t, k in rep.conjugate_times],
        "endpoint_conjugate": rep.endpoint_hit,
        "corank": rep.corank,
        "verdict": rep.verdict,
        "tolerances": _tolerance_doc(cfg),
        "grid": {"T": cfg.T, "n_steps": n_steps, "convention": cfg.convention, "projection": cfg.project},
        "extremal": {
            "valid": ext.valid,
            "admissible": ext.admissible,
            "max_drift_hc": _num(ext.drift[:, 0].max()),
            "max_drift_h0c": _num(ext.drift[:, 1].max()),
            "max_symplectic_defect": _num(ext.symplectic_defect().max()),
        },
    }
    if scan is not None:
        doc["constant_jacobi_solutions"] = scan.n_constant
        if scan.inconclusive:
            doc["scan_message"] = scan.message
    if cfg.morse_check and rep.sglc_holds:
        qt = assemble_qt(ext, sys_, cfg.grid)
        ev = projected_spectrum(qt)
        idx = int(np.sum(ev < -tol.tol_eig * np.abs(ev).max()))
        write_spectrum_csv(ev, out / "spectrum.csv")
        count = sum(k for _, k in rep.conjugate_times)
        doc["morse"] = {"index": idx, "conjugate_count": count, "agreement": idx == count, "N": cfg.grid}
    log.info("analysis finished in %.2f s", time.perf_counter() - t0)
    sys.stdout.write(_dump_json(doc, out / "report.json", not args.no_timestamp))
    return EXIT_INCONCLUSIVE if rep.verdict == "Inconclusive" else EXIT_OK


def cmd_morse(cfg: RunConfig, args) -> int:
    sys_ = _prepare(cfg)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    tol = cfg.tolerances
    n_steps = _steps_multiple(cfg.n_steps, 2 * cfg.grid)
    ext = _extremal(cfg, sys_, n_steps)
    fs = frames(ext, sys_, cross_check=False)
    qt = assemble_qt(ext, sys_, cfg.grid, fs=fs)
    ev = projected_spectrum(qt)
    idx = int(np.sum(ev < -tol.tol_eig * np.abs(ev).max()))
    write_spectrum_csv(ev, out / "spectrum.csv")
    doc = {"index": idx, "N": cfg.grid, "T": cfg.T, "n_steps": n_steps, "min_eigenvalue": _num(ev.min())}
    try:
        scan = conjugate_scan(ext, sys_, convention=cfg.convention, fs=fs, tol_t=tol.tol_t * cfg.T)
        count = sum(k for _, k in scan.roots)
        doc.update(conjugate_count=count, agreement=(idx == count) and not scan.inconclusive,
                   conjugate_times=[{"t": _num(t), "multiplicity": k} for t, k in scan.roots])
    except SaaError as exc:
        doc.update(conjugate_count=None, agreement=None, scan_error=str(exc))
    sys.stdout.write(_dump_json(doc, out / "morse.json", not args.no_timestamp))
    return EXIT_OK


def cmd_dump_frames(cfg: RunConfig, args) -> int:
    sys_ = _prepare(cfg)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    ext = _extremal(cfg, sys_, cfg.n_steps)
    fs = frames(ext, sys_, cross_check=True)
    n2, m = 2 * sys_.n, sys_.m
    header = (["t"] + [f"ZI{i + 1}" for i in range(n2)] + [f"ZIdot{i + 1}" for i in range(n2)]
              + [f"Z{i + 1}_{j + 1}" for j in range(m) for i in range(n2)]
              + [f"l{i + 1}{j + 1}" for i in range(m) for j in range(m)] + ["schur", "hc0c"])
    with open(out / "frames.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for k in range(len(ext.t)):
            row = [ext.t[k], *fs["ZI"][k], *fs["ZIdot"][k], *fs["Zcols"][k].T.reshape(-1), *fs["l"][k].reshape(-1),
                   fs["schur"][k], fs["hc0c"][k]]
            w.writerow([repr(float(x)) for x in row])
    sys.stdout.write(f"wrote {out / 'frames.csv'} ({len(ext.t)} rows)\n")
    return EXIT_OK


COMMANDS = {"classify": cmd_classify, "analyze": cmd_analyze, "morse": cmd_morse, "dump-frames": cmd_dump_frames}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="saa", description="Singular extremals of L1-minimal control-affine problems.")
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", required=True, help="JSON run configuration")
    ap.add_argument("--out", help="output directory (overrides the config)")
    ap.add_argument("--steps", type=int, help="RK4 steps over [0, T]")
    ap.add_argument("--grid", type=int, help="intervals of the second-variation grid")
    ap.add_argument("--convention", choices=("rev", "fwd"), help="Jacobi boundary convention")
    ap.add_argument("--project", action="store_true", default=None, help="re-project onto the singular locus each step")
    ap.add_argument("--morse-check", action="store_true", default=None, help="cross-check with the Morse index")
    ap.add_argument("--dump-jacobian", action="store_true", default=None, help="write J_t to jacobian.csv")
    ap.add_argument("--no-timestamp", action="store_true", help="omit the timestamp from JSON reports")
    ap.add_argument("--write", action="store_true", help="classify: also write classify.json")
    return ap


def main(argv: list[str] | None = None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config).with_overrides(
            out=args.out, n_steps=args.steps, grid=args.grid, convention=args.convention, project=args.project,
            morse_check=args.morse_check, dump_jacobian=args.dump_jacobian,
        )
        return COMMANDS[args.command](cfg, args)
    except SaaError as exc:
        sys.stderr.write(f"error: {type(exc).__name__}: {exc}\n")
        return EXIT_ERROR
    except (OSError, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry points: single solves, convergence studies, inf-sup
tables, Mach reports, mesh info.

Every command is a deterministic function of its JSON config file.  Exit
codes: 0 ok, 2 config error, 3 I/O error, 4 solver/numerical error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass
from multiprocessing import get_context

import numpy as np

from . import analysis, linalg, mesh as meshmod, svgplot
from .coefficients import CoefficientError, paper_coefficients
from .solver import (ConfigError, ProblemConfig, Solution, build_coefficients,
                     build_mesh, manufactured_solution, solve_galbrun)

CSV_HEADER = "order,h,error,conserror"

_TEMPLATE_KEYS = [k for k in ProblemConfig.__dataclass_fields__ if k not in ("h", "k")]


class CliError(Exception):
    def __init__(self, msg, code):
        super().__init__(msg)
        self.code = code


def _load_json(path):
    try:
        with open(path, encoding="utf-8") as f:
            return json.load(f)
    except OSError as exc:
        raise CliError(f"cannot read config {path}: {exc}", 3)
    except json.JSONDecodeError as exc:
        raise CliError(f"malformed config {path}: {exc}", 2)


def _outdir(path):
    try:
        os.makedirs(path, exist_ok=True)
        return path
    except OSError as exc:
        raise CliError(f"cannot create output directory {path}: {exc}", 3)


def _fmt(x):
    return f"{x:.17g}"


# ---------------------------------------------------------------------------
# solve
# ---------------------------------------------------------------------------

def cmd_solve(config_path, out_dir):
    raw = _load_json(config_path)
    rhs = raw.pop("rhs", "gaussian_source")
    try:
        cfg = ProblemConfig.from_dict(raw)
        if rhs not in ("gaussian_source", "manufactured", "custom"):
            raise ConfigError(f"unknown rhs {rhs!r}")
    except ConfigError as exc:
        raise CliError(str(exc), 2)
    try:
        sol = solve_galbrun(cfg, rhs=rhs)
    except (linalg.SingularMatrixError, linalg.NonConvergenceError) as exc:
        raise CliError(f"solver failed: {exc}", 4)
    out = _outdir(out_dir)
    meta = {
        "config": cfg.to_dict(), "rhs": rhs,
        "residual": sol.report.residual, "iterations": sol.report.iterations,
        "method": sol.report.method, "ndof": int(sol.space.ndof),
        "velocity_norm": float(np.linalg.norm(sol.velocity)),
    }
    with open(os.path.join(out, "solution_meta.json"), "w", encoding="utf-8") as f:
        json.dump(meta, f, indent=2, sort_keys=True)
        f.write("\n")
    with open(os.path.join(out, "solution_vector.txt"), "w", encoding="utf-8") as f:
        f.write(f"dofs {sol.space.ndof}\n")
        for v in sol.velocity:
            f.write(f"{v.real:.17g} {v.imag:.17g}\n")
    print(f"solve: ndof={sol.space.ndof} |u|={meta['velocity_norm']:.6e} "
          f"residual={sol.report.residual:.2e} ({sol.report.method})")
    return 0


# ---------------------------------------------------------------------------
# convergence study
# ---------------------------------------------------------------------------

@dataclass
class StudyConfig:
    h_values: list
    k_values: list
    template: dict
    manufactured: bool = False
    reference_k: int | None = None
    reference_h: float | None = None

    @classmethod
    def from_dict(cls, raw: dict) -> "StudyConfig":
        raw = dict(raw)
        try:
            h_values = [float(h) for h in raw.pop("h_values")]
            k_values = [int(k) for k in raw.pop("k_values")]
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"study needs h_values and k_values lists: {exc}")
        manufactured = bool(raw.pop("manufactured", False))
        ref_k = raw.pop("reference_k", None)
        ref_h = raw.pop("reference_h", None)
        unknown = set(raw) - set(_TEMPLATE_KEYS)
        if unknown:
            raise ConfigError(f"unknown study config keys: {sorted(unknown)}")
        if any(b <= a for a, b in zip(h_values[1:], h_values)) is False:
            pass
        if not all(a > b for a, b in zip(h_values, h_values[1:])):
            raise ConfigError("h_values must be strictly decreasing")
        if manufactured == (ref_k is not None and ref_h is not None):
            raise ConfigError("choose exactly one of manufactured=true or "
                              "reference_k/reference_h")
        if ref_k is not None and ref_k <= max(k_values):
            raise ConfigError("reference_k must exceed the largest study order")
        return cls(h_values, k_values, raw, manufactured, ref_k, ref_h)

    def point_config(self, h, k) -> ProblemConfig:
        return ProblemConfig.from_dict({**self.template, "h": h, "k": k})


def _study_point(cfg: ProblemConfig, manufactured: bool, reference=None):
    rhs = "manufactured" if manufactured else "gaussian_source"
    sol = solve_galbrun(cfg, rhs=rhs)
    if manufactured:
        ms = manufactured_solution(sol.coefficients)
        err = analysis.x_norm_error_exact(sol, ms.value, ms.jacobian)
    else:
        err = analysis.x_norm_error(sol, reference)
    cons = float("nan")
    if cfg.k >= 2:
        cons = analysis.consistency_error(sol)
    return analysis.ConvergenceRecord(order=cfg.k, h=cfg.h, error=err,
                                      conserror=cons, variant=cfg.variant,
                                      bc=cfg.bc)


def _rebuild_solution(cfg_dict, velocity):
    cfg = ProblemConfig.from_dict(cfg_dict)
    from .fem import VECTOR_PK, build_space
    m = build_mesh(cfg)
    X = build_space(m, VECTOR_PK, cfg.k, bc_mode=cfg.bc)
    return Solution(space=X, velocity=velocity, config=cfg,
                    coefficients=build_coefficients(cfg))


def _study_worker(args):
    cfg_dict, manufactured, ref_payload = args
    cfg = ProblemConfig.from_dict(cfg_dict)
    reference = None
    if ref_payload is not None:
        reference = _rebuild_solution(*ref_payload)
    rec = _study_point(cfg, manufactured, reference)
    return (rec.order, rec.h, rec.error, rec.conserror, rec.variant, rec.bc)


def run_study(study: StudyConfig, workers: int = 1):
    reference = None
    if not study.manufactured:
        ref_cfg = study.point_config(study.reference_h, study.reference_k)
        reference = solve_galbrun(ref_cfg, rhs="gaussian_source")
    points = [(k, h) for k in sorted(study.k_values) for h in study.h_values]
    if workers <= 1:
        records = [_study_point(study.point_config(h, k), study.manufactured,
                                reference) for k, h in points]
    else:
        ref_payload = None
        if reference is not None:
            ref_payload = (reference.config.to_dict(), reference.velocity)
        jobs = [(study.point_config(h, k).to_dict(), study.manufactured,
                 ref_payload) for k, h in points]
        with get_context("spawn").Pool(workers) as pool:
            rows = pool.map(_study_worker, jobs)
        records = [analysis.ConvergenceRecord(order=o, h=h, error=e,
                                              conserror=c, variant=v, bc=b)
                   for o, h, e, c, v, b in rows]
    records.sort(key=lambda r: (r.order, -r.h))
    return records


def write_records_csv(records, path):
    with open(path, "w", encoding="utf-8") as f:
        f.write(CSV_HEADER + "\n")
        for r in records:
            f.write(f"{r.order},{_fmt(r.h)},{_fmt(r.error)},{_fmt(r.conserror)}\n")


def read_records_csv(path):
    records = []
    with open(path, encoding="utf-8") as f:
        header = f.readline().strip()
        if header != CSV_HEADER:
            raise CliError(f"unexpected CSV header {header!r}", 3)
        for line in f:
            o, h, e, c = line.strip().split(",")
            records.append(analysis.ConvergenceRecord(
                order=int(o), h=float(h), error=float(e), conserror=float(c)))
    return records


def cmd_convergence(config_path, out_dir, workers=1, svg=False):
    raw = _load_json(config_path)
    try:
        study = StudyConfig.from_dict(raw)
    except ConfigError as exc:
        raise CliError(str(exc), 2)
    try:
        records = run_study(study, workers=workers)
    except (linalg.SingularMatrixError, linalg.NonConvergenceError) as exc:
        raise CliError(f"solver failed: {exc}", 4)
    out = _outdir(out_dir)
    csv_path = os.path.join(out, "convergence.csv")
    write_records_csv(records, csv_path)
    for k in sorted(study.k_values):
        sub = [r for r in records if r.order == k]
        rates = analysis.eoc(sub) if len(sub) >= 2 else []
        rate_s = ", ".join(f"{r:.2f}" for r in rates)
        print(f"k={k}: errors " + ", ".join(f"{r.error:.3e}" for r in sub)
              + (f" | eoc {rate_s}" if rates else ""))
    if svg:
        series = []
        for k in sorted(study.k_values):
            sub = [r for r in records if r.order == k]
            series.append((f"k={k}", [r.h for r in sub], [r.error for r in sub]))
        svgplot.write_loglog_svg(os.path.join(out, "convergence.svg"), series,
                                 title="X-norm error", slopes=sorted(study.k_values))
    print(f"wrote {csv_path}")
    return 0


# ---------------------------------------------------------------------------
# inf-sup table
# ---------------------------------------------------------------------------

def cmd_infsup(config_path, out_dir):
    raw = _load_json(config_path)
    try:
        h_values = [float(h) for h in raw.pop("h_values")]
        k_values = [int(k) for k in raw.pop("k_values")]
        seed = int(raw.pop("seed", 0))
        family = raw.pop("mesh_family", "barycentric")
        velocity_bc = raw.pop("velocity_bc", "strong_normal")
        pressure_family = raw.pop("pressure_family", "discontinuous")
        if raw:
            raise ConfigError(f"unknown infsup config keys: {sorted(raw)}")
        if family not in ("unstructured", "barycentric"):
            raise ConfigError(f"unknown mesh_family {family!r}")
    except (KeyError, ValueError, ConfigError) as exc:
        raise CliError(str(exc), 2)
    out = _outdir(out_dir)
    rows = []
    for k in k_values:
        for level, h in enumerate(h_values):
            m = meshmod.generate_square_mesh(h, seed)
            if family == "barycentric":
                m = meshmod.barycentric_refine(m)
            try:
                beta = analysis.inf_sup_constant(m, k, velocity_bc, pressure_family)
            except (linalg.NonConvergenceError, analysis.AnalysisError) as exc:
                raise CliError(f"inf-sup computation failed: {exc}", 4)
            flag = "LOCKING" if beta <= 1e-6 else ""
            rows.append((pressure_family, k, level, h, beta, flag))
            print(f"family={family}/{pressure_family} k={k} level={level} "
                  f"h={h:g}: beta_h={beta:.6f} {flag}")
    path = os.path.join(out, "infsup.csv")
    with open(path, "w", encoding="utf-8") as f:
        f.write("pressure_family,k,level,h,beta_h,flag\n")
        for fam, k, level, h, beta, flag in rows:
            f.write(f"{fam},{k},{level},{_fmt(h)},{_fmt(beta)},{flag}\n")
    print(f"wrote {path}")
    return 0


# ---------------------------------------------------------------------------
# Mach report
# ---------------------------------------------------------------------------

def cmd_mach(config_path, out_dir):
    raw = _load_json(config_path)
    try:
        alpha = float(raw.pop("alpha"))
        flow = raw.pop("flow", "periodic_flow")
        beta_h = float(raw.pop("beta_h", 0.5))
        resolution = int(raw.pop("resolution", 512))
        omega = float(raw.pop("omega", 0.78 * 2 * math.pi))
        gamma = float(raw.pop("gamma", 0.1))
        if raw:
            raise ConfigError(f"unknown mach config keys: {sorted(raw)}")
        cset = paper_coefficients(alpha, flow, omega=omega, gamma=gamma)
    except (KeyError, ValueError, ConfigError, CoefficientError) as exc:
        raise CliError(str(exc), 2)
    rep = analysis.mach_report(cset, beta_h, resolution)
    out = _outdir(out_dir)
    payload = {
        "alpha": alpha, "flow": flow, "beta_h": beta_h,
        "mach_sq": rep.mach_sq, "C_M": rep.C_M, "theta": rep.theta,
        "bound_homogeneous": rep.bound_homogeneous,
        "bound_heterogeneous": rep.bound_heterogeneous,
        "admissible": rep.admissible,
    }
    with open(os.path.join(out, "mach.json"), "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write("\n")
    print(f"mach^2={rep.mach_sq:.6f} C_M={rep.C_M:.4f} theta={rep.theta:.4f} "
          f"bound={rep.bound_heterogeneous:.6f} admissible={rep.admissible}")
    return 0


# ---------------------------------------------------------------------------
# mesh info
# ---------------------------------------------------------------------------

def cmd_mesh_info(config_path, out_dir):
    raw = _load_json(config_path)
    try:
        h = float(raw.pop("h"))
        seed = int(raw.pop("seed", 0))
        periodic = bool(raw.pop("periodic_matching", False))
        bary = bool(raw.pop("barycentric", False))
        if raw:
            raise ConfigError(f"unknown mesh config keys: {sorted(raw)}")
    except (KeyError, ValueError, ConfigError) as exc:
        raise CliError(str(exc), 2)
    m = meshmod.generate_square_mesh(h, seed, periodic_matching=periodic)
    if bary:
        m = meshmod.barycentric_refine(m)
    report = meshmod.validate(m)
    out = _outdir(out_dir)
    meshmod.write_mesh(m, os.path.join(out, "mesh.txt"))
    print(f"vertices={m.n_vertices} triangles={m.n_triangles} h_max={m.h_max:.6g} "
          f"valid={report.ok}")
    for v in report.violations:
        print(f"  violation: {v}")
    return 0 if report.ok else 4


# ---------------------------------------------------------------------------

def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="galbrun2d",
        description="Damped time-harmonic Galbrun solver and diagnostics")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("solve", "convergence", "infsup", "mach", "mesh-info"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True)
        p.add_argument("--out", default=".")
        if name == "convergence":
            p.add_argument("--workers", type=int, default=1)
            p.add_argument("--svg", action="store_true")
    args = parser.parse_args(argv)
    try:
        if args.command == "solve":
            return cmd_solve(args.config, args.out)
        if args.command == "convergence":
            return cmd_convergence(args.config, args.out, args.workers, args.svg)
        if args.command == "infsup":
            return cmd_infsup(args.config, args.out)
        if args.command == "mach":
            return cmd_mach(args.config, args.out)
        return cmd_mesh_info(args.config, args.out)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())

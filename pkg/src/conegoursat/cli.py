"""Command-line entry point: ``conegoursat {verify,solve,decay,norms,sweep}``.

Exit codes: 0 ok, 2 dimension gate refused, 3 non-contraction or divergence,
4 configuration error, 5 internal error.  ``GOURSAT_OUTPUT_DIR`` overrides the
configured output directory.
"""
import argparse
import csv
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .config import expand_sweep, parse_config
from .errors import (BadWidth, ConfigError, GateRefused, IncompatibleData, SolveFailure,
                     UnboundedWeightedData)
from .goursat import picard_solve
from .norms import (NormSpec, WeightSpec, audit_family, energy_audit, scan_lambda, slice_energy,
                    weighted_sobolev_norm)
from .physical import decay_report

EXIT_OK, EXIT_GATE, EXIT_SOLVE, EXIT_CONFIG, EXIT_INTERNAL = 0, 2, 3, 4, 5


def _fmt(v):
    return repr(float(v))


def write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(_jsonable(obj), fh, sort_keys=True, indent=2)
        fh.write("\n")


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if np.isfinite(v) else None
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([x if isinstance(x, str) else _fmt(x) for x in row])


def write_field(path, fld):
    Y, X = fld.grid.mesh()
    comps = fld.n_components
    if comps == 1:
        header = ["y", "x", "omega", "dyomega", "dxomega"]
        cols = [Y.ravel(), X.ravel(), fld.values[..., 0].ravel(), fld.dy[..., 0].ravel(),
                fld.dx[..., 0].ravel()]
    else:
        header = ["y", "x"]
        cols = [Y.ravel(), X.ravel()]
        for name, arr in (("omega", fld.values), ("dyomega", fld.dy), ("dxomega", fld.dx)):
            for c in range(comps):
                header.append(f"{name}_{c}")
                cols.append(arr[..., c].ravel())
    write_csv(path, header, zip(*cols))


# --- orchestration -------------------------------------------------------------------

def _solve(cfg, out):
    grid = cfg.grid()
    source = cfg.source()
    plus, minus = cfg.data(grid)
    summary = {"config_hash": cfg.config_hash}
    try:
        fld, report = picard_solve(plus, minus, source, grid, cfg.solver_config())
    except GateRefused as exc:
        summary.update(status="gate_refused", message=str(exc))
        return None, None, summary, EXIT_GATE
    except SolveFailure as exc:
        summary.update(status=exc.report.status if exc.report else "failed", message=str(exc))
        if exc.report is not None:
            write_json(out / "report.json", exc.report.to_dict())
        return None, exc.report, summary, EXIT_SOLVE
    write_field(out / "field.csv", fld)
    write_json(out / "report.json", report.to_dict())
    summary.update(status=report.status, iterations=report.iterations, u_star=report.u_star,
                   sigma_fit=report.sigma_fit, sigma_method=report.sigma_method)
    code = EXIT_OK if report.status == "converged" else EXIT_SOLVE
    return fld, report, summary, code


def _decay(cfg, fld, out, summary):
    samples, fit = decay_report(fld, cfg.alpha)
    rows = zip(samples.t_plus_r, samples.f, samples.dtf, samples.drf, samples.ynull)
    write_csv(out / "decay.csv", ["t_plus_r", "f", "dtf", "drf", "ynull"], rows)
    write_json(out / "decay_fit.json", fit)
    summary["decay_slopes"] = {k: v["slope"] for k, v in fit["channels"].items()}
    summary["decay_pass"] = fit["pass"]


def _norms(cfg, fld, out, summary):
    grid = fld.grid
    source = cfg.source()
    w = WeightSpec(cfg.ell, cfg.Lam)
    u, v = grid.y[-1], grid.x[-1]
    rows = []
    plus_norm = weighted_sobolev_norm(fld.values[0], grid.x, NormSpec(1, cfg.alpha))
    rows.append(("plus_data_sobolev_norm_k1", 0.0, v, plus_norm, cfg.ell, cfg.Lam))
    for i in (grid.ny // 4, grid.ny // 2, grid.ny):
        ui = grid.y[i]
        rows.append(("energy_plus", ui, v, slice_energy(fld, "plus", ui, v, w), cfg.ell, cfg.Lam))
        rows.append(("energy_minus", ui, v, slice_energy(fld, "minus", ui, v, w), cfg.ell, cfg.Lam))
    audit = energy_audit(fld, source, u, v, w)
    rows.append(("audit_margin", u, v, audit.margin, cfg.ell, cfg.Lam))
    scan = scan_lambda(fld, source, audit_family(grid), ell=cfg.ell)
    star = energy_audit(fld, source, u, v, WeightSpec(cfg.ell, scan.Lam_star))
    rows.append(("lambda_star", u, v, scan.Lam_star, cfg.ell, scan.Lam_star))
    rows.append(("c1_estimate", u, v, scan.c1_est, cfg.ell, scan.Lam_star))
    rows.append(("audit_margin_at_lambda_star", u, v, star.margin, cfg.ell, scan.Lam_star))
    rows.append(("audit_relative_margin_min", u, v, scan.min_relative_margin, cfg.ell, scan.Lam_star))
    write_csv(out / "norms.csv", ["quantity", "u", "v", "value", "weight_ell", "weight_Lambda"], rows)
    summary["energy_margin"] = scan.min_relative_margin
    summary["lambda_star"] = scan.Lam_star


def run(subcommand, cfg, out_dir):
    """Run one subcommand for one configuration; returns ``(summary, exit_code)``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if subcommand == "verify":
        from .verify import run_checks
        checks = run_checks()
        write_json(out / "verify.json", checks)
        ok = all(c["pass"] for c in checks.values())
        return {"status": "ok" if ok else "failed", "checks": checks}, EXIT_OK if ok else EXIT_INTERNAL
    fld, report, summary, code = _solve(cfg, out)
    if fld is not None and subcommand in ("decay", "norms"):
        if subcommand == "decay":
            _decay(cfg, fld, out, summary)
        else:
            _norms(cfg, fld, out, summary)
    write_json(out / "summary.json", summary)
    return summary, code


def run_sweep(text, cfg, out_dir, workers=None):
    configs = expand_sweep(text, cfg)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    def one(item):
        idx, c = item
        return run("solve", c, out / f"run_{idx:03d}_{c.config_hash[:12]}")

    with ThreadPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(one, enumerate(configs)))
    summaries = [s for s, _ in results]
    write_json(out / "sweep.json", {"runs": summaries})
    codes = [c for _, c in results]
    return summaries, max(codes) if codes else EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="conegoursat",
                                description="Goursat problem on light cones: solver and checks")
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_ in (("verify", "run the conformal and norm identity checks"),
                        ("solve", "Picard solve; writes field.csv and report.json"),
                        ("decay", "solve and fit decay exponents; writes decay.csv, decay_fit.json"),
                        ("norms", "solve and audit energies; writes norms.csv"),
                        ("sweep", "run the cartesian [sweep] grid concurrently")):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("config", nargs="?" if name == "verify" else None,
                        help="configuration file (INI format)")
        sp.add_argument("-o", "--output-dir", help="output directory")
        if name == "sweep":
            sp.add_argument("-j", "--jobs", type=int, default=None, help="worker threads")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.config:
            text = Path(args.config).read_text()
        else:
            text = ""
        cfg = parse_config(text)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out_dir = args.output_dir or os.environ.get("GOURSAT_OUTPUT_DIR") or cfg.output_dir
    start = time.perf_counter()
    try:
        if args.command == "sweep":
            summaries, code = run_sweep(text, cfg, out_dir, args.jobs)
            summary = {"runs": len(summaries)}
        else:
            summary, code = run(args.command, cfg, out_dir)
    except (ConfigError, OSError, IncompatibleData, UnboundedWeightedData, BadWidth) as exc:
        print(f"config error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - mapped to the internal-error exit code
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    # wall time goes to the terminal only so output files stay byte-identical
    summary = dict(summary, wall_time_s=round(time.perf_counter() - start, 3))
    print(json.dumps(_jsonable(summary), sort_keys=True))
    return code


if __name__ == "__main__":
    sys.exit(main())

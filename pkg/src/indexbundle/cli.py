"""Command-line entry point.

Usage::

    indexbundle scan --scenario pejsachowicz --m 2 --resolution 64 --out runs/scan
    indexbundle verify

Every command writes ``report.json`` into ``--out``; grid commands also write
``grid.csv`` and, unless disabled in the config, PNG figures.
"""

import argparse
import csv
import json
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from . import fredholm as fh
from .bundles import check_theorem_hypotheses, index_bundle_w1_loop, w1
from .config import COMMANDS, parse_config
from .errors import ConfigError, HypothesisNotMet, IndexBundleError, InvalidConfig, NumericalFailure
from .hamiltonian import scan_bifurcation_set
from .scenarios import ScenarioConfig, build_family

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_HYPOTHESIS = 4

# config fields that may differ between otherwise identical runs
RUNTIME_FIELDS = ("workers", "out")


def _family(cfg):
    sc = ScenarioConfig(
        cfg.scenario,
        a_plus=cfg.a_plus,
        a_minus=cfg.a_minus,
        m=cfg.m,
        profile_scale=cfg.profile_scale,
        inert_dims=cfg.inert_dims,
    )
    return build_family(sc)


def _write_grid(scan, path):
    header, body = scan.rows()
    with open(path, "w", newline="") as fh_:
        writer = csv.writer(fh_)
        writer.writerow(header)
        writer.writerows(body)
    return path.name


def _run_parity(cfg, out, figures):
    path = fh.tilde_L1_path(cfg.window_n, samples=max(cfg.samples, 9))
    results = {
        "parity": fh.parity_segment(path),
        "spectral_flow_mod2": fh.spectral_flow_mod2(path),
        "degree_start": fh.leray_schauder_degree(path.samples[0]),
        "degree_end": fh.leray_schauder_degree(path.samples[-1]),
        "dim": path.dim,
    }
    if figures is not None:
        from .plotting import plot_eigenvalue_path

        figures.append(Path(plot_eigenvalue_path(path, out / "eigenvalues.png", "spectrum of truncated L1")).name)
    return results


def _run_loop_parity(cfg, out, figures, diagnostics):
    path = fh.tilde_L_loop(cfg.window_n, samples_per_segment=cfg.samples)
    lp = fh.closed_loop_parity(path)
    results = lp.to_dict()
    results["segments"] = [name for name, _, _ in path.segments]
    results["dim"] = path.dim
    L1p, L1m = fh.tilde_L1(1.0, cfg.window_n), fh.tilde_L1(-1.0, cfg.window_n)
    N = fh.conjugator_N(cfg.window_n)
    defect = np.abs(np.diag(N.T @ L1m @ N - L1p))
    results["conjugation_defect_indices"] = [int(i) - cfg.window_n for i in np.flatnonzero(defect > 1e-12)]
    # the bundle needs finer sampling than the parity count
    fine = fh.tilde_L_loop(cfg.window_n, samples_per_segment=max(cfg.samples, cfg.loop_samples))
    V = fh.find_transversal(fine)
    results["transversal_dim"] = int(V.shape[1])
    try:
        results["kernel_bundle_w1"] = str(w1(fh.kernel_bundle(fine, V)))
    except NumericalFailure as exc:
        results["kernel_bundle_w1"] = None
        diagnostics["warnings"].append(f"kernel bundle: {type(exc).__name__}: {exc}")
    if figures is not None:
        from .plotting import plot_eigenvalue_path

        figures.append(Path(plot_eigenvalue_path(path, out / "eigenvalues.png", "spectrum along the truncated loop")).name)
    return results


def _run_w1(cfg, out, figures):
    family = _family(cfg)
    info = index_bundle_w1_loop(family, K=cfg.loop_samples, tol=cfg.tol_hyperbolic)
    results = {"scenario": family.describe(), **info.to_dict()}
    if figures is not None:
        from .plotting import plot_loop_bundle

        figures.append(Path(plot_loop_bundle(info, out / "loop_bundle.png")).name)
    return results


def _scan(cfg):
    return scan_bifurcation_set(
        _family(cfg),
        cfg.resolution,
        horizon=cfg.horizon,
        tol_angle=cfg.tol_angle,
        tol=cfg.tol_hyperbolic,
        workers=cfg.workers,
    )


def _scan_diagnostics(scan, diagnostics):
    diagnostics["cell_errors"] = [{"index": list(c.index), "error": c.error} for c in scan.cells if c.error]


def _run_scan(cfg, out, figures, diagnostics, files):
    scan = _scan(cfg)
    _scan_diagnostics(scan, diagnostics)
    files.append(_write_grid(scan, out / "grid.csv"))
    if figures is not None:
        from .plotting import plot_scan

        figures.append(Path(plot_scan(scan, out / "scan.png")).name)
    return {"scenario": _family(cfg).describe(), **scan.to_dict()}


def _run_scenario_report(cfg, out, figures, diagnostics, files):
    family = _family(cfg)
    scan = _scan(cfg)
    _scan_diagnostics(scan, diagnostics)
    files.append(_write_grid(scan, out / "grid.csv"))
    report = check_theorem_hypotheses(family, K=cfg.loop_samples, scan=scan)
    diagnostics["warnings"].extend(e for e in report.errors if not e.startswith("cell "))
    if figures is not None:
        from .plotting import plot_loop_bundle, plot_scan

        figures.append(Path(plot_scan(scan, out / "scan.png")).name)
        if report.w1 is not None:
            figures.append(Path(plot_loop_bundle(report.w1, out / "loop_bundle.png")).name)
    return {"scenario": family.describe(), "hypotheses": report.to_dict(), "scan": scan.to_dict()}


def _run_verify(cfg, echo):
    from .acceptance import run_all

    results = run_all(seed=cfg.seed, echo=echo)
    return {
        "criteria": [
            {"number": r.number, "name": r.name, "passed": r.passed, "detail": r.detail} for r in results
        ],
        "passed": sum(r.passed for r in results),
        "total": len(results),
    }, {f"criterion_{r.number}": round(r.runtime, 4) for r in results}


def run(cfg, echo=None):
    """Execute one configured command and write its outputs.

    Returns
    -------
    report : dict
        The serialised report (also written to ``<out>/report.json``).
    code : int
        Process exit status.
    """
    out = Path(cfg.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"output directory {out} is not writable: {exc}") from None
    body_cfg = {k: v for k, v in cfg.to_dict().items() if k not in RUNTIME_FIELDS}
    diagnostics = {"warnings": []}
    files, figures = ["report.json"], [] if cfg.figures else None
    timing = {}
    code, results, error = EXIT_OK, None, None
    t0 = time.perf_counter()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            if cfg.command == "parity":
                results = _run_parity(cfg, out, figures)
            elif cfg.command == "loop-parity":
                results = _run_loop_parity(cfg, out, figures, diagnostics)
            elif cfg.command == "w1":
                results = _run_w1(cfg, out, figures)
            elif cfg.command == "scan":
                results = _run_scan(cfg, out, figures, diagnostics, files)
            elif cfg.command == "scenario-report":
                results = _run_scenario_report(cfg, out, figures, diagnostics, files)
                if not results["hypotheses"]["bifurcation_predicted"]:
                    code = EXIT_HYPOTHESIS
                    error = str(HypothesisNotMet("no bifurcation predicted: need a regular point and nontrivial w1"))
            elif cfg.command == "verify":
                results, timing = _run_verify(cfg, echo)
                if results["passed"] != results["total"]:
                    code = EXIT_NUMERICAL
                    error = f"{results['total'] - results['passed']} acceptance criteria failed"
        except NumericalFailure as exc:
            code, error = EXIT_NUMERICAL, f"{type(exc).__name__}: {exc}"
    timing["total"] = round(time.perf_counter() - t0, 4)
    # verify runs many internal checks; their expected warnings are noise
    if cfg.command != "verify":
        diagnostics["warnings"].extend(sorted({f"{w.category.__name__}: {w.message}" for w in caught}))
    if figures:
        files.extend(figures)
    report = {
        "command": cfg.command,
        "version": __version__,
        "status": "ok" if code == EXIT_OK else "failed",
        "exit_code": code,
        "error": error,
        "config": body_cfg,
        "results": results,
        "diagnostics": diagnostics,
        "files": files,
        "runtime": {"timing_seconds": timing, **{k: getattr(cfg, k) for k in RUNTIME_FIELDS}},
    }
    with open(out / "report.json", "w") as f:
        json.dump(report, f, indent=2, sort_keys=True, default=_json_default)
        f.write("\n")
    return report, code


def _json_default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not serialisable: {type(obj).__name__}")


def report_body(report):
    """Report without the fields allowed to vary between identical runs."""
    return {k: v for k, v in report.items() if k != "runtime"}


def build_parser():
    p = argparse.ArgumentParser(
        prog="indexbundle",
        description="Parity, index bundles and w1 bifurcation invariants for operator paths and Hamiltonian families.",
    )
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")
    helps = {
        "parity": "parity of the truncated L1 path",
        "loop-parity": "parity and kernel bundle of the closed truncated loop",
        "w1": "w1 of the stable bundles of a Hamiltonian family",
        "scan": "grid scan for parameters with a nontrivial homoclinic solution",
        "verify": "run the acceptance suite",
        "scenario-report": "check the w1 bifurcation criterion against a scan",
    }
    for name in COMMANDS:
        s = sub.add_parser(name, help=helps[name])
        s.add_argument("--config", metavar="PATH", help="YAML or JSON config document")
        s.add_argument("--out", metavar="DIR", help="output directory (default: out)")
        s.add_argument("--workers", type=int, metavar="N")
        s.add_argument("--seed", type=int, metavar="S")
        s.add_argument("--horizon", type=float, metavar="T")
        s.add_argument("--resolution", metavar="R[,R...]")
        s.add_argument("--tol-angle", type=float, metavar="X")
        s.add_argument("--window-n", type=int, metavar="N")
        s.add_argument("--scenario", metavar="NAME")
        s.add_argument("--m", type=int, metavar="M", help="torus dimension of the pejsachowicz family")
        s.add_argument("--no-figures", action="store_true", help="skip PNG output")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    overrides = {
        "command": args.command,
        "out": args.out,
        "workers": args.workers,
        "seed": args.seed,
        "horizon": args.horizon,
        "resolution": args.resolution,
        "tol_angle": args.tol_angle,
        "window_n": args.window_n,
        "scenario": args.scenario,
        "m": args.m,
        "figures": False if args.no_figures else None,
    }
    try:
        text = ""
        if args.config:
            try:
                text = Path(args.config).read_text()
            except OSError as exc:
                raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        cfg = parse_config(text, overrides)
        report, code = run(cfg, echo=print if cfg.command == "verify" else None)
    except (ConfigError, InvalidConfig) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except IndexBundleError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    summary = report["error"] or "ok"
    print(f"{cfg.command}: {summary} -> {Path(cfg.out) / 'report.json'}")
    return code


if __name__ == "__main__":
    sys.exit(main())

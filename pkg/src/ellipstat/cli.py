"""Command-line front end.

    ellipstat theory-cov    --config cfg.json [--out DIR]
    ellipstat simulate      --config cfg.json --out DIR [--plot-data]
    ellipstat verify        --config cfg.json [--out DIR]      (exit 2 if |z| > threshold)
    ellipstat esd           --config cfg.json [--out DIR] [--plot-data]
    ellipstat lsv           --config cfg.json [--out DIR] [--plot-data]
    ellipstat dump-spectrum --config cfg.json --out DIR

Exit codes: 0 success, 1 operational error, 2 scientific acceptance failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
from pathlib import Path
import sys

import numpy as np

from .ensemble import dump_matrix, normalize, sample_elliptic, write_eigenvalues_csv
from .errors import ConfigurationError, EllipstatError
from .harness import (CovarianceReport, EsdReport, ExperimentConfig, LsvReport, NormalityReport,
                      run_clt_experiment, run_esd_experiment, run_lsv_experiment)
from .stats import eigenvalues
from .theory.covariance import covariance_matrix, default_contour

__all__ = ["main", "build_parser", "parse_config", "emit_report", "dispatch", "SCHEMA_VERSION"]

log = logging.getLogger("ellipstat")

SCHEMA_VERSION = 1
SUBCOMMANDS = ("theory-cov", "simulate", "verify", "esd", "lsv", "dump-spectrum")
ALIASES = {"rho": "pair.rho", "L": "numerics.L", "r": "numerics.r", "nodes": "numerics.nodes",
           "delta": "numerics.delta", "epsilon": "truncation.epsilon"}


# ---------------------------------------------------------------------------
# config


def _set_path(d, dotted, value):
    keys = dotted.split(".")
    cur = d
    for k in keys[:-1]:
        nxt = cur.get(k)
        if not isinstance(nxt, dict):
            nxt = cur[k] = {}
        cur = nxt
    cur[keys[-1]] = value


def _parse_value(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(raw: dict, overrides):
    """Apply ``key=value`` strings; values are JSON when they parse as JSON."""
    out = json.loads(json.dumps(raw))
    for item in overrides or ():
        if "=" not in item:
            raise ConfigurationError(f"override {item!r} is not of the form key=value",
                                     [f"bad override {item!r}"])
        key, val = item.split("=", 1)
        key = ALIASES.get(key.strip(), key.strip())
        _set_path(out, key, _parse_value(val))
    return out


def parse_config(path=None, overrides=()) -> ExperimentConfig:
    """Read, override and fully validate a JSON experiment config.

    ``path=None`` starts from an empty document, i.e. all defaults.  JSON syntax
    errors report line and column; validation collects every violation.
    """
    raw = {}
    if path is not None:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigurationError(f"cannot read config {path}: {exc}", [str(exc)]) from exc
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            msg = f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}"
            raise ConfigurationError(msg, [msg]) from exc
        if not isinstance(raw, dict):
            raise ConfigurationError(f"{path}: top level must be a JSON object",
                                     ["top level must be an object"])
    raw = apply_overrides(raw, overrides)
    cfg = ExperimentConfig.from_dict(raw)
    problems = cfg.violations()
    if not problems:
        # geometry: the theory contour must clear E_rho
        try:
            c = default_contour(cfg.rho, cfg.delta, cfg.nodes)
            if c.min_distance(cfg.rho) <= 0:
                problems.append("default contour intersects E_rho")
        except EllipstatError as exc:
            problems.append(f"contour: {exc}")
    if problems:
        raise ConfigurationError("invalid experiment config:\n  " + "\n  ".join(problems),
                                 problems)
    return cfg


# ---------------------------------------------------------------------------
# report emission


def _clean(x):
    """JSON-safe scalars: complex -> [re, im], non-finite -> null."""
    if isinstance(x, dict):
        return {k: _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    if isinstance(x, (complex, np.complexfloating)):
        return [_clean(float(x.real)), _clean(float(x.imag))]
    if isinstance(x, (float, np.floating)):
        return float(x) if math.isfinite(x) else None
    if isinstance(x, np.integer):
        return int(x)
    return x


def _fmt(x):
    return format(float(x), ".17g")


def _write_matrix_csv(path, labels, M):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["function_id", *labels])
        for lab, row in zip(labels, np.asarray(M)):
            w.writerow([lab, *(_fmt(v) for v in row)])
    return path


def _write_rows(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    return path


def _text_matrix(title, labels, M):
    M = np.asarray(M, dtype=float)
    # round-off dust on exact zeros would only clutter the table
    M = np.where(np.abs(M) < 1e-12 * max(1.0, np.nanmax(np.abs(M), initial=0.0)), 0.0, M)
    width = max(14, *(len(s) + 2 for s in labels))
    lines = [title, " " * width + "".join(f"{s:>{width}}" for s in labels)]
    for lab, row in zip(labels, M):
        lines.append(f"{lab:<{width}}" + "".join(f"{v:>{width}.6g}" for v in row))
    return "\n".join(lines)


def render_text(report):
    """Aligned human-readable summary of a report (or a ``(cov, normality)`` pair)."""
    if isinstance(report, tuple):
        return "\n\n".join(render_text(r) for r in report)
    if isinstance(report, CovarianceReport):
        lab = report.function_ids
        head = (f"samples used {report.samples_used}, dropped {report.dropped}, "
                f"containment flags {report.containment_flags}")
        parts = [head,
                 _text_matrix("empirical covariance", lab, report.empirical),
                 _text_matrix("jackknife standard errors", lab, report.stderr),
                 _text_matrix("theory (Faber series)", lab, report.theory_series),
                 _text_matrix("theory (contour)", lab, report.theory_contour),
                 _text_matrix("z-scores", lab, report.zscores),
                 f"max |z| = {report.max_abs_z:.4g}"]
        return "\n\n".join(parts)
    if isinstance(report, NormalityReport):
        lines = ["normality diagnostics",
                 f"{'function':<12}{'skew':>12}{'ex.kurt':>12}{'JB':>12}{'JB p':>12}{'ECDF':>12}"]
        for r in report.rows:
            lines.append(f"{r.function_id:<12}{r.skewness:>12.4g}{r.excess_kurtosis:>12.4g}"
                         f"{r.jb_statistic:>12.4g}{r.jb_pvalue:>12.4g}"
                         f"{r.ecdf_max_deviation:>12.4g}")
        return "\n".join(lines)
    if isinstance(report, EsdReport):
        lines = [f"elliptic law, rho = {report.rho:g}, n = {report.n}, samples = {report.samples}"]
        for d, fr in report.containment.items():
            lines.append(f"  fraction within E_rho + {d:<6g} {fr:.6f}")
        lines.append(f"  max distance to E_rho     {report.max_distance:.6g}")
        lines.append(f"  interior chi2 {report.chi2:.4g} on {report.dof} dof, p = {report.pvalue:.4g}")
        lines.append(f"  eigenvalue mean {report.eigen_mean.real:.3g}{report.eigen_mean.imag:+.3g}i "
                     f"(tolerance {report.mean_tolerance:.3g})")
        return "\n".join(lines)
    if isinstance(report, LsvReport):
        return (f"least singular value sweep, rho = {report.rho:g}, n = {report.n}, "
                f"delta = {report.delta:g}\n"
                f"  grid points {report.grid.size}, trials {report.trial_minima.size}\n"
                f"  overall min sigma_n {report.overall_min:.6g}\n"
                f"  max sigma_n at eigenvalues {report.eig_sigma_max:.3g}")
    raise TypeError(f"cannot render {type(report).__name__}")


def _histogram_rows(labels, values, bins=40):
    rows = []
    for j, lab in enumerate(labels):
        counts, edges = np.histogram(values[:, j].real, bins=bins)
        rows.extend([lab, _fmt(edges[k]), _fmt(edges[k + 1]), int(counts[k])]
                    for k in range(bins))
    return rows


def emit_report(report, out_dir, formats=("json", "csv", "text"), plot_data=False,
                config=None):
    """Write a report to ``out_dir``; returns the list of paths written.

    ``report`` is a ``(CovarianceReport, NormalityReport)`` pair, an
    :class:`EsdReport` or an :class:`LsvReport`.  Output is byte-deterministic.
    """
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        return _emit(report, out, formats, plot_data, config)
    except OSError as exc:
        raise OSError(f"writing report to {out}: {exc}") from exc


def _emit(report, out, formats, plot_data, config):
    paths = []
    if isinstance(report, tuple):
        cov, norm = report
        kind, body = "clt", {"covariance": cov.to_dict(), "normality": norm.to_dict()}
        config = config or cov.config
    elif isinstance(report, EsdReport):
        kind, body = "esd", report.to_dict()
    elif isinstance(report, LsvReport):
        kind, body = "lsv", report.to_dict()
    else:
        raise TypeError(f"cannot emit {type(report).__name__}")
    if "json" in formats:
        doc = {"schema_version": SCHEMA_VERSION, "kind": kind, "config": config, "report": body}
        p = out / "report.json"
        p.write_text(json.dumps(_clean(doc), indent=2) + "\n", encoding="utf-8")
        paths.append(p)
        if config is not None:
            p = out / "config.json"
            p.write_text(json.dumps(_clean(config), indent=2) + "\n", encoding="utf-8")
            paths.append(p)
    if "text" in formats:
        p = out / "report.txt"
        p.write_text(render_text(report) + "\n", encoding="utf-8")
        paths.append(p)
    if "csv" in formats:
        if kind == "clt":
            lab = cov.function_ids
            paths.append(_write_matrix_csv(out / "cov_theory.csv", lab, cov.theory_series))
            paths.append(_write_matrix_csv(out / "cov_theory_contour.csv", lab, cov.theory_contour))
            paths.append(_write_matrix_csv(out / "cov_empirical.csv", lab, cov.empirical))
            paths.append(_write_matrix_csv(out / "cov_stderr.csv", lab, cov.stderr))
            paths.append(_write_matrix_csv(out / "zscores.csv", lab, cov.zscores))
        elif kind == "esd":
            paths.append(_write_rows(out / "containment.csv", ["delta", "fraction"],
                                     [[_fmt(d), _fmt(f)] for d, f in report.containment.items()]))
        else:
            paths.append(_write_rows(out / "lsv_trials.csv", ["trial", "min_sigma"],
                                     [[i, _fmt(v)] for i, v in enumerate(report.trial_minima)]))
    if plot_data:
        if kind == "clt":
            rows = [[idx, lab, _fmt(v.real), _fmt(v.imag)]
                    for idx, vals in zip(cov.sample_indices, cov.values)
                    for lab, v in zip(cov.function_ids, vals)]
            paths.append(_write_rows(out / "samples.csv",
                                     ["sample_index", "function_id", "value_re", "value_im"], rows))
            paths.append(_write_rows(out / "histograms.csv",
                                     ["function_id", "bin_lo", "bin_hi", "count"],
                                     _histogram_rows(cov.function_ids, cov.values)))
        elif kind == "esd":
            paths.append(write_eigenvalues_csv(out / "eigenvalues.csv", report.eigenvalues))
        else:
            rows = [[i, _fmt(z.real), _fmt(z.imag), _fmt(d), _fmt(report.sigma[:, i].min())]
                    for i, (z, d) in enumerate(zip(report.grid, report.grid_distance))]
            paths.append(_write_rows(out / "lsv_grid.csv",
                                     ["point", "re", "im", "distance", "min_sigma"], rows))
    return [Path(p) for p in paths]


# ---------------------------------------------------------------------------
# dispatch


class _Parser(argparse.ArgumentParser):
    """Usage errors exit with status 1, keeping 2 for acceptance failures."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser():
    p = _Parser(prog="ellipstat", description="Linear eigenvalue statistics of elliptic "
                "random matrices: theory, Monte Carlo and verification.")
    sub = p.add_subparsers(dest="command", metavar="SUBCOMMAND", parser_class=_Parser)
    helps = {
        "theory-cov": "print the limiting covariance matrix of the configured test functions",
        "simulate": "run a CLT Monte Carlo experiment and write reports",
        "verify": "run a CLT experiment; exit 2 if any |z| exceeds the threshold",
        "esd": "pooled eigenvalue containment and interior uniformity",
        "lsv": "least singular value sweep over a band outside E_rho",
        "dump-spectrum": "sample one matrix and dump its eigenvalues (and entries)",
    }
    for name in SUBCOMMANDS:
        s = sub.add_parser(name, help=helps[name])
        s.add_argument("--config", type=Path, help="JSON experiment config")
        s.add_argument("--out", type=Path, help="output directory")
        s.add_argument("--set", dest="overrides", action="append", default=[],
                       metavar="KEY=VALUE", help="override a config entry (dotted path)")
        s.add_argument("--plot-data", action="store_true", help="also write plot-data CSVs")
        s.add_argument("--threads", type=int, help="worker threads (env ELLIPSTAT_THREADS)")
        s.add_argument("--seed", type=int, help="master seed (unsigned 64-bit)")
        s.add_argument("-v", "--verbose", action="count", default=0)
    return p


def _threads(args):
    if args.threads is not None:
        return args.threads
    env = os.environ.get("ELLIPSTAT_THREADS")
    if env:
        try:
            return int(env)
        except ValueError:
            raise ConfigurationError(f"ELLIPSTAT_THREADS={env!r} is not an integer",
                                     ["bad ELLIPSTAT_THREADS"])
    return None


def _load(args, kind=None):
    overrides = list(args.overrides)
    if kind is not None:
        overrides.insert(0, f"kind={json.dumps(kind)}")
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    threads = _threads(args)
    if threads is not None:
        overrides.append(f"threads={threads}")
    return parse_config(args.config, overrides)


def _cmd_theory_cov(args):
    cfg = _load(args)
    if not cfg.functions:
        raise ConfigurationError("theory-cov needs at least one test function",
                                 ["no functions"])
    mom = cfg.moments()
    labels = [f.label for f in cfg.functions]
    S = covariance_matrix(cfg.functions, mom, "series", L=cfg.L, r=cfg.r)
    C = covariance_matrix(cfg.functions, mom, "contour",
                          contour=default_contour(mom.rho, cfg.delta, cfg.nodes))
    print(f"moments: rho = {mom.rho:g}, sigma^2 = {mom.sigma_sq:g}, kappa = {mom.kappa:g}")
    print(_text_matrix("limiting covariance (Faber series)", labels, S))
    print(_text_matrix("limiting covariance (contour)", labels, C))
    if args.out:
        args.out.mkdir(parents=True, exist_ok=True)
        _write_matrix_csv(args.out / "cov_theory.csv", labels, S)
        _write_matrix_csv(args.out / "cov_theory_contour.csv", labels, C)
    return 0


def _cmd_clt(args, verify):
    cfg = _load(args, "clt")
    report = run_clt_experiment(cfg)
    print(render_text(report))
    if args.out:
        emit_report(report, args.out, plot_data=args.plot_data, config=cfg.to_dict())
    if verify:
        cov = report[0]
        if not cov.passed(cfg.threshold):
            print(f"FAIL: max |z| = {cov.max_abs_z:.4g} exceeds {cfg.threshold:g}",
                  file=sys.stderr)
            return 2
        print(f"PASS: max |z| = {cov.max_abs_z:.4g} <= {cfg.threshold:g}")
    return 0


def _cmd_esd(args):
    cfg = _load(args, "esd")
    report = run_esd_experiment(cfg)
    print(render_text(report))
    if args.out:
        emit_report(report, args.out, plot_data=args.plot_data, config=cfg.to_dict())
    return 0


def _cmd_lsv(args):
    cfg = _load(args, "lsv")
    report = run_lsv_experiment(cfg)
    print(render_text(report))
    if args.out:
        emit_report(report, args.out, plot_data=args.plot_data, config=cfg.to_dict())
    return 0


def _cmd_dump(args):
    # only the ensemble fields matter here; "lsv" validates them without needing test functions
    cfg = _load(args, "lsv")
    if not args.out:
        raise ConfigurationError("dump-spectrum needs --out", ["missing --out"])
    Y = sample_elliptic(cfg.n, cfg.pair, cfg.diag, cfg.truncation, seed=cfg.seed)
    X = normalize(Y)
    spec = eigenvalues(X)
    args.out.mkdir(parents=True, exist_ok=True)
    write_eigenvalues_csv(args.out / "eigenvalues.csv", spec.eigenvalues)
    dump_matrix(args.out / "matrix.bin", X)
    print(f"wrote {spec.n} eigenvalues to {args.out / 'eigenvalues.csv'}")
    return 0


def dispatch(args) -> int:
    """Run a parsed invocation; returns the process exit code."""
    level = logging.WARNING - 10 * min(getattr(args, "verbose", 0), 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    handlers = {
        "theory-cov": _cmd_theory_cov,
        "simulate": lambda a: _cmd_clt(a, False),
        "verify": lambda a: _cmd_clt(a, True),
        "esd": _cmd_esd,
        "lsv": _cmd_lsv,
        "dump-spectrum": _cmd_dump,
    }
    try:
        return handlers[args.command](args)
    except ConfigurationError as exc:
        print(f"ellipstat: configuration error: {exc}", file=sys.stderr)
        return 1
    except (EllipstatError, OSError) as exc:
        print(f"ellipstat: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 1
    return dispatch(args)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

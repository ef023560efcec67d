"""Command line entry point: ``ambitflux <experiment> [--config PATH] [--seed N] [--out DIR] ...``."""

from __future__ import annotations

import argparse
import csv
import json
import platform
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import EXPERIMENTS, ConfigError, load_config
from .experiments import RUNNERS, ExperimentReport

__all__ = ["main", "write_outputs", "build_parser"]

CSV_COLUMNS = ("experiment", "seed", "replication", "r", "t", "value", "statistic_kind")


def _provenance(report: ExperimentReport) -> dict:
    import matplotlib
    import scipy

    cfg = report.config
    return {
        "config_hash": cfg.digest(),
        "seed": cfg.seed,
        "versions": {"ambitflux": __version__, "python": platform.python_version(),
                     "numpy": np.__version__, "scipy": scipy.__version__, "matplotlib": matplotlib.__version__},
    }


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    return x


def write_csv(report: ExperimentReport, path: Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for exp, seed, rep, r, t, v, kind in report.rows:
            w.writerow((exp, seed, rep, repr(float(r)), repr(float(t)), repr(float(v)), kind))


def _svg(name: str, data: dict, path: Path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "ambitflux"
    fig, ax = plt.subplots(figsize=(5, 3.6))
    if "fractions" in data:
        ax.plot(data["radii"], data["fractions"], "o-")
        ax.set_xscale("log")
        ax.set_xlabel("r")
        ax.set_ylabel("exceedance fraction")
        ax.axhline(0.1, color="grey", ls=":")
    elif "stats" in data:
        x = np.asarray(data["radii"], dtype=float)
        ax.loglog(x, data["stats"], "o", label="statistic")
        ax.loglog(x, np.exp(data["intercept"]) * x ** data["slope"], "-",
                  label=f"fit slope {data['slope']:.3f}")
        ax.set_xlabel(data.get("xlabel", "r"))
        ax.legend(title=f"predicted {data['predicted']:.3f}")
    else:
        for vals, lab in zip((data["a"], data["b"]), data["labels"]):
            v = np.sort(np.asarray(vals))
            lo, hi = np.quantile(v, [0.01, 0.99])
            keep = (v >= lo) & (v <= hi)
            ax.step(v[keep], (np.arange(v.size) + 1)[keep] / v.size, where="post", label=lab)
        ax.set_ylabel("ECDF")
        ax.legend()
    ax.set_title(name)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def write_outputs(report: ExperimentReport, out: Path) -> dict:
    out.mkdir(parents=True, exist_ok=True)
    stem = report.experiment
    write_csv(report, out / f"{stem}.csv")
    for name, data in report.plots:
        _svg(name, data, out / f"{stem}_{name}.svg")
    doc = {
        "experiment": stem,
        "passed": report.passed,
        "verdicts": [{"name": v.name, "verdict": v.label, "detail": v.detail, "value": v.value}
                     for v in report.verdicts],
        "tables": _jsonable(report.tables),
        "provenance": _provenance(report),
        "config": dict(sorted(report.config.values.items())),
        "runtime_seconds": round(report.runtime, 2),
    }
    (out / f"{stem}_report.json").write_text(json.dumps(doc, indent=2, sort_keys=True))
    (out / f"{stem}_report.md").write_text(_markdown([doc]))
    return doc


def _markdown(docs) -> str:
    lines = []
    for doc in docs:
        lines.append(f"## {doc['experiment']}: {'PASS' if doc['passed'] else 'FAIL'}")
        lines.append("")
        lines.append(f"config hash `{doc['provenance']['config_hash'][:16]}`, seed {doc['provenance']['seed']}")
        lines.append("")
        lines.append("| check | verdict | detail |")
        lines.append("|---|---|---|")
        for v in doc["verdicts"]:
            lines.append(f"| {v['name']} | {v['verdict']} | {v['detail']} |")
        lines.append("")
    return "\n".join(lines)


def _report_command(out: Path) -> int:
    docs = [json.loads(p.read_text()) for p in sorted(out.glob("*_report.json"))]
    if not docs:
        print(f"no reports found in {out}", file=sys.stderr)
        return 1
    text = "# Experiment summary\n\n" + _markdown(docs)
    (out / "summary.md").write_text(text)
    for doc in docs:
        for v in doc["verdicts"]:
            print(f"{v['verdict']} {doc['experiment']}/{v['name']}: {v['detail']}")
    return 0 if all(d["passed"] for d in docs) else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ambitflux", description="Flux limit experiments for ambit fields.")
    sub = p.add_subparsers(dest="command", required=True)
    for name in (*EXPERIMENTS, "report"):
        sp = sub.add_parser(name)
        sp.add_argument("--out", default="results", help="output directory")
        if name == "report":
            continue
        sp.add_argument("--config", default=None, help="key=value config file with [section] headers")
        sp.add_argument("--seed", type=int, default=None, help="master seed (overrides run.seed)")
        sp.add_argument("--threads", type=int, default=1, help="worker processes")
        sp.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                        help="set a namespaced config key, e.g. basis.alpha=1.5")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out = Path(args.out)
    if args.command == "report":
        return _report_command(out)
    try:
        cfg = load_config(args.command, args.config, args.override, args.seed)
    except (ConfigError, OSError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    report = RUNNERS[args.command](cfg, threads=max(1, args.threads))
    write_outputs(report, out)
    for v in report.verdicts:
        print(f"{v.label} {v.name}: {v.detail}")
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())

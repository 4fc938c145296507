"""Command-line driver: ``synth``, ``fit``, ``compare`` and ``metrics``.

Exit codes: 0 on success, 2 for bad input or parameters, 3 for numerical
failures (degenerate sampling, non-finite graphs).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np
import yaml

from .dataset import KIND_MODEL, ingest, read_labels, write_dataset, write_labels
from .errors import InputError, NumericalError, ParameterError, SampleFailure
from .metrics import clustering_error
from .pipeline import SAMPLERS, PipelineConfig, run_pipeline
from .synthetic import PRESETS, make_preset

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3

# flag name -> PipelineConfig field
FLAG_FIELDS = {"model": "model", "k": "k", "k_rule": "k_rule", "n_clusters": "n_c",
               "n_hypotheses": "n_H", "T": "T", "seed": "seed", "subset_frac": "subset_frac",
               "sampler": "sampler", "l_max": "l_max"}

log = logging.getLogger("cbsfit")


def load_config(path) -> dict:
    """Read a YAML or JSON mapping of pipeline settings."""
    path = Path(path)
    if not path.exists():
        raise InputError(f"{path}: no such config file")
    try:
        doc = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise InputError(f"{path}: cannot parse config: {exc}") from None
    if doc is None:
        return {}
    if not isinstance(doc, dict):
        raise InputError(f"{path}: config must be a key/value mapping")
    aliases = {v: v for v in FLAG_FIELDS.values()}
    aliases.update({k: v for k, v in FLAG_FIELDS.items()})
    out = {}
    for key, val in doc.items():
        name = str(key).replace("-", "_")
        if name == "kernel_options":
            out[name] = dict(val)
            continue
        if name not in aliases:
            raise InputError(f"{path}: unknown config key {key!r}")
        out[aliases[name]] = val
    return out


def build_config(args, data_kind: str | None = None) -> PipelineConfig:
    settings = load_config(args.config) if getattr(args, "config", None) else {}
    for flag, name in FLAG_FIELDS.items():
        val = getattr(args, flag, None)
        if val is not None:
            settings[name] = val
    if settings.get("model") is None:
        settings["model"] = KIND_MODEL.get(data_kind, "line")
    try:
        return PipelineConfig(**settings)
    except TypeError as exc:
        raise ParameterError(str(exc)) from None


def _write_json(obj, path: Path):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _load_data(args):
    if args.preset:
        return make_preset(args.preset, seed=args.data_seed)
    if not args.data:
        raise InputError("give a data file or --preset")
    return ingest(args.data, args.data_format)


def cmd_synth(args) -> int:
    ds = make_preset(args.preset, seed=args.seed)
    out = Path(args.output)
    if out.suffix.lower() != ".csv":
        out = out / f"{args.preset}_seed{args.seed}.csv"
    write_dataset(ds, out)
    print(out)
    return EXIT_OK


def cmd_fit(args) -> int:
    ds = _load_data(args)
    config = build_config(args, ds.kind)
    labels = read_labels(args.labels) if args.labels else ds.labels
    result = run_pipeline(ds, config, labels)
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    metrics = result.metrics()
    metrics["config"] = config.to_dict()
    if result.error is not None:
        metrics["clustering_error"] = result.error.to_dict()
    if args.format == "json":
        _write_json({"labels": result.labels.tolist()}, out / "labels.json")
    else:
        write_labels(result.labels, out / "labels.csv")
    _write_json(metrics, out / "metrics.json")
    _write_json({k: 1000.0 * v for k, v in result.timings.items()}, out / "timings.json")
    if args.dump_graph:
        result.bundle.dump(out)
    if result.error is not None:
        print(f"CE {result.error.ce_percent:.2f}%")
    return EXIT_OK


def cmd_compare(args) -> int:
    """Sweep ``n_H`` for each sampler and seed; record CE and wall time."""
    ds = _load_data(args)
    base = build_config(args, ds.kind)
    if ds.labels is None:
        raise InputError("compare needs ground-truth labels")
    samplers = args.samplers or (["cbs", "cbs-nss", "random", "uniform"]
                                 if base.model in ("line", "line2d")
                                 else ["cbs", "cbs-nss", "random"])
    rows = []
    for sampler in samplers:
        for n_H in args.sweep:
            for s in range(args.seeds):
                cfg = PipelineConfig(**{**base.to_dict(), "sampler": sampler, "n_H": n_H,
                                        "seed": base.seed + s})
                res = run_pipeline(ds, cfg)
                rows.append(res.metrics())
                log.info("%s n_H=%d seed=%d CE=%.2f", sampler, n_H, cfg.seed,
                         res.error.ce_percent)
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    if args.format == "json":
        _write_json(rows, out / "compare.json")
    else:
        keys = ["sampler_name", "n_H", "seed", "k", "ce_percent", "wall_time_ms",
                "converged_fraction"]
        with (out / "compare.csv").open("w") as fh:
            fh.write(",".join(keys) + "\n")
            for r in rows:
                fh.write(",".join(str(r[k]) for k in keys) + "\n")
    summary = {}
    for r in rows:
        summary.setdefault((r["sampler_name"], r["n_H"]), []).append(r["ce_percent"])
    for (sampler, n_H), ces in summary.items():
        print(f"{sampler:8s} n_H={n_H:5d} median CE {np.median(ces):6.2f}%")
    return EXIT_OK


def cmd_metrics(args) -> int:
    truth = read_labels(args.truth)
    pred = read_labels(args.predicted)
    report = clustering_error(truth, pred)
    if args.format == "json":
        print(json.dumps(report.to_dict(), sort_keys=True))
    else:
        print(f"{report.ce_percent:.6g}")
    return EXIT_OK


def _add_pipeline_flags(p):
    p.add_argument("data", nargs="?", help="input CSV (points, correspondences or trajectories)")
    p.add_argument("--preset", choices=sorted(PRESETS), help="use a synthetic preset instead")
    p.add_argument("--data-seed", type=int, default=0, help="seed for --preset")
    p.add_argument("--data-format", choices=["points", "correspondences", "trajectories"])
    p.add_argument("--model", choices=["line", "subspace", "fundamental"])
    p.add_argument("--k", type=int)
    p.add_argument("--k-rule", choices=["min", "max"])
    p.add_argument("--n-clusters", type=int)
    p.add_argument("--n-hypotheses", type=int)
    p.add_argument("--T", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--subset-frac", type=float)
    p.add_argument("--l-max", type=int)
    p.add_argument("--config", help="YAML or JSON file with pipeline settings")
    p.add_argument("--output", default="out")
    p.add_argument("--format", choices=["csv", "json"], default="csv")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cbsfit", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="write a synthetic preset dataset")
    p.add_argument("preset", choices=sorted(PRESETS))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", default=".", help="directory or .csv path")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("fit", help="run the pipeline on one dataset")
    _add_pipeline_flags(p)
    p.add_argument("--sampler", choices=SAMPLERS)
    p.add_argument("--labels", help="ground-truth label file")
    p.add_argument("--dump-graph", action="store_true", help="also write H.csv and G.csv")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("compare", help="compare samplers over an n_H sweep")
    _add_pipeline_flags(p)
    p.add_argument("--samplers", nargs="+", choices=SAMPLERS)
    p.add_argument("--sweep", type=int, nargs="+", default=[50, 100, 200, 500])
    p.add_argument("--seeds", type=int, default=5)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("metrics", help="clustering error between two label files")
    p.add_argument("truth")
    p.add_argument("predicted")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.set_defaults(func=cmd_metrics)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (InputError, ParameterError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (NumericalError, SampleFailure, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry point: ``fastgcrnn <subcommand> [flags]``.

Settings resolve as built-in defaults < ``--config`` JSON file < explicit flags.
Exit status is 0 on success, 2 for usage/config errors and 1 for runtime errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from datetime import timedelta
from pathlib import Path

import numpy as np

from .errors import FastGcrnnError, InputError, ShapeError
from .io import atomic_write_text, write_manifest

log = logging.getLogger("fastgcrnn")

# every key a config file may contain, with its built-in default
DEFAULTS: dict[str, object] = {
    # paths
    "records": None, "graph": None, "segments": None, "edges": None, "nodes": None,
    "flow": None, "checkpoint": None, "out": None, "pred": None, "target": None,
    "graph_out": None, "history": None,
    # ingest
    "begin": "2015-01-01 00:00:00", "interval": "5m", "end": None, "buckets": None, "tol": 1e-6,
    # graph generation / synthetic data
    "n": None, "avg_degree": 4.0, "days": 20, "period": 288, "slope": 0.001, "noise_std": 2.0,
    "alpha": 0.3, "phase_spread": 2.0 * math.pi,
    # model
    "d_in": 12, "d_out": 12, "hidden": 64, "spatial_dims": [16, 16], "activations": ["relu", "relu"],
    "tie_spatial": False,
    # training
    "epochs": 10, "lr": 1e-3, "batch_size": 32, "tf_ratio": 0.5, "clip": 5.0, "seed": 0,
    "sampler": "importance", "t_per_layer": [5, 5], "stride": 1, "normalize": True,
    # prediction / evaluation
    "eval_sampler": "exhaustive", "start": None, "eval_stride": 1,
    # benchmark
    "n_list": [500, 1000, 2000, 4000], "t_l": 5, "reps": 7, "train_step": False,
}


class UsageError(Exception):
    pass


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in str(text).split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _str_list(text: str) -> list[str]:
    return [v.strip() for v in str(text).split(",") if v.strip()]


def _add(p: argparse.ArgumentParser, *names: str, **kw) -> None:
    kw.setdefault("default", None)
    key = kw.get("dest") or names[0].lstrip("-").replace("-", "_")
    if "help" in kw and key in DEFAULTS and DEFAULTS[key] is not None and kw.get("action") != "store_true":
        kw["help"] += f" (default: {DEFAULTS[key]})"
    p.add_argument(*names, **kw)


def _common(p: argparse.ArgumentParser) -> None:
    _add(p, "--config", help="JSON file of settings; flags override it")
    _add(p, "--seed", type=int, help="random seed")
    _add(p, "-v", "--verbose", action="store_true", dest="verbose", help="log progress to stderr")


def _model_flags(p):
    _add(p, "--d-in", type=int, help="input window length in buckets")
    _add(p, "--d-out", type=int, help="forecast horizon in buckets")
    _add(p, "--hidden", type=int, help="GRU hidden size")
    _add(p, "--spatial-dims", type=_int_list, help="output sizes of the two graph layers, e.g. 16,16")
    _add(p, "--activations", type=_str_list, help="activations of the two graph layers, e.g. relu,relu")
    _add(p, "--tie-spatial", action="store_true", help="share graph-layer weights between encoder and decoder")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fastgcrnn", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    p = sub.add_parser("preprocess", help="GPS records -> per-road flow matrix")
    _common(p)
    _add(p, "--records", help="CSV with header road_id,car_id,time")
    _add(p, "--graph", help="graph file; fixes the set and order of roads")
    _add(p, "--interval", help="bucket width such as 5m or 30m")
    _add(p, "--begin", help="first bucket start, 'YYYY-MM-DD HH:MM:SS'")
    _add(p, "--end", help="horizon end (exclusive); records at or after it are dropped")
    _add(p, "--buckets", type=int, help="horizon length in buckets (alternative to --end)")
    _add(p, "--out", help="output flow-matrix CSV")

    p = sub.add_parser("build-graph", help="road segments or an edge list -> graph file")
    _common(p)
    _add(p, "--segments", help="CSV road_id,ax,ay,bx,by; roads sharing an endpoint are adjacent")
    _add(p, "--edges", help="CSV of road_id_a,road_id_b pairs")
    _add(p, "--nodes", help="optional file with one road_id per line (keeps isolated roads)")
    _add(p, "--n", type=int, help="generate a random graph with this many roads instead")
    _add(p, "--avg-degree", type=float, help="expected degree of a generated graph")
    _add(p, "--tol", type=float, help="endpoint snapping tolerance")
    _add(p, "--out", help="output graph file")

    p = sub.add_parser("stats", help="degree histogram of a graph")
    _common(p)
    _add(p, "--graph", help="graph file")
    _add(p, "--out", help="optional CSV degree,count,cumulative_share")

    p = sub.add_parser("synth", help="generate a synthetic flow matrix")
    _common(p)
    _add(p, "--graph", help="graph file (or use --n for a random graph)")
    _add(p, "--n", type=int, help="roads in a generated random graph")
    _add(p, "--avg-degree", type=float, help="expected degree of a generated graph")
    _add(p, "--graph-out", help="where to write the generated graph")
    _add(p, "--days", type=int, help="number of simulated periods")
    _add(p, "--buckets", type=int, help="explicit series length (overrides --days)")
    _add(p, "--period", type=int, help="buckets per period")
    _add(p, "--slope", type=float, help="linear trend per bucket")
    _add(p, "--noise-std", type=float, help="Gaussian noise standard deviation")
    _add(p, "--alpha", type=float, help="weight of the neighbour term")
    _add(p, "--phase-spread", type=float, help="node phases are drawn from [0, spread)")
    _add(p, "--interval", help="bucket width recorded in the output")
    _add(p, "--out", help="output flow-matrix CSV")

    p = sub.add_parser("train", help="train a model and write a checkpoint")
    _common(p)
    _add(p, "--flow", help="flow-matrix CSV")
    _add(p, "--graph", help="graph file")
    _add(p, "--checkpoint", help="output checkpoint path")
    _add(p, "--history", help="per-epoch history CSV (default: <checkpoint>.history.csv)")
    _model_flags(p)
    _add(p, "--epochs", type=int, help="training epochs")
    _add(p, "--lr", type=float, help="learning rate")
    _add(p, "--batch-size", type=int, help="windows per optimizer step")
    _add(p, "--tf-ratio", type=float, help="teacher-forcing probability")
    _add(p, "--clip", type=float, help="global gradient-norm clip")
    _add(p, "--sampler", choices=["importance", "uniform", "exhaustive"], help="node sampler used in training")
    _add(p, "--t-per-layer", type=_int_list, help="samples per graph layer, e.g. 5,5")
    _add(p, "--stride", type=int, help="stride between training windows")
    _add(p, "--no-normalize", action="store_false", dest="normalize", default=None,
         help="train on raw counts instead of per-road z-scores")

    p = sub.add_parser("predict", help="forecast the buckets after one input window")
    _common(p)
    _add(p, "--checkpoint", help="trained checkpoint")
    _add(p, "--flow", help="flow-matrix CSV supplying the input window")
    _add(p, "--graph", help="graph file")
    _add(p, "--start", type=int, help="first bucket of the input window (default: the last d_in buckets)")
    _add(p, "--eval-sampler", choices=["exhaustive", "importance", "uniform"], help="node sampler at inference")
    _add(p, "--t-per-layer", type=_int_list, help="samples per graph layer for sampled inference")
    _add(p, "--out", help="output forecast CSV")

    p = sub.add_parser("evaluate", help="RMSE of a forecast, or of a checkpoint against the HA baseline")
    _common(p)
    _add(p, "--pred", help="forecast CSV (compare against --target)")
    _add(p, "--target", help="target CSV with the same layout as --pred")
    _add(p, "--checkpoint", help="checkpoint to score on the test split")
    _add(p, "--flow", help="flow-matrix CSV")
    _add(p, "--graph", help="graph file")
    _add(p, "--period", type=int, help="HA period in buckets (default: one day)")
    _add(p, "--eval-sampler", choices=["exhaustive", "importance", "uniform"], help="node sampler at inference")
    _add(p, "--t-per-layer", type=_int_list, help="samples per graph layer for sampled inference")
    _add(p, "--eval-stride", type=int, help="stride between test windows")
    _add(p, "--out", help="optional JSON report")

    p = sub.add_parser("benchmark", help="time dense vs sampled graph convolution")
    _common(p)
    _add(p, "--n-list", type=_int_list, help="graph sizes, e.g. 500,1000,2000,4000")
    _add(p, "--t-l", type=int, help="samples per layer")
    _add(p, "--reps", type=int, help="timed repetitions per size (median reported)")
    _add(p, "--train-step", action="store_true", help="time forward+backward+update instead of forward only")
    _add(p, "--out", help="output CSV n,t_l,dense_ms,sampled_ms,ratio")
    return parser


def resolve_config(args: argparse.Namespace) -> dict:
    cfg = dict(DEFAULTS)
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                loaded = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(loaded, dict):
            raise UsageError("config file must hold a JSON object")
        unknown = sorted(set(loaded) - set(DEFAULTS))
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(unknown)}")
        cfg.update(loaded)
    for key, value in vars(args).items():
        if key in DEFAULTS and value is not None and not (value is False and DEFAULTS[key] is False):
            cfg[key] = value
    return cfg


def _require(cfg: dict, *keys: str, exist: tuple[str, ...] = ()) -> None:
    missing = [k for k in keys if not cfg.get(k)]
    if missing:
        raise UsageError("missing required setting(s): " + ", ".join("--" + k.replace("_", "-") for k in missing))
    for k in exist:
        if cfg.get(k) and not Path(cfg[k]).is_file():
            raise InputError(f"{k} file not found: {cfg[k]}")


def _print_config(command: str, cfg: dict, keys) -> dict:
    shown = {k: cfg[k] for k in sorted(keys)}
    print(f"{command}: seed={cfg['seed']} config={json.dumps(shown, sort_keys=True)}")
    return shown


# -- subcommands -----------------------------------------------------------------


def cmd_preprocess(cfg: dict) -> None:
    from .graph import read_graph
    from .ingest import (IngestSummary, build_flow_matrix, horizon_buckets, parse_duration,
                         parse_time, read_gps_records, write_flow_matrix)

    _require(cfg, "records", "graph", "out", exist=("records", "graph"))
    shown = _print_config("preprocess", cfg, ["records", "graph", "interval", "begin", "end", "buckets", "out"])
    g = read_graph(cfg["graph"])
    begin = parse_time(cfg["begin"])
    interval = parse_duration(cfg["interval"])
    T = cfg["buckets"]
    if cfg["end"]:
        T = horizon_buckets(begin, parse_time(cfg["end"]), interval)
    summary = IngestSummary()
    fm, summary = build_flow_matrix(read_gps_records(cfg["records"], summary), list(g.node_ids),
                                    begin, interval, T, summary)
    write_flow_matrix(fm, cfg["out"])
    write_manifest(cfg["out"], "preprocess", shown, cfg["seed"])
    print(f"summary: {summary.line()} roads={fm.n} buckets={fm.T}")


def cmd_build_graph(cfg: dict) -> None:
    from .graph import build_road_graph, random_road_graph, read_segments, write_graph

    _require(cfg, "out", exist=("segments", "edges", "nodes"))
    shown = _print_config("build-graph", cfg, ["segments", "edges", "nodes", "n", "avg_degree", "tol", "out"])
    if cfg["segments"]:
        g = build_road_graph(read_segments(cfg["segments"]), tol=float(cfg["tol"]))
    elif cfg["edges"]:
        pairs = []
        with open(cfg["edges"], encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, 1):
                line = raw.strip()
                if not line or line.startswith("#") or line.lower().startswith("road_id"):
                    continue
                parts = [v.strip() for v in line.split(",")]
                if len(parts) != 2 or not all(parts):
                    raise InputError(f"{cfg['edges']}:{lineno}: expected 'road_id_a,road_id_b'")
                pairs.append(tuple(parts))
        if cfg["nodes"]:
            with open(cfg["nodes"], encoding="utf-8") as fh:
                ids = [ln.strip() for ln in fh if ln.strip()]
        else:
            ids = sorted({r for pair in pairs for r in pair})
        g = build_road_graph(road_ids=ids, edges=pairs)
    elif cfg["n"]:
        g = random_road_graph(int(cfg["n"]), float(cfg["avg_degree"]), seed=int(cfg["seed"]))
    else:
        raise UsageError("build-graph needs --segments, --edges or --n")
    write_graph(g, cfg["out"])
    write_manifest(cfg["out"], "build-graph", shown, cfg["seed"])
    print(f"graph: nodes={g.n} edges={len(g.edges)}")


def cmd_stats(cfg: dict) -> None:
    from .graph import degree_histogram, read_graph

    _require(cfg, "graph", exist=("graph",))
    shown = _print_config("stats", cfg, ["graph", "out"])
    g = read_graph(cfg["graph"])
    hist = degree_histogram(g)
    rows = ["degree,count,cumulative_share"]
    rows += [f"{d},{c},{hist.cumulative[d]:.6f}" for d, c in sorted(hist.counts.items())]
    print(f"nodes={g.n} edges={len(g.edges)}")
    print("\n".join(rows))
    for k in (5, 7):
        print(f"share of nodes with degree < {k}: {hist.share_below(k):.4f}")
    if cfg["out"]:
        atomic_write_text(cfg["out"], "\n".join(rows) + "\n")
        write_manifest(cfg["out"], "stats", shown, cfg["seed"])


def cmd_synth(cfg: dict) -> None:
    from .graph import random_road_graph, read_graph, write_graph
    from .ingest import parse_duration, write_flow_matrix
    from .synthetic import SynthConfig, generate_synthetic

    _require(cfg, "out", exist=("graph",))
    shown = _print_config("synth", cfg, ["graph", "n", "avg_degree", "graph_out", "days", "buckets", "period",
                                         "slope", "noise_std", "alpha", "phase_spread", "interval", "out"])
    if cfg["graph"]:
        g = read_graph(cfg["graph"])
    elif cfg["n"]:
        g = random_road_graph(int(cfg["n"]), float(cfg["avg_degree"]), seed=int(cfg["seed"]))
        if cfg["graph_out"]:
            write_graph(g, cfg["graph_out"])
    else:
        raise UsageError("synth needs --graph or --n")
    period = int(cfg["period"])
    T = int(cfg["buckets"]) if cfg["buckets"] else int(cfg["days"]) * period
    sc = SynthConfig(T=T, period=period, slope=float(cfg["slope"]), noise_std=float(cfg["noise_std"]),
                     alpha=float(cfg["alpha"]), phase_spread=float(cfg["phase_spread"]), seed=int(cfg["seed"]),
                     interval_s=int(parse_duration(cfg["interval"]).total_seconds()))
    fm = generate_synthetic(g, sc)
    write_flow_matrix(fm, cfg["out"])
    write_manifest(cfg["out"], "synth", shown, cfg["seed"])
    print(f"synth: roads={fm.n} buckets={fm.T} total_flow={int(fm.values.sum())}")


def _load_graph_and_flow(cfg: dict):
    from .graph import normalize_adjacency, read_graph
    from .ingest import align_to_graph, read_flow_matrix

    g = read_graph(cfg["graph"])
    fm = align_to_graph(read_flow_matrix(cfg["flow"]), g.node_ids)
    return g, normalize_adjacency(g), fm


def _model_config(cfg: dict):
    from .model import ModelConfig

    return ModelConfig(d_in=int(cfg["d_in"]), d_out=int(cfg["d_out"]), hidden=int(cfg["hidden"]),
                       spatial_dims=tuple(cfg["spatial_dims"]), activations=tuple(cfg["activations"]),
                       tie_spatial=bool(cfg["tie_spatial"]))


def cmd_train(cfg: dict) -> None:
    from .ingest import FlowScaler, chronological_split, window_arrays
    from .model import FastGcrnnModel, TrainConfig, save_checkpoint, train

    _require(cfg, "flow", "graph", "checkpoint", exist=("flow", "graph"))
    keys = ["flow", "graph", "checkpoint", "d_in", "d_out", "hidden", "spatial_dims", "activations", "tie_spatial",
            "epochs", "lr", "batch_size", "tf_ratio", "clip", "sampler", "t_per_layer", "stride", "normalize"]
    shown = _print_config("train", cfg, keys)
    g, na, fm = _load_graph_and_flow(cfg)
    mcfg = _model_config(cfg)
    tcfg = TrainConfig(epochs=int(cfg["epochs"]), lr=float(cfg["lr"]), batch_size=int(cfg["batch_size"]),
                       tf_ratio=float(cfg["tf_ratio"]), clip=float(cfg["clip"]), seed=int(cfg["seed"]),
                       sampler_mode=cfg["sampler"], t_per_layer=tuple(cfg["t_per_layer"]))
    tr, va, _ = chronological_split(fm.T)
    scaler = FlowScaler.fit(fm.values[:, tr]) if cfg["normalize"] else FlowScaler.identity(fm.n)
    z = scaler.transform(fm.values)
    X, Y, _ = window_arrays(z[:, tr], mcfg.d_in, mcfg.d_out, int(cfg["stride"]))
    val = None
    if va.stop - va.start >= mcfg.d_in + mcfg.d_out:
        Xv, Yv, _ = window_arrays(z[:, va], mcfg.d_in, mcfg.d_out, mcfg.d_out)
        val = (Xv, Yv)
    model = FastGcrnnModel(mcfg, seed=tcfg.seed)
    history = train(model, na, X, Y, tcfg, val=val, scaler=scaler, log_every=1)
    hyper = {k: v for k, v in shown.items() if k not in ("flow", "graph", "checkpoint")}
    save_checkpoint(cfg["checkpoint"], model, scaler, g.node_ids, extra={"train": hyper})
    hist_path = cfg["history"] or str(cfg["checkpoint"]) + ".history.csv"
    lines = ["epoch,loss,rmse,val_rmse"]
    lines += [f"{r.epoch},{r.loss!r},{r.rmse!r},{'' if r.val_rmse is None else repr(r.val_rmse)}" for r in history]
    atomic_write_text(hist_path, "\n".join(lines) + "\n")
    write_manifest(cfg["checkpoint"], "train", shown, cfg["seed"])
    last = history[-1]
    print(f"trained: windows={X.shape[0]} epochs={len(history)} final_loss={last.loss:.6f} val_rmse={last.val_rmse}")


def _inference_sampler(cfg: dict, na):
    from .model import make_sampler

    return make_sampler(cfg["eval_sampler"], na, tuple(cfg["t_per_layer"]), np.random.default_rng(int(cfg["seed"])))


def cmd_predict(cfg: dict) -> None:
    from .model import load_checkpoint, predict

    _require(cfg, "checkpoint", "flow", "graph", "out", exist=("checkpoint", "flow", "graph"))
    shown = _print_config("predict", cfg, ["checkpoint", "flow", "graph", "start", "eval_sampler", "t_per_layer", "out"])
    ck = load_checkpoint(cfg["checkpoint"])
    g, na, fm = _load_graph_and_flow(cfg)
    if ck.node_ids is not None and list(ck.node_ids) != list(g.node_ids):
        raise InputError("graph nodes differ from those the checkpoint was trained on")
    d_in, d_out = ck.model.cfg.d_in, ck.model.cfg.d_out
    start = fm.T - d_in if cfg["start"] is None else int(cfg["start"])
    if start < 0 or start + d_in > fm.T:
        raise InputError(f"input window [{start}, {start + d_in}) lies outside the {fm.T} available buckets")
    scaler = ck.scaler or __import__("fastgcrnn.ingest", fromlist=["FlowScaler"]).FlowScaler.identity(fm.n)
    x = scaler.transform(fm.values)[:, start:start + d_in]
    pred = scaler.inverse(predict(ck.model, na, x, _inference_sampler(cfg, na)))
    lines = [f"#forecast start_bucket={start + d_in} d_out={d_out}"]
    lines += [",".join([rid] + [repr(float(v)) for v in row]) for rid, row in zip(g.node_ids, pred)]
    atomic_write_text(cfg["out"], "\n".join(lines) + "\n")
    write_manifest(cfg["out"], "predict", shown, cfg["seed"])
    print(f"predicted: roads={pred.shape[0]} steps={pred.shape[1]} from bucket {start + d_in}")


def cmd_evaluate(cfg: dict) -> None:
    from .evaluation import ha_window_forecasts, rmse
    from .ingest import chronological_split, read_flow_matrix, window_arrays
    from .model import load_checkpoint, predict

    if cfg["pred"] or cfg["target"]:
        _require(cfg, "pred", "target", exist=("pred", "target"))
        shown = _print_config("evaluate", cfg, ["pred", "target", "out"])
        pred, target = read_flow_matrix(cfg["pred"]), read_flow_matrix(cfg["target"])
        if pred.values.shape != target.values.shape:
            raise ShapeError(f"prediction shape {pred.values.shape} != target shape {target.values.shape}")
        if pred.road_ids != target.road_ids:
            raise InputError("prediction and target list different roads")
        report = {"rmse": rmse(pred.values, target.values), "entries": int(pred.values.size)}
    else:
        _require(cfg, "checkpoint", "flow", "graph", exist=("checkpoint", "flow", "graph"))
        shown = _print_config("evaluate", cfg, ["checkpoint", "flow", "graph", "period", "eval_sampler",
                                                "t_per_layer", "eval_stride", "out"])
        ck = load_checkpoint(cfg["checkpoint"])
        g, na, fm = _load_graph_and_flow(cfg)
        d_in, d_out = ck.model.cfg.d_in, ck.model.cfg.d_out
        period = int(cfg["period"]) if cfg["period"] else int(round(timedelta(days=1) / fm.interval))
        _, _, te = chronological_split(fm.T)
        z = ck.scaler.transform(fm.values) if ck.scaler else fm.values
        X, _, t0 = window_arrays(z[:, te], d_in, d_out, int(cfg["eval_stride"]))
        t0 = t0 + te.start
        truth = np.stack([fm.values[:, t + d_in:t + d_in + d_out] for t in t0])
        pred = predict(ck.model, na, X, _inference_sampler(cfg, na))
        if ck.scaler:
            pred = ck.scaler.inverse(pred)
        ha = ha_window_forecasts(fm.values, t0, d_in, d_out, period)
        report = {"model_rmse": rmse(pred, truth), "ha_rmse": rmse(ha, truth), "windows": int(len(t0)),
                  "period": period}
    print("evaluation: " + json.dumps(report, sort_keys=True))
    if cfg["out"]:
        atomic_write_text(cfg["out"], json.dumps(report, indent=2, sort_keys=True) + "\n")
        write_manifest(cfg["out"], "evaluate", shown, cfg["seed"])


def cmd_benchmark(cfg: dict) -> None:
    from .bench import benchmark_layer, loglog_slope, plot_data, results_csv

    shown = _print_config("benchmark", cfg, ["n_list", "t_l", "reps", "train_step", "out"])
    results = benchmark_layer(list(cfg["n_list"]), int(cfg["t_l"]), int(cfg["reps"]), seed=int(cfg["seed"]),
                              train_step=bool(cfg["train_step"]))
    csv_text = results_csv(results)
    print(csv_text, end="")
    ns = [r.n for r in results]
    if len(ns) >= 2:
        print(f"loglog slope: dense={loglog_slope(ns, [r.dense_ms for r in results]):.3f} "
              f"sampled={loglog_slope(ns, [r.sampled_ms for r in results]):.3f}")
    if cfg["out"]:
        atomic_write_text(cfg["out"], csv_text)
        atomic_write_text(str(cfg["out"]) + ".plot.txt", plot_data(results))
        write_manifest(cfg["out"], "benchmark", shown, cfg["seed"])


COMMANDS = {
    "preprocess": cmd_preprocess,
    "build-graph": cmd_build_graph,
    "stats": cmd_stats,
    "synth": cmd_synth,
    "train": cmd_train,
    "predict": cmd_predict,
    "evaluate": cmd_evaluate,
    "benchmark": cmd_benchmark,
}


def dispatch(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        cfg = resolve_config(args)
        COMMANDS[args.command](cfg)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"fastgcrnn {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (FastGcrnnError, OSError, ValueError) as exc:
        msg = str(exc).replace("\n", " ")
        print(f"fastgcrnn {args.command}: error: {msg}", file=sys.stderr)
        return 1
    return 0


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()

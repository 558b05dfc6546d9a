"""Command-line surface: generate, detect, eval, confusion, threshold, sweep,
reproduce-table2.

Every command echoes its full configuration into a JSON run manifest next
to its outputs, with input digests and timestamps, so a run is
reproducible from the manifest alone.  Exit codes: 0 success, 2 usage,
3 data error, 4 non-convergence (with partial output).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .bp import BpConfig, write_beliefs_csv
from .detectability import (DetectabilitySpec, ks_detectable,
                            lambda1_closed_form, threshold_epsilon)
from .experiments import TABLE2_EPSILONS, Table2Setting, reproduce_table2
from .graph import (DataFormatError, DegenerateGraphError, load_graph,
                    read_labels, save_graph, write_labels)
from .learner import LearnerConfig, detect
from .metrics import accuracy, avg_f1, confusion, modularity, nmi
from .synth import SsbmSpec, generate_ssbm, realized_rates

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NONCONVERGED = 4


def _default_seed() -> int:
    return int(os.environ.get("CRSBM_SEED", "0"))


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _utc(ts: float) -> str:
    return datetime.fromtimestamp(ts, tz=timezone.utc).isoformat()


def _config_echo(args) -> dict:
    return {k: (str(v) if isinstance(v, Path) else v)
            for k, v in vars(args).items() if k != "func"}


def write_manifest(path, command: str, config: dict, seeds, inputs, outputs,
                   started: float, finished: float):
    doc = {
        "command": command,
        "config": config,
        "seeds": list(seeds),
        "inputs": {str(p): _sha256(p) for p in inputs},
        "outputs": [str(p) for p in outputs],
        "started_at": _utc(started),
        "finished_at": _utc(finished),
        "version": __version__,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)
    return doc


def _dump_json(path, doc):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)


def _error_json(kind: str, message: str):
    print(json.dumps({"error": kind, "message": message}), file=sys.stderr)


def cmd_generate(args) -> int:
    t0 = time.time()
    spec = SsbmSpec(q_star=args.q_star, q_tilde=args.q_tilde, n_per=args.n_per,
                    c=args.c, epsilon=args.eps, seed=args.seed)
    g, truth = generate_ssbm(spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    edges = out / "edges.txt"
    attrs = out / "attributes.csv"
    labels = out / "ground_truth.txt"
    sidecar = out / "generate.json"
    save_graph(g, edges, attrs, fmt="dense-csv")
    write_labels(labels, truth)
    c_in, c_out = realized_rates(g, truth, spec)
    _dump_json(sidecar, {
        "spec": {"q_star": spec.q_star, "q_tilde": spec.q_tilde, "n_per": spec.n_per,
                 "c": spec.c, "epsilon": spec.epsilon, "seed": spec.seed},
        "n": g.n, "m": g.m,
        "target_c_in": spec.c_in, "target_c_out": spec.c_out,
        "realized_c_in": c_in, "realized_c_out": c_out,
    })
    write_manifest(out / "manifest.json", "generate", _config_echo(args), [args.seed], [],
                   [edges, attrs, labels, sidecar], t0, time.time())
    print(json.dumps({"n": g.n, "m": g.m, "out": str(out)}))
    return EXIT_OK


def cmd_detect(args) -> int:
    t0 = time.time()
    g = load_graph(args.edges, args.attributes, fmt=args.format)
    config = LearnerConfig(
        q=args.q, tau_max=args.tau_max, mu=args.mu, n_grids=args.grids,
        seed=args.seed,
        bp=BpConfig(max_sweeps=args.bp_max_sweeps, tol=args.bp_tol, seed=args.seed),
        degree_correction=args.degree_correction, distance=args.distance,
        warm_start=args.warm_start == "on")
    result = detect(g, config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    labels_path = out / "labels.txt"
    result_path = out / "result.json"
    write_labels(labels_path, result.partition)
    best = result.iterations[result.selected]
    doc = {
        "q": args.q,
        "n": g.n,
        "m": g.m,
        "gamma_star": result.gamma_star,
        "modularity_per_iteration": result.modularity_trace,
        "selected_iteration": result.selected,
        "selected_modularity": best.modularity,
        "beta_trace": [
            {"iteration": idx,
             "refit": rec.beta_refit,
             "beta1": rec.params.popularity.beta1 if rec.params.popularity.mode == "sigmoid" else None,
             "beta2": rec.params.popularity.beta2 if rec.params.popularity.mode == "sigmoid" else None}
            for idx, rec in enumerate(result.iterations)],
        "omega": best.params.omega.tolist(),
        "bp_converged_per_iteration": [rec.bp_converged for rec in result.iterations],
        "timing": result.timing,
        "labels_file": str(labels_path),
    }
    _dump_json(result_path, doc)
    outputs = [labels_path, result_path]
    if args.export_beliefs:
        beliefs_path = out / "beliefs.csv"
        write_beliefs_csv(beliefs_path, best.beliefs)
        outputs.append(beliefs_path)
    write_manifest(out / "manifest.json", "detect", _config_echo(args), [args.seed],
                   [args.edges, args.attributes], outputs, t0, time.time())
    print(json.dumps({"selected_iteration": result.selected,
                      "modularity": best.modularity, "out": str(out)}))
    if not any(rec.bp_converged for rec in result.iterations):
        _error_json("non-convergence", "no BP run converged; best-effort output written")
        return EXIT_NONCONVERGED
    return EXIT_OK


def cmd_eval(args) -> int:
    detected = read_labels(args.labels)
    truth = read_labels(args.truth, n=detected.n)
    doc = {
        "n": detected.n,
        "nmi": nmi(detected, truth),
        "avg_f1": avg_f1(detected, truth),
        "accuracy": accuracy(detected, truth),
    }
    if args.edges and args.attributes:
        g = load_graph(args.edges, args.attributes, fmt=args.format)
        doc["modularity"] = modularity(g, detected)
    print(json.dumps(doc, indent=1))
    return EXIT_OK


def cmd_confusion(args) -> int:
    detected = read_labels(args.labels)
    truth = read_labels(args.truth, n=detected.n)
    cm = confusion(detected, truth, normalizer=args.normalizer)
    table = cm.normalized
    lines = [",".join(f"{v:.17g}" for v in row) for row in table]
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_threshold(args) -> int:
    if args.q_star % args.q_tilde:
        raise ValueError("q-tilde must divide q-star")
    q_b = args.q_star // args.q_tilde
    doc = {
        "q_star": args.q_star, "q_tilde": args.q_tilde, "gamma": args.gamma,
        "c_tilde": args.c_tilde,
        "epsilon_star_gamma": threshold_epsilon(args.q_star, q_b, args.gamma, args.c_tilde),
        "epsilon_star_1": threshold_epsilon(args.q_star, q_b, 1.0, args.c_tilde),
    }
    if args.eps is not None:
        spec = DetectabilitySpec(q_star=args.q_star, q_b=q_b, gamma=args.gamma,
                                 epsilon=args.eps, c_tilde=args.c_tilde)
        lam = lambda1_closed_form(spec)
        doc["epsilon"] = args.eps
        doc["lambda1"] = lam
        doc["ks_detectable"] = ks_detectable(args.c_tilde, lam)
    print(json.dumps(doc, indent=1))
    return EXIT_OK


def cmd_sweep(args) -> int:
    eps_grid = np.linspace(args.eps_min, args.eps_max, args.eps_steps)
    gamma_grid = np.linspace(args.gamma_min, args.gamma_max, args.gamma_steps)
    rows = ["epsilon,gamma,lambda1,epsilon_star,ks_detectable"]
    q_b = args.q_star // args.q_tilde
    for eps in eps_grid:
        for gamma in gamma_grid:
            spec = DetectabilitySpec(q_star=args.q_star, q_b=q_b, gamma=gamma,
                                     epsilon=eps, c_tilde=args.c_tilde)
            lam = lambda1_closed_form(spec)
            eps_star = threshold_epsilon(args.q_star, q_b, gamma, args.c_tilde)
            rows.append(f"{eps:.12g},{gamma:.12g},{lam:.12g},{eps_star:.12g},"
                        f"{int(ks_detectable(args.c_tilde, lam))}")
    text = "\n".join(rows) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_reproduce_table2(args) -> int:
    t0 = time.time()
    seeds = list(range(args.seed, args.seed + args.seeds))
    settings = [Table2Setting(epsilon=e, n_per=args.n_per) for e in TABLE2_EPSILONS]
    report = reproduce_table2(seeds=seeds, settings=settings, n_workers=args.threads)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    report_path = out / "table2_report.json"
    doc = {
        "settings": [vars(s) for s in settings],
        "seeds": seeds,
        "majority_verdicts": {f"{k:.6f}": v for k, v in report["majority"].items()},
        "runs": [r.to_json() for r in report["runs"]],
    }
    _dump_json(report_path, doc)
    write_manifest(out / "manifest.json", "reproduce-table2", _config_echo(args), seeds, [],
                   [report_path], t0, time.time())
    print(json.dumps({"majority_verdicts": doc["majority_verdicts"], "out": str(out)}))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="crsbm",
                                     description="Attributed-network community detection")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="sample a planted benchmark graph")
    p.add_argument("--q-star", type=int, required=True)
    p.add_argument("--q-tilde", type=int, default=1)
    p.add_argument("--n-per", type=int, required=True)
    p.add_argument("--c", type=float, required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--seed", type=int, default=_default_seed())
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("detect", help="run the detection pipeline")
    p.add_argument("--edges", required=True)
    p.add_argument("--attributes", required=True)
    p.add_argument("--format", choices=["dense-csv", "sparse-triplet"], default="dense-csv")
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--seed", type=int, default=_default_seed())
    p.add_argument("--tau-max", type=int, default=10)
    p.add_argument("--mu", type=float, default=0.05)
    p.add_argument("--grids", type=int, default=10)
    p.add_argument("--bp-tol", type=float, default=1e-6)
    p.add_argument("--bp-max-sweeps", type=int, default=100)
    p.add_argument("--degree-correction", action="store_true")
    p.add_argument("--distance", choices=["sq-euclidean", "euclidean"], default="sq-euclidean")
    p.add_argument("--warm-start", choices=["on", "off"], default="on")
    p.add_argument("--export-beliefs", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("eval", help="score a labels file against ground truth")
    p.add_argument("--labels", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--edges")
    p.add_argument("--attributes")
    p.add_argument("--format", choices=["dense-csv", "sparse-triplet"], default="dense-csv")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("confusion", help="overlap table of two labelings")
    p.add_argument("--labels", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--normalizer", type=float, default=None)
    p.add_argument("--out")
    p.set_defaults(func=cmd_confusion)

    p = sub.add_parser("threshold", help="closed-form detectability threshold")
    p.add_argument("--q-star", type=int, required=True)
    p.add_argument("--q-tilde", type=int, required=True)
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--c-tilde", type=float, required=True)
    p.add_argument("--eps", type=float, default=None)
    p.set_defaults(func=cmd_threshold)

    p = sub.add_parser("sweep", help="CSV grid of the phase diagram")
    p.add_argument("--q-star", type=int, required=True)
    p.add_argument("--q-tilde", type=int, required=True)
    p.add_argument("--c-tilde", type=float, required=True)
    p.add_argument("--eps-min", type=float, default=0.01)
    p.add_argument("--eps-max", type=float, default=0.99)
    p.add_argument("--eps-steps", type=int, default=25)
    p.add_argument("--gamma-min", type=float, default=1.0)
    p.add_argument("--gamma-max", type=float, default=5.0)
    p.add_argument("--gamma-steps", type=int, default=17)
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("reproduce-table2", help="benchmark merge/split reproduction")
    p.add_argument("--seed", type=int, default=_default_seed() + 1)
    p.add_argument("--seeds", type=int, default=3, help="seed batch size")
    p.add_argument("--n-per", type=int, default=5000)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_reproduce_table2)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (DataFormatError, DegenerateGraphError, FileNotFoundError, OSError) as exc:
        _error_json("data", str(exc))
        return EXIT_DATA
    except ValueError as exc:
        _error_json("usage", str(exc))
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

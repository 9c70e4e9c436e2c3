"""Command-line entry point: dataset generation, distances, transferability,
weight sweeps, bound checks, and one-command experiment reproduction.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from . import datagen, ground_cost, tasks, transfer
from .datagen import DatasetFormatError, PtODataset, read_dataset, write_dataset
from .ground_cost import GroundCostWeights, decision_aware_distance, pto_ground_cost

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3


def fmt(v: float) -> str:
    """17-significant-digit decimal serialization; bit-exact for doubles."""
    return format(float(v), ".17g")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _weights_from_args(args) -> GroundCostWeights:
    return GroundCostWeights(args.alpha_x, args.alpha_y, args.alpha_w)


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def cmd_gen(args) -> int:
    if args.family == "topk":
        if args.gamma is None:
            print("gen: error: --gamma is required for --family topk", file=sys.stderr)
            raise SystemExit(EXIT_USAGE)
        ds = datagen.gen_topk(
            gamma=args.gamma,
            n_resources=args.resources,
            n_instances=args.instances,
            k=args.k,
            seed=args.seed,
        )
    elif args.family == "grid":
        ds = datagen.gen_grid(
            class_cost_seed=args.cost_seed,
            map_seed=args.map_seed,
            p=args.p,
            n_classes=args.classes,
            n_instances=args.instances,
            length_weight=args.length_weight,
        )
    else:
        ds = datagen.gen_inventory(
            mean_shift_seed=args.mean_seed,
            theta_seed=args.theta_seed,
            n_features=args.features,
            n_instances=args.instances,
            seed=args.seed,
        )
    write_dataset(ds, args.out)
    print(f"wrote {len(ds)} samples to {args.out}: {ds.provenance}")
    return EXIT_OK


def _load_pair(path_a, path_b) -> tuple[PtODataset, PtODataset]:
    a = read_dataset(path_a)
    b = read_dataset(path_b)
    if a.task != b.task:
        raise DatasetFormatError(
            f"task family mismatch: {a.task.kind!r} vs {b.task.kind!r}"
        )
    return a, b


def cmd_dist(args) -> int:
    a, b = _load_pair(args.dataset_a, args.dataset_b)
    w = _weights_from_args(args)
    value = decision_aware_distance(
        a, b, w, solver=args.solver, epsilon=args.epsilon, mode=args.mode
    )
    print(fmt(value))
    if args.breakdown:
        rows = []
        for i, sa in enumerate(a.samples):
            for j, sb in enumerate(b.samples):
                cb = pto_ground_cost(sa, sb, w, a.task, mode=args.mode)
                rows.append(
                    (i, j, fmt(cb.feature_term), fmt(cb.label_term),
                     fmt(cb.decision_term), fmt(cb.total))
                )
        _write_csv(
            args.breakdown,
            ["i", "j", "feature_term", "label_term", "decision_term", "total"],
            rows,
        )
    return EXIT_OK


def cmd_transfer(args) -> int:
    target = read_dataset(args.target)
    w = _weights_from_args(args)
    rows = []
    for src_path in args.source:
        source = read_dataset(src_path)
        if source.task != target.task:
            raise DatasetFormatError(
                f"{src_path}: task family mismatch with target"
            )
        rec = transfer.regret_transferability(
            target.task, source, target,
            budget=args.budget, seed=args.seed,
            source_id=str(src_path), target_id=str(args.target),
        )
        dist = decision_aware_distance(source, target, w, mode=args.mode)
        rows.append(
            (rec.source_id, rec.target_id, fmt(dist),
             fmt(w.alpha_x), fmt(w.alpha_y), fmt(w.alpha_w),
             fmt(rec.transferability) if rec.transferability is not None else "undefined",
             fmt(rec.regret_source_on_target), fmt(rec.regret_target_on_target))
        )
    _write_csv(
        args.out,
        ["source_id", "target_id", "distance", "alpha_x", "alpha_y", "alpha_w",
         "transferability", "regret_source_on_target", "regret_target_on_target"],
        rows,
    )
    print(f"wrote {len(rows)} transfer records to {args.out}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    target = read_dataset(args.target)
    sources = [read_dataset(p) for p in args.source]
    for p, s in zip(args.source, sources):
        if s.task != target.task:
            raise DatasetFormatError(f"{p}: task family mismatch with target")
    rows_out, _ = transfer.weight_sweep(
        target.task, sources, target,
        grid_resolution=args.resolution, mode=args.mode,
        budget=args.budget, seed=args.seed,
    )
    _write_csv(
        args.out,
        ["alpha_x", "alpha_y", "alpha_w", "r2"],
        [(fmt(w.alpha_x), fmt(w.alpha_y), fmt(w.alpha_w), fmt(r2)) for w, r2 in rows_out],
    )
    print(f"wrote {len(rows_out)} sweep rows to {args.out}")
    return EXIT_OK


def cmd_bound(args) -> int:
    source = read_dataset(args.source)
    target = read_dataset(args.target)
    if source.task != target.task:
        raise DatasetFormatError("task family mismatch between source and target")
    task = source.task
    f = transfer.train_regret_min(task, source, budget=args.budget, seed=args.seed)
    joint = PtODataset(
        task=task,
        samples=source.samples + target.samples,
        provenance={"generator": "union", "of": [str(args.source), str(args.target)]},
    )
    f_tilde = transfer.train_regret_min(task, joint, budget=args.budget, seed=args.seed)
    if args.k1 is not None and args.k2 is not None:
        k1, k2 = args.k1, args.k2
    else:
        label_dim = source.samples[0].y.size
        k1, k2 = transfer.default_lipschitz_constants(task, label_dim, seed=args.seed)
    lambdas = [float(v) for v in args.lambdas.split(",")]
    all_hold = True
    rows = []
    for lam in lambdas:
        rep = transfer.evaluate_bound(task, f, f_tilde, source, target, lam, k1, k2)
        all_hold = all_hold and rep.holds
        rows.append(
            (fmt(lam), fmt(rep.lhs), fmt(rep.joint_regret_source),
             fmt(rep.joint_regret_target), fmt(rep.lipschitz_term),
             fmt(rep.scaled_ot_term), fmt(rep.k1), fmt(rep.k2),
             fmt(rep.alpha_w), fmt(rep.phi), str(rep.holds).lower())
        )
    _write_csv(
        args.out,
        ["lambda", "lhs", "joint_regret_source", "joint_regret_target",
         "lipschitz_term", "scaled_ot_term", "k1", "k2", "alpha_w", "phi", "holds"],
        rows,
    )
    print(f"wrote {len(rows)} bound rows to {args.out}; all_hold={all_hold}")
    return EXIT_OK if all_hold else EXIT_NUMERIC


def _read_config(path) -> dict:
    cfg = {}
    if path is None:
        return cfg
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise DatasetFormatError(f"{path}: line {lineno}: expected key=value")
        key, value = line.split("=", 1)
        cfg[key.strip()] = value.strip()
    return cfg


def cmd_repro(args) -> int:
    cfg = _read_config(args.config)
    seed = int(cfg.get("seed", 7))
    budget = int(cfg.get("budget", 3000))
    resolution = int(cfg.get("resolution", 10))
    n_instances = int(cfg.get("instances", 50))
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    # motivating example: sources gamma=0 and gamma=1.2, target gamma=0.65
    task = tasks.topk_task(25, 1)
    d_a = datagen.gen_topk(0.0, n_instances=n_instances, seed=seed + 1)
    d_b = datagen.gen_topk(1.2, n_instances=n_instances, seed=seed + 2)
    d_c = datagen.gen_topk(0.65, n_instances=n_instances, seed=seed + 3)
    theta_a = transfer.train_regret_min(task, d_a, budget=budget, seed=seed)
    theta_b = transfer.train_regret_min(task, d_b, budget=budget, seed=seed)
    theta_c = transfer.train_regret_min(task, d_c, budget=budget, seed=seed)
    _write_csv(
        out_dir / "motivating_regrets.csv",
        ["model", "target_regret"],
        [
            ("trained_on_gamma_0.0", fmt(transfer.mean_regret(task, theta_a, d_c))),
            ("trained_on_gamma_1.2", fmt(transfer.mean_regret(task, theta_b, d_c))),
            ("trained_on_target", fmt(transfer.mean_regret(task, theta_c, d_c))),
        ],
    )
    w_dec = GroundCostWeights(0.5, 0.0, 0.5)
    _write_csv(
        out_dir / "motivating_distances.csv",
        ["pair", "feature_label_pooled", "decision_aware"],
        [
            ("A_to_C", fmt(transfer.feature_label_pooled_distance(d_a, d_c)),
             fmt(decision_aware_distance(d_a, d_c, w_dec))),
            ("B_to_C", fmt(transfer.feature_label_pooled_distance(d_b, d_c)),
             fmt(decision_aware_distance(d_b, d_c, w_dec))),
        ],
    )

    # weight sweep over gamma-shifted sources
    gammas = np.linspace(0.0, 1.3, 9)
    sources = [
        datagen.gen_topk(g, n_instances=n_instances, seed=seed + 10 + i)
        for i, g in enumerate(gammas)
    ]
    rows_out, records = transfer.weight_sweep(
        task, sources, d_c, grid_resolution=resolution, budget=budget, seed=seed
    )
    _write_csv(
        out_dir / "weight_sweep.csv",
        ["alpha_x", "alpha_y", "alpha_w", "r2"],
        [(fmt(w.alpha_x), fmt(w.alpha_y), fmt(w.alpha_w), fmt(r2)) for w, r2 in rows_out],
    )
    _write_csv(
        out_dir / "sweep_transferability.csv",
        ["gamma", "transferability", "regret_source_on_target", "regret_target_on_target"],
        [
            (fmt(g), fmt(r.transferability), fmt(r.regret_source_on_target),
             fmt(r.regret_target_on_target))
            for g, r in zip(gammas, records)
        ],
    )

    # target-shift study on the grid task, with and without a path-length term
    grid_rows = []
    w_third = GroundCostWeights(1 / 3, 1 / 3, 1 / 3)
    w_fl = GroundCostWeights(0.5, 0.5, 0.0)
    for variant, lw in (("cost_only", 0.0), ("cost_plus_length", 5.0)):
        tgt = datagen.gen_grid(
            class_cost_seed=seed + 100, map_seed=seed + 200,
            n_instances=min(n_instances, 20), length_weight=lw,
        )
        for shift in range(4):
            src = datagen.gen_grid(
                class_cost_seed=seed + 101 + shift, map_seed=seed + 200,
                n_instances=min(n_instances, 20), length_weight=lw,
            )
            grid_rows.append(
                (variant, shift,
                 fmt(decision_aware_distance(src, tgt, w_fl)),
                 fmt(decision_aware_distance(src, tgt, w_third)))
            )
    _write_csv(
        out_dir / "target_shift_grid.csv",
        ["task_variant", "shift_id", "feature_label_distance", "decision_aware_distance"],
        grid_rows,
    )
    print(f"wrote reproduction tables to {out_dir}")
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="ptodist", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a synthetic dataset file")
    p.add_argument("--family", required=True, choices=["topk", "grid", "inventory"])
    p.add_argument("--gamma", type=float, default=None, help="topk: target-shift parameter")
    p.add_argument("--instances", type=int, default=50)
    p.add_argument("--resources", type=int, default=25, help="topk: resources per instance")
    p.add_argument("--k", type=int, default=1, help="topk: selection size")
    p.add_argument("--p", type=int, default=12, help="grid: side length")
    p.add_argument("--classes", type=int, default=5, help="grid: number of cell classes")
    p.add_argument("--cost-seed", type=int, default=0, help="grid: class-cost table seed")
    p.add_argument("--map-seed", type=int, default=0, help="grid: class-map seed")
    p.add_argument("--length-weight", type=float, default=0.0, help="grid: per-cell length penalty")
    p.add_argument("--mean-seed", type=int, default=0, help="inventory: feature-mean seed")
    p.add_argument("--theta-seed", type=int, default=0, help="inventory: score-matrix seed")
    p.add_argument("--features", type=int, default=1, help="inventory: feature dimension")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("dist", help="decision-aware distance between two dataset files")
    p.add_argument("dataset_a")
    p.add_argument("dataset_b")
    p.add_argument("--alpha-x", type=float, default=1 / 3)
    p.add_argument("--alpha-y", type=float, default=1 / 3)
    p.add_argument("--alpha-w", type=float, default=1 / 3)
    p.add_argument("--solver", choices=["exact", "sinkhorn"], default="exact")
    p.add_argument("--epsilon", type=float, default=0.01)
    p.add_argument("--mode", choices=list(ground_cost.MODES), default="as-written")
    p.add_argument("--breakdown", default=None, help="write per-pair cost breakdown CSV here")
    p.set_defaults(func=cmd_dist)

    p = sub.add_parser("transfer", help="regret transferability of sources onto a target")
    p.add_argument("--source", action="append", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--alpha-x", type=float, default=1 / 3)
    p.add_argument("--alpha-y", type=float, default=1 / 3)
    p.add_argument("--alpha-w", type=float, default=1 / 3)
    p.add_argument("--mode", choices=list(ground_cost.MODES), default="as-written")
    p.add_argument("--budget", type=int, default=5000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_transfer)

    p = sub.add_parser("sweep", help="R-squared over the ground-cost weight simplex")
    p.add_argument("--source", action="append", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--resolution", type=int, default=10)
    p.add_argument("--mode", choices=list(ground_cost.MODES), default="as-written")
    p.add_argument("--budget", type=int, default=5000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("bound", help="empirical adaptation-bound check")
    p.add_argument("--source", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--lambdas", default="0.5,1,2,4", help="comma-separated lambda grid")
    p.add_argument("--k1", type=float, default=None)
    p.add_argument("--k2", type=float, default=None)
    p.add_argument("--budget", type=int, default=3000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("repro", help="run the full experiment pipelines into one directory")
    p.add_argument("--config", default=None, help="flat key=value config file")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_repro)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (DatasetFormatError, FileNotFoundError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ValueError,) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ArithmeticError, RuntimeError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())

"""Command-line experiment driver.

Subcommands: ``partition`` (single run), ``sweep`` (eta grid on one network),
``sbm`` (synthetic detectability grid), ``ami-matrix`` (pairwise AMIs across
metadata types).  All outputs are CSV with a header row and 12 significant
digits; every run is deterministic given its flags including ``--seed``.
The worker-pool size for the sbm grid comes from ``CONTENTMAP_WORKERS``
(default: all CPUs).
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import synth
from .metrics import ami
from .netcore import (
    MetadataAnnotation,
    Network,
    NetworkFormatError,
    Partition,
    load_metadata,
    load_network,
    read_partition,
    write_metadata,
    write_network,
    write_partition,
)
from .optimizer import SearchConfig, search_detailed

REPORT_COLUMNS = ["eta", "total", "inter", "intra", "metadata", "modules"]
SWEEP_COLUMNS = [
    "eta",
    "trial_seed",
    "total",
    "inter",
    "intra",
    "metadata",
    "topological",
    "modules",
    "ami_metadata",
    "ami_reference",
]
SBM_COLUMNS = ["delta", "noise", "eta", "mean_ami", "std_ami", "mean_modules"]


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.12g}"
    return str(x)


def _write_csv(path_or_handle, header, rows) -> None:
    close = False
    if isinstance(path_or_handle, (str, Path)):
        fh = open(path_or_handle, "w", encoding="utf-8", newline="")
        close = True
    else:
        fh = path_or_handle
    try:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(x) for x in row])
    finally:
        if close:
            fh.close()


def _parse_grid(text: str) -> list[float]:
    """Parse 'start:stop:step' (inclusive) or a comma-separated list."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"grid {text!r} must be start:stop:step or a comma list")
        start, stop, step = (float(p) for p in parts)
        if step <= 0:
            raise ValueError("grid step must be positive")
        count = int(np.floor((stop - start) / step + 1e-9)) + 1
        return [round(start + i * step, 12) for i in range(max(count, 0))]
    return [float(p) for p in text.split(",") if p.strip() != ""]


def worker_count() -> int:
    raw = os.environ.get("CONTENTMAP_WORKERS", "").strip()
    if raw:
        return max(1, int(raw))
    return os.cpu_count() or 1


def _uniform_metadata(network: Network) -> MetadataAnnotation:
    return MetadataAnnotation.from_labels(["0"] * network.n)


def _load_inputs(args, max_eta: float) -> tuple[Network, MetadataAnnotation]:
    network = load_network(args.network, format=args.format, directed=args.directed)
    if args.metadata is None:
        if max_eta > 0:
            raise NetworkFormatError("--metadata is required when eta > 0")
        metadata = _uniform_metadata(network)
    else:
        metadata = load_metadata(args.metadata, network)
    return network, metadata


def _config(args, eta: float | None = None, seed: int | None = None) -> SearchConfig:
    return SearchConfig(
        eta=args.eta if eta is None else eta,
        tau=args.tau,
        trials=args.trials,
        seed=args.seed if seed is None else seed,
        tolerance=args.tolerance,
    )


def _report_row(report, modules: int) -> list:
    return [
        report.eta,
        report.total,
        report.inter_term,
        report.intra_term,
        report.metadata_term,
        modules,
    ]


def cmd_partition(args) -> int:
    network, metadata = _load_inputs(args, args.eta)
    result = search_detailed(network, metadata, _config(args))
    write_partition(result.partition, args.out, names=network.node_names)
    target = args.report if args.report else sys.stdout
    _write_csv(target, REPORT_COLUMNS, [_report_row(result.report, result.partition.m)])
    return 0


def _sweep_seed(seed: int, eta_index: int) -> int:
    return int(np.random.SeedSequence((seed, eta_index)).generate_state(1, np.uint64)[0])


def cmd_sweep(args) -> int:
    etas = _parse_grid(args.eta_grid)
    if not etas:
        raise ValueError("empty eta grid")
    if any(e < 0 for e in etas):
        raise ValueError("eta must be nonnegative")
    network, metadata = _load_inputs(args, max(etas))
    reference = (
        read_partition(args.reference, network) if args.reference else None
    )
    meta_partition = Partition.from_labels(metadata.assignment.tolist())
    rows = []
    for ei, eta in enumerate(etas):
        result = search_detailed(
            network, metadata, _config(args, eta=eta, seed=_sweep_seed(args.seed, ei))
        )
        rep = result.report
        rows.append(
            [
                eta,
                result.best_trial_seed,
                rep.total,
                rep.inter_term,
                rep.intra_term,
                rep.metadata_term,
                rep.topological,
                result.partition.m,
                ami(result.partition, meta_partition),
                ami(result.partition, reference) if reference is not None else "",
            ]
        )
    _write_csv(args.out if args.out else sys.stdout, SWEEP_COLUMNS, rows)
    return 0


def sbm_instance_seeds(
    seed: int, delta_index: int, noise_index: int, eta_index: int, instance_index: int
) -> tuple[int, int]:
    """Deterministic (generator seed, search seed) for one grid instance."""
    ss = np.random.SeedSequence((seed, delta_index, noise_index, eta_index, instance_index))
    gen_seed, search_seed = (int(s) for s in ss.generate_state(2, np.uint64))
    return gen_seed, search_seed


def _run_sbm_instance(task):
    (seed, n, rho, delta, noise, eta, tau, trials, tolerance, di, ni, ei, ii) = task
    gen_seed, search_seed = sbm_instance_seeds(seed, di, ni, ei, ii)
    spec = synth.SbmSpec.from_density(n, rho, delta, noise, seed=gen_seed)
    instance = synth.generate(spec, largest_component_only=True)
    config = SearchConfig(
        eta=eta, tau=tau, trials=trials, seed=search_seed, tolerance=tolerance
    )
    result = search_detailed(instance.network, instance.metadata, config)
    return (
        (di, ni, ei, ii),
        float(ami(result.partition, instance.planted)),
        result.partition.m,
    )


def _dump_sbm_instance(dump_dir, delta, noise, eta, ii, instance) -> None:
    stem = f"sbm_d{delta:g}_noise{noise:g}_eta{eta:g}_i{ii}"
    base = Path(dump_dir)
    write_network(instance.network, base / f"{stem}.net.tsv")
    write_metadata(
        instance.metadata, base / f"{stem}.meta.tsv", names=instance.network.node_names
    )
    write_partition(
        instance.planted, base / f"{stem}.planted.tsv", names=instance.network.node_names
    )


def cmd_sbm(args) -> int:
    deltas = _parse_grid(args.delta_grid)
    noises = _parse_grid(args.noise_grid)
    etas = _parse_grid(args.eta_grid)
    if not (deltas and noises and etas):
        raise ValueError("empty grid")
    for delta in deltas:
        synth.SbmSpec.from_density(args.n, args.rho, delta)  # validates bounds
    tasks = []
    for di, delta in enumerate(deltas):
        for ni, noise in enumerate(noises):
            for ei, eta in enumerate(etas):
                for ii in range(args.instances):
                    tasks.append(
                        (
                            args.seed,
                            args.n,
                            args.rho,
                            delta,
                            noise,
                            eta,
                            args.tau,
                            args.trials,
                            args.tolerance,
                            di,
                            ni,
                            ei,
                            ii,
                        )
                    )
    if args.dump_dir:
        os.makedirs(args.dump_dir, exist_ok=True)
        for task in tasks:
            (_, n, rho, delta, noise, eta, _, _, _, di, ni, ei, ii) = task
            gen_seed, _ = sbm_instance_seeds(args.seed, di, ni, ei, ii)
            spec = synth.SbmSpec.from_density(n, rho, delta, noise, seed=gen_seed)
            _dump_sbm_instance(
                args.dump_dir, delta, noise, eta, ii, synth.generate(spec, True)
            )

    workers = worker_count()
    results: dict[tuple[int, int, int, int], tuple[float, int]] = {}
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for key, value, modules in pool.map(_run_sbm_instance, tasks, chunksize=8):
                results[key] = (value, modules)
    else:
        for task in tasks:
            key, value, modules = _run_sbm_instance(task)
            results[key] = (value, modules)

    rows = []
    for di, delta in enumerate(deltas):
        for ni, noise in enumerate(noises):
            for ei, eta in enumerate(etas):
                amis = np.array(
                    [results[(di, ni, ei, ii)][0] for ii in range(args.instances)]
                )
                mods = np.array(
                    [results[(di, ni, ei, ii)][1] for ii in range(args.instances)]
                )
                rows.append(
                    [delta, noise, eta, amis.mean(), amis.std(), mods.mean()]
                )
    _write_csv(args.out if args.out else sys.stdout, SBM_COLUMNS, rows)
    return 0


def cmd_ami_matrix(args) -> int:
    network = load_network(args.network, format=args.format, directed=args.directed)
    named: list[tuple[str, MetadataAnnotation]] = []
    for item in args.metadata:
        if "=" not in item:
            raise ValueError(f"--metadata expects NAME=PATH, got {item!r}")
        name, path = item.split("=", 1)
        named.append((name, load_metadata(path, network)))
    if not named:
        raise ValueError("at least one --metadata NAME=PATH is required")

    partitions: list[tuple[str, Partition]] = []
    for name, metadata in named:
        partitions.append((name, Partition.from_labels(metadata.assignment.tolist())))
    for name, metadata in named:
        result = search_detailed(network, metadata, _config(args))
        partitions.append((f"c_{name}", result.partition))

    names = [name for name, _ in partitions]
    rows = []
    for name_i, part_i in partitions:
        row = [name_i]
        for _, part_j in partitions:
            row.append(ami(part_i, part_j))
        rows.append(row)
    _write_csv(args.out if args.out else sys.stdout, ["name"] + names, rows)
    return 0


def _add_common(parser, with_metadata=True) -> None:
    parser.add_argument("--network", required=True, help="network file path")
    parser.add_argument(
        "--format",
        choices=["edge-list-tsv", "pajek-net"],
        default="edge-list-tsv",
        help="network file format",
    )
    parser.add_argument("--directed", action="store_true", help="treat edges as arcs")
    if with_metadata:
        parser.add_argument("--metadata", help="node label file path")
    _add_search_flags(parser)


def _add_search_flags(parser) -> None:
    parser.add_argument("--tau", type=float, default=0.0, help="teleportation rate")
    parser.add_argument("--trials", type=int, default=10, help="independent restarts")
    parser.add_argument("--seed", type=int, default=0, help="root RNG seed")
    parser.add_argument(
        "--tolerance", type=float, default=1e-10, help="minimum move improvement, bits"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="contentmap",
        description="Community detection on node-attributed networks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("partition", help="partition one network")
    _add_common(p)
    p.add_argument("--eta", type=float, required=True, help="metadata term weight")
    p.add_argument("--out", required=True, help="partition TSV output path")
    p.add_argument("--report", help="report CSV path (default stdout)")
    p.set_defaults(func=cmd_partition)

    p = sub.add_parser("sweep", help="eta sweep on one network")
    _add_common(p)
    p.add_argument("--eta-grid", required=True, help="start:stop:step or comma list")
    p.add_argument("--reference", help="reference partition TSV for extra AMI column")
    p.add_argument("--out", help="sweep CSV path (default stdout)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("sbm", help="planted-partition detectability grid")
    p.add_argument("--n", type=int, default=200, help="nodes per instance")
    p.add_argument("--rho", type=float, default=0.2, help="mean edge density")
    p.add_argument("--delta-grid", required=True, help="assortativity grid")
    p.add_argument("--noise-grid", default="0", help="label noise grid")
    p.add_argument("--eta-grid", default="0,0.1,0.25,0.5,1", help="eta grid")
    p.add_argument("--instances", type=int, default=100, help="instances per point")
    p.add_argument("--dump-dir", help="write generated instances as TSV here")
    p.add_argument("--out", help="results CSV path (default stdout)")
    _add_search_flags(p)
    p.set_defaults(func=cmd_sbm)

    p = sub.add_parser("ami-matrix", help="pairwise AMIs across metadata types")
    p.add_argument("--network", required=True, help="network file path")
    p.add_argument(
        "--format", choices=["edge-list-tsv", "pajek-net"], default="edge-list-tsv"
    )
    p.add_argument("--directed", action="store_true")
    p.add_argument(
        "--metadata",
        action="append",
        default=[],
        metavar="NAME=PATH",
        help="metadata type, repeatable",
    )
    p.add_argument("--eta", type=float, required=True, help="metadata term weight")
    p.add_argument("--out", help="matrix CSV path (default stdout)")
    _add_search_flags(p)
    p.set_defaults(func=cmd_ami_matrix)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (NetworkFormatError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

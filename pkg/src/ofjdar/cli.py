"""Command line entry point: ``ofjdar {generate,run,matrix,report}``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .adapt import AdaptParams
from .bench import (
    ExperimentConfig,
    MethodId,
    ReportRow,
    ReportTable,
    aggregate_rows,
    emit_report,
    load_results,
    run_matrix,
    run_online_task,
    write_summary,
)
from .dataset import (
    SyntheticPanelConfig,
    add_noise,
    generate_synthetic_domain,
    load_domain,
    online_split,
    save_domain,
)
from .exceptions import OfjdarError

log = logging.getLogger("ofjdar")

EXIT_OK = 0
EXIT_CELLS_FAILED = 1
EXIT_USAGE = 2


def _generate(args) -> int:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for i in range(args.n_domains):
        name = f"{args.prefix}{i}"
        config = SyntheticPanelConfig(
            n_sensors=args.n_sensors, label_start=args.label_start, label_stop=args.label_stop,
            label_step=args.label_step, domain_seed=i, shift_magnitude=args.shift,
            panel_seed=args.panel_seed, name=name,
        )
        domain = generate_synthetic_domain(config)
        if args.noise > 0:
            domain = add_noise(domain, args.noise, seed=[args.panel_seed, i])
        path = save_domain(domain, out / f"{name}.csv")
        print(path)
    return EXIT_OK


def _params_from(args) -> AdaptParams:
    return AdaptParams(lam=args.lam, k=args.k, c=args.c, max_iters=args.max_iters, tol=args.tol)


def _run(args) -> int:
    d_s = load_domain(args.source)
    d_t = load_domain(args.target)
    if args.noise > 0:
        d_s = add_noise(d_s, args.noise, seed=[args.seed, 0, 1])
        d_t = add_noise(d_t, args.noise, seed=[args.seed, 1, 1])
    schedule = online_split(d_t, args.n_tl0, args.delta_n)
    method = MethodId(args.method)
    result = run_online_task(d_s, d_t, method, schedule, _params_from(args), args.seed)
    status = "ok" if result.ok else f"failed: {result.error}"
    row = ReportRow(Path(args.source).stem, Path(args.target).stem, method.value, args.delta_n,
                    float(args.noise), args.seed, result.rmse() if result.ok else None, status)
    table = ReportTable([row], {(row.source, row.target, row.method, row.delta_n, row.noise,
                                 row.seed): result})
    emit_report(table, args.out)
    print(f"{method.value} rmse={row.rmse!r} status={status}")
    return EXIT_OK if result.ok else EXIT_CELLS_FAILED


def _matrix(args) -> int:
    config = ExperimentConfig.load(args.config)

    def progress(done, total, row):
        print(f"[{done}/{total}] {row.source}->{row.target} {row.method} dn={row.delta_n} "
              f"noise={row.noise:g} seed={row.seed}: {row.rmse if row.ok else row.status}",
              file=sys.stderr)

    table = run_matrix(config, workers=args.workers, progress=None if args.quiet else progress)
    paths = emit_report(table, args.out)
    failed = [r for r in table.rows if not r.ok]
    print(f"{len(table.rows)} cells, {len(failed)} failed; wrote {paths['results']}")
    return EXIT_OK if not failed else EXIT_CELLS_FAILED


def _report(args) -> int:
    table = load_results(args.results)
    if args.summary:
        write_summary(table.rows, args.summary)
    header = f"{'source':>8} {'target':>8} {'method':>7} {'dn':>3} {'noise':>5} " \
             f"{'median':>10} {'iqr':>10} {'ok':>3} {'fail':>4}"
    print(header)
    for key, stats in aggregate_rows(table.rows).items():
        source, target, method, dn, noise = key
        print(f"{source:>8} {target:>8} {method:>7} {dn:>3} {noise:>5g} "
              f"{stats['median_rmse']:>10.4g} {stats['iqr_rmse']:>10.4g} "
              f"{stats['n_ok']:>3} {stats['n_failed']:>4}")
    return EXIT_OK if table.all_ok else EXIT_CELLS_FAILED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ofjdar", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="write synthetic domains as CSV")
    gen.add_argument("--out-dir", required=True)
    gen.add_argument("--n-domains", type=int, default=2)
    gen.add_argument("--prefix", default="D")
    gen.add_argument("--shift", type=float, default=0.5)
    gen.add_argument("--panel-seed", type=int, default=0)
    gen.add_argument("--n-sensors", type=int, default=20)
    gen.add_argument("--label-start", type=float, default=0.5)
    gen.add_argument("--label-stop", type=float, default=50.0)
    gen.add_argument("--label-step", type=float, default=0.5)
    gen.add_argument("--noise", type=float, default=0.0)
    gen.set_defaults(func=_generate)

    run = sub.add_parser("run", help="one online task on two domain CSV files")
    run.add_argument("--source", required=True)
    run.add_argument("--target", required=True)
    run.add_argument("--method", required=True, choices=[m.value for m in MethodId])
    run.add_argument("--delta-n", type=int, default=5)
    run.add_argument("--noise", type=float, default=0.0)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--n-tl0", type=int, default=5)
    run.add_argument("--out", required=True)
    defaults = AdaptParams()
    run.add_argument("--lam", type=float, default=defaults.lam)
    run.add_argument("--k", type=int, default=defaults.k)
    run.add_argument("--c", type=int, default=defaults.c)
    run.add_argument("--max-iters", type=int, default=defaults.max_iters)
    run.add_argument("--tol", type=float, default=defaults.tol)
    run.set_defaults(func=_run)

    mat = sub.add_parser("matrix", help="sweep an experiment config")
    mat.add_argument("--config", required=True)
    mat.add_argument("--out", required=True)
    mat.add_argument("--workers", type=int, default=1)
    mat.add_argument("--quiet", action="store_true")
    mat.set_defaults(func=_matrix)

    rep = sub.add_parser("report", help="re-aggregate an existing results.csv")
    rep.add_argument("--results", required=True)
    rep.add_argument("--summary", help="also write summary CSV here")
    rep.set_defaults(func=_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (OfjdarError, OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

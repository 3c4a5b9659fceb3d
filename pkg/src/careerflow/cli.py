"""Command-line pipeline: ingest -> network -> transform -> rank -> analyze -> predict.

All outputs are CSV. Option precedence is flags > config file > defaults;
the config file is flat ``key=value`` lines keyed by long option names.
Row-level data problems go to stderr as diagnostics; only fatal errors
exit nonzero.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from careerflow import analysis, ingest, predict, rank, synth
from careerflow.flownet import build_network, derive_transitions, write_edges, write_self_weights
from careerflow.model import Corpus
from careerflow.r3 import (
    R3Params,
    transform_growth,
    transform_resources,
    transform_retention,
    transform_unified,
)


def _parse_year_range(text: str) -> tuple[int, int]:
    try:
        start, end = text.split(":")
        return int(start), int(end)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected START:END, got {text!r}") from None


def _read_config(path: str) -> dict[str, str]:
    values: dict[str, str] = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise SystemExit(f"config line is not key=value: {raw!r}")
        key, value = line.split("=", 1)
        values[key.strip().replace("-", "_")] = value.strip()
    return values


_CONFIG_TYPES: dict[str, object] = {
    "horizon": int,
    "window": int,
    "step": int,
    "start": int,
    "end": int,
    "top_k": int,
    "n": int,
    "folds": int,
    "seed": int,
    "persons": int,
    "orgs": int,
    "alpha_ratio": float,
    "beta_ratio": float,
    "gamma": float,
    "exponent": float,
    "years": _parse_year_range,
}

_FLAG_KEYS = ("exclude_postdocs", "export_dataset", "planted_signal", "random")


def _apply_config(args: argparse.Namespace) -> None:
    """Fill options the command line left unset from the config file."""
    if not getattr(args, "config", None):
        return
    config = _read_config(args.config)
    for key, raw in config.items():
        if not hasattr(args, key):
            continue
        current = getattr(args, key)
        if key in _FLAG_KEYS:
            if current is False:
                setattr(args, key, raw.lower() in ("1", "true", "yes"))
        elif current is None:
            converter = _CONFIG_TYPES.get(key, str)
            setattr(args, key, converter(raw))


def _load_corpus_full(args: argparse.Namespace) -> tuple[Corpus, ingest.IngestReport]:
    if args.horizon is None:
        raise SystemExit("--horizon is required (flag or config file)")
    if args.rules:
        with open(args.rules, newline="") as fh:
            rules = ingest.read_rules(fh)
    else:
        rules = ingest.default_rules()
    with open(args.records, newline="") as fh:
        corpus, report, diagnostics = ingest.load_corpus(fh, rules, args.horizon)
    for diag in diagnostics:
        print(diag, file=sys.stderr)
    return corpus, report


def _load_corpus(args: argparse.Namespace) -> Corpus:
    return _load_corpus_full(args)[0]

def _out_dir(args: argparse.Namespace) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _full_network(corpus: Corpus, years: tuple[int, int] | None):
    transitions = derive_transitions(corpus)
    if years is None:
        first = min(traj.first_start for traj in corpus.trajectories)
        years = (first, corpus.horizon_year)
    return build_network(transitions, corpus, range(years[0], years[1] + 1))


def _params(args: argparse.Namespace) -> R3Params:
    return R3Params(
        alpha_ratio=args.alpha_ratio if args.alpha_ratio is not None else 0.5,
        beta_ratio=args.beta_ratio if args.beta_ratio is not None else 0.5,
        gamma=args.gamma if args.gamma is not None else 1.5,
    )


def cmd_ingest(args: argparse.Namespace) -> int:
    corpus, report = _load_corpus_full(args)
    out = _out_dir(args)
    with open(out / "corpus.csv", "w", newline="") as fh:
        ingest.write_records(corpus, fh)
    with open(out / "report.csv", "w", newline="") as fh:
        fh.write("metric,value\n")
        fh.write(f"persons,{report.n_persons}\n")
        fh.write(f"spells,{report.n_spells}\n")
        fh.write(f"excluded_persons,{len(report.excluded_persons)}\n")
        for sector, share in report.sector_shares.items():
            fh.write(f"share_{sector.value},{share:.6f}\n")
    return 0


def cmd_network(args: argparse.Namespace) -> int:
    corpus = _load_corpus(args)
    net = _full_network(corpus, args.years)
    out = _out_dir(args)
    with open(out / "gf_edges.csv", "w", newline="") as fh:
        write_edges(net, fh)
    with open(out / "gf_self_weights.csv", "w", newline="") as fh:
        write_self_weights(net, fh)
    return 0


def cmd_transform(args: argparse.Namespace) -> int:
    corpus = _load_corpus(args)
    net = _full_network(corpus, args.years)
    params = _params(args)
    if args.mode == "src":
        transformed = transform_resources(net, corpus, params)
    elif args.mode == "tn":
        transformed = transform_retention(net, corpus, params)
    elif args.mode == "gr":
        transformed = transform_growth(net, params)
    else:
        transformed = transform_unified(net, corpus, params)
    out = _out_dir(args)
    with open(out / f"{args.mode}_edges.csv", "w", newline="") as fh:
        write_edges(transformed, fh)
    with open(out / f"{args.mode}_self_weights.csv", "w", newline="") as fh:
        write_self_weights(transformed, fh)
    return 0


def cmd_rank(args: argparse.Namespace) -> int:
    corpus = _load_corpus(args)
    net = _full_network(corpus, None)
    tables = rank.windowed_rankings(
        net,
        window_len=args.window if args.window is not None else 5,
        step=args.step,
        transform=args.transform or "none",
        corpus=corpus,
        params=_params(args),
        start=args.start,
        end=args.end,
    )
    out = _out_dir(args)
    with open(out / "rankings.csv", "w", newline="") as fh:
        rank.write_rankings(tables, fh)
    return 0


def cmd_outliers(args: argparse.Namespace) -> int:
    corpus = _load_corpus(args)
    net = _full_network(corpus, None)
    window = args.window if args.window is not None else 5
    kwargs = dict(window_len=window, step=args.step, start=args.start, end=args.end)
    gf_tables = rank.windowed_rankings(net, transform="none", **kwargs)
    r3_tables = rank.windowed_rankings(
        net, transform="r3", corpus=corpus, params=_params(args), **kwargs
    )
    by_window = {t.window: t for t in r3_tables}
    out = _out_dir(args)
    with open(out / "outliers.csv", "w", newline="") as fh:
        fh.write("window_start,window_end,org,residual\n")
        for table in gf_tables:
            partner = by_window.get(table.window)
            if partner is None:
                continue
            top = rank.rank_change_outliers(
                table, partner, args.top_k if args.top_k is not None else 10
            )
            for org, residual in top:
                fh.write(f"{table.window[0]},{table.window[1]},{org},{residual:.6f}\n")
    return 0


def cmd_analyze(args: argparse.Namespace) -> int:
    corpus = _load_corpus(args)
    transitions = derive_transitions(corpus)
    net = _full_network(corpus, None)
    window = args.window if args.window is not None else 5
    years = {tr.year for tr in transitions}
    tables_gf = rank.preceding_tables(net, years, window)
    tables_r3 = rank.preceding_tables(net, years, window, transform="r3", corpus=corpus, params=_params(args))
    report = analysis.cross_sector_report(
        transitions, corpus, tables_gf, tables_r3, exclude_postdocs=args.exclude_postdocs
    )
    out = _out_dir(args)
    with open(out / "cross_sector.csv", "w", newline="") as fh:
        analysis.write_cross_sector(report, fh)
    with open(out / "soft_trend.csv", "w", newline="") as fh:
        fh.write("slope_pct_per_year,p_value\n")
        try:
            slope, p = analysis.soft_trend(transitions)
            fh.write(f"{slope:.6f},{p:.6g}\n")
        except ValueError as exc:
            print(f"soft trend skipped: {exc}", file=sys.stderr)
    with open(out / "retention.csv", "w", newline="") as fh:
        analysis.write_retention(analysis.retention_by_sector(corpus), fh)
    with open(out / "ccdf.csv", "w", newline="") as fh:
        analysis.write_ccdf(analysis.employment_ccdf(corpus), fh)
    return 0


def cmd_predict(args: argparse.Namespace) -> int:
    corpus = _load_corpus(args)
    years_range = args.years or (corpus.horizon_year - 10, corpus.horizon_year - (args.n or 1))
    years = range(years_range[0], years_range[1] + 1)
    dataset = predict.build_dataset(
        corpus,
        years,
        args.n if args.n is not None else 1,
        window_len=args.window if args.window is not None else 5,
        params=_params(args),
    )
    configs = tuple((args.groups or "ind,ind+gf,ind+r3,all").split(","))
    for config in configs:
        if config not in predict.CONFIG_GROUPS:
            raise SystemExit(f"unknown feature group config {config!r}")
    classifier = predict.BaselineLogisticRegression()
    results = predict.cross_validate(
        dataset,
        classifier,
        k=args.folds if args.folds is not None else 10,
        seed=args.seed if args.seed is not None else 0,
        configs=configs,
    )
    out = _out_dir(args)
    with open(out / "metrics.csv", "w", newline="") as fh:
        predict.write_metrics(results, fh)
    if args.export_dataset:
        with open(out / "dataset.csv", "w", newline="") as fh:
            predict.write_dataset(dataset, fh)
    return 0


def cmd_synth(args: argparse.Namespace) -> int:
    if args.scenario == "fig4":
        corpus, _net, _spec = synth.figure4_scenario()
    elif args.random:
        corpus = synth.random_population(
            seed=args.seed if args.seed is not None else 0,
            n_persons=args.persons if args.persons is not None else 500,
            n_orgs=args.orgs if args.orgs is not None else 50,
            tail_exponent=args.exponent if args.exponent is not None else 1.5,
            planted_signal=args.planted_signal,
        )
    else:
        raise SystemExit("synth requires --scenario fig4 or --random")
    out = _out_dir(args)
    with open(out / "records.csv", "w", newline="") as fh:
        ingest.write_records(corpus, fh)
    with open(out / "rules.csv", "w", newline="") as fh:
        ingest.write_rules(synth.corpus_rules(corpus), fh)
    print(f"horizon={corpus.horizon_year}", file=sys.stderr)
    return 0


def _add_io_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--records", required=True, help="records CSV path")
    parser.add_argument("--rules", help="rules CSV path (default: built-in keyword rules)")
    parser.add_argument("--horizon", type=int, help="analysis horizon year (required here or in --config)")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--config", help="flat key=value config file")


def _add_param_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--alpha-ratio", type=float, dest="alpha_ratio")
    parser.add_argument("--beta-ratio", type=float, dest="beta_ratio")
    parser.add_argument("--gamma", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="careerflow",
        description="Career-transition network analysis: build, reweight, rank, analyze, predict.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate and normalize a records file")
    _add_io_options(p)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("network", help="build and export the yearly flow network")
    _add_io_options(p)
    p.add_argument("--years", type=_parse_year_range, help="START:END years to include")
    p.set_defaults(func=cmd_network)

    p = sub.add_parser("transform", help="apply an edge reweighting and export it")
    _add_io_options(p)
    _add_param_options(p)
    p.add_argument("--years", type=_parse_year_range)
    p.add_argument("--mode", choices=("src", "tn", "gr", "unified"), required=True)
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("rank", help="windowed HITS rankings")
    _add_io_options(p)
    _add_param_options(p)
    p.add_argument("--window", type=int)
    p.add_argument("--step", type=int)
    p.add_argument("--transform", choices=("none", "r3"))
    p.add_argument("--start", type=int)
    p.add_argument("--end", type=int)
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("outliers", help="rank-change outliers (reweighted vs raw)")
    _add_io_options(p)
    _add_param_options(p)
    p.add_argument("--window", type=int)
    p.add_argument("--step", type=int)
    p.add_argument("--start", type=int)
    p.add_argument("--end", type=int)
    p.add_argument("--top-k", type=int, dest="top_k")
    p.set_defaults(func=cmd_outliers)

    p = sub.add_parser("analyze", help="cross-sector, soft-trend, retention, CCDF reports")
    _add_io_options(p)
    _add_param_options(p)
    p.add_argument("--window", type=int)
    p.add_argument("--exclude-postdocs", action="store_true", dest="exclude_postdocs")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("predict", help="feature extraction and cross-validated evaluation")
    _add_io_options(p)
    _add_param_options(p)
    p.add_argument("--n", type=int, help="transition horizon in years")
    p.add_argument("--years", type=_parse_year_range, help="prediction years START:END")
    p.add_argument("--groups", help="comma-separated configs from ind,ind+gf,ind+r3,all")
    p.add_argument("--folds", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--window", type=int)
    p.add_argument("--export-dataset", action="store_true", dest="export_dataset")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("synth", help="generate a synthetic corpus (records + rules)")
    p.add_argument("--out", required=True)
    p.add_argument("--config", help="flat key=value config file")
    p.add_argument("--scenario", choices=("fig4",))
    p.add_argument("--random", action="store_true")
    p.add_argument("--seed", type=int)
    p.add_argument("--persons", type=int)
    p.add_argument("--orgs", type=int)
    p.add_argument("--exponent", type=float)
    p.add_argument("--planted-signal", action="store_true", dest="planted_signal")
    p.set_defaults(func=cmd_synth)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _apply_config(args)
    try:
        return args.func(args)
    except (ingest.IngestError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

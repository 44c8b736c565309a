"""Command-line front end: ``rmtseason {ingest,decompose,patterns,rank,synth}``.

Each stage writes files the next one reads, so expensive stages can be
cached. Options may also come from a flat ``key=value`` file given with
``--config``; command-line flags win over the file.

Exit codes: 0 success, 2 input error, 3 validation failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from pathlib import Path

from rmtseason import persist
from rmtseason.errors import ConvergenceError, InputError, ValidationError
from rmtseason.ingest import FORMATS, Trades, read_trades, resample
from rmtseason.patterns import average_profile, dominant_period, eigensignal, periodogram
from rmtseason.segmentation import DAY_MS, Period, Transform, filter_rows, segment, utc
from rmtseason.spectral import correlation_matrix, eigendecompose
from rmtseason.statistics import offdiag_summary, rank_pairs
from rmtseason.testkit import Plant, SyntheticSpec, generate

log = logging.getLogger("rmtseason")

EXIT_INPUT = 2
EXIT_VALIDATION = 3


def _parse_time(text: str) -> int:
    """Epoch milliseconds from an integer or an ISO date/datetime (UTC)."""
    text = str(text).strip()
    if text.lstrip("-").isdigit():
        return int(text)
    try:
        dt = datetime.fromisoformat(text.replace("Z", "+00:00"))
    except ValueError as exc:
        raise InputError(f"cannot parse time {text!r}") from exc
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return int(dt.timestamp() * 1000)


def read_config(path: str) -> dict[str, str]:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    out: dict[str, str] = {}
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise InputError(f"cannot read config {path}: {exc}") from exc
    for n, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError(f"{path}:{n}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def _config_argv(sub: argparse.ArgumentParser, config: dict[str, str]) -> list[str]:
    # turn config entries into flags placed before the user's own flags
    actions = {a.dest: a for a in sub._actions if a.option_strings}
    argv: list[str] = []
    for key, value in config.items():
        action = actions.get(key)
        if action is None:
            log.warning("ignoring unknown config key %r", key)
            continue
        flag = action.option_strings[-1]
        if isinstance(action, argparse._StoreTrueAction):
            if value.lower() in ("1", "true", "yes", "on"):
                argv.append(flag)
        elif action.nargs in ("+", "*"):
            argv += [flag, *value.replace(",", " ").split()]
        else:
            argv += [flag, value]
    return argv


# ingest -----------------------------------------------------------------------


def cmd_ingest(args) -> int:
    if args.format not in FORMATS:
        raise InputError(f"unknown input format {args.format!r}; expected one of {', '.join(FORMATS)}")
    if args.delta_t <= 0 or DAY_MS % round(args.delta_t * 1000):
        raise ValidationError(f"delta_t={args.delta_t} s does not divide a day")
    with ThreadPoolExecutor(max_workers=args.workers) as pool:
        parts = list(pool.map(lambda p: read_trades(p, args.format), args.input))
    trades = Trades.concat(parts)
    rejected = sum(p.rejected for p in parts)
    span = None
    if args.start is not None or args.end is not None:
        step = int(round(args.delta_t * 1000))
        start = _parse_time(args.start) if args.start is not None else int(trades.timestamps[0]) // step * step
        end = _parse_time(args.end) if args.end is not None else (int(trades.timestamps[-1]) // step + 1) * step
        span = (start, end)
    series = resample(trades, args.delta_t, span, asset=args.asset)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for obs, s in series.items():
        stem = out / f"{args.asset}_{obs.value}"
        persist.write_series_json(s, f"{stem}.json")
        if args.csv:
            persist.write_series_csv(s, f"{stem}.csv")
    print(f"{args.asset}: {len(trades)} trades, {rejected} rejected lines, {len(series[next(iter(series))].values)} bins -> {out}")
    return 0


# decompose --------------------------------------------------------------------


def _decompose_one(matrix, stem: Path, bins: int, margin: float, write_matrix: bool) -> dict:
    C = correlation_matrix(matrix)
    spec = eigendecompose(C, margin=margin)
    if write_matrix:
        persist.write_segments(matrix, stem)
    persist.write_spectrum(
        spec,
        stem,
        extra={
            "T": matrix.T,
            "asset": matrix.asset,
            "period": matrix.period.value,
            "observable": matrix.observable.value,
            "transform": matrix.transform.value,
            "first_label_utc": matrix.label_iso()[0],
            "last_label_utc": matrix.label_iso()[-1],
            "margin": margin,
        },
    )
    persist.write_histogram_csv(spec, f"{stem}.hist.csv", bins)
    if matrix.K >= 3:
        persist.write_offdiag_json(offdiag_summary(C, bins), f"{stem}.offdiag.json")
    return {"stem": str(stem), "K": matrix.K, "lambda_1": spec.lambda_1, "outliers_above": spec.outliers_above}


def _split_years(matrix, stem: Path):
    years = sorted({utc(t).year for t in matrix.labels})
    for y in years:
        try:
            yield filter_rows(matrix, year=y), Path(f"{stem}_{y}")
        except ValidationError:
            log.warning("%s: fewer than 2 segments in %d, skipped", stem.name, y)


def cmd_decompose(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    jobs = []
    for path in args.series or []:
        series = persist.read_series(path)
        for period in args.period:
            for transform in args.transform:
                m = segment(series, Period(period), Transform(transform))
                jobs.append((m, out / f"{series.asset}_{series.observable.value}_{period}_{Transform(transform).value}"))
    for stem in args.segments or []:
        m = persist.read_segments(stem)
        name = Path(str(stem)).name.replace(".segments.json", "").replace(".segments", "")
        jobs.append((m, out / name))
    if not jobs:
        raise InputError("nothing to decompose: give --series or --segments")

    tasks = []
    for m, stem in jobs:
        if args.per_year:
            tasks += [(sub, s) for sub, s in _split_years(m, stem)]
        else:
            tasks.append((m, stem))

    with ThreadPoolExecutor(max_workers=args.workers) as pool:
        results = list(pool.map(lambda t: _decompose_one(t[0], t[1], args.bins, args.margin, True), tasks))
    for r in results:
        print(f"{r['stem']}: K={r['K']} lambda_1={r['lambda_1']:.6g} outliers_above={r['outliers_above']}")
    return 0


# patterns / rank ----------------------------------------------------------------


def cmd_patterns(args) -> int:
    if not args.decomposition and not args.series:
        raise InputError("give --decomposition and/or --series")
    for stem in args.decomposition or []:
        matrix = persist.read_segments(stem)
        spec = persist.read_spectrum(stem)
        for k in args.ranks:
            if not 1 <= k <= matrix.K:
                raise ValidationError(f"rank {k} exceeds K={matrix.K} for {stem}")
            path = persist.write_eigensignal(eigensignal(matrix, spec, k), stem)
            print(path)
    if args.series:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        for path in args.series:
            series = persist.read_series(path)
            for period in args.period:
                prof = average_profile(series, Period(period))
                stem = out / f"{series.asset}_{series.observable.value}_{period}"
                persist.write_profile(prof, stem)
                pg = periodogram(prof.values, series.delta_t, window=None if args.window == "none" else args.window)
                dom = dominant_period(pg)
                persist.write_periodogram(pg, stem, {"source": f"{stem.name}.profile.csv", "dominant_period_s": dom})
                print(f"{stem}: profile over {prof.n_segments} {period}s, dominant period {dom:g} s")
    return 0


def cmd_rank(args) -> int:
    for stem in args.decomposition:
        matrix = persist.read_segments(stem)
        C = correlation_matrix(matrix)
        pairs = rank_pairs(matrix, C, args.top_n)
        persist.write_ranked_csv(pairs, matrix, f"{stem}.ranked.csv")
        print(f"{stem}.ranked.csv: {len(pairs)} pairs")
    return 0


# synth ------------------------------------------------------------------------


def _parse_plant(text: str) -> Plant:
    try:
        idx, amp, frac = text.split(":")
        return Plant(tuple(int(i) for i in idx.split(",")), float(amp), float(frac))
    except ValueError as exc:
        raise InputError(f"bad plant {text!r}; expected INDEX[,INDEX...]:AMPLITUDE:FRACTION") from exc


def cmd_synth(args) -> int:
    if args.spec:
        try:
            spec = SyntheticSpec.from_json(Path(args.spec).read_text(encoding="utf-8"))
        except (OSError, ValueError, KeyError) as exc:
            raise InputError(f"cannot load synthetic spec {args.spec}: {exc}") from exc
        if args.seed is not None:
            spec = SyntheticSpec(args.seed, spec.K, spec.T, spec.noise, spec.df, spec.plants)
    else:
        try:
            spec = SyntheticSpec(
                seed=0 if args.seed is None else args.seed,
                K=args.K,
                T=args.T,
                noise=args.noise,
                df=args.df,
                plants=tuple(_parse_plant(p) for p in args.plant or []),
            )
        except ValueError as exc:
            raise ValidationError(str(exc)) from exc
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    meta, _ = persist.write_segments(generate(spec), out / args.name)
    print(meta)
    return 0


# wiring -------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rmtseason", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    subs = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="key=value file; flags override it")
        p.add_argument("--workers", type=int, default=1, help="concurrent jobs")
        p.add_argument("--out", default=".", help="output directory")

    p = subs.add_parser("ingest", help="parse trade files and resample to a grid")
    common(p)
    p.add_argument("--input", nargs="+", required=True, help="trade files of one asset")
    p.add_argument("--format", default="generic", help=f"one of {', '.join(FORMATS)}")
    p.add_argument("--asset", default="ASSET")
    p.add_argument("--delta-t", type=float, default=10.0, help="bin width in seconds")
    p.add_argument("--start", help="span start (ISO date/time or epoch ms, UTC)")
    p.add_argument("--end", help="span end, exclusive")
    p.add_argument("--csv", action="store_true", help="also write bin_start_ms,value CSVs")
    p.set_defaults(func=cmd_ingest)

    p = subs.add_parser("decompose", help="segment, correlate and eigendecompose")
    common(p)
    p.add_argument("--series", nargs="+", help="sampled-series JSON files")
    p.add_argument("--segments", nargs="+", help="persisted segment matrices (e.g. from synth)")
    p.add_argument("--period", nargs="+", default=["day"], choices=[x.value for x in Period])
    p.add_argument("--transform", nargs="+", default=["raw"], choices=[x.value for x in Transform])
    p.add_argument("--bins", type=int, default=50)
    p.add_argument("--margin", type=float, default=0.0, help="buffer around the M-P edges for outliers")
    p.add_argument("--per-year", action="store_true", help="one decomposition per calendar year")
    p.set_defaults(func=cmd_decompose)

    p = subs.add_parser("patterns", help="eigensignals, average profiles, periodograms")
    common(p)
    p.add_argument("--decomposition", nargs="+", help="output stems written by decompose")
    p.add_argument("--ranks", nargs="+", type=int, default=[1, 2, 3])
    p.add_argument("--series", nargs="+", help="sampled-series JSON files for profiles")
    p.add_argument("--period", nargs="+", default=["day"], choices=[x.value for x in Period])
    p.add_argument("--window", default="none", choices=["none", "hann"])
    p.set_defaults(func=cmd_patterns)

    p = subs.add_parser("rank", help="most correlated segment pairs")
    common(p)
    p.add_argument("--decomposition", nargs="+", required=True)
    p.add_argument("--top-n", type=int, default=18)
    p.set_defaults(func=cmd_rank)

    p = subs.add_parser("synth", help="seeded synthetic segment matrix")
    common(p)
    p.add_argument("--spec", help="SyntheticSpec JSON document")
    p.add_argument("--seed", type=int)
    p.add_argument("--K", type=int, default=100)
    p.add_argument("--T", type=int, default=8640)
    p.add_argument("--noise", default="gaussian", choices=["gaussian", "student_t"])
    p.add_argument("--df", type=float)
    p.add_argument("--plant", nargs="+", help="INDEX[,INDEX...]:AMPLITUDE:FRACTION")
    p.add_argument("--name", default="synthetic")
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        pre, _ = parser.parse_known_args(argv)
        if getattr(pre, "config", None):
            sub = parser._subparsers._group_actions[0].choices[pre.command]
            at = argv.index(pre.command) + 1
            argv = argv[:at] + _config_argv(sub, read_config(pre.config)) + argv[at:]
        args = parser.parse_args(argv)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ValidationError, ConvergenceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())

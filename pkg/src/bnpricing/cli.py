"""``bnprice`` command line: calibrate, price, compare, hedge, simulate, selftest.

Results go to stdout as ``name=value`` lines; files go under ``--out``.
Exit codes: 0 success, 2 usage or input error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import datetime as dt
import sys
from pathlib import Path

import numpy as np

from bnpricing import kernels
from bnpricing.calibrate import (
    DAYS_PER_YEAR,
    IndexSeries,
    fit_trendline,
    load_series,
    read_summary,
    write_report,
    write_series,
)
from bnpricing.errors import InputError, NumericalError
from bnpricing.hedge import InitialValueRule, backtest
from bnpricing.mmm import (
    MCI_A_BAR,
    MCI_TAU0_BAR,
    MmmParams,
    PutContract,
    fair_put_price,
    noncentrality,
    risk_neutral_put_price,
    savings_bond_defect,
)
from bnpricing.simulate import (
    SimConfig,
    make_rng,
    mc_fair_price,
    run_euler,
    simulate_q_path,
)
from bnpricing.svg import write_line_chart

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(message)


class _UsageError(Exception):
    pass


def _emit(**pairs):
    for k, v in pairs.items():
        print(f"{k}={v!r}" if isinstance(v, float) else f"{k}={v}")


def _svg_path(out: Path) -> Path:
    return out.with_suffix(".svg")


def _params_from_args(args, series: IndexSeries | None = None) -> MmmParams:
    """Inline --tau0/--a, else a calibration summary, else fit ``series``."""
    s0 = float(series.values[0]) if series is not None else args.s0
    if args.tau0 is not None or args.a is not None:
        if args.tau0 is None or args.a is None:
            raise InputError("give both --tau0 and --a")
        return MmmParams(tau0_bar=args.tau0, a_bar=args.a, s0=s0)
    if getattr(args, "params", None):
        summary = read_summary(args.params)
        try:
            return MmmParams(tau0_bar=summary["tau0_bar"], a_bar=summary["a_bar"], s0=s0)
        except KeyError as exc:
            raise InputError(f"summary {args.params} lacks {exc.args[0]}") from None
    if series is None:
        return MmmParams(s0=s0)
    fit = fit_trendline(series)
    return MmmParams(tau0_bar=fit.tau0_bar, a_bar=fit.a_bar, s0=s0)


def _load(path) -> IndexSeries:
    try:
        return load_series(path)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}") from None


# ----------------------------------------------------------------- commands

def cmd_calibrate(args) -> int:
    series = _load(args.data)
    result = fit_trendline(series)
    summary = write_report(args.out, series, result)
    _emit(tau0_bar=result.tau0_bar, a_bar=result.a_bar, rms=result.rms_residual,
          report=str(args.out), summary=str(summary))
    return EXIT_OK


def cmd_price(args) -> int:
    params = MmmParams(tau0_bar=args.tau0, a_bar=args.a, s0=args.s0)
    contract = PutContract(args.strike, args.maturity)
    fair = fair_put_price(params, 0.0, args.s0, contract)
    rn = risk_neutral_put_price(params, 0.0, args.s0, contract)
    lam = noncentrality(params, 0.0, args.s0, args.maturity)
    _emit(fair=fair, risk_neutral=rn, gap=rn - fair,
          defect=savings_bond_defect(params, 0.0, args.s0, args.maturity), noncentrality=lam)
    if args.mc:
        est = mc_fair_price(params, contract, 0.0, args.s0,
                            SimConfig(n_paths=args.mc, seed=args.seed))
        _emit(mc=est.value, mc_stderr=est.stderr, mc_paths=est.n_paths)
    return EXIT_OK


def _maturity_contract(series: IndexSeries, strike: float) -> PutContract:
    if len(series) < 2:
        raise InputError("need at least two observations to set a maturity")
    return PutContract(strike, float(series.times[-1]))


def cmd_compare(args) -> int:
    series = _load(args.data)
    params = _params_from_args(args, series)
    contract = _maturity_contract(series, args.strike)
    fair = np.asarray(fair_put_price(params, series.times, series.values, contract))
    rn = np.asarray(risk_neutral_put_price(params, series.times, series.values, contract))
    out = Path(args.out)
    with open(out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "s", "fair", "risk_neutral"])
        for row in zip(series.times, series.values, fair, rn):
            w.writerow([repr(float(v)) for v in row])
    write_line_chart(_svg_path(out), series.times, {"fair": fair, "risk-neutral": rn},
                     "years", "put price (savings-account units)",
                     f"Put K={args.strike:g}, T={contract.maturity:.2f}")
    _emit(tau0_bar=params.tau0_bar, a_bar=params.a_bar, fair0=float(fair[0]),
          risk_neutral0=float(rn[0]), gap0=float(rn[0] - fair[0]), csv=str(out),
          svg=str(_svg_path(out)))
    return EXIT_OK


def cmd_hedge(args) -> int:
    rule = InitialValueRule.parse(args.rule)
    series = _load(args.data)
    params = _params_from_args(args, series)
    contract = _maturity_contract(series, args.strike)
    report = backtest(params, series, contract, rule)
    out = Path(args.out)
    report.write_csv(out)
    write_line_chart(_svg_path(out), report.times,
                     {"fair price": report.option_values, "hedge portfolio": report.portfolio_values},
                     "years", "value (savings-account units)",
                     f"Delta hedge, {rule.value} start, K={args.strike:g}")
    _emit(rule=rule.value, initial_value=float(report.portfolio_values[0]),
          terminal_value=float(report.portfolio_values[-1]),
          terminal_payoff=report.terminal_payoff, tracking_error=report.tracking_error,
          terminal_surplus=report.terminal_surplus, max_abs_gap=report.max_abs_gap,
          rebalances=report.rebalance_count, csv=str(out), svg=str(_svg_path(out)))
    return EXIT_OK


def business_days(start: dt.date, years: float) -> list[dt.date]:
    """Weekdays from ``start`` through ``start + years`` (actual/365.25)."""
    end = start + dt.timedelta(days=int(round(years * DAYS_PER_YEAR)))
    days = np.arange(np.datetime64(start), np.datetime64(end) + 1, dtype="datetime64[D]")
    days = days[np.is_busday(days)]
    return [d.astype(object) for d in days]


def cmd_simulate(args) -> int:
    params = MmmParams(tau0_bar=args.tau0, a_bar=args.a, lambda_bar=args.lambda_bar, s0=args.s0)
    try:
        start = dt.date.fromisoformat(args.start)
    except ValueError:
        raise InputError(f"bad --start date {args.start!r}") from None
    if not args.years > 0:
        raise InputError("--years must be positive")
    if args.substeps < 1:
        raise InputError("--substeps must be >= 1")
    dates = business_days(start, args.years)
    if len(dates) < 2:
        raise InputError("horizon contains fewer than two business days")
    times = np.array([(d - dates[0]).days / DAYS_PER_YEAR for d in dates])
    if args.measure == "q":
        levels = simulate_q_path(params, times, args.s0, make_rng(args.seed)).levels
    else:
        k = args.substeps
        frac = np.arange(k) / k
        grid = np.append((times[:-1, None] + np.diff(times)[:, None] * frac).ravel(), times[-1])
        out = run_euler(params, grid, args.s0, 1, args.seed,
                        record_idx=np.arange(0, grid.size, k))
        levels = out.levels[0]
    write_series(args.out, IndexSeries(times, levels, tuple(dates)))
    _emit(measure=args.measure, rows=len(dates), first=dates[0].isoformat(),
          last=dates[-1].isoformat(), s_final=float(levels[-1]), csv=str(args.out))
    return EXIT_OK


def cmd_selftest(args) -> int:
    from bnpricing.selftest import run_checks

    results = run_checks(perturb=args.perturb)
    print(f"backend={kernels.BACKEND}")
    width = max(len(r.name) for r in results)
    for r in results:
        print(f"{r.name:<{width}}  {'PASS' if r.passed else 'FAIL'}  {r.seconds:6.2f}s  {r.detail}")
    ok = all(r.passed for r in results)
    print(f"selftest={'pass' if ok else 'fail'}")
    return EXIT_OK if ok else EXIT_NUMERIC


# ------------------------------------------------------------------- parser

def _add_param_flags(p, inline_default: bool):
    d_tau = MCI_TAU0_BAR if inline_default else None
    d_a = MCI_A_BAR if inline_default else None
    p.add_argument("--tau0", type=float, default=d_tau, help="activity-time intercept")
    p.add_argument("--a", type=float, default=d_a, help="activity-time slope per year")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bnprice", description="Benchmark-neutral put pricing under the MMM.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, out_required=True):
        p.add_argument("--seed", type=int, default=42)
        p.add_argument("--out", type=Path, required=out_required)

    p = sub.add_parser("calibrate", help="fit the activity-time trendline to a date,value CSV")
    p.add_argument("--data", type=Path, required=True)
    common(p)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("price", help="fair and risk-neutral put prices at t=0")
    _add_param_flags(p, True)
    p.add_argument("--s0", type=float, default=100.0)
    p.add_argument("--strike", type=float, default=100.0)
    p.add_argument("--maturity", type=float, required=True)
    p.add_argument("--mc", type=int, default=0, help="exact Monte Carlo paths (0: off)")
    common(p, out_required=False)
    p.set_defaults(func=cmd_price)

    for name, func, text in (("compare", cmd_compare, "fair and risk-neutral put along a path"),
                             ("hedge", cmd_hedge, "delta-hedge backtest along a path")):
        p = sub.add_parser(name, help=text)
        p.add_argument("--data", type=Path, required=True)
        p.add_argument("--strike", type=float, default=100.0)
        _add_param_flags(p, False)
        p.add_argument("--params", type=Path, help="calibration summary file")
        p.set_defaults(s0=None)
        if name == "hedge":
            p.add_argument("--rule", default="fair", help="initial value: fair or rn")
        common(p)
        p.set_defaults(func=func)

    p = sub.add_parser("simulate", help="write a synthetic index path on business days")
    _add_param_flags(p, True)
    p.add_argument("--lambda-bar", dest="lambda_bar", type=float, default=1.0)
    p.add_argument("--s0", type=float, default=100.0)
    p.add_argument("--years", type=float, default=30.0)
    p.add_argument("--start", default="1984-01-02")
    p.add_argument("--measure", choices=("q", "p"), default="p")
    p.add_argument("--substeps", type=int, default=10, help="Euler steps per business day")
    common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("selftest", help="fast consistency checks")
    p.add_argument("--perturb", type=float, default=0.0, help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"bnprice: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"bnprice {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"bnprice {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (NumericalError, AssertionError, FloatingPointError) as exc:
        print(f"bnprice {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())

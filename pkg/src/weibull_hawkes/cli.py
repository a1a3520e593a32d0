"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
"""
import argparse
import csv
import logging
import os
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import dataio
from .basis import BasisConfig
from .granger import TriggerConfig, infectivity_report, top_impact_curves
from .learn import MODES, config_for_mode, em_fit
from .metrics import evaluate
from .simulate import SimConfig, simulate_many, synth_protocol

log = logging.getLogger("weibull_hawkes")

EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _ranged(kind, lo=None, hi=None, lo_open=False, hi_open=False):
    def check(text):
        try:
            v = kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"invalid {kind.__name__} value: {text!r}")
        if lo is not None and (v < lo or (lo_open and v == lo)):
            raise argparse.ArgumentTypeError(f"{v} must be {'>' if lo_open else '>='} {lo}")
        if hi is not None and (v > hi or (hi_open and v == hi)):
            raise argparse.ArgumentTypeError(f"{v} must be {'<' if hi_open else '<='} {hi}")
        return v
    return check


pos_float = _ranged(float, 0, lo_open=True)
nonneg_float = _ranged(float, 0)
pos_int = _ranged(int, 1)
nonneg_int = _ranged(int, 0)
fraction = _ranged(float, 0, 1, hi_open=True)


def _float_list(text):
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")
    if not vals or any(v < 0 for v in vals):
        raise argparse.ArgumentTypeError("values must be non-negative")
    return vals


def _int_list(text):
    try:
        vals = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not vals or any(v < 1 for v in vals):
        raise argparse.ArgumentTypeError("sizes must be >= 1")
    return vals


def _out_dir(args):
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _add_fit_flags(p):
    p.add_argument("--mode", choices=sorted(MODES), default="wb-sgl")
    p.add_argument("--alpha-s", type=nonneg_float, default=10.0)
    p.add_argument("--alpha-g", type=nonneg_float, default=100.0)
    p.add_argument("--alpha-rho", type=pos_float, default=0.5)
    p.add_argument("--k-rho", type=pos_int, default=5)
    p.add_argument("--inner-tol", type=pos_float, default=1e-6)
    p.add_argument("--max-inner", type=pos_int, default=100)
    p.add_argument("--max-outer", type=pos_int, default=200)
    p.add_argument("--validation-fraction", type=fraction, default=0.2)
    p.add_argument("--patience", type=nonneg_int, default=3)
    p.add_argument("--basis-m", type=pos_int, default=None, help="number of kernels (default 7)")
    p.add_argument("--basis-support", type=pos_float, default=None, help="impact support (default 5)")
    p.add_argument("--basis-bandwidth", type=pos_float, default=None,
                   help="kernel bandwidth (default half the center spacing)")


def _fit_config(args):
    return config_for_mode(
        args.mode, alpha_s=args.alpha_s, alpha_g=args.alpha_g, alpha_rho=args.alpha_rho,
        k_rho_steps=args.k_rho, inner_tol=args.inner_tol, max_inner=args.max_inner,
        max_outer=args.max_outer, validation_fraction=args.validation_fraction,
        patience=args.patience)


def _basis(args):
    m = args.basis_m if args.basis_m is not None else 7
    support = args.basis_support if args.basis_support is not None else 5.0
    return BasisConfig.evenly_spaced(m, support, args.basis_bandwidth)


def cmd_synth(args):
    out = _out_dir(args)
    n_total = args.n + args.n_test
    seqs, truth = synth_protocol(args.kind, n_total, horizon=args.T, seed=args.seed,
                                 constant_base=args.constant_base, threads=args.threads)
    dataio.write_dataset(seqs[:args.n], out / "events.csv", truth.c_count)
    if args.n_test:
        dataio.write_dataset(seqs[args.n:], out / "test_events.csv", truth.c_count)
    dataio.write_truth(truth, out / "truth.json")
    log.info("wrote %d training and %d test sequences to %s", args.n, args.n_test, out)


def cmd_simulate(args):
    out = _out_dir(args)
    model = dataio.read_model(args.model)
    cfg = SimConfig(horizon=args.T, seed=args.seed)
    seqs = simulate_many(model, cfg, args.n, threads=args.threads)
    dataio.write_dataset(seqs, out / "events.csv", model.c_count)


def cmd_fit(args):
    out = _out_dir(args)
    seqs = dataio.read_dataset(args.dataset)
    c_count = int(dataio.read_metadata(args.dataset)["c_count"])
    cfg = _fit_config(args)
    report = em_fit(seqs, cfg, init_seed=args.seed, basis=_basis(args), c_count=c_count)
    dataio.write_model(report.params, out / "model.json")
    doc = report.to_dict()
    doc["mode"] = args.mode
    doc["config"] = asdict(cfg)
    dataio.write_json(doc, out / "fit_report.json")
    log.info("fit stopped: %s after %d outer iterations", report.stop_reason, report.outer_iterations)
    if args.strict and report.stop_reason == "max_iterations":
        raise FloatingPointError("fit did not converge within max_outer iterations")


def cmd_eval(args):
    out = _out_dir(args)
    model = dataio.read_model(args.model)
    test = dataio.read_dataset(args.test)
    c_test = int(dataio.read_metadata(args.test)["c_count"])
    if c_test != model.c_count:
        raise dataio.DataError(f"model has C={model.c_count}, test data has C={c_test}")
    truth = dataio.read_truth(args.truth) if args.truth else None
    report = evaluate(model, test, truth, zero_threshold=args.zero_threshold)
    dataio.write_json(report.to_dict(), out / "metrics.json")


def cmd_granger(args):
    out = _out_dir(args)
    model = dataio.read_model(args.model)
    tcfg = TriggerConfig(delay_frac=args.delay_frac, min_delay=args.min_delay,
                         stable_window=args.stable_window, grid_points=args.grid_points)
    report = infectivity_report(model, args.threshold, tcfg)
    dataio.write_json(report.to_dict(), out / "infectivity.json")
    np.savetxt(out / "infectivity.csv", report.matrix, delimiter=",", fmt="%.12g")
    if args.top:
        curves_dir = out / "curves"
        curves_dir.mkdir(exist_ok=True)
        for rank, (src, tgt, grid, phi) in enumerate(top_impact_curves(model, args.top), start=1):
            name = curves_dir / f"top{rank:02d}_src{src + 1}_tgt{tgt + 1}.csv"
            with open(name, "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["t", "phi"])
                w.writerows((f"{t:.12g}", f"{v:.12g}") for t, v in zip(grid, phi))


SWEEP_FIELDS = ["kind", "mode", "param", "value", "n_train", "alpha_s", "alpha_g",
                "loglike_test", "e_mu", "e_rho", "e_h", "e_phi", "granger_accuracy",
                "stop_reason", "outer_iterations"]


def cmd_sweep(args):
    out = _out_dir(args)
    if args.param == "n":
        values = args.sizes
    elif args.log_grid is not None:
        lo, hi, count = args.log_grid
        if not (lo > 0 and hi > lo and count >= 1 and float(count).is_integer()):
            raise UsageError("--log-grid needs LO > 0, HI > LO and an integer COUNT >= 1")
        values = np.logspace(np.log10(lo), np.log10(hi), int(count)).tolist()
    elif args.values is not None:
        values = args.values
    else:
        raise UsageError("alpha sweeps need --values or --log-grid")
    n_max = max(values) if args.param == "n" else args.n
    seqs, truth = synth_protocol(args.kind, int(n_max) + args.n_test, horizon=args.T, seed=args.seed,
                                 constant_base=args.constant_base, threads=args.threads)
    train_all, test = seqs[:int(n_max)], seqs[int(n_max):]
    rows = []
    for v in values:
        a_s, a_g, n = args.alpha_s, args.alpha_g, int(n_max)
        if args.param == "alpha-s":
            a_s = v
        elif args.param == "alpha-g":
            a_g = v
        else:
            n = int(v)
        cfg = config_for_mode(args.mode, alpha_s=a_s, alpha_g=a_g, max_outer=args.max_outer)
        fit = em_fit(train_all[:n], cfg, init_seed=args.seed, c_count=truth.c_count)
        m = evaluate(fit.params, test or None, truth).to_dict()
        rows.append({"kind": args.kind, "mode": args.mode, "param": args.param, "value": f"{v:.12g}",
                     "n_train": n, "alpha_s": f"{cfg.alpha_s:.12g}", "alpha_g": f"{cfg.alpha_g:.12g}",
                     **{k: f"{m[k]:.12g}" if k in m else "" for k in SWEEP_FIELDS[7:13]},
                     "stop_reason": fit.stop_reason, "outer_iterations": fit.outer_iterations})
        log.info("sweep %s=%s done", args.param, v)
    with open(out / "sweep.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, SWEEP_FIELDS, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)


def build_parser():
    p = _Parser(prog="weibull-hawkes", description=__doc__)
    p.add_argument("--seed", type=nonneg_int, default=0)
    p.add_argument("--threads", type=pos_int, default=os.cpu_count() or 1)
    p.add_argument("--output", default=".", help="output directory")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("synth", help="simulate the five-type sine/square benchmark")
    s.add_argument("--kind", choices=["sine", "square"], required=True)
    s.add_argument("--n", type=pos_int, default=500)
    s.add_argument("--n-test", type=nonneg_int, default=0)
    s.add_argument("--T", type=pos_float, default=50.0)
    s.add_argument("--constant-base", action="store_true", help="force rho = 1")
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("simulate", help="simulate sequences from a model file")
    s.add_argument("--model", required=True)
    s.add_argument("--n", type=pos_int, default=100)
    s.add_argument("--T", type=pos_float, default=50.0)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("fit", help="fit a model to a dataset")
    s.add_argument("dataset")
    _add_fit_flags(s)
    s.add_argument("--strict", action="store_true", help="exit 3 when not converged")
    s.set_defaults(func=cmd_fit)

    s = sub.add_parser("eval", help="evaluate a model")
    s.add_argument("--model", required=True)
    s.add_argument("--test", required=True)
    s.add_argument("--truth")
    s.add_argument("--zero-threshold", type=pos_float, default=1e-2)
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("granger", help="infectivity matrix, causality graph, trigger patterns")
    s.add_argument("--model", required=True)
    s.add_argument("--threshold", type=nonneg_float, default=1e-2)
    s.add_argument("--top", type=nonneg_int, default=0)
    s.add_argument("--delay-frac", type=pos_float, default=0.1)
    s.add_argument("--min-delay", type=nonneg_float, default=1.0)
    s.add_argument("--stable-window", type=pos_float, default=50.0)
    s.add_argument("--grid-points", type=_ranged(int, 2), default=10_000)
    s.set_defaults(func=cmd_granger)

    s = sub.add_parser("sweep", help="metric curves over penalty weights or dataset sizes")
    s.add_argument("--kind", choices=["sine", "square"], default="sine")
    s.add_argument("--mode", choices=sorted(MODES), default="wb-sgl")
    s.add_argument("--param", choices=["alpha-s", "alpha-g", "n"], required=True)
    s.add_argument("--values", type=_float_list)
    s.add_argument("--log-grid", type=float, nargs=3, metavar=("LO", "HI", "COUNT"))
    s.add_argument("--sizes", type=_int_list, default=[50, 100, 150, 200, 250])
    s.add_argument("--n", type=pos_int, default=250)
    s.add_argument("--n-test", type=nonneg_int, default=50)
    s.add_argument("--T", type=pos_float, default=50.0)
    s.add_argument("--alpha-s", type=nonneg_float, default=10.0)
    s.add_argument("--alpha-g", type=nonneg_float, default=100.0)
    s.add_argument("--max-outer", type=pos_int, default=200)
    s.add_argument("--constant-base", action="store_true")
    s.set_defaults(func=cmd_sweep)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (dataio.DataError, FileNotFoundError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (FloatingPointError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return 0


if __name__ == "__main__":
    sys.exit(main())

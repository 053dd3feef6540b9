"""Command-line interface.

Exit codes: 0 success, 2 usage or invalid parameters, 3 solver failure,
4 data errors.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import analytic, csvio, evaluation, movement, numeric
from .core import IntegratorChain, MovementTask, ValidationError, check_order

log = logging.getLogger("sparsemotion")

EXIT_OK, EXIT_USAGE, EXIT_SOLVER, EXIT_DATA = 0, 2, 3, 4


class UsageError(Exception):
    pass


class DataFailure(Exception):
    pass


def order_arg(text):
    try:
        return check_order(int(text))
    except (ValueError, ValidationError) as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def positive_float(text):
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return v


def nonneg_float(text):
    v = float(text)
    if not v >= 0:
        raise argparse.ArgumentTypeError(f"must be non-negative, got {text}")
    return v


def _global_flags(suppress: bool) -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    default = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p.add_argument("--out", type=Path, default=default(Path(".")), help="output directory")
    p.add_argument("--seed", type=int, default=default(0), help="seed for all randomness")
    p.add_argument("--svg", action="store_true", default=default(False), help="also write SVG figures")
    return p


def _task_flags(p, D=1.0, T=1.0, order=True):
    if order:
        p.add_argument("--n", type=order_arg, required=True, help="integrator order (3 = jerk)")
    p.add_argument("--D", type=float, default=D, help="displacement (m)")
    p.add_argument("--T", type=positive_float, default=T, help="duration (s)")
    p.add_argument("--x0", type=float, default=0.0, help="start position (m)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sparsemotion", parents=[_global_flags(False)],
        description="Sparse (bang-bang) minimum-effort controls for integrator chains.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    g = [_global_flags(True)]

    p = sub.add_parser("generate", parents=g, help="closed-form signal, spike trains and trajectory")
    _task_flags(p)
    p.add_argument("--rate", type=positive_float, default=1000.0, help="trajectory sample rate (Hz)")

    p = sub.add_parser("encode", parents=g, help="encode a signal as a spike train")
    p.add_argument("--signal", type=Path, help="signal CSV (t,u); otherwise built from --n/--D/--T")
    p.add_argument("--n", type=order_arg)
    p.add_argument("--D", type=float, default=1.0)
    p.add_argument("--T", type=positive_float, default=1.0)
    p.add_argument("--mode", choices=("derivative", "paper", "both"), default="derivative")

    p = sub.add_parser("solve", parents=g, help="discretized numeric solve")
    _task_flags(p)
    p.add_argument("--N", type=int, default=numeric.DEFAULT_STEPS, help="number of hold steps")
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--l2", action="store_true", help="minimum L2-norm control")
    mode.add_argument("--soft", type=nonneg_float, metavar="W",
                      help="soft terminal constraint with effort weight W")
    p.add_argument("--inner", choices=("bvls", "pg"), default="bvls",
                   help="box least-squares method for --soft")

    p = sub.add_parser("simulate", parents=g, help="sample a model trajectory")
    _task_flags(p, order=False)
    p.add_argument("--n", type=order_arg, default=3)
    p.add_argument("--model", choices=("sparse", "quintic"), default="sparse")
    p.add_argument("--signal", type=Path, help="integrate this signal CSV instead")
    p.add_argument("--rate", type=positive_float, default=1000.0)

    p = sub.add_parser("synthesize", parents=g, help="write synthetic trials and a manifest")
    p.add_argument("--count", type=int, default=10)
    _task_flags(p, D=0.1, T=0.33, order=False)
    p.add_argument("--n", type=order_arg, default=3)
    p.add_argument("--model", choices=("sparse", "quintic"), default="sparse")
    p.add_argument("--noise", type=nonneg_float, default=0.0, help="position noise std (m)")
    p.add_argument("--rate", type=positive_float, default=1000.0)
    p.add_argument("--pad", type=nonneg_float, default=0.1, help="rest padding at each end (s)")
    p.add_argument("--subjects", type=int, default=1, help="number of subject tags to cycle through")
    p.add_argument("--movement-type", default="AB")

    p = sub.add_parser("analyze", parents=g, help="detect, fit and compare models on trials")
    p.add_argument("--manifest", type=Path, required=True)
    p.add_argument("--models", default="quintic,sparse3,sparse4,sparse5")
    p.add_argument("--threshold", type=float, default=movement.DEFAULT_THRESHOLD)
    p.add_argument("--smooth-window", type=int, default=movement.DEFAULT_SMOOTH_WINDOW)
    p.add_argument("--exclude", type=int, default=1, help="boundary samples dropped at each end")
    p.add_argument("--align", choices=("threshold", "segment"), default="threshold")

    p = sub.add_parser("compare", parents=g, help="pairwise rank-sum tests on per-trial MSEs")
    p.add_argument("--fits", type=Path, required=True, help="fits.csv written by analyze")
    p.add_argument("--models", default=None, help="comma-separated subset, in order")
    return parser


# commands --------------------------------------------------------------------


def _task(args) -> MovementTask:
    return MovementTask(args.x0, args.x0 + args.D, args.T)


def _trajectory_rows(traj, rate):
    series = analytic.sample_trajectory(traj, rate=rate)
    header = ["t"] + csvio.derivative_columns(traj.order + 1)
    return header, ([t, *row] for t, row in zip(series.times, series.values))


def cmd_generate(args):
    task = _task(args)
    signal = analytic.sparse_min_effort_signal(task, args.n)
    traj = analytic.integrate_trajectory(signal, args.n, task.x_start)
    out = args.out
    csvio.write_signal(signal, out / "signal.csv")
    spikes = {m: analytic.encode_spike_train(signal, m) for m in ("paper", "derivative")}
    for m, s in spikes.items():
        csvio.write_spikes(s, out / f"spikes_{m}.csv")
    csvio.write_rows(out / "trajectory.csv", *_trajectory_rows(traj, args.rate))
    if args.svg:
        from . import plotting
        plotting.plot_signal(signal, spikes["derivative"], traj, out / "generate.svg")
    switches = ",".join(repr(t) for t in signal.switch_times)
    print(f"K={signal.amplitude!r} first_sign={signal.first_sign:+d} switches={switches}")


def cmd_encode(args):
    if args.signal is not None:
        try:
            signal = csvio.read_signal(args.signal)
        except (OSError, csvio.CSVFormatError) as exc:
            raise DataFailure(str(exc)) from None
    else:
        if args.n is None:
            raise UsageError("give --signal or --n")
        signal = analytic.sparse_min_effort_signal(MovementTask(0.0, args.D, args.T), args.n)
    modes = ("paper", "derivative") if args.mode == "both" else (args.mode,)
    for m in modes:
        spikes = analytic.encode_spike_train(signal, m)
        path = csvio.write_spikes(spikes, args.out / f"spikes_{m}.csv")
        print(f"{m}: {len(spikes)} impulses -> {path}")


def cmd_solve(args):
    task = _task(args)
    chain = IntegratorChain(args.n)
    if args.N < 2 * (args.n + 1):
        raise UsageError(f"--N must be at least {2 * (args.n + 1)} for order {args.n}")
    if args.l2:
        report = numeric.solve_min_effort_l2(chain, task, args.N)
    elif args.soft is not None:
        xi = np.zeros(args.n)
        xf = np.zeros(args.n)
        xi[0], xf[0] = task.x_start, task.x_end
        report = numeric.solve_soft_terminal(chain, xi, xf, args.soft, task.duration, args.N, args.inner)
    else:
        report = numeric.solve_min_effort_linf(chain, task, args.N)
    csvio.write_rows(args.out / "solve.csv", ("k", "t", "u"), report.rows())
    print(report.summary())
    if args.svg:
        from . import plotting
        ref = analytic.sparse_min_effort_signal(task, args.n) if not args.l2 and args.soft is None else None
        plotting.plot_controls(report.control.times, {report.method: report.control.values},
                               args.out / "solve.svg", reference=ref)
    if not report.ok:
        print(f"solver status: {report.status}", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


def cmd_simulate(args):
    if args.signal is not None:
        try:
            signal = csvio.read_signal(args.signal)
        except (OSError, csvio.CSVFormatError) as exc:
            raise DataFailure(str(exc)) from None
        traj = analytic.integrate_trajectory(signal, signal.order, args.x0)
    else:
        traj = analytic.model_trajectory(_task(args), args.model, args.n)
    path = csvio.write_rows(args.out / "trajectory.csv", *_trajectory_rows(traj, args.rate))
    if args.svg:
        from . import plotting
        plotting.plot_trajectory(traj, args.out / "trajectory.svg")
    end = traj.state_at(traj.end)
    print(f"x(T)={end[0]!r} -> {path}")


def cmd_synthesize(args):
    if args.count < 0 or args.subjects < 1:
        raise UsageError("--count must be >= 0 and --subjects >= 1")
    task = _task(args)
    rng = np.random.default_rng(args.seed)
    entries = []
    width = max(3, len(str(max(args.count - 1, 0))))
    for i in range(args.count):
        tid = f"trial_{i:0{width}d}"
        subject = f"S{i % args.subjects + 1}"
        trial = movement.synthesize_trial(
            task, args.n, args.model, args.noise, args.rate, args.pad, args.pad,
            rng=rng, trial_id=tid, subject=subject, movement_type=args.movement_type)
        csvio.write_trial(trial, args.out)
        entries.append(csvio.ManifestEntry(f"{tid}.csv", subject, args.movement_type))
    path = csvio.write_manifest(entries, args.out / "manifest.csv")
    print(f"wrote {len(entries)} trials -> {path}")


FIT_HEADER = ("trial_id", "subject", "movement_type", "model", "mse", "samples_used",
              "onset", "offset", "duration", "model_duration")


def run_analysis(manifest, models, threshold=movement.DEFAULT_THRESHOLD,
                 smooth_window=movement.DEFAULT_SMOOTH_WINDOW, exclude=1, align="threshold"):
    """Load, detect and score every trial. Returns ``(fits, flagged, segments)``.

    ``flagged`` holds ``(id, flag, reason)`` rows for load failures,
    detection failures and outlier segments (outliers are still scored).
    """
    trials, failures = movement.load_trials(manifest)
    flagged = [(Path(f.file).stem, "load_error", f.reason) for f in failures]
    fits, segments = [], {}
    for trial in trials:
        try:
            v = movement.velocity_profile(trial, smooth_window)
            seg = movement.extract_segment(trial, threshold, smooth_window, velocity=v)
            row_fits = [evaluation.fit_and_score(seg, trial, m, exclude=exclude,
                                                 smooth_window=smooth_window, align=align, velocity=v)
                        for m in models]
        except (movement.DataError, ValidationError, ValueError) as exc:
            log.warning("trial %s not scored: %s", trial.id, exc)
            flagged.append((trial.id, "not_scored", str(exc)))
            continue
        for flag in seg.flags:
            flagged.append((trial.id, flag, "outlier: kept in the analysis"))
        segments[trial.id] = (trial, v, seg)
        fits.extend(row_fits)
    return fits, flagged, segments


def _write_comparison(path, rows):
    return csvio.write_rows(path, ("model_a", "model_b", "U", "p"),
                            ((r.model_a, r.model_b, r.U, r.p) for r in rows))


def cmd_analyze(args):
    try:
        models = [evaluation.ModelSpec.parse(m) for m in args.models.split(",") if m.strip()]
    except (ValueError, ValidationError) as exc:
        raise UsageError(str(exc)) from None
    if not models:
        raise UsageError("no models given")
    if not 0 < args.threshold < 1:
        raise UsageError("--threshold must be in (0, 1)")
    try:
        fits, flagged, segments = run_analysis(args.manifest, models, args.threshold,
                                               args.smooth_window, args.exclude, args.align)
    except movement.DataError as exc:
        raise DataFailure(str(exc)) from None
    out = args.out
    csvio.write_rows(out / "fits.csv", FIT_HEADER, (
        (f.trial_id, f.subject, f.movement_type, f.model.label, f.mse, f.samples_used,
         segments[f.trial_id][2].onset_index, segments[f.trial_id][2].offset_index,
         segments[f.trial_id][2].task.duration, f.model_task.duration)
        for f in fits))
    table = evaluation.aggregate(fits) if fits else []
    csvio.write_rows(out / "results.csv", ("subject", "movement_type", "model", "mean_mse", "n_trials"),
                     ((r.subject, r.movement_type, r.model, r.mean_mse, r.n_trials) for r in table))
    comparison = evaluation.compare_models(fits, [m.label for m in models])
    _write_comparison(out / "comparison.csv", comparison)
    csvio.write_rows(out / "flagged.csv", ("id", "flag", "reason"), flagged)
    if not fits:
        print("warning: no trials were scored", file=sys.stderr)
    if args.svg and table:
        from . import plotting
        plotting.plot_mse_bars(table, out / "analyze.svg")
        first = sorted(segments)[0]
        trial, v, seg = segments[first]
        plotting.plot_detection(trial, v, seg.onset_index, seg.offset_index, out / "detection.svg")
    for r in table:
        print(f"{r.subject}\t{r.movement_type}\t{r.model}\t{r.mean_mse!r}\t{r.n_trials}")
    for r in comparison:
        print(f"{r.model_a} vs {r.model_b}: U={r.U!r} p={r.p!r}")


def read_fits(path) -> list[evaluation.ModelFitResult]:
    """Minimal reload of fits.csv: enough for rank-sum comparisons."""
    _, rows = csvio.read_rows(path, FIT_HEADER[:5])
    out = []
    for line, f in rows:
        try:
            out.append(evaluation.ModelFitResult(
                f[0], f[1], f[2], evaluation.ModelSpec.parse(f[3]), float(f[4]), None, 0, None, 0.0))
        except (ValueError, IndexError) as exc:
            raise csvio.CSVFormatError(str(exc), path, line) from None
    return out


def cmd_compare(args):
    try:
        fits = read_fits(args.fits)
    except (OSError, csvio.CSVFormatError) as exc:
        raise DataFailure(str(exc)) from None
    labels = [m.strip() for m in args.models.split(",")] if args.models else None
    rows = evaluation.compare_models(fits, labels)
    path = _write_comparison(args.out / "comparison.csv", rows)
    for r in rows:
        print(f"{r.model_a} vs {r.model_b}: U={r.U!r} p={r.p!r}")
    print(f"-> {path}")


COMMANDS = {
    "generate": cmd_generate,
    "encode": cmd_encode,
    "solve": cmd_solve,
    "simulate": cmd_simulate,
    "synthesize": cmd_synthesize,
    "analyze": cmd_analyze,
    "compare": cmd_compare,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        code = COMMANDS[args.command](args)
    except UsageError as exc:
        parser.error(str(exc))
    except numeric.SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (DataFailure, analytic.DecodeError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ValidationError, ValueError) as exc:
        print(f"invalid parameters: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK if code is None else code


if __name__ == "__main__":
    sys.exit(main())

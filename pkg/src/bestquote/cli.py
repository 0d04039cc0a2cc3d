"""Command-line entry points: ``solve``, ``simulate``, ``estimate`` and ``compare``.

Exit codes: 0 success, 2 parameter error, 3 convergence or truncation error,
4 I/O or parse error.  Failures print one JSON line on stderr with the error
category and message.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import warnings
from pathlib import Path

from . import __version__
from .dists import DiscreteDist
from .errors import BestQuoteError, ParameterError
from .estimation import estimate, ingest, parse_window
from .params import FlowParams
from .report import compare, plot_data
from .simulator import SimConfig, histogram, simulate
from .stationary import MODEL_IDS, simulated_model_params, solve

EXIT_OK, EXIT_PARAMETER, EXIT_CONVERGENCE, EXIT_IO = 0, 2, 3, 4
_EXIT = {"parameter": EXIT_PARAMETER, "convergence": EXIT_CONVERGENCE, "truncation": EXIT_CONVERGENCE,
         "io": EXIT_IO}

# fields a parameter file must spell out for each model type
REQUIRED = {
    "0": ("lambda1", "mu", "theta1"),
    "1": ("lambda0", "lambda1", "muA", "theta1"),
    "2": ("lambda0", "lambda1", "mu", "muA", "theta1"),
}


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _write(path, text: str):
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True)
    path.write_text(text)


def _read_params(path) -> tuple[FlowParams, dict]:
    text = Path(path).read_text()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParameterError(f"{path}: not valid JSON ({exc})") from None
    if not isinstance(raw, dict):
        raise ParameterError(f"{path}: expected a key/value document")
    return FlowParams.from_dict(raw), raw


def _read_dist(path) -> DiscreteDist:
    return DiscreteDist.from_text(Path(path).read_text())


def _sidecar_path(path) -> Path:
    return Path(str(path) + ".json")


# --- commands ----------------------------------------------------------------------

def cmd_solve(args) -> int:
    if args.model not in MODEL_IDS:
        raise ParameterError(f"unknown model {args.model!r}; choose from {', '.join(MODEL_IDS)}")
    params, raw = _read_params(args.params)
    missing = [k for k in REQUIRED[args.model[0]] if raw.get(k) is None]
    if missing:
        raise ParameterError(f"model {args.model} needs {', '.join(missing)} in the parameter file")
    res = solve(args.model, params, truncation=args.truncation)
    _write(args.out, res.pi.to_text())
    meta = {"command": "solve", "version": __version__, "params": params.to_dict(), **res.sidecar()}
    _write(_sidecar_path(args.out), _dumps(meta))
    return EXIT_OK


def cmd_simulate(args) -> int:
    params, _ = _read_params(args.params)
    if args.model3:
        params = simulated_model_params(params, coupled=None if args.mode is None else args.mode == "coupled-queue")
    cfg = SimConfig(params, events=args.events, horizon=args.horizon, seed=args.seed, weighting=args.weighting
                    if args.weighting != "both" else "time", second_limit_mode=args.mode,
                    reset_policy=args.reset_policy, record_log=args.log, backend=args.backend)
    path = simulate(cfg)
    weightings = ("time", "event") if args.weighting == "both" else (args.weighting,)
    outputs = {}
    for w in weightings:
        h = histogram(path, w)
        name = f"{args.out}_{w}.txt"
        _write(name, h.to_text())
        outputs[w] = os.path.basename(name)
    if args.log:
        name = f"{args.out}_events.csv"
        _write(name, path.log.to_csv())
        outputs["events"] = os.path.basename(name)
    meta = {"command": "simulate", "version": __version__, "params": params.to_dict(),
            "events_requested": args.events, "horizon": args.horizon, "total_time": path.total_time,
            "event_counts": path.event_counts, "outputs": outputs, **path.metadata}
    meta.pop("backend", None)  # both backends give identical files
    _write(f"{args.out}.json", _dumps(meta))
    return EXIT_OK


def cmd_estimate(args) -> int:
    window = parse_window(args.window)
    if not Path(args.log).is_file():
        raise FileNotFoundError(f"no such log file: {args.log}")
    events = ingest(args.log, window)
    snapshots = None
    if args.snapshots:
        snapshots = [int(v) for v in Path(args.snapshots).read_text().split()]
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        params, stats = estimate(events, window, snapshots=snapshots)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    meta = {"command": "estimate", "version": __version__, "source": os.path.basename(args.log),
            "window": args.window, "stats": stats.to_dict()}
    _write(args.out, params.dumps(meta))
    stem = str(Path(args.out).with_suffix(""))
    for name, d in (("best_time", stats.best_time), ("best_event", stats.best_event)):
        if d is not None:
            _write(f"{stem}_{name}.txt", d.to_text())
    print(_dumps(stats.to_dict()), end="")
    return EXIT_OK


def _label(path) -> str:
    side = _sidecar_path(path)
    if side.is_file():
        try:
            mid = json.loads(side.read_text()).get("model_id")
        except json.JSONDecodeError:
            mid = None
        if mid:
            return str(mid)
    return Path(path).stem


def cmd_compare(args) -> int:
    emp_files = args.empirical
    if len(args.models) % len(emp_files):
        raise ParameterError("give the same number of model outputs for every empirical file")
    per = len(args.models) // len(emp_files)
    labels = args.labels or [_label(f) for f in args.models[:per]]
    if len(labels) != per or len(set(labels)) != per:
        raise ParameterError("model labels must be unique, one per model output")
    instruments = [Path(f).stem for f in emp_files]
    if len(set(instruments)) != len(instruments):
        instruments = [f"inst{i + 1}" for i in range(len(emp_files))]
    empirical = {inst: _read_dist(f) for inst, f in zip(instruments, emp_files)}
    models = {m: {} for m in labels}
    for j, inst in enumerate(instruments):
        for i, m in enumerate(labels):
            models[m][inst] = _read_dist(args.models[j * per + i])
    rep = compare(empirical, models)
    _write(f"{args.out}.txt", rep.to_text())
    _write(f"{args.out}.csv", rep.to_csv())
    for inst in instruments:
        body, tail = plot_data(empirical[inst], {m: models[m][inst] for m in labels})
        tag = "" if len(instruments) == 1 else f"_{inst}"
        _write(f"{args.out}{tag}_plot_body.dat", body)
        _write(f"{args.out}{tag}_plot_tail.dat", tail)
    print(rep.to_text(), end="")
    return EXIT_OK


# --- parser ----------------------------------------------------------------------------

def _u64(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ParameterError(message)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="bestquote", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("solve", help="stationary best-quote volume for one model")
    s.add_argument("--model", required=True)
    s.add_argument("--params", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--truncation", type=int, default=None, metavar="N")
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("simulate", help="simulate the best-quote volume")
    s.add_argument("--params", required=True)
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument("--events", type=int)
    g.add_argument("--horizon", type=float)
    s.add_argument("--seed", type=_u64, required=True)
    s.add_argument("--weighting", choices=("time", "event", "both"), default="time")
    s.add_argument("--out", required=True, metavar="PREFIX")
    s.add_argument("--mode", choices=("coupled-queue", "resample-from-dist"), default=None)
    s.add_argument("--reset-policy", choices=("stationary", "one"), default="stationary")
    s.add_argument("--model3", action="store_true", help="use every size law as observed (empirical)")
    s.add_argument("--log", action="store_true", help="also write the event log CSV")
    s.add_argument("--backend", choices=("cython", "python"), default=None)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("estimate", help="estimate flow parameters from an event log")
    s.add_argument("--log", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--window", default="10:00-16:00", help="HH:MM-HH:MM, or 'all'")
    s.add_argument("--snapshots", default=None, help="best-volume snapshots, used when the log has none")
    s.set_defaults(func=cmd_estimate)

    s = sub.add_parser("compare", help="rank model outputs against empirical distributions")
    s.add_argument("--empirical", required=True, nargs="+")
    s.add_argument("--models", required=True, nargs="+")
    s.add_argument("--labels", nargs="+", default=None)
    s.add_argument("--out", required=True, metavar="PREFIX")
    s.set_defaults(func=cmd_compare)
    return ap


def _fail(category: str, message: str) -> int:
    print(json.dumps({"error": category, "message": message}), file=sys.stderr)
    return _EXIT[category]


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except BestQuoteError as exc:
        return _fail(exc.category, str(exc))
    except OSError as exc:
        return _fail("io", str(exc))
    except ValueError as exc:
        return _fail("parameter", str(exc))


if __name__ == "__main__":
    sys.exit(main())

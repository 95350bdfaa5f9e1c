"""Command-line front end.

    hcdep simulate  --n 1024 --alpha 0.5 --alpha0 0.1 --count 10 --seed 1 --out paths.csv
    hcdep detect    --input paths.csv --detector hc --threshold 2.2 --out det.json
    hcdep mc        --n 65536 --alpha 0.5 --alpha0 0.1 --beta 0.6 --r 0.35 \\
                    --detector hc --threshold 2.2 --reps 100 --seed 7 --out rep.json
    hcdep table1    --log2n 10,12,14,16 --reps 100 --seed 7 --out table1.csv
    hcdep boundary  --kappa 0,0.2,0.4,0.6 --out fig1.csv
    hcdep check     --name tail-deficit --seed 1 --out deficit.json

Every option can also come from a JSON file given with ``--config``; flags
override file values. Exit status: 0 success, 1 invalid configuration,
2 resource limits. Outputs are written to a temporary file and renamed.
"""

import argparse
import csv
import io
import json
import os
import sys
import tempfile

import numpy as np

from . import __version__, checks
from .detectors import default_grid, hc_detect, max_classifier, ndd_detect
from .errors import DomainError, HCDepError, ResourceError
from .experiments import CSV_COLUMNS, ExperimentConfig, run_experiment, table1_summary
from .gp import AutocovSpec, embed, read_paths_csv, simulate_paths, write_paths_csv
from .signals import NDDConfig, SignalSpec, boundary_curve

SUBCOMMANDS = ("simulate", "detect", "mc", "table1", "boundary", "check")
SEED_ENV = "HCDEP_SEED"

DEFAULTS = {
    "detector": "hc",
    "reps": 100,
    "refinement": 512,
    "mode": "signed",
    "placement": "uniform",
    "ndd_sites": 1,
    "threads": 1,
}

# key -> (type, help). Lists are comma separated on the command line.
OPTIONS = {
    "n": ("intlist", "series length(s)"),
    "log2n": ("intlist", "series lengths as powers of two"),
    "alpha": ("float", "covariance exponent alpha"),
    "alpha0": ("floatlist", "covariance exponent(s) alpha0"),
    "beta": ("float", "sparsity exponent in (1/2, 1)"),
    "r": ("float", "strength exponent in (0, 1)"),
    "r_ndd": ("float", "NDD signal strength exponent (> 1)"),
    "C": ("float", "NDD test constant, 1 <= C < r_ndd"),
    "q": ("float", "level exponent, t = sqrt(2 q log n)"),
    "lambda": ("float", "block exponent in (0, kappa)"),
    "kappa": ("floatlist", "kappa values for boundary curves"),
    "beta_points": ("int", "beta grid size for boundary curves"),
    "detector": ("str", "hc | max | ndd"),
    "threshold": ("float", "threshold on the normalized statistic"),
    "reps": ("int", "Monte Carlo replicates"),
    "count": ("int", "number of paths to simulate"),
    "seed": ("int", "master seed (required for random subcommands)"),
    "refinement": ("int", "HC refinement grid size"),
    "mode": ("str", "signed | absolute"),
    "placement": ("str", "uniform | blockwise"),
    "alternative": ("str", "dependent | independent | ndd"),
    "ndd_sites": ("int", "number of NDD signal sites"),
    "input": ("str", "input CSV of paths"),
    "name": ("str", "check name, or 'all'"),
    "out": ("str", "output file"),
    "threads": ("int", "worker threads (never changes results)"),
}

NEEDS_SEED = {"simulate", "mc", "table1", "check"}


class ValidationError(HCDepError):
    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ValidationError([message])


def _convert(key, kind, value):
    if value is None:
        return None
    try:
        if kind == "int":
            return int(value)
        if kind == "float":
            return float(value)
        if kind == "str":
            return str(value)
        if isinstance(value, (list, tuple)):
            items = list(value)
        elif isinstance(value, str):
            items = [v for v in value.split(",") if v.strip()]
        else:
            items = [value]
        conv = int if kind == "intlist" else float
        return [conv(v) for v in items]
    except (TypeError, ValueError):
        raise ValidationError([f"{key}: cannot parse {value!r} as {kind}"])


def build_parser():
    parser = _Parser(prog="hcdep", description="Higher criticism under strong dependence.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand")
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.error = parser.error
        p.add_argument("--config", help="JSON file with the same keys as the flags")
        for key, (_, help_text) in OPTIONS.items():
            flag = "--" + key.replace("_", "-")
            p.add_argument(flag, dest=key, default=None, help=help_text)
    return parser


def load_config(argv):
    """Parse argv (and an optional JSON config file) into a raw dict."""
    args = build_parser().parse_args(argv)
    if args.subcommand is None:
        raise ValidationError(["a subcommand is required: " + ", ".join(SUBCOMMANDS)])
    cfg = {}
    if args.config:
        try:
            with open(args.config) as fh:
                loaded = json.load(fh)
        except (OSError, ValueError) as exc:
            raise ValidationError([f"config: cannot read {args.config}: {exc}"])
        if not isinstance(loaded, dict):
            raise ValidationError(["config: file must hold a JSON object"])
        cfg.update(loaded)
    for key in OPTIONS:
        value = getattr(args, key)
        if value is not None:
            cfg[key] = value
    cfg["subcommand"] = args.subcommand
    return cfg


def _scalar(cfg, key):
    v = cfg.get(key)
    if isinstance(v, list):
        return v[0] if len(v) == 1 else v
    return v


def validate(cfg):
    """Return a normalized copy of ``cfg``; raise ValidationError listing every problem.

    Idempotent: validating a normalized config returns it unchanged.
    """
    errors = []
    out = {}
    sub = cfg.get("subcommand")
    if sub not in SUBCOMMANDS:
        raise ValidationError([f"subcommand: must be one of {', '.join(SUBCOMMANDS)}"])
    out["subcommand"] = sub
    for key, value in cfg.items():
        if key == "subcommand":
            continue
        if key not in OPTIONS:
            errors.append(f"{key}: unknown key")
            continue
        try:
            out[key] = _convert(key, OPTIONS[key][0], value)
        except ValidationError as exc:
            errors.extend(exc.errors)
    for key, value in DEFAULTS.items():
        out.setdefault(key, value)

    if "log2n" in out:
        if "n" in out:
            errors.append("n: give either n or log2n, not both")
        else:
            out["n"] = [2**k for k in out["log2n"]]
        del out["log2n"]

    if sub in NEEDS_SEED and out.get("seed") is None:
        msg = "seed: an explicit --seed is required"
        if os.environ.get(SEED_ENV):
            msg += f" ({SEED_ENV} from the environment is not honoured)"
        errors.append(msg)
    if sub != "boundary" and sub != "check" and sub != "detect" and not out.get("out"):
        errors.append("out: an output path is required")
    if sub == "boundary" and not out.get("out"):
        errors.append("out: an output path is required")

    if out["detector"] not in ("hc", "max", "ndd"):
        errors.append("detector: must be hc, max or ndd")
    if out["mode"] not in ("signed", "absolute"):
        errors.append("mode: must be signed or absolute")
    if out["placement"] not in ("uniform", "blockwise"):
        errors.append("placement: must be uniform or blockwise")
    if out.get("alternative") not in (None, "dependent", "independent", "ndd"):
        errors.append("alternative: must be dependent, independent or ndd")
    for key in ("reps", "count", "refinement", "ndd_sites", "threads", "beta_points"):
        if out.get(key) is not None and out[key] < 1:
            errors.append(f"{key}: must be at least 1")
    if out["refinement"] < 2:
        errors.append("refinement: must be at least 2")

    beta = out.get("beta")
    if beta is not None and not 0.5 < beta < 1.0:
        errors.append("beta must lie in (1/2, 1)")
    r = out.get("r")
    if r is not None and not 0.0 < r < 1.0:
        errors.append("r must lie in (0, 1) (use r_ndd for the neighbor-difference signal)")
    if (beta is None) != (r is None) and sub == "mc":
        errors.append("beta/r: give both or neither")
    r_ndd, C = out.get("r_ndd"), out.get("C")
    if r_ndd is not None and r_ndd <= 1:
        errors.append("r_ndd must exceed 1")
    if C is not None and C < 1:
        errors.append("C must be at least 1")
    if r_ndd is not None and C is not None and not C < r_ndd:
        errors.append("C must be smaller than r_ndd")
    if out.get("q") is not None and out["q"] <= 0:
        errors.append("q must be positive")
    if out.get("lambda") is not None and out["lambda"] <= 0:
        errors.append("lambda must be positive")
    for n in out.get("n") or []:
        if n < 1:
            errors.append("n: every length must be a positive integer")
    alpha = out.get("alpha")
    if alpha is not None and alpha <= 0:
        errors.append("alpha must be positive")
    for a0 in out.get("alpha0") or []:
        if a0 < 0:
            errors.append("alpha0 must be non-negative")
    for k in out.get("kappa") or []:
        if not 0.0 <= k < 1.0:
            errors.append("kappa: each value must lie in [0, 1)")

    if sub in ("simulate", "mc", "table1"):
        if sub != "table1":
            for key in ("n", "alpha", "alpha0"):
                if out.get(key) is None:
                    errors.append(f"{key}: required for {sub}")
        else:
            out.setdefault("n", [2**10, 2**12, 2**14, 2**16])
            out.setdefault("alpha", 0.5)
            out.setdefault("alpha0", [0.1])
    if sub == "simulate":
        out.setdefault("count", 1)
    if sub == "boundary":
        out.setdefault("kappa", [0.0, 0.2, 0.4, 0.6])
        out.setdefault("beta_points", 101)
    if sub == "detect" and not out.get("input"):
        errors.append("input: a CSV of paths is required for detect")
    if sub == "check":
        out.setdefault("name", "all")
        if out["name"] != "all" and out["name"] not in checks.CHECKS:
            errors.append(f"name: unknown check {out['name']!r}; choose from "
                          + ", ".join(sorted(checks.CHECKS)) + " or all")

    needs_hc = sub in ("mc", "table1") and out["detector"] == "hc"
    if sub == "table1":
        needs_hc = True
    if needs_hc and alpha:
        for a0 in out.get("alpha0") or []:
            if a0 / alpha >= 1:
                errors.append(
                    f"alpha0={a0}: kappa = alpha0/alpha = {a0 / alpha:g} >= 1 is the degenerate "
                    "regime (effective sample size one, see the kappa >= 1 discussion); "
                    "hc is not defined there"
                )
    if sub == "mc":
        if out["detector"] == "hc" and out.get("threshold") is None:
            errors.append("threshold: required for the hc detector")
        if (out["detector"] == "ndd" or out.get("alternative") == "ndd") and (r_ndd is None or C is None):
            errors.append("r_ndd/C: required for the ndd detector or alternative")
    if sub == "detect" and out["detector"] == "ndd" and C is None:
        errors.append("C: required for the ndd detector")
    if sub == "detect" and out["detector"] == "hc" and out.get("threshold") is None:
        errors.append("threshold: required for the hc detector")

    if errors:
        raise ValidationError(errors)
    return out


def _resolved(cfg):
    """Config echo for outputs; ``threads`` and ``out`` never affect content."""
    return {k: v for k, v in sorted(cfg.items()) if k not in ("threads", "out", "config")}


def write_atomic(path, text):
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".hcdep-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _dump_json(obj):
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n"


def _config_comment(cfg):
    return "# config=" + json.dumps(_resolved(cfg), sort_keys=True, separators=(",", ":")) + "\n"


def _cmd_simulate(cfg):
    acov = AutocovSpec(_scalar(cfg, "n"), cfg["alpha"], _scalar(cfg, "alpha0"))
    paths = simulate_paths(acov, cfg["count"], cfg["seed"])
    buf = io.StringIO()
    write_paths_csv(paths, buf, cfg["seed"])
    return buf.getvalue()


def _cmd_detect(cfg):
    with open(cfg["input"]) as fh:
        header, rows = read_paths_csv(fh)
    if rows.size == 0:
        raise ValidationError(["input: no data rows"])
    alpha = cfg.get("alpha", float(header["alpha"]) if "alpha" in header else None)
    alpha0 = _scalar(cfg, "alpha0")
    if alpha0 is None and "alpha0" in header:
        alpha0 = float(header["alpha0"])
    records = []
    for values in rows:
        det = cfg["detector"]
        if det == "hc":
            if alpha is None or alpha0 is None:
                raise ValidationError(["alpha/alpha0: needed (flags or CSV header) for hc"])
            grid = default_grid(AutocovSpec(len(values), alpha, alpha0), cfg["refinement"],
                                cfg["mode"])
            res = hc_detect(values, grid, cfg["threshold"])
        elif det == "max":
            res = max_classifier(values)
        else:
            if alpha0 is None:
                raise ValidationError(["alpha0: needed (flag or CSV header) for ndd"])
            res = ndd_detect(values, alpha0, cfg["C"])
        records.append(res.to_json())
    return _dump_json({"config": _resolved(cfg), "detections": records})


def _experiment_configs(cfg):
    sig = SignalSpec(cfg["beta"], cfg["r"]) if cfg.get("beta") is not None else None
    ndd = NDDConfig(cfg["r_ndd"], cfg["C"]) if cfg.get("r_ndd") is not None else None
    for n in cfg["n"]:
        for a0 in cfg["alpha0"]:
            yield ExperimentConfig(
                AutocovSpec(n, cfg["alpha"], a0), cfg["detector"], cfg.get("threshold"),
                cfg["reps"], cfg["seed"], sig=sig, ndd=ndd, alternative=cfg.get("alternative"),
                ndd_sites=cfg["ndd_sites"], refinement=cfg["refinement"], mode=cfg["mode"],
                placement=cfg["placement"],
            )


def _cmd_mc(cfg):
    reports = [run_experiment(c, threads=cfg["threads"]) for c in _experiment_configs(cfg)]
    if cfg["out"].endswith(".csv"):
        buf = io.StringIO()
        buf.write(_config_comment(cfg))
        w = csv.DictWriter(buf, CSV_COLUMNS, lineterminator="\n")
        w.writeheader()
        for rep in reports:
            w.writerow({k: ("" if v is None else v) for k, v in rep.csv_row().items()})
        return buf.getvalue()
    if len(reports) == 1:
        body = reports[0].to_json()
    else:
        body = {"reports": [r.to_json() for r in reports]}
    body["resolved_config"] = _resolved(cfg)
    return _dump_json(body)


def _cmd_table1(cfg):
    buf = io.StringIO()
    buf.write(_config_comment(cfg))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "kappa", "alpha", "alpha0", "reps", "null_mean", "null_sd", "degenerate",
                "exact_embedding", "seed"])
    for a0 in cfg["alpha0"]:
        rows = table1_summary(cfg["n"], cfg["reps"], cfg["seed"], cfg["alpha"], a0,
                              cfg["refinement"], cfg["threads"])
        for row in rows:
            exact = embed(AutocovSpec(row.n, cfg["alpha"], a0)).exact
            w.writerow([row.n, a0 / cfg["alpha"], cfg["alpha"], a0, row.reps, repr(row.mean),
                        repr(row.sd), int(row.degenerate), int(exact), cfg["seed"]])
    return buf.getvalue()


def _cmd_boundary(cfg):
    k = cfg["beta_points"]
    # Open interval (1/2, 1): drop the end points.
    betas = np.linspace(0.5, 1.0, k + 2)[1:-1]
    buf = io.StringIO()
    buf.write(_config_comment(cfg))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["kappa", "beta", "r", "beta_prime", "r_prime", "kind"])
    for kappa in cfg["kappa"]:
        points, level = boundary_curve(kappa, betas)
        for beta, r, bp, rp in points:
            w.writerow([repr(kappa), repr(beta), repr(r), repr(bp), repr(rp), "boundary"])
        # Dashed reference line r' = 1 - kappa across the same beta' range.
        for beta in (0.5, 1.0):
            w.writerow([repr(kappa), repr(beta), "", repr((1 - kappa) * beta), repr(level),
                        "reference"])
    return buf.getvalue()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _cmd_check(cfg):
    names = sorted(checks.CHECKS) if cfg["name"] == "all" else [cfg["name"]]
    results = {}
    for name in names:
        fn = checks.CHECKS[name]
        kwargs = {}
        if "seed" in fn.__code__.co_varnames:
            kwargs["seed"] = cfg["seed"]
        if "threads" in fn.__code__.co_varnames:
            kwargs["threads"] = cfg["threads"]
        res = fn(**kwargs)
        results[name] = _jsonable(res)
        print(f"{'PASS' if res['passed'] else 'FAIL'}  {name}", file=sys.stderr)
    return _dump_json({"config": _resolved(cfg), "checks": results})


COMMANDS = {
    "simulate": _cmd_simulate,
    "detect": _cmd_detect,
    "mc": _cmd_mc,
    "table1": _cmd_table1,
    "boundary": _cmd_boundary,
    "check": _cmd_check,
}


def dispatch(cfg):
    """Run a validated config; returns the output text (also written to cfg['out'])."""
    text = COMMANDS[cfg["subcommand"]](cfg)
    if cfg.get("out"):
        write_atomic(cfg["out"], text)
    else:
        sys.stdout.write(text)
    return text


def main(argv=None):
    try:
        cfg = validate(load_config(sys.argv[1:] if argv is None else argv))
        dispatch(cfg)
    except ValidationError as exc:
        for err in exc.errors:
            print(f"error: {err}", file=sys.stderr)
        return 1
    except ResourceError as exc:
        print(f"resource error: {exc}", file=sys.stderr)
        return 2
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

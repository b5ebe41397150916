"""Command-line entry point: ``python3 -m poisson_noma <command> ...``.

Every command writes a data file (CSV with a header row, or JSON carrying a
``schema`` key) and, when the data goes to a file, a sidecar
``<output>.manifest.json`` recording the resolved options, seed, version,
duration and the SHA-256 of the data.  ``--from-manifest`` re-runs a command
with the options stored in a manifest.

Exit codes: 0 success, 2 infeasible allocation, 3 configuration error,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
import time

import numpy as np

from . import __version__
from .allocation import (
    Access,
    SearchGrid,
    rate_region_n2,
    solve_symmetric,
    solve_tmt,
    sweep_beta,
    sweep_cluster_size,
)
from .coverage import decoding_thresholds, evaluator_for
from .model import ClusterSpec, ConfigError, Model, NetworkConfig, Ordering, load_config
from .montecarlo import (
    EmpiricalCoverage,
    estimate_noma_coverage_sweep,
    estimate_served_fraction,
    sample_realization,
)
from .numerics import NumericalFailure

EXIT_OK, EXIT_INFEASIBLE, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3, 4
THREADS_ENV = "POISSON_NOMA_THREADS"

# options that do not influence the data and are not replayed
_NOT_REPLAYED = {"output", "manifest", "from_manifest", "threads", "func", "command"}


# ---------------------------------------------------------------------------
# option parsing helpers
# ---------------------------------------------------------------------------


def _float_list(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _int_list(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _range_or_list(text, cast=float):
    """'lo:hi:step' (inclusive) or a comma list."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) not in (2, 3):
            raise argparse.ArgumentTypeError(f"bad range {text!r}")
        lo, hi = cast(parts[0]), cast(parts[1])
        step = cast(parts[2]) if len(parts) == 3 else cast(1)
        if step <= 0 or hi < lo:
            raise argparse.ArgumentTypeError(f"bad range {text!r}")
        count = int(math.floor((hi - lo) / step + 1e-9)) + 1
        return [cast(lo + k * step) for k in range(count)]
    return _int_list(text) if cast is int else _float_list(text)


def _theta_spec(text):
    return _range_or_list(text, float)


def _n_spec(text):
    return _range_or_list(text, int)


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _db(x):
    return round(10 * math.log10(x), 9)


def _csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _json_text(doc):
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def _resolve_threads(args):
    if args.threads is not None:
        return max(1, args.threads)
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"{THREADS_ENV} must be an integer, got {env!r}") from None
    return 1


def _network(args):
    """Config file values overridden by explicit flags."""
    if args.config:
        cfg, spec = load_config(args.config)
        base = {
            "lam": cfg.lam,
            "eta": cfg.eta,
            "sigma2_dbm": 10 * math.log10(cfg.sigma2 * 1e3) if cfg.sigma2 > 0 else None,
            "beta": cfg.beta,
            "model": spec.model.value,
            "phi": spec.phi,
            "n_ues": spec.n_ues,
            "ordering": spec.ordering.value,
        }
    else:
        base = {"lam": 10.0, "eta": 4.0, "sigma2_dbm": -90.0, "beta": 0.0, "model": "model1",
                "phi": None, "n_ues": None, "ordering": "msp"}
    for key in base:
        val = getattr(args, key, None)
        if val is not None:
            base[key] = val
    for key, val in base.items():
        setattr(args, key, val)
    try:
        sigma2 = 0.0 if args.sigma2_dbm is None else 10 ** (args.sigma2_dbm / 10) * 1e-3
        cfg = NetworkConfig(lam=float(args.lam), eta=float(args.eta), sigma2=sigma2, beta=float(args.beta))
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    return cfg


def _spec(args, n, ordering=None):
    try:
        model = Model(args.model)
    except ValueError:
        raise ConfigError(f"unknown model {args.model!r}") from None
    try:
        ordering = Ordering(ordering or args.ordering)
    except ValueError:
        raise ConfigError(f"unknown ordering {args.ordering!r}") from None
    return ClusterSpec(model=model, n_ues=n, ordering=ordering, phi=args.phi)


def _grid(args):
    try:
        return SearchGrid(args.theta_lb, args.theta_ub, args.dtheta, args.dp)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _default_powers(n):
    # 1:2:...:N split, weakest UE strongest message
    w = np.arange(1, n + 1, dtype=float)
    return w / w.sum()


def _powers(args, n):
    if args.powers is None:
        return _default_powers(n)
    p = np.asarray(args.powers, dtype=float)
    if p.size != n:
        raise ConfigError(f"--powers has {p.size} entries for {n} UEs")
    if np.any(p < 0) or p.sum() > 1 + 1e-12:
        raise ConfigError("--powers must be non-negative and sum to at most 1")
    return p


# ---------------------------------------------------------------------------
# commands: each returns (data text, exit code)
# ---------------------------------------------------------------------------


def cmd_coverage(args):
    cfg = _network(args)
    n = args.n_ues or 3
    args.n_ues = n
    p = _powers(args, n)
    thetas_db = args.theta_db
    orderings = args.orderings
    rows = []
    for ordering in orderings:
        spec = _spec(args, n, ordering)
        thetas = [np.full(n, 10 ** (t / 10)) for t in thetas_db]
        analytic = None
        if spec.analytic:
            ev = evaluator_for(cfg, spec)
            analytic = []
            for t_db, th in zip(thetas_db, thetas):
                m = decoding_thresholds(p, th, cfg.beta)
                vals = []
                for i in range(1, n + 1):
                    try:
                        vals.append(ev.rank_coverage(i, m[i - 1]))
                    except NumericalFailure as exc:
                        raise NumericalFailure(f"theta={t_db} dB, rank={i}: {exc}") from exc
                analytic.append(vals)
        mc = None
        if args.mc_trials > 0:
            mc = estimate_noma_coverage_sweep(cfg, spec, p, thetas, args.mc_trials, args.seed,
                                              workers=args.workers)
        for k, t_db in enumerate(thetas_db):
            for i in range(1, n + 1):
                a = analytic[k][i - 1] if analytic is not None else None
                m_mean = mc[k][i - 1].mean if mc is not None else None
                m_se = mc[k][i - 1].stderr if mc is not None else None
                rows.append((t_db, i, ordering, a, m_mean, m_se))
    header = ["theta_db", "rank", "ordering", "analytical", "mc_mean", "mc_stderr"]
    if args.format == "json":
        doc = {
            "schema": "poisson_noma.coverage/1",
            "powers": p.tolist(),
            "rows": [dict(zip(header, r)) for r in rows],
        }
        return _json_text(doc), EXIT_OK
    return _csv_text(header, rows), EXIT_OK


def cmd_rate_region(args):
    cfg = _network(args)
    args.n_ues = 2
    spec = _spec(args, 2)
    access = Access.OMA if args.access == "tdma" else Access.NOMA
    pts = rate_region_n2(cfg, spec, _grid(args), access)
    first = "t1" if access is Access.OMA else "p1"
    header = [first, "r1", "r2", "theta1_db", "theta2_db"]
    rows = [(pt.p1, pt.r1, pt.r2, _db(pt.theta1), _db(pt.theta2)) for pt in pts]
    return _csv_text(header, rows), EXIT_OK


def cmd_allocate(args):
    cfg = _network(args)
    n = args.n_ues or 2
    args.n_ues = n
    spec = _spec(args, n)
    grid = _grid(args)
    access = Access.OMA if args.access == "tdma" else Access.NOMA
    if args.mc_trials < 0:
        raise ConfigError("--mc-trials must be >= 0")
    if args.problem == "tmt" and args.tmt is None:
        raise ConfigError("--tmt is required for the tmt problem")
    ev = None
    if args.mc_trials > 0:
        ev = EmpiricalCoverage(cfg, spec, args.mc_trials, args.seed, workers=args.workers)
    if args.problem == "symmetric":
        sol = solve_symmetric(cfg, spec, grid, access, evaluator=ev)
    else:
        sol = solve_tmt(cfg, spec, args.tmt, grid, access, evaluator=ev)
    doc = {"schema": "poisson_noma.allocation/1", "problem": args.problem, "tmt": args.tmt,
           "solution": sol.to_dict()}
    return _json_text(doc), (EXIT_OK if sol.feasible else EXIT_INFEASIBLE)


def cmd_sweep(args):
    cfg = _network(args)
    grid = _grid(args)
    tmt = None if args.problem == "symmetric" else args.tmt
    if args.problem == "tmt" and tmt is None:
        raise ConfigError("--tmt is required for the tmt problem")
    workers = args.workers
    if args.axis is None:
        raise ConfigError("--axis is required")
    if args.axis == "n":
        models = args.models or [args.model]
        betas = args.betas or [args.beta]
        rows = []
        for model in models:
            args.model = model
            spec = _spec(args, 1)
            oma = sweep_cluster_size(cfg, spec, args.n_range, tmt, grid, Access.OMA, workers=workers)
            for beta in betas:
                sw = sweep_cluster_size(cfg.with_beta(beta), spec, args.n_range, tmt, grid, Access.NOMA,
                                        workers=workers)
                for k, n in enumerate(sw.n_values):
                    s, o = sw.solutions[k], oma.solutions[k]
                    rows.append((model, beta, n, s.cell_sum_rate, s.feasible, o.cell_sum_rate, o.feasible,
                                 sw.optimum_n, sw.max_supported_n))
        header = ["model", "beta", "n", "noma_sum_rate", "noma_feasible", "oma_sum_rate", "oma_feasible",
                  "noma_optimum_n", "noma_max_n"]
        return _csv_text(header, rows), EXIT_OK

    if tmt is None:
        raise ConfigError("the beta axis needs --problem tmt")
    n_values = args.n_values or [args.n_ues or 2]
    tmts = args.tmts or [tmt]
    rows = []
    for n in n_values:
        spec = _spec(args, n)
        for t in tmts:
            bs = sweep_beta(cfg, spec, t, args.betas or list(np.round(np.linspace(0, 1, 11), 12)),
                            grid, workers=workers)
            for beta, s in zip(bs.betas, bs.noma):
                rows.append((n, t, beta, s.cell_sum_rate, s.feasible, bs.oma_sum_rate, bs.oma.feasible,
                             bs.crossing_beta))
    header = ["n", "tmt", "beta", "noma_sum_rate", "noma_feasible", "oma_sum_rate", "oma_feasible",
              "crossing_beta"]
    return _csv_text(header, rows), EXIT_OK


def cmd_simulate(args):
    cfg = _network(args)
    n = args.n_ues or 3
    args.n_ues = n
    if args.stienen:
        phi = args.phi if args.phi is not None else 2 * math.pi
        est = estimate_served_fraction(cfg, phi, args.n_trials, args.seed)
        doc = {"schema": "poisson_noma.stienen/1", "phi": phi, "served_fraction": est.mean,
               "stderr": est.stderr, "n_trials": est.n_trials, "seed": est.seed}
        return _json_text(doc), EXIT_OK
    spec = _spec(args, n)
    if args.dump:
        reals = [json.loads(sample_realization(cfg, spec, args.seed + k).to_json()) for k in range(args.dump)]
        return _json_text({"schema": "poisson_noma.realizations/1", "realizations": reals}), EXIT_OK
    p = _powers(args, n)
    thetas = [np.full(n, 10 ** (t / 10)) for t in args.theta_db]
    mc = estimate_noma_coverage_sweep(cfg, spec, p, thetas, args.n_trials, args.seed, workers=args.workers)
    rows = [(t, i, spec.ordering.value, est.mean, est.stderr)
            for t, per in zip(args.theta_db, mc) for i, est in enumerate(per, start=1)]
    return _csv_text(["theta_db", "rank", "ordering", "mc_mean", "mc_stderr"], rows), EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _add_network(p):
    g = p.add_argument_group("network")
    g.add_argument("--config", help="JSON configuration file; flags override its values")
    g.add_argument("--lambda", dest="lam", type=float, help="BS density (default 10)")
    g.add_argument("--eta", type=float, help="path-loss exponent (default 4)")
    g.add_argument("--sigma2-dbm", type=float, help="noise power in dBm (default -90)")
    g.add_argument("--beta", type=float, help="residual intraference fraction (default 0)")
    g.add_argument("--model", choices=[m.value for m in Model], help="clustering model (default model1)")
    g.add_argument("--phi", type=float, help="sector angle for --model sector")
    g.add_argument("--ordering", choices=[o.value for o in Ordering], help="UE ordering (default msp)")
    g.add_argument("--n-ues", type=int, help="cluster size")


def _add_grid(p, dp=0.01):
    g = p.add_argument_group("search grid")
    g.add_argument("--theta-lb", type=float, default=-10.0, help="lowest threshold, dB")
    g.add_argument("--theta-ub", type=float, default=22.0, help="highest threshold, dB")
    g.add_argument("--dtheta", type=float, default=1.0, help="threshold step, dB")
    g.add_argument("--dp", type=float, default=dp, help="power/time step")


def _add_io(p):
    p.add_argument("-o", "--output", help="data file (default: stdout)")
    p.add_argument("--manifest", help="manifest path (default: <output>.manifest.json)")
    p.add_argument("--from-manifest", help="re-run with the options stored in a manifest")
    p.add_argument("--threads", type=int, help=f"worker threads (default ${THREADS_ENV} or 1)")


class _Parser(argparse.ArgumentParser):
    # usage errors are configuration errors; exit code 2 is reserved for infeasibility
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser():
    parser = _Parser(prog="poisson_noma", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("coverage", help="per-rank NOMA coverage versus a common threshold")
    _add_network(p)
    p.add_argument("--powers", type=_float_list, help="power split, rank order (default 1:2:..:N)")
    p.add_argument("--theta-db", type=_theta_spec, default=_theta_spec("-10:22:1"), help="lo:hi:step or list")
    p.add_argument("--orderings", type=lambda s: [o.strip() for o in s.split(",")], default=["msp", "isinr"])
    p.add_argument("--mc-trials", type=int, default=20000, help="Monte Carlo trials (0: analytical only)")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    _add_io(p)
    p.set_defaults(func=cmd_coverage)

    p = sub.add_parser("rate-region", help="two-user NOMA or TDMA rate region boundary")
    _add_network(p)
    p.add_argument("--access", choices=["noma", "tdma"], default="noma")
    _add_grid(p)
    _add_io(p)
    p.set_defaults(func=cmd_rate_region)

    p = sub.add_parser("allocate", help="solve the TMT or symmetric-throughput allocation")
    _add_network(p)
    p.add_argument("--problem", choices=["tmt", "symmetric"], default="tmt")
    p.add_argument("--tmt", type=float, help="minimum throughput per UE")
    p.add_argument("--access", choices=["noma", "tdma"], default="noma")
    p.add_argument("--mc-trials", type=int, default=0,
                   help="score throughput on this many simulated trials (0: analytical)")
    p.add_argument("--seed", type=int, default=1)
    _add_grid(p)
    _add_io(p)
    p.set_defaults(func=cmd_allocate)

    p = sub.add_parser("sweep", help="sum rate versus cluster size or residual intraference")
    _add_network(p)
    p.add_argument("--axis", choices=["n", "beta"], help="swept quantity (required)")
    p.add_argument("--problem", choices=["tmt", "symmetric"], default="tmt")
    p.add_argument("--tmt", type=float, default=0.3)
    p.add_argument("--tmts", type=_float_list, help="beta axis: several TMT values")
    p.add_argument("--n-range", type=_n_spec, default=_n_spec("1:12"), help="n axis: lo:hi or list")
    p.add_argument("--n-values", type=_int_list, help="beta axis: cluster sizes")
    p.add_argument("--betas", type=_float_list, help="beta values")
    p.add_argument("--models", type=lambda s: [m.strip() for m in s.split(",")], help="n axis: models")
    _add_grid(p)
    _add_io(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("simulate", help="Monte Carlo estimates and realization dumps")
    _add_network(p)
    p.add_argument("--n-trials", type=int, default=20000)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--powers", type=_float_list)
    p.add_argument("--theta-db", type=_theta_spec, default=_theta_spec("-10:22:1"))
    p.add_argument("--dump", type=int, default=0, help="write this many realizations as JSON")
    p.add_argument("--stienen", action="store_true", help="estimate the in-disk covered area fraction")
    _add_io(p)
    p.set_defaults(func=cmd_simulate)
    return parser


def _replay(args, parser):
    with open(args.from_manifest, encoding="utf-8") as fh:
        man = json.load(fh)
    if man.get("command") != args.command:
        raise ConfigError(f"manifest is for {man.get('command')!r}, not {args.command!r}")
    for key, val in man["config"].items():
        if key not in _NOT_REPLAYED:
            setattr(args, key, val)


def _manifest(args, text, seconds):
    config = {k: v for k, v in sorted(vars(args).items()) if k not in _NOT_REPLAYED and k != "workers"}
    return {
        "schema": "poisson_noma.manifest/1",
        "command": args.command,
        "config": config,
        "seed": config.get("seed"),
        "version": __version__,
        "duration_s": seconds,
        "output": args.output,
        "output_sha256": hashlib.sha256(text.encode("utf-8")).hexdigest(),
    }


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.from_manifest:
            _replay(args, parser)
        args.workers = _resolve_threads(args)
        t0 = time.perf_counter()
        text, code = args.func(args)
        seconds = time.perf_counter() - t0
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, json.JSONDecodeError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL

    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    man_path = args.manifest or (args.output + ".manifest.json" if args.output else None)
    if man_path:
        with open(man_path, "w", encoding="utf-8") as fh:
            fh.write(_json_text(_manifest(args, text, seconds)))
    if code == EXIT_INFEASIBLE:
        print("infeasible: no allocation meets the throughput target", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())

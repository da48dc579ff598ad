"""Command-line front end.

Subcommands: ``cca`` (correlations from two CSV panels), ``histogram``
(plot-ready CSV of an empirical spectrum with the limit-density overlay),
``independence`` and ``coint`` (hypothesis tests), ``simulate`` (synthetic
panels and VAR(1) series), ``tabulate`` (Monte Carlo quantile tables).

Exit codes: 0 success / fail_to_reject, 3 reject, 2 input error.  Reports
are JSON on stdout or ``--output``; pass ``--no-timestamp`` for
byte-identical reruns.  Quantile tables are cached on disk keyed by
(statistic, parameters, nsamples, seed); the cache directory comes from
``--table-cache-dir``, then ``$HDCCA_TABLE_DIR``, then ``~/.cache/hdcca``.
"""

from __future__ import annotations

import argparse
import datetime
import hashlib
import json
import os
import sys
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import cointegration, dataio, hyptest
from .cca_core import sample_cca
from .cointegration import VarModel
from .ensembles import Seed
from .errors import HdccaError
from .hyptest import QuantileTable
from .spike import simulate_spiked_panels
from .wachter import WachterParams, pdf as wachter_pdf

EXIT_OK = 0
EXIT_INPUT_ERROR = 2
EXIT_REJECT = 3

REPORT_SCHEMA = "hdcca.report/1"
CCA_SCHEMA = "hdcca.cca/1"
DEFAULT_ALPHAS = (0.9, 0.95, 0.99)
DEFAULT_NSAMPLES = 10_000


@dataclass(frozen=True)
class RunConfig:
    """Resolved options shared by the subcommands."""

    command: str
    output_path: str | None
    seed: Seed
    alpha: float
    r: int
    table_cache_dir: Path
    histogram_bins: int
    include_timestamp: bool

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise HdccaError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.histogram_bins < 5:
            raise HdccaError(f"need at least 5 histogram bins, got {self.histogram_bins}")


def _default_cache_dir() -> Path:
    env = os.environ.get("HDCCA_TABLE_DIR")
    if env:
        return Path(env)
    xdg = os.environ.get("XDG_CACHE_HOME")
    base = Path(xdg) if xdg else Path.home() / ".cache"
    return base / "hdcca"


def _config_from_args(args) -> RunConfig:
    cache = Path(args.table_cache_dir) if getattr(args, "table_cache_dir", None) else _default_cache_dir()
    return RunConfig(
        command=args.command,
        output_path=getattr(args, "output", None),
        seed=Seed(getattr(args, "seed", 0), getattr(args, "stream", 0)),
        alpha=getattr(args, "alpha", 0.95),
        r=getattr(args, "r", 1),
        table_cache_dir=cache,
        histogram_bins=getattr(args, "bins", 40),
        include_timestamp=not getattr(args, "no_timestamp", False),
    )


def _emit(doc: dict, output_path: str | None) -> None:
    text = json.dumps(doc, sort_keys=True, indent=2) + "\n"
    if output_path:
        Path(output_path).write_text(text)
    else:
        sys.stdout.write(text)


def _maybe_timestamp(doc: dict, config: RunConfig) -> dict:
    if config.include_timestamp:
        doc["timestamp"] = datetime.datetime.now(datetime.timezone.utc).isoformat()
    return doc


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)  # atomic: no partially written table is visible
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _cached_table(config: RunConfig, build, statistic: str, params: dict, nsamples: int) -> QuantileTable:
    key = json.dumps(
        {
            "statistic": statistic,
            "params": params,
            "nsamples": nsamples,
            "seed": [config.seed.value, config.seed.stream],
        },
        sort_keys=True,
    )
    digest = hashlib.sha256(key.encode()).hexdigest()[:24]
    path = config.table_cache_dir / f"{statistic.lower()}-{digest}.json"
    if path.exists():
        return QuantileTable.load(path)
    table = build()
    _atomic_write(path, table.dumps(include_timestamp=config.include_timestamp) + "\n")
    return table


def _alphas_with(alpha: float) -> list[float]:
    return sorted(set(DEFAULT_ALPHAS) | {alpha})


def _load_table_arg(args) -> QuantileTable | None:
    if getattr(args, "table", None):
        return QuantileTable.load(args.table)
    return None


# --- subcommands -----------------------------------------------------------


def cmd_cca(args) -> int:
    config = _config_from_args(args)
    U = dataio.load_panel_csv(args.u)
    V = dataio.load_panel_csv(args.v)
    system = sample_cca(U, V, tol=args.tol)
    doc = {
        "schema": CCA_SCHEMA,
        "correlations_sq": [float(c) for c in system.correlations_sq],
        "alphas": [[float(x) for x in row] for row in system.alphas],
        "betas": [[float(x) for x in row] for row in system.betas],
        "clustered": [bool(b) for b in system.clustered],
        "provenance": {
            "K": U.rows,
            "M": V.rows,
            "S": U.cols,
            "u_path": Path(args.u).name,
            "v_path": Path(args.v).name,
        },
        "spectrum": {
            "schema": dataio.SPECTRUM_SCHEMA,
            "values": [float(c) for c in system.correlations_sq],
            "meta": {"K": U.rows, "M": V.rows, "S": U.cols},
        },
    }
    _emit(_maybe_timestamp(doc, config), config.output_path)
    return EXIT_OK


def cmd_histogram(args) -> int:
    config = _config_from_args(args)
    spec = dataio.load_spectrum_json(args.spectrum)
    if args.coint_tau is not None:
        params = WachterParams(tau_k=1.0 + args.coint_tau, tau_m=(1.0 + args.coint_tau) / 2.0)
    else:
        if args.tau_k is None or args.tau_m is None:
            raise HdccaError("histogram needs either --tau-k and --tau-m or --coint-tau")
        params = WachterParams(tau_k=args.tau_k, tau_m=args.tau_m)
    edges = np.linspace(0.0, 1.0, config.histogram_bins + 1)
    counts, _ = np.histogram(spec.values, bins=edges)
    width = edges[1] - edges[0]
    density = counts / (len(spec.values) * width)
    centers = 0.5 * (edges[:-1] + edges[1:])
    overlay = np.asarray(wachter_pdf(centers, params))
    rows = [("bin_center", "empirical_density", "wachter_density")]
    rows += [(repr(float(c)), repr(float(d)), repr(float(o))) for c, d, o in zip(centers, density, overlay)]
    text = "\n".join(",".join(row) for row in rows) + "\n"
    if config.output_path:
        Path(config.output_path).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_independence(args) -> int:
    config = _config_from_args(args)
    U = dataio.load_panel_csv(args.u)
    V = dataio.load_panel_csv(args.v)
    table = _load_table_arg(args)
    if args.regime == "small":
        if table is None:
            k, m = sorted((U.rows, V.rows))
            table = _cached_table(
                config,
                lambda: hyptest.tabulate_laguerre_max(
                    k, m, _alphas_with(config.alpha), args.nsamples, config.seed
                ),
                hyptest.STATISTIC_LAGUERRE_MAX,
                {"K": k, "M": m, "alphas": _alphas_with(config.alpha)},
                args.nsamples,
            )
        report = hyptest.independence_test_small(U, V, config.alpha, table)
    else:
        if table is None:
            table = _cached_table(
                config,
                lambda: hyptest.tabulate_airy1_sums(
                    1, _alphas_with(config.alpha), args.sim_size, args.nsamples, config.seed
                ),
                hyptest.STATISTIC_AIRY1_SUM,
                {"r": 1, "sim_size": args.sim_size, "alphas": _alphas_with(config.alpha)},
                args.nsamples,
            )
        report = hyptest.independence_test_large(U, V, config.alpha, table)
    doc = {"schema": REPORT_SCHEMA, "command": "independence", **report.to_json_dict()}
    _emit(_maybe_timestamp(doc, config), config.output_path)
    return EXIT_REJECT if report.rejected else EXIT_OK


def cmd_coint(args) -> int:
    config = _config_from_args(args)
    X = dataio.load_timeseries_csv(args.input)
    table = _load_table_arg(args)
    if args.regime == "small":
        if table is None:
            table = _cached_table(
                config,
                lambda: cointegration.tabulate_brownian_coint(
                    X.K, config.r, _alphas_with(config.alpha), args.n_grid, args.nsamples, config.seed
                ),
                hyptest.STATISTIC_BROWNIAN_COINT,
                {"K": X.K, "r": config.r, "n_grid": args.n_grid, "alphas": _alphas_with(config.alpha)},
                args.nsamples,
            )
        report = cointegration.coint_test_small(X, config.r, config.alpha, table)
    else:
        if table is None:
            table = _cached_table(
                config,
                lambda: hyptest.tabulate_airy1_sums(
                    config.r, _alphas_with(config.alpha), args.sim_size, args.nsamples, config.seed
                ),
                hyptest.STATISTIC_AIRY1_SUM,
                {"r": config.r, "sim_size": args.sim_size, "alphas": _alphas_with(config.alpha)},
                args.nsamples,
            )
        report = cointegration.coint_test_large(X, config.r, config.alpha, table)
    doc = {"schema": REPORT_SCHEMA, "command": "coint", **report.to_json_dict()}
    _emit(_maybe_timestamp(doc, config), config.output_path)
    return EXIT_REJECT if report.rejected else EXIT_OK


def cmd_simulate(args) -> int:
    config = _config_from_args(args)
    if args.kind == "panels":
        rho2s = [float(x) for x in args.rho2.split(",")] if args.rho2 else []
        U, V = simulate_spiked_panels(args.k, args.m, args.s, rho2s, config.seed)
        dataio.save_panel_csv(args.output_u, U)
        dataio.save_panel_csv(args.output_v, V)
    else:  # var1
        if args.pi_corner:
            pi = np.zeros((args.k, args.k))
            pi[0, 0] = -1.0
        else:
            pi = cointegration.make_pi_rank_r(args.k, args.pi_rank, args.pi_scale, config.seed)
        model = VarModel(pi=pi, lam=np.eye(args.k), x0=np.zeros(args.k))
        ts = cointegration.simulate_var1(model, args.t, Seed(config.seed.value, config.seed.stream + 1))
        dataio.save_timeseries_csv(args.output, ts)
    return EXIT_OK


def cmd_tabulate(args) -> int:
    config = _config_from_args(args)
    alphas = [float(a) for a in args.alphas.split(",")]
    if args.statistic == "laguerre-max":
        if args.k is None or args.m is None:
            raise HdccaError("tabulate laguerre-max needs --k and --m")
        table = hyptest.tabulate_laguerre_max(args.k, args.m, alphas, args.nsamples, config.seed)
    elif args.statistic == "airy1-sum":
        table = hyptest.tabulate_airy1_sums(
            config.r, alphas, args.sim_size, args.nsamples, config.seed
        )
    else:  # brownian-coint
        if args.k is None:
            raise HdccaError("tabulate brownian-coint needs --k")
        table = cointegration.tabulate_brownian_coint(
            args.k, config.r, alphas, args.n_grid, args.nsamples, config.seed
        )
    if config.output_path:
        table.save(config.output_path, include_timestamp=config.include_timestamp)
        sys.stdout.write(str(config.output_path) + "\n")
    else:
        path = config.table_cache_dir / f"{args.statistic}-{config.seed.value}-{config.seed.stream}.json"
        _atomic_write(path, table.dumps(include_timestamp=config.include_timestamp) + "\n")
        sys.stdout.write(str(path) + "\n")
    return EXIT_OK


# --- parser ----------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0, help="RNG seed value")
    p.add_argument("--stream", type=int, default=0, help="RNG stream index")
    p.add_argument("--output", help="write the report here instead of stdout")
    p.add_argument("--no-timestamp", action="store_true", help="omit timestamps for byte-identical output")
    p.add_argument("--table-cache-dir", help="quantile table cache directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hdcca",
        description="High-dimensional canonical correlation analysis toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("cca", help="canonical correlations between two CSV panels")
    p.add_argument("--u", required=True, help="first panel CSV (variables x observations)")
    p.add_argument("--v", required=True, help="second panel CSV")
    p.add_argument("--tol", type=float, default=1e-10, help="relative rank tolerance")
    _add_common(p)
    p.set_defaults(func=cmd_cca)

    p = sub.add_parser("histogram", help="binned spectrum with limit-density overlay")
    p.add_argument("--spectrum", required=True, help="spectrum JSON file")
    p.add_argument("--tau-k", type=float, help="ratio S/K of the overlay")
    p.add_argument("--tau-m", type=float, help="ratio S/M of the overlay")
    p.add_argument("--coint-tau", type=float, help="cointegration ratio T/K; overlays the (1+tau, (1+tau)/2) law")
    p.add_argument("--bins", type=int, default=40, help="number of bins over [0, 1]")
    _add_common(p)
    p.set_defaults(func=cmd_histogram)

    p = sub.add_parser("independence", help="test independence of two panels")
    p.add_argument("--u", required=True)
    p.add_argument("--v", required=True)
    p.add_argument("--alpha", type=float, default=0.95, help="confidence level")
    p.add_argument("--regime", choices=("small", "large"), required=True)
    p.add_argument("--table", help="quantile table JSON (tabulated on demand if omitted)")
    p.add_argument("--nsamples", type=int, default=DEFAULT_NSAMPLES)
    p.add_argument("--sim-size", type=int, default=100, help="internal spectrum size for edge tabulation")
    _add_common(p)
    p.set_defaults(func=cmd_independence)

    p = sub.add_parser("coint", help="test for cointegration in a time-series CSV")
    p.add_argument("--input", required=True, help="time-series CSV")
    p.add_argument("--alpha", type=float, default=0.95)
    p.add_argument("--r", type=int, default=1, help="cointegration rank under the alternative")
    p.add_argument("--regime", choices=("small", "large"), required=True)
    p.add_argument("--table", help="quantile table JSON (tabulated on demand if omitted)")
    p.add_argument("--nsamples", type=int, default=DEFAULT_NSAMPLES)
    p.add_argument("--n-grid", type=int, default=1000, help="Brownian discretization steps")
    p.add_argument("--sim-size", type=int, default=100)
    _add_common(p)
    p.set_defaults(func=cmd_coint)

    p = sub.add_parser("simulate", help="generate synthetic data")
    p.add_argument("kind", choices=("panels", "var1"))
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--m", type=int, help="second panel dimension (panels)")
    p.add_argument("--s", type=int, help="observation count (panels)")
    p.add_argument("--rho2", help="comma-separated planted squared correlations (panels)")
    p.add_argument("--t", type=int, help="horizon (var1)")
    p.add_argument("--pi-rank", type=int, default=0, help="rank of the coefficient matrix (var1)")
    p.add_argument("--pi-scale", type=float, default=-0.5, help="factor scale (var1)")
    p.add_argument("--pi-corner", action="store_true", help="single -1 in the top-left corner (var1)")
    p.add_argument("--output-u", help="first panel output CSV (panels)")
    p.add_argument("--output-v", help="second panel output CSV (panels)")
    _add_common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("tabulate", help="build a Monte Carlo quantile table")
    p.add_argument("--statistic", choices=("laguerre-max", "airy1-sum", "brownian-coint"), required=True)
    p.add_argument("--k", type=int, help="panel dimension (laguerre-max, brownian-coint)")
    p.add_argument("--m", type=int, help="second dimension (laguerre-max)")
    p.add_argument("--r", type=int, default=1, help="number of top coordinates summed")
    p.add_argument("--sim-size", type=int, default=100)
    p.add_argument("--n-grid", type=int, default=1000)
    p.add_argument("--alphas", default="0.9,0.95,0.99", help="comma-separated levels")
    p.add_argument("--nsamples", type=int, default=DEFAULT_NSAMPLES)
    _add_common(p)
    p.set_defaults(func=cmd_tabulate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "simulate":
            _validate_simulate_args(args)
        return args.func(args)
    except HdccaError as e:
        err = {"schema": "hdcca.error/1", "error": type(e).__name__, "message": str(e)}
        sys.stderr.write(json.dumps(err, sort_keys=True) + "\n")
        return EXIT_INPUT_ERROR


def _validate_simulate_args(args) -> None:
    if args.kind == "panels":
        missing = [n for n in ("m", "s", "output_u", "output_v") if getattr(args, n) is None]
        if missing:
            raise HdccaError(f"simulate panels needs --{', --'.join(m.replace('_', '-') for m in missing)}")
    else:
        missing = [n for n in ("t", "output") if getattr(args, n) is None]
        if missing:
            raise HdccaError(f"simulate var1 needs --{', --'.join(m.replace('_', '-') for m in missing)}")


if __name__ == "__main__":
    raise SystemExit(main())

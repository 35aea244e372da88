"""Batch command-line front end.

Four subcommands cover the library surface: ``nodes`` dumps quadrature
rules, ``converge`` runs characteristic-root sweeps over the benchmark
problems, ``oracle`` runs the independent collocation cross-checks, and
``bifurcate`` traces equilibrium branches of the nonlinear models.  Each
run writes delimited output (CSV, optionally a JSON mirror) whose header
embeds the resolved configuration, and renders the matching figure next
to it unless ``--no-plot`` is given.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 partial results (some sweep entries failed).  The worker-pool size is
controlled only by the environment variable ``INFDELAY_WORKERS``.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import report
from .errors import ConfigError, InfDelayError, MissingHopf
from .laguerre import NodeFamily, family_rule
from .mesh import half_line_quadrature
from .models import (continue_equilibrium, hopf_curve_beretta_breda,
                     model_beretta_breda, model_blowflies)
from .spectra import BENCHMARK_CASES, convergence_study
from .colloc import (colloc_direct, colloc_recurrence, error_bound,
                     measured_error, reduced_diffmat_spectrum)

_FAMILIES = ("zeros", "extrema")
_QUAD_MODES = ("gauss", "adaptive")

_BB_DEFAULTS = {"delta_a": 0.5, "delta_j": 1.0, "a": 7.0, "b": 350.0}


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("INFDELAY_WORKERS", "1")))
    except ValueError:
        return 1


def _parse_n_list(text) -> list[int]:
    if isinstance(text, (list, tuple)):
        values = [int(v) for v in text]
    else:
        values = [int(tok) for tok in str(text).split(",") if tok]
    if not values or any(v < 1 for v in values):
        raise ConfigError(f"invalid size list {text!r}")
    if any(b <= a for a, b in zip(values, values[1:])):
        raise ConfigError("size list must be strictly ascending")
    return values


def _parse_range(text) -> tuple[float, float]:
    try:
        lo, hi = (float(tok) for tok in str(text).split(":"))
    except ValueError as exc:
        raise ConfigError(f"range must be 'lo:hi', got {text!r}") from exc
    if not hi > lo:
        raise ConfigError("range upper end must exceed the lower end")
    return lo, hi


def _parse_curve(text) -> list[float]:
    parts = str(text).split("=")
    if len(parts) != 2 or parts[0] != "m":
        raise ConfigError(f"curve spec must look like m=lo:hi[:step], got {text!r}")
    toks = parts[1].split(":")
    if len(toks) == 2:
        lo, hi, step = float(toks[0]), float(toks[1]), 0.5
    elif len(toks) == 3:
        lo, hi, step = float(toks[0]), float(toks[1]), float(toks[2])
    else:
        raise ConfigError(f"curve spec must look like m=lo:hi[:step], got {text!r}")
    if step <= 0 or hi < lo:
        raise ConfigError("empty curve grid")
    return [round(lo + k * step, 12) for k in range(int(round((hi - lo) / step)) + 1)]


_SCHEMAS = {
    "nodes": {"required": {"family", "n", "rho1"},
              "optional": {"output", "format", "plot"}},
    "converge": {"required": {"case", "family", "rho1", "n"},
                 "optional": {"rho", "quad", "output", "format", "plot"}},
    "oracle": {"required": {"suite"},
               "optional": {"family", "n", "mu", "beta", "c", "seed", "count",
                            "output", "format", "plot"}},
    "bifurcate": {"required": {"model", "n"},
                  "optional": {"param", "range", "steps", "curve", "family",
                               "params", "output", "format", "plot"}},
}


def validate_config(cfg: dict) -> dict:
    """Strict schema check: unknown keys are rejected, values normalized."""
    if "command" not in cfg:
        raise ConfigError("config needs a 'command' key")
    command = cfg["command"]
    if command not in _SCHEMAS:
        raise ConfigError(f"unknown command {command!r}")
    schema = _SCHEMAS[command]
    keys = set(cfg) - {"command"}
    unknown = keys - schema["required"] - schema["optional"]
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    missing = schema["required"] - keys
    if missing:
        raise ConfigError(f"missing config keys: {sorted(missing)}")
    out = dict(cfg)
    if "family" in out and out["family"] is not None:
        if out["family"] not in _FAMILIES:
            raise ConfigError(f"family must be one of {_FAMILIES}")
    if "quad" in out and out.get("quad") is not None:
        if out["quad"] not in _QUAD_MODES:
            raise ConfigError(f"quad must be one of {_QUAD_MODES}")
    if "rho1" in out and out.get("rho1") is not None and float(out["rho1"]) <= 0:
        raise ConfigError("rho1 must be positive")
    out.setdefault("format", "csv")
    if out["format"] not in ("csv", "json"):
        raise ConfigError("format must be 'csv' or 'json'")
    out.setdefault("plot", True)
    return out


def _emit(cfg: dict, output: Path, columns, rows) -> None:
    if cfg["format"] == "json":
        report.write_json(output.with_suffix(".json"), cfg, columns, rows)
    report.write_csv(output, cfg, columns, rows)


def cmd_nodes(cfg: dict) -> int:
    family = NodeFamily(cfg["family"])
    n = int(cfg["n"]) if not isinstance(cfg["n"], list) else int(cfg["n"][0])
    if n < 1:
        raise ConfigError("n must be at least 1")
    rho1 = float(cfg["rho1"])
    rule = family_rule(family, n)
    quad = half_line_quadrature(family, n, rho1)
    columns = ["index", "t", "theta", "weight", "scaled_weight",
               "mapped_node", "mapped_weight"]
    rows = [
        (j, rule.nodes[j], -rule.nodes[j] / (2.0 * rho1), rule.weights[j],
         rule.scaled_weights[j], quad.mapped_nodes[j], quad.mapped_weights[j])
        for j in range(rule.size)
    ]
    output = Path(cfg.get("output") or f"nodes_{family.value}_{n}.csv")
    _emit(cfg, output, columns, rows)
    if cfg["plot"]:
        report.render_nodes(report.figure_path(output), quad.mapped_nodes,
                            quad.mapped_weights,
                            f"{family.value} rule, n={n}, rho1={rho1}")
    return 0


def cmd_converge(cfg: dict) -> int:
    case_id = cfg["case"]
    if case_id not in BENCHMARK_CASES:
        raise ConfigError(f"unknown case {case_id!r}; "
                          f"pick from {sorted(BENCHMARK_CASES)}")
    case = BENCHMARK_CASES[case_id]
    family = NodeFamily(cfg["family"])
    rho1 = float(cfg["rho1"])
    rho = float(cfg["rho"]) if cfg.get("rho") is not None \
        else case.default_rho(rho1)
    n_list = _parse_n_list(cfg["n"])
    quad_mode = cfg.get("quad") or "gauss"

    workers = _workers()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunks = pool.map(
                lambda n: convergence_study(case, family, rho1, rho, [n],
                                            quad_mode), n_list)
        records = [rec for chunk in chunks for rec in chunk]
    else:
        records = convergence_study(case, family, rho1, rho, n_list, quad_mode)
    records.sort(key=lambda r: r.n)

    columns = ["case", "family", "rho1", "rho", "quad_mode", "n", "abs_error",
               "eigfun_error", "matched_lambda_re", "matched_lambda_im",
               "bound_dn", "error"]
    rows = [(r.case, r.family, r.rho1, r.rho, r.quad_mode, r.n, r.abs_error,
             r.eigfun_error, r.matched_lambda.real, r.matched_lambda.imag,
             r.bound_dn, r.error) for r in records]
    output = Path(cfg.get("output") or f"converge_{case_id}_{family.value}.csv")
    _emit(cfg, output, columns, rows)
    if cfg["plot"]:
        report.render_convergence(
            report.figure_path(output), records,
            f"case {case_id}, {family.value}, rho1={rho1}, {quad_mode}")
    failed = sum(1 for r in records if r.error)
    if failed == len(records):
        return 3
    return 4 if failed else 0


def _oracle_reduced(cfg: dict):
    family = NodeFamily(cfg.get("family") or "extrema")
    n = int(cfg.get("n") or 5)
    result = reduced_diffmat_spectrum(n, family)
    columns = ["family", "n", "kind", "label", "value_re", "value_im",
               "reference_re", "reference_im", "deviation"]
    rows = []
    pred = list(result.predicted)
    for k, eig in enumerate(result.computed):
        dist, best = min((abs(eig - p), p) for p in pred)
        rows.append((family.value, n, "eigenvalue", f"k={k}", eig.real,
                     eig.imag, best.real, best.imag, dist))
        if family is NodeFamily.EXTREMA:
            rows.append((family.value, n, "re_alignment", f"k={k}", eig.real,
                         eig.imag, 0.5, 0.0, abs(eig.real - 0.5)))
    for mu, det, ref in result.char_samples:
        mu = complex(mu)
        rows.append((family.value, n, "char_poly", f"mu={mu}", det.real,
                     det.imag, ref.real, ref.imag,
                     abs(det - ref) / max(abs(ref), 1.0)))
    rows.append((family.value, n, "trace", "", result.trace, 0.0,
                 float(np.sum(result.predicted.real)), 0.0,
                 abs(result.trace - float(np.sum(result.predicted.real)))))
    figure = (result.computed, result.predicted)
    return columns, rows, figure


def _oracle_bounds(cfg: dict):
    family = NodeFamily(cfg.get("family") or "zeros")
    mu = complex(cfg.get("mu") if cfg.get("mu") is not None else -1.0)
    beta = complex(cfg.get("beta") if cfg.get("beta") is not None else 1.0)
    c = complex(cfg.get("c") if cfg.get("c") is not None else 0.0)
    n_list = _parse_n_list(cfg["n"]) if cfg.get("n") else list(range(2, 31, 2))
    columns = ["family", "mu_re", "mu_im", "n", "measured", "bound", "ratio"]
    rows = []
    for n in n_list:
        sol = colloc_recurrence(mu, beta, c, n, family)
        measured = measured_error(sol)
        bound = error_bound(mu, beta, c, n, family)
        rows.append((family.value, mu.real, mu.imag, n, measured, bound,
                     measured / bound if bound else math.nan))
    return columns, rows, ([r[3] for r in rows], [r[4] for r in rows],
                           [r[5] for r in rows])


def _oracle_equivalence(cfg: dict):
    seed = int(cfg.get("seed") if cfg.get("seed") is not None else 0)
    count = int(cfg.get("count") if cfg.get("count") is not None else 200)
    rng = np.random.default_rng(seed)
    columns = ["index", "family", "n", "mu_re", "mu_im", "weighted_rel_dev",
               "direct_cond"]
    rows = []
    drawn = 0
    while drawn < count:
        n = int(rng.integers(1, 16))
        mu = complex(rng.uniform(-2.0, 0.4), rng.uniform(-2.0, 2.0))
        family = NodeFamily.ZEROS if rng.random() < 0.5 else NodeFamily.EXTREMA
        # keep the residual-constant cancellation within ~1e4 so the
        # comparison probes the methods, not double-precision loss
        if (2.0 * max(1.0, abs(mu)) / abs(1.0 - mu)) ** n > 1e4:
            continue
        sol = colloc_recurrence(mu, 1.0, 0.5, n, family)
        direct, cond = colloc_direct(mu, 1.0, 0.5, n, family)
        x = np.concatenate(([0.0], sol.nodes))
        damp = np.exp(-0.5 * x)
        dev = float(np.max(damp * np.abs(sol.values(x) - direct))
                    / np.max(damp * np.abs(direct)))
        rows.append((drawn, family.value, n, mu.real, mu.imag, dev, cond))
        drawn += 1
    return columns, rows, None


def cmd_oracle(cfg: dict) -> int:
    suite = cfg["suite"]
    builders = {"reduced-spectrum": _oracle_reduced, "bounds": _oracle_bounds,
                "equivalence": _oracle_equivalence}
    if suite not in builders:
        raise ConfigError(f"unknown oracle suite {suite!r}")
    columns, rows, figure = builders[suite](cfg)
    output = Path(cfg.get("output") or f"oracle_{suite}.csv")
    _emit(cfg, output, columns, rows)
    if cfg["plot"] and figure is not None:
        if suite == "reduced-spectrum":
            report.render_spectrum(report.figure_path(output), figure[0],
                                   figure[1], "reduced differentiation matrix")
        elif suite == "bounds":
            report.render_bound_comparison(report.figure_path(output),
                                           figure[0], figure[1], figure[2],
                                           "measured error vs bound")
    return 0


def _bifurcate_model_factory(cfg: dict, params: dict):
    model = cfg["model"]
    if model == "blowflies":
        mu = float(params.get("mu", 2.0))
        return lambda value: model_blowflies(value, mu), "beta0"
    if model == "beretta-breda":
        bb = dict(_BB_DEFAULTS)
        bb.update({k: float(v) for k, v in params.items() if k in bb})
        m = float(params.get("m", 7.0))
        return (lambda value: model_beretta_breda(bb["delta_a"], bb["delta_j"],
                                                  bb["a"], bb["b"], m, value),
                "tau")
    raise ConfigError(f"unknown model {model!r}")


def cmd_bifurcate(cfg: dict) -> int:
    n = int(cfg["n"]) if not isinstance(cfg["n"], list) else int(cfg["n"][0])
    family = NodeFamily(cfg.get("family") or "extrema")
    params = dict(cfg.get("params") or {})
    prefix = Path(cfg.get("output") or f"bifurcate_{cfg['model']}")

    if cfg.get("curve"):
        if cfg["model"] != "beretta-breda":
            raise ConfigError("two-parameter curves exist only for beretta-breda")
        m_values = _parse_curve(cfg["curve"])
        lo, hi = _parse_range(cfg.get("range") or "1.0:4.5")
        steps = int(cfg.get("steps") or 30)
        bb = dict(_BB_DEFAULTS)
        bb.update({k: float(v) for k, v in params.items() if k in bb})
        rows_data, missing = hopf_curve_beretta_breda(
            m_values, lo, hi, n, steps, bb["delta_a"], bb["delta_j"],
            bb["a"], bb["b"], family)
        columns = ["branch", "m", "tau"]
        rows = [(branch + 1, m, tau)
                for m, taus in rows_data
                for branch, tau in enumerate(sorted(taus))]
        output = prefix.with_name(prefix.name + "_hopf_curve.csv")
        _emit(cfg, output, columns, rows)
        if cfg["plot"]:
            report.render_hopf_curve(report.figure_path(output),
                                     [(m, sorted(t)) for m, t in rows_data],
                                     f"Hopf curve, n={n}")
        return 4 if missing else 0

    if not cfg.get("range"):
        raise ConfigError("bifurcate needs --range lo:hi (or a --curve spec)")
    make_model, default_param = _bifurcate_model_factory(cfg, params)
    param_name = cfg.get("param") or default_param
    if param_name != default_param:
        raise ConfigError(
            f"model {cfg['model']} continues in {default_param!r} only")
    lo, hi = _parse_range(cfg["range"])
    steps = int(cfg.get("steps") or 30)
    branch = continue_equilibrium(make_model, lo, hi, steps, n, family)

    branch_cols = ["param", "state_head", "rightmost_re", "rightmost_im",
                   "stability"]
    branch_rows = [(r.param, r.head, r.rightmost.real, r.rightmost.imag,
                    r.verdict) for r in branch.records]
    branch_out = prefix.with_name(prefix.name + "_branch.csv")
    _emit(cfg, branch_out, branch_cols, branch_rows)

    bif_cols = ["kind", "param", "lambda_re", "lambda_im", "residual"]
    bif_rows = [(b.kind, b.param, b.critical_eigenvalue.real,
                 b.critical_eigenvalue.imag, b.residual)
                for b in branch.bifurcations]
    _emit(cfg, prefix.with_name(prefix.name + "_points.csv"), bif_cols, bif_rows)
    if cfg["plot"]:
        report.render_branch(report.figure_path(branch_out), branch.records,
                             branch.bifurcations, param_name,
                             f"{cfg['model']}, n={n}")
    return 0


_DISPATCH = {"nodes": cmd_nodes, "converge": cmd_converge,
             "oracle": cmd_oracle, "bifurcate": cmd_bifurcate}


def run_config(cfg: dict) -> int:
    cfg = validate_config(cfg)
    return _DISPATCH[cfg["command"]](cfg)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="infdelay",
        description="Pseudospectral reduction of infinite-delay equations")
    parser.add_argument("--config", help="JSON run configuration (exclusive "
                                         "with a subcommand)")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("nodes", help="dump a quadrature rule")
    p.add_argument("--family", required=True, choices=_FAMILIES)
    p.add_argument("--n", required=True, type=int)
    p.add_argument("--rho1", required=True, type=float)
    _common_output_flags(p)

    p = sub.add_parser("converge", help="characteristic-root convergence sweep")
    p.add_argument("--case", required=True)
    p.add_argument("--family", required=True, choices=_FAMILIES)
    p.add_argument("--rho1", required=True, type=float)
    p.add_argument("--rho", type=float)
    p.add_argument("--n", required=True, help="comma-separated ascending sizes")
    p.add_argument("--quad", choices=_QUAD_MODES, default="gauss")
    _common_output_flags(p)

    p = sub.add_parser("oracle", help="independent collocation cross-checks")
    p.add_argument("--suite", required=True,
                   choices=("reduced-spectrum", "bounds", "equivalence"))
    p.add_argument("--family", choices=_FAMILIES)
    p.add_argument("--n", help="size or comma-separated sizes")
    p.add_argument("--mu", type=complex)
    p.add_argument("--beta", type=complex)
    p.add_argument("--c", type=complex)
    p.add_argument("--seed", type=int)
    p.add_argument("--count", type=int)
    _common_output_flags(p)

    p = sub.add_parser("bifurcate", help="equilibrium continuation")
    p.add_argument("--model", required=True,
                   choices=("blowflies", "beretta-breda"))
    p.add_argument("--param")
    p.add_argument("--range", help="lo:hi for the free parameter")
    p.add_argument("--steps", type=int)
    p.add_argument("--curve", help="two-parameter Hopf curve, e.g. m=6.5:7.5")
    p.add_argument("--n", required=True, type=int)
    p.add_argument("--family", choices=_FAMILIES)
    p.add_argument("--mu", type=float, help="blowflies mortality rate")
    p.add_argument("--m", type=float, help="gamma shape parameter")
    p.add_argument("--delta-a", dest="delta_a", type=float)
    p.add_argument("--delta-j", dest="delta_j", type=float)
    p.add_argument("--a", type=float)
    p.add_argument("--b", type=float)
    _common_output_flags(p)
    return parser


def _common_output_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--output")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--no-plot", action="store_true")


_MODEL_PARAM_FLAGS = ("mu", "m", "delta_a", "delta_j", "a", "b")


def _namespace_to_config(args: argparse.Namespace) -> dict:
    cfg = {"command": args.command}
    skip = {"command", "config", "no_plot"} | set(_MODEL_PARAM_FLAGS)
    for key, value in vars(args).items():
        if key in skip or value is None:
            continue
        cfg[key] = value
    cfg["plot"] = not args.no_plot
    if args.command == "bifurcate":
        params = {k: v for k in _MODEL_PARAM_FLAGS
                  if (v := getattr(args, k, None)) is not None}
        if params:
            cfg["params"] = params
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        if args.command:
            parser.error("--config and a subcommand are mutually exclusive")
        try:
            cfg = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            print(f"error: cannot read config: {exc}", file=sys.stderr)
            return 2
    elif args.command:
        cfg = _namespace_to_config(args)
    else:
        parser.print_help()
        return 2
    try:
        return run_config(cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except MissingHopf as exc:
        print(f"partial: {exc}", file=sys.stderr)
        return 4
    except (InfDelayError, np.linalg.LinAlgError, ValueError) as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}",
              file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())

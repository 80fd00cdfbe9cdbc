"""Experiment runner: one subcommand per study, CSV/JSON output, and a JSON
metadata sidecar so every run can be reproduced from its artifacts.

The subcommands contain no numerics of their own; each one sequences library
calls and serializes the results.  Data files are deterministic functions of
the resolved spec (including the seed) and do not depend on the thread count.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import asdict, dataclass, fields
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .analysis import build_histogram, fit_erf_profile, fit_power_law, gaussian_summary, l_star
from .bell import BellKind, classical_bound, evaluate
from .concentration import empirical_concentration
from .experiments import (
    critical_epsilon,
    dim_from_l,
    random_measurement_run,
    sample_distribution,
    violation_profile,
    violation_stats,
)
from .linalg import derive_rng
from .measurements import optimal_settings
from .optimizer import SimplexConfig, optimize_settings
from .perturbations import PerturbationKind
from .states import bell_state, random_entangled_state, random_product_state


class SpecError(ValueError):
    """Invalid experiment spec; `field` names the offending entry."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"invalid {field_name}: {message}")
        self.field = field_name


@dataclass
class ExperimentSpec:
    """Resolved configuration of one run (defaults < config file < flags)."""

    experiment: str
    l: float | None = None
    l_max: float | None = None
    epsilon: float | None = None
    epsilon_grid: str | None = None
    samples: int = 10_000
    seed: int = 1234
    perturbation: str = "bilocal"
    kind: str = "I"
    restarts: int = 20
    max_evals: int = 20_000
    threads: int = 0
    output: str = "out.csv"
    format: str = "csv"


EXPERIMENTS = ("fig1", "fig2", "fig3", "fig4", "fig5", "fig6", "fig7", "fig8", "appendix")

_DEFAULTS = {
    "fig1": {"l_max": 10.0},
    "fig2": {"l_max": 4.0, "epsilon": 0.23},
    "fig3": {"l": 1.0, "epsilon": 0.233, "samples": 100_000},
    "fig4": {"l": 1.0, "epsilon_grid": "0.05:1.0:1.2"},
    "fig5": {"l_max": 4.0},
    "fig6": {"l": 1.0, "samples": 100_000},
    "fig7": {"l_max": 2.5},
    "fig8": {"l_max": 1.5, "restarts": 8},
    "appendix": {"l": 1.0, "l_max": 4.0, "epsilon": 0.5, "samples": 100_000},
}


def _parse_grid(text: str) -> list[float]:
    try:
        lo, hi, factor = (float(part) for part in text.split(":"))
    except ValueError:
        raise SpecError("epsilon_grid", f"expected lo:hi:factor, got {text!r}") from None
    if lo <= 0 or hi <= lo or factor <= 1:
        raise SpecError("epsilon_grid", "need 0 < lo < hi and factor > 1")
    grid = []
    eps = lo
    while eps < hi:
        grid.append(eps)
        eps *= factor
    grid.append(hi)
    return grid


def _half_integer_range(l_max: float) -> list[float]:
    steps = int(round(l_max * 2))
    return [0.5 * k for k in range(1, steps + 1)]


_REQUIRED = {
    "fig1": ("l_max",),
    "fig2": ("l_max", "epsilon"),
    "fig3": ("l", "epsilon"),
    "fig4": ("l", "epsilon_grid"),
    "fig5": ("l_max",),
    "fig6": ("l",),
    "fig7": ("l_max",),
    "fig8": ("l_max",),
    "appendix": ("l", "l_max", "epsilon"),
}


def validate_spec(spec: ExperimentSpec) -> ExperimentSpec:
    if spec.experiment not in EXPERIMENTS:
        raise SpecError("experiment", f"unknown experiment {spec.experiment!r}")
    for name in _REQUIRED[spec.experiment]:
        if getattr(spec, name) is None:
            raise SpecError(name, f"required by {spec.experiment}")
    for name in ("l", "l_max"):
        value = getattr(spec, name)
        if value is not None:
            try:
                dim_from_l(value)
            except ValueError as err:
                raise SpecError(name, str(err)) from None
    if spec.epsilon is not None and (not np.isfinite(spec.epsilon) or spec.epsilon < 0):
        raise SpecError("epsilon", f"must be finite and >= 0, got {spec.epsilon}")
    if spec.epsilon_grid is not None:
        _parse_grid(spec.epsilon_grid)
    if spec.samples < 1:
        raise SpecError("samples", f"must be >= 1, got {spec.samples}")
    if spec.experiment == "fig6" and spec.samples < 3:
        raise SpecError("samples", "fig6 summarizes a distribution and needs >= 3 samples")
    if spec.seed < 0:
        raise SpecError("seed", f"must be >= 0, got {spec.seed}")
    if spec.perturbation not in ("bilocal", "global"):
        raise SpecError("perturbation", f"must be bilocal or global, got {spec.perturbation!r}")
    if spec.kind not in ("I", "Id"):
        raise SpecError("kind", f"must be I or Id, got {spec.kind!r}")
    if spec.restarts < 1:
        raise SpecError("restarts", f"must be >= 1, got {spec.restarts}")
    if spec.max_evals < 1:
        raise SpecError("max_evals", f"must be >= 1, got {spec.max_evals}")
    if spec.threads < 0:
        raise SpecError("threads", f"must be >= 0, got {spec.threads}")
    if spec.format not in ("csv", "json"):
        raise SpecError("format", f"must be csv or json, got {spec.format!r}")
    return spec


def _workers(spec: ExperimentSpec) -> int:
    return spec.threads if spec.threads > 0 else (os.cpu_count() or 1)


def _child_seed(seed: int, index: int) -> int:
    return int(derive_rng(seed, index).integers(2**62))


# --------------------------------------------------------------------------
# Runners.  Each returns (columns, rows, extra-results-for-the-sidecar).


def _run_fig1(spec):
    rows = []
    for l in _half_integer_range(spec.l_max):
        d = dim_from_l(l)
        state, settings = bell_state(d), optimal_settings(d)
        rows.append(
            (l, evaluate(BellKind.I, state, settings).value, evaluate(BellKind.ID, state, settings).value)
        )
    return ["l", "I", "Id"], rows, {}


def _run_fig2(spec):
    l_values = _half_integer_range(spec.l_max)
    workers = _workers(spec)
    profiles = {}
    for kind in (BellKind.I, BellKind.ID):
        profiles[kind] = violation_profile(
            kind, spec.epsilon, l_values, spec.samples, spec.seed,
            PerturbationKind(spec.perturbation), workers,
        )
    rows = [
        (l, si.p_violation, si.std_error, sd.p_violation, sd.std_error)
        for (l, si), (_, sd) in zip(profiles[BellKind.I], profiles[BellKind.ID])
    ]
    extra = {}
    if len(l_values) >= 3:  # the profile fit needs three points
        for kind, label in ((BellKind.I, "I"), (BellKind.ID, "Id")):
            fit = fit_erf_profile([(l, stats.p_violation) for l, stats in profiles[kind]])
            extra[label] = {
                "l_bar": fit.l_bar,
                "delta": fit.delta,
                "residual": fit.residual,
                "l_star": {str(p): l_star(fit, p) for p in (0.5, 0.1, 0.01)},
            }
    return ["l", "p_violation_I", "std_error_I", "p_violation_Id", "std_error_Id"], rows, {"profile_fits": extra}


def _histogram_rows(values):
    hist = build_histogram(values)
    return [
        (float(lo), float(hi), int(count))
        for lo, hi, count in zip(hist.bin_edges[:-1], hist.bin_edges[1:], hist.counts)
    ]


def _run_fig3(spec):
    run = sample_distribution(
        BellKind(spec.kind), dim_from_l(spec.l), spec.epsilon,
        PerturbationKind(spec.perturbation), spec.samples, spec.seed, _workers(spec),
    )
    return ["bin_lo", "bin_hi", "count"], _histogram_rows(run.values), {}


def _run_fig4(spec):
    kind = BellKind(spec.kind)
    rows = []
    for eps in _parse_grid(spec.epsilon_grid):
        run = sample_distribution(
            kind, dim_from_l(spec.l), eps, PerturbationKind(spec.perturbation),
            spec.samples, spec.seed, _workers(spec),
        )
        stats = violation_stats(run)
        rows.append((eps, stats.max_value, stats.p_violation))
    return ["epsilon", "max_value", "p_violation"], rows, {"classical_bound": classical_bound(kind)}


def _run_fig5(spec):
    workers = _workers(spec)
    columns = ["l", "eps_star_I_bilocal", "eps_star_Id_bilocal", "eps_star_I_global", "eps_star_Id_global"]
    rows = []
    for l in _half_integer_range(spec.l_max):
        d = dim_from_l(l)
        row = [l]
        for pert in (PerturbationKind.BILOCAL, PerturbationKind.GLOBAL):
            for kind in (BellKind.I, BellKind.ID):
                row.append(critical_epsilon(kind, d, spec.samples, spec.seed, pert, workers))
        rows.append(tuple(row))
    extra = {}
    for idx, name in enumerate(columns[1:], start=1):
        points = [(row[0], row[idx]) for row in rows if row[idx] > 0]
        if len(points) >= 2:
            fit = fit_power_law(points)
            extra[name] = {"a": fit.a, "b": fit.b, "residual": fit.residual}
    return columns, rows, {"power_law_fits": extra}


def _run_fig6(spec):
    run = random_measurement_run(dim_from_l(spec.l), spec.samples, spec.seed, _workers(spec))
    summary = gaussian_summary(run.values)
    extra = {"gaussian": {"mu": summary.mu, "sigma": summary.sigma, "skewness": summary.skewness}}
    return ["bin_lo", "bin_hi", "count"], _histogram_rows(run.values), extra


def _optimized_pair(state, spec, seed, workers):
    # evaluation budget instead of a wall-clock cutoff keeps reruns identical
    config = SimplexConfig(max_evals=spec.max_evals)
    out = []
    for kind in (BellKind.I, BellKind.ID):
        result = optimize_settings(state, kind, spec.restarts, seed, config, workers)
        out.append(result.best_value)
    return out


def _run_fig7(spec):
    workers = _workers(spec)
    rows = []
    for i, l in enumerate(_half_integer_range(spec.l_max)):
        state = bell_state(dim_from_l(l))
        values = _optimized_pair(state, spec, _child_seed(spec.seed, i), workers)
        rows.append((l, values[0], values[1]))
    return ["l", "I_opt", "Id_opt"], rows, {}


def _run_fig8(spec):
    workers = _workers(spec)
    rows = []
    counter = 0
    for l in _half_integer_range(spec.l_max):
        d = dim_from_l(l)
        best = {"entangled": [-np.inf, -np.inf], "product": [-np.inf, -np.inf]}
        # five random entangled states and two random product states per spin
        draws = [("entangled", random_entangled_state) for _ in range(5)]
        draws += [("product", random_product_state) for _ in range(2)]
        for label, sampler in draws:
            state = sampler(d, derive_rng(spec.seed, counter))
            values = _optimized_pair(state, spec, _child_seed(spec.seed, counter), workers)
            best[label] = [max(a, b) for a, b in zip(best[label], values)]
            counter += 1
        rows.append((l, best["entangled"][0], best["entangled"][1], best["product"][0], best["product"][1]))
    return ["l", "I_entangled", "Id_entangled", "I_product", "Id_product"], rows, {}


def _run_appendix(spec):
    workers = _workers(spec)
    l_values = [l for l in _half_integer_range(spec.l_max) if l >= spec.l]
    eps_values = _parse_grid(spec.epsilon_grid) if spec.epsilon_grid else [spec.epsilon]
    rows = []
    for l in l_values:
        d = dim_from_l(l)
        for eps in eps_values:
            report = empirical_concentration(d, eps, spec.samples, spec.seed, workers)
            rows.append(
                (d, eps, report.bound_main, report.bound_median,
                 report.empirical_fraction, report.empirical_mean, report.empirical_median)
            )
    columns = ["d", "epsilon", "bound_main", "bound_median",
               "empirical_fraction", "empirical_mean", "empirical_median"]
    return columns, rows, {}


_RUNNERS = {
    "fig1": _run_fig1,
    "fig2": _run_fig2,
    "fig3": _run_fig3,
    "fig4": _run_fig4,
    "fig5": _run_fig5,
    "fig6": _run_fig6,
    "fig7": _run_fig7,
    "fig8": _run_fig8,
    "appendix": _run_appendix,
}


# --------------------------------------------------------------------------
# Serialization.


def _format_cell(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


def write_output(path: str, fmt: str, columns, rows):
    if fmt == "csv":
        with open(path, "w", newline="") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(columns)
            for row in rows:
                writer.writerow([_format_cell(cell) for cell in row])
    else:
        document = {"columns": list(columns), "rows": [list(map(_to_jsonable, row)) for row in rows]}
        with open(path, "w") as handle:
            json.dump(document, handle, indent=1)
            handle.write("\n")


def _to_jsonable(value):
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return float(value)
    return value


def write_sidecar(spec: ExperimentSpec, extra: dict):
    meta = {
        "experiment": spec.experiment,
        "parameters": asdict(spec),
        "seed": spec.seed,
        "version": __version__,
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }
    if extra:
        meta["results"] = extra
    with open(spec.output + ".meta.json", "w") as handle:
        json.dump(meta, handle, indent=1, default=_to_jsonable)
        handle.write("\n")


def run_experiment(spec: ExperimentSpec) -> int:
    """Execute one validated spec; writes the data file and its sidecar."""
    validate_spec(spec)
    columns, rows, extra = _RUNNERS[spec.experiment](spec)
    write_output(spec.output, spec.format, columns, rows)
    write_sidecar(spec, extra)
    return 0


# --------------------------------------------------------------------------
# Argument handling.


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="quditbell",
        description="Bell-expression robustness experiments for d-level pairs",
    )
    sub = parser.add_subparsers(dest="experiment", required=True)
    descriptions = {
        "fig1": "expression values for the ideal state across dimensions",
        "fig2": "violation probability vs spin, with profile fits",
        "fig3": "histogram of perturbed expression values",
        "fig4": "maximum sampled value vs perturbation strength",
        "fig5": "critical perturbation strength vs spin, with power-law fits",
        "fig6": "histogram under fully random measurement bases",
        "fig7": "simplex-optimized expression values vs spin",
        "fig8": "optimized values for random entangled and product states",
        "appendix": "concentration bounds vs empirical tail fractions",
    }
    for name in EXPERIMENTS:
        p = sub.add_parser(name, help=descriptions[name])
        p.add_argument("--config", help="JSON file with spec fields; flags override it")
        p.add_argument("--l", type=float, help="spin value (d = 2l + 1)")
        p.add_argument("--l-max", dest="l_max", type=float, help="largest spin of a half-integer sweep")
        p.add_argument("--epsilon", type=float, help="perturbation strength or tail threshold")
        p.add_argument("--epsilon-grid", dest="epsilon_grid", help="geometric grid lo:hi:factor")
        p.add_argument("--samples", type=int, help="Monte Carlo samples per point")
        p.add_argument("--seed", type=int, help="base seed of the run")
        p.add_argument("--perturbation", choices=["bilocal", "global"])
        p.add_argument("--kind", choices=["I", "Id"], help="which Bell expression")
        p.add_argument("--restarts", type=int, help="optimizer restarts")
        p.add_argument("--max-evals", dest="max_evals", type=int,
                       help="objective-evaluation budget per optimizer restart")
        p.add_argument("--threads", type=int, help="worker threads (0 = auto)")
        p.add_argument("--output", help="data file path")
        p.add_argument("--format", choices=["csv", "json"], help="data file format")
    return parser


def build_spec(argv) -> ExperimentSpec:
    """Resolve an ExperimentSpec from argv, config file and per-experiment defaults."""
    args = vars(_build_parser().parse_args(argv))
    experiment = args.pop("experiment")
    config_path = args.pop("config", None)
    merged = {"experiment": experiment, **_DEFAULTS.get(experiment, {})}
    if config_path:
        try:
            with open(config_path) as handle:
                config = json.load(handle)
        except (OSError, json.JSONDecodeError) as err:
            raise SpecError("config", str(err)) from None
        known = {f.name for f in fields(ExperimentSpec)}
        for key, value in config.items():
            if key not in known:
                raise SpecError("config", f"unknown field {key!r}")
            if key != "experiment":
                merged[key] = value
    merged.update({k: v for k, v in args.items() if v is not None})
    return ExperimentSpec(**merged)


def main(argv=None) -> int:
    try:
        spec = build_spec(argv)
        return run_experiment(spec)
    except SpecError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

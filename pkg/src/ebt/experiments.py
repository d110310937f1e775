"""Experiment configs, presets for the published sweeps, and the batch runner.

A config is a JSON object::

    {
      "name": "table2",
      "mode": "optimize_sweep",
      "sweep": {"var": "N", "values": [60, 90, 120]},
      "base": {"N": 300, "lambda": 8, "L": 32, "s_max": 10,
               "d": 2.995732273553991, "mean_snr_db": 6},
      "simulation": {"enabled": false, "horizon": 100000, "seed": 0,
                     "replications": 1},
      "workers": 1
    }

``base`` may also carry ``slot_pmf`` (overrides the uniform pmf implied by
``s_max``), ``outage_target`` (instead of ``d``), the plan fields ``W``,
``Wbar``, ``Wc`` and the fixed data-slot count ``s`` used by rate sweeps.
"""

import copy
import csv
import io
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .errors import ConfigError, DomainError, InfeasibleError
from .optimizer import SystemParams, optimize, packet_budget
from .outage_model import SlotDistribution, minimize_psi
from .rate_model import (
    EbtPlan,
    db_to_linear,
    equivalent_conventional_width,
    mean_rate_conventional,
    mean_rate_ebt,
    mean_rate_ebt_approx,
    mean_rate_ebt_lower_bound,
)
from .simulator import Policy, SimMetrics, run_simulation

MODES = ("rate_sweep_W", "rate_sweep_Wbar", "optimize_sweep", "simulate", "single")
OPTIMIZE_SWEEP_VARS = ("s_max", "N", "d", "L", "lambda", "mean_snr_db")
BASE_FIELDS = ("N", "lambda", "L", "s_max", "slot_pmf", "d", "outage_target",
               "mean_snr_db", "W", "Wbar", "Wc", "s")
INT_FIELDS = ("N", "L", "s_max", "W", "Wbar", "Wc", "s")

CSV_COLUMNS = (
    "sweep_var", "sweep_value", "N", "lambda", "L", "s_max", "d", "mean_snr_db",
    "W", "Wbar", "Wc", "rate_ebt_exact", "rate_ebt_approx", "rate_ebt_lb",
    "rate_conv", "psi_star_ebt", "psi_star_conv", "chernoff_bound",
    "sim_rate_ebt", "sim_rate_conv", "sim_outage_ebt", "sim_outage_conv",
    "empirical_qos_ebt", "empirical_qos_conv", "feasible",
)

DEFAULT_HORIZON = 100_000
D_005 = -math.log(0.05)


@dataclass
class SimulationSettings:
    enabled: bool = False
    horizon: int = DEFAULT_HORIZON
    seed: int = 0
    replications: int = 1


@dataclass
class ExperimentConfig:
    mode: str
    base: dict
    sweep_var: str = ""
    sweep_values: list = field(default_factory=list)
    simulation: SimulationSettings = field(default_factory=SimulationSettings)
    name: str = ""
    workers: int = 1

    @classmethod
    def from_dict(cls, raw):
        if not isinstance(raw, dict):
            raise ConfigError("config: top level must be an object")
        known = {"name", "mode", "sweep", "base", "simulation", "workers"}
        for key in raw:
            if key not in known:
                raise ConfigError(f"field '{key}': unknown field")
        mode = raw.get("mode")
        if mode not in MODES:
            raise ConfigError(f"field 'mode': expected one of {', '.join(MODES)}, got {mode!r}")
        base = raw.get("base")
        if not isinstance(base, dict):
            raise ConfigError("field 'base': required object")
        base = {k: _check_base_field(k, v) for k, v in base.items()}
        name = raw.get("name", "")
        if not isinstance(name, str):
            raise ConfigError("field 'name': must be a string")
        workers = raw.get("workers", 1)
        if not _is_int(workers) or workers < 1:
            raise ConfigError("field 'workers': must be a positive integer")

        sweep_var, values = "", []
        sweep = raw.get("sweep")
        if mode != "single":
            if not isinstance(sweep, dict):
                raise ConfigError("field 'sweep': required object with 'var' and 'values'")
            sweep_var = sweep.get("var")
            values = sweep.get("values")
            if not isinstance(values, list) or not values:
                raise ConfigError("field 'sweep.values': must be a nonempty array")
            _check_sweep_var(mode, sweep_var)
            values = [_check_base_field(sweep_var, v, where=f"sweep.values[{i}]")
                      for i, v in enumerate(values)]
        elif sweep is not None:
            raise ConfigError("field 'sweep': not allowed in mode 'single'")

        sim_raw = raw.get("simulation", {})
        if not isinstance(sim_raw, dict):
            raise ConfigError("field 'simulation': must be an object")
        sim = SimulationSettings()
        for key, value in sim_raw.items():
            if key == "enabled":
                if not isinstance(value, bool):
                    raise ConfigError("field 'simulation.enabled': must be a boolean")
            elif key in ("horizon", "replications"):
                if not _is_int(value) or value < 1:
                    raise ConfigError(f"field 'simulation.{key}': must be a positive integer")
            elif key == "seed":
                if not _is_int(value) or value < 0 or value >= 2 ** 64:
                    raise ConfigError("field 'simulation.seed': must be an unsigned 64-bit integer")
            else:
                raise ConfigError(f"field 'simulation.{key}': unknown field")
            setattr(sim, key, value)
        if mode == "simulate":
            sim.enabled = True

        cfg = cls(mode=mode, base=base, sweep_var=sweep_var or "", sweep_values=values,
                  simulation=sim, name=name, workers=workers)
        # every sweep point must build; surfaces missing fields before any work starts
        for i in range(max(1, len(values))):
            cfg.point(i)
        return cfg

    def to_dict(self):
        out = {"name": self.name, "mode": self.mode}
        if self.mode != "single":
            out["sweep"] = {"var": self.sweep_var, "values": list(self.sweep_values)}
        out["base"] = dict(self.base)
        out["simulation"] = {
            "enabled": self.simulation.enabled,
            "horizon": self.simulation.horizon,
            "seed": self.simulation.seed,
            "replications": self.simulation.replications,
        }
        out["workers"] = self.workers
        return out

    def point(self, index):
        """Base parameters with the sweep variable set to its ``index``-th value."""
        values = dict(self.base)
        if self.mode != "single":
            values[self.sweep_var] = self.sweep_values[index]
            if self.sweep_var == "d":
                values.pop("outage_target", None)
            if self.sweep_var == "s_max":
                values.pop("slot_pmf", None)
        return _resolve_point(self.mode, values, where=_where(self, index))


def _where(cfg, index):
    return "base" if cfg.mode == "single" else f"sweep point {index}"


def _is_int(v):
    return isinstance(v, int) and not isinstance(v, bool)


def _is_number(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def _check_base_field(key, value, where=None):
    where = where or f"base.{key}"
    if key not in BASE_FIELDS:
        raise ConfigError(f"field '{where}': unknown parameter '{key}'")
    if value is None:
        return None
    if key == "slot_pmf":
        if not isinstance(value, list) or not all(_is_number(p) for p in value):
            raise ConfigError(f"field '{where}': must be an array of numbers")
        return list(value)
    if key in INT_FIELDS:
        if not _is_int(value) or value < 1:
            raise ConfigError(f"field '{where}': must be a positive integer, got {value!r}")
        return value
    if not _is_number(value):
        raise ConfigError(f"field '{where}': must be a finite number, got {value!r}")
    if key in ("d", "outage_target") and value <= 0:
        raise ConfigError(f"field '{where}': must be positive")
    if key == "outage_target" and value >= 1:
        raise ConfigError(f"field '{where}': must lie in (0, 1)")
    if key == "lambda" and value < 0:
        raise ConfigError(f"field '{where}': must be nonnegative")
    return value


def _check_sweep_var(mode, var):
    allowed = {
        "rate_sweep_W": ("W",),
        "rate_sweep_Wbar": ("Wbar",),
        "optimize_sweep": OPTIMIZE_SWEEP_VARS,
        "simulate": ("s_max", "N", "d", "L", "lambda", "mean_snr_db", "W", "Wbar", "Wc"),
    }[mode]
    if var not in allowed:
        raise ConfigError(f"field 'sweep.var': mode '{mode}' sweeps one of "
                          f"{', '.join(allowed)}, got {var!r}")


@dataclass
class Point:
    """Fully resolved inputs for one sweep point."""

    values: dict
    params: SystemParams = None
    plan: EbtPlan = None
    Wc: int = None


def _resolve_point(mode, values, where):
    def need(*keys):
        for k in keys:
            if values.get(k) is None:
                raise ConfigError(f"field 'base.{k}': required for mode '{mode}' ({where})")

    values = dict(values)
    if values.get("d") is None and values.get("outage_target") is not None:
        values["d"] = -math.log(values["outage_target"])
    pt = Point(values)
    need("mean_snr_db")
    try:
        if mode in ("rate_sweep_W", "rate_sweep_Wbar"):
            need("W", "Wbar", "s")
            pt.plan = EbtPlan(values["W"], values["Wbar"])
            return pt
        need("N", "lambda", "L", "d")
        if values.get("slot_pmf") is not None:
            slots = SlotDistribution(tuple(values["slot_pmf"]))
            if values.get("s_max") not in (None, slots.s_max):
                raise ConfigError(f"field 'base.s_max': disagrees with slot_pmf length ({where})")
        else:
            need("s_max")
            slots = SlotDistribution.uniform(values["s_max"])
        values["s_max"] = slots.s_max
        pt.params = SystemParams(values["N"], float(values["lambda"]), values["L"], slots,
                                 db_to_linear(values["mean_snr_db"]), float(values["d"]))
        if mode == "simulate" or (mode == "single" and _has_plan(values)):
            if not _has_plan(values):
                raise ConfigError(f"field 'base.W': simulate needs W and Wbar and/or Wc ({where})")
            if values.get("W") is not None or values.get("Wbar") is not None:
                need("W", "Wbar")
                pt.plan = EbtPlan(values["W"], values["Wbar"])
            pt.Wc = values.get("Wc")
            for width in (pt.plan.W if pt.plan else None, pt.Wc):
                if width is not None and width > pt.params.N:
                    raise ConfigError(f"field 'base': plan needs {width} channels "
                                      f"but N = {pt.params.N} ({where})")
    except DomainError as exc:
        raise ConfigError(f"field 'base': {exc} ({where})") from exc
    return pt


def _has_plan(values):
    return any(values.get(k) is not None for k in ("W", "Wbar", "Wc"))


# ---------------------------------------------------------------- presets

def _optimize_preset(name, var, values, base, simulate):
    return {
        "name": name,
        "mode": "optimize_sweep",
        "sweep": {"var": var, "values": values},
        "base": base,
        "simulation": {"enabled": simulate, "horizon": DEFAULT_HORIZON, "seed": 0,
                       "replications": 1},
        "workers": 1,
    }


def _table_presets():
    common = {"lambda": 8, "L": 32, "d": D_005, "mean_snr_db": 6}
    table1 = ("s_max", list(range(2, 21, 2)), dict(common, N=200, s_max=10))
    table2 = ("N", list(range(60, 301, 30)), dict(common, N=300, s_max=10))
    # d_k = k ln(10) / 5, i.e. targets 10^(-k/5); the table prints them truncated
    d_grid = [k * math.log(10.0) / 5.0 for k in range(5, 16)]
    table3 = ("d", d_grid, dict(common, N=300, s_max=10))
    table4 = ("L", list(range(10, 31, 2)),
              {"N": 300, "lambda": 20, "L": 20, "s_max": 10, "d": D_005, "mean_snr_db": 6})
    return {"table1": table1, "table2": table2, "table3": table3, "table4": table4}


PRESET_NAMES = ("fig3", "fig4", "fig6", "fig7", "fig8", "fig9",
                "table1", "table2", "table3", "table4")

_FIGURE_OF_TABLE = {"fig6": "table1", "fig7": "table2", "fig8": "table3", "fig9": "table4"}


def preset(name):
    """Config dict reproducing one of the published figures or tables."""
    if name == "fig3":
        return {
            "name": "fig3", "mode": "rate_sweep_W",
            "sweep": {"var": "W", "values": list(range(5, 51))},
            "base": {"W": 5, "Wbar": 5, "s": 10, "mean_snr_db": 10},
            "simulation": {"enabled": False, "horizon": DEFAULT_HORIZON, "seed": 0,
                           "replications": 1},
            "workers": 1,
        }
    if name == "fig4":
        return {
            "name": "fig4", "mode": "rate_sweep_Wbar",
            "sweep": {"var": "Wbar", "values": list(range(1, 21))},
            "base": {"W": 20, "Wbar": 1, "s": 10, "mean_snr_db": 10},
            "simulation": {"enabled": False, "horizon": DEFAULT_HORIZON, "seed": 0,
                           "replications": 1},
            "workers": 1,
        }
    tables = _table_presets()
    if name in tables:
        var, values, base = tables[name]
        return _optimize_preset(name, var, values, base, simulate=False)
    if name in _FIGURE_OF_TABLE:
        var, values, base = tables[_FIGURE_OF_TABLE[name]]
        return _optimize_preset(name, var, values, base, simulate=True)
    raise ConfigError(f"unknown preset '{name}'; choose from {', '.join(PRESET_NAMES)}")


# ---------------------------------------------------------------- running

def _seed_for(cfg, index, policy_index, rep):
    return np.random.SeedSequence(cfg.simulation.seed, spawn_key=(index, policy_index, rep))


def _simulate(cfg, index, params, policy, policy_index):
    total = SimMetrics()
    for rep in range(cfg.simulation.replications):
        m = run_simulation(params, policy, cfg.simulation.horizon,
                           _seed_for(cfg, index, policy_index, rep))
        total = total.merge(m)
    return total


def _psi_or_none(W, Wbar, params):
    try:
        return minimize_psi(W, Wbar, params.traffic_rates(), params.N).psi_star
    except InfeasibleError:
        return None


def _empty_row(cfg, pt, index):
    v = pt.values
    row = dict.fromkeys(CSV_COLUMNS)
    row["sweep_var"] = cfg.sweep_var
    row["sweep_value"] = cfg.sweep_values[index] if cfg.mode != "single" else None
    for col, key in (("N", "N"), ("lambda", "lambda"), ("L", "L"), ("s_max", "s_max"),
                     ("d", "d"), ("mean_snr_db", "mean_snr_db")):
        row[col] = v.get(key)
    return row


def _fill_rates(row, plan, mean_snr):
    row["W"], row["Wbar"] = plan.W, plan.Wbar
    row["rate_ebt_exact"] = mean_rate_ebt(plan, mean_snr)
    if plan.Wbar < plan.W:
        row["rate_ebt_approx"] = mean_rate_ebt_approx(plan, mean_snr)
        row["rate_ebt_lb"] = mean_rate_ebt_lower_bound(plan, mean_snr)


def _fill_sim(row, suffix, metrics):
    row[f"sim_rate_{suffix}"] = _finite_or_none(metrics.mean_rate_per_data_slot)
    row[f"sim_outage_{suffix}"] = _finite_or_none(metrics.outage_fraction)
    # censored exponents (no outage seen) are left empty rather than reported as exact
    if metrics.outage_observed:
        row[f"empirical_qos_{suffix}"] = metrics.empirical_qos_exponent


def _finite_or_none(x):
    return x if x is not None and math.isfinite(x) else None


def evaluate_point(cfg, index):
    """One result row (dict keyed by CSV_COLUMNS) plus summary extras."""
    pt = cfg.point(index)
    row = _empty_row(cfg, pt, index)
    extra = {}

    if cfg.mode in ("rate_sweep_W", "rate_sweep_Wbar"):
        mean_snr = db_to_linear(pt.values["mean_snr_db"])
        _fill_rates(row, pt.plan, mean_snr)
        Wc = equivalent_conventional_width(pt.plan, pt.values["s"])
        row["Wc"] = Wc
        row["rate_conv"] = mean_rate_conventional(Wc, mean_snr)
        return row, extra

    params = pt.params
    if pt.plan is None and pt.Wc is None:
        out = optimize(params)
        plan = out.ebt_plan
        Wc = int(out.conv_plan.Wc) if out.conv_plan else None
        row["feasible"] = out.feasible
        ebt_budget, conv_budget = packet_budget(out, params.slots)
        extra["packet_budget"] = {"s_bar": params.slots.mean, "ebt_packets": ebt_budget,
                                  "conv_packets": conv_budget}
        row["psi_star_ebt"], row["psi_star_conv"] = out.ebt_psi, out.conv_psi
    else:
        plan, Wc = pt.plan, pt.Wc
        ok = True
        if plan is not None:
            row["psi_star_ebt"] = _psi_or_none(plan.W, plan.Wbar, params)
            ok = ok and row["psi_star_ebt"] is not None and row["psi_star_ebt"] <= -params.d
        if Wc is not None:
            row["psi_star_conv"] = _psi_or_none(Wc, Wc, params)
            ok = ok and row["psi_star_conv"] is not None and row["psi_star_conv"] <= -params.d
        row["feasible"] = ok

    if plan is not None:
        _fill_rates(row, plan, params.mean_snr)
        if row["psi_star_ebt"] is not None:
            row["chernoff_bound"] = math.exp(row["psi_star_ebt"])
    if Wc is not None:
        row["Wc"] = Wc
        row["rate_conv"] = mean_rate_conventional(Wc, params.mean_snr)

    if cfg.simulation.enabled:
        if plan is not None:
            _fill_sim(row, "ebt", _simulate(cfg, index, params,
                                            Policy.ebt(plan.W, plan.Wbar), 0))
        if Wc is not None:
            _fill_sim(row, "conv", _simulate(cfg, index, params, Policy.conventional(Wc), 1))
    return row, extra


def _evaluate_task(args):
    cfg_dict, index = args
    return evaluate_point(ExperimentConfig.from_dict(cfg_dict), index)


def _format(value):
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def rows_to_csv(rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow([_format(row[c]) for c in CSV_COLUMNS])
    return buf.getvalue()


def _summary_notes(cfg, rows):
    notes = {}
    if cfg.mode == "rate_sweep_Wbar":
        # smallest Wbar from which EBT stays at or above the equal-budget conventional rate
        cross = None
        for row in reversed(rows):
            # Wbar = W ties the two schemes up to rounding
            if row["rate_ebt_exact"] >= row["rate_conv"] * (1.0 - 1e-9):
                cross = row["Wbar"]
            else:
                break
        notes["crossover_wbar"] = cross
    return notes


@dataclass
class ExperimentResult:
    rows: list
    csv_text: str
    summary: dict


def run_experiment(cfg, out_dir=None):
    """Evaluate every sweep point, write ``results.csv`` and ``summary.json``.

    Points run concurrently on ``cfg.workers`` processes; rows stay in
    sweep order. Infeasible points become rows with ``feasible=false``.
    """
    if isinstance(cfg, dict):
        cfg = ExperimentConfig.from_dict(cfg)
    started = time.perf_counter()
    n_points = 1 if cfg.mode == "single" else len(cfg.sweep_values)
    tasks = [(cfg.to_dict(), i) for i in range(n_points)]
    if cfg.workers > 1 and n_points > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(_evaluate_task, tasks))
    else:
        results = [evaluate_point(cfg, i) for i in range(n_points)]
    rows = [r for r, _ in results]
    csv_text = rows_to_csv(rows)

    summary = {
        "config": cfg.to_dict(),
        "version": __version__,
        "wall_clock_s": time.perf_counter() - started,
        "rows": len(rows),
        "infeasible_points": [i for i, r in enumerate(rows) if r["feasible"] is False],
        "points": [dict(extra, sweep_value=row["sweep_value"])
                   for row, (_, extra) in zip(rows, results) if extra],
    }
    summary.update(_summary_notes(cfg, rows))

    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, "results.csv"), "w", encoding="utf-8", newline="") as fh:
            fh.write(csv_text)
        with open(os.path.join(out_dir, "summary.json"), "w", encoding="utf-8") as fh:
            json.dump(summary, fh, indent=2)
            fh.write("\n")
    return ExperimentResult(rows, csv_text, summary)


def load_config(path):
    """Parse a config file; JSON syntax errors are reported with line and column."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config ({exc.strerror})") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    # a run summary carries its config under "config"; accept it for re-runs
    if isinstance(raw, dict) and "config" in raw and "mode" not in raw:
        raw = raw["config"]
    return copy.deepcopy(raw)

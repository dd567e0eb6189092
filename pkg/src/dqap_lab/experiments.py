"""Experiment drivers: JSON config in, CSV tables plus a manifest out.

Each experiment kind expands into independent tasks (one per chain
size, typically), which run inline or on a process pool.  Tasks return
named row lists; the driver concatenates them in task order so output
is deterministic for a fixed config and seed, writes one CSV per name,
and records a manifest.json describing the invocation next to the
tables.

Every CSV row starts with the full (L, N, gamma, M) context.  Site and
layer indices in files are 1-based; M = 0 marks rows with no circuit
attached (e.g. ramp tabulations).  Floats are written in scientific
notation with 17 significant digits.
"""

from __future__ import annotations

import csv
import json
import os
import time
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .adiabatic import (
    EvolutionPlan,
    aggregate_times,
    evolve_linear_schedule,
    find_T_epsilon,
    maximize_overlap,
    qab_samples,
)
from .ansatz import build_dqap_state, build_imag_state, intermediate_states, orbital_support
from .entanglement import (
    Subsystem,
    boundary_rank_diagnostic,
    correlation_spectrum,
    entanglement_entropy,
    mutual_information,
    scaling_exponents,
)
from .errors import ConfigError
from .lattice import LatticeSpec, exact_ground_state
from .optimizer import OptimizerConfig, optimize, optimize_imaginary, warm_start
from .slater import SlaterState, overlap

EPS_INF_COEFF = 2.0 / np.pi  # per-site energy of the infinite chain, in units of t

KINDS = (
    "energy-sweep",
    "entanglement-sweep",
    "mutual-info",
    "orbital-evolution",
    "params-trace",
    "teff",
    "imaginary-sweep",
    "continuous-time",
    "qab",
    "schedule-overlap",
    "spectrum-diagnostic",
)

_LADDER_KINDS_NEEDING_DEPTHS = {
    "energy-sweep",
    "entanglement-sweep",
    "mutual-info",
    "params-trace",
    "imaginary-sweep",
    "spectrum-diagnostic",
}


@dataclass
class ExperimentConfig:
    """Validated experiment description.

    `depths` is a list of circuit depths, or "quarter" for the
    exact-recovery depth (L/4 antiperiodic, (L-2)/4 periodic), or None
    where the kind has a natural default.  Kind-specific settings live
    in `options`.
    """

    kind: str
    sizes: list
    boundary: str = "apbc"
    depths: object = None
    t: float = 1.0
    seed: int = 0
    optimizer: dict = field(default_factory=dict)
    out: str | None = None
    options: dict = field(default_factory=dict)

    _TOP_KEYS = {"experiment", "sizes", "boundary", "depths", "t", "seed", "optimizer", "out"}

    @classmethod
    def from_dict(cls, raw: dict, kind: str | None = None) -> "ExperimentConfig":
        if not isinstance(raw, dict):
            raise ConfigError(f"config must be an object, got {type(raw).__name__}")
        cfg_kind = raw.get("experiment", kind)
        if cfg_kind is None:
            raise ConfigError("no experiment kind given (config key 'experiment')")
        if kind is not None and cfg_kind != kind:
            raise ConfigError(
                f"config says experiment={cfg_kind!r} but {kind!r} was requested"
            )
        if cfg_kind not in KINDS:
            raise ConfigError(f"unknown experiment kind {cfg_kind!r}")
        sizes = raw.get("sizes")
        if not isinstance(sizes, list) or not sizes:
            raise ConfigError("'sizes' must be a non-empty list of even chain lengths")
        for L in sizes:
            if not isinstance(L, int) or L < 2 or L % 2:
                raise ConfigError(f"invalid chain length {L!r}")
        boundary = raw.get("boundary", "apbc")
        if boundary not in ("apbc", "pbc"):
            raise ConfigError(f"boundary must be 'apbc' or 'pbc', got {boundary!r}")
        depths = raw.get("depths")
        if depths is not None and depths != "quarter":
            if not isinstance(depths, list) or not depths:
                raise ConfigError("'depths' must be a non-empty list or 'quarter'")
            for m in depths:
                if not isinstance(m, int) or m < 0:
                    raise ConfigError(f"invalid depth {m!r}")
        if depths is None and cfg_kind in _LADDER_KINDS_NEEDING_DEPTHS:
            raise ConfigError(f"experiment {cfg_kind!r} needs explicit 'depths'")
        opt = raw.get("optimizer", {})
        if not isinstance(opt, dict):
            raise ConfigError("'optimizer' must be an object")
        try:
            OptimizerConfig(**opt)
        except TypeError as exc:
            raise ConfigError(f"bad optimizer settings: {exc}") from exc
        seed = raw.get("seed", 0)
        if not isinstance(seed, int):
            raise ConfigError(f"seed must be an integer, got {seed!r}")
        t = float(raw.get("t", 1.0))
        if t <= 0:
            raise ConfigError(f"t must be positive, got {t}")
        options = {k: v for k, v in raw.items() if k not in cls._TOP_KEYS}
        return cls(
            kind=cfg_kind,
            sizes=list(sizes),
            boundary=boundary,
            depths=depths,
            t=t,
            seed=seed,
            optimizer=dict(opt),
            out=raw.get("out"),
            options=options,
        )

    @classmethod
    def from_json(cls, path, kind=None) -> "ExperimentConfig":
        try:
            with open(path) as fh:
                raw = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_dict(raw, kind=kind)


@dataclass
class RunManifest:
    """What a driver invocation did; serialized to manifest.json."""

    experiment: str
    config: dict
    version: str
    seed: int
    jobs: int
    wall_time_s: float
    outputs: list
    runs: list
    ok: bool
    aggregate: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "experiment": self.experiment,
            "config": self.config,
            "version": self.version,
            "seed": self.seed,
            "jobs": self.jobs,
            "wall_time_s": self.wall_time_s,
            "outputs": self.outputs,
            "runs": self.runs,
            "ok": self.ok,
            "aggregate": self.aggregate,
        }


def _gamma(boundary):
    return +1 if boundary == "pbc" else -1


def _quarter_depth(L, boundary):
    return L // 4 if boundary == "apbc" else (L - 2) // 4


def _resolve_depths(task):
    depths = task["depths"]
    if depths == "quarter" or depths is None:
        return [_quarter_depth(task["L"], task["boundary"])]
    return sorted(set(depths))


def _spec(task):
    return LatticeSpec.half_filling(
        task["L"], gamma=_gamma(task["boundary"]), t=task["t"]
    )


def _opt_config(task):
    return OptimizerConfig(**task["optimizer"])


def _ladder(spec, depths, cfg, imaginary=False):
    """Optimize at each depth, warm-starting every rung from the last.

    Depth 0 is allowed and returns the bare dimer result.  Returns
    {depth: OptResult} for the requested depths.
    """
    run = optimize_imaginary if imaginary else optimize
    out = {}
    top = max(depths)
    params = None
    for m in range(0, top + 1):
        if m == 0:
            if 0 in depths:
                out[0] = run(spec, 0, cfg)
            continue
        init = warm_start(params) if params is not None and m > 1 else None
        res = run(spec, m, cfg, init=init)
        params = res.params
        if m in depths:
            out[m] = res
    return out


def _context(spec, m):
    return [spec.L, spec.N, spec.gamma, m]


# ---- per-kind task bodies ----


def _task_energy_sweep(task):
    spec = _spec(task)
    depths = _resolve_depths(task)
    results = _ladder(spec, depths, _opt_config(task))
    e_exact = exact_ground_state(spec)[1]
    eps_inf = -EPS_INF_COEFF * spec.t
    rows = []
    for m in depths:
        r = results[m]
        rows.append(
            _context(spec, m)
            + [r.energy, e_exact, r.energy - e_exact, r.energy / spec.L - eps_inf,
               r.iterations, int(r.converged)]
        )
    return {"energy": rows}


def _task_entanglement_sweep(task):
    spec = _spec(task)
    depths = _resolve_depths(task)
    cfg = _opt_config(task)
    results = _ladder(spec, depths, cfg)
    la = int(task["options"].get("subsystem_size", spec.L // 2))
    cut = Subsystem.contiguous(0, la, spec.L)
    exact_orb, e_exact = exact_ground_state(spec)
    s_exact = entanglement_entropy(SlaterState(exact_orb), cut)
    eps_inf = -EPS_INF_COEFF * spec.t
    rows, ms, svals, evals = [], [], [], []
    for m in depths:
        r = results[m]
        state = build_dqap_state(spec, r.params)
        s = entanglement_entropy(state, cut)
        deps = r.energy / spec.L - eps_inf
        rows.append(_context(spec, m) + [la, s, s_exact, r.energy, deps])
        ms.append(m)
        svals.append(s)
        evals.append(deps)
    out = {"entropy": rows}
    ms = np.asarray(ms)
    if len(ms) >= 2 and np.all(np.diff(ms) == 1) and np.all(np.asarray(evals) > 0):
        mm, ds, de = scaling_exponents(ms, svals, evals)
        out["exponents"] = [
            _context(spec, int(m)) + [float(a), float(b)] for m, a, b in zip(mm, ds, de)
        ]
    return out


def _task_mutual_info(task):
    spec = _spec(task)
    depths = _resolve_depths(task)
    results = _ladder(spec, depths, _opt_config(task))
    xp0 = spec.L // 2 - 1  # site L/2 in 1-based labels
    rows = []
    for m in depths:
        state = build_dqap_state(spec, results[m].params)
        for x0 in range(spec.L):
            if x0 == xp0:
                continue
            raw = abs(x0 - xp0)
            dist = min(raw, spec.L - raw)
            rows.append(
                _context(spec, m)
                + [x0 + 1, xp0 + 1, dist, mutual_information(state, x0, xp0)]
            )
    return {"minfo": rows}


def _task_orbital_evolution(task):
    spec = _spec(task)
    depths = _resolve_depths(task)
    results = _ladder(spec, depths, _opt_config(task))
    rows = []
    for m in depths:
        for layer, state in enumerate(intermediate_states(spec, results[m].params)):
            ext = orbital_support(state)
            rows.extend(
                _context(spec, m) + [layer, n + 1, int(ext[n])] for n in range(spec.N)
            )
    return {"orbitals": rows}


def _task_params_trace(task):
    spec = _spec(task)
    depths = _resolve_depths(task)
    results = _ladder(spec, depths, _opt_config(task))
    rows = []
    for m in depths:
        tab = results[m].params.angles
        rows.extend(
            _context(spec, m) + [k + 1, tab[k, 0], tab[k, 1]] for k in range(m)
        )
    return {"params": rows}


def _task_teff(task):
    spec = _spec(task)
    depth = _resolve_depths(task)[-1]
    results = _ladder(spec, [depth], _opt_config(task))
    t_eff = aggregate_times(results[depth].params)
    return {
        "teff": [_context(spec, depth) + [t_eff]],
        "summary": {"L": spec.L, "t_eff": t_eff},
    }


def _task_imaginary_sweep(task):
    spec = _spec(task)
    depths = _resolve_depths(task)
    results = _ladder(spec, depths, _opt_config(task), imaginary=True)
    exact_orb, e_exact = exact_ground_state(spec)
    exact_state = SlaterState(exact_orb)
    rows = []
    for m in depths:
        r = results[m]
        state = build_imag_state(spec, r.params)
        ov = overlap(exact_state, state)
        norm_sq = overlap(state, state).real
        dist = float(np.sqrt(max(1.0 - abs(ov) ** 2 / norm_sq, 0.0)))
        rows.append(
            _context(spec, m)
            + [r.energy, e_exact, r.energy - e_exact, dist,
               aggregate_times(r.params), r.iterations, int(r.converged)]
        )
    return {"imag": rows}


def _task_continuous_time(task):
    spec = _spec(task)
    opts = task["options"]
    dtau = float(opts.get("dtau", 0.01))
    order = int(opts.get("order", 1))
    rows, teps_rows = [], []
    summary = {"L": spec.L}
    for t_total in opts.get("T_grid", []):
        m = max(1, round(t_total / dtau))
        plan = EvolutionPlan(T=float(t_total), M=m, order=order)
        _, eps = evolve_linear_schedule(spec, plan)
        rows.append(_context(spec, m) + [float(t_total), eps])
    if "target_eps" in opts:
        target = float(opts["target_eps"])
        t_eps = find_T_epsilon(spec, target, dtau=dtau, order=order)
        teps_rows.append(
            _context(spec, max(1, round(t_eps / dtau))) + [target, t_eps]
        )
        summary["T_eps"] = t_eps
    out = {"conttime": rows, "summary": summary}
    if teps_rows:
        out["teps"] = teps_rows
    return out


def _task_qab(task):
    spec = _spec(task)
    n = int(task["options"].get("samples", 1001))
    rows = [
        _context(spec, 0) + [smp.s, smp.chi, smp.gap]
        for smp in qab_samples(spec.L, n, spec.t)
    ]
    return {"qab": rows}


def _task_schedule_overlap(task):
    spec = _spec(task)
    depth = _resolve_depths(task)[-1]
    results = _ladder(spec, [depth], _opt_config(task))
    params = results[depth].params
    rows = []
    for m in range(1, depth + 1):
        chi_f, al_f, f_free = maximize_overlap(spec, params, m)
        chi_1, _, f_one = maximize_overlap(spec, params, m, alpha=1.0)
        rows.append(_context(spec, depth) + [m, chi_f, al_f, f_free, chi_1, f_one])
    return {"schedule": rows}


def _task_spectrum_diagnostic(task):
    spec = _spec(task)
    depths = _resolve_depths(task)
    results = _ladder(spec, depths, _opt_config(task))
    la = int(task["options"].get("subsystem_size", spec.L // 2))
    cut = Subsystem.contiguous(0, la, spec.L)
    spec_rows, diag_rows = [], []
    for m in depths:
        state = build_dqap_state(spec, results[m].params)
        cs = correlation_spectrum(state, cut)
        spec_rows.extend(
            _context(spec, m) + [la, i + 1, float(v)] for i, v in enumerate(cs.levels)
        )
        diag = boundary_rank_diagnostic(state, cut)
        diag_rows.append(
            _context(spec, m)
            + [la, diag.rank, diag.n_zero, diag.n_one,
               int(diag.pairwise_degenerate), int(diag.bond_preserving)]
        )
    return {"spectrum": spec_rows, "specdiag": diag_rows}


_TASK_BODIES = {
    "energy-sweep": _task_energy_sweep,
    "entanglement-sweep": _task_entanglement_sweep,
    "mutual-info": _task_mutual_info,
    "orbital-evolution": _task_orbital_evolution,
    "params-trace": _task_params_trace,
    "teff": _task_teff,
    "imaginary-sweep": _task_imaginary_sweep,
    "continuous-time": _task_continuous_time,
    "qab": _task_qab,
    "schedule-overlap": _task_schedule_overlap,
    "spectrum-diagnostic": _task_spectrum_diagnostic,
}

_HEADERS = {
    "energy": ["L", "N", "gamma", "M", "E", "E_exact", "dE", "dEps", "iterations", "converged"],
    "entropy": ["L", "N", "gamma", "M", "LA", "S", "S_exact", "E", "dEps"],
    "exponents": ["L", "N", "gamma", "M", "exp_entropy", "exp_energy"],
    "minfo": ["L", "N", "gamma", "M", "x", "xp", "dist", "mi"],
    "orbitals": ["L", "N", "gamma", "M", "layer", "orbital", "extent"],
    "params": ["L", "N", "gamma", "M", "layer", "angle_odd", "angle_even"],
    "teff": ["L", "N", "gamma", "M", "t_eff"],
    "imag": ["L", "N", "gamma", "M", "E", "E_exact", "dE", "distance", "beta_bar",
             "iterations", "converged"],
    "conttime": ["L", "N", "gamma", "M", "T", "eps"],
    "teps": ["L", "N", "gamma", "M", "target_eps", "T_eps"],
    "qab": ["L", "N", "gamma", "M", "s", "chi", "gap"],
    "schedule": ["L", "N", "gamma", "M", "m", "chi_free", "alpha_free", "overlap_free",
                 "chi_fixed_alpha", "overlap_fixed_alpha"],
    "spectrum": ["L", "N", "gamma", "M", "LA", "idx", "level"],
    "specdiag": ["L", "N", "gamma", "M", "LA", "rank", "n_zero", "n_one",
                 "pairwise_degenerate", "bond_preserving"],
}


def run_task(task: dict) -> dict:
    """Execute one task; top-level so it can cross a process boundary."""
    return _TASK_BODIES[task["kind"]](task)


def _build_tasks(config: ExperimentConfig):
    seeds = np.random.SeedSequence(config.seed).spawn(len(config.sizes))
    tasks = []
    for i, L in enumerate(config.sizes):
        opt = dict(config.optimizer)
        opt.setdefault("seed", int(seeds[i].generate_state(1)[0]))
        tasks.append(
            {
                "kind": config.kind,
                "L": L,
                "boundary": config.boundary,
                "t": config.t,
                "depths": config.depths,
                "optimizer": opt,
                "options": config.options,
                "label": f"{config.kind} L={L} {config.boundary}",
            }
        )
    return tasks


def _format_cell(v):
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.16e}"
    return str(v)


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_format_cell(v) for v in row])


def resolve_jobs(jobs: int | None) -> int:
    """Explicit value, else the DQAP_JOBS environment override, else 1."""
    if jobs is not None:
        return max(1, jobs)
    env = os.environ.get("DQAP_JOBS")
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ConfigError(f"DQAP_JOBS must be an integer, got {env!r}") from exc
    return 1


def run_experiment(
    config: ExperimentConfig, jobs: int | None = None, out_dir: str | None = None
) -> RunManifest:
    """Run all tasks of an experiment and write CSVs plus manifest.json.

    Tasks run on a process pool when jobs > 1; failures are recorded in
    the manifest without aborting sibling tasks.  Returns the manifest
    (ok = True only if every task succeeded).
    """
    jobs = resolve_jobs(jobs)
    out = out_dir or config.out or os.path.join("runs", config.kind)
    os.makedirs(out, exist_ok=True)
    tasks = _build_tasks(config)
    t0 = time.monotonic()
    results, run_records = [None] * len(tasks), []
    if jobs == 1 or len(tasks) == 1:
        for i, task in enumerate(tasks):
            try:
                results[i] = run_task(task)
            except Exception:
                results[i] = {"error": traceback.format_exc()}
    else:
        with ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as pool:
            futures = [pool.submit(run_task, task) for task in tasks]
            for i, fut in enumerate(futures):
                try:
                    results[i] = fut.result()
                except Exception:
                    results[i] = {"error": traceback.format_exc()}

    tables = {}
    for task, res in zip(tasks, results):
        record = {"task": task["label"], "ok": "error" not in res}
        if "error" in res:
            record["error"] = res["error"]
        elif "summary" in res:
            record["summary"] = res["summary"]
        run_records.append(record)
        for name, rows in res.items():
            if name in ("error", "summary"):
                continue
            tables.setdefault(name, []).extend(rows)

    outputs = []
    for name, rows in tables.items():
        path = os.path.join(out, f"{name}.csv")
        _write_csv(path, _HEADERS[name], rows)
        outputs.append(path)

    aggregate = {}
    try:
        if config.kind == "teff" and len(tables.get("teff", [])) >= 3:
            ls = [r[0] for r in tables["teff"]]
            vals = [r[4] for r in tables["teff"]]
            slope, err = fit_power_law(ls, vals)
            aggregate["t_eff_vs_L"] = {"exponent": slope, "stderr": err}
        if config.kind == "continuous-time" and len(tables.get("teps", [])) >= 3:
            ls = [r[0] for r in tables["teps"]]
            vals = [r[5] for r in tables["teps"]]
            slope, err = fit_power_law(ls, vals)
            aggregate["T_eps_vs_L"] = {"exponent": slope, "stderr": err}
    except ValueError:
        pass  # fits are best-effort summaries; rows stay authoritative

    manifest = RunManifest(
        experiment=config.kind,
        config={
            "experiment": config.kind,
            "sizes": config.sizes,
            "boundary": config.boundary,
            "depths": config.depths,
            "t": config.t,
            "seed": config.seed,
            "optimizer": config.optimizer,
            **config.options,
        },
        version=__version__,
        seed=config.seed,
        jobs=jobs,
        wall_time_s=time.monotonic() - t0,
        outputs=outputs,
        runs=run_records,
        ok=all(r["ok"] for r in run_records),
        aggregate=aggregate,
    )
    with open(os.path.join(out, "manifest.json"), "w") as fh:
        json.dump(manifest.to_dict(), fh, indent=2)
        fh.write("\n")
    return manifest


def fit_power_law(x, y):
    """Least-squares exponent of y ~ x^p on log-log axes.

    Returns (exponent, stderr).  Needs at least three positive points.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) != len(y) or len(x) < 3:
        raise ValueError("need at least three points")
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("power-law fit needs positive data")
    lx, ly = np.log(x), np.log(y)
    a = np.vstack([lx, np.ones_like(lx)]).T
    coef, res, *_ = np.linalg.lstsq(a, ly, rcond=None)
    n = len(x)
    resid = ly - a @ coef
    var = (resid @ resid) / (n - 2) / ((lx - lx.mean()) ** 2).sum()
    return float(coef[0]), float(np.sqrt(var))

"""Single runs, sweeps and their on-disk artifacts.

Artifacts of a run directory:

``history.csv``
    header ``t,norm_s<s>...`` then one row per time step, every float
    written with ``%.17g`` so values round-trip exactly.
``report.txt``
    parameters, fits, prediction and verdict.
``decay.svg``
    log-log plot of the first tracked norm with the fitted and predicted slopes.
"""

from __future__ import annotations

import csv
import io
import itertools
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .analysis import DecayReport, build_report, fit_envelope
from .barriers import classical_barrier, mixed_power_barrier
from .config import ExperimentConfig, build_problem, with_overrides
from .errors import FitError, FracDecayError
from .evolve import ProblemSpec, TimeHistory, run
from .operators import FracKirchhoff, Kirchhoff, SchrodingerControl, estimate_structural_constant
from .svg import loglog_svg

__all__ = [
    "RunResult",
    "run_experiment",
    "history_csv",
    "format_report",
    "write_run",
    "sweep_cells",
    "run_sweep",
    "SUMMARY_FIELDS",
]

log = logging.getLogger(__name__)

SUMMARY_FIELDS = ("cell", "alpha", "sigma", "s", "gamma", "status", "model", "rate", "stderr", "predicted", "message")


@dataclass
class RunResult:
    config: ExperimentConfig
    problem: ProblemSpec
    history: TimeHistory
    gamma: float | None
    report: DecayReport | None
    fit_error: str | None
    barrier_dominates: bool | None
    barrier_note: str

    @property
    def passed(self) -> bool:
        healthy = not self.history.monotonicity_violations and not self.history.positivity_violated
        if isinstance(self.problem.op, SchrodingerControl):
            healthy = True
        return self.report is not None and self.report.passed and healthy


def _gamma_for(cfg: ExperimentConfig, problem: ProblemSpec):
    g = cfg.problem["gamma"]
    return problem.op.theorem_gamma if g is None else g


def _barrier_check(problem: ProblemSpec, hist: TimeHistory, gamma: float, s: float):
    """Compare the norm history with a barrier built from a trajectory constant.

    ``C`` is the largest structural ratio over ``u0`` and the stored
    snapshots, so the barrier is only as good as that sampling.
    """
    samples = [problem.u0] + [u for u in hist.snapshots if np.any(u.values != 0)]
    rep = estimate_structural_constant(problem.op, gamma, s, samples)
    if not rep.passed:
        return False, f"structural check failed on snapshot {rep.counterexample}"
    v = hist.norm(s)
    v0 = float(v[0])
    if problem.mixed.lambda1 > 0:
        b = mixed_power_barrier(v0, problem.mixed.alpha, gamma, 1.0 / rep.C_est)
    else:
        b = classical_barrier(v0, gamma, rep.C_est)
    w = b.evaluate(hist.t)
    ok = bool(np.all(v <= w * (1.0 + 1e-9) + 1e-300))
    return ok, f"{b.variant} barrier with C_est={rep.C_est:.6g}, t0={b.t0:.6g}"


def run_experiment(cfg: ExperimentConfig) -> RunResult:
    problem = build_problem(cfg)
    gamma = _gamma_for(cfg, problem)
    log.info("running %s, %d steps", problem.op.name, problem.n_steps)
    hist = run(problem)
    s = problem.s_list[0]
    a = cfg.analysis
    window = None
    if a["window_lo"] is not None or a["window_hi"] is not None:
        t_hi = a["window_hi"] if a["window_hi"] is not None else float(hist.t[-1])
        t_lo = a["window_lo"] if a["window_lo"] is not None else t_hi / 10.0
        window = (t_lo, t_hi)
    tol = None
    degenerate = isinstance(problem.op, (Kirchhoff, FracKirchhoff)) and problem.op.theorem_gamma == 3
    if degenerate and a["kirchhoff_tol"] is not None:
        tol = a["kirchhoff_tol"]
    elif not degenerate and a["power_tol"] is not None:
        tol = a["power_tol"]
    report, fit_error = None, None
    try:
        report = build_report(problem, hist, gamma, s=s, tolerance=tol, window=window)
    except FitError as exc:
        fit_error = str(exc)
    dominates, note = None, "not applicable"
    if gamma is not None and problem.n_steps > 0:
        dominates, note = _barrier_check(problem, hist, gamma, s)
    return RunResult(cfg, problem, hist, gamma, report, fit_error, dominates, note)


def history_csv(hist: TimeHistory) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    keys = list(hist.norms)
    writer.writerow(["t"] + [f"norm_s{s:g}" for s in keys])
    cols = [hist.t] + [hist.norms[s] for s in keys]
    for row in zip(*cols):
        writer.writerow(["%.17g" % x for x in row])
    return buf.getvalue()


def format_report(res: RunResult) -> str:
    p = res.problem
    h = res.history
    lines = [
        "fracdecay run report",
        "",
        f"operator        {p.op!r}",
        f"time derivative lambda1={p.mixed.lambda1:g} lambda2={p.mixed.lambda2:g} alpha={p.mixed.alpha:g}",
        f"grid            ({p.u0.grid.a:g}, {p.u0.grid.b:g}), n={p.u0.grid.n_interior}, h={p.u0.grid.h:.6g}",
        f"scheme          {p.scheme}, dt={p.dt:g}, steps={p.n_steps}, T={h.t[-1]:g}",
        f"gamma           {res.gamma}",
        "",
        "norms",
    ]
    for s, v in h.norms.items():
        lines.append(f"  s={s:g}: initial {v[0]:.10g}, final {v[-1]:.10g}")
    lines.append(f"monotonicity    {len(h.monotonicity_violations)} step(s) with norm increase above 1e-10")
    if h.min_value is not None:
        flag = "VIOLATED" if h.positivity_violated else "ok"
        lines.append(f"positivity      min value {h.min_value:.6g} ({flag})")
    lines.append("")
    if res.report is None:
        lines.append(f"decay fit       unavailable: {res.fit_error}")
    else:
        r = res.report
        lines += [
            f"window          [{r.power.window[0]:g}, {r.power.window[1]:g}] (power), "
            f"[{r.exponential.window[0]:g}, {r.exponential.window[1]:g}] (exponential)",
            f"power law       p_hat={r.power.rate:.6g} +- {r.power.stderr:.3g}, log-residual SS={r.power.residual_ss:.4g}",
            f"exponential     r_hat={r.exponential.rate:.6g} +- {r.exponential.stderr:.3g}, "
            f"log-residual SS={r.exponential.residual_ss:.4g}",
            f"classified as   {r.model}",
            f"predicted       {r.predicted_model}"
            + (f" with rate {r.predicted_rate:.6g}" if r.predicted_rate is not None else ""),
            f"tolerance       {r.tolerance:g} (upper-bound semantics: faster decay never fails)",
        ]
        if r.predicted_model == "PowerLaw":
            env = fit_envelope(h.t, h.norm(p.s_list[0]), r.predicted_rate, r.power.window)
            lines.append(
                f"envelope        C/(1+t)^{r.predicted_rate:.4g}: C={env.C:.6g}, sup-constant {env.C_sup:.6g}, "
                f"max relative deviation {env.residual:.3g}"
            )
    lines.append(f"barrier         {res.barrier_note}; dominates history: {res.barrier_dominates}")
    lines += ["", f"verdict         {'PASS' if res.passed else 'FAIL'}", ""]
    return "\n".join(lines)


def _svg(res: RunResult) -> str:
    h = res.history
    s = res.problem.s_list[0]
    series = [(f"||u||_{s:g}", h.t, h.norm(s))]
    lines = []
    r = res.report
    if r is not None:
        lo, hi = r.power.window
        v_lo = float(np.exp(r.power.intercept) * lo ** (-r.power.rate))
        lines.append((f"fit slope {-r.power.rate:.3g}", lo, hi, v_lo, -r.power.rate, False))
        if r.predicted_model == "PowerLaw":
            lines.append((f"predicted slope {-r.predicted_rate:.3g}", lo, hi, v_lo, -r.predicted_rate, True))
    return loglog_svg(series, lines, title=f"{res.problem.op.name}: decay of the L^s norm", ylabel="norm")


def write_run(res: RunResult, out_dir, *, svg: bool = True) -> None:
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "history.csv"), "w", encoding="utf-8", newline="") as fh:
        fh.write(history_csv(res.history))
    with open(os.path.join(out_dir, "report.txt"), "w", encoding="utf-8") as fh:
        fh.write(format_report(res))
    if svg:
        with open(os.path.join(out_dir, "decay.svg"), "w", encoding="utf-8") as fh:
            fh.write(_svg(res))


# ------------------------------------------------------------------ sweeps


def sweep_cells(cfg: ExperimentConfig):
    """Cartesian product of the listed sweep axes, as ``(index, params)`` pairs."""
    axes = [(k, cfg.sweep[k]) for k in ("alpha", "sigma", "s", "gamma") if cfg.sweep.get(k)]
    if not axes:
        return [(0, {})]
    names = [k for k, _ in axes]
    return [(i, dict(zip(names, combo))) for i, combo in enumerate(itertools.product(*(v for _, v in axes)))]


def _cell_config(cfg: ExperimentConfig, params: dict) -> ExperimentConfig:
    over = {}
    if "alpha" in params:
        over["alpha"] = params["alpha"]
    if "sigma" in params:
        over["sigma"] = params["sigma"]
    if "s" in params:
        over["s"] = (params["s"],)
    if "gamma" in params:
        g = params["gamma"]
        over["gamma"] = g
        # the Kirchhoff families switch between their two proved exponents via m0
        if cfg.problem["operator"] in ("kirchhoff", "frac_kirchhoff"):
            if g == 3:
                over["m0"] = 0.0
                over["b"] = cfg.problem["b"] or 1.0
            elif g == 1 and cfg.problem["m0"] == 0:
                over["m0"] = 1.0
    return with_overrides(cfg, **over)


def _cell_name(index: int, params: dict) -> str:
    return "_".join([f"cell{index:03d}"] + [f"{k}{v:g}" for k, v in params.items()])


def _run_cell(cfg: ExperimentConfig, index: int, params: dict, out_root: str, svg: bool) -> dict:
    row = {k: "" for k in SUMMARY_FIELDS}
    row.update({"cell": _cell_name(index, params), **{k: f"{v:g}" for k, v in params.items()}})
    cell_dir = os.path.join(out_root, row["cell"])
    os.makedirs(cell_dir, exist_ok=True)
    try:
        res = run_experiment(_cell_config(cfg, params))
        write_run(res, cell_dir, svg=svg)
        row["status"] = "PASS" if res.passed else "FAIL"
        if res.report is not None:
            r = res.report
            row.update(
                model=r.model,
                rate="%.17g" % r.rate,
                stderr="%.17g" % r.stderr,
                predicted="" if r.predicted_rate is None else "%.17g" % r.predicted_rate,
            )
        else:
            row["message"] = res.fit_error
    except (FracDecayError, TypeError, ValueError, ArithmeticError) as exc:
        row["status"] = "ERROR"
        row["message"] = f"{type(exc).__name__}: {exc}".replace("\n", " ")
        with open(os.path.join(cell_dir, "error.txt"), "w", encoding="utf-8") as fh:
            fh.write(row["message"] + "\n")
    return row


def run_sweep(cfg: ExperimentConfig, out_root, *, workers: int = 1, svg: bool = True) -> list[dict]:
    """Run every cell; a failing cell never stops its siblings.  Writes ``summary.csv``."""
    os.makedirs(out_root, exist_ok=True)
    cells = sweep_cells(cfg)
    if workers <= 1 or len(cells) == 1:
        rows = [_run_cell(cfg, i, params, out_root, svg) for i, params in cells]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_run_cell, cfg, i, params, out_root, svg) for i, params in cells]
            rows = []
            for (i, params), fut in zip(cells, futures):
                try:
                    rows.append(fut.result())
                except Exception as exc:  # worker crash: keep the other cells
                    row = {k: "" for k in SUMMARY_FIELDS}
                    row.update(cell=_cell_name(i, params), status="ERROR", message=f"{type(exc).__name__}: {exc}")
                    rows.append(row)
    with open(os.path.join(out_root, "summary.csv"), "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=SUMMARY_FIELDS, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    return rows

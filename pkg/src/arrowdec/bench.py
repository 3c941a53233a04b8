"""Benchmark harness: solve problem families, tabulate speed-ups, fit growth.

Rows mirror the published tables: variable counts, largest block, iteration
counts, total and per-iteration times, and speed-ups against the original
single-block form of the same mesh.  The growth fit regresses
log(total time) on log(n_vars) per form; the report path renders the fit to
a log-log figure next to the CSV.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .fem import FemConfig, build_model, partition
from .sdp import build_arrow, build_chordal, build_fictitious, build_original, count_report
from .solver import SolveOptions, solve

CSV_HEADER = "form,nx,ny,Nx,Ny,n_vars,max_block,iters,total_s,per_iter_s,speedup,speedup_iter,mu"


@dataclass
class BenchRow:
    form: str
    nx: int
    ny: int
    Nx: int
    Ny: int
    n_vars: int
    max_block: int
    iters: int
    total_s: float
    per_iter_s: float
    speedup: float
    speedup_iter: float
    mu: float
    objective: float = np.nan
    status: str = ""
    skipped: bool = False

    def csv_row(self):
        return (
            f"{self.form},{self.nx},{self.ny},{self.Nx},{self.Ny},"
            f"{self.n_vars},{self.max_block},{self.iters},"
            f"{self.total_s:.6g},{self.per_iter_s:.6g},"
            f"{self.speedup:.6g},{self.speedup_iter:.6g},{self.mu:.6g}"
        )


@dataclass
class ComplexityFit:
    form: str
    c: float
    q: float
    r2: float
    n_rows: int

    def __str__(self):
        return f"{self.form}: time ~ {self.c:.3e} * n_vars^{self.q:.4f} (r2={self.r2:.4f}, {self.n_rows} rows)"


def fit_complexity(sizes, times):
    """Least-squares fit of log(time) = log(c) + q*log(size)."""
    sizes = np.asarray(sizes, dtype=float)
    times = np.asarray(times, dtype=float)
    if sizes.size < 2:
        raise ValueError("growth fit needs at least two rows")
    X = np.log(sizes)
    Y = np.log(times)
    A = np.vstack([np.ones_like(X), X]).T
    coef, *_ = np.linalg.lstsq(A, Y, rcond=None)
    pred = A @ coef
    ss_res = float(np.sum((Y - pred) ** 2))
    ss_tot = float(np.sum((Y - Y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(np.exp(coef[0])), float(coef[1]), r2


def _build(form, model, plan):
    if form == "original":
        return build_original(model)
    if form == "arrow":
        return build_arrow(model, plan)
    if form == "chordal":
        return build_chordal(model, plan)
    if form == "fictitious":
        return build_fictitious(model, plan)
    raise ValueError(f"unknown form {form!r}")


def run_bench(meshes, forms=("original", "arrow"), sub_elems=(2, 2),
              opts: SolveOptions = None, budget_s=None, log=print):
    """Solve each (mesh, form) pair; non-original forms use subdomains of
    ``sub_elems`` elements.  Returns (rows, fits)."""
    opts = opts or SolveOptions()
    rows = []
    originals = {}
    for nx, ny in meshes:
        cfg = FemConfig(nx=nx, ny=ny)
        model = build_model(cfg)
        for form in forms:
            if form == "original":
                plan = None
                Nx = Ny = 1
            else:
                Nx, Ny = nx // sub_elems[0], ny // sub_elems[1]
                if form == "fictitious":
                    Nx, Ny = 2, 1
                if nx % max(Nx, 1) or ny % max(Ny, 1) or Nx < 1 or Ny < 1:
                    continue
                plan = partition(model, Nx, Ny)
            prob = _build(form, model, plan)
            counts = count_report(prob)
            run_opts = opts
            if budget_s is not None:
                run_opts = SolveOptions(**{**opts.__dict__, "time_limit": budget_s})
            t0 = time.perf_counter()
            rep = solve(prob, run_opts)
            wall = time.perf_counter() - t0
            skipped = budget_s is not None and (
                wall > budget_s or rep.status not in ("optimal", "near_optimal")
            )
            row = BenchRow(
                form=form, nx=nx, ny=ny, Nx=Nx, Ny=Ny,
                n_vars=counts.n_vars, max_block=counts.max_block,
                iters=rep.iterations, total_s=wall,
                per_iter_s=wall / max(1, rep.iterations),
                speedup=np.nan, speedup_iter=np.nan,
                mu=rep.opt_status_metric, objective=rep.objective,
                status=rep.status, skipped=skipped,
            )
            if form == "original":
                originals[(nx, ny)] = row
            rows.append(row)
            if log:
                log(
                    f"  {form:10s} {nx}x{ny} p={Nx * Ny}: vars={row.n_vars} "
                    f"block={row.max_block} iters={row.iters} "
                    f"t={row.total_s:.2f}s status={rep.status}"
                    + (" [skipped]" if skipped else "")
                )
    for row in rows:
        base = originals.get((row.nx, row.ny))
        if base is not None and not base.skipped and row.total_s > 0:
            row.speedup = base.total_s / row.total_s
            row.speedup_iter = base.per_iter_s / row.per_iter_s

    fits = []
    for form in forms:
        usable = [r for r in rows if r.form == form and not r.skipped]
        if len(usable) >= 3:
            c, q, r2 = fit_complexity(
                [r.n_vars for r in usable], [r.total_s for r in usable]
            )
            fits.append(ComplexityFit(form=form, c=c, q=q, r2=r2, n_rows=len(usable)))
    return rows, fits


def write_bench_csv(rows, path):
    lines = [CSV_HEADER]
    for row in rows:
        lines.append(row.csv_row())
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def plot_complexity(rows, fits, path):
    """Log-log solve-time figure with the fitted growth lines."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    markers = {"original": "o", "arrow": "s", "chordal": "^", "fictitious": "d"}
    for form in sorted({r.form for r in rows}):
        pts = [r for r in rows if r.form == form and not r.skipped]
        if not pts:
            continue
        ax.loglog(
            [r.n_vars for r in pts],
            [r.total_s for r in pts],
            markers.get(form, "x"),
            label=form,
        )
    for fit in fits:
        grid = np.geomspace(
            min(r.n_vars for r in rows if r.form == fit.form),
            max(r.n_vars for r in rows if r.form == fit.form),
            50,
        )
        ax.loglog(grid, fit.c * grid ** fit.q, "--", lw=1,
                  label=f"{fit.form}: q={fit.q:.2f}")
    ax.set_xlabel("number of variables")
    ax.set_ylabel("total solve time [s]")
    ax.legend(fontsize=8)
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)

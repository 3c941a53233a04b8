"""Primal-dual interior-point solver for block-structured linear SDPs.

Solves min c'v subject to per-block affine matrix inequalities plus a
nonnegative diagonal block (bounds and linear rows after normalization).
The method is an infeasible path-following scheme with Nesterov-Todd
scaling and a Mehrotra predictor-corrector step.

The Schur complement is assembled block by block.  Every coefficient matrix
in this problem family is a small dense matrix scattered into the block
(element stiffnesses, coupler entries, corner scalars), so per-block
contributions are computed from gathered submatrices of the scaling inverse
rather than from full-size congruences; decomposed problems therefore pay
per iteration only in proportion to their many small blocks.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .sdp import ConicForm, SdoProblem, conic_form


class SolverError(RuntimeError):
    pass


@dataclass
class SolveOptions:
    rel_gap_tol: float = 1e-9
    feas_tol: float = 1e-8
    max_iters: int = 200
    step_fraction: float = 0.98
    init_scale: float = 100.0
    time_limit: float = None
    verbose: bool = False

    def __post_init__(self):
        if not (self.rel_gap_tol > 0 and self.feas_tol > 0):
            raise ValueError("tolerances must be positive")
        if not (0.0 < self.step_fraction < 1.0):
            raise ValueError("step_fraction must lie in (0,1)")
        if self.init_scale <= 0:
            raise ValueError("init_scale must be positive")


@dataclass
class DualPoint:
    Z: list                 # one dense PSD matrix per conic block
    z_diag: np.ndarray      # multipliers of the diagonal block


@dataclass
class SolveReport:
    status: str
    objective: float
    x: np.ndarray
    iterations: int
    final_gap: float
    per_iter_time: float
    total_time: float
    opt_status_metric: float
    primal_residual: float = np.nan
    dual_residual: float = np.nan
    dual: DualPoint = None
    gap_history: list = field(default_factory=list)
    message: str = ""

    def csv_row(self):
        return (
            f"{self.status},{self.objective:.12g},{self.iterations},"
            f"{self.final_gap:.6g},{self.total_time:.6g},{self.per_iter_time:.6g},"
            f"{self.opt_status_metric:.6g}"
        )

    csv_header = "status,objective,iters,final_gap,total_s,per_iter_s,mu"

    def log_lines(self):
        lines = [
            f"status          : {self.status}",
            f"objective       : {self.objective:.12g}",
            f"iterations      : {self.iterations}",
            f"relative gap    : {self.final_gap:.3e}",
            f"primal residual : {self.primal_residual:.3e}",
            f"dual residual   : {self.dual_residual:.3e}",
            f"opt status      : {self.opt_status_metric:.6f}",
            f"total time      : {self.total_time:.3f} s"
            f" ({self.per_iter_time * 1e3:.2f} ms/iter)",
        ]
        if self.message:
            lines.append(f"note            : {self.message}")
        return lines


class _SdpBlockData:
    """Per-block coefficient data in gathered low-rank form."""

    def __init__(self, dim, const, coeffs):
        self.dim = dim
        self.F0 = const.to_dense()
        self.F0_norm = max(1.0, float(np.linalg.norm(self.F0, "fro")))
        self.var_ids = np.array(sorted(coeffs), dtype=int)
        k_max = 1
        locs, mats = [], []
        for i in self.var_ids.tolist():
            trips = coeffs[i].triplets()
            ids = sorted({t[0] for t in trips} | {t[1] for t in trips})
            k_max = max(k_max, len(ids))
            locs.append(ids)
            pos = {g: a for a, g in enumerate(ids)}
            C = np.zeros((len(ids), len(ids)))
            for r, c, v in trips:
                C[pos[r], pos[c]] = v
                C[pos[c], pos[r]] = v
            mats.append(C)
        m = len(self.var_ids)
        self.idx = np.zeros((m, k_max), dtype=int)
        self.C = np.zeros((m, k_max, k_max))
        for a, (ids, C) in enumerate(zip(locs, mats)):
            self.idx[a, : len(ids)] = ids
            self.C[a, : len(ids), : len(ids)] = C
        self.flat = (self.idx[:, :, None] * dim + self.idx[:, None, :]).reshape(m, -1)
        self.k = k_max

    def scatter(self, dv, out=None):
        """sum_i dv_i F_i as a dense block matrix."""
        if out is None:
            out = np.zeros((self.dim, self.dim))
        vals = dv[self.var_ids][:, None, None] * self.C
        np.add.at(out.ravel(), self.flat.ravel(), vals.ravel())
        return out

    def value(self, v):
        return self.scatter(v, out=self.F0.copy())

    def inner(self, dense):
        """<F_i, dense> for every variable of this block."""
        gathered = dense[self.idx[:, :, None], self.idx[:, None, :]]
        return np.einsum("iab,iab->i", self.C, gathered)

    def schur(self, Y, out):
        """Add tr(F_i Y F_j Y) over this block's variable pairs into out."""
        m = len(self.var_ids)
        if m == 0:
            return
        # keep the gathered tensor under ~2e8 bytes
        chunk = max(1, int(2.5e7 / max(1, m * self.k * self.k)))
        ids = self.var_ids
        for start in range(0, m, chunk):
            stop = min(m, start + chunk)
            G = Y[self.idx[start:stop, None, :, None], self.idx[None, :, None, :]]
            part = np.einsum(
                "iab,ijbc,jcd,ijad->ij",
                self.C[start:stop], G, self.C, G, optimize=True,
            )
            out[np.ix_(ids[start:stop], ids)] += part


class _Workspace:
    def __init__(self, form: ConicForm):
        self.form = form
        self.blocks = [_SdpBlockData(dim, const, coeffs) for dim, const, coeffs in form.blocks]
        self.B = form.diag_B.tocsr()
        self.Bt = self.B.T.tocsr()
        self.d0 = form.diag_const
        self.n_diag = len(form.diag_const)
        self.N = sum(b.dim for b in self.blocks) + self.n_diag


def _nt_scaling(S, Z):
    """NT scaling factors: R, R^{-1}, lambda (scaled spectrum), W^{-1}."""
    L = np.linalg.cholesky(S)
    Mz = np.linalg.cholesky(Z)
    T = Mz.T @ L
    U, lam, Vt = np.linalg.svd(T)
    lam = np.maximum(lam, 1e-300)
    L_inv = sla.solve_triangular(L, np.eye(L.shape[0]), lower=True)
    Rinv = np.sqrt(lam)[:, None] * (Vt @ L_inv)
    R = L @ Vt.T / np.sqrt(lam)[None, :]
    Y = Rinv.T @ Rinv
    return R, Rinv, lam, Y


def _max_step(S, dS):
    """Step to the positive-definiteness boundary of S + alpha*dS (inf if none)."""
    L = np.linalg.cholesky(S)
    Q = sla.solve_triangular(L, dS, lower=True)
    Q = sla.solve_triangular(L, Q.T, lower=True).T
    beta = float(np.linalg.eigvalsh(0.5 * (Q + Q.T))[0])
    if beta >= 0.0:
        return np.inf
    return -1.0 / beta


def _max_step_vec(s, ds):
    neg = ds < 0
    if not np.any(neg):
        return np.inf
    return float((-s[neg] / ds[neg]).min())


def solve(prob: SdoProblem, opts: SolveOptions = None):
    """Solve an SdoProblem; returns a SolveReport with the dual attached.

    If the run stalls, it is retried from differently scaled starting points
    and the best iterate over all attempts is reported.
    """
    opts = opts or SolveOptions()

    def report_merit(rep):
        vals = (
            rep.final_gap / opts.rel_gap_tol,
            rep.primal_residual / opts.feas_tol,
            rep.dual_residual / opts.feas_tol,
        )
        return max(v if np.isfinite(v) else np.inf for v in vals)

    scales = [opts.init_scale]
    scales += [s for s in (1.0, 1000.0) if s not in scales]
    t_start = time.perf_counter()
    best = None
    total_iters = 0
    for scale in scales:
        attempt_opts = SolveOptions(**{**opts.__dict__, "init_scale": scale})
        if opts.time_limit is not None:
            remaining = opts.time_limit - (time.perf_counter() - t_start)
            if best is not None and remaining <= 0:
                break
            attempt_opts.time_limit = remaining if remaining > 0 else 1e-6
        rep = _solve_once(prob, attempt_opts)
        total_iters += rep.iterations
        if best is None or report_merit(rep) < report_merit(best):
            best = rep
        if best.status in ("optimal", "near_optimal", "infeasible"):
            break
    best.total_time = time.perf_counter() - t_start
    best.iterations = total_iters
    best.per_iter_time = best.total_time / max(1, total_iters)
    return best


def _solve_once(prob: SdoProblem, opts: SolveOptions):
    t0 = time.perf_counter()
    form = conic_form(prob)
    nv = form.n_active

    bad = np.nonzero(prob.lower > prob.upper)[0]
    if bad.size:
        return _report("infeasible", prob, form, None, 0, t0,
                       message=f"variable {prob.var_names[bad[0]]} has lower > upper")
    ws = _Workspace(form)
    empty_rows = np.asarray((ws.B != 0).sum(axis=1)).ravel() == 0
    if np.any(empty_rows & (ws.d0 < 0)):
        return _report("infeasible", prob, form, None, 0, t0,
                       message="a constant constraint row is negative")
    if not ws.blocks and ws.n_diag == 0:
        v = np.zeros(nv)
        return _report("optimal", prob, form, _State(v, [], np.zeros(0), [], np.zeros(0)),
                       0, t0)

    c = form.c
    state = _initial_state(ws, c, opts.init_scale)
    gap_history = []
    tiny_steps = 0
    status, message = "max_iters", ""
    it = 0

    def merit(metrics):
        return max(
            metrics["rel_gap"] / opts.rel_gap_tol,
            metrics["pfeas"] / opts.feas_tol,
            metrics["dfeas"] / opts.feas_tol,
        )

    best = None          # (merit, snapshot, metrics, iteration)
    since_best = 0
    for it in range(1, opts.max_iters + 1):
        metrics = _metrics(ws, c, state, form)
        gap_history.append(metrics["gap"])
        if opts.verbose:
            print(
                f"  it {it:3d}  mu={metrics['mu']:.3e} gap={metrics['rel_gap']:.3e} "
                f"pfeas={metrics['pfeas']:.3e} dfeas={metrics['dfeas']:.3e}"
            )
        score = merit(metrics)
        if best is None or score < 0.98 * best[0]:
            best = (score, _snapshot(state), metrics, it)
            since_best = 0
        else:
            since_best += 1
        if score <= 1.0:
            status = "optimal"
            break
        if since_best >= 15 and best[0] <= 1e5:
            status, message = "max_iters", "no further progress"
            break
        if opts.time_limit is not None and time.perf_counter() - t0 > opts.time_limit:
            status, message = "max_iters", "time limit reached"
            break
        try:
            alpha_p, alpha_d = _iterate(ws, c, state, metrics, opts)
        except np.linalg.LinAlgError as exc:
            status, message = "numerical_failure", f"factorization breakdown: {exc}"
            break
        if max(alpha_p, alpha_d) < 1e-8:
            tiny_steps += 1
            if tiny_steps >= 3:
                status, message = "numerical_failure", "step sizes collapsed"
                break
        else:
            tiny_steps = 0

    if status == "optimal":
        metrics = _metrics(ws, c, state, form)
        final_state = state
    else:
        # fall back to the best iterate seen
        final_metrics = _metrics(ws, c, state, form)
        if best is not None and best[0] < merit(final_metrics):
            final_state, metrics = best[1], best[2]
        else:
            final_state, metrics = state, final_metrics
        if (
            metrics["rel_gap"] <= 1e3 * opts.rel_gap_tol
            and metrics["pfeas"] <= 1e2 * opts.feas_tol
            and metrics["dfeas"] <= 1e4 * opts.feas_tol
        ):
            status = "near_optimal"
    report = _report(status, prob, form, final_state, it, t0, metrics=metrics,
                     message=message)
    report.gap_history = gap_history
    return report


class _State:
    def __init__(self, v, S, s_diag, Z, z_diag):
        self.v = v
        self.S = S
        self.s_diag = s_diag
        self.Z = Z
        self.z_diag = z_diag


def _snapshot(state):
    return _State(
        state.v.copy(),
        [Sb.copy() for Sb in state.S],
        state.s_diag.copy(),
        [Zb.copy() for Zb in state.Z],
        state.z_diag.copy(),
    )


def _initial_state(ws, c, scale=100.0):
    v = np.zeros(len(c))
    S, Z = [], []
    zeta = scale * max(1.0, float(np.abs(c).max(initial=0.0)))
    for blk in ws.blocks:
        coeff_scale = float(np.abs(blk.C).max(initial=0.0))
        eta = scale * (1.0 + max(blk.F0_norm, coeff_scale))
        S.append(eta * np.eye(blk.dim))
        Z.append(zeta * np.eye(blk.dim))
    eta_d = scale * (1.0 + float(np.abs(ws.d0).max(initial=0.0)))
    s_diag = np.full(ws.n_diag, eta_d)
    z_diag = np.full(ws.n_diag, zeta)
    return _State(v, S, s_diag, Z, z_diag)


def _residuals(ws, c, state):
    """Slack residuals P_b, p_diag, the dual residual r and its term sizes."""
    P = []
    r = c.copy()
    terms = np.abs(c).copy()
    for blk, S, Z in zip(ws.blocks, state.S, state.Z):
        P.append(blk.value(state.v) - S)
        t = blk.inner(Z)
        r[blk.var_ids] -= t
        terms[blk.var_ids] += np.abs(t)
    p_diag = ws.d0 + ws.B @ state.v - state.s_diag
    if ws.n_diag:
        t = ws.Bt @ state.z_diag
        r -= t
        terms += np.abs(t)
    return P, p_diag, r, terms


def _metrics(ws, c, state, form):
    P, p_diag, r, terms = _residuals(ws, c, state)
    gap = sum(float(np.tensordot(S, Z)) for S, Z in zip(state.S, state.Z))
    gap += float(state.s_diag @ state.z_diag)
    mu = gap / max(1, ws.N)
    pobj = float(c @ state.v)
    dobj = -sum(
        float(np.tensordot(blk.F0, Z)) for blk, Z in zip(ws.blocks, state.Z)
    ) - float(ws.d0 @ state.z_diag)
    shift = sum(form.c_full[i] * val for i, val in form.pinned.items())
    pobj += shift
    dobj += shift
    pfeas = 0.0
    for blk, Pb in zip(ws.blocks, P):
        pfeas = max(pfeas, float(np.linalg.norm(Pb, "fro")) / blk.F0_norm)
    if ws.n_diag:
        pfeas = max(
            pfeas,
            float(np.abs(p_diag).max()) / max(1.0, float(np.abs(ws.d0).max())),
        )
    # componentwise backward error of the dual constraints
    dfeas = float((np.abs(r) / (1.0 + terms)).max(initial=0.0))
    rel_gap = abs(gap) / max(1.0, abs(pobj), abs(dobj))
    return {
        "P": P, "p_diag": p_diag, "r": r, "gap": gap, "mu": mu,
        "pobj": pobj, "dobj": dobj, "pfeas": pfeas, "dfeas": dfeas,
        "rel_gap": rel_gap,
    }


def _iterate(ws, c, state, metrics, opts):
    """One predictor-corrector step; updates the state in place.

    The corrector is applied up to twice, re-expanding the second-order term
    around the latest direction, and keeps whichever direction admits the
    larger combined step.  The step fraction is raised once the iterate is
    close to the target tolerances.
    """
    P, p_diag, r = metrics["P"], metrics["p_diag"], metrics["r"]
    mu = metrics["mu"]
    nv = len(c)
    close = metrics["rel_gap"] < 1e-4 and metrics["pfeas"] < 1e-6
    tau = max(opts.step_fraction, 0.99) if close else opts.step_fraction

    scal = []
    M = np.zeros((nv, nv))
    for blk, S, Z in zip(ws.blocks, state.S, state.Z):
        R, Rinv, lam, Y = _nt_scaling(S, Z)
        scal.append((R, Rinv, lam, Y))
        blk.schur(Y, M)
    if ws.n_diag:
        w2 = state.s_diag / state.z_diag
        lam_d = np.sqrt(state.s_diag * state.z_diag)
        Bw = ws.B.multiply((1.0 / w2)[:, None])
        M += (ws.Bt @ Bw).toarray()
    M = 0.5 * (M + M.T)
    M += 1e-14 * max(1.0, float(np.abs(np.diag(M)).max())) * np.eye(nv)
    try:
        Mf = sla.cho_factor(M)
    except np.linalg.LinAlgError:
        M += 1e-12 * max(1.0, float(np.abs(np.diag(M)).max())) * np.eye(nv)
        Mf = sla.cho_factor(M)

    def solve_schur(rhs):
        x = sla.cho_solve(Mf, rhs)
        norm_rhs = float(np.linalg.norm(rhs))
        for _ in range(3):
            resid = rhs - M @ x
            if float(np.linalg.norm(resid)) <= 1e-14 * max(norm_rhs, 1e-300):
                break
            x = x + sla.cho_solve(Mf, resid)
        return x

    def newton(phis, phi_d):
        u = np.zeros(nv)
        for blk, phi in zip(ws.blocks, phis):
            u[blk.var_ids] += blk.inner(phi)
        if ws.n_diag:
            u += ws.Bt @ phi_d
        dv = solve_schur(u - r)
        dS, dZ = [], []
        for blk, (R, Rinv, lam, Y), phi, Pb in zip(ws.blocks, scal, phis, P):
            scat = blk.scatter(dv)
            dSb = scat + Pb
            dZb = phi - Y @ scat @ Y
            dS.append(0.5 * (dSb + dSb.T))
            dZ.append(0.5 * (dZb + dZb.T))
        if ws.n_diag:
            Bdv = ws.B @ dv
            ds_d = Bdv + p_diag
            dz_d = phi_d - Bdv / w2
        else:
            ds_d = np.zeros(0)
            dz_d = np.zeros(0)
        return dv, dS, ds_d, dZ, dz_d

    def boundary_steps(dS, dZ, ds_d, dz_d):
        ap = min([_max_step(S, d) for S, d in zip(state.S, dS)] + [np.inf])
        ad = min([_max_step(Z, d) for Z, d in zip(state.Z, dZ)] + [np.inf])
        if ws.n_diag:
            ap = min(ap, _max_step_vec(state.s_diag, ds_d))
            ad = min(ad, _max_step_vec(state.z_diag, dz_d))
        return ap, ad

    # predictor: pure affine direction
    phis = [-Z - Y @ Pb @ Y for (R, Rinv, lam, Y), Z, Pb in zip(scal, state.Z, P)]
    phi_d = -state.z_diag - p_diag / w2 if ws.n_diag else np.zeros(0)
    aff = newton(phis, phi_d)
    alpha_p, alpha_d = boundary_steps(aff[1], aff[3], aff[2], aff[4])
    alpha_p = min(1.0, alpha_p)
    alpha_d = min(1.0, alpha_d)

    gap_aff = sum(
        float(np.tensordot(S + alpha_p * dS, Z + alpha_d * dZ))
        for S, dS, Z, dZ in zip(state.S, aff[1], state.Z, aff[3])
    )
    if ws.n_diag:
        gap_aff += float(
            (state.s_diag + alpha_p * aff[2]) @ (state.z_diag + alpha_d * aff[4])
        )
    mu_aff = max(gap_aff, 0.0) / max(1, ws.N)
    sigma = min(0.9999, max(1e-8, (mu_aff / max(mu, 1e-300)) ** 3))

    def corrected(direction):
        dS_c, ds_c, dZ_c, dz_c = direction[1], direction[2], direction[3], direction[4]
        phis = []
        for (R, Rinv, lam, Y), dSb, dZb, Pb in zip(scal, dS_c, dZ_c, P):
            dS_t = Rinv @ dSb @ Rinv.T
            dZ_t = R.T @ dZb @ R
            cross = 0.5 * (dS_t @ dZ_t + dZ_t @ dS_t)
            d = -cross
            np.fill_diagonal(d, d.diagonal() + sigma * mu - lam * lam)
            E = 2.0 * d / np.add.outer(lam, lam)
            phis.append(Rinv.T @ E @ Rinv - Y @ Pb @ Y)
        if ws.n_diag:
            e_d = (
                sigma * mu - lam_d * lam_d
                - (ds_c / np.sqrt(w2)) * (dz_c * np.sqrt(w2))
            ) / lam_d
            phi_dc = e_d / np.sqrt(w2) - p_diag / w2
        else:
            phi_dc = np.zeros(0)
        return newton(phis, phi_dc)

    best = None
    direction = aff
    for _ in range(2):
        cand = corrected(direction)
        ap, ad = boundary_steps(cand[1], cand[3], cand[2], cand[4])
        quality = min(1.0, ap) * min(1.0, ad)
        if best is None or quality > best[0]:
            best = (quality, cand, ap, ad)
            direction = cand
        else:
            break
    _, (dv, dS, ds_d, dZ, dz_d), ap, ad = best
    alpha_p = min(1.0, tau * ap)
    alpha_d = min(1.0, tau * ad)

    state.v += alpha_p * dv
    for b in range(len(ws.blocks)):
        state.S[b] = 0.5 * ((state.S[b] + alpha_p * dS[b]) + (state.S[b] + alpha_p * dS[b]).T)
        state.Z[b] = 0.5 * ((state.Z[b] + alpha_d * dZ[b]) + (state.Z[b] + alpha_d * dZ[b]).T)
    if ws.n_diag:
        state.s_diag = state.s_diag + alpha_p * ds_d
        state.z_diag = state.z_diag + alpha_d * dz_d
    return alpha_p, alpha_d


def _report(status, prob, form, state, iters, t0, metrics=None, message=""):
    total = time.perf_counter() - t0
    x = np.zeros(prob.n_vars)
    dual = None
    if state is not None:
        x[form.active] = state.v
        for i, val in form.pinned.items():
            x[i] = val
        dual = DualPoint(Z=[Zb.copy() for Zb in state.Z], z_diag=state.z_diag.copy())
    if metrics is None:
        objective = float(prob.objective @ x) if state is not None else np.nan
        gap, pfeas, dfeas = np.nan, np.nan, np.nan
        mu_ratio = 1.0 if status == "optimal" else np.nan
    else:
        objective = metrics["pobj"]
        gap = metrics["rel_gap"]
        pfeas, dfeas = metrics["pfeas"], metrics["dfeas"]
        mu_ratio = (
            metrics["pobj"] / metrics["dobj"] if abs(metrics["dobj"]) > 1e-300 else np.inf
        )
    if status == "optimal" and not (0.999 <= mu_ratio <= 1.0009):
        status = "near_optimal"
    return SolveReport(
        status=status,
        objective=objective,
        x=x,
        iterations=iters,
        final_gap=gap,
        per_iter_time=total / max(1, iters),
        total_time=total,
        opt_status_metric=mu_ratio,
        primal_residual=pfeas,
        dual_residual=dfeas,
        dual=dual,
        message=message,
    )


@dataclass
class KktReport:
    primal_residual: float
    dual_residual: float
    complementarity: float

    def max_violation(self):
        return max(self.primal_residual, self.dual_residual, self.complementarity)


def kkt_residuals(prob: SdoProblem, primal, dual: DualPoint):
    """Independent optimality audit for a candidate primal/dual pair.

    All three residuals are relative.  The dual must carry one multiplier
    matrix per PSD block (in problem order) and the diagonal multiplier
    vector of the normalized form.
    """
    form = conic_form(prob)
    primal = np.asarray(primal, dtype=float)
    if primal.shape != (prob.n_vars,):
        raise ValueError(
            f"primal has shape {primal.shape}, expected ({prob.n_vars},)"
        )
    if len(dual.Z) != len(form.blocks):
        raise ValueError(
            f"dual carries {len(dual.Z)} blocks, expected {len(form.blocks)}"
        )
    v = primal[form.active]

    pres = 0.0
    gap = 0.0
    ws = _Workspace(form)
    for blk, Z in zip(ws.blocks, dual.Z):
        if Z.shape != (blk.dim, blk.dim):
            raise ValueError("dual block dimension mismatch")
        val = blk.value(v)
        lam_min = float(np.linalg.eigvalsh(val)[0])
        pres = max(pres, max(0.0, -lam_min) / blk.F0_norm)
        gap += float(np.tensordot(val, Z))
    s_diag = ws.d0 + ws.B @ v
    if ws.n_diag:
        if dual.z_diag.shape != (ws.n_diag,):
            raise ValueError("diagonal multiplier length mismatch")
        pres = max(
            pres,
            max(0.0, -float(s_diag.min(initial=0.0)))
            / max(1.0, float(np.abs(ws.d0).max())),
        )
        gap += float(s_diag @ dual.z_diag)

    r = form.c.copy()
    terms = np.abs(form.c).copy()
    for blk, Z in zip(ws.blocks, dual.Z):
        t = blk.inner(Z)
        r[blk.var_ids] -= t
        terms[blk.var_ids] += np.abs(t)
    if ws.n_diag:
        t = ws.Bt @ dual.z_diag
        r -= t
        terms += np.abs(t)
    dres = float((np.abs(r) / (1.0 + terms)).max(initial=0.0))
    for Z in dual.Z:
        lam = float(np.linalg.eigvalsh(Z)[0])
        dres = max(dres, max(0.0, -lam) / max(1.0, float(np.abs(Z).max())))
    if ws.n_diag and len(dual.z_diag):
        dres = max(dres, max(0.0, -float(dual.z_diag.min())))

    pobj = float(prob.objective @ primal)
    comp = abs(gap) / max(1.0, abs(pobj))
    return KktReport(primal_residual=pres, dual_residual=dres, complementarity=comp)

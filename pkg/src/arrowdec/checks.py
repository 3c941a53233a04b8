"""Randomized property suites for the decompositions and problem builders.

Each suite returns (n_checked, failures) where failures is a list of
human-readable messages; an empty list means the suite passed.  The suites
are deterministic for a fixed seed.
"""

from __future__ import annotations

import numpy as np

from .decompose import (
    ArrowPart,
    ArrowSystem,
    arrow_decompose,
    chordal_decompose,
    embedded_blocks,
    embedded_decompose,
    verify_split,
)
from .fem import FemConfig, assemble_dense, build_model, partition
from .graphs import CliqueSet, SparsityGraph, chordal_extension, is_chordal, maximal_cliques
from .partition import Partition
from .sdp import arrow_feasible_point, build_arrow, build_original, global_affine
from .symmat import SymMat, is_psd


def random_interval_partition(rng, n, p, min_overlap):
    """Chain of p overlapping intervals covering [0, n).

    Only consecutive intervals intersect, and every intersection has at
    least ``min_overlap`` indices.
    """
    while True:
        cuts = np.sort(rng.choice(np.arange(1, n), size=p - 1, replace=False))
        bounds = [0, *cuts.tolist(), n]
        if np.diff(bounds).min() > min_overlap + 2:
            break
    sets = []
    for k in range(p):
        lo, hi = bounds[k], bounds[k + 1]
        if k > 0:
            lo -= min_overlap + int(rng.integers(0, 2))
        sets.append(range(max(lo, 0), min(hi, n)))
    return Partition.from_sets(n, sets)


def random_arrow_system(rng, n_max=30, p_max=4, m_max=2, singular_corner=False):
    """Random arrow system with PSD summands and a PSD (or tight) assembly."""
    p = int(rng.integers(1, p_max + 1))
    m = int(rng.integers(1, m_max + 1))
    n_min = max(4, p * (m + 4) + 1, 2 * m + 3)  # room for the overlap chain
    n = int(rng.integers(n_min, max(n_max, n_min) + 1))
    if p == 1:
        part = Partition.from_sets(n, [range(n)])
    else:
        part = random_interval_partition(rng, n, p, min_overlap=m + 1)
    parts = []
    for k in range(p):
        idx = np.array(part.sets[k])
        s = len(idx)
        G = rng.standard_normal((s + 1, s))
        local = G.T @ G + 1e-3 * np.eye(s)
        A = SymMat(n)
        for a in range(s):
            for b in range(a, s):
                A._add(int(idx[a]), int(idx[b]), local[a, b])
        B = np.zeros((n, m))
        B[idx, :] = rng.standard_normal((s, m))
        parts.append(ArrowPart(A=A, B=B))
    A_total = np.zeros((n, n))
    B_total = np.zeros((n, m))
    for pt in parts:
        A_total += pt.A.to_dense()
        B_total += pt.B
    schur = B_total.T @ np.linalg.solve(A_total, B_total)
    slack = 0.0 if singular_corner else float(rng.uniform(0.1, 1.0))
    C = SymMat.from_dense(schur + slack * np.eye(m))
    return ArrowSystem(n=n, m=m, parts=parts, C=C, partition=part)


def arrow_suite(trials=200, seed=0, sum_tol=1e-10, eig_tol=1e-8):
    """Randomized audit of the arrow decomposition's guarantees."""
    rng = np.random.default_rng(seed)
    failures = []
    for t in range(trials):
        sys = random_arrow_system(rng, singular_corner=(t % 5 == 4))
        M = sys.assemble()
        norm = max(1.0, float(np.linalg.norm(M, "fro")))
        split = arrow_decompose(sys, tol=1e-9)
        total = sum(split.blocks)
        resid = float(np.abs(total - M).max())
        if resid > sum_tol * norm:
            failures.append(f"trial {t}: reassembly residual {resid:.2e} > {sum_tol:.0e}*|M|")
        for k, blk in enumerate(split.blocks):
            eigs = np.linalg.eigvalsh(blk)
            if eigs[0] < -eig_tol * norm:
                failures.append(
                    f"trial {t}: block {k} min eigenvalue {eigs[0]:.2e} < -{eig_tol:.0e}*|M|"
                )
            if k < sys.p - 1:
                blk_norm = max(1.0, float(np.linalg.norm(blk, "fro")))
                near_zero = int(np.sum(np.abs(eigs) <= eig_tol * blk_norm))
                if near_zero < sys.m:
                    failures.append(
                        f"trial {t}: block {k} shows {near_zero} null eigenvalues, "
                        f"expected at least {sys.m}"
                    )
    return trials, failures


def random_chordal_matrix(rng, n_max=20):
    """Random chordal pattern plus a PSD matrix supported on it."""
    n = int(rng.integers(4, n_max + 1))
    g = SparsityGraph(n)
    density = rng.uniform(0.1, 0.5)
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < density:
                g.add_edge(i, j)
    order = rng.permutation(n).tolist()
    ext = chordal_extension(g, order)
    chordal, peo = is_chordal(ext)
    assert chordal
    cliques = maximal_cliques(ext, peo)
    A = SymMat(n, [(i, i, 1e-6) for i in range(n)])
    for clique in cliques.cliques:
        idx = np.array(clique)
        s = len(idx)
        G = rng.standard_normal((s, s))
        local = G.T @ G
        for a in range(s):
            for b in range(a, s):
                A._add(int(idx[a]), int(idx[b]), local[a, b])
    return A, cliques


def chordal_suite(trials=100, seed=1, tol=1e-8):
    """Randomized audit of the clique decomposition."""
    rng = np.random.default_rng(seed)
    failures = []
    for t in range(trials):
        A, cliques = random_chordal_matrix(rng)
        split = chordal_decompose(A, cliques, tol=1e-9)
        if len(split.summands) != len(cliques.cliques):
            failures.append(f"trial {t}: summand count mismatch")
        for clique, Y in split.summands:
            allowed = set(clique)
            for (i, j) in Y.entries:
                if i not in allowed or j not in allowed:
                    failures.append(f"trial {t}: summand leaks outside clique {clique}")
                    break
        rep = verify_split(A, [y for _, y in split.summands], tol=tol)
        if not rep.passed:
            failures.append(f"trial {t}: {rep}")
    return trials, failures


def embedded_suite(trials=50, seed=2, tol=1e-8):
    """Block-diagonal-with-overlap instances must reassemble exactly."""
    rng = np.random.default_rng(seed)
    failures = []
    for t in range(trials):
        p = int(rng.integers(2, 4))
        n = int(rng.integers(5 * p, 17))
        part = random_interval_partition(rng, n, p, min_overlap=1)
        Q = []
        for k in range(p):
            idx = np.array(part.sets[k])
            s = len(idx)
            G = rng.standard_normal((s, s))
            local = G.T @ G + 1e-6 * np.eye(s)
            Qk = SymMat(n)
            for a in range(s):
                for b in range(a, s):
                    Qk._add(int(idx[a]), int(idx[b]), local[a, b])
            Q.append(Qk)
        S = embedded_decompose(Q, part, tol=1e-9)
        blocks = embedded_blocks(Q, part, S)
        total = Q[0].to_dense()
        for q in Q[1:]:
            total += q.to_dense()
        rep = verify_split(total, blocks, tol=tol)
        if not rep.passed:
            failures.append(f"trial {t}: {rep}")
        resid = float(np.abs(sum(blocks) - total).max())
        scale = max(1.0, float(np.abs(total).max()))
        if resid > 1e-12 * scale:
            failures.append(f"trial {t}: exact reassembly off by {resid:.2e}")
    return trials, failures


def structural_suite(seed=3, nx=4, ny=4, plans=((2, 2), (2, 1), (4, 4))):
    """Structural identities of the problem builders on a fixture mesh."""
    rng = np.random.default_rng(seed)
    failures = []
    cfg = FemConfig(nx=nx, ny=ny)
    model = build_model(cfg)
    reference = build_original(model)
    ref_const, ref_coeffs = global_affine(reference, model.n)
    checked = 0
    for Nx, Ny in plans:
        if nx % Nx or ny % Ny:
            continue
        plan = partition(model, Nx, Ny)
        from .sdp import build_chordal, build_fictitious

        builders = {"arrow": build_arrow(model, plan), "chordal": build_chordal(model, plan)}
        if plan.p == 2:
            builders["fictitious"] = build_fictitious(model, plan)
        for name, prob in builders.items():
            checked += 1
            const, coeffs = global_affine(prob, model.n)
            if np.abs(const - ref_const).max() > 1e-12:
                failures.append(f"{name} {Nx}x{Ny}: constant terms do not sum to the original")
            for i in range(model.m):
                diff = np.abs(coeffs.get(i, 0.0) - ref_coeffs[i]).max()
                if diff > 1e-12:
                    failures.append(f"{name} {Nx}x{Ny}: element {i} coefficients differ")
                    break
            corner = np.zeros((model.n + 1, model.n + 1))
            corner[model.n, model.n] = 1.0
            gamma_like = [
                v for v, name_v in enumerate(prob.var_names)
                if name_v.startswith(("gamma", "s["))
            ]
            for v in gamma_like:
                if np.abs(coeffs[v] - corner).max() > 1e-12:
                    failures.append(f"{name} {Nx}x{Ny}: scalar {prob.var_names[v]} is not a corner")
            for v, name_v in enumerate(prob.var_names):
                if name_v.startswith(("g[", "S[", "sigma[", "Sshare[")) and v in coeffs:
                    if np.abs(coeffs[v]).max() > 1e-12:
                        failures.append(
                            f"{name} {Nx}x{Ny}: coupler {name_v} does not cancel in the sum"
                        )
                        break
        # feasible completion from an equilibrium solve
        prob = builders["arrow"]
        x = rng.uniform(0.2, 1.0, size=model.m)
        v, u = arrow_feasible_point(model, plan, prob, x)
        obj = float(prob.objective @ v)
        compliance = float(model.f @ u)
        if abs(obj - compliance) > 1e-9 * max(1.0, abs(compliance)):
            failures.append(f"arrow {Nx}x{Ny}: completion objective differs from f'u")
        for b in range(len(prob.psd_blocks)):
            val = prob.block_value(b, v)
            if not is_psd(SymMat.from_dense(0.5 * (val + val.T)), tol=1e-8):
                failures.append(f"arrow {Nx}x{Ny}: completed block {b} is not PSD")
    return checked, failures


def corrupted_split_fails(seed=4):
    """A deliberately corrupted split must be rejected by the audit."""
    rng = np.random.default_rng(seed)
    sys = random_arrow_system(rng, n_max=12, p_max=3, m_max=1)
    M = sys.assemble()
    split = arrow_decompose(sys, tol=1e-9)
    blocks = [b.copy() for b in split.blocks]
    tol = 1e-8
    bump = 10 * tol * max(1.0, float(np.linalg.norm(M, "fro")))
    blocks[0][0, 0] += bump
    rep = verify_split(M, blocks, tol=tol)
    return (not rep.passed), rep


def run_all(seed=0, trials=None, include_structural=True, log=print):
    """Run every suite; returns the list of failure messages."""
    failures = []
    n_arrow = trials if trials else 200
    n_chordal = trials if trials else 100
    n_embedded = trials if trials else 50
    for label, result in (
        ("arrow decomposition", arrow_suite(n_arrow, seed=seed)),
        ("clique decomposition", chordal_suite(n_chordal, seed=seed + 1)),
        ("embedded decomposition", embedded_suite(n_embedded, seed=seed + 2)),
    ):
        n, fails = result
        failures += [f"{label}: {msg}" for msg in fails]
        if log:
            log(f"{label}: {n} trials, {len(fails)} failures")
    if include_structural:
        n, fails = structural_suite(seed=seed + 3)
        failures += [f"builder identities: {msg}" for msg in fails]
        if log:
            log(f"builder identities: {n} problems, {len(fails)} failures")
    detected, rep = corrupted_split_fails(seed=seed + 4)
    if not detected:
        failures.append("corrupted split was not rejected by verify_split")
    if log:
        log(f"corruption detection: {'ok' if detected else 'MISSED'}")
    return failures

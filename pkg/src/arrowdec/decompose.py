"""Constructive decompositions of PSD matrices into overlapping-support summands.

Three constructions are provided:

* ``chordal_decompose`` splits a PSD matrix with chordal pattern into PSD
  summands, one per maximal clique, by eliminating vertices in a perfect
  elimination order and assigning each rank-one update to the clique holding
  the eliminated vertex's later neighbourhood.
* ``embedded_decompose`` transfers a sum of subdomain-supported summands into
  per-subdomain PSD blocks by solving sequentially for overlap matrices
  S_{k,l}; ambiguous entries shared by several overlaps go entirely to the
  pair with the smallest second index.
* ``arrow_decompose`` handles arrow-shaped block matrices
  [[A, B], [B^T, C]] with A a sum of subdomain blocks: it solves X = A^{-1} B,
  distributes the row residuals A_k X - B_k over the overlaps (same
  smallest-index rule, row-wise), and closes with C_k = X^T A_k X.

``verify_split`` is the independent audit: entrywise reassembly residual and
per-block minimum eigenvalue.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .graphs import CliqueSet, clique_graph, is_chordal, is_perfect_elimination_order, sparsity_graph
from .partition import AssumptionError, Partition
from .symmat import SymMat, is_psd


class DecompositionError(ValueError):
    """Input violates a decomposition precondition or is not PSD."""


class ConditioningError(DecompositionError):
    """Linear solve for X = A^{-1}B could not reach the target residual."""


@dataclass
class ChordalSplit:
    """Summands (clique, Y_k) with sum equal to the decomposed matrix."""

    summands: list

    def total(self, n):
        out = np.zeros((n, n))
        for _, y in self.summands:
            out += y.to_dense() if isinstance(y, SymMat) else y
        return out


@dataclass
class ArrowSplit:
    """Outcome of arrow_decompose: overlap couplers, corner shares, blocks."""

    D: dict
    Cs: list
    blocks: list


@dataclass
class ArrowPart:
    A: SymMat
    B: np.ndarray


@dataclass
class ArrowSystem:
    """Arrow matrix M = sum_k [[A_k, B_k], [B_k^T, 0]] + [[0, 0], [0, C]]."""

    n: int
    m: int
    parts: list
    C: SymMat
    partition: Partition

    @property
    def p(self):
        return len(self.parts)

    def assemble(self):
        size = self.n + self.m
        M = np.zeros((size, size))
        for part in self.parts:
            M[: self.n, : self.n] += part.A.to_dense()
            M[: self.n, self.n:] += part.B
            M[self.n:, : self.n] += part.B.T
        M[self.n:, self.n:] += self.C.to_dense()
        return M

    def shaft(self):
        A = np.zeros((self.n, self.n))
        for part in self.parts:
            A += part.A.to_dense()
        return A

    def validate(self):
        if self.p != self.partition.p:
            raise DecompositionError("part count does not match the partition")
        self.partition.validate()
        for k, part in enumerate(self.parts):
            allowed = set(self.partition.sets[k])
            for (i, j) in part.A.entries:
                if i not in allowed or j not in allowed:
                    raise DecompositionError(
                        f"A_{k} has an entry at ({i},{j}) outside its index set"
                    )
            B = np.asarray(part.B, dtype=float)
            if B.shape != (self.n, self.m):
                raise DecompositionError(f"B_{k} must be {self.n}x{self.m}")
            outside = [i for i in range(self.n) if i not in allowed]
            if outside and np.abs(B[outside, :]).max(initial=0.0) > 0.0:
                raise DecompositionError(f"B_{k} has rows outside its index set")
        if self.p >= 2 and self.m >= self.partition.min_overlap():
            raise DecompositionError(
                f"arrow width m={self.m} must be smaller than the minimum overlap "
                f"{self.partition.min_overlap()}"
            )
        return self


@dataclass
class SplitReport:
    max_residual: float
    min_eigenvalue: float
    scale: float
    tol: float
    passed: bool
    block_min_eigs: list = field(default_factory=list)

    def __str__(self):
        status = "pass" if self.passed else "FAIL"
        return (
            f"split {status}: max|sum-original|={self.max_residual:.3e}, "
            f"min eig={self.min_eigenvalue:.3e}, scale={self.scale:.3e}, tol={self.tol:.1e}"
        )


def _as_dense(mat):
    return mat.to_dense() if isinstance(mat, SymMat) else np.asarray(mat, dtype=float)


def verify_split(original, blocks, tol=1e-8):
    """Audit a decomposition: reassembly residual and block PSD margins."""
    orig = _as_dense(original)
    n = orig.shape[0]
    total = np.zeros_like(orig)
    mins = []
    for blk in blocks:
        dense = _as_dense(blk)
        if dense.shape != orig.shape:
            raise DecompositionError(
                f"block shape {dense.shape} does not match original {orig.shape}"
            )
        total += dense
        mins.append(float(np.linalg.eigvalsh(dense)[0]) if n else 0.0)
    residual = float(np.abs(total - orig).max(initial=0.0))
    scale = max(1.0, float(np.linalg.norm(orig, "fro")))
    min_eig = min(mins) if mins else 0.0
    passed = residual <= tol * scale and min_eig >= -tol * scale
    return SplitReport(
        max_residual=residual,
        min_eigenvalue=min_eig,
        scale=scale,
        tol=tol,
        passed=passed,
        block_min_eigs=mins,
    )


def chordal_decompose(A: SymMat, cliques: CliqueSet, tol=1e-9):
    """Split PSD A with chordal pattern into PSD summands on the cliques."""
    n = A.n
    order = cliques.elimination_order
    G = clique_graph(n, cliques.cliques)
    if not is_perfect_elimination_order(G, order):
        raise DecompositionError(
            "elimination order is not a perfect elimination ordering of the clique graph"
        )
    pattern = sparsity_graph(A)
    if not pattern.edges <= G.edges:
        raise DecompositionError("matrix pattern is not covered by the cliques")
    if not is_psd(A, tol):
        raise DecompositionError("matrix is not positive semidefinite at the given tolerance")

    pos = [0] * n
    for k, v in enumerate(order):
        pos[v] = k
    adj = G.adjacency()
    clique_sets = [set(c) for c in cliques.cliques]
    home = [None] * n
    for v in range(n):
        need = {u for u in adj[v] if pos[u] > pos[v]} | {v}
        for k, cs in enumerate(clique_sets):
            if need <= cs:
                home[v] = k
                break
        if home[v] is None:
            raise DecompositionError(
                f"no clique contains vertex {v} with its later neighbourhood"
            )

    R = A.to_dense()
    scale = max(1.0, float(np.abs(R).max(initial=0.0)))
    piv_tol = max(tol, 1e-14) * scale
    row_tol = max(tol, 1e-12) * scale
    Y = [np.zeros((n, n)) for _ in cliques.cliques]
    for v in order:
        k = home[v]
        a = R[v, v]
        col = R[:, v].copy()
        if a <= piv_tol:
            off = col.copy()
            off[v] = 0.0
            if np.abs(off).max(initial=0.0) > row_tol:
                raise DecompositionError(
                    f"pivot {v} is numerically zero but its row is not; matrix not PSD"
                )
            Y[k][v, :] += col
            Y[k][:, v] += col
            Y[k][v, v] -= a
        else:
            E = np.outer(col, col) / a
            Y[k] += E
            R -= E
        R[v, :] = 0.0
        R[:, v] = 0.0

    summands = [
        (cliques.cliques[k], SymMat.from_dense(0.5 * (Y[k] + Y[k].T)))
        for k in range(len(Y))
    ]
    return ChordalSplit(summands=summands)


def embedded_decompose(Q, partition: Partition, tol=1e-9):
    """Overlap matrices S_{k,l} turning subdomain summands into PSD blocks.

    Requires the union of completed subgraphs to be chordal; the sum of the
    summands must be PSD.  Returns a dict over the partition's nonempty pairs;
    pairs with empty intersection carry a zero matrix and are not stored.
    """
    p = partition.p
    n = partition.n
    if len(Q) != p:
        raise DecompositionError("need one summand per partition set")
    partition.validate()
    for k, q in enumerate(Q):
        allowed = set(partition.sets[k])
        for (i, j) in q.entries:
            if i not in allowed or j not in allowed:
                raise DecompositionError(
                    f"summand {k} has an entry at ({i},{j}) outside its index set"
                )
    union = clique_graph(n, partition.sets)
    chordal, order = is_chordal(union)
    if not chordal:
        raise AssumptionError(
            "assumption 4 fails: the union of completed subgraphs is not chordal"
        )
    total = Q[0].copy()
    for q in Q[1:]:
        total = total + q
    if not is_psd(total, tol):
        raise DecompositionError("sum of summands is not positive semidefinite")

    cliques = CliqueSet(cliques=partition.sets, elimination_order=order)
    split = chordal_decompose(total, cliques, tol)

    scale = max(1.0, total.max_abs())
    orphan_tol = max(tol, 1e-12) * scale
    pair_sets = {pair: set(inter) for pair, inter in partition.pairs.items()}
    S = {pair: np.zeros((n, n)) for pair in partition.pairs}
    for k in range(p - 1):
        T = split.summands[k][1].to_dense() - Q[k].to_dense()
        for l in range(k):
            if (l, k) in S:
                T += S[(l, k)]
        rows, cols = np.nonzero(np.triu(np.abs(T) > 0.0))
        for i, j in zip(rows.tolist(), cols.tolist()):
            value = T[i, j]
            target = None
            for l in range(k + 1, p):
                members = pair_sets.get((k, l))
                if members and i in members and j in members:
                    target = l
                    break
            if target is None:
                if abs(value) > orphan_tol:
                    raise DecompositionError(
                        f"entry ({i},{j}) of block {k} has no later overlap to carry it"
                    )
                continue
            S[(k, target)][i, j] += value
            if i != j:
                S[(k, target)][j, i] += value
    return {pair: SymMat.from_dense(mat) for pair, mat in S.items()}


def embedded_blocks(Q, partition: Partition, S):
    """Assemble the per-subdomain blocks Q_k - sum S_{l,k} + sum S_{k,l}."""
    n = partition.n
    blocks = []
    for k in range(partition.p):
        blk = Q[k].to_dense()
        for l in range(k):
            if (l, k) in S:
                blk -= _as_dense(S[(l, k)])
        for l in range(k + 1, partition.p):
            if (k, l) in S:
                blk += _as_dense(S[(k, l)])
        blocks.append(blk)
    return blocks


def _solve_shaft(A_dense, B, target_rel=1e-12, max_refine=10):
    """X = A^{-1} B by sparse LU with iterative refinement."""
    n = A_dense.shape[0]
    B = np.asarray(B, dtype=float)
    if B.ndim == 1:
        B = B[:, None]
    norm_b = max(np.linalg.norm(B), 1.0)
    try:
        lu = spla.splu(sp.csc_matrix(A_dense))
    except RuntimeError as exc:
        raise ConditioningError(f"shaft matrix is singular: {exc}") from None
    X = lu.solve(B)
    if not np.all(np.isfinite(X)):
        raise ConditioningError("shaft solve produced non-finite values")
    for _ in range(max_refine):
        resid = B - A_dense @ X
        if np.linalg.norm(resid) <= target_rel * norm_b:
            break
        X = X + lu.solve(resid)
    resid = np.linalg.norm(B - A_dense @ X)
    if resid > 1e4 * target_rel * norm_b:
        raise ConditioningError(
            f"shaft solve stalled at relative residual {resid / norm_b:.3e}; "
            "matrix is numerically singular"
        )
    return X


def arrow_decompose(system: ArrowSystem, tol=1e-9):
    """Split an arrow matrix into per-subdomain PSD blocks (vector couplers).

    The first p-1 blocks are PSD by construction with at least m zero
    eigenvalues; the last block is PSD exactly when the assembled matrix is.
    """
    system.validate()
    n, m, p = system.n, system.m, system.p
    size = n + m
    M = system.assemble()

    C_dense = system.C.to_dense()
    if p == 1:
        return ArrowSplit(D={}, Cs=[C_dense], blocks=[M])

    for k, part in enumerate(system.parts):
        if not is_psd(part.A, tol):
            raise DecompositionError(f"shaft summand {k} is not PSD")
    if m and np.linalg.eigvalsh(C_dense)[0] <= 0.0:
        raise DecompositionError("arrow corner block C is not positive definite")

    A = system.shaft()
    lam_min = float(np.linalg.eigvalsh(A)[0])
    if lam_min <= 0.0:
        raise ConditioningError(
            f"assembled shaft is not positive definite (min eig {lam_min:.3e})"
        )
    B = np.zeros((n, m))
    for part in system.parts:
        B += part.B
    X = _solve_shaft(A, B)

    scale = max(1.0, float(np.abs(M).max(initial=0.0)))
    orphan_tol = max(tol, 1e-12) * scale
    pair_sets = {pair: set(inter) for pair, inter in system.partition.pairs.items()}
    D = {pair: np.zeros((n, m)) for pair in system.partition.pairs}
    for k in range(p - 1):
        A_k = system.parts[k].A.to_dense()
        T = A_k @ X - system.parts[k].B
        for l in range(k):
            if (l, k) in D:
                T += D[(l, k)]
        for i in np.nonzero(np.abs(T).max(axis=1) > 0.0)[0].tolist():
            target = None
            for l in range(k + 1, p):
                members = pair_sets.get((k, l))
                if members and i in members:
                    target = l
                    break
            if target is None:
                if np.abs(T[i, :]).max() > orphan_tol:
                    raise DecompositionError(
                        f"row {i} of block {k} has no later overlap to carry it"
                    )
                continue
            D[(k, target)][i, :] += T[i, :]

    Cs = []
    C_rest = C_dense.copy()
    for k in range(p - 1):
        A_k = system.parts[k].A.to_dense()
        Ck = X.T @ A_k @ X
        Ck = 0.5 * (Ck + Ck.T)
        Cs.append(Ck)
        C_rest -= Ck
    Cs.append(0.5 * (C_rest + C_rest.T))

    blocks = []
    for k in range(p):
        blk = np.zeros((size, size))
        blk[:n, :n] = system.parts[k].A.to_dense()
        blk[:n, n:] = system.parts[k].B
        for l in range(k):
            if (l, k) in D:
                blk[:n, n:] -= D[(l, k)]
        for l in range(k + 1, p):
            if (k, l) in D:
                blk[:n, n:] += D[(k, l)]
        blk[n:, :n] = blk[:n, n:].T
        blk[n:, n:] = Cs[k]
        blocks.append(blk)
    return ArrowSplit(D=D, Cs=Cs, blocks=blocks)


# --- arrow system serialization -------------------------------------------
#
# Line format (whitespace separated):
#   arrowsystem
#   <n> <m> <p>
#   set <k> <size>
#   <indices of I_k on one line>
#   A <nnz>            followed by nnz lines "i j value" (upper triangle)
#   B <nnz>            followed by nnz lines "i j value"  (row, column)
#   ... one set/A/B group per part, k = 0..p-1 ...
#   C <nnz>            followed by nnz lines "i j value" (upper triangle)


def save_arrow_system(system: ArrowSystem, path):
    lines = ["arrowsystem", f"{system.n} {system.m} {system.p}"]
    for k, part in enumerate(system.parts):
        idx = system.partition.sets[k]
        lines.append(f"set {k} {len(idx)}")
        lines.append(" ".join(str(i) for i in idx))
        trips = part.A.triplets()
        lines.append(f"A {len(trips)}")
        for i, j, v in trips:
            lines.append(f"{i} {j} {v:.17g}")
        rows, cols = np.nonzero(part.B)
        lines.append(f"B {len(rows)}")
        for i, j in zip(rows.tolist(), cols.tolist()):
            lines.append(f"{i} {j} {part.B[i, j]:.17g}")
    trips = system.C.triplets()
    lines.append(f"C {len(trips)}")
    for i, j, v in trips:
        lines.append(f"{i} {j} {v:.17g}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_arrow_system(path):
    with open(path) as fh:
        tokens = fh.read().split("\n")
    it = iter(t for t in tokens if t.strip())
    if next(it).strip() != "arrowsystem":
        raise DecompositionError(f"{path}: missing arrowsystem header")
    n, m, p = (int(t) for t in next(it).split())
    sets = []
    parts = []
    for k in range(p):
        tag, kk, size = next(it).split()
        if tag != "set" or int(kk) != k:
            raise DecompositionError(f"{path}: expected 'set {k}' section")
        idx = [int(t) for t in next(it).split()]
        if len(idx) != int(size):
            raise DecompositionError(f"{path}: set {k} size mismatch")
        sets.append(idx)
        tag, nnz = next(it).split()
        if tag != "A":
            raise DecompositionError(f"{path}: expected A section for part {k}")
        A = SymMat(n)
        for _ in range(int(nnz)):
            i, j, v = next(it).split()
            A._add(int(i), int(j), float(v))
        tag, nnz = next(it).split()
        if tag != "B":
            raise DecompositionError(f"{path}: expected B section for part {k}")
        B = np.zeros((n, m))
        for _ in range(int(nnz)):
            i, j, v = next(it).split()
            B[int(i), int(j)] = float(v)
        parts.append(ArrowPart(A=A, B=B))
    tag, nnz = next(it).split()
    if tag != "C":
        raise DecompositionError(f"{path}: expected C section")
    C = SymMat(m)
    for _ in range(int(nnz)):
        i, j, v = next(it).split()
        C._add(int(i), int(j), float(v))
    partition = Partition.from_sets(n, sets)
    return ArrowSystem(n=n, m=m, parts=parts, C=C, partition=partition)

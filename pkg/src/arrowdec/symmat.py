"""Sparse symmetric matrices in coordinate storage, with PSD certification.

A SymMat stores only the upper triangle (i <= j); the entry (i, j) implies
(j, i).  All indices are 0-based.  Values are kept in a dict keyed by (i, j),
so construction from triplets accumulates duplicates the way finite-element
assembly expects.
"""

from __future__ import annotations

import numpy as np


class SymMatError(ValueError):
    """Bad index, non-finite value or dimension mismatch."""


class SymMat:
    """n x n real symmetric matrix, coordinate storage of the upper triangle."""

    __slots__ = ("n", "entries")

    def __init__(self, n, triplets=()):
        if n < 0:
            raise SymMatError(f"dimension must be nonnegative, got {n}")
        self.n = int(n)
        self.entries = {}
        for i, j, v in triplets:
            self._add(i, j, v)

    def _add(self, i, j, v):
        i, j = int(i), int(j)
        if i > j:
            i, j = j, i
        if not (0 <= i and j < self.n):
            raise SymMatError(f"index ({i},{j}) outside [0,{self.n})")
        v = float(v)
        if not np.isfinite(v):
            raise SymMatError(f"non-finite value at ({i},{j})")
        self.entries[(i, j)] = self.entries.get((i, j), 0.0) + v

    @classmethod
    def from_dense(cls, arr, tol=0.0):
        arr = np.asarray(arr, dtype=float)
        n = arr.shape[0]
        if arr.shape != (n, n):
            raise SymMatError(f"expected square array, got {arr.shape}")
        if not np.allclose(arr, arr.T, atol=1e-12 * max(1.0, np.abs(arr).max(initial=0.0))):
            raise SymMatError("array is not symmetric")
        m = cls(n)
        sym = 0.5 * (arr + arr.T)
        ii, jj = np.nonzero(np.abs(np.triu(sym)) > tol)
        for i, j in zip(ii.tolist(), jj.tolist()):
            m.entries[(i, j)] = float(sym[i, j])
        return m

    @classmethod
    def identity(cls, n, scale=1.0):
        return cls(n, [(i, i, scale) for i in range(n)])

    def get(self, i, j):
        if i > j:
            i, j = j, i
        return self.entries.get((i, j), 0.0)

    def to_dense(self):
        arr = np.zeros((self.n, self.n))
        for (i, j), v in self.entries.items():
            arr[i, j] = v
            arr[j, i] = v
        return arr

    def copy(self):
        m = SymMat(self.n)
        m.entries = dict(self.entries)
        return m

    def scaled(self, alpha):
        m = SymMat(self.n)
        m.entries = {k: alpha * v for k, v in self.entries.items()}
        return m

    def __add__(self, other):
        if not isinstance(other, SymMat):
            return NotImplemented
        if other.n != self.n:
            raise SymMatError(f"dimension mismatch {self.n} vs {other.n}")
        m = self.copy()
        for (i, j), v in other.entries.items():
            m.entries[(i, j)] = m.entries.get((i, j), 0.0) + v
        return m

    def __mul__(self, alpha):
        return self.scaled(float(alpha))

    __rmul__ = __mul__

    def nnz(self):
        return len(self.entries)

    def max_abs(self):
        if not self.entries:
            return 0.0
        return max(abs(v) for v in self.entries.values())

    def triplets(self):
        """Upper-triangle triplets (i, j, v) in sorted index order."""
        return [(i, j, self.entries[(i, j)]) for i, j in sorted(self.entries)]

    def pattern(self):
        """Set of upper-triangle index pairs with a stored nonzero value."""
        return {k for k, v in self.entries.items() if v != 0.0}

    def __repr__(self):
        return f"SymMat(n={self.n}, nnz={self.nnz()})"


def restrict(A, index_set):
    """Principal submatrix of A with rows/columns from index_set.

    Indices are taken in increasing order; the result is |I| x |I|.
    """
    idx = sorted(set(int(i) for i in index_set))
    if not idx:
        raise SymMatError("index set must be nonempty")
    if idx[0] < 0 or idx[-1] >= A.n:
        raise SymMatError(f"index set not contained in [0,{A.n})")
    pos = {g: k for k, g in enumerate(idx)}
    sub = SymMat(len(idx))
    for (i, j), v in A.entries.items():
        if i in pos and j in pos:
            sub.entries[(pos[i], pos[j])] = v
    return sub


def is_psd(A, tol=1e-9):
    """True iff lambda_min(A) >= -tol * max(1, ||A||_inf).

    ||A||_inf is the maximum absolute row sum.  A Cholesky attempt on the
    shifted matrix serves as a fast accept; the eigenvalue bound decides
    borderline cases.
    """
    if tol < 0:
        raise SymMatError("tol must be nonnegative")
    dense = A.to_dense() if isinstance(A, SymMat) else np.asarray(A, dtype=float)
    if not np.all(np.isfinite(dense)):
        raise SymMatError("matrix has non-finite entries")
    n = dense.shape[0]
    if n == 0:
        return True
    scale = max(1.0, float(np.abs(dense).sum(axis=1).max()))
    shift = tol * scale
    try:
        np.linalg.cholesky(dense + 2.0 * shift * np.eye(n))
        if shift > 0:
            # Cholesky of A + 2*shift succeeded; accept unless the margin
            # could hide an eigenvalue below -shift.
            lam_min = float(np.linalg.eigvalsh(dense)[0])
            return lam_min >= -shift
        return True
    except np.linalg.LinAlgError:
        pass
    lam_min = float(np.linalg.eigvalsh(dense)[0])
    return lam_min >= -shift


def write_matrix_market(A, path):
    """Write a SymMat in Matrix Market coordinate symmetric format."""
    lines = ["%%MatrixMarket matrix coordinate real symmetric"]
    trips = A.triplets()
    lines.append(f"{A.n} {A.n} {len(trips)}")
    for i, j, v in trips:
        # MM symmetric convention stores the lower triangle
        lines.append(f"{j + 1} {i + 1} {v:.17g}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_matrix_market(path):
    """Read a symmetric Matrix Market coordinate file into a SymMat."""
    with open(path) as fh:
        header = fh.readline()
        if "matrixmarket" not in header.lower():
            raise SymMatError(f"{path}: not a Matrix Market file")
        if "symmetric" not in header.lower():
            raise SymMatError(f"{path}: expected a symmetric matrix")
        line = fh.readline()
        while line.startswith("%"):
            line = fh.readline()
        rows, cols, nnz = (int(t) for t in line.split())
        if rows != cols:
            raise SymMatError(f"{path}: matrix is not square")
        mat = SymMat(rows)
        count = 0
        for line in fh:
            line = line.strip()
            if not line:
                continue
            i, j, v = line.split()
            mat._add(int(i) - 1, int(j) - 1, float(v))
            count += 1
        if count != nnz:
            raise SymMatError(f"{path}: expected {nnz} entries, found {count}")
    return mat

import numpy as np
import pytest

from arrowdec import (
    ArrowPart,
    ArrowSystem,
    CliqueSet,
    ConditioningError,
    DecompositionError,
    Partition,
    SymMat,
    arrow_decompose,
    chordal_decompose,
    embedded_blocks,
    embedded_decompose,
    load_arrow_system,
    save_arrow_system,
    verify_split,
)
from arrowdec.checks import (
    arrow_suite,
    chordal_suite,
    embedded_suite,
    random_arrow_system,
)
from arrowdec.partition import AssumptionError


def test_chordal_identity_single_clique():
    A = SymMat.identity(3)
    cs = CliqueSet(cliques=[(0, 1, 2)], elimination_order=[0, 1, 2])
    split = chordal_decompose(A, cs)
    assert len(split.summands) == 1
    assert np.allclose(split.summands[0][1].to_dense(), np.eye(3), atol=0)


def test_chordal_tridiagonal_two_cliques():
    A = SymMat.from_dense(np.array([[2.0, 1, 0], [1, 2, 1], [0, 1, 2]]))
    cs = CliqueSet(cliques=[(0, 1), (1, 2)], elimination_order=[0, 2, 1])
    split = chordal_decompose(A, cs)
    total = np.zeros((3, 3))
    for clique, Y in split.summands:
        dense = Y.to_dense()
        idx = list(clique)
        # summand supported on its clique and PSD there
        mask = np.ones((3, 3), dtype=bool)
        mask[np.ix_(idx, idx)] = False
        assert np.abs(dense[mask]).max(initial=0.0) == 0.0
        assert np.linalg.eigvalsh(dense[np.ix_(idx, idx)])[0] >= -1e-12
        total += dense
    assert np.allclose(total, A.to_dense(), atol=1e-14)


def test_chordal_two_overlapping_blocks(rng):
    # block diagonal with two overlapping 4x4 blocks on 6 nodes
    idx1, idx2 = list(range(4)), list(range(2, 6))
    A = SymMat(6)
    for idx in (idx1, idx2):
        G = rng.standard_normal((4, 4))
        local = G.T @ G + 0.1 * np.eye(4)
        for a in range(4):
            for b in range(a, 4):
                A._add(idx[a], idx[b], local[a, b])
    cs = CliqueSet(cliques=[tuple(idx1), tuple(idx2)],
                   elimination_order=[0, 1, 5, 4, 2, 3])
    split = chordal_decompose(A, cs)
    for clique, Y in split.summands:
        allowed = set(clique)
        assert all(i in allowed and j in allowed for (i, j) in Y.entries)
    rep = verify_split(A, [y for _, y in split.summands], tol=1e-10)
    assert rep.passed


def test_chordal_rejects_uncovered_pattern():
    A = SymMat.from_dense(np.eye(3) + 0.1 * np.ones((3, 3)))
    cs = CliqueSet(cliques=[(0, 1), (1, 2)], elimination_order=[0, 2, 1])
    with pytest.raises(DecompositionError):
        chordal_decompose(A, cs)


def test_chordal_rejects_indefinite():
    A = SymMat.from_dense(np.array([[1.0, 2.0], [2.0, 1.0]]))
    cs = CliqueSet(cliques=[(0, 1)], elimination_order=[0, 1])
    with pytest.raises(DecompositionError):
        chordal_decompose(A, cs)


def _gram_on(rng, n, idx, slack=0.2):
    idx = list(idx)
    G = rng.standard_normal((len(idx), len(idx)))
    local = G.T @ G + slack * np.eye(len(idx))
    out = SymMat(n)
    for a in range(len(idx)):
        for b in range(a, len(idx)):
            out._add(idx[a], idx[b], local[a, b])
    return out


def test_embedded_two_parts_transfer(rng):
    # p = 2 on a 4x4 instance: one transfer matrix on the overlap realizes
    # two PSD blocks summing to the input
    part = Partition.from_sets(4, [range(3), range(1, 4)])
    Q1 = _gram_on(rng, 4, range(3))
    Q2 = _gram_on(rng, 4, range(1, 4))
    total = Q1.to_dense() + Q2.to_dense()
    S = embedded_decompose([Q1, Q2], part)
    assert set(S) == {(0, 1)}
    blocks = embedded_blocks([Q1, Q2], part, S)
    assert np.linalg.eigvalsh(blocks[0])[0] >= -1e-9 * np.linalg.norm(total)
    assert np.linalg.eigvalsh(blocks[1])[0] >= -1e-9 * np.linalg.norm(total)
    rep = verify_split(total, blocks, tol=1e-9)
    assert rep.passed
    # the first block equals Q1 + scattered S by definition
    assert np.allclose(blocks[0], Q1.to_dense() + S[(0, 1)].to_dense(), atol=0)


def test_embedded_matches_clique_split(rng):
    # the transfer construction reproduces the clique decomposition's
    # summands on the same partition
    from arrowdec import chordal_decompose, is_chordal
    from arrowdec.graphs import CliqueSet, clique_graph

    part = Partition.from_sets(4, [range(3), range(1, 4)])
    Q1 = _gram_on(rng, 4, range(3))
    Q2 = _gram_on(rng, 4, range(1, 4))
    total = SymMat.from_dense(Q1.to_dense() + Q2.to_dense())
    S = embedded_decompose([Q1, Q2], part)
    blocks = embedded_blocks([Q1, Q2], part, S)

    union = clique_graph(4, part.sets)
    _, order = is_chordal(union)
    split = chordal_decompose(total, CliqueSet(part.sets, order))
    for blk, (_, Y) in zip(blocks, split.summands):
        assert np.abs(blk - Y.to_dense()).max() <= 1e-10 * np.linalg.norm(total.to_dense())


def test_embedded_empty_intersection_not_stored():
    part = Partition.from_sets(6, [range(3), range(2, 5), range(4, 6)])
    assert (0, 2) not in part.pairs  # {0,1,2} and {4,5} do not meet
    Q = []
    rng = np.random.default_rng(7)
    for k in range(3):
        idx = list(part.sets[k])
        G = rng.standard_normal((len(idx), len(idx)))
        local = G.T @ G + 0.1 * np.eye(len(idx))
        Qk = SymMat(6)
        for a in range(len(idx)):
            for b in range(a, len(idx)):
                Qk._add(idx[a], idx[b], local[a, b])
        Q.append(Qk)
    S = embedded_decompose(Q, part)
    assert (0, 2) not in S
    total = sum(q.to_dense() for q in Q)
    assert verify_split(total, embedded_blocks(Q, part, S), tol=1e-9).passed


def test_embedded_requires_chordal_union():
    # three sets forming a cyclic overlap pattern: the union of their
    # completions is a 6-node cycle-of-cliques that is not chordal
    part = Partition.from_sets(6, [(0, 1, 2), (2, 3, 4), (4, 5, 0)])
    Q = [SymMat(6, [(i, i, 1.0) for i in s]) for s in part.sets]
    with pytest.raises((AssumptionError, DecompositionError)):
        embedded_decompose(Q, part)


def test_arrow_degenerate_single_part():
    rng = np.random.default_rng(3)
    G = rng.standard_normal((4, 4))
    A = SymMat.from_dense(G.T @ G + np.eye(4))
    B = rng.standard_normal((4, 1))
    C = SymMat.from_dense(np.array([[float(B.T @ np.linalg.solve(A.to_dense(), B)) + 1.0]]))
    sys = ArrowSystem(n=4, m=1, parts=[ArrowPart(A=A, B=B)], C=C,
                      partition=Partition.from_sets(4, [range(4)]))
    split = arrow_decompose(sys)
    assert split.D == {}
    assert np.allclose(split.Cs[0], C.to_dense(), atol=0)
    assert np.allclose(split.blocks[0], sys.assemble(), atol=0)


def test_arrow_two_parts_half_identities(rng):
    # the worked two-part example: half identities on overlapping index
    # sets, one extra column, corner with unit slack
    part = Partition.from_sets(4, [(0, 1, 2), (1, 2, 3)])
    A1 = SymMat(4, [(i, i, 0.5) for i in (0, 1, 2)])
    A2 = SymMat(4, [(i, i, 0.5) for i in (1, 2, 3)])
    B1 = np.zeros((4, 1))
    B1[[0, 1, 2], 0] = rng.standard_normal(3)
    B2 = np.zeros((4, 1))
    B2[[1, 2, 3], 0] = rng.standard_normal(3)
    A = A1.to_dense() + A2.to_dense()
    B = B1 + B2
    C = SymMat.from_dense(B.T @ np.linalg.solve(A, B) + 1.0)
    sys = ArrowSystem(n=4, m=1, parts=[ArrowPart(A1, B1), ArrowPart(A2, B2)],
                      C=C, partition=part)
    split = arrow_decompose(sys)
    M = sys.assemble()
    assert verify_split(M, split.blocks, tol=1e-10).passed
    # first block restricted to its support has exactly one zero eigenvalue
    support = [0, 1, 2, 4]
    eigs = np.linalg.eigvalsh(split.blocks[0][np.ix_(support, support)])
    norm = max(1.0, np.abs(split.blocks[0]).max())
    assert int(np.sum(np.abs(eigs) <= 1e-10 * norm)) == 1
    assert eigs[-1] > 0


def test_arrow_worked_mesh_supports(worked_model, worked_plan):
    # arrow system assembled from the 4x4 mesh's 2x2 split: coupler
    # supports match the printed interface sizes
    from arrowdec.fem import subdomain_loads, subdomain_stiffness

    model, plan = worked_model, worked_plan
    x = np.full(model.m, 0.7)
    parts = []
    f_parts = subdomain_loads(model, plan)
    for k in range(plan.p):
        A = subdomain_stiffness(model, plan, k, x)
        B = f_parts[k][:, None]
        parts.append(ArrowPart(A=A, B=B))
    A_tot = sum(p.A.to_dense() for p in parts)
    B_tot = sum(p.B for p in parts)
    C = SymMat.from_dense(B_tot.T @ np.linalg.solve(A_tot, B_tot) + 1.0)
    sys = ArrowSystem(n=model.n, m=1, parts=parts, C=C,
                      partition=plan.to_partition(model.n))
    split = arrow_decompose(sys)
    sizes = {pair: len(d) for pair, d in plan.interfaces.items()}
    assert sizes == {(0, 1): 4, (0, 2): 6, (0, 3): 2,
                     (1, 2): 2, (1, 3): 6, (2, 3): 6}
    for pair, D in split.D.items():
        outside = [i for i in range(model.n) if i not in set(plan.interfaces[pair])]
        assert np.abs(D[outside, :]).max(initial=0.0) == 0.0
    assert verify_split(sys.assemble(), split.blocks, tol=1e-9).passed


def test_arrow_refuses_singular_shaft():
    # the assembled shaft diag(1,1,0,1) is PSD but singular
    part = Partition.from_sets(4, [(0, 1, 2), (1, 2, 3)])
    A1 = SymMat(4, [(0, 0, 1.0), (1, 1, 1.0)])
    A2 = SymMat(4, [(3, 3, 1.0)])
    parts = [ArrowPart(A1, np.zeros((4, 1))), ArrowPart(A2, np.zeros((4, 1)))]
    sys = ArrowSystem(n=4, m=1, parts=parts, C=SymMat.identity(1), partition=part)
    with pytest.raises(ConditioningError):
        arrow_decompose(sys)


def test_arrow_requires_positive_definite_corner(rng):
    sys = random_arrow_system(rng, n_max=15, p_max=2, m_max=1)
    while sys.p < 2:  # the single-part case passes the corner through untouched
        sys = random_arrow_system(rng, n_max=15, p_max=2, m_max=1)
    sys.C = SymMat.from_dense(-np.eye(sys.m))
    with pytest.raises(DecompositionError):
        arrow_decompose(sys)


def test_arrow_matches_embedded_selection(rng):
    # choosing S_{k,l} = [[0, D_{k,l}], [D', 0]] turns an arrow split into
    # block matrices that pass the same audit
    for _ in range(5):
        sys = random_arrow_system(rng, n_max=18, p_max=3, m_max=1)
        split = arrow_decompose(sys)
        M = sys.assemble()
        assert verify_split(M, split.blocks, tol=1e-10).passed
        size = sys.n + sys.m
        total = np.zeros((size, size))
        for k in range(sys.p):
            blk = np.zeros((size, size))
            blk[: sys.n, : sys.n] = sys.parts[k].A.to_dense()
            blk[: sys.n, sys.n:] = sys.parts[k].B
            blk[sys.n:, : sys.n] = sys.parts[k].B.T
            if k == sys.p - 1:
                blk[sys.n:, sys.n:] = sys.C.to_dense()
            for l in range(k):
                if (l, k) in split.D:
                    blk[: sys.n, sys.n:] -= split.D[(l, k)]
            for l in range(k + 1, sys.p):
                if (k, l) in split.D:
                    blk[: sys.n, sys.n:] += split.D[(k, l)]
            blk[sys.n:, : sys.n] = blk[: sys.n, sys.n:].T
            # corner shares move between blocks exactly as in the arrow split
            if k < sys.p - 1:
                blk[sys.n:, sys.n:] += split.Cs[k]
            else:
                blk[sys.n:, sys.n:] = split.Cs[k]
            total += blk
        assert np.abs(total - M).max() <= 1e-10 * max(1.0, np.linalg.norm(M, "fro"))


def test_verify_split_identity_and_failure(rng):
    G = rng.standard_normal((5, 5))
    A = G.T @ G
    rep = verify_split(A, [A], tol=1e-8)
    assert rep.passed and rep.max_residual == 0.0
    bad = A.copy()
    bad[0, 0] += 10 * 1e-8 * max(1.0, np.linalg.norm(A, "fro"))
    rep = verify_split(A, [bad], tol=1e-8)
    assert not rep.passed and rep.max_residual > 0


def test_verify_split_dimension_mismatch():
    with pytest.raises(DecompositionError):
        verify_split(np.eye(3), [np.eye(2)])


def test_arrow_system_serialization_round_trip(tmp_path, rng):
    sys = random_arrow_system(rng, n_max=15, p_max=3, m_max=2)
    path = tmp_path / "system.txt"
    save_arrow_system(sys, path)
    loaded = load_arrow_system(path)
    assert loaded.n == sys.n and loaded.m == sys.m and loaded.p == sys.p
    assert np.array_equal(loaded.assemble(), sys.assemble())
    for a, b in zip(sys.parts, loaded.parts):
        assert np.array_equal(a.A.to_dense(), b.A.to_dense())
        assert np.array_equal(a.B, b.B)
    assert loaded.partition.sets == sys.partition.sets


def test_property_suites_quick():
    for suite, n in ((arrow_suite, 30), (chordal_suite, 20), (embedded_suite, 15)):
        trials, failures = suite(n, seed=11)
        assert failures == []

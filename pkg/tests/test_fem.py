import numpy as np
import pytest

from arrowdec import (
    FemConfig,
    FemError,
    assemble,
    build_model,
    element_stiffness,
    is_psd,
    load_config,
    partition,
    save_config,
    subdomain_loads,
    subdomain_stiffness,
)
from arrowdec.fem import assemble_dense, dump_model
from arrowdec.symmat import SymMat


def ke_closed_form(E, nu):
    """Classic closed-form unit-square plane-stress quad stiffness."""
    k = np.array([
        1 / 2 - nu / 6, 1 / 8 + nu / 8, -1 / 4 - nu / 12, -1 / 8 + 3 * nu / 8,
        -1 / 4 + nu / 12, -1 / 8 - nu / 8, nu / 6, 1 / 8 - 3 * nu / 8,
    ])
    idx = np.array([
        [0, 1, 2, 3, 4, 5, 6, 7],
        [1, 0, 7, 6, 5, 4, 3, 2],
        [2, 7, 0, 5, 6, 3, 4, 1],
        [3, 6, 5, 0, 7, 2, 1, 4],
        [4, 5, 6, 7, 0, 1, 2, 3],
        [5, 4, 3, 2, 1, 0, 7, 6],
        [6, 3, 4, 1, 2, 7, 0, 5],
        [7, 2, 1, 4, 3, 6, 5, 0],
    ])
    return E / (1 - nu ** 2) * k[idx]


def test_element_stiffness_matches_closed_form():
    for E, nu in [(1.0, 0.3), (2.5, 0.25), (1.0, 0.0), (1.0, 0.45)]:
        cfg = FemConfig(nx=1, ny=1, young_modulus=E, poisson_ratio=nu)
        mine = element_stiffness(cfg).to_dense()
        assert np.abs(mine - ke_closed_form(E, nu)).max() < 1e-14 * max(1.0, E)


def test_element_stiffness_rigid_modes_and_row_sums():
    Ke = element_stiffness(FemConfig(nx=1, ny=1)).to_dense()
    tx = np.array([1.0, 0, 1, 0, 1, 0, 1, 0])
    ty = np.array([0.0, 1, 0, 1, 0, 1, 0, 1])
    assert np.abs(Ke @ tx).max() < 1e-14
    assert np.abs(Ke @ ty).max() < 1e-14
    assert np.abs(Ke[0::2, :].sum(axis=1)).max() < 1e-14


def test_element_stiffness_exactly_three_zero_eigenvalues():
    Ke = element_stiffness(FemConfig(nx=1, ny=1, young_modulus=1.0,
                                     poisson_ratio=0.3)).to_dense()
    eigs = np.linalg.eigvalsh(Ke)
    assert np.sum(np.abs(eigs) < 1e-12) == 3
    assert np.sum(eigs > 1e-12) == 5


def test_element_stiffness_rejects_bad_poisson():
    with pytest.raises(FemError):
        FemConfig(nx=1, ny=1, poisson_ratio=0.5)


@pytest.mark.parametrize(
    "nx,ny,n", [(40, 20, 1680), (80, 40, 6560), (4, 4, 40), (4, 2, 24)]
)
def test_model_sizes(nx, ny, n):
    model = build_model(FemConfig(nx=nx, ny=ny))
    assert model.n == n
    assert model.m == nx * ny


def test_assemble_zero_and_one_hot():
    model = build_model(FemConfig(nx=3, ny=2))
    assert assemble(model, np.zeros(model.m)).nnz() == 0
    x = np.zeros(model.m)
    x[4] = 2.0
    K = assemble(model, x)
    expected = SymMat(model.n)
    dofs = model.element_dofs[4]
    for (a, b), v in model.K_elems[4].entries.items():
        if dofs[a] >= 0 and dofs[b] >= 0:
            expected._add(dofs[a], dofs[b], 2.0 * v)
    assert np.array_equal(K.to_dense(), expected.to_dense())


def test_assemble_against_global_integration_oracle():
    """Independent dense assembly: integrate hat-gradient products globally.

    Global bilinear hats on the 2x1 mesh are integrated per cell with 3x3
    Gauss quadrature in global coordinates, with no reference-element
    machinery shared with the implementation.
    """
    model = build_model(FemConfig(nx=2, ny=1))
    K_mine = assemble_dense(model, np.ones(model.m))

    E, nu = 1.0, 0.3
    D = (E / (1 - nu ** 2)) * np.array(
        [[1.0, nu, 0.0], [nu, 1.0, 0.0], [0.0, 0.0, (1 - nu) / 2]]
    )
    nodes = [(ix, iy) for ix in range(3) for iy in range(2)]  # column-major

    def hat(p, x, y):
        px, py = p
        return max(0.0, 1 - abs(x - px)) * max(0.0, 1 - abs(y - py))

    def grad_hat(p, x, y):
        px, py = p
        gx = (-np.sign(x - px)) * max(0.0, 1 - abs(y - py)) if abs(x - px) < 1 else 0.0
        gy = max(0.0, 1 - abs(x - px)) * (-np.sign(y - py)) if abs(y - py) < 1 else 0.0
        return gx, gy

    gauss, weights = np.polynomial.legendre.leggauss(3)
    free = [(p, d) for p in nodes if p[0] > 0 for d in (0, 1)]
    n = len(free)
    K_ref = np.zeros((n, n))
    for cx in range(2):
        for cy in range(1):
            for gx, wx in zip(gauss, weights):
                for gy, wy in zip(gauss, weights):
                    x = cx + 0.5 * (gx + 1)
                    y = cy + 0.5 * (gy + 1)
                    w = 0.25 * wx * wy
                    Bm = np.zeros((3, n))
                    for col, (p, d) in enumerate(free):
                        hx, hy = grad_hat(p, x, y)
                        if d == 0:
                            Bm[0, col] = hx
                            Bm[2, col] = hy
                        else:
                            Bm[1, col] = hy
                            Bm[2, col] = hx
                    K_ref += w * Bm.T @ D @ Bm
    # the oracle's free ordering matches the model's column-major dof order
    assert np.abs(K_mine - K_ref).max() < 1e-12


def test_default_load_is_right_edge_middle():
    model = build_model(FemConfig(nx=4, ny=4))
    loaded = np.nonzero(model.f)[0]
    assert len(loaded) == 1
    node = model.cfg.node_id(4, 2)
    assert loaded[0] == model.node_dof[node][1]
    assert model.f[loaded[0]] == -1.0


def test_load_on_fixed_edge_rejected():
    cfg = FemConfig(nx=2, ny=2, loads=[(0, "y", -1.0)])  # node 0 is on x=0
    with pytest.raises(FemError):
        build_model(cfg)


def test_partition_worked_mesh_index_sets(worked_model, worked_plan):
    # the 2x2 split of the 4x4 mesh, 0-based version of the printed sets
    assert worked_plan.dof_sets[0] == tuple(list(range(0, 6)) + list(range(10, 16)))
    assert worked_plan.dof_sets[3] == tuple(
        list(range(14, 20)) + list(range(24, 30)) + list(range(34, 40))
    )
    assert worked_plan.interfaces == {
        (0, 1): (4, 5, 14, 15),
        (0, 2): (10, 11, 12, 13, 14, 15),
        (0, 3): (14, 15),
        (1, 2): (14, 15),
        (1, 3): (14, 15, 16, 17, 18, 19),
        (2, 3): (14, 15, 24, 25, 34, 35),
    }
    # the cross-point dofs sit in all six intersections
    for inter in worked_plan.interfaces.values():
        assert {14, 15} <= set(inter)
    # per-block sizes: two of 12 dofs, two of 18 dofs
    assert sorted(len(s) for s in worked_plan.dof_sets) == [12, 12, 18, 18]


def test_partition_block_sizes_published_mesh():
    model = build_model(FemConfig(nx=40, ny=20))
    plan = partition(model, 4, 2)
    assert max(len(s) for s in plan.dof_sets) + 1 == 243
    plan = partition(model, 20, 10)
    assert max(len(s) for s in plan.dof_sets) + 1 == 19


def test_partition_divisibility_error():
    model = build_model(FemConfig(nx=4, ny=4))
    with pytest.raises(FemError):
        partition(model, 3, 2)


def test_partition_interfaces_symmetric_and_cover(worked_model):
    model = worked_model
    plan = partition(model, 2, 2)
    for (k, l), inter in plan.interfaces.items():
        assert inter == tuple(sorted(set(plan.dof_sets[k]) & set(plan.dof_sets[l])))
    covered = set()
    for s in plan.dof_sets:
        covered.update(s)
    assert covered == set(range(model.n))
    # a dof in at least two sets lies on an interface, and vice versa
    from collections import Counter

    counts = Counter()
    for s in plan.dof_sets:
        counts.update(s)
    on_interface = set()
    for inter in plan.interfaces.values():
        on_interface.update(inter)
    assert {d for d, c in counts.items() if c >= 2} == on_interface


def test_subdomain_stiffness_sums_to_global(worked_model, worked_plan, rng):
    model, plan = worked_model, worked_plan
    x = rng.uniform(0.1, 1.0, model.m)
    total = np.zeros((model.n, model.n))
    for k in range(plan.p):
        total += subdomain_stiffness(model, plan, k, x).to_dense()
    assert np.abs(total - assemble_dense(model, x)).max() < 1e-14


def test_subdomain_loads_partition_the_load(worked_model, worked_plan):
    parts = subdomain_loads(worked_model, worked_plan)
    assert np.array_equal(sum(parts), worked_model.f)
    for k, part_f in enumerate(parts):
        support = np.nonzero(part_f)[0]
        assert set(support) <= set(worked_plan.dof_sets[k])


def test_assembled_matrix_positive_definite_above_floor(worked_model):
    x = np.full(worked_model.m, 1e-3)
    K = assemble(worked_model, x)
    eps = 1e-10
    shifted = SymMat.from_dense(K.to_dense() - eps * np.eye(worked_model.n))
    assert is_psd(shifted, tol=1e-12)


def test_config_round_trip(tmp_path):
    cfg = FemConfig(nx=6, ny=3, young_modulus=2.0, poisson_ratio=0.25,
                    x_lower=1e-4, x_upper=0.9, volume=5.0,
                    loads=[(27, "x", 0.5), (26, "y", -2.0)])
    path = tmp_path / "mesh.cfg"
    save_config(cfg, path)
    back = load_config(path)
    assert back == cfg


def test_config_rejects_unknown_keys(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("nx = 2\nny = 2\nwat = 3\n")
    with pytest.raises(FemError):
        load_config(path)


def test_config_volume_window_enforced():
    with pytest.raises(FemError):
        FemConfig(nx=2, ny=2, x_upper=1.0, volume=5.0)


def test_dump_model_writes_files(tmp_path):
    model = build_model(FemConfig(nx=2, ny=1))
    dump_model(model, tmp_path / "dump")
    files = sorted(p.name for p in (tmp_path / "dump").iterdir())
    assert "dofmap.txt" in files and "load.txt" in files
    assert sum(name.endswith(".mtx") for name in files) == model.m

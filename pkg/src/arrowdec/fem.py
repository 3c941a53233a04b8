"""Plane-stress finite-element models on regular rectangular meshes.

Conventions (these reproduce the reference index sets used in the tests):

* nodes, elements and subdomains are all numbered column-major: x-column by
  x-column, ascending y within a column;
* each node carries two dofs (ux, uy), interleaved;
* dofs on the fixed edge are eliminated, and the remaining free dofs are
  numbered in node order.

Elements are unit-square bilinear quads with nodes counterclockwise from the
lower-left corner, integrated by 2x2 Gauss quadrature.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .partition import Partition
from .symmat import SymMat, write_matrix_market

_EDGES = ("left", "right", "bottom", "top")
_DIRECTIONS = {"x": 0, "y": 1}


class FemError(ValueError):
    """Invalid configuration, load placement or partition plan."""


@dataclass
class FemConfig:
    """Mesh, material, boundary and design-bound data for one model."""

    nx: int
    ny: int
    young_modulus: float = 1.0
    poisson_ratio: float = 0.3
    fixed_edge: str = "left"
    loads: list = None          # entries (global node id, 'x'|'y', magnitude)
    x_lower: float = 1e-6
    x_upper: float = 1.0
    volume: float = None        # defaults to 0.4 * element count

    def __post_init__(self):
        if self.nx < 1 or self.ny < 1:
            raise FemError("nx and ny must be at least 1")
        if not (-1.0 < self.poisson_ratio < 0.5):
            raise FemError(f"poisson ratio {self.poisson_ratio} outside (-1, 0.5)")
        if self.young_modulus <= 0:
            raise FemError("young modulus must be positive")
        if self.fixed_edge not in _EDGES:
            raise FemError(f"fixed_edge must be one of {_EDGES}")
        if not (0 <= self.x_lower <= self.x_upper):
            raise FemError("need 0 <= x_lower <= x_upper")
        m = self.nx * self.ny
        if self.volume is None:
            self.volume = 0.4 * m
        if not (self.x_lower * m < self.volume < self.x_upper * m):
            raise FemError(
                f"volume {self.volume} must lie strictly between {self.x_lower * m} "
                f"and {self.x_upper * m}"
            )
        if self.loads is None:
            # unit downward point load at the middle of the right edge
            node = self.node_id(self.nx, self.ny // 2)
            self.loads = [(node, "y", -1.0)]
        for node, direction, mag in self.loads:
            if direction not in _DIRECTIONS:
                raise FemError(f"load direction must be 'x' or 'y', got {direction!r}")
            if not (0 <= node < (self.nx + 1) * (self.ny + 1)):
                raise FemError(f"load node {node} outside the mesh")
            if not np.isfinite(mag):
                raise FemError("load magnitude must be finite")

    def node_id(self, ix, iy):
        """Global grid node id, column-major over all nodes including fixed ones."""
        return ix * (self.ny + 1) + iy

    @property
    def n_elements(self):
        return self.nx * self.ny


def load_config(path):
    """Read a FemConfig from a flat key=value text file.

    Recognized keys: nx, ny, young_modulus, poisson_ratio, fixed_edge,
    x_lower, x_upper, volume, and repeatable "load = NODE DIR MAG" lines.
    """
    values = {}
    loads = []
    with open(path) as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise FemError(f"{path}: expected key=value, got {line!r}")
            key, val = (t.strip() for t in line.split("=", 1))
            if key == "load":
                node, direction, mag = val.split()
                loads.append((int(node), direction, float(mag)))
            else:
                values[key] = val
    kwargs = {}
    for key in ("nx", "ny"):
        if key not in values:
            raise FemError(f"{path}: missing required key {key}")
        kwargs[key] = int(values.pop(key))
    for key in ("young_modulus", "poisson_ratio", "x_lower", "x_upper", "volume"):
        if key in values:
            kwargs[key] = float(values.pop(key))
    if "fixed_edge" in values:
        kwargs["fixed_edge"] = values.pop("fixed_edge")
    if values:
        raise FemError(f"{path}: unknown keys {sorted(values)}")
    if loads:
        kwargs["loads"] = loads
    return FemConfig(**kwargs)


def save_config(cfg: FemConfig, path):
    lines = [
        f"nx = {cfg.nx}",
        f"ny = {cfg.ny}",
        f"young_modulus = {cfg.young_modulus:.17g}",
        f"poisson_ratio = {cfg.poisson_ratio:.17g}",
        f"fixed_edge = {cfg.fixed_edge}",
        f"x_lower = {cfg.x_lower:.17g}",
        f"x_upper = {cfg.x_upper:.17g}",
        f"volume = {cfg.volume:.17g}",
    ]
    for node, direction, mag in cfg.loads:
        lines.append(f"load = {node} {direction} {mag:.17g}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def element_stiffness(cfg: FemConfig):
    """8x8 plane-stress stiffness of the unit-square bilinear quad.

    Node order is counterclockwise from the lower-left corner, dofs
    interleaved (u1x, u1y, ..., u4x, u4y).  Symmetric PSD with exactly the
    three rigid-body modes in its null space.
    """
    E, nu = cfg.young_modulus, cfg.poisson_ratio
    D = (E / (1.0 - nu * nu)) * np.array(
        [[1.0, nu, 0.0], [nu, 1.0, 0.0], [0.0, 0.0, (1.0 - nu) / 2.0]]
    )
    # reference nodes of the unit square mapped from [-1,1]^2
    xi_n = np.array([-1.0, 1.0, 1.0, -1.0])
    eta_n = np.array([-1.0, -1.0, 1.0, 1.0])
    gp = 1.0 / np.sqrt(3.0)
    K = np.zeros((8, 8))
    for xi in (-gp, gp):
        for eta in (-gp, gp):
            dN_dxi = 0.25 * xi_n * (1.0 + eta * eta_n)
            dN_deta = 0.25 * eta_n * (1.0 + xi * xi_n)
            # jacobian of the map to the unit square is diag(1/2, 1/2)
            dN_dx = 2.0 * dN_dxi
            dN_dy = 2.0 * dN_deta
            Bm = np.zeros((3, 8))
            Bm[0, 0::2] = dN_dx
            Bm[1, 1::2] = dN_dy
            Bm[2, 0::2] = dN_dy
            Bm[2, 1::2] = dN_dx
            K += Bm.T @ D @ Bm * 0.25  # det J = 1/4, unit Gauss weights
    return SymMat.from_dense(0.5 * (K + K.T))


@dataclass
class FemModel:
    """Assembled per-element data after boundary elimination."""

    cfg: FemConfig
    m: int
    n: int
    element_dofs: list      # per element, 8 entries: free dof index or -1
    K_elems: list           # per element, 8x8 SymMat
    f: np.ndarray
    node_dof: dict          # global grid node id -> (dof_x, dof_y), free nodes only
    element_grid: dict      # (ex, ey) -> element index

    def element_free_dofs(self, i):
        return [d for d in self.element_dofs[i] if d >= 0]


def _fixed_nodes(cfg: FemConfig):
    fixed = set()
    for ix in range(cfg.nx + 1):
        for iy in range(cfg.ny + 1):
            if (
                (cfg.fixed_edge == "left" and ix == 0)
                or (cfg.fixed_edge == "right" and ix == cfg.nx)
                or (cfg.fixed_edge == "bottom" and iy == 0)
                or (cfg.fixed_edge == "top" and iy == cfg.ny)
            ):
                fixed.add(cfg.node_id(ix, iy))
    return fixed


def build_model(cfg: FemConfig):
    """Mesh the rectangle, eliminate the fixed edge, assemble element data."""
    fixed = _fixed_nodes(cfg)
    node_dof = {}
    next_dof = 0
    for ix in range(cfg.nx + 1):
        for iy in range(cfg.ny + 1):
            node = cfg.node_id(ix, iy)
            if node in fixed:
                continue
            node_dof[node] = (next_dof, next_dof + 1)
            next_dof += 2
    n = next_dof

    Ke = element_stiffness(cfg)
    element_dofs = []
    element_grid = {}
    for ex in range(cfg.nx):
        for ey in range(cfg.ny):
            element_grid[(ex, ey)] = len(element_dofs)
            corners = [
                cfg.node_id(ex, ey),
                cfg.node_id(ex + 1, ey),
                cfg.node_id(ex + 1, ey + 1),
                cfg.node_id(ex, ey + 1),
            ]
            dofs = []
            for node in corners:
                if node in node_dof:
                    dofs.extend(node_dof[node])
                else:
                    dofs.extend((-1, -1))
            element_dofs.append(dofs)

    f = np.zeros(n)
    for node, direction, mag in cfg.loads:
        if node not in node_dof:
            raise FemError(f"load applied to eliminated node {node}")
        f[node_dof[node][_DIRECTIONS[direction]]] += mag

    m = cfg.n_elements
    return FemModel(
        cfg=cfg,
        m=m,
        n=n,
        element_dofs=element_dofs,
        K_elems=[Ke] * m,
        f=f,
        node_dof=node_dof,
        element_grid=element_grid,
    )


def scatter_element(model: FemModel, i):
    """Element stiffness scattered to the free global dofs, as a SymMat."""
    dofs = model.element_dofs[i]
    Ke = model.K_elems[i]
    out = SymMat(model.n)
    for (a, b), v in Ke.entries.items():
        ga, gb = dofs[a], dofs[b]
        if ga < 0 or gb < 0:
            continue
        out._add(ga, gb, v)
    return out


def assemble(model: FemModel, x):
    """Global stiffness sum_i x_i K_i on the free dofs."""
    x = np.asarray(x, dtype=float)
    if x.shape != (model.m,):
        raise FemError(f"density vector must have length {model.m}")
    if not np.all(np.isfinite(x)):
        raise FemError("density vector has non-finite entries")
    K = SymMat(model.n)
    for i in range(model.m):
        if x[i] == 0.0:
            continue
        dofs = model.element_dofs[i]
        for (a, b), v in model.K_elems[i].entries.items():
            ga, gb = dofs[a], dofs[b]
            if ga < 0 or gb < 0:
                continue
            K._add(ga, gb, x[i] * v)
    return K


def assemble_dense(model: FemModel, x):
    return assemble(model, x).to_dense()


@dataclass
class SubdomainPlan:
    """Regular partition of the mesh into Nx x Ny subdomains.

    ``element_sets`` is a disjoint cover of the elements; ``dof_sets`` holds
    the free dofs touched by each subdomain's elements; ``interfaces`` stores
    every nonempty pairwise intersection (both diagonal pairs at cross points
    are kept here; problem builders select among them).
    """

    Nx: int
    Ny: int
    element_sets: list
    dof_sets: list
    interfaces: dict
    grid_pos: list          # subdomain index -> (sx, sy)
    interior: list = field(default_factory=list)
    boundary: list = field(default_factory=list)

    @property
    def p(self):
        return len(self.element_sets)

    def to_partition(self, n):
        part = Partition.from_sets(n, self.dof_sets)
        return part

    def pair_is_diagonal(self, k, l):
        (ax, ay), (bx, by) = self.grid_pos[k], self.grid_pos[l]
        return ax != bx and ay != by

    def pair_is_kept_diagonal(self, k, l):
        """True for the (top-left, bottom-right) diagonal of a cross point."""
        if k > l:
            k, l = l, k
        (ax, ay), (bx, by) = self.grid_pos[k], self.grid_pos[l]
        return bx == ax + 1 and by == ay - 1


def partition(model: FemModel, Nx, Ny):
    """Split the mesh into Nx x Ny rectangular element blocks."""
    cfg = model.cfg
    if Nx < 1 or Ny < 1:
        raise FemError("subdomain counts must be at least 1")
    if cfg.nx % Nx or cfg.ny % Ny:
        raise FemError(
            f"subdomain grid {Nx}x{Ny} does not divide the {cfg.nx}x{cfg.ny} mesh"
        )
    bw, bh = cfg.nx // Nx, cfg.ny // Ny
    element_sets = []
    dof_sets = []
    grid_pos = []
    for sx in range(Nx):
        for sy in range(Ny):
            grid_pos.append((sx, sy))
            elems = []
            dofs = set()
            for ex in range(sx * bw, (sx + 1) * bw):
                for ey in range(sy * bh, (sy + 1) * bh):
                    i = model.element_grid[(ex, ey)]
                    elems.append(i)
                    dofs.update(model.element_free_dofs(i))
            element_sets.append(sorted(elems))
            dof_sets.append(tuple(sorted(dofs)))

    p = Nx * Ny
    interfaces = {}
    for k in range(p):
        sk = set(dof_sets[k])
        for l in range(k + 1, p):
            inter = tuple(sorted(sk & set(dof_sets[l])))
            if inter:
                interfaces[(k, l)] = inter

    interior = []
    boundary = []
    for k in range(p):
        gamma = set()
        for (a, b), inter in interfaces.items():
            if a == k or b == k:
                gamma.update(inter)
        boundary.append(tuple(sorted(gamma)))
        interior.append(tuple(sorted(set(dof_sets[k]) - gamma)))

    plan = SubdomainPlan(
        Nx=Nx,
        Ny=Ny,
        element_sets=element_sets,
        dof_sets=dof_sets,
        interfaces=interfaces,
        grid_pos=grid_pos,
        interior=interior,
        boundary=boundary,
    )
    if p >= 2:
        # element-wise plans put leftmost dof sets inside their neighbours'
        plan.to_partition(model.n).validate(require_no_containment=False)
    return plan


def subdomain_stiffness(model: FemModel, plan: SubdomainPlan, k, x):
    """K^(k)(x) = sum over the subdomain's elements of x_i K_i, on global dofs."""
    x = np.asarray(x, dtype=float)
    K = SymMat(model.n)
    for i in plan.element_sets[k]:
        dofs = model.element_dofs[i]
        for (a, b), v in model.K_elems[i].entries.items():
            ga, gb = dofs[a], dofs[b]
            if ga < 0 or gb < 0:
                continue
            K._add(ga, gb, x[i] * v)
    return K


def subdomain_loads(model: FemModel, plan: SubdomainPlan):
    """Split the load vector into per-subdomain parts f^(k) with sum f.

    Each loaded dof is attributed to the lowest-index subdomain containing it,
    so every part is supported on its subdomain's dof set.
    """
    parts = [np.zeros(model.n) for _ in range(plan.p)]
    owners = {}
    for k, dofs in enumerate(plan.dof_sets):
        for d in dofs:
            owners.setdefault(d, k)
    for d in np.nonzero(model.f)[0].tolist():
        if d not in owners:
            raise FemError(f"loaded dof {d} belongs to no subdomain")
        parts[owners[d]][d] = model.f[d]
    return parts


def dump_model(model: FemModel, directory):
    """Write per-element matrices (Matrix Market) plus a dof-map text file."""
    import os

    os.makedirs(directory, exist_ok=True)
    for i in range(model.m):
        write_matrix_market(model.K_elems[i], os.path.join(directory, f"element_{i:05d}.mtx"))
    with open(os.path.join(directory, "dofmap.txt"), "w") as fh:
        fh.write(f"{model.m} {model.n}\n")
        for i, dofs in enumerate(model.element_dofs):
            fh.write(f"{i} " + " ".join(str(d) for d in dofs) + "\n")
    with open(os.path.join(directory, "load.txt"), "w") as fh:
        for d in range(model.n):
            if model.f[d] != 0.0:
                fh.write(f"{d} {model.f[d]:.17g}\n")

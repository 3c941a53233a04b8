"""Linear-SDP intermediate representation, problem builders and SDPA files.

A problem is: minimize c'v subject to, per block, const + sum_i v_i * coeff_i
being PSD, plus linear rows and box bounds on the variables.

The four builders produce the minimum-compliance problem in its original
single-block form, its chordally decomposed form (per-pair composite matrix
variables), its arrow-decomposed form (per-pair vector variables), and the
two-subdomain form driven by an explicit interface force vector.

Cross points, where four subdomains meet at a node, make both diagonal
subdomain pairs intersect.  The builders instantiate coupling variables for:
no diagonal pair (chordal, default), exactly the (top-left, bottom-right)
pair (arrow, default), or both (``cross_policy="both"``).  The defaults
reproduce the published variable counts for both decompositions exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .fem import FemError, FemModel, SubdomainPlan, subdomain_loads
from .symmat import SymMat


class SdpError(ValueError):
    """Malformed problem or unsupported construct."""


@dataclass
class LinearRow:
    coeffs: dict            # var index -> coefficient
    rel: str                # "<=", ">=" or "=="
    rhs: float


@dataclass
class AffineBlock:
    dim: int
    const: SymMat
    coeffs: dict            # var index -> SymMat coefficient
    index_map: list = None  # optional: block row -> global row id


@dataclass
class SdoProblem:
    var_names: list
    objective: np.ndarray
    psd_blocks: list
    linear_cons: list = field(default_factory=list)
    lower: np.ndarray = None
    upper: np.ndarray = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        nv = len(self.var_names)
        self.objective = np.asarray(self.objective, dtype=float)
        if self.lower is None:
            self.lower = np.full(nv, -np.inf)
        if self.upper is None:
            self.upper = np.full(nv, np.inf)

    @property
    def n_vars(self):
        return len(self.var_names)

    def var_index(self, name):
        try:
            return self.var_names.index(name)
        except ValueError:
            raise SdpError(f"unknown variable {name!r}") from None

    def validate(self):
        nv = self.n_vars
        if self.objective.shape != (nv,):
            raise SdpError("objective length does not match the variable count")
        referenced = set()
        for b, blk in enumerate(self.psd_blocks):
            if blk.const.n != blk.dim:
                raise SdpError(f"block {b}: constant dimension mismatch")
            for i, coeff in blk.coeffs.items():
                if not (0 <= i < nv):
                    raise SdpError(f"block {b}: coefficient for unknown variable {i}")
                if coeff.n != blk.dim:
                    raise SdpError(f"block {b}: coefficient dimension mismatch for var {i}")
                referenced.add(i)
        for row in self.linear_cons:
            if row.rel not in ("<=", ">=", "=="):
                raise SdpError(f"unknown relation {row.rel!r}")
            referenced.update(row.coeffs)
        referenced.update(np.nonzero(np.isfinite(self.lower))[0].tolist())
        referenced.update(np.nonzero(np.isfinite(self.upper))[0].tolist())
        missing = set(range(nv)) - referenced
        if missing:
            names = [self.var_names[i] for i in sorted(missing)][:5]
            raise SdpError(f"variables never referenced: {names}")
        return self

    def block_value(self, b, v):
        """Dense value of block b at the assignment vector v."""
        v = np.asarray(v, dtype=float)
        blk = self.psd_blocks[b]
        out = blk.const.to_dense()
        for i, coeff in blk.coeffs.items():
            if v[i] != 0.0:
                out += v[i] * coeff.to_dense()
        return out


@dataclass
class CountReport:
    n_vars: int
    block_sizes: list
    n_blocks: int
    max_block: int
    breakdown: dict

    def csv_row(self, form, p):
        return f"{form},{p},{self.n_vars},{self.max_block},{self.n_blocks}"


_FAMILIES = {"x": "x", "gamma": "gamma_s", "s": "gamma_s",
             "g": "g_sigma", "sigma": "g_sigma", "S": "S", "Sshare": "S"}


def count_report(prob: SdoProblem):
    breakdown = {}
    for name in prob.var_names:
        prefix = name.split("[", 1)[0]
        family = _FAMILIES.get(prefix, prefix)
        breakdown[family] = breakdown.get(family, 0) + 1
    sizes = [blk.dim for blk in prob.psd_blocks]
    return CountReport(
        n_vars=prob.n_vars,
        block_sizes=sizes,
        n_blocks=len(sizes),
        max_block=max(sizes) if sizes else 0,
        breakdown=breakdown,
    )


def coupling_pairs(plan: SubdomainPlan, cross_policy):
    """Subdomain pairs that receive coupling variables.

    Side-adjacent pairs are always kept.  Diagonal pairs at cross points are
    dropped ("none"), reduced to the (top-left, bottom-right) pair ("one"),
    or all kept ("both").
    """
    if cross_policy not in ("none", "one", "both"):
        raise SdpError(f"unknown cross_policy {cross_policy!r}")
    pairs = []
    for pair in sorted(plan.interfaces):
        if plan.pair_is_diagonal(*pair):
            if cross_policy == "none":
                continue
            if cross_policy == "one" and not plan.pair_is_kept_diagonal(*pair):
                continue
        pairs.append(pair)
    return pairs


def cross_points(model, plan):
    """Interior mesh nodes where four subdomains meet: (dofs, quad indices)."""
    cfg = model.cfg
    bw, bh = cfg.nx // plan.Nx, cfg.ny // plan.Ny
    out = []
    for sx in range(1, plan.Nx):
        for sy in range(1, plan.Ny):
            node = cfg.node_id(sx * bw, sy * bh)
            if node not in model.node_dof:
                continue
            quad = sorted(
                (sx + dx - 1) * plan.Ny + (sy + dy - 1)
                for dx in (0, 1) for dy in (0, 1)
            )
            out.append((model.node_dof[node], quad))
    return out


def _redundant_cross_edges(quad, pairs_present):
    """Coupling pairs inside a cross-point quad not used by the sequential rule.

    The constructive decompositions move a shared row from subdomain k to the
    smallest-index later pair containing it, so the pairs (k, min later) form
    a spanning path of the quad; every other quad-internal pair is a cycle
    edge whose cross-point entries are redundant (their coefficient maps sum
    to zero around the cycle) and get fixed to zero.
    """
    edges = [
        (a, b)
        for i, a in enumerate(quad) for b in quad[i + 1:]
        if (a, b) in pairs_present
    ]
    tree = set()
    for k in quad[:-1]:
        later = [b for (a, b) in edges if a == k]
        if later:
            tree.add((k, min(later)))
    return [e for e in edges if e not in tree]


def _restricted_element(model, i, pos, dim):
    """Element stiffness mapped into block-local positions."""
    out = SymMat(dim)
    dofs = model.element_dofs[i]
    for (a, b), v in model.K_elems[i].entries.items():
        ga, gb = dofs[a], dofs[b]
        if ga < 0 or gb < 0:
            continue
        out._add(pos[ga], pos[gb], v)
    return out


def _volume_row(model):
    return LinearRow(coeffs={i: 1.0 for i in range(model.m)}, rel="<=",
                     rhs=model.cfg.volume)


def _density_bounds(model, nv):
    lower = np.full(nv, -np.inf)
    upper = np.full(nv, np.inf)
    lower[: model.m] = model.cfg.x_lower
    upper[: model.m] = model.cfg.x_upper
    return lower, upper


def build_original(model: FemModel):
    """Single-block compliance problem: min gamma, [[K(x), f], [f', gamma]] PSD."""
    n = model.n
    names = [f"x[{i}]" for i in range(model.m)] + ["gamma"]
    nv = len(names)
    dim = n + 1
    const = SymMat(dim)
    for d in np.nonzero(model.f)[0].tolist():
        const._add(d, n, model.f[d])
    coeffs = {}
    identity_pos = {d: d for d in range(n)}
    for i in range(model.m):
        coeffs[i] = _restricted_element(model, i, identity_pos, dim)
    coeffs[model.m] = SymMat(dim, [(n, n, 1.0)])
    block = AffineBlock(dim=dim, const=const, coeffs=coeffs,
                        index_map=list(range(n)) + [n])
    objective = np.zeros(nv)
    objective[model.m] = 1.0
    lower, upper = _density_bounds(model, nv)
    return SdoProblem(
        var_names=names,
        objective=objective,
        psd_blocks=[block],
        linear_cons=[_volume_row(model)],
        lower=lower,
        upper=upper,
        meta={"form": "original", "nx": model.cfg.nx, "ny": model.cfg.ny, "p": 1},
    ).validate()


def _decomposed_base(model, plan):
    """Per-subdomain block skeletons: position maps, element coefficients, loads."""
    f_parts = subdomain_loads(model, plan)
    blocks = []
    for k in range(plan.p):
        dofs = list(plan.dof_sets[k])
        pos = {d: j for j, d in enumerate(dofs)}
        dim = len(dofs) + 1
        last = len(dofs)
        const = SymMat(dim)
        for d in np.nonzero(f_parts[k])[0].tolist():
            const._add(pos[d], last, f_parts[k][d])
        coeffs = {}
        for i in plan.element_sets[k]:
            coeffs[i] = _restricted_element(model, i, pos, dim)
        blocks.append(
            AffineBlock(dim=dim, const=const, coeffs=coeffs,
                        index_map=dofs + [model.n])
        )
    return blocks


def build_arrow(model: FemModel, plan: SubdomainPlan, cross_policy="one"):
    """Arrow-decomposed compliance problem: vector couplers g, scalars gamma_k."""
    if plan.p < 2:
        raise FemError("arrow decomposition needs at least two subdomains")
    pairs = coupling_pairs(plan, cross_policy)
    names = [f"x[{i}]" for i in range(model.m)]
    names += [f"gamma[{k}]" for k in range(plan.p)]
    gamma_at = {k: model.m + k for k in range(plan.p)}
    g_at = {}
    for (a, b) in pairs:
        for d in plan.interfaces[(a, b)]:
            g_at[(a, b, d)] = len(names)
            names.append(f"g[{a},{b}][{d}]")
    nv = len(names)

    blocks = _decomposed_base(model, plan)
    for k in range(plan.p):
        blk = blocks[k]
        last = blk.dim - 1
        blk.coeffs[gamma_at[k]] = SymMat(blk.dim, [(last, last, 1.0)])
    for (a, b) in pairs:
        for d in plan.interfaces[(a, b)]:
            i = g_at[(a, b, d)]
            for k, sign in ((a, 1.0), (b, -1.0)):
                blk = blocks[k]
                pos = blk.index_map.index(d)
                blk.coeffs[i] = SymMat(blk.dim, [(pos, blk.dim - 1, sign)])

    pins = []
    pair_set = set(pairs)
    for dofs, quad in cross_points(model, plan):
        for a, b in _redundant_cross_edges(quad, pair_set):
            for d in dofs:
                pins.append(LinearRow(coeffs={g_at[(a, b, d)]: 1.0}, rel="==", rhs=0.0))

    objective = np.zeros(nv)
    for k in range(plan.p):
        objective[gamma_at[k]] = 1.0
    lower, upper = _density_bounds(model, nv)
    return SdoProblem(
        var_names=names,
        objective=objective,
        psd_blocks=blocks,
        linear_cons=[_volume_row(model)] + pins,
        lower=lower,
        upper=upper,
        meta={"form": "arrow", "nx": model.cfg.nx, "ny": model.cfg.ny,
              "Nx": plan.Nx, "Ny": plan.Ny, "p": plan.p,
              "cross_policy": cross_policy},
    ).validate()


def build_chordal(model: FemModel, plan: SubdomainPlan, cross_policy="none"):
    """Chordally decomposed compliance problem with composite matrix couplers.

    Each coupling pair (a, b) carries one symmetric matrix variable on the
    overlap dofs plus the compliance row/column: a |I_ab| x |I_ab| body, an
    overlap-sized column, and a corner share.  Corner shares are fixed to
    zero by equality rows; the per-block compliance scalars s_k carry the
    objective.
    """
    if plan.p < 2:
        raise FemError("chordal decomposition needs at least two subdomains")
    pairs = coupling_pairs(plan, cross_policy)
    names = [f"x[{i}]" for i in range(model.m)]
    names += [f"s[{k}]" for k in range(plan.p)]
    s_at = {k: model.m + k for k in range(plan.p)}
    entry_at = {}
    pins = []
    for (a, b) in pairs:
        inter = plan.interfaces[(a, b)]
        t = len(inter)
        for r in range(t + 1):
            for c in range(r, t + 1):
                idx = len(names)
                if c < t:
                    names.append(f"S[{a},{b}][{inter[r]},{inter[c]}]")
                elif r < t:
                    names.append(f"sigma[{a},{b}][{inter[r]}]")
                else:
                    names.append(f"Sshare[{a},{b}]")
                    pins.append(LinearRow(coeffs={idx: 1.0}, rel="==", rhs=0.0))
                entry_at[(a, b, r, c)] = idx
    nv = len(names)

    blocks = _decomposed_base(model, plan)
    for k in range(plan.p):
        blk = blocks[k]
        last = blk.dim - 1
        blk.coeffs[s_at[k]] = SymMat(blk.dim, [(last, last, 1.0)])
    for (a, b) in pairs:
        inter = plan.interfaces[(a, b)]
        t = len(inter)
        for k, sign in ((a, 1.0), (b, -1.0)):
            blk = blocks[k]
            last = blk.dim - 1
            loc = [blk.index_map.index(d) for d in inter] + [last]
            for r in range(t + 1):
                for c in range(r, t + 1):
                    i = entry_at[(a, b, r, c)]
                    coeff = SymMat(blk.dim, [(loc[r], loc[c], sign)])
                    if i in blk.coeffs:
                        blk.coeffs[i] = blk.coeffs[i] + coeff
                    else:
                        blk.coeffs[i] = coeff

    pair_set = set(pairs)
    for dofs, quad in cross_points(model, plan):
        for a, b in _redundant_cross_edges(quad, pair_set):
            inter = plan.interfaces[(a, b)]
            t = len(inter)
            pos = sorted(inter.index(d) for d in dofs) + [t]
            for i, r in enumerate(pos):
                for c in pos[i:]:
                    if r == t and c == t:
                        continue  # the corner share is pinned for every pair
                    pins.append(
                        LinearRow(coeffs={entry_at[(a, b, r, c)]: 1.0}, rel="==", rhs=0.0)
                    )

    objective = np.zeros(nv)
    for k in range(plan.p):
        objective[s_at[k]] = 1.0
    lower, upper = _density_bounds(model, nv)
    return SdoProblem(
        var_names=names,
        objective=objective,
        psd_blocks=blocks,
        linear_cons=[_volume_row(model)] + pins,
        lower=lower,
        upper=upper,
        meta={"form": "chordal", "nx": model.cfg.nx, "ny": model.cfg.ny,
              "Nx": plan.Nx, "Ny": plan.Ny, "p": plan.p,
              "cross_policy": cross_policy},
    ).validate()


def build_fictitious(model: FemModel, plan: SubdomainPlan):
    """Two-subdomain compliance problem driven by an interface force vector."""
    if plan.p != 2:
        raise FemError("the interface-force form needs exactly two subdomains")
    interface = plan.interfaces.get((0, 1), ())
    if not interface:
        raise FemError("the two subdomains do not share any dof")
    names = [f"x[{i}]" for i in range(model.m)] + ["gamma1", "gamma2"]
    g0 = len(names)
    names += [f"g[{d}]" for d in interface]
    nv = len(names)

    blocks = _decomposed_base(model, plan)
    for k, gname in ((0, "gamma1"), (1, "gamma2")):
        blk = blocks[k]
        last = blk.dim - 1
        blk.coeffs[model.m + k] = SymMat(blk.dim, [(last, last, 1.0)])
    for j, d in enumerate(interface):
        for k, sign in ((0, 1.0), (1, -1.0)):
            blk = blocks[k]
            pos = blk.index_map.index(d)
            blk.coeffs[g0 + j] = SymMat(blk.dim, [(pos, blk.dim - 1, sign)])

    objective = np.zeros(nv)
    objective[model.m] = 1.0
    objective[model.m + 1] = 1.0
    lower, upper = _density_bounds(model, nv)
    return SdoProblem(
        var_names=names,
        objective=objective,
        psd_blocks=blocks,
        linear_cons=[_volume_row(model)],
        lower=lower,
        upper=upper,
        meta={"form": "fictitious", "nx": model.cfg.nx, "ny": model.cfg.ny,
              "Nx": plan.Nx, "Ny": plan.Ny, "p": 2},
    ).validate()


def global_affine(prob: SdoProblem, n_global):
    """Scatter every block to a shared global frame and sum the affine maps.

    Returns (constant, {var: coefficient}) as dense (n_global+1)-sized
    matrices; requires every block to carry an index_map.  Used to check the
    structural identity "sum of decomposed blocks = original block".
    """
    size = n_global + 1
    const = np.zeros((size, size))
    coeffs = {}
    for blk in prob.psd_blocks:
        if blk.index_map is None:
            raise SdpError("block without an index map cannot be scattered")
        gmap = np.asarray(blk.index_map)
        for (i, j), v in blk.const.entries.items():
            gi, gj = gmap[i], gmap[j]
            const[gi, gj] += v
            if gi != gj:
                const[gj, gi] += v
        for var, coeff in blk.coeffs.items():
            tgt = coeffs.setdefault(var, np.zeros((size, size)))
            for (i, j), v in coeff.entries.items():
                gi, gj = gmap[i], gmap[j]
                tgt[gi, gj] += v
                if gi != gj:
                    tgt[gj, gi] += v
    return const, coeffs


def arrow_feasible_point(model: FemModel, plan: SubdomainPlan, prob: SdoProblem, x):
    """Feasible completion of the arrow problem from an equilibrium solve.

    Solves K(x) u = f, distributes each subdomain's residual force over the
    problem's coupling pairs (smallest second index first), and sets every
    gamma_k to its subdomain compliance.  The returned assignment is feasible
    with objective f'u.
    """
    from .fem import assemble_dense, subdomain_stiffness

    x = np.asarray(x, dtype=float)
    K = assemble_dense(model, x)
    u = np.linalg.solve(K, model.f)
    f_parts = subdomain_loads(model, plan)
    pairs = [
        tuple(int(t) for t in name.split("[")[1].rstrip("]").split(","))
        for name in prob.var_names
        if name.startswith("g[") and name.count("[") == 2
    ]
    pairs = sorted(set(pairs))
    pair_sets = {pr: set(plan.interfaces[pr]) for pr in pairs}

    v = np.zeros(prob.n_vars)
    v[: model.m] = x
    K_parts = [subdomain_stiffness(model, plan, k, x).to_dense() for k in range(plan.p)]
    g = {pr: np.zeros(model.n) for pr in pairs}
    for k in range(plan.p - 1):
        resid = K_parts[k] @ u - f_parts[k]
        for l in range(k):
            if (l, k) in g:
                resid += g[(l, k)]
        for d in np.nonzero(np.abs(resid) > 1e-11 * max(1.0, np.abs(model.f).max()))[0]:
            target = None
            for l in range(k + 1, plan.p):
                if (k, l) in pair_sets and d in pair_sets[(k, l)]:
                    target = l
                    break
            if target is None:
                raise SdpError(f"residual at dof {d} has no coupling pair to carry it")
            g[(k, target)][d] += resid[d]
    for (a, b) in pairs:
        for d in plan.interfaces[(a, b)]:
            v[prob.var_index(f"g[{a},{b}][{d}]")] = g[(a, b)][d]
    for k in range(plan.p):
        v[prob.var_index(f"gamma[{k}]")] = float(u @ (K_parts[k] @ u))
    return v, u


# --- conic normalization and SDPA files ------------------------------------


@dataclass
class ConicForm:
    """Pure conic data: PSD blocks plus one nonnegative diagonal block."""

    c: np.ndarray
    active: list                # positions into the original variable vector
    pinned: dict                # original index -> fixed value
    blocks: list                # (dim, const SymMat, {active_idx: SymMat})
    diag_const: np.ndarray
    diag_B: sp.csr_matrix       # diag value = diag_const + diag_B @ v_active
    diag_labels: list

    @property
    def n_active(self):
        return len(self.active)

    def expand(self, v_active):
        full = np.zeros(len(self.c_full))
        full[self.active] = v_active
        for i, val in self.pinned.items():
            full[i] = val
        return full


def conic_form(prob: SdoProblem):
    """Normalize to conic form: pins eliminated, bounds and rows as diagonals."""
    nv = prob.n_vars
    pinned = {}
    rows = []
    for row in prob.linear_cons:
        if row.rel == "==":
            if len(row.coeffs) != 1:
                raise SdpError("only single-variable equality rows are supported")
            (i, a), = row.coeffs.items()
            if a == 0.0:
                raise SdpError("degenerate equality row")
            if i in pinned and pinned[i] != row.rhs / a:
                raise SdpError(f"conflicting pins for variable {i}")
            pinned[i] = row.rhs / a
        else:
            rows.append(row)
    active = [i for i in range(nv) if i not in pinned]
    active_pos = {i: k for k, i in enumerate(active)}

    blocks = []
    for blk in prob.psd_blocks:
        const = blk.const.copy()
        coeffs = {}
        for i, coeff in blk.coeffs.items():
            if i in pinned:
                if pinned[i] != 0.0:
                    const = const + coeff.scaled(pinned[i])
            else:
                coeffs[active_pos[i]] = coeff
        blocks.append((blk.dim, const, coeffs))

    diag_const = []
    diag_rows = []
    diag_cols = []
    diag_vals = []
    diag_labels = []

    def add_entry(c0, coeffs, label):
        pos = len(diag_const)
        diag_const.append(c0)
        for i, a in coeffs.items():
            diag_rows.append(pos)
            diag_cols.append(i)
            diag_vals.append(a)
        diag_labels.append(label)

    for i in active:
        lo, hi = prob.lower[i], prob.upper[i]
        if np.isfinite(lo):
            add_entry(-lo, {active_pos[i]: 1.0}, f"lb:{prob.var_names[i]}")
        if np.isfinite(hi):
            add_entry(hi, {active_pos[i]: -1.0}, f"ub:{prob.var_names[i]}")
    for r, row in enumerate(rows):
        shift = sum(a * pinned[i] for i, a in row.coeffs.items() if i in pinned)
        live = {active_pos[i]: a for i, a in row.coeffs.items() if i not in pinned}
        if row.rel == "<=":
            add_entry(row.rhs - shift, {i: -a for i, a in live.items()}, f"row{r}")
        else:
            add_entry(-(row.rhs - shift), live, f"row{r}")

    c = prob.objective[active]
    form = ConicForm(
        c=c,
        active=active,
        pinned=pinned,
        blocks=blocks,
        diag_const=np.asarray(diag_const, dtype=float),
        diag_B=sp.csr_matrix(
            (diag_vals, (diag_rows, diag_cols)), shape=(len(diag_const), len(active))
        ),
        diag_labels=diag_labels,
    )
    form.c_full = prob.objective
    return form


def export_sdpa(prob: SdoProblem, path):
    """Write SDPA sparse format (.dat-s); diagonal part goes in one block.

    The file encodes min c'x with sum_j x_j F_j - F0 PSD per block, so the
    constant of each affine block is written negated.
    """
    form = conic_form(prob)
    nblocks = len(form.blocks) + (1 if len(form.diag_const) else 0)
    sizes = [dim for dim, _, _ in form.blocks]
    lines = [str(form.n_active), str(nblocks)]
    size_tokens = [str(s) for s in sizes]
    if len(form.diag_const):
        size_tokens.append(str(-len(form.diag_const)))
    lines.append(" ".join(size_tokens))
    lines.append(" ".join(f"{v:.17g}" for v in form.c))

    def emit(matno, blkno, i, j, val):
        if val != 0.0:
            lines.append(f"{matno} {blkno} {i + 1} {j + 1} {val:.17g}")

    for b, (dim, const, coeffs) in enumerate(form.blocks):
        for i, j, v in const.triplets():
            emit(0, b + 1, i, j, -v)
    if len(form.diag_const):
        dblk = len(form.blocks) + 1
        for pos, v in enumerate(form.diag_const):
            emit(0, dblk, pos, pos, -v)
    for b, (dim, const, coeffs) in enumerate(form.blocks):
        for k in sorted(coeffs):
            for i, j, v in coeffs[k].triplets():
                emit(k + 1, b + 1, i, j, v)
    if len(form.diag_const):
        dblk = len(form.blocks) + 1
        coo = form.diag_B.tocoo()
        order = np.lexsort((coo.row, coo.col))
        for t in order:
            emit(int(coo.col[t]) + 1, dblk, int(coo.row[t]), int(coo.row[t]),
                 float(coo.data[t]))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def import_sdpa(path):
    """Read an SDPA sparse file back into an SdoProblem.

    PSD blocks become affine blocks; every diagonal position becomes one
    linear row "coeffs'v >= -const", so export(import(f)) reproduces f.
    """
    with open(path) as fh:
        raw = [ln.strip() for ln in fh if ln.strip() and not ln.lstrip().startswith(("*", '"'))]
    nv = int(raw[0])
    nblocks = int(raw[1])
    sizes = [int(t) for t in raw[2].replace(",", " ").replace("{", " ").replace("}", " ").split()]
    if len(sizes) != nblocks:
        raise SdpError(f"{path}: block size line does not match the block count")
    c = np.array([float(t) for t in raw[3].split()])
    if c.shape != (nv,):
        raise SdpError(f"{path}: objective length mismatch")

    names = [f"v[{i}]" for i in range(nv)]
    psd_ids = [b for b, s in enumerate(sizes) if s > 0]
    blocks = {b: AffineBlock(dim=sizes[b], const=SymMat(sizes[b]), coeffs={})
              for b in psd_ids}
    diag = {b: ({}, {}) for b, s in enumerate(sizes) if s < 0}  # pos->const, pos->{var: a}

    for line in raw[4:]:
        mat, blk, i, j, val = line.split()
        mat, blk, i, j, val = int(mat), int(blk) - 1, int(i) - 1, int(j) - 1, float(val)
        if blk in blocks:
            target = blocks[blk]
            if mat == 0:
                target.const._add(i, j, -val)
            else:
                target.coeffs.setdefault(mat - 1, SymMat(target.dim))._add(i, j, val)
        elif blk in diag:
            if i != j:
                raise SdpError(f"{path}: off-diagonal entry in a diagonal block")
            consts, rows = diag[blk]
            if mat == 0:
                consts[i] = consts.get(i, 0.0) - val
            else:
                rows.setdefault(i, {})[mat - 1] = val
        else:
            raise SdpError(f"{path}: entry for unknown block {blk + 1}")

    linear = []
    for b in sorted(diag):
        consts, rows = diag[b]
        for pos in range(-sizes[b]):
            c0 = consts.get(pos, 0.0)
            coeffs = rows.get(pos, {})
            linear.append(LinearRow(coeffs=coeffs, rel=">=", rhs=-c0))
    return SdoProblem(
        var_names=names,
        objective=c,
        psd_blocks=[blocks[b] for b in psd_ids],
        linear_cons=linear,
        meta={"form": "imported", "path": str(path)},
    )


def write_count_csv(reports, path):
    """CountReport rows as "form,p,n_vars,max_block,n_blocks" with a header."""
    lines = ["form,p,n_vars,max_block,n_blocks"]
    for form, p, rep in reports:
        lines.append(rep.csv_row(form, p))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")

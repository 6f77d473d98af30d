"""Element systems and global DPG normal equations.

Per element the method computes the scaled test-space Gram matrix G
(111 x 111), the trial-to-test matrix Bmat, and the load vector l, then
condenses the optimal test functions into the normal equations
A_T = Bmat' G^-1 Bmat, rhs_T = Bmat' G^-1 l.  Scatter-adding the element
contributions over the global dof numbering yields a sparse SPD system
on the free dofs.

Test space per element (broken): v in [P3]^2, z in P3, T in sym P3,
S in sym P4, Q in skew P2; 111 dofs with the block offsets below.
Symmetric tensor blocks use the orthonormal frames (E11, E12s, E22)
with E12s = offdiag/sqrt(2); the skew block uses [[0,1],[-1,0]]/sqrt(2).

Trial space per element: piecewise constant fields
(u1, u2, w, N11, N12, N21, N22, M11, M12, M22) followed by the local
trace dofs in the order of `TraceDofMap.element_columns`.  Global dofs:
traces first, then 10 field dofs per element.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse

from .model import apply_Cinv, eval_loads
from .polyquad import (
    map_gradients,
    map_hessians,
    map_points,
    triangle_basis,
    triangle_geometry,
    triangle_rule,
)
from .traces import TraceDofMap, apply_bc, edge_pairings

N_TEST = 111
OFF_V, OFF_Z, OFF_T, OFF_S, OFF_Q = 0, 20, 30, 60, 105
QUAD_DEGREE = 8
N_FIELD = 10
_SQ2 = np.sqrt(2.0)

# symmetric frames as full matrices, and the skew frame
FRAMES_SYM = np.array(
    [
        [[1.0, 0.0], [0.0, 0.0]],
        [[0.0, 1.0 / _SQ2], [1.0 / _SQ2, 0.0]],
        [[0.0, 0.0], [0.0, 1.0]],
    ]
)
FRAME_SKEW = np.array([[0.0, 1.0 / _SQ2], [-1.0 / _SQ2, 0.0]])
# M field directions M11, M12, M22
DIR_M = np.array(
    [
        [[1.0, 0.0], [0.0, 0.0]],
        [[0.0, 1.0], [1.0, 0.0]],
        [[0.0, 0.0], [0.0, 1.0]],
    ]
)


class AssemblyError(Exception):
    pass


def _div_from_grads(g):
    """Row-wise divergence of psi*frame for all frames; (..., dim, 3, 2)."""
    gx, gy = g[..., 0], g[..., 1]
    out = np.zeros(g.shape[:-1] + (3, 2))
    out[..., 0, 0] = gx
    out[..., 1, 0] = gy / _SQ2
    out[..., 1, 1] = gx / _SQ2
    out[..., 2, 1] = gy
    return out


def _divdiv_from_hess(h):
    """div div of psi*frame for all frames; (..., dim, 3)."""
    return np.stack(
        [h[..., 0, 0], _SQ2 * h[..., 0, 1], h[..., 1, 1]], axis=-1
    )


def _b_coeffs(B):
    """B : frame for the three symmetric frames."""
    return np.array([B[0, 0], _SQ2 * B[0, 1], B[1, 1]])


def element_gram_batch(mesh, problem, els):
    """Gram matrices (nel, 111, 111) of the scaled test inner product."""
    if problem.d <= 0.0 or problem.D <= 0.0:
        raise ValueError("thickness and scaling length must be positive")
    coords = mesh.triangle_coords(els)
    _, detJ, Jinv = triangle_geometry(coords)
    rule = triangle_rule(QUAD_DEGREE)
    b2, b3, b4 = triangle_basis(2), triangle_basis(3), triangle_basis(4)
    nel = len(detJ)
    wd = rule.weights[None, :] * detJ[:, None]

    v3 = b3.eval(rule.points)
    g3 = map_gradients(b3.grad(rule.points), Jinv)
    h3 = map_hessians(b3.hess(rule.points), Jinv)
    h4 = map_hessians(b4.hess(rule.points), Jinv)

    d, D, cQ = problem.d, problem.D, problem.c_Q
    Cd = problem.C_disp
    B = problem.B
    bf = _b_coeffs(B)

    G = np.zeros((nel, N_TEST, N_TEST))

    # value terms: the reference basis is orthonormal, element mass = detJ I
    i10 = np.arange(10)
    C2 = Cd @ Cd
    for c in range(2):
        for cc in range(2):
            G[:, OFF_V + 2 * i10 + c, OFF_V + 2 * i10 + cc] += (
                C2[c, cc] / D**2
            ) * detJ[:, None]
    zidx = OFF_Z + i10
    G[:, zidx, zidx] += (d * d / D**4 + np.sum(B * B)) * detJ[:, None]
    tidx = OFF_T + np.arange(30)
    G[:, tidx, tidx] += detJ[:, None]
    sidx = OFF_S + np.arange(45)
    G[:, sidx, sidx] += detJ[:, None] / d**2
    # |grad v - B z + Q|^2 contributes |Q|^2 on top of the weighted term
    qidx = OFF_Q + np.arange(6)
    G[:, qidx, qidx] += (1.0 + cQ) * detJ[:, None]

    # |grad v - B z + Q|^2, gradient parts
    K3 = np.einsum("eq,eqia,eqja->eij", wd, g3, g3)
    for c in range(2):
        G[:, (OFF_V + 2 * i10 + c)[:, None], OFF_V + 2 * i10[None, :] + c] += K3
    Bg = np.einsum("ab,eqib->eqia", B, g3)
    M_vz = np.einsum("eq,eqic,qj->eicj", wd, Bg, v3)
    for c in range(2):
        blk = M_vz[:, :, c, :]
        G[:, (OFF_V + 2 * i10 + c)[:, None], OFF_Z + i10[None, :]] -= blk
        G[:, (OFF_Z + i10)[:, None], OFF_V + 2 * i10[None, :] + c] -= blk.transpose(
            0, 2, 1
        )
    v2 = b2.eval(rule.points)
    Wg = np.stack([g3[..., 1], -g3[..., 0]], axis=-1) / _SQ2
    M_vq = np.einsum("eq,eqic,qm->eicm", wd, Wg, v2)
    for c in range(2):
        blk = M_vq[:, :, c, :]
        G[:, (OFF_V + 2 * i10 + c)[:, None], OFF_Q + np.arange(6)[None, :]] += blk
        G[
            :, (OFF_Q + np.arange(6))[:, None], OFF_V + 2 * i10[None, :] + c
        ] += blk.transpose(0, 2, 1)

    # d^2 |eps grad z|^2
    G[:, (OFF_Z + i10)[:, None], OFF_Z + i10[None, :]] += (d * d) * np.einsum(
        "eq,eqiab,eqjab->eij", wd, h3, h3
    )

    # D^2 |C_disp^-1 div T|^2
    divT = _div_from_grads(g3).reshape(nel, len(rule.weights), 30, 2)
    Cinv = np.linalg.inv(Cd)
    CdivT = np.einsum("ab,eqRb->eqRa", Cinv, divT)
    G[:, OFF_T : OFF_T + 30, OFF_T : OFF_T + 30] += (D * D) * np.einsum(
        "eq,eqRa,eqPa->eRP", wd, CdivT, CdivT
    )

    # d^-2 D^4 |divdiv S - B:T|^2
    ddS = _divdiv_from_hess(h4).reshape(nel, len(rule.weights), 45)
    fac = D**4 / d**2
    G[:, OFF_S : OFF_S + 45, OFF_S : OFF_S + 45] += fac * np.einsum(
        "eq,eqR,eqP->eRP", wd, ddS, ddS
    )
    cross = np.einsum("eq,eqR,qi->eRi", wd, ddS, v3)
    ST = fac * np.einsum("eRi,f->eRif", cross, bf).reshape(nel, 45, 30)
    G[:, OFF_S : OFF_S + 45, OFF_T : OFF_T + 30] -= ST
    G[:, OFF_T : OFF_T + 30, OFF_S : OFF_S + 45] -= ST.transpose(0, 2, 1)
    bb = np.outer(bf, bf)
    for f in range(3):
        for ff in range(3):
            G[:, OFF_T + 3 * i10 + f, OFF_T + 3 * i10 + ff] += (
                fac * bb[f, ff]
            ) * detJ[:, None]

    # the quadrature einsums are symmetric only up to rounding
    return 0.5 * (G + G.transpose(0, 2, 1))


def element_b_batch(mesh, problem, k, els, pairings=None):
    """Trial-to-test matrices (nel, 111, 10 + ntrace_local)."""
    coords = mesh.triangle_coords(els)
    _, detJ, Jinv = triangle_geometry(coords)
    rule = triangle_rule(QUAD_DEGREE)
    b2, b3, b4 = triangle_basis(2), triangle_basis(3), triangle_basis(4)
    nel = len(detJ)
    wd = rule.weights[None, :] * detJ[:, None]
    nu_cols = 6 + 6 * k
    ncols = N_FIELD + nu_cols + 27

    v2 = b2.eval(rule.points)
    v3 = b3.eval(rule.points)
    v4 = b4.eval(rule.points)
    g3 = map_gradients(b3.grad(rule.points), Jinv)
    h3 = map_hessians(b3.hess(rule.points), Jinv)
    h4 = map_hessians(b4.hess(rule.points), Jinv)

    B = problem.B
    bf = _b_coeffs(B)
    nu = problem.nu
    d = problem.d

    Bmat = np.zeros((nel, N_TEST, ncols))

    IT2 = np.einsum("eq,qm->em", wd, v2)
    IT3 = np.einsum("eq,qi->ei", wd, v3)
    IT4 = np.einsum("eq,qi->ei", wd, v4)
    Ig3 = np.einsum("eq,eqib->eib", wd, g3)
    Ih3 = np.einsum("eq,eqjab->ejab", wd, h3)

    # (u, div T)
    divT = _div_from_grads(g3).reshape(nel, -1, 30, 2)
    IdivT = np.einsum("eq,eqRc->eRc", wd, divT)
    for c in range(2):
        Bmat[:, OFF_T : OFF_T + 30, c] = IdivT[:, :, c]

    # (w, divdiv S - B:T)
    ddS = _divdiv_from_hess(h4).reshape(nel, -1, 45)
    Bmat[:, OFF_S : OFF_S + 45, 2] = np.einsum("eq,eqR->eR", wd, ddS)
    for f in range(3):
        Bmat[:, OFF_T + 3 * np.arange(10) + f, 2] -= bf[f] * IT3

    # (N, C^-1 T + grad v - B z + Q); N columns 3 + 2a + b
    CinvF = apply_Cinv(FRAMES_SYM, nu)
    for a in range(2):
        for b in range(2):
            col = 3 + 2 * a + b
            for f in range(3):
                Bmat[:, OFF_T + 3 * np.arange(10) + f, col] += CinvF[f, a, b] * IT3
            Bmat[:, OFF_V + 2 * np.arange(10) + a, col] += Ig3[:, :, b]
            Bmat[:, OFF_Z + np.arange(10), col] -= B[a, b] * IT3
            Bmat[:, OFF_Q + np.arange(6), col] += FRAME_SKEW[a, b] * IT2

    # (M, 12 d^-2 C^-1 S + eps grad z); M columns 7 + f'
    CM = np.einsum("pab,fab->pf", DIR_M, CinvF)
    for p in range(3):
        col = 7 + p
        for f in range(3):
            Bmat[:, OFF_S + 3 * np.arange(15) + f, col] += (
                12.0 / d**2 * CM[p, f]
            ) * IT4
        Bmat[:, OFF_Z + np.arange(10), col] += np.einsum(
            "ejab,ab->ej", Ih3, DIR_M[p]
        )

    # trace columns, signs of the skeleton duality
    pair = edge_pairings(mesh, k, els) if pairings is None else pairings
    cu = N_FIELD
    cw = cu + nu_cols
    cn = cw + 9
    cm = cn + 6
    Bmat[:, OFF_T : OFF_T + 30, cu:cw] = -pair.u_hat
    Bmat[:, OFF_S : OFF_S + 45, cw:cn] = -pair.w_hat
    Bmat[:, OFF_V : OFF_V + 20, cn:cm] = -pair.N_hat
    Bmat[:, OFF_Z : OFF_Z + 10, cm : cm + 12] = pair.M_hat
    return Bmat


def find_point_element(mesh, point):
    """Vertex index and lowest-index element owning a point-load vertex."""
    dist = np.abs(mesh.vertices - np.asarray(point)).max(axis=1)
    v = int(np.argmin(dist))
    scale = max(abs(float(x)) for x in mesh.rect or (1.0,)) or 1.0
    if dist[v] > 1e-12 * scale:
        raise AssemblyError(f"point load location {tuple(point)} is not a mesh vertex")
    owners = np.nonzero(np.any(mesh.triangles == v, axis=1))[0]
    return v, int(owners[0])


def element_load_batch(mesh, problem, els):
    """Load vectors (nel, 111): (p, v) - (f, z), or the point-load entry."""
    coords = mesh.triangle_coords(els)
    _, detJ, _ = triangle_geometry(coords)
    rule = triangle_rule(QUAD_DEGREE)
    b3 = triangle_basis(3)
    nel = len(detJ)
    l = np.zeros((nel, N_TEST))

    load = problem.point_load
    if load is not None:
        v, t0 = find_point_element(mesh, load.point)
        sel = np.nonzero(np.asarray(els) == t0)[0]
        if sel.size:
            m = int(np.nonzero(mesh.triangles[t0] == v)[0][0])
            ref = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])[m]
            zvals = b3.eval(ref[None, :])[0]
            l[sel[0], OFF_Z : OFF_Z + 10] = -load.weight * zvals
        return l

    wd = rule.weights[None, :] * detJ[:, None]
    v3 = b3.eval(rule.points)
    phys = map_points(coords, rule.points)
    f, p = eval_loads(problem, phys[..., 0], phys[..., 1])
    for c in range(2):
        l[:, OFF_V + 2 * np.arange(10) + c] = np.einsum(
            "eq,qi->ei", wd * p[..., c], v3
        )
    l[:, OFF_Z : OFF_Z + 10] = -np.einsum("eq,qi->ei", wd * f, v3)
    return l


def apply_gram_inverse(G, R):
    """Solve G X = R per element with symmetric diagonal equilibration."""
    diag = np.einsum("eii->ei", G)
    if np.any(diag <= 0.0):
        e = int(np.nonzero(np.any(diag <= 0.0, axis=1))[0][0])
        raise AssemblyError(f"Gram matrix not positive in element slot {e}")
    s = 1.0 / np.sqrt(diag)
    Gs = G * s[:, :, None] * s[:, None, :]
    try:
        X = np.linalg.solve(Gs, s[:, :, None] * R)
    except np.linalg.LinAlgError:
        for e in range(G.shape[0]):
            try:
                np.linalg.solve(Gs[e], R[e])
            except np.linalg.LinAlgError:
                raise AssemblyError(f"singular Gram matrix in element slot {e}")
        raise
    return s[:, :, None] * X


@dataclass
class ElementSystems:
    """Condensed per-element normal equations for estimation and reuse."""

    A: np.ndarray  # (nel, nc, nc)
    rhs: np.ndarray  # (nel, nc)
    c: np.ndarray  # (nel,)   l' G^-1 l
    cols: np.ndarray  # (nel, nc) global dof indices


@dataclass
class NormalEquations:
    A: scipy.sparse.csr_matrix
    rhs: np.ndarray
    dofmap: TraceDofMap
    constrained: np.ndarray
    index_map: np.ndarray
    ndof: int
    elements: ElementSystems
    dof_xy: np.ndarray = None
    problem: object = None

    def expand(self, x):
        """Free-dof solution -> full coefficient vector (zeros on BCs)."""
        full = np.zeros(self.index_map.size)
        free = self.index_map >= 0
        full[free] = x[self.index_map[free]]
        return full

    def fields(self, x):
        """Per-element constant fields (nel, 10) from a free-dof solution."""
        full = self.expand(x)
        nt = self.dofmap.mesh.ntriangles
        return full[self.dofmap.ntrace :].reshape(nt, N_FIELD)


def assemble_normal_equations(mesh, problem, k, chunk=512):
    """Assemble the global DPG normal equations on the free dofs."""
    dofmap = TraceDofMap(mesh, k)
    constrained = apply_bc(dofmap, problem)
    nt = mesh.ntriangles
    ntrace = dofmap.ntrace
    ntotal = ntrace + N_FIELD * nt

    index_map = np.full(ntotal, -1, dtype=int)
    free_trace = np.nonzero(~constrained)[0]
    index_map[free_trace] = np.arange(free_trace.size)
    index_map[ntrace:] = free_trace.size + np.arange(N_FIELD * nt)
    ndof = free_trace.size + N_FIELD * nt

    nc = N_FIELD + dofmap.ncols
    A_el = np.empty((nt, nc, nc))
    rhs_el = np.empty((nt, nc))
    c_el = np.empty(nt)
    cols = np.empty((nt, nc), dtype=int)
    cols[:, :N_FIELD] = ntrace + N_FIELD * np.arange(nt)[:, None] + np.arange(N_FIELD)
    cols[:, N_FIELD:] = dofmap.element_columns

    for lo in range(0, nt, chunk):
        els = np.arange(lo, min(lo + chunk, nt))
        G = element_gram_batch(mesh, problem, els)
        Bm = element_b_batch(mesh, problem, k, els)
        l = element_load_batch(mesh, problem, els)
        try:
            X = apply_gram_inverse(G, np.concatenate([Bm, l[:, :, None]], axis=2))
        except AssemblyError as err:
            raise AssemblyError(f"{err} (elements {lo}..{els[-1]})") from None
        GiB, Gil = X[:, :, :-1], X[:, :, -1]
        At = np.einsum("eri,erj->eij", Bm, GiB)
        A_el[els] = 0.5 * (At + At.transpose(0, 2, 1))
        rhs_el[els] = np.einsum("eri,er->ei", Bm, Gil)
        c_el[els] = np.einsum("er,er->e", l, Gil)

    gcols = index_map[cols]  # (nt, nc), -1 on constrained
    rows = np.broadcast_to(gcols[:, :, None], (nt, nc, nc))
    colsm = np.broadcast_to(gcols[:, None, :], (nt, nc, nc))
    keep = (rows >= 0) & (colsm >= 0)
    A = scipy.sparse.coo_matrix(
        (A_el[keep], (rows[keep].astype(np.int32), colsm[keep].astype(np.int32))),
        shape=(ndof, ndof),
    ).tocsr()
    rhs = np.zeros(ndof)
    keep_r = gcols >= 0
    np.add.at(rhs, gcols[keep_r], rhs_el[keep_r])

    elements = ElementSystems(A_el, rhs_el, c_el, cols)
    dof_xy = _dof_coordinates(mesh, dofmap)[index_map >= 0]
    return NormalEquations(A, rhs, dofmap, constrained, index_map, ndof,
                           elements, dof_xy, problem)


def _dof_coordinates(mesh, dofmap):
    """Location of every dof (vertex, edge midpoint, or centroid).

    Feeds the nested-dissection ordering in the solver.
    """
    verts = mesh.vertices
    emid = verts[mesh.edges].mean(axis=1)
    cent = mesh.triangle_coords().mean(axis=1)
    xy = np.empty((dofmap.ntrace + N_FIELD * mesh.ntriangles, 2))
    xy[dofmap.off_uhat:dofmap.off_what] = np.repeat(verts, 2, axis=0)
    xy[dofmap.off_what:dofmap.off_ubub] = np.repeat(verts, 3, axis=0)
    for lo, hi in ((dofmap.off_ubub, dofmap.off_Nhat),
                   (dofmap.off_Nhat, dofmap.off_Mhat),
                   (dofmap.off_Mhat, dofmap.ntrace)):
        if hi > lo:
            xy[lo:hi] = np.repeat(emid, (hi - lo) // mesh.nedges, axis=0)
    xy[dofmap.ntrace:] = np.repeat(cent, N_FIELD, axis=0)
    return xy


def element_gram(mesh, problem, element=0):
    return element_gram_batch(mesh, problem, np.array([element]))[0]


def element_b(mesh, problem, k, element=0):
    return element_b_batch(mesh, problem, k, np.array([element]))[0]


def element_load(mesh, problem, element=0):
    return element_load_batch(mesh, problem, np.array([element]))[0]


def write_element_triplets(path, G, Bmat, l):
    """Plain-text dump of one element system for debugging."""
    with open(path, "w") as fh:
        fh.write(f"# gram {G.shape[0]}x{G.shape[1]}\n")
        for i, j in zip(*np.nonzero(G)):
            fh.write(f"G {i} {j} {G[i, j]:.17e}\n")
        fh.write(f"# b {Bmat.shape[0]}x{Bmat.shape[1]}\n")
        for i, j in zip(*np.nonzero(Bmat)):
            fh.write(f"B {i} {j} {Bmat[i, j]:.17e}\n")
        fh.write("# load\n")
        for i in np.nonzero(l)[0]:
            fh.write(f"l {i} {l[i]:.17e}\n")

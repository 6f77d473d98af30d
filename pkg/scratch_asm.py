import numpy as np
from shelldpg.mesh import initial_rectangle_mesh, refine
from shelldpg.model import ShellProblem, apply_C
from shelldpg.traces import TraceDofMap
from shelldpg import assembly as asm

rng = np.random.default_rng(7)
rect = (0.0, 1.3, 0.0, 1.0)
mesh = refine(initial_rectangle_mesh(rect), np.arange(4))
mesh = refine(mesh, rng.choice(mesh.ntriangles, 5, replace=False))
print("mesh:", mesh.ntriangles, "tris")

B = np.array([[0.3, 0.1], [0.1, -0.2]])
d, nu = 0.7, 0.3
a = np.array([0.37, -0.81])
w0 = 1.234
N = w0 * apply_C(B, nu)
fval = float(np.sum(B * N))

prob = ShellProblem(
    rect=rect, B=B, d=d, nu=nu,
    f=lambda x, y: np.full(np.broadcast(x, y).shape, fval),
    p=None, bc={},
)

for k in (0, 1):
    dm = TraceDofMap(mesh, k)
    nt = mesh.ntriangles
    # exact global trace vector
    tv = np.zeros(dm.ntrace)
    for vtx in range(mesh.nvertices):
        tv[dm.off_uhat + 2 * vtx : dm.off_uhat + 2 * vtx + 2] = a
        tv[dm.off_what + 3 * vtx] = w0
    for e in range(mesh.nedges):
        tv[dm.off_Nhat + 2 * e : dm.off_Nhat + 2 * e + 2] = N @ mesh.edge_normals[e]
    els = np.arange(nt)
    Bm = asm.element_b_batch(mesh, prob, k, els)
    l = asm.element_load_batch(mesh, prob, els)
    uloc = np.zeros((nt, 10 + dm.ncols))
    uloc[:, 0], uloc[:, 1], uloc[:, 2] = a[0], a[1], w0
    uloc[:, 3], uloc[:, 4] = N[0, 0], N[0, 1]
    uloc[:, 5], uloc[:, 6] = N[1, 0], N[1, 1]
    uloc[:, 10:] = tv[dm.element_columns]
    res = np.einsum("erc,ec->er", Bm, uloc) - l
    scale = np.abs(Bm).sum(axis=2).max() * max(np.abs(uloc).max(), 1.0)
    print(f"k={k}: identity residual {np.abs(res).max():.3e}  scale {scale:.2e}")

# Gram sanity: SPD + constant T = I energy
from shelldpg.polyquad import triangle_geometry
probB0 = ShellProblem(rect=rect, B=np.zeros((2, 2)), d=1.0, nu=0.0, f=None, p=None, bc={})
G = asm.element_gram_batch(mesh, probB0, np.arange(mesh.ntriangles))
ev = np.linalg.eigvalsh(G)
print("gram eig range:", ev.min(), ev.max())
x = np.zeros(asm.N_TEST)
x[asm.OFF_T + 0] = 1 / np.sqrt(2)
x[asm.OFF_T + 2] = 1 / np.sqrt(2)
_, detJ, _ = triangle_geometry(mesh.triangle_coords())
print("T=I energy vs 2*area:", np.abs(np.einsum("i,eij,j->e", x, G, x) - detJ).max())

# normal equations smoke
neq = asm.assemble_normal_equations(mesh, prob, 0)
print("ndof:", neq.ndof, "nnz:", neq.A.nnz)
asym = np.abs(neq.A - neq.A.T).max()
print("A asymmetry:", asym, "max|A|:", np.abs(neq.A.toarray()).max())
evg = np.linalg.eigvalsh(neq.A.toarray())
print("global eig range:", evg.min(), evg.max())

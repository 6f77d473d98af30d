"""Built-in residual estimator and the adaptive refinement loop.

The element estimator is the discrete dual norm of the element
residual, eta(T)^2 = r' G^-1 r with r = l - B u_T.  The condensed
algebra c_T - 2 u_T . rhs_T + u_T . A_T u_T is the same quantity on
paper but subtracts numbers of size c_T; once the residual is a few
orders below sqrt(c_T) the difference is pure roundoff (the scaled
norms make c_T large for thin shells).  Forming r explicitly keeps the
relative accuracy of the quadratic form at the cost of re-building the
element systems once per estimate.
"""

from dataclasses import dataclass, field

import numpy as np

from .assembly import (
    assemble_normal_equations,
    element_b_batch,
    element_gram_batch,
    element_load_batch,
)
from .mesh import dorfler_mark, initial_rectangle_mesh, refine
from .solver import solve_spd


def _clamped(eta2, scale, tol=1e-14):
    """Round tiny negative squares to zero, refuse real negatives."""
    floor = -tol * np.maximum(scale, 1.0)
    assert np.all(eta2 >= floor), (
        f"negative estimator square {eta2.min():.3e} beyond rounding floor"
    )
    return np.sqrt(np.maximum(eta2, 0.0))


def element_estimator(element_system, local_solution):
    """Estimator of a single element from its condensed system."""
    A, rhs, c = element_system
    u = np.asarray(local_solution, dtype=float)
    quad = float(u @ A @ u)
    lin = 2.0 * float(u @ rhs)
    eta2 = np.array([c - lin + quad])
    scale = np.array([abs(c) + abs(lin) + abs(quad)])
    return float(_clamped(eta2, scale)[0])


def element_estimators(neq, x, chunk=512):
    """All element estimators for a free-dof solution vector."""
    mesh, prob, k = neq.dofmap.mesh, neq.problem, neq.dofmap.k
    full = neq.expand(x)
    uloc = full[neq.elements.cols]
    nt = mesh.ntriangles
    eta2 = np.empty(nt)
    scale = np.empty(nt)
    for lo in range(0, nt, chunk):
        els = np.arange(lo, min(lo + chunk, nt))
        G = element_gram_batch(mesh, prob, els)
        B = element_b_batch(mesh, prob, k, els)
        l = element_load_batch(mesh, prob, els)
        r = l - np.einsum("eij,ej->ei", B, uloc[els])
        y = np.linalg.solve(G, r[..., None])[..., 0]
        eta2[els] = np.einsum("ei,ei->e", r, y)
        scale[els] = np.einsum("ei,ei->e", np.abs(r), np.abs(y))
    # the Gram solve leaves roundoff of order eps kappa(G) per element
    return _clamped(eta2, scale, tol=1e-6)


@dataclass
class AdaptiveConfig:
    k: int = 0
    theta: float = 0.25
    mode: str = "adaptive"
    max_dofs: int = 30000
    max_levels: int = 25
    tol: float = 1e-10

    def __post_init__(self):
        if self.k not in (0, 1):
            raise ValueError(f"polynomial degree k must be 0 or 1, got {self.k}")
        if self.mode not in ("adaptive", "uniform"):
            raise ValueError(f"unknown refinement mode {self.mode!r}")
        if not 0.0 < self.theta <= 1.0:
            raise ValueError("marking fraction theta must lie in (0, 1]")
        if self.max_levels < 0 or self.max_dofs <= 0:
            raise ValueError("budgets must be nonnegative / positive")


@dataclass
class LevelRecord:
    level: int
    mesh: object
    nelems: int
    ndof: int
    eta: float
    etas: np.ndarray
    x: np.ndarray
    fields: np.ndarray
    extras: dict = field(default_factory=dict)
    marked: np.ndarray = None


@dataclass
class AdaptiveRun:
    config: AdaptiveConfig
    levels: list


def adaptive_loop(problem, config=None, evaluator=None, initial_mesh=None):
    """Solve-estimate-mark-refine until the dof or level budget is hit.

    `evaluator(problem, mesh, fields)`, if given, returns a dict of
    extra per-level columns (reference errors, benchmark functionals).
    `max_levels = 0` does a single solve without refinement.
    """
    cfg = config if config is not None else AdaptiveConfig()
    mesh = initial_mesh
    if mesh is None:
        if problem.rect is None:
            raise ValueError("problem has no rectangle; pass initial_mesh")
        mesh = initial_rectangle_mesh(problem.rect)

    levels = []
    level = 0
    while True:
        neq = assemble_normal_equations(mesh, problem, cfg.k)
        x = solve_spd(neq.A, neq.rhs, cfg.tol, coords=neq.dof_xy)
        etas = element_estimators(neq, x)
        rec = LevelRecord(
            level=level,
            mesh=mesh,
            nelems=mesh.ntriangles,
            ndof=neq.ndof,
            eta=float(np.sqrt(np.sum(etas**2))),
            etas=etas,
            x=x,
            fields=neq.fields(x),
        )
        if evaluator is not None:
            rec.extras = dict(evaluator(problem, mesh, rec.fields))
        levels.append(rec)
        if level >= cfg.max_levels or neq.ndof >= cfg.max_dofs:
            break
        if cfg.mode == "uniform":
            marked = np.arange(mesh.ntriangles)
        else:
            marked = dorfler_mark(etas, cfg.theta)
        rec.marked = marked
        mesh = refine(mesh, marked)
        level += 1

    for prev, cur in zip(levels, levels[1:]):
        assert cur.ndof > prev.ndof, "dof count must grow across levels"
    return AdaptiveRun(config=cfg, levels=levels)

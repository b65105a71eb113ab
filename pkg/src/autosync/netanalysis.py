"""Drive/response lattice viewed as a switching network of 2-D oscillators.

Vertices are the 2N pixels of the drive image (row-major) followed by the
N pixels of the response image.  A network state is an ``(2N, 2)`` array of
``(P, Z)`` pairs; flattened row-major this is the Kronecker ordering, so
``(L kron B) vec(U) == vec(L @ U @ B.T)``.

Sign convention: ``L1`` is a graph Laplacian (``D - A``, nonnegative
diagonal), so diffusion enters as ``-sigma1 * L1``.  ``L2`` carries the
drive-minus-response coupling literally and enters with ``+sigma2``.
"""
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator

from .ecology import DriveParams, drive_step
from .field import GridSpec
from .observer import ObserverConfig, ObserverState, response_step_occluded
from .occlusion import as_mask

__all__ = [
    "CouplingMatrices",
    "ExpectedLaplacian",
    "NetOperator",
    "TransverseBasis",
    "DriveResponseBasis",
    "build_L1",
    "build_L2",
    "grid_laplacian",
    "reaction_jacobian",
    "reaction_terms",
    "assemble_linearized",
    "expected_laplacian",
    "transverse_stability",
    "network_rhs",
    "verify_network_equivalence",
]


def grid_laplacian(nx, ny):
    """Unit-weight graph Laplacian of the 4-neighbour lattice (row-major)."""
    n = nx * ny
    idx = np.arange(n).reshape(ny, nx)
    rows = np.concatenate([idx[:, :-1].ravel(), idx[:-1, :].ravel()])
    cols = np.concatenate([idx[:, 1:].ravel(), idx[1:, :].ravel()])
    ones = np.ones(rows.size)
    A = sp.coo_matrix((np.concatenate([ones, ones]),
                       (np.concatenate([rows, cols]), np.concatenate([cols, rows]))), shape=(n, n))
    A = A.tocsr()
    deg = np.asarray(A.sum(axis=1)).ravel()
    return (sp.diags(deg) - A).tocsr()


def build_L1(grid):
    """Diffusion Laplacian for both images (block diagonal, 2N x 2N).

    Boundary cells have fewer neighbours, which is exactly the zero-flux
    stencil: ``-(1/dx**2) * L1`` applied to one image is the discrete
    Laplacian.
    """
    Lg = grid_laplacian(grid.nx, grid.ny)
    return sp.block_diag([Lg, Lg], format="csr")


def build_L2(mask):
    """Switching drive-to-response coupling Laplacian for one cloud mask.

    Response row ``N + q`` reads ``+1`` at drive column ``q`` and ``-1`` on
    its own diagonal when cell ``q`` is visible, and is empty under cloud.
    """
    visible = ~as_mask(mask).ravel()
    n = visible.size
    q = np.flatnonzero(visible)
    rows = np.concatenate([n + q, n + q])
    cols = np.concatenate([q, n + q])
    vals = np.concatenate([np.ones(q.size), -np.ones(q.size)])
    return sp.csr_matrix((vals, (rows, cols)), shape=(2 * n, 2 * n))


@dataclass(frozen=True)
class CouplingMatrices:
    sigma1: float
    sigma2: float
    B1: np.ndarray = field(default_factory=lambda: np.eye(2))
    B2: np.ndarray = field(default_factory=lambda: np.array([[1.0, 0.0], [0.0, 0.0]]))

    @classmethod
    def for_grid(cls, grid, kappa):
        return cls(sigma1=1.0 / grid.dx**2, sigma2=float(kappa))


def reaction_terms(P, Z, k, m, h):
    """Local plankton reaction rates ``(dP, dZ)`` without diffusion."""
    graze = P * Z / (P + h)
    return P * (1.0 - P) - graze, k * graze - m * Z


def reaction_jacobian(P, Z, k=2.0, m=0.6, h=0.4, mode="analytic"):
    """Jacobian of the local reaction terms, shape ``(..., 2, 2)``.

    ``mode="analytic"`` differentiates the reaction terms exactly.
    ``mode="paper-literal"`` reproduces the published matrix, whose first
    column lacks the factor ``Z`` in the grazing derivative.
    """
    P, Z, k, m = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (P, Z, k, m)))
    denom = P + h
    if np.any(denom == 0):
        raise ValueError("reaction Jacobian is singular at P = -h")
    if mode == "analytic":
        zfac = Z
    elif mode == "paper-literal":
        zfac = np.ones_like(Z)
    else:
        raise ValueError(f"unknown Jacobian mode {mode!r}")
    J = np.empty(P.shape + (2, 2))
    J[..., 0, 0] = 1.0 - 2.0 * P - zfac * h / denom**2
    J[..., 0, 1] = -P / denom
    J[..., 1, 0] = k * h * zfac / denom**2
    J[..., 1, 1] = k * P / denom - m
    return J


class NetOperator(LinearOperator):
    """``F + sigma2 * kron(L2, B2) - sigma1 * kron(L1, B1)`` as a matrix-free operator.

    ``F`` is block diagonal with one 2x2 Jacobian per vertex.
    """

    def __init__(self, J, L1, L2, coupling):
        J = np.asarray(J, dtype=float)
        n = J.shape[0]
        if J.shape != (n, 2, 2):
            raise ValueError(f"expected per-vertex Jacobians of shape (2N, 2, 2), got {J.shape}")
        for name, L in (("L1", L1), ("L2", L2)):
            if L.shape != (n, n):
                raise ValueError(f"{name} has shape {L.shape}, expected {(n, n)}")
        self.J = J
        self.L1 = sp.csr_matrix(L1)
        self.L2 = sp.csr_matrix(L2)
        self.coupling = coupling
        super().__init__(dtype=np.float64, shape=(2 * n, 2 * n))

    @property
    def n_vertices(self):
        return self.J.shape[0]

    def apply(self, U):
        """Action on a network state of shape ``(2N, 2)``."""
        c = self.coupling
        out = np.einsum("nij,nj->ni", self.J, U)
        if c.sigma1:
            out -= c.sigma1 * (self.L1 @ U) @ c.B1.T
        if c.sigma2:
            out += c.sigma2 * (self.L2 @ U) @ c.B2.T
        return out

    def _matvec(self, x):
        x = np.asarray(x, dtype=float)
        return self.apply(x.reshape(-1, 2)).reshape(x.shape)

    def _matmat(self, X):
        return np.column_stack([self._matvec(col) for col in np.asarray(X).T])

    def to_sparse(self):
        c = self.coupling
        F = sp.block_diag(list(self.J), format="csr")
        return (F - c.sigma1 * sp.kron(self.L1, c.B1) + c.sigma2 * sp.kron(self.L2, c.B2)).tocsr()


def assemble_linearized(state, L1, L2, coupling, params=None, mode="analytic"):
    """Linearization about the synchronized state (response equals drive).

    ``state`` is a drive state; every vertex in both images gets the
    Jacobian of its own cell.
    """
    params = params or DriveParams()
    shape = np.shape(state.P)
    k = np.broadcast_to(np.asarray(params.k, dtype=float), shape)
    m = np.broadcast_to(np.asarray(params.m, dtype=float), shape)
    J = reaction_jacobian(state.P, state.Z, k, m, params.h, mode).reshape(-1, 2, 2)
    return NetOperator(np.concatenate([J, J]), L1, L2, coupling)


@dataclass(frozen=True)
class ExpectedLaplacian:
    L: sp.csr_matrix
    p: np.ndarray
    samples: int

    @property
    def coupling_weight(self):
        """Per-cell fraction of time the response is driven."""
        n = self.p.size
        return -self.L.diagonal()[n:].reshape(self.p.shape)


def expected_laplacian(masks):
    """Sample mean of the switching coupling Laplacian over cloud masks."""
    masks = [as_mask(m) for m in masks]
    if not masks:
        raise ValueError("need at least one mask sample")
    total = build_L2(masks[0])
    for m in masks[1:]:
        total = total + build_L2(m)
    hidden = np.mean(masks, axis=0)
    return ExpectedLaplacian((total / len(masks)).tocsr(), hidden, len(masks))


class TransverseBasis:
    """Orthonormal basis of the complement of the all-ones vertex direction.

    Built from the Householder reflector that swaps ``e/sqrt(n)`` with the
    first unit vector, so ``W`` is never needed explicitly for large ``n``.
    """

    def __init__(self, n):
        if n < 2:
            raise ValueError("need at least two vertices")
        self.n = n
        w = np.full(n, 1.0 / np.sqrt(n))
        w[0] -= 1.0
        self._w = w
        self._wn = w @ w

    def _reflect(self, X):
        X = np.asarray(X, dtype=float)
        return X - np.multiply.outer(self._w, (self._w @ X) * (2.0 / self._wn))

    def matrix(self):
        return self._reflect(np.eye(self.n))[:, 1:]

    def project(self, X):
        """Transverse coordinates ``zeta = (W kron I)^T x`` for ``X`` of shape ``(n, 2)``."""
        return self._reflect(X)[1:]

    def lift(self, Y):
        Y = np.asarray(Y, dtype=float)
        full = np.concatenate([np.zeros((1,) + Y.shape[1:]), Y])
        return self._reflect(full)

    def along(self, X):
        """Synchronous component: the vertex mean of ``X``."""
        return np.asarray(X, dtype=float).mean(axis=0)


class DriveResponseBasis:
    """Coordinates transverse to the drive = response manifold.

    ``zeta = (x_response - x_drive)/sqrt(2)``; the difference dynamics close
    on themselves, so this is the error dynamics of the observer.
    """

    def __init__(self, n_cells):
        self.n = 2 * n_cells
        self.n_cells = n_cells

    def project(self, X):
        X = np.asarray(X, dtype=float)
        return (X[self.n_cells:] - X[:self.n_cells]) / np.sqrt(2.0)

    def lift(self, Y):
        Y = np.asarray(Y, dtype=float) / np.sqrt(2.0)
        return np.concatenate([-Y, Y])

    def along(self, X):
        X = np.asarray(X, dtype=float)
        return (X[self.n_cells:] + X[:self.n_cells]) / 2.0


def _propagate(op, x, dt, method):
    if method == "euler":
        return x + dt * op.apply(x)
    k1 = op.apply(x)
    k2 = op.apply(x + 0.5 * dt * k1)
    k3 = op.apply(x + 0.5 * dt * k2)
    k4 = op.apply(x + dt * k3)
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def transverse_stability(op_builder, trajectory, W, horizon, dt, renorm_every=10,
                         method="euler", seed=0, discard=0):
    """Leading growth rate of transverse perturbations along a trajectory.

    ``op_builder(state, i)`` returns the linearized operator at step ``i``;
    it is held fixed over each step.  The transverse vector is re-projected
    after every step and renormalized every ``renorm_every`` steps.  The
    first ``discard`` steps are used only to align the perturbation.

    ``method="euler"`` propagates with ``I + dt*A``, the exact tangent map of
    the forward-Euler lattice, and is the right choice along simulated
    trajectories.  ``"rk4"`` integrates the frozen linear ODE accurately and
    suits smooth or constant operators.
    """
    if horizon < 100:
        raise ValueError(f"horizon of {horizon} steps is too short (need >= 100)")
    trajectory = list(trajectory)
    if len(trajectory) < horizon + discard:
        raise ValueError("trajectory is shorter than the requested horizon")
    rng = np.random.default_rng(seed)
    y = W.project(rng.standard_normal((W.n, 2)))
    y /= np.linalg.norm(y)
    log_growth = 0.0
    for i in range(discard + horizon):
        op = op_builder(trajectory[i], i)
        y = W.project(_propagate(op, W.lift(y), dt, method))
        if (i + 1) % renorm_every == 0 or i + 1 == discard + horizon:
            norm = np.linalg.norm(y)
            if norm == 0 or not np.isfinite(norm):
                return -np.inf if norm == 0 else np.inf
            if i >= discard:
                log_growth += np.log(norm)
            y /= norm
    return log_growth / (horizon * dt)


def network_rhs(U, k, m, h, L1, L2, coupling):
    """Nonlinear network vector field for the stacked drive/response state."""
    dP, dZ = reaction_terms(U[:, 0], U[:, 1], k, m, h)
    out = np.column_stack([dP, dZ])
    out -= coupling.sigma1 * (L1 @ U) @ coupling.B1.T
    out += coupling.sigma2 * (L2 @ U) @ coupling.B2.T
    return out


def verify_network_equivalence(grid, params=None, steps=100, kappa=2.6, mask=None, seed=0):
    """Max abs difference between network stepping and field stepping.

    Both paths start from the same random drive and response states (well
    inside the clamp range) and take ``steps`` forward-Euler steps of the
    drive plus the switched synchronizing response.
    """
    params = params or DriveParams()
    rng = np.random.default_rng(seed)
    P = rng.uniform(0.1, 0.6, grid.shape)
    Z = rng.uniform(0.2, 0.6, grid.shape)
    Ph = rng.uniform(0.1, 0.6, grid.shape)
    Zh = rng.uniform(0.2, 0.6, grid.shape)
    k, m = params.fields(grid)
    hidden = as_mask(mask, grid.shape)

    from .ecology import DriveState

    drive = DriveState(P.copy(), Z.copy())
    resp = ObserverState(Ph.copy(), Zh.copy(), k, m)
    cfg = ObserverConfig(kappa=kappa, variant="occluded-sync", h=params.h)

    coupling = CouplingMatrices.for_grid(grid, kappa)
    L1, L2 = build_L1(grid), build_L2(hidden)
    U = np.column_stack([np.concatenate([P, Ph], axis=None), np.concatenate([Z, Zh], axis=None)])
    kk, mm = np.concatenate([k.ravel(), k.ravel()]), np.concatenate([m.ravel(), m.ravel()])

    for _ in range(steps):
        resp = response_step_occluded(resp, drive.P, hidden, cfg, grid)
        drive = drive_step(drive, params, grid)
        U = U + grid.dt * network_rhs(U, kk, mm, params.h, L1, L2, coupling)

    n = grid.size
    ref = np.column_stack([np.concatenate([drive.P, resp.Phat], axis=None),
                           np.concatenate([drive.Z, resp.Zhat], axis=None)])
    return float(np.max(np.abs(U - ref))) if n else 0.0


def drive_trajectory(state, params, grid, steps):
    """``steps + 1`` consecutive drive states starting at ``state``."""
    traj = [state]
    for _ in range(steps):
        traj.append(drive_step(traj[-1], params, grid))
    return traj


def switching_exponent(grid, params, trajectory, kappa, masks=None, horizon=None,
                       basis="drive-response", mode="analytic", averaged=False, discard=0, seed=0):
    """Transverse exponent of the drive/response network along ``trajectory``.

    ``masks`` is a per-step sequence of cloud masks (``None``: always
    visible).  With ``averaged=True`` the switching Laplacian is replaced by
    its sample mean, the averaged system of the switching-rate argument.
    """
    horizon = horizon or len(trajectory) - 1 - discard
    if masks is not None:
        masks = [as_mask(m) for m in masks]
    L1 = build_L1(grid)
    coupling = CouplingMatrices.for_grid(grid, kappa)
    if masks is None:
        L2_of = lambda i: L2_static
        L2_static = build_L2(np.zeros(grid.shape, dtype=bool))
    elif averaged:
        L2_static = expected_laplacian(masks).L
        L2_of = lambda i: L2_static
    else:
        cache = {}

        def L2_of(i):
            key = masks[i].tobytes()
            if key not in cache:
                cache.clear()
                cache[key] = build_L2(masks[i])
            return cache[key]

    W = DriveResponseBasis(grid.size) if basis == "drive-response" else TransverseBasis(2 * grid.size)
    builder = lambda st, i: assemble_linearized(st, L1, L2_of(i), coupling, params, mode)
    return transverse_stability(builder, trajectory, W, horizon, grid.dt, method="euler",
                                discard=discard, seed=seed)

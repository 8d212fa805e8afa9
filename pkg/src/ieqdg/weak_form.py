"""Assembly of the mass matrix, the DG bilinear form A = A0 + Ab, boundary loads
and the nonlinear block-diagonal matrices.

Matrix convention: ``A[j, l] = A(v_l, v_j)`` (trial in the first slot), so
``A @ u`` tests ``A(u_h, .)`` and ``A.T @ q`` tests ``A(., q_h)``.
"""
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp

from .errors import ConfigError
from .field import DGField, DGSpace
from .mesh import PERIODIC
from .potential import PotentialSpec

PERIODIC_BC = "periodic"
CLAMPED = "clamped"                  # (i)   u = g1, d_nu u = g2
SIMPLY_SUPPORTED = "simply_supported"  # (ii) u = g1, Lap u = g3
GEN_NEUMANN = "gen_neumann"          # (iii) d_nu u = g2, d_nu Lap u = g4

PENALTY_LENGTHS = ("cell", "center")

_ALIASES = {
    "periodic": PERIODIC_BC, "i": CLAMPED, "clamped": CLAMPED,
    "ii": SIMPLY_SUPPORTED, "simply_supported": SIMPLY_SUPPORTED,
    "iii": GEN_NEUMANN, "gen_neumann": GEN_NEUMANN, "neumann": GEN_NEUMANN,
}


@dataclass(frozen=True)
class BCSpec:
    """Boundary family, flux parameters and (optional) boundary data.

    Data callables take ``(*coords, t, normal)`` with ``normal`` the outward
    unit normal as a tuple; ``None`` means zero data.
    """
    family: str = PERIODIC_BC
    beta0: Optional[float] = None
    beta1: Optional[float] = None
    g1: Optional[Callable] = None
    g2: Optional[Callable] = None
    g3: Optional[Callable] = None
    g4: Optional[Callable] = None
    # length h in the beta/h penalties: full cell extent normal to the face
    # ("cell") or the distance from cell center to the boundary ("center")
    penalty_length: str = "cell"

    def __post_init__(self):
        if self.penalty_length not in PENALTY_LENGTHS:
            raise ConfigError(f"penalty_length must be one of {PENALTY_LENGTHS}, "
                              f"got {self.penalty_length!r}")
        fam = _ALIASES.get(str(self.family).lower())
        if fam is None:
            raise ConfigError(f"unknown boundary family {self.family!r}")
        object.__setattr__(self, "family", fam)
        if self.beta1 is not None and self.beta1 < 0:
            raise ConfigError(f"beta1 must be >= 0, got {self.beta1}")
        needed = {PERIODIC_BC: (), CLAMPED: ("g1", "g2"),
                  SIMPLY_SUPPORTED: ("g1", "g3"), GEN_NEUMANN: ("g2", "g4")}[fam]
        stray = [n for n in ("g1", "g2", "g3", "g4")
                 if getattr(self, n) is not None and n not in needed]
        if stray:
            raise ConfigError(f"boundary data {stray} not used by family {fam}")

    @property
    def homogeneous(self):
        return all(getattr(self, n) is None for n in ("g1", "g2", "g3", "g4"))

    def resolved(self, degree):
        """Fill default flux parameters for polynomial degree ``degree``."""
        b0, b1 = self.beta0, self.beta1
        if self.family == SIMPLY_SUPPORTED and b0 is None:
            b0 = 3.0 if degree <= 1 else 0.0
        if self.family == CLAMPED and b1 is None:
            b1 = 1.0
        return replace(self, beta0=0.0 if b0 is None else float(b0),
                       beta1=0.0 if b1 is None else float(b1))

    @property
    def alpha(self):
        return float(self.beta1 or 0.0) if self.family == CLAMPED else 0.0


@dataclass(frozen=True)
class ModelSpec:
    potential: PotentialSpec
    a: float = 2.0
    source: Optional[Callable] = None     # f(*coords, t)


@dataclass(frozen=True)
class BilinearOperator:
    A: sp.csr_matrix
    B: sp.csr_matrix        # boundary mass with 1/h_b weight (zero unless clamped)
    M: sp.csr_matrix
    M_diag: np.ndarray
    alpha: float
    bc: BCSpec
    a: float


def block_matrix(space, row_cells, col_cells, blocks):
    """Global sparse matrix from per-cell-pair ``(N, N)`` blocks (summed on overlap)."""
    N = space.N
    row_cells = np.asarray(row_cells, dtype=int)
    col_cells = np.asarray(col_cells, dtype=int)
    rows = (row_cells[:, None, None] * N + np.arange(N)[None, :, None])
    cols = (col_cells[:, None, None] * N + np.arange(N)[None, None, :])
    rows, cols = np.broadcast_arrays(rows, cols)
    mat = sp.coo_matrix((np.asarray(blocks).ravel(), (rows.ravel(), cols.ravel())),
                        shape=(space.ndofs, space.ndofs))
    mat = mat.tocsr()
    mat.sum_duplicates()
    return mat


def block_diagonal(space, blocks):
    nc, N = space.mesh.ncells, space.N
    return sp.bsr_matrix((np.asarray(blocks, dtype=float), np.arange(nc), np.arange(nc + 1)),
                         shape=(nc * N, nc * N)).tocsr()


def weighted_mass_blocks(space: DGSpace, weights):
    """Blocks ``jac * sum_p w_p c_p v_j v_l`` for nodal weights ``(ncells, Q)``."""
    V = space.V
    return space.jac * np.einsum("jp,cp,lp->cjl", V, np.asarray(weights) * space.vol_w, V,
                                 optimize=True)


def weighted_mass_apply(space: DGSpace, weights, vec):
    """Action of the weighted mass matrix on a coefficient vector without forming it."""
    nodal = vec.reshape(space.mesh.ncells, space.N) @ space.V
    return space.integrate_against_basis(weights * nodal).ravel()


def assemble_mass(space: DGSpace):
    """Block-diagonal (and diagonal, by orthogonality) mass matrix."""
    diag = np.tile(space.jac * space.ref_mass, space.mesh.ncells)
    return sp.diags(diag).tocsr(), diag


def _face_block_tables(space, axis):
    """Traces and normal derivatives of K1 (side +1) and K2 (side -1) on an axis face."""
    T1 = space.trace[axis, 1][0]
    T2 = space.trace[axis, -1][0]
    D1 = space.normal_derivative_table(axis, 1)
    D2 = space.normal_derivative_table(axis, -1)
    return T1, D1, T2, D2


def assemble_A(space: DGSpace, bc: BCSpec, a: float) -> BilinearOperator:
    """Assemble A = A0 + Ab for the given boundary family.

    Interior faces use central fluxes with no penalty.  Periodic wrap faces
    are stored once as interior faces, which is the same as summing the
    boundary contributions with weight 1/2 over both copies.
    """
    mesh = space.mesh
    bc = bc.resolved(space.basis.degree)
    if (bc.family == PERIODIC_BC) != (mesh.boundary == PERIODIC):
        raise ConfigError(f"boundary family {bc.family!r} does not match a "
                          f"{mesh.boundary!r} mesh")
    M, M_diag = assemble_mass(space)
    N, V, w = space.N, space.V, space.vol_w

    # volume part: grad.grad - (a/2) mass, identical on every cell of a uniform mesh
    K = np.zeros((N, N))
    for ax in range(space.dim):
        Dp = space.D[ax] / space.half_h[ax]
        K += space.jac * (Dp * w) @ Dp.T
    K -= 0.5 * a * space.jac * (V * w) @ V.T
    rows = [np.arange(mesh.ncells)]
    cols = [np.arange(mesh.ncells)]
    blocks = [np.broadcast_to(K, (mesh.ncells, N, N))]

    # interior faces: {d_nu w}[v] + [w]{d_nu v} with block(test t, trial s)
    for axis in range(space.dim):
        faces = mesh.interior_faces[mesh.face_axis[mesh.interior_faces] == axis]
        if len(faces) == 0:
            continue
        T1, D1, T2, D2 = _face_block_tables(space, axis)
        wf = space.face_w * space.face_jac(axis)
        T = {1: T1, 2: T2}
        D = {1: D1, 2: D2}
        sig = {1: -1.0, 2: 1.0}
        cells = {1: mesh.face_c1[faces], 2: mesh.face_c2[faces]}
        for t in (1, 2):
            for s in (1, 2):
                blk = 0.5 * (sig[t] * (T[t] * wf) @ D[s].T + sig[s] * (D[t] * wf) @ T[s].T)
                rows.append(cells[t])
                cols.append(cells[s])
                blocks.append(np.broadcast_to(blk, (len(faces), N, N)))

    # boundary faces
    B_rows, B_blocks = [], []
    if bc.family != PERIODIC_BC:
        for f_axis, f_side, faces in _boundary_groups(mesh):
            T = space.trace[f_axis, f_side][0]
            Dn = f_side * space.normal_derivative_table(f_axis, f_side)
            wf = space.face_w * space.face_jac(f_axis)
            hb = penalty_h(bc, mesh, f_axis)
            c = mesh.face_c1[faces]
            if bc.family == CLAMPED:
                # Ab(v_l, v_j) = -int v_l d_nu v_j
                blk = -(Dn * wf) @ T.T
                B_rows.append(c)
                B_blocks.append(np.broadcast_to((T * wf) @ T.T / hb, (len(faces), N, N)))
            elif bc.family == SIMPLY_SUPPORTED:
                blk = (bc.beta0 / hb) * (T * wf) @ T.T - (Dn * wf) @ T.T - (T * wf) @ Dn.T
            else:
                continue
            rows.append(c)
            cols.append(c)
            blocks.append(np.broadcast_to(blk, (len(faces), N, N)))

    A = block_matrix(space, np.concatenate(rows), np.concatenate(cols),
                     np.concatenate([np.asarray(b) for b in blocks]))
    if B_rows:
        r = np.concatenate(B_rows)
        B = block_matrix(space, r, r, np.concatenate([np.asarray(b) for b in B_blocks]))
    else:
        B = sp.csr_matrix((space.ndofs, space.ndofs))
    return BilinearOperator(A, B, M, M_diag, bc.alpha, bc, float(a))


def penalty_h(bc: BCSpec, mesh, axis):
    """The h of beta/h and alpha/h on boundary faces normal to ``axis``."""
    half = 0.5 * mesh.h[axis]       # boundary_distance on a uniform box mesh
    return 2.0 * half if bc.penalty_length == "cell" else half


def _boundary_groups(mesh):
    """Boundary faces grouped by (axis, outward side)."""
    out = []
    for axis in range(mesh.dim):
        for side in (-1, 1):
            faces = mesh.boundary_faces[(mesh.face_axis[mesh.boundary_faces] == axis)
                                        & (mesh.face_side[mesh.boundary_faces] == side)]
            if len(faces):
                out.append((axis, side, faces))
    return out


def assemble_boundary_load(bc: BCSpec, space: DGSpace, t: float, a: float):
    """Load vectors (L1, L2) of the non-homogeneous boundary terms at time ``t``."""
    mesh = space.mesh
    bc = bc.resolved(space.basis.degree)
    if bc.family == PERIODIC_BC:
        raise ConfigError("periodic boundaries carry no boundary loads")
    L1 = np.zeros((mesh.ncells, space.N))
    L2 = np.zeros((mesh.ncells, space.N))
    if bc.homogeneous:
        return L1.ravel(), L2.ravel()

    for axis, side, faces in _boundary_groups(mesh):
        T = space.trace[axis, side][0]
        Dn = side * space.normal_derivative_table(axis, side)
        wf = space.face_w * space.face_jac(axis)
        hb = penalty_h(bc, mesh, axis)
        X = space.face_nodes(faces)
        coords = tuple(X[..., d] for d in range(mesh.dim))
        normal = tuple(float(side) if d == axis else 0.0 for d in range(mesh.dim))

        def data(name):
            g = getattr(bc, name)
            if g is None:
                return np.zeros(coords[0].shape)
            return np.broadcast_to(np.asarray(g(*coords, t, normal), dtype=float),
                                   coords[0].shape)

        if bc.family == CLAMPED:
            g1, g2 = data("g1"), data("g2")
            l1 = (bc.beta1 / hb) * (g1 * wf) @ T.T
            l2 = (g1 * wf) @ Dn.T - (g2 * wf) @ T.T
        elif bc.family == SIMPLY_SUPPORTED:
            g1, g3 = data("g1"), data("g3")
            s = g3 + 0.5 * a * g1
            l1 = (s * wf) @ Dn.T - (bc.beta0 / hb) * (s * wf) @ T.T
            l2 = -(g1 * wf) @ Dn.T - (bc.beta0 / hb) * (g1 * wf) @ T.T
        else:
            g2, g4 = data("g2"), data("g4")
            l1 = -((g4 + 0.5 * a * g2) * wf) @ T.T
            l2 = -(g2 * wf) @ T.T
        c = mesh.face_c1[faces]
        np.add.at(L1, c, l1)
        np.add.at(L2, c, l2)
    return L1.ravel(), L2.ravel()


def assemble_nonlinear_matrices(u_ref: DGField, potential: PotentialSpec):
    """(I, J) with nodal weights H(u_ref)^2 and H(u_ref)."""
    space = u_ref.space
    Hn = potential.H(u_ref.nodal())
    I = block_diagonal(space, weighted_mass_blocks(space, Hn ** 2))
    J = block_diagonal(space, weighted_mass_blocks(space, Hn))
    return I, J
